#pragma once

#include <Eigen/Core>

namespace learnq {

/// Solution of a finite two-person zero-sum game where the row player picks
/// `row_strategy` to minimise d' M a and the column player maximises it.
struct MatrixGameSolution {
  Eigen::VectorXd row_strategy;
  Eigen::VectorXd column_strategy;
  double value = 0.0;
  /// max_j (d'M)_j - min_i (M a)_i, evaluated over all pure deviations.
  double gap = 0.0;
};

/// Exact solution through the linear-programming formulation, solved by a
/// dense tableau simplex with Bland's pivoting rule. Throws on non-finite input.
MatrixGameSolution solve_matrix_game(const Eigen::MatrixXd& m);

/// Brown-Robinson fictitious play for `iterations` rounds. Returns empirical
/// frequencies and the midpoint of the certified value interval.
MatrixGameSolution fictitious_play(const Eigen::MatrixXd& m, long iterations);

/// Best pure-response gap of a strategy pair; zero exactly at a saddle point.
double duality_gap(const Eigen::MatrixXd& m, const Eigen::VectorXd& row, const Eigen::VectorXd& column);

}  // namespace learnq
