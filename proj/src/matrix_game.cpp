#include "learnq/matrix_game.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace learnq {
namespace {

constexpr double kPivotEps = 1e-12;

void require_finite(const Eigen::MatrixXd& m, const char* where) {
  if (m.size() == 0) throw std::invalid_argument(std::string(where) + ": empty matrix");
  if (!m.allFinite()) throw std::invalid_argument(std::string(where) + ": non-finite entry");
}

Eigen::VectorXd clean_distribution(Eigen::VectorXd v) {
  v = v.cwiseMax(0.0);
  const double s = v.sum();
  if (s <= 0.0) throw std::runtime_error("solve_matrix_game: degenerate strategy");
  return v / s;
}

}  // namespace

double duality_gap(const Eigen::MatrixXd& m, const Eigen::VectorXd& row, const Eigen::VectorXd& column) {
  const double upper = (row.transpose() * m).maxCoeff();
  const double lower = (m * column).minCoeff();
  return upper - lower;
}

// Shifting M to B = M - min(M) + 1 > 0 makes the value positive. With x = d / v
// the row player's problem becomes  max 1'x  s.t. B'x <= 1, x >= 0,  whose dual
// gives the column player's strategy. The origin is feasible, so no phase one.
MatrixGameSolution solve_matrix_game(const Eigen::MatrixXd& m) {
  require_finite(m, "solve_matrix_game");
  const Eigen::Index p = m.rows();
  const Eigen::Index q = m.cols();
  const double shift = 1.0 - m.minCoeff();

  // Rows 0..q-1 are constraints, row q is the objective. Columns: p decision
  // variables, q slacks, right-hand side.
  Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(q + 1, p + q + 1);
  tab.topLeftCorner(q, p) = (m.array() + shift).matrix().transpose();
  tab.block(0, p, q, q).setIdentity();
  tab.col(p + q).head(q).setOnes();
  tab.row(q).head(p).setConstant(-1.0);

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(q));
  for (Eigen::Index r = 0; r < q; ++r) basis[static_cast<std::size_t>(r)] = p + r;

  const long max_iter = 50 * (p + q) + 100;
  long iter = 0;
  for (;; ++iter) {
    if (iter > max_iter) throw std::runtime_error("solve_matrix_game: simplex did not terminate");
    Eigen::Index enter = -1;
    for (Eigen::Index c = 0; c < p + q; ++c) {
      if (tab(q, c) < -kPivotEps) {
        enter = c;
        break;
      }
    }
    if (enter < 0) break;

    Eigen::Index leave = -1;
    double best_ratio = 0.0;
    for (Eigen::Index r = 0; r < q; ++r) {
      const double a = tab(r, enter);
      if (a <= kPivotEps) continue;
      const double ratio = tab(r, p + q) / a;
      if (leave < 0 || ratio < best_ratio - kPivotEps ||
          (ratio <= best_ratio + kPivotEps &&
           basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
        leave = r;
        best_ratio = ratio;
      }
    }
    // B > 0 keeps the feasible region bounded, so every entering column has a pivot.
    if (leave < 0) throw std::runtime_error("solve_matrix_game: unbounded tableau");

    tab.row(leave) /= tab(leave, enter);
    for (Eigen::Index r = 0; r <= q; ++r) {
      if (r == leave) continue;
      const double f = tab(r, enter);
      if (f != 0.0) tab.row(r) -= f * tab.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
  for (Eigen::Index r = 0; r < q; ++r) {
    const Eigen::Index b = basis[static_cast<std::size_t>(r)];
    if (b < p) x(b) = tab(r, p + q);
  }
  const Eigen::VectorXd y = tab.row(q).segment(p, q).transpose();
  const double total = tab(q, p + q);

  MatrixGameSolution sol;
  sol.row_strategy = clean_distribution(x);
  sol.column_strategy = clean_distribution(y);
  sol.value = 1.0 / total - shift;
  sol.gap = duality_gap(m, sol.row_strategy, sol.column_strategy);
  return sol;
}

MatrixGameSolution fictitious_play(const Eigen::MatrixXd& m, long iterations) {
  require_finite(m, "fictitious_play");
  if (iterations < 1) throw std::invalid_argument("fictitious_play: iterations must be >= 1");
  const Eigen::Index p = m.rows();
  const Eigen::Index q = m.cols();
  Eigen::VectorXd row_counts = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd col_counts = Eigen::VectorXd::Zero(q);
  // Cumulative payoffs against the opponent's history.
  Eigen::VectorXd row_payoff = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd col_payoff = Eigen::VectorXd::Zero(q);
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  for (long t = 0; t < iterations; ++t) {
    row_counts(i) += 1.0;
    col_counts(j) += 1.0;
    row_payoff += m.col(j);
    col_payoff += m.row(i).transpose();
    row_payoff.minCoeff(&i);
    col_payoff.maxCoeff(&j);
  }
  MatrixGameSolution sol;
  sol.row_strategy = row_counts / static_cast<double>(iterations);
  sol.column_strategy = col_counts / static_cast<double>(iterations);
  const double upper = (sol.row_strategy.transpose() * m).maxCoeff();
  const double lower = (m * sol.column_strategy).minCoeff();
  sol.value = 0.5 * (upper + lower);
  sol.gap = upper - lower;
  return sol;
}

}  // namespace learnq
