#pragma once

// Vector-valued repeated game and Blackwell's approachability strategy.

#include "learnq/convex_geometry.hpp"
#include "learnq/matrix_game.hpp"
#include "learnq/random.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace learnq {

/// Raised when the minimax value of the projected game exceeds the half-space offset.
class NotApproachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bilinear vector payoff: R(d, a) = sum_ij d_i a_j R_ij with R_ij in R^n.
class PayoffTensor {
 public:
  /// `entries` is row-major in (player, adversary): entries[i * q + j] = R_ij.
  /// When `r_max` is omitted the tightest bound max ||R_ij|| is used.
  PayoffTensor(Eigen::Index players, Eigen::Index adversaries, const std::vector<Eigen::VectorXd>& entries,
               std::optional<double> r_max = std::nullopt);

  /// One-dimensional tensor R_ij = m(i, j).
  static PayoffTensor from_scalar(const Eigen::MatrixXd& m);

  Eigen::Index player_actions() const { return players_; }
  Eigen::Index adversary_actions() const { return adversaries_; }
  Eigen::Index dim() const { return data_.rows(); }
  double r_max() const { return r_max_; }

  auto entry(Eigen::Index i, Eigen::Index j) const { return data_.col(i * adversaries_ + j); }

  /// M_ij = normal . R_ij
  Eigen::MatrixXd contract(const Eigen::VectorXd& normal) const;

 private:
  Eigen::Index players_;
  Eigen::Index adversaries_;
  Eigen::MatrixXd data_;  // n x (p q)
  double r_max_;
};

/// Probability vector over a finite action set.
struct MixedAction {
  Eigen::VectorXd weights;

  static MixedAction pure(Eigen::Index size, Eigen::Index index);
  static MixedAction uniform(Eigen::Index size);
  /// Validates nonnegativity and unit mass (1e-12).
  static MixedAction from_weights(Eigen::VectorXd weights);
};

Eigen::VectorXd payoff(const PayoffTensor& r, const MixedAction& d, const MixedAction& a);

/// Running average payoff Qbar(t) = (Q(0) + sum of payoffs) / t, with Qbar(0) = Q(0).
struct GameState {
  long t = 0;
  Eigen::VectorXd qbar;
  Eigen::VectorXd q0;
  Eigen::VectorXd sum;  // Q(0) + sum of payoffs

  /// Rejects ||q0|| > r_max.
  static GameState start(const Eigen::VectorXd& q0, double r_max);
};

GameState update_average(const GameState& s, const Eigen::VectorXd& r);

/// Blackwell's choice: the minimising mixture of the game M_ij = n . R_ij for
/// the supporting half-space at qbar. Pure action 0 when qbar lies in the set.
MixedAction blackwell_decision(const PayoffTensor& r, const GameState& s, const TargetSetd& z);

/// True iff min_d max_a n . R(d, a) <= offset (within 1e-8).
bool check_halfspace_approachable(const PayoffTensor& r, const Hyperplane<double>& h);

struct GameHistory {
  GameState state;
  std::vector<Eigen::Index> player_actions;
  std::vector<Eigen::Index> adversary_actions;
};

/// Rules see the history up to the previous round. Adversary rules may draw
/// from the supplied stream; both mixtures are fixed before either is sampled.
using PlayerRule = std::function<MixedAction(const PayoffTensor&, const GameHistory&, const TargetSetd&)>;
using AdversaryRule = std::function<MixedAction(const GameHistory&, Rng&)>;

PlayerRule blackwell_rule();

struct GameRun {
  /// distance[t-1] = ||Qbar(t) - P(t)|| after round t.
  std::vector<double> distance;
  GameHistory history;
};

GameRun run_game(const PayoffTensor& r, const TargetSetd& z, const PlayerRule& player,
                 const AdversaryRule& adversary, long rounds, std::uint64_t seed,
                 const Eigen::VectorXd& q0);

/// Monte-Carlo estimate of sqrt(E ||Qbar(t) - P(t)||^2) and the bound r_max sqrt(2/t).
struct DistanceEstimate {
  std::vector<double> rms_distance;
  std::vector<double> bound;
  long replications = 0;
};

/// Mean of squared per-round distances over runs, then the square root.
DistanceEstimate aggregate_distances(const std::vector<std::vector<double>>& distances, double r_max);

DistanceEstimate estimate_distance(const PayoffTensor& r, const TargetSetd& z, const PlayerRule& player,
                                   const AdversaryRule& adversary, long rounds, long replications,
                                   std::uint64_t seed);

inline double blackwell_bound(double r_max, long t) { return r_max * std::sqrt(2.0 / static_cast<double>(t)); }

}  // namespace learnq
