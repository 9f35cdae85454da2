#pragma once

// Hannan-consistent play through the approachability reduction: the vector
// payoff has one regret coordinate per fixed action, and the target is the
// nonpositive orthant.

#include "learnq/blackwell.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace learnq {

/// Rewards r(i, j) for player action i against adversary action j (maximised).
struct ScalarGame {
  Eigen::MatrixXd reward;

  explicit ScalarGame(Eigen::MatrixXd r);
  Eigen::Index player_actions() const { return reward.rows(); }
  Eigen::Index adversary_actions() const { return reward.cols(); }
};

/// R(i, j)_k = r(k, j) - r(i, j): how much better fixed action k would have done.
PayoffTensor hg_payoff_tensor(const ScalarGame& g);
TargetSetd hg_target(const ScalarGame& g);

/// What an adversary may look at before committing in round t: realised
/// actions of earlier rounds only.
struct AdversaryView {
  const ScalarGame& game;
  std::span<const Eigen::Index> player_actions;
  std::span<const Eigen::Index> adversary_actions;
  long round() const { return static_cast<long>(adversary_actions.size()); }
};

/// Must be a pure function of the view and the stream (shared across replications).
using ScriptedAdversary = std::function<Eigen::Index(const AdversaryView&, Rng&)>;

/// "constant" (column 0 or `column`), "cyclic", "best-response" (to the
/// player's empirical frequencies), "random", "counter-last" (worst column for
/// the player's last action).
ScriptedAdversary make_adversary(const std::string& name, Eigen::Index column = 0);
std::vector<std::string> adversary_names();

struct RegretTrace {
  std::vector<Eigen::Index> player_actions;
  std::vector<Eigen::Index> adversary_actions;
  std::vector<double> realized_reward;  // r(i_t, j_t)
  std::vector<double> expected_reward;  // r(d_t, j_t) under the played mixture
  Eigen::VectorXd fixed_action_reward;  // sum_t r(i, j_t) for every i
  GameState state;                      // average vector payoff Qbar(T)
  double r_max = 0.0;
};

RegretTrace hg_play(const ScalarGame& g, const ScriptedAdversary& adversary, long rounds, std::uint64_t seed);

/// Realised regret: max_i sum_t r(i, j_t) - sum_t r(i_t, j_t). Throws on an empty trace.
double regret(const RegretTrace& trace);
/// Same benchmark against the mixture-expected rewards.
double expected_regret(const RegretTrace& trace);

}  // namespace learnq
