#include "learnq/regret.hpp"

#include <stdexcept>

namespace learnq {

ScalarGame::ScalarGame(Eigen::MatrixXd r) : reward(std::move(r)) {
  if (reward.size() == 0) throw std::invalid_argument("ScalarGame: empty reward matrix");
  if (!reward.allFinite()) throw std::invalid_argument("ScalarGame: non-finite reward");
}

PayoffTensor hg_payoff_tensor(const ScalarGame& g) {
  const Eigen::Index p = g.player_actions();
  const Eigen::Index q = g.adversary_actions();
  std::vector<Eigen::VectorXd> entries;
  entries.reserve(static_cast<std::size_t>(p * q));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) {
      entries.push_back(g.reward.col(j) - Eigen::VectorXd::Constant(p, g.reward(i, j)));
    }
  }
  return PayoffTensor(p, q, entries);
}

TargetSetd hg_target(const ScalarGame& g) { return TargetSetd::nonpositive_orthant(g.player_actions()); }

std::vector<std::string> adversary_names() {
  return {"constant", "cyclic", "best-response", "random", "counter-last"};
}

ScriptedAdversary make_adversary(const std::string& name, Eigen::Index column) {
  if (name == "constant") {
    return [column](const AdversaryView& v, Rng&) {
      if (column < 0 || column >= v.game.adversary_actions()) throw std::out_of_range("constant adversary column");
      return column;
    };
  }
  if (name == "cyclic") {
    return [](const AdversaryView& v, Rng&) { return static_cast<Eigen::Index>(v.round() % v.game.adversary_actions()); };
  }
  if (name == "best-response") {
    // Minimises the player's reward against its empirical action frequencies.
    return [](const AdversaryView& v, Rng&) {
      Eigen::VectorXd freq = Eigen::VectorXd::Constant(v.game.player_actions(), 1.0);
      for (const auto i : v.player_actions) freq(i) += 1.0;
      Eigen::Index j = 0;
      (freq.transpose() * v.game.reward).minCoeff(&j);
      return j;
    };
  }
  if (name == "random") {
    return [](const AdversaryView& v, Rng& rng) {
      return static_cast<Eigen::Index>(
          std::uniform_int_distribution<Eigen::Index>(0, v.game.adversary_actions() - 1)(rng));
    };
  }
  if (name == "counter-last") {
    return [](const AdversaryView& v, Rng&) {
      if (v.player_actions.empty()) return Eigen::Index{0};
      Eigen::Index j = 0;
      v.game.reward.row(v.player_actions.back()).minCoeff(&j);
      return j;
    };
  }
  throw std::invalid_argument("unknown adversary: " + name);
}

RegretTrace hg_play(const ScalarGame& g, const ScriptedAdversary& adversary, long rounds, std::uint64_t seed) {
  if (rounds < 1) throw std::invalid_argument("hg_play: rounds must be >= 1");
  const PayoffTensor tensor = hg_payoff_tensor(g);
  const TargetSetd target = hg_target(g);
  Rng player_rng(derive_seed(seed, 0));
  Rng adversary_rng(derive_seed(seed, 1));

  RegretTrace trace;
  trace.r_max = tensor.r_max();
  trace.state = GameState::start(Eigen::VectorXd::Zero(g.player_actions()), tensor.r_max());
  trace.fixed_action_reward = Eigen::VectorXd::Zero(g.player_actions());
  const auto n = static_cast<std::size_t>(rounds);
  trace.player_actions.reserve(n);
  trace.adversary_actions.reserve(n);
  trace.realized_reward.reserve(n);
  trace.expected_reward.reserve(n);

  for (long t = 0; t < rounds; ++t) {
    const MixedAction d = blackwell_decision(tensor, trace.state, target);
    const Eigen::Index j = adversary(AdversaryView{g, trace.player_actions, trace.adversary_actions}, adversary_rng);
    if (j < 0 || j >= g.adversary_actions()) throw std::out_of_range("adversary returned an invalid column");
    const Eigen::Index i = sample_index(d.weights, player_rng);

    trace.state = update_average(trace.state, tensor.entry(i, j));
    trace.player_actions.push_back(i);
    trace.adversary_actions.push_back(j);
    trace.realized_reward.push_back(g.reward(i, j));
    trace.expected_reward.push_back(d.weights.dot(g.reward.col(j)));
    trace.fixed_action_reward += g.reward.col(j);
  }
  return trace;
}

namespace {

double regret_against(const RegretTrace& trace, const std::vector<double>& rewards) {
  if (rewards.empty()) throw std::invalid_argument("regret: empty trace");
  double total = 0.0;
  for (const double r : rewards) total += r;
  return trace.fixed_action_reward.maxCoeff() - total;
}

}  // namespace

double regret(const RegretTrace& trace) { return regret_against(trace, trace.realized_reward); }

double expected_regret(const RegretTrace& trace) { return regret_against(trace, trace.expected_reward); }

}  // namespace learnq
