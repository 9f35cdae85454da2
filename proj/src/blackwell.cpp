#include "learnq/blackwell.hpp"

#include "learnq/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace learnq {

PayoffTensor::PayoffTensor(Eigen::Index players, Eigen::Index adversaries,
                           const std::vector<Eigen::VectorXd>& entries, std::optional<double> r_max)
    : players_(players), adversaries_(adversaries) {
  if (players < 1 || adversaries < 1) throw std::invalid_argument("PayoffTensor: empty action set");
  if (static_cast<Eigen::Index>(entries.size()) != players * adversaries) {
    throw DimensionMismatch("PayoffTensor: expected p*q entries");
  }
  const Eigen::Index n = entries.front().size();
  if (n < 1) throw std::invalid_argument("PayoffTensor: zero payoff dimension");
  data_.resize(n, players * adversaries);
  double largest = 0.0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    require_dim(entries[k].size(), n, "PayoffTensor");
    if (!entries[k].allFinite()) throw std::invalid_argument("PayoffTensor: non-finite entry");
    data_.col(static_cast<Eigen::Index>(k)) = entries[k];
    largest = std::max(largest, entries[k].norm());
  }
  if (r_max) {
    if (*r_max < largest * (1.0 - 1e-12)) {
      throw std::invalid_argument("PayoffTensor: r_max below max ||R_ij|| = " + std::to_string(largest));
    }
    r_max_ = *r_max;
  } else {
    r_max_ = largest;
  }
}

PayoffTensor PayoffTensor::from_scalar(const Eigen::MatrixXd& m) {
  std::vector<Eigen::VectorXd> entries;
  entries.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) entries.push_back(Eigen::VectorXd::Constant(1, m(i, j)));
  return PayoffTensor(m.rows(), m.cols(), entries);
}

Eigen::MatrixXd PayoffTensor::contract(const Eigen::VectorXd& normal) const {
  require_dim(normal.size(), dim(), "PayoffTensor::contract");
  const Eigen::RowVectorXd flat = normal.transpose() * data_;
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), players_, adversaries_);
}

MixedAction MixedAction::pure(Eigen::Index size, Eigen::Index index) {
  if (index < 0 || index >= size) throw std::out_of_range("MixedAction::pure: index out of range");
  MixedAction a{Eigen::VectorXd::Zero(size)};
  a.weights(index) = 1.0;
  return a;
}

MixedAction MixedAction::uniform(Eigen::Index size) {
  if (size < 1) throw std::invalid_argument("MixedAction::uniform: empty");
  return MixedAction{Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(size))};
}

MixedAction MixedAction::from_weights(Eigen::VectorXd weights) {
  if (weights.size() == 0 || !weights.allFinite() || (weights.array() < 0.0).any()) {
    throw std::invalid_argument("MixedAction: weights must be finite and nonnegative");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw std::invalid_argument("MixedAction: weights must sum to 1");
  return MixedAction{std::move(weights)};
}

Eigen::VectorXd payoff(const PayoffTensor& r, const MixedAction& d, const MixedAction& a) {
  require_dim(d.weights.size(), r.player_actions(), "payoff (player)");
  require_dim(a.weights.size(), r.adversary_actions(), "payoff (adversary)");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(r.dim());
  for (Eigen::Index i = 0; i < r.player_actions(); ++i) {
    if (d.weights(i) == 0.0) continue;
    for (Eigen::Index j = 0; j < r.adversary_actions(); ++j) {
      if (a.weights(j) == 0.0) continue;
      out += (d.weights(i) * a.weights(j)) * r.entry(i, j);
    }
  }
  return out;
}

GameState GameState::start(const Eigen::VectorXd& q0, double r_max) {
  if (q0.norm() > r_max * (1.0 + 1e-12)) {
    throw std::invalid_argument("GameState: ||Q(0)|| exceeds r_max");
  }
  return GameState{0, q0, q0, q0};
}

GameState update_average(const GameState& s, const Eigen::VectorXd& r) {
  require_dim(r.size(), s.sum.size(), "update_average");
  GameState next = s;
  next.t = s.t + 1;
  next.sum = s.sum + r;
  next.qbar = next.sum / static_cast<double>(next.t);
  return next;
}

namespace {

double approach_tolerance(const Eigen::VectorXd& normal, double r_max) {
  return 1e-8 * std::max(1.0, normal.norm() * r_max);
}

}  // namespace

MixedAction blackwell_decision(const PayoffTensor& r, const GameState& s, const TargetSetd& z) {
  require_dim(s.qbar.size(), r.dim(), "blackwell_decision");
  const auto h = supporting_halfspace(s.qbar, z);
  if (!h) return MixedAction::pure(r.player_actions(), 0);
  const auto sol = solve_matrix_game(r.contract(h->normal));
  if (sol.value > h->offset + approach_tolerance(h->normal, r.r_max())) {
    throw NotApproachable("half-space not approachable: game value " + std::to_string(sol.value) +
                          " exceeds offset " + std::to_string(h->offset));
  }
  return MixedAction{sol.row_strategy};
}

bool check_halfspace_approachable(const PayoffTensor& r, const Hyperplane<double>& h) {
  const auto sol = solve_matrix_game(r.contract(h.normal));
  return sol.value <= h.offset + 1e-8;
}

PlayerRule blackwell_rule() {
  return [](const PayoffTensor& r, const GameHistory& h, const TargetSetd& z) {
    return blackwell_decision(r, h.state, z);
  };
}

GameRun run_game(const PayoffTensor& r, const TargetSetd& z, const PlayerRule& player,
                 const AdversaryRule& adversary, long rounds, std::uint64_t seed,
                 const Eigen::VectorXd& q0) {
  if (rounds < 1) throw std::invalid_argument("run_game: rounds must be >= 1");
  require_dim(z.dim(), r.dim(), "run_game");
  Rng player_rng(derive_seed(seed, 0));
  Rng adversary_rng(derive_seed(seed, 1));

  GameRun run;
  run.history.state = GameState::start(q0, r.r_max());
  run.distance.reserve(static_cast<std::size_t>(rounds));
  run.history.player_actions.reserve(static_cast<std::size_t>(rounds));
  run.history.adversary_actions.reserve(static_cast<std::size_t>(rounds));
  for (long t = 0; t < rounds; ++t) {
    const MixedAction d = player(r, run.history, z);
    const MixedAction a = adversary(run.history, adversary_rng);
    const Eigen::Index i = sample_index(d.weights, player_rng);
    const Eigen::Index j = sample_index(a.weights, adversary_rng);
    run.history.state = update_average(run.history.state, r.entry(i, j));
    run.history.player_actions.push_back(i);
    run.history.adversary_actions.push_back(j);
    run.distance.push_back(project(run.history.state.qbar, z).distance);
  }
  return run;
}

DistanceEstimate aggregate_distances(const std::vector<std::vector<double>>& distances, double r_max) {
  DistanceEstimate est;
  est.replications = static_cast<long>(distances.size());
  if (distances.empty()) return est;
  const std::size_t rounds = distances.front().size();
  est.rms_distance.assign(rounds, 0.0);
  est.bound.resize(rounds);
  for (const auto& run : distances) {
    if (run.size() != rounds) throw DimensionMismatch("aggregate_distances: ragged runs");
    for (std::size_t t = 0; t < rounds; ++t) est.rms_distance[t] += run[t] * run[t];
  }
  for (std::size_t t = 0; t < rounds; ++t) {
    est.rms_distance[t] = std::sqrt(est.rms_distance[t] / static_cast<double>(distances.size()));
    est.bound[t] = blackwell_bound(r_max, static_cast<long>(t + 1));
  }
  return est;
}

DistanceEstimate estimate_distance(const PayoffTensor& r, const TargetSetd& z, const PlayerRule& player,
                                   const AdversaryRule& adversary, long rounds, long replications,
                                   std::uint64_t seed) {
  if (replications < 1) throw std::invalid_argument("estimate_distance: replications must be >= 1");
  std::vector<std::vector<double>> runs(static_cast<std::size_t>(replications));
  const Eigen::VectorXd q0 = Eigen::VectorXd::Zero(r.dim());
  parallel_for(replications, [&](long k) {
    runs[static_cast<std::size_t>(k)] =
        run_game(r, z, player, adversary, rounds, derive_seed(seed, static_cast<std::uint64_t>(k)), q0).distance;
  });
  return aggregate_distances(runs, r.r_max());
}

}  // namespace learnq
