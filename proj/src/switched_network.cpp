#include "learnq/switched_network.hpp"

#include "learnq/matrix_game.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace learnq::switching {

namespace {

bool lex_less(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

struct LexLess {
  bool operator()(const Eigen::VectorXi& a, const Eigen::VectorXi& b) const { return lex_less(a, b); }
};

void validate_queue(const Eigen::VectorXi& queue, const ScheduleSet& s) {
  require_dim(queue.size(), s.queues(), "queue state");
  if ((queue.array() < 0).any()) throw std::invalid_argument("queue lengths must be nonnegative");
}

// Schedules are sorted lexicographically, so strict improvement keeps the
// smallest maximiser.
template <typename Weight>
const Schedule& argmax_feasible(const Eigen::VectorXi& queue, const ScheduleSet& s, Weight&& weight) {
  validate_queue(queue, s);
  Eigen::Index best = 0;
  double best_w = weight(s[0]);
  for (Eigen::Index k = 1; k < s.size(); ++k) {
    const Schedule& sigma = s[k];
    if ((sigma.array() > queue.array()).any()) continue;
    const double w = weight(sigma);
    if (w > best_w) {
      best_w = w;
      best = k;
    }
  }
  return s[best];
}

Eigen::MatrixXd margin_game(const Eigen::VectorXd& abar, const ScheduleSet& s) {
  require_dim(abar.size(), s.queues(), "interior_margin");
  return s.as_matrix().colwise() - abar;
}

}  // namespace

bool ScheduleSet::contains(const Schedule& sigma) const {
  if (sigma.size() != q_) return false;
  return std::binary_search(schedules_.begin(), schedules_.end(), sigma, LexLess{});
}

ScheduleSet monotone_closure(const std::vector<Schedule>& raw) {
  if (raw.empty()) throw std::invalid_argument("monotone_closure: empty schedule set");
  const Eigen::Index q = raw.front().size();
  if (q < 1) throw std::invalid_argument("monotone_closure: zero-dimensional schedules");
  std::set<Schedule, LexLess> closed;
  for (const auto& v : raw) {
    require_dim(v.size(), q, "monotone_closure");
    if ((v.array() < 0).any()) throw std::invalid_argument("monotone_closure: negative schedule entry");
    // Odometer over the box [0, v].
    Schedule cur = Schedule::Zero(q);
    while (true) {
      closed.insert(cur);
      Eigen::Index j = 0;
      while (j < q && cur(j) == v(j)) cur(j++) = 0;
      if (j == q) break;
      ++cur(j);
    }
  }
  ScheduleSet s;
  s.q_ = q;
  s.schedules_.assign(closed.begin(), closed.end());
  s.matrix_.resize(q, static_cast<Eigen::Index>(s.schedules_.size()));
  Eigen::VectorXi served = Eigen::VectorXi::Zero(q);
  for (std::size_t k = 0; k < s.schedules_.size(); ++k) {
    s.matrix_.col(static_cast<Eigen::Index>(k)) = s.schedules_[k].cast<double>();
    served = served.cwiseMax(s.schedules_[k]);
  }
  s.d_max_ = served.maxCoeff();
  if ((served.array() < 1).any()) throw std::invalid_argument("monotone_closure: some queue is never served");
  return s;
}

ScheduleSet exclusive(Eigen::Index q) {
  std::vector<Schedule> raw;
  for (Eigen::Index j = 0; j < q; ++j) raw.push_back(Schedule::Unit(q, j));
  return monotone_closure(raw);
}

ScheduleSet read_schedule_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open schedule file: " + path);
  std::vector<Schedule> raw;
  std::string line;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<int> v;
    for (int x; ls >> x;) v.push_back(x);
    if (!ls.eof()) throw std::invalid_argument("schedule file: non-integer entry in " + path);
    if (!v.empty()) raw.push_back(Eigen::Map<Schedule>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  return monotone_closure(raw);
}

double interior_margin(const Eigen::VectorXd& abar, const ScheduleSet& s) {
  if ((abar.array() < 0.0).any()) throw std::invalid_argument("interior_margin: negative arrival rate");
  return solve_matrix_game(margin_game(abar, s)).value;
}

Separation transience_check(const Eigen::VectorXd& abar, const ScheduleSet& s) {
  if ((abar.array() < 0.0).any()) throw std::invalid_argument("transience_check: negative arrival rate");
  const auto sol = solve_matrix_game(margin_game(abar, s));
  if (sol.value >= 0.0) {
    throw NotSupercritical("arrival rate lies in the schedule hull (margin " + std::to_string(sol.value) + ")");
  }
  const double scale = sol.row_strategy.maxCoeff();
  Separation sep;
  sep.normal = sol.row_strategy / scale;
  sep.eps_hat = -(sep.normal.transpose() * margin_game(abar, s)).maxCoeff();
  return sep;
}

const Schedule& maxweight(const Eigen::VectorXi& queue, const ScheduleSet& s) {
  // Integer weights are exact in double up to 2^53.
  const Eigen::VectorXd w = queue.cast<double>();
  return argmax_feasible(queue, s, [&](const Schedule& sigma) { return w.dot(sigma.cast<double>()); });
}

const Schedule& weighted_maxweight(const Eigen::VectorXi& queue, const ScheduleSet& s, const Eigen::VectorXd& mu) {
  require_dim(mu.size(), s.queues(), "weighted_maxweight");
  if ((mu.array() <= 0.0).any()) throw std::invalid_argument("service rates must be positive");
  const Eigen::VectorXd w = mu.cwiseProduct(queue.cast<double>());
  return argmax_feasible(queue, s, [&](const Schedule& sigma) { return w.dot(sigma.cast<double>()); });
}

const Schedule& f_maxweight(const Eigen::VectorXi& queue, const ScheduleSet& s, const std::function<double(int)>& f) {
  validate_queue(queue, s);
  Eigen::VectorXd w(queue.size());
  for (Eigen::Index j = 0; j < queue.size(); ++j) w(j) = f(queue(j));
  return argmax_feasible(queue, s, [&](const Schedule& sigma) { return w.dot(sigma.cast<double>()); });
}

Eigen::VectorXi step(const Eigen::VectorXi& queue, const Eigen::VectorXi& arrivals, const Schedule& sigma) {
  require_dim(arrivals.size(), queue.size(), "step (arrivals)");
  require_dim(sigma.size(), queue.size(), "step (schedule)");
  return queue + arrivals - sigma.cwiseMin(queue);
}

namespace {

IidArrivals validated(IidArrivals m) {
  if (m.support.empty()) throw std::invalid_argument("arrival distribution: empty support");
  require_dim(m.probs.size(), static_cast<Eigen::Index>(m.support.size()), "arrival distribution");
  if (!m.probs.allFinite() || (m.probs.array() < 0.0).any() || std::abs(m.probs.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("arrival distribution: probabilities must be nonnegative and sum to 1");
  }
  for (const auto& v : m.support) {
    require_dim(v.size(), m.support.front().size(), "arrival distribution");
    if ((v.array() < 0).any()) throw std::invalid_argument("arrival distribution: negative arrivals");
  }
  return m;
}

Eigen::VectorXd iid_mean(const IidArrivals& m) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.support.front().size());
  for (std::size_t k = 0; k < m.support.size(); ++k) out += m.probs(static_cast<Eigen::Index>(k)) * m.support[k].cast<double>();
  return out;
}

int max_entry(const std::vector<Eigen::VectorXi>& vs) {
  int m = 0;
  for (const auto& v : vs) m = std::max(m, v.maxCoeff());
  return m;
}

const IidArrivals& phase_at(const TimeVaryingArrivals& m, long t) {
  const auto it = std::upper_bound(m.starts.begin(), m.starts.end(), t);
  return m.phases[static_cast<std::size_t>(std::distance(m.starts.begin(), it) - 1)];
}

}  // namespace

ArrivalModel ArrivalModel::iid(std::vector<Eigen::VectorXi> support, Eigen::VectorXd probs) {
  ArrivalModel a;
  IidArrivals m = validated(IidArrivals{std::move(support), std::move(probs)});
  a.q_ = m.support.front().size();
  a.a_max_ = max_entry(m.support);
  a.model_ = std::move(m);
  return a;
}

ArrivalModel ArrivalModel::bernoulli(const Eigen::VectorXd& rates) {
  const Eigen::Index q = rates.size();
  if (q < 1 || q > 20) throw std::invalid_argument("bernoulli arrivals: need 1..20 queues");
  if ((rates.array() < 0.0).any() || (rates.array() > 1.0).any()) {
    throw std::invalid_argument("bernoulli arrivals: rates must lie in [0, 1]");
  }
  std::vector<Eigen::VectorXi> support;
  std::vector<double> probs;
  for (long mask = 0; mask < (1L << q); ++mask) {
    Eigen::VectorXi v(q);
    double pr = 1.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      v(j) = static_cast<int>((mask >> j) & 1);
      pr *= v(j) ? rates(j) : 1.0 - rates(j);
    }
    support.push_back(v);
    probs.push_back(pr);
  }
  return iid(std::move(support), Eigen::Map<Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size())));
}

ArrivalModel ArrivalModel::sequence(std::vector<Eigen::VectorXi> vectors) {
  if (vectors.empty()) throw std::invalid_argument("arrival sequence: empty");
  for (const auto& v : vectors) {
    require_dim(v.size(), vectors.front().size(), "arrival sequence");
    if ((v.array() < 0).any()) throw std::invalid_argument("arrival sequence: negative arrivals");
  }
  ArrivalModel a;
  a.q_ = vectors.front().size();
  a.a_max_ = max_entry(vectors);
  a.model_ = ArrivalSequence{std::move(vectors)};
  return a;
}

ArrivalModel ArrivalModel::time_varying(std::vector<long> starts, std::vector<IidArrivals> phases) {
  if (phases.empty() || starts.size() != phases.size() || starts.front() != 0 ||
      !std::is_sorted(starts.begin(), starts.end(), std::less_equal<long>{}) ||
      std::adjacent_find(starts.begin(), starts.end()) != starts.end()) {
    throw std::invalid_argument("time-varying arrivals: starts must begin at 0 and increase strictly");
  }
  ArrivalModel a;
  a.a_max_ = 0;
  for (auto& ph : phases) {
    ph = validated(std::move(ph));
    require_dim(ph.support.front().size(), phases.front().support.front().size(), "time-varying arrivals");
    a.a_max_ = std::max(a.a_max_, max_entry(ph.support));
  }
  a.q_ = phases.front().support.front().size();
  a.model_ = TimeVaryingArrivals{std::move(starts), std::move(phases)};
  return a;
}

Eigen::VectorXi ArrivalModel::sample(long t, Rng& rng) const {
  return std::visit(
      [&](const auto& m) -> Eigen::VectorXi {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, IidArrivals>) {
          return m.support[static_cast<std::size_t>(sample_index(m.probs, rng))];
        } else if constexpr (std::is_same_v<M, ArrivalSequence>) {
          return m.vectors[static_cast<std::size_t>((t - 1) % static_cast<long>(m.vectors.size()))];
        } else {
          const auto& ph = phase_at(m, t);
          return ph.support[static_cast<std::size_t>(sample_index(ph.probs, rng))];
        }
      },
      model_);
}

Eigen::VectorXd ArrivalModel::mean(long t) const {
  return std::visit(
      [&](const auto& m) -> Eigen::VectorXd {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, IidArrivals>) {
          return iid_mean(m);
        } else if constexpr (std::is_same_v<M, ArrivalSequence>) {
          return m.vectors[static_cast<std::size_t>((t - 1) % static_cast<long>(m.vectors.size()))].template cast<double>();
        } else {
          return iid_mean(phase_at(m, t));
        }
      },
      model_);
}

PolicyKind parse_policy(const std::string& name) {
  if (name == "mw") return PolicyKind::MaxWeight;
  if (name == "wmw") return PolicyKind::WeightedMaxWeight;
  if (name == "fmw-square") return PolicyKind::FSquare;
  if (name == "fmw-log") return PolicyKind::FLog;
  if (name == "random") return PolicyKind::Random;
  throw std::invalid_argument("unknown policy: " + name);
}

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::MaxWeight: return "mw";
    case PolicyKind::WeightedMaxWeight: return "wmw";
    case PolicyKind::FSquare: return "fmw-square";
    case PolicyKind::FLog: return "fmw-log";
    case PolicyKind::Random: return "random";
  }
  return "?";
}

SwitchTrace simulate(const ScheduleSet& s, const ArrivalModel& arrivals, const Policy& policy, long horizon,
                     std::uint64_t seed, bool record) {
  if (horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");
  require_dim(arrivals.queues(), s.queues(), "simulate");
  const Eigen::Index q = s.queues();
  const bool thinned = policy.mu.size() > 0;
  if (thinned) {
    require_dim(policy.mu.size(), q, "simulate (service rates)");
    if ((policy.mu.array() <= 0.0).any() || (policy.mu.array() > 1.0).any()) {
      throw std::invalid_argument("service rates must lie in (0, 1]");
    }
  }
  const Eigen::VectorXd mu = thinned ? policy.mu : Eigen::VectorXd::Ones(q);

  Rng arrival_rng(derive_seed(seed, 0));
  Rng policy_rng(derive_seed(seed, 1));
  Rng service_rng(derive_seed(seed, 2));
  std::uniform_int_distribution<Eigen::Index> pick(0, s.size() - 1);

  SwitchTrace tr;
  tr.horizon = horizon;
  Eigen::VectorXi queue = Eigen::VectorXi::Zero(q);
  if (record) {
    tr.queue.reserve(static_cast<std::size_t>(horizon + 1));
    tr.queue.push_back(queue);
  }
  double total_sum = 0.0, inc_sum = 0.0, cross_sum = 0.0, c_sum = 0.0;
  for (long t = 1; t <= horizon; ++t) {
    const Schedule* sigma = nullptr;
    switch (policy.kind) {
      case PolicyKind::MaxWeight: sigma = &maxweight(queue, s); break;
      case PolicyKind::WeightedMaxWeight: sigma = &weighted_maxweight(queue, s, mu); break;
      case PolicyKind::FSquare:
        sigma = &f_maxweight(queue, s, [](int x) { return static_cast<double>(x) * x; });
        break;
      case PolicyKind::FLog: sigma = &f_maxweight(queue, s, [](int x) { return std::log1p(x); }); break;
      case PolicyKind::Random: sigma = &s[pick(policy_rng)]; break;
    }
    const Eigen::VectorXi a = arrivals.sample(t, arrival_rng);
    Eigen::VectorXi d = sigma->cwiseMin(queue);
    if (thinned) {
      for (Eigen::Index j = 0; j < q; ++j) {
        if (d(j) > 0) d(j) = std::binomial_distribution<int>(d(j), mu(j))(service_rng);
      }
    }
    const Eigen::VectorXi next = queue + a - d;
    const Eigen::VectorXd delta = (a - d).cast<double>();
    const Eigen::VectorXd qd = queue.cast<double>();
    total_sum += qd.sum();
    inc_sum += next.cast<double>().squaredNorm() - qd.squaredNorm();
    cross_sum += qd.dot(delta);
    c_sum += delta.squaredNorm();
    queue = next;
    if (record) tr.queue.push_back(queue);
  }
  const double n = static_cast<double>(horizon);
  tr.final_queue = queue;
  tr.time_avg_total = total_sum / n;
  tr.mean_sq_increment = inc_sum / n;
  tr.mean_cross = cross_sum / n;
  tr.c_estimate = c_sum / n;
  return tr;
}

double drift_bound(double c, double eps_hat) {
  if (eps_hat <= 0.0) return std::numeric_limits<double>::infinity();
  return c / (2.0 * eps_hat);
}

Embedding embed_as_game(const ScheduleSet& s, int a_max) {
  if (a_max < 0) throw std::invalid_argument("embed_as_game: a_max must be nonnegative");
  const Eigen::Index q = s.queues();
  const Eigen::Index m = s.size();
  std::vector<Eigen::VectorXd> entries;
  entries.reserve(static_cast<std::size_t>(m * m));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) entries.push_back((s[j] - s[i]).cast<double>());
  const double r_max = std::sqrt(static_cast<double>(q)) * std::max(a_max, s.d_max());
  Embedding e{PayoffTensor(m, m, entries, r_max), TargetSetd::singleton(Eigen::VectorXd::Zero(q)), {}};
  for (Eigen::Index k = 0; k < q; ++k) {
    Eigen::MatrixXd rk = Eigen::MatrixXd::Zero(2 * q, 2 * q);
    rk(k, k) = 1.0;
    rk(q + k, q + k) = -1.0;
    e.lifted.push_back(std::move(rk));
  }
  return e;
}

Eigen::VectorXd lifted_payoff(const Embedding& e, const Eigen::VectorXi& d, const Eigen::VectorXi& a) {
  const Eigen::Index q = static_cast<Eigen::Index>(e.lifted.size());
  require_dim(d.size(), q, "lifted_payoff (decision)");
  require_dim(a.size(), q, "lifted_payoff (arrivals)");
  Eigen::VectorXd dl(2 * q), al(2 * q);
  dl << Eigen::VectorXd::Ones(q), d.cast<double>();
  al << a.cast<double>(), Eigen::VectorXd::Ones(q);
  Eigen::VectorXd out(q);
  for (Eigen::Index k = 0; k < q; ++k) out(k) = dl.dot(e.lifted[static_cast<std::size_t>(k)] * al);
  return out;
}

AdversaryRule embedded_adversary(const ScheduleSet& s, const Eigen::VectorXd& weights) {
  const MixedAction a = MixedAction::from_weights(weights);
  require_dim(a.weights.size(), s.size(), "embedded_adversary");
  return [a](const GameHistory&, Rng&) { return a; };
}

EquivalenceReport verify_equivalence(const ScheduleSet& s, const std::vector<Eigen::VectorXi>& states) {
  const Embedding e = embed_as_game(s, s.d_max());
  EquivalenceReport rep;
  for (const auto& queue : states) {
    validate_queue(queue, s);
    GameState st = GameState::start(Eigen::VectorXd::Zero(s.queues()), e.tensor.r_max());
    st.t = 1;
    st.qbar = queue.cast<double>();
    st.sum = st.qbar;
    const MixedAction d = blackwell_decision(e.tensor, st, e.target);
    long best = 0;
    for (Eigen::Index k = 0; k < s.size(); ++k) best = std::max<long>(best, queue.dot(s[k]));
    bool ok = true;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (d.weights(i) > 1e-9 && queue.dot(s[i]) != best) ok = false;
    }
    ++rep.states;
    if (ok) ++rep.agreements;
  }
  return rep;
}

}  // namespace learnq::switching
