#include "learnq/admission.hpp"

#include "learnq/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace learnq::admission {

void AdmissionConfig::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
  if (!(L >= 0.0)) throw std::invalid_argument("lookahead window must be >= 0");
  if (!(horizon >= 0.0) || std::isinf(horizon)) throw std::invalid_argument("horizon must be finite and >= 0");
  if (!(slack >= 0.0)) throw std::invalid_argument("slack must be >= 0");
  if (!(budget_grace >= 0.0)) throw std::invalid_argument("budget_grace must be >= 0");
}

namespace {

std::vector<double> poisson_epochs(double rate, double horizon, Rng& rng) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(rate * horizon * 1.01 + 16));
  double t = exponential(rng, rate);
  while (t < horizon) {
    out.push_back(t);
    t += exponential(rng, rate);
  }
  return out;
}

struct Merged {
  std::vector<double> time;
  std::vector<char> arrival;  // 1 for an arrival, 0 for a token
  std::vector<long> walk;     // S after each event: +1 per arrival, -1 per token
};

Merged merge(const EventStream& s) {
  Merged m;
  const std::size_t n = s.arrivals.size() + s.tokens.size();
  m.time.reserve(n);
  m.arrival.reserve(n);
  m.walk.reserve(n);
  std::size_t i = 0, j = 0;
  long level = 0;
  while (i < s.arrivals.size() || j < s.tokens.size()) {
    // Ties (probability zero) resolve arrival first.
    const bool take_arrival = j >= s.tokens.size() || (i < s.arrivals.size() && s.arrivals[i] <= s.tokens[j]);
    if (take_arrival) {
      m.time.push_back(s.arrivals[i++]);
      m.arrival.push_back(1);
      ++level;
    } else {
      m.time.push_back(s.tokens[j++]);
      m.arrival.push_back(0);
      --level;
    }
    m.walk.push_back(level);
  }
  return m;
}

constexpr long kNoFuture = std::numeric_limits<long>::max();

// Runs the queue; `reject(i, t, q, diverted)` decides each arrival.
template <typename Reject>
SimTrace run_queue(const AdmissionConfig& cfg, const Merged& m, Reject&& reject, std::vector<long>* path = nullptr) {
  SimTrace tr;
  const double half = cfg.horizon / 2.0;
  double area = 0.0;
  double last = 0.0;
  long q = 0;
  auto accumulate = [&](double until) {
    const double from = std::max(last, half);
    if (until > from) area += static_cast<double>(q) * (until - from);
    last = until;
  };
  if (path) path->reserve(m.time.size());
  for (std::size_t i = 0; i < m.time.size(); ++i) {
    const double t = m.time[i];
    accumulate(t);
    if (m.arrival[i]) {
      ++tr.arrivals;
      if (reject(i, t, q, tr.diverted)) {
        ++tr.diverted;
        if (q > 0) ++tr.rejected_nonempty;
      } else {
        ++q;
      }
    } else if (q > 0) {
      --q;
    } else {
      ++tr.tokens_at_empty;
    }
    if (path) path->push_back(q);
  }
  accumulate(cfg.horizon);
  tr.final_queue = q;
  tr.mean_queue = cfg.horizon > 0.0 ? area / (cfg.horizon - half) : 0.0;
  tr.diversion_rate = cfg.horizon > 0.0 ? static_cast<double>(tr.diverted) / cfg.horizon : 0.0;
  tr.budget_ok = tr.diversion_rate <= cfg.p;
  return tr;
}

// future_min[i] = min_{j > i} walk[j], kNoFuture past the last event.
std::vector<long> suffix_minimum(const Merged& m) {
  std::vector<long> out(m.walk.size(), kNoFuture);
  for (std::size_t i = m.walk.size(); i-- > 1;) out[i - 1] = std::min(m.walk[i], out[i]);
  return out;
}

SimTrace greedy_impl(const AdmissionConfig& cfg, const Merged& m, std::vector<long>* path) {
  const std::vector<long> future = suffix_minimum(m);
  return run_queue(
      cfg, m, [&](std::size_t i, double, long q, long) { return q == 0 && future[i] >= m.walk[i]; }, path);
}

}  // namespace

EventStream gen_streams(const AdmissionConfig& cfg) {
  cfg.validate();
  Rng arrivals(derive_seed(cfg.seed, 0));
  Rng tokens(derive_seed(cfg.seed, 1));
  return EventStream{poisson_epochs(cfg.lambda, cfg.horizon, arrivals), poisson_epochs(1.0 - cfg.p, cfg.horizon, tokens)};
}

SimTrace threshold_run(const AdmissionConfig& cfg, long k) { return threshold_run(cfg, gen_streams(cfg), k); }

SimTrace threshold_run(const AdmissionConfig& cfg, const EventStream& s, long k) {
  cfg.validate();
  if (k < 0) throw std::invalid_argument("threshold must be >= 0");
  const Merged m = merge(s);
  return run_queue(cfg, m, [k](std::size_t, double, long q, long) { return q >= k; });
}

std::vector<double> birth_death_stationary(double lambda, double p, long k) {
  if (!(lambda > 0.0) || !(p > 0.0 && p < 1.0) || k < 0) throw std::invalid_argument("birth_death_stationary: bad parameters");
  if (k > 100'000'000) throw std::invalid_argument("birth_death_stationary: threshold too large");
  const double rho = lambda / (1.0 - p);
  std::vector<double> pi(static_cast<std::size_t>(k + 1));
  // Normalise against the largest term to avoid overflow when rho > 1.
  const double log_rho = std::log(rho);
  const double top = rho > 1.0 ? static_cast<double>(k) * log_rho : 0.0;
  double total = 0.0;
  for (long i = 0; i <= k; ++i) {
    pi[static_cast<std::size_t>(i)] = std::exp(static_cast<double>(i) * log_rho - top);
    total += pi[static_cast<std::size_t>(i)];
  }
  for (auto& v : pi) v /= total;
  return pi;
}

double birth_death_mean(double lambda, double p, long k) {
  const auto pi = birth_death_stationary(lambda, p, k);
  double mean = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) mean += static_cast<double>(i) * pi[i];
  return mean;
}

double birth_death_diversion(double lambda, double p, long k) {
  return lambda * birth_death_stationary(lambda, p, k).back();
}

long min_feasible_threshold(double lambda, double p) {
  if (!(lambda > 0.0 && lambda < 1.0) || !(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("min_feasible_threshold: need lambda, p in (0, 1)");
  }
  // pi_k via the recursion 1/pi_k = sum_{i<=k} rho^{i-k}, so no overflow.
  const double rho = lambda / (1.0 - p);
  double inv = 1.0;  // 1 / pi_0 for the chain on {0}
  for (long k = 0; k <= 10'000'000; ++k) {
    if (k > 0) inv = inv / rho + 1.0;
    if (lambda / inv <= p) return k;
  }
  throw std::runtime_error("min_feasible_threshold: no feasible threshold up to 1e7 (lambda = " +
                           std::to_string(lambda) + ", p = " + std::to_string(p) + ")");
}

SimTrace greedy_empty_run(const AdmissionConfig& cfg) { return greedy_empty_run(cfg, gen_streams(cfg)); }

SimTrace greedy_empty_run(const AdmissionConfig& cfg, const EventStream& s) {
  cfg.validate();
  return greedy_impl(cfg, merge(s), nullptr);
}

std::vector<long> greedy_empty_path(const EventStream& s) {
  AdmissionConfig cfg;
  cfg.horizon = s.arrivals.empty() && s.tokens.empty()
                    ? 0.0
                    : std::max(s.arrivals.empty() ? 0.0 : s.arrivals.back(), s.tokens.empty() ? 0.0 : s.tokens.back());
  std::vector<long> path;
  greedy_impl(cfg, merge(s), &path);
  return path;
}

std::vector<long> no_job_left_behind_oracle(const EventStream& s) {
  const Merged m = merge(s);
  // Reflect the walk at zero first (the queue if nothing were diverted);
  // tokens that find it empty are lost and must not count as service.
  std::vector<long> y(m.walk.size());
  long running_min = 0;
  for (std::size_t i = 0; i < m.walk.size(); ++i) {
    running_min = std::min(running_min, m.walk[i]);
    y[i] = m.walk[i] - running_min;
  }
  std::vector<long> q(y.size());
  long future_min = std::numeric_limits<long>::max();
  for (std::size_t i = y.size(); i-- > 0;) {
    future_min = std::min(future_min, y[i]);
    q[i] = y[i] - future_min;
  }
  return q;
}

SimTrace windowed_run(const AdmissionConfig& cfg) { return windowed_run(cfg, gen_streams(cfg)); }

SimTrace windowed_run(const AdmissionConfig& cfg, const EventStream& s) {
  cfg.validate();
  const Merged m = merge(s);
  const double budget = cfg.p * (1.0 + cfg.slack);
  // Token bucket: without the initial credit, early denials admit jobs that
  // are never served and the queue carries them for the rest of the run.
  const double grace = cfg.budget_grace;
  auto within_budget = [budget, grace](double t, long diverted) {
    return static_cast<double>(diverted + 1) <= budget * (t + grace);
  };
  if (std::isinf(cfg.L)) {
    const std::vector<long> future = suffix_minimum(m);
    return run_queue(cfg, m, [&](std::size_t i, double t, long, long diverted) {
      return future[i] >= m.walk[i] && within_budget(t, diverted);
    });
  }
  // Sliding minimum of the walk over events j in (i, e] with time_j < time_i + L.
  // An empty window carries no evidence of service, so the rule falls back to
  // the budget alone. The queue length is not consulted: on the greedy path
  // the condition only holds at an empty queue, and off it (after a budget
  // denial) this lets the policy catch up instead of never seeing q == 0.
  std::deque<std::size_t> window;
  std::size_t end = 0;  // one past the last index pushed
  auto window_min = [&](std::size_t i) {
    while (end < m.time.size() && m.time[end] < m.time[i] + cfg.L) {
      while (!window.empty() && m.walk[window.back()] >= m.walk[end]) window.pop_back();
      window.push_back(end++);
    }
    while (!window.empty() && window.front() <= i) window.pop_front();
    return window.empty() ? kNoFuture : m.walk[window.front()];
  };
  return run_queue(cfg, m, [&](std::size_t i, double t, long, long diverted) {
    const long wmin = window_min(i);
    return wmin >= m.walk[i] && within_budget(t, diverted);
  });
}

Policy parse_policy(const std::string& name) {
  if (name == "threshold") return Policy::Threshold;
  if (name == "greedy-empty") return Policy::GreedyEmpty;
  if (name == "windowed") return Policy::Windowed;
  throw std::invalid_argument("unknown admission policy: " + name);
}

std::string policy_name(Policy p) {
  switch (p) {
    case Policy::Threshold: return "threshold";
    case Policy::GreedyEmpty: return "greedy-empty";
    case Policy::Windowed: return "windowed";
  }
  return "?";
}

LogFit fit_log(const std::vector<double>& lambda_tilde, const std::vector<double>& y) {
  if (lambda_tilde.size() != y.size() || y.size() < 2) throw std::invalid_argument("fit_log: need >= 2 paired points");
  const std::size_t n = y.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lambda_tilde[i] < 1.0)) throw std::invalid_argument("fit_log: load must be < 1");
    x[i] = std::log(1.0 / (1.0 - lambda_tilde[i]));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_log: loads must differ");
  LogFit f;
  f.c2 = sxy / sxx;
  f.c1 = my - f.c2 * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

Sweep heavy_traffic_sweep(const SweepConfig& cfg) {
  if (cfg.replications < 1) throw std::invalid_argument("heavy_traffic_sweep: replications must be >= 1");
  Sweep out;
  for (const double lt : cfg.lambda_tilde) {
    for (const Policy pol : cfg.policies) {
      SweepRow row;
      row.lambda_tilde = lt;
      row.lambda = lambda_from_tilde(lt, cfg.p);
      row.policy = pol;
      row.threshold = min_feasible_threshold(row.lambda, cfg.p);
      row.window = pol == Policy::Windowed ? cfg.window_scale * std::log(1.0 / (1.0 - lt)) : 0.0;
      out.rows.push_back(row);
    }
  }
  const long per_row = cfg.replications;
  const long jobs = static_cast<long>(out.rows.size()) * per_row;
  std::vector<SimTrace> results(static_cast<std::size_t>(jobs));
  parallel_for(jobs, [&](long job) {
    const SweepRow& row = out.rows[static_cast<std::size_t>(job / per_row)];
    AdmissionConfig c;
    c.lambda = row.lambda;
    c.p = cfg.p;
    c.L = row.window;
    c.horizon = cfg.horizon;
    c.slack = cfg.slack;
    c.budget_grace = cfg.budget_grace;
    // Common random numbers: replication r uses the same streams for every policy at a load.
    const std::size_t load = static_cast<std::size_t>(job / per_row) / cfg.policies.size();
    c.seed = derive_seed(derive_seed(cfg.seed, load), static_cast<std::uint64_t>(job % per_row));
    const EventStream s = gen_streams(c);
    SimTrace tr;
    switch (row.policy) {
      case Policy::Threshold: tr = threshold_run(c, s, row.threshold); break;
      case Policy::GreedyEmpty: tr = greedy_empty_run(c, s); break;
      case Policy::Windowed: tr = windowed_run(c, s); break;
    }
    results[static_cast<std::size_t>(job)] = tr;
  });
  for (long job = 0; job < jobs; ++job) {
    SweepRow& row = out.rows[static_cast<std::size_t>(job / per_row)];
    row.mean_queue.push_back(results[static_cast<std::size_t>(job)].mean_queue);
    row.diversion_rate.push_back(results[static_cast<std::size_t>(job)].diversion_rate);
  }
  std::vector<double> xs, ys;
  for (const auto& row : out.rows) {
    if (row.policy != Policy::Threshold) continue;
    double mean = 0.0;
    for (const double v : row.mean_queue) mean += v;
    xs.push_back(row.lambda_tilde);
    ys.push_back(mean / static_cast<double>(row.mean_queue.size()));
  }
  if (xs.size() >= 2) out.threshold_fit = fit_log(xs, ys);
  return out;
}

}  // namespace learnq::admission
