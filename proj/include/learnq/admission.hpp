#pragma once

// Admission control for a queue fed by Poisson(lambda) arrivals and drained by
// Poisson(1 - p) service tokens, with a long-run diversion budget p.

#include "learnq/random.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace learnq::admission {

inline constexpr double kInfiniteWindow = std::numeric_limits<double>::infinity();
inline constexpr long kNoThreshold = std::numeric_limits<long>::max();

struct AdmissionConfig {
  double lambda = 0.5;
  double p = 0.3;
  double L = 0.0;          // lookahead window; kInfiniteWindow for unbounded
  double horizon = 1e5;    // time units
  double slack = 0.05;     // budget tolerance for the windowed policy
  double budget_grace = 100.0;  // windowed budget starts with p (1 + slack) * grace credit
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument unless 0 < lambda < 1, 0 < p < 1, L >= 0, horizon >= 0.
  void validate() const;
};

/// Admitted-load normalisation: lambda = p + lambda_tilde (1 - p).
inline double lambda_from_tilde(double lambda_tilde, double p) { return p + lambda_tilde * (1.0 - p); }
inline double tilde_from_lambda(double lambda, double p) { return (lambda - p) / (1.0 - p); }

struct EventStream {
  std::vector<double> arrivals;  // strictly increasing epochs in [0, horizon)
  std::vector<double> tokens;
};

EventStream gen_streams(const AdmissionConfig& cfg);

struct SimTrace {
  double mean_queue = 0.0;       // time average of Q over [horizon/2, horizon]
  double diversion_rate = 0.0;   // diverted / horizon
  long arrivals = 0;
  long diverted = 0;
  long rejected_nonempty = 0;    // rejections that saw a nonempty queue
  long tokens_at_empty = 0;
  bool budget_ok = false;        // diversion_rate <= p
  long final_queue = 0;
};

/// Admit iff Q < k at the arrival instant. k = kNoThreshold never diverts.
SimTrace threshold_run(const AdmissionConfig& cfg, long k);
SimTrace threshold_run(const AdmissionConfig& cfg, const EventStream& s, long k);

/// Stationary law of the chain on {0..k} with birth lambda below k and death 1 - p.
std::vector<double> birth_death_stationary(double lambda, double p, long k);
double birth_death_mean(double lambda, double p, long k);
/// lambda * pi_k, the rate of diverted arrivals.
double birth_death_diversion(double lambda, double p, long k);

/// Smallest k with lambda * pi_k <= p.
long min_feasible_threshold(double lambda, double p);

/// Full-horizon lookahead: an arrival is diverted iff it finds the queue empty
/// and would never be served, i.e. the arrival/token walk never drops below
/// its level again before the horizon.
SimTrace greedy_empty_run(const AdmissionConfig& cfg);
SimTrace greedy_empty_run(const AdmissionConfig& cfg, const EventStream& s);

/// Offline oracle for the same policy: Q = Y - (future minimum of Y) where Y
/// is the arrival/token walk reflected at zero. Returns the queue length after each merged event.
std::vector<long> no_job_left_behind_oracle(const EventStream& s);
/// Queue length after each merged event under greedy_empty_run.
std::vector<long> greedy_empty_path(const EventStream& s);

/// Lookahead over [t, t + L): an arrival that the walk inside the window never
/// drops back below (so it is not served there) is diverted while the running diversion
/// rate stays within p (1 + slack); everything else is admitted. With L = inf
/// this is greedy_empty_run plus the budget check.
SimTrace windowed_run(const AdmissionConfig& cfg);
SimTrace windowed_run(const AdmissionConfig& cfg, const EventStream& s);

enum class Policy { Threshold, GreedyEmpty, Windowed };
Policy parse_policy(const std::string& name);
std::string policy_name(Policy p);

struct SweepRow {
  double lambda_tilde = 0.0;
  double lambda = 0.0;
  Policy policy = Policy::Threshold;
  double window = 0.0;
  long threshold = 0;
  std::vector<double> mean_queue;      // per replication
  std::vector<double> diversion_rate;  // per replication
};

struct LogFit {
  double c1 = 0.0;
  double c2 = 0.0;
  double r2 = 0.0;
};

/// Least squares of y on log(1 / (1 - x)).
LogFit fit_log(const std::vector<double>& lambda_tilde, const std::vector<double>& y);

struct SweepConfig {
  double p = 0.3;
  std::vector<double> lambda_tilde{0.9, 0.95, 0.98, 0.99, 0.995};
  std::vector<Policy> policies{Policy::Threshold, Policy::GreedyEmpty};
  double horizon = 1e6;
  long replications = 20;
  double window_scale = 5.0;  // windowed policy uses L = window_scale * log(1 / (1 - lambda_tilde))
  double slack = 0.05;
  double budget_grace = 100.0;
  std::uint64_t seed = 1;
};

struct Sweep {
  std::vector<SweepRow> rows;
  LogFit threshold_fit;  // over per-row replication means; zero when threshold is absent
};

Sweep heavy_traffic_sweep(const SweepConfig& cfg);

}  // namespace learnq::admission
