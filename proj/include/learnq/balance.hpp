#pragma once

// n parallel exponential(1) servers behind a dispatcher that only learns
// about idle servers through their messages and remembers at most c of them.

#include <cstdint>
#include <string>
#include <vector>

namespace learnq::balance {

struct ClusterConfig {
  long n = 10;
  double lambda = 0.9;   // per-server load; system arrival rate lambda n
  double r = 1.0;        // message rate of each idle server
  long c = 2;            // memory slots (distinct server IDs)
  double horizon = 1e4;
  double burn_in = 0.2;  // fraction of the horizon discarded
  std::uint64_t seed = 1;

  void validate() const;
};

struct DelayStats {
  double mean_wait = 0.0;         // mean time from arrival to service start
  long jobs = 0;                  // jobs counted in mean_wait
  double memory_hit_fraction = 0.0;
  long messages = 0;
  long duplicate_messages = 0;    // message for an ID already remembered
  long discarded_messages = 0;    // memory full
  // Audits, all expected to be zero.
  long memory_overflows = 0;
  long busy_messages = 0;
  long idle_departures = 0;
  long negative_waits = 0;
};

DelayStats simulate_cluster(const ClusterConfig& cfg);

struct DelayEstimate {
  double mean = 0.0;
  double se = 0.0;
  double memory_hit_fraction = 0.0;
  std::vector<double> per_replication;
};

/// Replications with seeds derive_seed(cfg.seed, k); SE across replications.
DelayEstimate estimate_delay(const ClusterConfig& cfg, long replications);

enum class Regime { HighMessage, HighMemory, Constrained };

Regime parse_regime(const std::string& name);
std::string regime_name(Regime r);

struct RegimeParams {
  double lambda = 0.7;
  long high_message_c = 2;          // r = log n
  /// High memory: c = n and r (1 - lambda) = message_ratio lambda, the mean
  /// message rate per server relative to its arrival rate.
  double message_ratio = 1.2;
  long constrained_c = 2;
  double constrained_r = 1.0;
};

/// (r, c) used by a regime at size n.
ClusterConfig regime_config(Regime regime, long n, const RegimeParams& p);

struct RegimeRow {
  long n = 0;
  double r = 0.0;
  long c = 0;
  DelayEstimate delay;
};

std::vector<RegimeRow> regime_sweep(Regime regime, const std::vector<long>& sizes, const RegimeParams& params,
                                    double horizon, long replications, std::uint64_t seed);

/// Waiting time of an M/M/1 queue with unit service rate: lambda / (1 - lambda).
inline double mm1_wait(double lambda) { return lambda / (1.0 - lambda); }

}  // namespace learnq::balance
