#include "learnq/balance.hpp"

#include "learnq/parallel.hpp"
#include "learnq/random.hpp"

#include <cmath>
#include <deque>
#include <queue>
#include <stdexcept>

namespace learnq::balance {

void ClusterConfig::validate() const {
  if (n < 1) throw std::invalid_argument("cluster: n must be >= 1");
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("cluster: lambda must lie in (0, 1)");
  if (!(r >= 0.0) || std::isinf(r)) throw std::invalid_argument("cluster: r must be finite and >= 0");
  if (c < 0) throw std::invalid_argument("cluster: c must be >= 0");
  if (!(horizon > 0.0) || std::isinf(horizon)) throw std::invalid_argument("cluster: horizon must be positive");
  if (!(burn_in >= 0.0 && burn_in < 1.0)) throw std::invalid_argument("cluster: burn_in must lie in [0, 1)");
}

namespace {

enum class Kind : unsigned char { Arrival, Departure, Message };

struct Event {
  double time;
  std::uint64_t seq;
  Kind kind;
  long server;
  std::uint64_t version;  // messages only: valid while it matches the server's idle epoch
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

class Memory {
 public:
  Memory(long n, long capacity) : present_(static_cast<std::size_t>(n), 0), capacity_(capacity) {}

  // Returns 0 on insert, 1 for a duplicate, 2 when full.
  int offer(long id) {
    if (present_[static_cast<std::size_t>(id)]) return 1;
    if (static_cast<long>(slots_.size()) >= capacity_) return 2;
    present_[static_cast<std::size_t>(id)] = 1;
    slots_.push_back(id);
    return 0;
  }

  bool empty() const { return slots_.empty(); }
  long size() const { return static_cast<long>(slots_.size()); }

  long take(Rng& rng) {
    const auto k = std::uniform_int_distribution<std::size_t>(0, slots_.size() - 1)(rng);
    const long id = slots_[k];
    slots_[k] = slots_.back();
    slots_.pop_back();
    present_[static_cast<std::size_t>(id)] = 0;
    return id;
  }

 private:
  std::vector<long> slots_;
  std::vector<char> present_;
  long capacity_;
};

}  // namespace

DelayStats simulate_cluster(const ClusterConfig& cfg) {
  cfg.validate();
  Rng arrival_rng(derive_seed(cfg.seed, 0));
  Rng service_rng(derive_seed(cfg.seed, 1));
  Rng message_rng(derive_seed(cfg.seed, 2));
  Rng route_rng(derive_seed(cfg.seed, 3));

  const auto n = static_cast<std::size_t>(cfg.n);
  std::vector<std::deque<double>> queue(n);  // arrival epochs, front is in service
  std::vector<std::uint64_t> idle_epoch(n, 0);
  Memory memory(cfg.n, cfg.c);
  std::priority_queue<Event, std::vector<Event>, Later> events;
  std::uint64_t seq = 0;
  const double cutoff = cfg.burn_in * cfg.horizon;

  DelayStats st;
  double wait_sum = 0.0;
  long routed = 0, routed_after_cutoff = 0, memory_routed = 0;

  auto schedule_message = [&](long s, double now) {
    if (cfg.r <= 0.0) return;
    events.push(Event{now + exponential(message_rng, cfg.r), seq++, Kind::Message, s, idle_epoch[static_cast<std::size_t>(s)]});
  };
  auto start_service = [&](long s, double now) {
    const double arrived = queue[static_cast<std::size_t>(s)].front();
    if (arrived >= cutoff) {
      const double w = now - arrived;
      if (w < 0.0) ++st.negative_waits;
      wait_sum += w;
      ++st.jobs;
    }
    events.push(Event{now + exponential(service_rng, 1.0), seq++, Kind::Departure, s, 0});
  };

  for (long s = 0; s < cfg.n; ++s) schedule_message(s, 0.0);
  events.push(Event{exponential(arrival_rng, cfg.lambda * static_cast<double>(cfg.n)), seq++, Kind::Arrival, -1, 0});

  std::uniform_int_distribution<long> any_server(0, cfg.n - 1);
  while (!events.empty() && events.top().time < cfg.horizon) {
    const Event e = events.top();
    events.pop();
    switch (e.kind) {
      case Kind::Arrival: {
        long s;
        const bool from_memory = !memory.empty();
        s = from_memory ? memory.take(route_rng) : any_server(route_rng);
        ++routed;
        if (e.time >= cutoff) {
          ++routed_after_cutoff;
          if (from_memory) ++memory_routed;
        }
        auto& q = queue[static_cast<std::size_t>(s)];
        q.push_back(e.time);
        if (q.size() == 1) {
          ++idle_epoch[static_cast<std::size_t>(s)];  // invalidates the pending message
          start_service(s, e.time);
        }
        events.push(Event{e.time + exponential(arrival_rng, cfg.lambda * static_cast<double>(cfg.n)), seq++,
                          Kind::Arrival, -1, 0});
        break;
      }
      case Kind::Departure: {
        auto& q = queue[static_cast<std::size_t>(e.server)];
        if (q.empty()) {
          ++st.idle_departures;
          break;
        }
        q.pop_front();
        if (!q.empty()) {
          start_service(e.server, e.time);
        } else {
          ++idle_epoch[static_cast<std::size_t>(e.server)];
          schedule_message(e.server, e.time);
        }
        break;
      }
      case Kind::Message: {
        if (e.version != idle_epoch[static_cast<std::size_t>(e.server)]) break;  // server became busy
        if (!queue[static_cast<std::size_t>(e.server)].empty()) {
          ++st.busy_messages;
          break;
        }
        ++st.messages;
        const int outcome = memory.offer(e.server);
        if (outcome == 1) ++st.duplicate_messages;
        if (outcome == 2) ++st.discarded_messages;
        schedule_message(e.server, e.time);
        break;
      }
    }
    if (memory.size() > cfg.c) ++st.memory_overflows;
  }
  st.mean_wait = st.jobs > 0 ? wait_sum / static_cast<double>(st.jobs) : 0.0;
  st.memory_hit_fraction =
      routed_after_cutoff > 0 ? static_cast<double>(memory_routed) / static_cast<double>(routed_after_cutoff) : 0.0;
  return st;
}

DelayEstimate estimate_delay(const ClusterConfig& cfg, long replications) {
  if (replications < 1) throw std::invalid_argument("estimate_delay: replications must be >= 1");
  std::vector<DelayStats> runs(static_cast<std::size_t>(replications));
  parallel_for(replications, [&](long k) {
    ClusterConfig c = cfg;
    c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
    runs[static_cast<std::size_t>(k)] = simulate_cluster(c);
  });
  DelayEstimate est;
  for (const auto& r : runs) {
    est.per_replication.push_back(r.mean_wait);
    est.mean += r.mean_wait;
    est.memory_hit_fraction += r.memory_hit_fraction;
  }
  const double m = static_cast<double>(replications);
  est.mean /= m;
  est.memory_hit_fraction /= m;
  if (replications > 1) {
    double ss = 0.0;
    for (const double v : est.per_replication) ss += (v - est.mean) * (v - est.mean);
    est.se = std::sqrt(ss / (m - 1.0) / m);
  }
  return est;
}

Regime parse_regime(const std::string& name) {
  if (name == "high_message") return Regime::HighMessage;
  if (name == "high_memory") return Regime::HighMemory;
  if (name == "constrained") return Regime::Constrained;
  throw std::invalid_argument("unknown regime: " + name);
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::HighMessage: return "high_message";
    case Regime::HighMemory: return "high_memory";
    case Regime::Constrained: return "constrained";
  }
  return "?";
}

ClusterConfig regime_config(Regime regime, long n, const RegimeParams& p) {
  ClusterConfig c;
  c.n = n;
  c.lambda = p.lambda;
  switch (regime) {
    case Regime::HighMessage:
      c.c = p.high_message_c;
      c.r = std::log(static_cast<double>(n));
      break;
    case Regime::HighMemory:
      c.c = n;
      c.r = p.message_ratio * p.lambda / (1.0 - p.lambda);
      break;
    case Regime::Constrained:
      c.c = p.constrained_c;
      c.r = p.constrained_r;
      break;
  }
  return c;
}

std::vector<RegimeRow> regime_sweep(Regime regime, const std::vector<long>& sizes, const RegimeParams& params,
                                    double horizon, long replications, std::uint64_t seed) {
  std::vector<RegimeRow> rows;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    ClusterConfig c = regime_config(regime, sizes[i], params);
    c.horizon = horizon;
    c.seed = derive_seed(seed, i);
    rows.push_back(RegimeRow{c.n, c.r, c.c, estimate_delay(c, replications)});
  }
  return rows;
}

}  // namespace learnq::balance
