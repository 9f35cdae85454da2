#include "learnq/balance.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace learnq;
namespace bl = learnq::balance;

namespace {

bl::ClusterConfig cluster(long n, double lambda, double r, long c, double horizon) {
  bl::ClusterConfig cfg;
  cfg.n = n;
  cfg.lambda = lambda;
  cfg.r = r;
  cfg.c = c;
  cfg.horizon = horizon;
  return cfg;
}

void check_audits(const bl::DelayStats& s) {
  CHECK(s.memory_overflows == 0);
  CHECK(s.busy_messages == 0);
  CHECK(s.idle_departures == 0);
  CHECK(s.negative_waits == 0);
}

}  // namespace

TEST_SUITE("balance_sim") {
  TEST_CASE("audits stay at zero across configurations") {
    for (const long n : {1L, 5L, 50L}) {
      for (const long c : {0L, 1L, 3L, n}) {
        for (const double r : {0.0, 0.5, 4.0}) {
          auto cfg = cluster(n, 0.85, r, c, 2000.0);
          cfg.seed = static_cast<std::uint64_t>(n * 100 + c * 10) + static_cast<std::uint64_t>(r * 2);
          const auto s = bl::simulate_cluster(cfg);
          check_audits(s);
          CHECK(s.jobs > 0);
          CHECK(s.mean_wait >= 0.0);
          if (c == 0 || r == 0.0) CHECK(s.memory_hit_fraction == 0.0);
          if (r == 0.0) CHECK(s.messages == 0);
        }
      }
    }
  }

  TEST_CASE("single server is an M/M/1 queue") {
    const auto est = bl::estimate_delay(cluster(1, 0.6, 1.0, 2, 1e5), 20);
    CHECK(std::abs(est.mean - bl::mm1_wait(0.6)) <= 3.0 * est.se);
  }

  TEST_CASE("without messages the dispatcher is uniform random routing") {
    // Each server then sees Poisson(lambda) arrivals: n independent M/M/1 queues.
    const auto silent = bl::estimate_delay(cluster(20, 0.5, 0.0, 3, 2e4), 20);
    CHECK(std::abs(silent.mean - bl::mm1_wait(0.5)) <= 3.0 * silent.se);
    const auto amnesic = bl::estimate_delay(cluster(20, 0.5, 2.0, 0, 2e4), 20);
    CHECK(std::abs(amnesic.mean - bl::mm1_wait(0.5)) <= 3.0 * amnesic.se);
  }

  TEST_CASE("idle messages with memory cut delay") {
    const auto informed = bl::estimate_delay(cluster(50, 0.7, 2.0, 5, 5000.0), 10);
    CHECK(informed.mean + 5.0 * informed.se < bl::mm1_wait(0.7));
    CHECK(informed.memory_hit_fraction > 0.0);
  }

  TEST_CASE("same seed gives the same run") {
    auto cfg = cluster(30, 0.8, 1.5, 4, 3000.0);
    cfg.seed = 42;
    const auto a = bl::simulate_cluster(cfg);
    const auto b = bl::simulate_cluster(cfg);
    CHECK(a.mean_wait == b.mean_wait);
    CHECK(a.jobs == b.jobs);
    CHECK(a.messages == b.messages);
    CHECK(a.memory_hit_fraction == b.memory_hit_fraction);
  }

  TEST_CASE("regime parameters") {
    const bl::RegimeParams rp;
    const auto msg = bl::regime_config(bl::Regime::HighMessage, 100, rp);
    CHECK(msg.r == doctest::Approx(std::log(100.0)));
    CHECK(msg.c == rp.high_message_c);
    const auto mem = bl::regime_config(bl::Regime::HighMemory, 100, rp);
    CHECK(mem.c == 100);
    CHECK(mem.r * (1.0 - rp.lambda) == doctest::Approx(rp.message_ratio * rp.lambda));
    const auto con = bl::regime_config(bl::Regime::Constrained, 100, rp);
    CHECK(con.c == rp.constrained_c);
    CHECK(con.r == rp.constrained_r);
    for (const auto r : {bl::Regime::HighMessage, bl::Regime::HighMemory, bl::Regime::Constrained}) {
      CHECK(bl::parse_regime(bl::regime_name(r)) == r);
      CHECK(bl::regime_config(r, 7, rp).lambda == rp.lambda);
    }
    CHECK_THROWS(bl::parse_regime("fast"));
  }

  TEST_CASE("invalid configurations throw") {
    CHECK_THROWS_AS(bl::simulate_cluster(cluster(0, 0.5, 1.0, 1, 10.0)), std::invalid_argument);
    CHECK_THROWS_AS(bl::simulate_cluster(cluster(5, 1.0, 1.0, 1, 10.0)), std::invalid_argument);
    CHECK_THROWS_AS(bl::simulate_cluster(cluster(5, 0.5, -1.0, 1, 10.0)), std::invalid_argument);
    CHECK_THROWS_AS(bl::simulate_cluster(cluster(5, 0.5, 1.0, -1, 10.0)), std::invalid_argument);
    CHECK_THROWS_AS(bl::simulate_cluster(cluster(5, 0.5, 1.0, 1, 0.0)), std::invalid_argument);
    auto cfg = cluster(5, 0.5, 1.0, 1, 10.0);
    cfg.burn_in = 1.0;
    CHECK_THROWS_AS(bl::simulate_cluster(cfg), std::invalid_argument);
  }
}
