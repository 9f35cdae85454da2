#include "learnq/switched_network.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace learnq;
namespace sw = learnq::switching;

namespace {

bool lex_less(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// Every integer vector in [0, max] dominated by some raw schedule.
std::vector<Eigen::VectorXi> closure_oracle(const std::vector<Eigen::VectorXi>& raw) {
  const Eigen::Index q = raw.front().size();
  Eigen::VectorXi hi = Eigen::VectorXi::Zero(q);
  for (const auto& v : raw) hi = hi.cwiseMax(v);
  std::vector<Eigen::VectorXi> out;
  Eigen::VectorXi cur = Eigen::VectorXi::Zero(q);
  while (true) {
    for (const auto& v : raw) {
      if ((cur.array() <= v.array()).all()) {
        out.push_back(cur);
        break;
      }
    }
    Eigen::Index j = 0;
    while (j < q && cur(j) == hi(j)) cur(j++) = 0;
    if (j == q) break;
    ++cur(j);
  }
  std::sort(out.begin(), out.end(), lex_less);
  return out;
}

// Lexicographically smallest maximiser of Q . sigma over sigma <= Q, by enumeration.
Eigen::VectorXi maxweight_oracle(const Eigen::VectorXi& queue, const std::vector<Eigen::VectorXi>& all) {
  long best = -1;
  std::vector<Eigen::VectorXi> argmax;
  for (const auto& s : all) {
    if (!(s.array() <= queue.array()).all()) continue;
    const long w = queue.dot(s);
    if (w > best) {
      best = w;
      argmax.clear();
    }
    if (w == best) argmax.push_back(s);
  }
  return *std::min_element(argmax.begin(), argmax.end(), lex_less);
}

// Two-queue margin: min over n in the simplex of max_sigma n . (sigma - abar),
// minimised over endpoints and crossings of the piecewise-linear envelope.
double margin_oracle_2(const Eigen::Vector2d& abar, const std::vector<Eigen::VectorXi>& all) {
  auto env = [&](double x) {
    double m = -1e300;
    for (const auto& s : all) m = std::max(m, x * (s(0) - abar(0)) + (1 - x) * (s(1) - abar(1)));
    return m;
  };
  double best = std::min(env(0.0), env(1.0));
  for (std::size_t a = 0; a < all.size(); ++a)
    for (std::size_t b = a + 1; b < all.size(); ++b) {
      const double sa = (all[a](0) - abar(0)) - (all[a](1) - abar(1));
      const double sb = (all[b](0) - abar(0)) - (all[b](1) - abar(1));
      if (std::abs(sa - sb) < 1e-14) continue;
      const double x = ((all[b](1) - abar(1)) - (all[a](1) - abar(1))) / (sa - sb);
      if (x >= 0 && x <= 1) best = std::min(best, env(x));
    }
  return best;
}

Eigen::VectorXi vec(std::initializer_list<int> v) {
  Eigen::VectorXi out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (const int x : v) out(k++) = x;
  return out;
}

}  // namespace

TEST_SUITE("switched_network") {
  TEST_CASE("crossbar closure is {(0,0), (0,1), (1,0)} in lexicographic order") {
    const auto s = sw::crossbar();
    REQUIRE(s.size() == 3);
    CHECK(s[0] == vec({0, 0}));
    CHECK(s[1] == vec({0, 1}));
    CHECK(s[2] == vec({1, 0}));
    CHECK(s.d_max() == 1);
    CHECK_FALSE(s.contains(vec({1, 1})));
  }

  TEST_CASE("monotone closure matches the box enumeration oracle") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
      const int q = std::uniform_int_distribution<int>(1, 4)(rng);
      std::vector<Eigen::VectorXi> raw;
      for (int k = 0; k < 3; ++k) {
        Eigen::VectorXi v(q);
        for (int j = 0; j < q; ++j) v(j) = std::uniform_int_distribution<int>(0, 3)(rng);
        raw.push_back(v);
      }
      raw.push_back(Eigen::VectorXi::Ones(q));
      const auto s = sw::monotone_closure(raw);
      CHECK(s.schedules() == closure_oracle(raw));
      CHECK(s[0].isZero());
    }
  }

  TEST_CASE("closure rejects malformed inputs") {
    CHECK_THROWS(sw::monotone_closure({}));
    CHECK_THROWS(sw::monotone_closure({vec({1, -1})}));
    CHECK_THROWS(sw::monotone_closure({vec({1, 0})}));  // queue 2 never served
    CHECK_THROWS(sw::monotone_closure({vec({1, 1}), vec({1})}));
  }

  TEST_CASE("maxweight equals the enumerated optimum with lexicographic tie-break") {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
      const int q = std::uniform_int_distribution<int>(2, 4)(rng);
      std::vector<Eigen::VectorXi> raw{Eigen::VectorXi::Ones(q)};
      Eigen::VectorXi v(q);
      for (int j = 0; j < q; ++j) v(j) = std::uniform_int_distribution<int>(0, 2)(rng);
      raw.push_back(v);
      const auto s = sw::monotone_closure(raw);
      Eigen::VectorXi queue(q);
      for (int j = 0; j < q; ++j) queue(j) = std::uniform_int_distribution<int>(0, 4)(rng);
      CHECK(sw::maxweight(queue, s) == maxweight_oracle(queue, closure_oracle(raw)));
    }
  }

  TEST_CASE("weighted and f-maxweight reduce to maxweight with unit weights and f(x) = x") {
    const auto s = sw::exclusive(3);
    const Eigen::VectorXi queue = vec({2, 5, 1});
    CHECK(sw::weighted_maxweight(queue, s, Eigen::Vector3d::Ones()) == sw::maxweight(queue, s));
    CHECK(sw::f_maxweight(queue, s, [](int x) { return double(x); }) == sw::maxweight(queue, s));
    // mu reweights: 2 * 3 beats 5 * 1.
    CHECK(sw::weighted_maxweight(queue, s, Eigen::Vector3d(3, 1, 1)) == vec({1, 0, 0}));
  }

  TEST_CASE("queue update Q + a - min(sigma, Q)") {
    CHECK(sw::step(vec({0, 3}), vec({1, 0}), vec({1, 1})) == vec({1, 2}));
  }

  TEST_CASE("interior margin: closed forms") {
    const auto s = sw::crossbar();
    CHECK(sw::interior_margin(Eigen::Vector2d(0.4, 0.4), s) == doctest::Approx(0.1));
    CHECK(sw::interior_margin(Eigen::Vector2d(0.7, 0.7), s) == doctest::Approx(-0.2));
    // Exclusive q-queue service: abar + eps 1 on the face sum = 1.
    const auto e = sw::exclusive(4);
    const Eigen::Vector4d a(0.1, 0.2, 0.05, 0.15);
    CHECK(sw::interior_margin(a, e) == doctest::Approx((1.0 - a.sum()) / 4.0));
  }

  TEST_CASE("interior margin matches the two-queue envelope oracle") {
    Rng rng(14);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Eigen::VectorXi> raw{vec({1, 1})};
      raw.push_back(vec({std::uniform_int_distribution<int>(0, 3)(rng), std::uniform_int_distribution<int>(0, 3)(rng)}));
      raw.push_back(vec({std::uniform_int_distribution<int>(0, 3)(rng), 0}));
      const auto s = sw::monotone_closure(raw);
      const Eigen::Vector2d abar(3.0 * uniform01(rng), 3.0 * uniform01(rng));
      CHECK(sw::interior_margin(abar, s) == doctest::Approx(margin_oracle_2(abar, s.schedules())).epsilon(1e-9));
    }
  }

  TEST_CASE("transience: separating normal and eps_hat") {
    const auto sep = sw::transience_check(Eigen::Vector2d(0.7, 0.7), sw::crossbar());
    CHECK(sep.normal.isApprox(Eigen::Vector2d(1, 1)));
    CHECK(sep.eps_hat == doctest::Approx(0.4));
    const auto one = sw::transience_check(Eigen::VectorXd::Constant(1, 1.5), sw::exclusive(1));
    CHECK(one.eps_hat == doctest::Approx(0.5));
    CHECK_THROWS_AS(sw::transience_check(Eigen::Vector2d(0.4, 0.4), sw::crossbar()), sw::NotSupercritical);
  }

  TEST_CASE("separation holds for every schedule") {
    Rng rng(15);
    const auto s = sw::monotone_closure({vec({2, 0, 1}), vec({0, 1, 1}), vec({1, 1, 0})});
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Vector3d abar(1.0 + 2.0 * uniform01(rng), 1.0 + 2.0 * uniform01(rng), 1.0 + 2.0 * uniform01(rng));
      const auto sep = sw::transience_check(abar, s);
      CHECK(sep.normal.maxCoeff() == doctest::Approx(1.0));
      CHECK(sep.normal.minCoeff() >= -1e-12);
      for (const auto& sigma : s.schedules()) CHECK(sep.normal.dot(sigma.cast<double>() - abar) <= -sep.eps_hat + 1e-9);
    }
  }

  TEST_CASE("deterministic arrivals: hand-traced maxweight path") {
    const auto arr = sw::ArrivalModel::sequence({vec({1, 1})});
    const auto tr = sw::simulate(sw::crossbar(), arr, sw::Policy{}, 4, 1, true);
    REQUIRE(tr.queue.size() == 5);
    CHECK(tr.queue[1] == vec({1, 1}));  // zero schedule is the only one under Q = 0
    CHECK(tr.queue[2] == vec({2, 1}));  // tie, (0,1) is lexicographically first
    CHECK(tr.queue[3] == vec({2, 2}));
    CHECK(tr.queue[4] == vec({3, 2}));
  }

  TEST_CASE("drift accounting identity ||Q + delta||^2 - ||Q||^2 = 2 Q.delta + ||delta||^2") {
    for (const auto kind : {sw::PolicyKind::MaxWeight, sw::PolicyKind::FLog, sw::PolicyKind::Random}) {
      sw::Policy pol;
      pol.kind = kind;
      const auto tr = sw::simulate(sw::exclusive(3), sw::ArrivalModel::bernoulli(Eigen::Vector3d(0.3, 0.2, 0.3)), pol,
                                   5000, 2);
      CHECK(tr.mean_sq_increment == doctest::Approx(2.0 * tr.mean_cross + tr.c_estimate).epsilon(1e-9));
    }
  }

  TEST_CASE("stable load: time-averaged queue within the drift bound") {
    const Eigen::Vector3d rates(0.3, 0.2, 0.3);
    const auto s = sw::exclusive(3);
    for (const auto kind : {sw::PolicyKind::MaxWeight, sw::PolicyKind::FSquare}) {
      sw::Policy pol;
      pol.kind = kind;
      const auto tr = sw::simulate(s, sw::ArrivalModel::bernoulli(rates), pol, 50000, 3);
      if (kind == sw::PolicyKind::MaxWeight) {
        CHECK(tr.time_avg_total <= sw::drift_bound(tr.c_estimate, sw::interior_margin(rates, s)));
      }
      CHECK(tr.final_queue.sum() < 200);
    }
    CHECK(std::isinf(sw::drift_bound(1.0, 0.0)));
  }

  TEST_CASE("random service thins departures") {
    sw::Policy pol;
    pol.kind = sw::PolicyKind::WeightedMaxWeight;
    pol.mu = Eigen::Vector2d(0.5, 0.5);
    const auto tr = sw::simulate(sw::crossbar(), sw::ArrivalModel::bernoulli(Eigen::Vector2d(0.3, 0.3)), pol, 20000, 4);
    // Capacity halves to 0.5 < 0.6: queues grow at about 0.1 per slot.
    CHECK(static_cast<double>(tr.final_queue.sum()) / 20000.0 == doctest::Approx(0.1).epsilon(0.3));
  }

  TEST_CASE("arrival models: means and sampling") {
    const auto b = sw::ArrivalModel::bernoulli(Eigen::Vector2d(0.25, 0.5));
    CHECK(b.mean(1).isApprox(Eigen::Vector2d(0.25, 0.5)));
    Rng rng(5);
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    for (long t = 1; t <= 40000; ++t) acc += b.sample(t, rng).cast<double>();
    CHECK((acc / 40000.0 - Eigen::Vector2d(0.25, 0.5)).norm() < 0.02);
    const auto seq = sw::ArrivalModel::sequence({vec({1, 0}), vec({0, 2})});
    CHECK(seq.mean(2) == Eigen::Vector2d(0, 2));
    CHECK(seq.mean(3) == Eigen::Vector2d(1, 0));
    sw::IidArrivals p0{{vec({0, 0})}, Eigen::VectorXd::Ones(1)};
    sw::IidArrivals p1{{vec({1, 1})}, Eigen::VectorXd::Ones(1)};
    const auto tv = sw::ArrivalModel::time_varying({0, 10}, {p0, p1});
    CHECK(tv.mean(5).isZero());
    CHECK(tv.mean(11) == Eigen::Vector2d(1, 1));
  }

  TEST_CASE("embedding: payoff s_j - sigma_i and lifted matrices give a - d") {
    const auto s = sw::crossbar();
    const auto e = sw::embed_as_game(s, 1);
    for (Eigen::Index i = 0; i < s.size(); ++i)
      for (Eigen::Index j = 0; j < s.size(); ++j)
        CHECK(e.tensor.entry(i, j) == (s[j] - s[i]).cast<double>());
    CHECK(e.tensor.r_max() == doctest::Approx(std::sqrt(2.0)));
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXi d = vec({std::uniform_int_distribution<int>(0, 3)(rng), std::uniform_int_distribution<int>(0, 3)(rng)});
      const Eigen::VectorXi a = vec({std::uniform_int_distribution<int>(0, 3)(rng), std::uniform_int_distribution<int>(0, 3)(rng)});
      CHECK(sw::lifted_payoff(e, d, a) == (a - d).cast<double>());
    }
  }

  TEST_CASE("embedded game has value 0 in every direction") {
    const auto s = sw::monotone_closure({vec({2, 1, 0}), vec({0, 1, 1})});
    const auto e = sw::embed_as_game(s, 2);
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
      const Eigen::Vector3d n(uniform01(rng), uniform01(rng), uniform01(rng));
      CHECK(solve_matrix_game(e.tensor.contract(n)).value == doctest::Approx(0.0).epsilon(1e-9));
    }
  }

  TEST_CASE("blackwell decision supports only maxweight schedules") {
    const auto s = sw::monotone_closure({vec({2, 1, 0}), vec({0, 1, 1}), vec({1, 0, 2})});
    std::vector<Eigen::VectorXi> states;
    Rng rng(8);
    for (int k = 0; k < 100; ++k) {
      states.push_back(vec({std::uniform_int_distribution<int>(0, 9)(rng), std::uniform_int_distribution<int>(0, 9)(rng),
                            std::uniform_int_distribution<int>(1, 9)(rng)}));
    }
    const auto rep = sw::verify_equivalence(s, states);
    CHECK(rep.states == 100);
    CHECK(rep.all_agree());
  }

  TEST_CASE("simulation replays from the seed") {
    sw::Policy pol;
    pol.kind = sw::PolicyKind::Random;
    const auto arr = sw::ArrivalModel::bernoulli(Eigen::Vector2d(0.4, 0.4));
    const auto a = sw::simulate(sw::crossbar(), arr, pol, 3000, 9, true);
    const auto b = sw::simulate(sw::crossbar(), arr, pol, 3000, 9, true);
    CHECK(a.queue == b.queue);
  }

  TEST_CASE("policy names round-trip") {
    for (const auto* n : {"mw", "wmw", "fmw-square", "fmw-log", "random"}) {
      CHECK(sw::policy_name(sw::parse_policy(n)) == n);
    }
    CHECK_THROWS(sw::parse_policy("backpressure"));
  }
}
