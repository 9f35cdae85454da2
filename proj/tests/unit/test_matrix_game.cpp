#include "learnq/matrix_game.hpp"
#include "learnq/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace learnq;

namespace {

// Row player minimises. For a 2 x q game the value is min over d in [0, 1] of
// the upper envelope max_j (d m0j + (1 - d) m1j); it is attained at an
// endpoint or a crossing of two lines.
double two_row_value(const Eigen::MatrixXd& m) {
  auto env = [&](double d) { return (d * m.row(0) + (1.0 - d) * m.row(1)).maxCoeff(); };
  double best = std::min(env(0.0), env(1.0));
  for (Eigen::Index a = 0; a < m.cols(); ++a)
    for (Eigen::Index b = a + 1; b < m.cols(); ++b) {
      const double den = (m(0, a) - m(1, a)) - (m(0, b) - m(1, b));
      if (std::abs(den) < 1e-14) continue;
      const double d = (m(1, b) - m(1, a)) / den;
      if (d >= 0.0 && d <= 1.0) best = std::min(best, env(d));
    }
  return best;
}

}  // namespace

TEST_SUITE("matrix_game") {
  TEST_CASE("matching pennies has value 0 and uniform strategies") {
    Eigen::MatrixXd m(2, 2);
    m << 1, -1, -1, 1;
    const auto s = solve_matrix_game(m);
    CHECK(s.value == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.row_strategy(0) == doctest::Approx(0.5));
    CHECK(s.column_strategy(0) == doctest::Approx(0.5));
  }

  TEST_CASE("closed-form 2x2 mixed equilibrium") {
    Eigen::MatrixXd m(2, 2);
    m << 3, 0, 1, 2;
    const auto s = solve_matrix_game(m);
    // Row indifference: 3d + (1 - d) = 2 (1 - d) -> d = 1/4; value 1.5.
    CHECK(s.value == doctest::Approx(1.5));
    CHECK(s.row_strategy(0) == doctest::Approx(0.25));
    // Column indifference: 3a = a + 2 (1 - a) -> a = 1/2.
    CHECK(s.column_strategy(0) == doctest::Approx(0.5));
  }

  TEST_CASE("pure saddle point") {
    Eigen::MatrixXd m(3, 3);
    m << 4, 5, 6, 2, 3, 1, 7, 8, 9;
    const auto s = solve_matrix_game(m);
    // Row 1 guarantees max 3; column 1 guarantees min 3.
    CHECK(s.value == doctest::Approx(3.0));
    CHECK(s.gap == doctest::Approx(0.0).epsilon(1e-9));
  }

  TEST_CASE("random 2 x q games match the envelope oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
      const auto q = std::uniform_int_distribution<Eigen::Index>(1, 6)(rng);
      Eigen::MatrixXd m(2, q);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 10.0 * uniform01(rng) - 5.0;
      const auto s = solve_matrix_game(m);
      CHECK(s.value == doctest::Approx(two_row_value(m)).epsilon(1e-9));
    }
  }

  TEST_CASE("random games: strategies are distributions with zero duality gap") {
    Rng rng(18);
    for (int trial = 0; trial < 200; ++trial) {
      const auto p = std::uniform_int_distribution<Eigen::Index>(1, 7)(rng);
      const auto q = std::uniform_int_distribution<Eigen::Index>(1, 7)(rng);
      Eigen::MatrixXd m(p, q);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 20.0 * uniform01(rng) - 10.0;
      const auto s = solve_matrix_game(m);
      CHECK(s.row_strategy.minCoeff() >= -1e-12);
      CHECK(s.column_strategy.minCoeff() >= -1e-12);
      CHECK(s.row_strategy.sum() == doctest::Approx(1.0));
      CHECK(s.column_strategy.sum() == doctest::Approx(1.0));
      CHECK(duality_gap(m, s.row_strategy, s.column_strategy) <= 1e-8);
      // Value is sandwiched by the pure-strategy security levels.
      CHECK(s.value <= m.rowwise().maxCoeff().minCoeff() + 1e-9);
      CHECK(s.value >= m.colwise().minCoeff().maxCoeff() - 1e-9);
    }
  }

  TEST_CASE("fictitious play converges toward the LP value") {
    Eigen::MatrixXd m(3, 3);
    m << 0, 1, -1, -1, 0, 1, 1, -1, 0;
    const auto fp = fictitious_play(m, 20000);
    CHECK(std::abs(fp.value - solve_matrix_game(m).value) < 0.05);
    CHECK(fp.gap < 0.1);
  }

  TEST_CASE("non-finite input throws") {
    Eigen::MatrixXd m(1, 1);
    m << std::nan("");
    CHECK_THROWS(solve_matrix_game(m));
  }
}
