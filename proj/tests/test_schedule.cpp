#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bridgelab/common.hpp"
#include "bridgelab/schedule.hpp"

using namespace bridgelab;

TEST_CASE("constant schedule uses g_min for every step") {
  auto s = make_schedule(6, 0.05, 0.9, ScheduleShape::Constant, false);
  REQUIRE(s.n_steps == 6);
  for (int k = 1; k <= 6; ++k) CHECK(s.g(k) == 0.05);
  CHECK(s.gbar(0) == 0.0);
  CHECK(s.gbar(6) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(s.horizon() == s.gbar(6));
  CHECK_FALSE(s.normalized);
}

TEST_CASE("linear-symmetric exact values, even N") {
  auto s = make_schedule(4, 0.1, 0.3, ScheduleShape::LinearSymmetric, false);
  CHECK(s.g(1) == 0.1);
  CHECK(s.g(2) == 0.3);
  CHECK(s.g(3) == 0.3);  // even N: the two middle steps share the peak
  CHECK(s.g(4) == 0.1);
  CHECK(s.gbar(2) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("linear-symmetric exact values, odd N") {
  auto s = make_schedule(5, 0.1, 0.3, ScheduleShape::LinearSymmetric, false);
  CHECK(s.g(1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s.g(2) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(s.g(3) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(s.g(4) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(s.g(5) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("linear-symmetric properties at larger N") {
  auto s = make_schedule(50, 1e-4, 1e-2, ScheduleShape::LinearSymmetric, false);
  // symmetric about the middle
  for (int k = 1; k <= 50; ++k)
    CHECK(s.g(k) == doctest::Approx(s.g(51 - k)).epsilon(1e-15));
  // endpoints and peak
  CHECK(s.g(1) == 1e-4);
  CHECK(s.g(25) == 1e-2);
  CHECK(s.g(26) == 1e-2);
  // strictly increasing along the first half up to the plateau
  for (int k = 1; k < 25; ++k) CHECK(s.g(k) < s.g(k + 1));
  // positivity and prefix-sum consistency
  double acc = 0.0;
  for (int k = 1; k <= 50; ++k) {
    CHECK(s.g(k) > 0.0);
    acc += s.g(k);
    CHECK(s.gbar(k) == doctest::Approx(acc).epsilon(1e-13));
  }
}

TEST_CASE("normalization rescales to unit horizon") {
  auto raw = make_schedule(16, 1e-4, 1e-2, ScheduleShape::LinearSymmetric, false);
  auto s = make_schedule(16, 1e-4, 1e-2, ScheduleShape::LinearSymmetric, true);
  CHECK(s.normalized);
  CHECK(s.horizon() == doctest::Approx(1.0).epsilon(1e-12));
  double total = std::accumulate(s.gamma.begin(), s.gamma.end(), 0.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  // normalization preserves ratios
  for (int k = 1; k <= 16; ++k)
    CHECK(s.g(k) / s.g(1) == doctest::Approx(raw.g(k) / raw.g(1)).epsilon(1e-12));
}

TEST_CASE("schedule construction rejects bad parameters") {
  CHECK_THROWS_AS(make_schedule(0, 0.1, 0.2, ScheduleShape::Constant, false),
                  ConfigError);
  CHECK_THROWS_AS(make_schedule(4, 0.0, 0.2, ScheduleShape::Constant, false),
                  ConfigError);
  CHECK_THROWS_AS(make_schedule(4, -0.1, 0.2, ScheduleShape::Constant, false),
                  ConfigError);
  CHECK_THROWS_AS(
      make_schedule(4, 0.3, 0.1, ScheduleShape::LinearSymmetric, false),
      ConfigError);
  CHECK_THROWS_AS(shape_from_string("cosine"), ConfigError);
}

TEST_CASE("shape round-trips through strings") {
  CHECK(shape_from_string("constant") == ScheduleShape::Constant);
  CHECK(shape_from_string("linear-symmetric") == ScheduleShape::LinearSymmetric);
  CHECK(to_string(ScheduleShape::Constant) == "constant");
  CHECK(to_string(ScheduleShape::LinearSymmetric) == "linear-symmetric");
}

TEST_CASE("index accessors reject out-of-range steps") {
  auto s = make_schedule(4, 0.1, 0.3, ScheduleShape::LinearSymmetric, false);
  CHECK_THROWS_AS(s.g(0), std::out_of_range);
  CHECK_THROWS_AS(s.g(5), std::out_of_range);
  CHECK_THROWS_AS(s.gbar(-1), std::out_of_range);
  CHECK_THROWS_AS(s.gbar(5), std::out_of_range);
  CHECK(s.gbar(0) == 0.0);
}

TEST_CASE("posterior variances match closed forms and vanish at the ends") {
  auto s = make_schedule(8, 0.1, 0.5, ScheduleShape::LinearSymmetric, true);
  for (int k = 0; k < 8; ++k) {
    auto v = posterior_variances(s, k);
    double g = s.g(k + 1);
    if (k == 0) {
      CHECK(v.backward == 0.0);  // exactly deterministic into the pinned end
    } else {
      CHECK(v.backward ==
            doctest::Approx(2.0 * g * s.gbar(k) / s.gbar(k + 1)).epsilon(1e-15));
      CHECK(v.backward > 0.0);
    }
    if (k == 7) {
      CHECK(v.forward == 0.0);
    } else {
      CHECK(v.forward ==
            doctest::Approx(2.0 * g * (1.0 - s.gbar(k + 1)) / (1.0 - s.gbar(k)))
                .epsilon(1e-12));
      CHECK(v.forward > 0.0);
    }
    // never exceeds the unconditional step variance
    CHECK(v.backward <= 2.0 * g + 1e-15);
    CHECK(v.forward <= 2.0 * g + 1e-15);
  }
}

TEST_CASE("posterior variances require a normalized schedule") {
  auto raw = make_schedule(8, 0.1, 0.5, ScheduleShape::LinearSymmetric, false);
  CHECK_THROWS_AS(posterior_variances(raw, 3), ConfigError);
  auto s = make_schedule(8, 0.1, 0.5, ScheduleShape::LinearSymmetric, true);
  CHECK_THROWS_AS(posterior_variances(s, -1), std::out_of_range);
  CHECK_THROWS_AS(posterior_variances(s, 8), std::out_of_range);
}
