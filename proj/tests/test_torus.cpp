#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "enskog/rng.hpp"
#include "enskog/torus.hpp"

using namespace enskog;

TEST_CASE("wrap reduces coordinates into [0, L)") {
  auto p = wrap({1.2, -0.3, 0.5}, 1.0);
  CHECK(p.x == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(p.y == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(p.z == 0.5);
  CHECK(wrap({0, 0, 0}, 1.0) == TorusPoint{0, 0, 0});
  CHECK(wrap({3.0, 3.0, 3.0}, 1.0) == TorusPoint{0, 0, 0});
  // tiny negative values must not land on L
  auto q = wrap({-1e-18, -1e-300, 0.0}, 1.0);
  CHECK(q.x < 1.0);
  CHECK(q.y < 1.0);
}

TEST_CASE("wrap rejects non-finite input and bad box") {
  CHECK_THROWS_AS(wrap({NAN, 0, 0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(wrap({INFINITY, 0, 0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(wrap({0, 0, 0}, 0.0), std::invalid_argument);
}

TEST_CASE("min_image examples") {
  const double L = 1.0;
  auto d = min_image({0.9, 0, 0}, {0.1, 0, 0}, L);
  CHECK(d.x == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK(d.y == 0.0);
  CHECK(min_image({0.3, 0.4, 0.5}, {0.3, 0.4, 0.5}, L) == Vec3{});
  // antipodal tie resolves to +L/2
  auto tie = min_image({0.6, 0.5, 0.5}, {0.1, 0.5, 0.5}, L);
  CHECK(tie.x == doctest::Approx(0.5));
  auto tie2 = min_image({0.1, 0.5, 0.5}, {0.6, 0.5, 0.5}, L);
  CHECK(tie2.x == doctest::Approx(0.5));
}

TEST_CASE("torus properties on random points") {
  auto rng = make_rng(7, "test.torus");
  const double L = 2.5;
  for (int n = 0; n < 10000; ++n) {
    Vec3 raw{(uniform01(rng) - 0.5) * 20, (uniform01(rng) - 0.5) * 20, (uniform01(rng) - 0.5) * 20};
    auto p = wrap(raw, L);
    // idempotent
    CHECK(wrap(p.as_vec(), L) == p);
    for (int k = 0; k < 3; ++k) {
      CHECK(p.as_vec()[k] >= 0.0);
      CHECK(p.as_vec()[k] < L);
    }
    auto q = wrap({uniform01(rng) * L, uniform01(rng) * L, uniform01(rng) * L}, L);
    Vec3 d = min_image(p, q, L);
    Vec3 e = min_image(q, p, L);
    CHECK(norm(d) <= std::sqrt(3.0) / 2 * L + 1e-12);
    for (int k = 0; k < 3; ++k) {
      CHECK(std::fabs(d[k]) <= 0.5 * L);
      CHECK(d[k] == doctest::Approx(-e[k]).epsilon(1e-12));
    }
    // p = wrap(q + d)
    CHECK(max_abs(min_image(translate(q, d, L), p, L)) < 1e-12);
  }
}

TEST_CASE("image_offsets") {
  CHECK(image_offsets(0.1, 1.0, 1.0).size() == 27);
  CHECK(image_offsets(0.1, 1.0, 0.3).size() == 27);
  auto one = image_offsets(0.1, 1.0, 0.0);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Vec3{});
  CHECK(image_offsets(0.45, 1.0, 0.5).size() == 27);
  CHECK(image_offsets(0.1, 1.0, 3.0).size() == 7 * 7 * 7);
  CHECK_THROWS_AS(image_offsets(0.5, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(image_offsets(0.0, 1.0, 1.0), std::invalid_argument);
}
