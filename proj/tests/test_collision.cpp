#include "doctest.h"

#include <cmath>
#include <random>

#include "enskog/collision.hpp"
#include "enskog/error.hpp"

using namespace enskog;

namespace {

// Independent of the library's field code on purpose.
double gauss3(const Vec3& v, const Vec3& u, double theta) {
  const double d2 = (v.x - u.x) * (v.x - u.x) + (v.y - u.y) * (v.y - u.y) + (v.z - u.z) * (v.z - u.z);
  return std::exp(-d2 / (2 * theta)) / std::pow(2 * M_PI * theta, 1.5);
}

double bump1(double x, double w) {
  const double t = x / w;
  return std::fabs(t) >= 1.0 ? 0.0 : (15.0 / 16.0) * (1 - t * t) * (1 - t * t) / w;
}

double bump3(const Vec3& d, double w) { return bump1(d.x, w) * bump1(d.y, w) * bump1(d.z, w); }

PhaseField scaled(const PhaseField& base, double c) {
  PhaseField p = base;
  p.f = [g = base.f, c](const TorusPoint& r, const Vec3& v) { return c * g(r, v); };
  if (base.rho) p.rho = [g = base.rho, c](const TorusPoint& r) { return c * g(r); };
  return p;
}

}  // namespace

TEST_CASE("quadrature rules") {
  auto q = QuadratureRule::make();
  CHECK(std::fabs(q.sigma_weight_sum() - 4 * M_PI) <= 1e-10);
  double m = 0.0;
  for (std::size_t k = 0; k < q.v.nodes.size(); ++k) m += q.v.weights[k] * gauss3(q.v.nodes[k], {}, 1.0);
  CHECK(std::fabs(m - 1.0) <= 1e-6);

  auto h = gauss_hermite(10, 2.0, 1.0);
  double s0 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < h.nodes.size(); ++i) {
    const double g = std::exp(-(h.nodes[i] - 1) * (h.nodes[i] - 1) / 8);
    s0 += h.weights[i] * g;
    s2 += h.weights[i] * g * (h.nodes[i] - 1) * (h.nodes[i] - 1);
  }
  CHECK(s0 == doctest::Approx(2 * std::sqrt(2 * M_PI)).epsilon(1e-13));
  CHECK(s2 == doctest::Approx(8 * std::sqrt(2 * M_PI)).epsilon(1e-13));
  CHECK_THROWS_AS(gauss_hermite(0), std::invalid_argument);
}

TEST_CASE("uniform Maxwellian is a fixed point of both operators") {
  auto f = uniform_maxwellian(1.0);
  for (const auto& quad : {QuadratureRule::make(), QuadratureRule::make_aligned()}) {
    for (Vec3 v1 : {Vec3{0, 0, 0}, Vec3{0.7, -0.3, 1.1}, Vec3{-2.0, 0.5, 0.1}}) {
      auto p = st_both(f, {0.2, 0.7, 0.4}, v1, 0.1, 10.0, quad);
      CHECK(p.enskog.loss > 0.0);
      CHECK(std::fabs(p.enskog.value()) <= 1e-6 * p.enskog.loss);
      CHECK(p.enskog.gain == p.boltzmann.gain);
      CHECK(p.enskog.loss == p.boltzmann.loss);
    }
  }
  // far tail: post-collision velocities leave the velocity box; the tensor rule does not truncate f there
  auto tail = st_both(f, {0.2, 0.7, 0.4}, {4.5, -1.0, 0.5}, 0.1, 10.0, QuadratureRule::make());
  CHECK(std::fabs(tail.enskog.value()) <= 1e-6 * tail.enskog.loss);
}

TEST_CASE("zero field gives exactly zero") {
  PhaseField f;
  f.f = [](const TorusPoint&, const Vec3&) { return 0.0; };
  auto q = QuadratureRule::make(8, 16, 10);
  CHECK(st_enskog(f, {0.5, 0.5, 0.5}, {0.1, 0.2, 0.3}, 0.1, 10.0, q) == 0.0);
  CHECK(st_boltzmann(f, {0.5, 0.5, 0.5}, {0.1, 0.2, 0.3}, 0.1, 10.0, q) == 0.0);
}

TEST_CASE("negative field values are rejected") {
  PhaseField f;
  f.f = [](const TorusPoint&, const Vec3& v) { return v.x > 1.0 ? -1e-3 : 1.0; };
  CHECK_THROWS_AS(st_enskog(f, {0.5, 0.5, 0.5}, {}, 0.1, 10.0, QuadratureRule::make(4, 8, 6)), Error);
  CHECK_THROWS_AS(QuadratureRule::make(16, 32, 18, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(st_enskog(uniform_maxwellian(1.0), {0.5, 0.5, 0.5}, {}, 0.0, 10.0, QuadratureRule::make(4, 8, 6)),
                  std::invalid_argument);
}

namespace {

struct McEstimate {
  double value, value_se, gain, gain_se;
};

// Plain Monte Carlo over sigma uniform on the sphere and v2 from N(0, s^2 I).
McEstimate monte_carlo_st(const Vec3& v1, const Vec3& u, double a, double n, std::size_t samples,
                          std::uint64_t seed) {
  auto fb = [&](const Vec3& v) { return 0.5 * gauss3(v, u, 1.0) + 0.5 * gauss3(v, -u, 1.0); };
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const double s = 2.0;
  double sv = 0.0, sv2 = 0.0, sg_ = 0.0, sg2 = 0.0;
  const double f1 = fb(v1);
  for (std::size_t k = 0; k < samples; ++k) {
    const Vec3 v2{s * nd(gen), s * nd(gen), s * nd(gen)};
    Vec3 sg{nd(gen), nd(gen), nd(gen)};
    sg = sg / norm(sg);
    const double c = dot(v2 - v1, sg);
    double g = 0.0, l = 0.0;
    if (c > 0.0) {
      const double w = 4 * M_PI * c / gauss3(v2, {}, s * s);
      g = w * fb(v1 + sg * c) * fb(v2 - sg * c);
      l = w * f1 * fb(v2);
    }
    sv += g - l;
    sv2 += (g - l) * (g - l);
    sg_ += g;
    sg2 += g * g;
  }
  const double N = double(samples), k = n * a * a;
  auto se = [&](double sum, double sum2) { return k * std::sqrt((sum2 / N - (sum / N) * (sum / N)) / N); };
  return {k * sv / N, se(sv, sv2), k * sg_ / N, se(sg_, sg2)};
}

}  // namespace

TEST_CASE("bimodal field agrees with a Monte Carlo estimate") {
  const Vec3 u{2.0, 0.0, 0.0};
  const double a = 0.1, n = 10.0;
  auto f = bimodal_field(1.0, u);
  auto q = QuadratureRule::make();
  for (Vec3 v1 : {Vec3{}, Vec3{0.0, 1.0, 0.0}}) {
    const auto t = st_enskog_terms(f, {0.5, 0.5, 0.5}, v1, a, n, q);
    const auto mc = monte_carlo_st(v1, u, a, n, 10'000'000, 20240611);
    MESSAGE("v1.y=" << v1.y << " quadrature " << t.value() << " / gain " << t.gain << "; Monte Carlo " << mc.value
                    << " +- " << mc.value_se << " / gain " << mc.gain << " +- " << mc.gain_se);
    CHECK(std::fabs(t.value() - mc.value) <= 3 * mc.value_se);
    CHECK(std::fabs(t.gain - mc.gain) <= 3 * mc.gain_se);
    CHECK(mc.gain > 100 * mc.gain_se);
  }
}

TEST_CASE("tensor and aligned rules agree on a non-equilibrium field") {
  auto f = bimodal_field(1.0, {1.0, 0.0, 0.0});
  for (Vec3 v1 : {Vec3{}, Vec3{0.5, 1.0, -0.5}}) {
    const double t = st_enskog(f, {0.5, 0.5, 0.5}, v1, 0.1, 10.0, QuadratureRule::make());
    const double al = st_enskog(f, {0.5, 0.5, 0.5}, v1, 0.1, 10.0, QuadratureRule::make_aligned());
    CHECK(al == doctest::Approx(t).epsilon(1e-4));
  }
}

TEST_CASE("quadratic scaling and the mass convention") {
  auto f = shear_flow_field(1.0, 0.5);
  auto q = QuadratureRule::make(8, 16, 12);
  const TorusPoint r1{0.1, 0.3, 0.6};
  const Vec3 v1{0.4, -0.2, 0.9};
  const double a = 0.1, n = 10.0, c = 3.0;
  const auto base = st_enskog_terms(f, r1, v1, a, n, q);
  const auto big = st_enskog_terms(scaled(f, c), r1, v1, a, n, q);
  CHECK(big.gain == doctest::Approx(c * c * base.gain).epsilon(1e-13));
  CHECK(big.loss == doctest::Approx(c * c * base.loss).epsilon(1e-13));

  // integral M = N m; the mass-normalized field is n m times the volume-normalized one
  const double m = 2.5;
  PhaseField fm = scaled(f, n * m);
  fm.normalization = Normalization::Mass;
  fm.particle_mass = m;
  const auto mass = st_enskog_terms(fm, r1, v1, a, n, q);
  CHECK(mass.gain == doctest::Approx(n * m * base.gain).epsilon(1e-13));
  CHECK(mass.loss == doctest::Approx(n * m * base.loss).epsilon(1e-13));
  CHECK(collision_prefactor(fm, n) == doctest::Approx(1.0 / m));
}

TEST_CASE("uniform fields: Enskog equals Boltzmann bitwise") {
  auto f = bimodal_field(1.0, {0.8, 0.3, 0.0}, 0.7);
  auto q = QuadratureRule::make(8, 16, 12);
  for (Vec3 v1 : {Vec3{}, Vec3{1, 1, 0}}) {
    CHECK(st_enskog(f, {0.9, 0.1, 0.5}, v1, 0.2, 5.0, q) == st_boltzmann(f, {0.9, 0.1, 0.5}, v1, 0.2, 5.0, q));
  }
  // the same field without the uniform flag takes the shifted path and must agree too
  PhaseField g = f;
  g.uniform_in_r = false;
  const double e = st_enskog(g, {0.9, 0.1, 0.5}, {1, 1, 0}, 0.2, 5.0, q);
  CHECK(e == doctest::Approx(st_boltzmann(f, {0.9, 0.1, 0.5}, {1, 1, 0}, 0.2, 5.0, q)).epsilon(1e-14));
}

TEST_CASE("Enskog-Boltzmann gap is first order in the diameter at fixed n a^2") {
  auto q = QuadratureRule::make(8, 16, 12);
  for (const auto& f : {modulated_maxwellian(1.0), shear_flow_field(1.0, 0.5)}) {
    for (Vec3 v1 : {Vec3{0.8, 0.3, -0.2}, Vec3{-1.0, 0.6, 0.4}}) {
      const TorusPoint r1{0.05, 0.1, 0.3};
      auto gap = [&](double a) {
        const double n = 0.1 / (a * a);
        const auto p = st_both(f, r1, v1, a, n, q);
        return std::fabs(p.enskog.value() - p.boltzmann.value());
      };
      const double ratio = gap(0.1) / gap(0.05);
      CHECK(ratio >= 1.6);
      CHECK(ratio <= 2.4);
    }
  }
}

TEST_CASE("collision invariants under the aligned rule") {
  // outer integral over v1 with a Hermite rule; the bimodal field is even in y, z
  auto f = bimodal_field(1.0, {1.0, 0.0, 0.0});
  auto q = QuadratureRule::make_aligned(8, 16, 20, 20, 1.0, 7.0);
  auto g = gauss_hermite(8);
  double m[5] = {0, 0, 0, 0, 0}, loss = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (std::size_t j = 0; j < g.nodes.size(); ++j)
      for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const Vec3 v{g.nodes[i], g.nodes[j], g.nodes[k]};
        const double w = g.weights[i] * g.weights[j] * g.weights[k];
        const auto t = st_enskog_terms(f, {0.5, 0.5, 0.5}, v, 0.1, 10.0, q);
        const double s = t.value();
        m[0] += w * s;
        m[1] += w * s * v.x;
        m[2] += w * s * v.y;
        m[3] += w * s * v.z;
        m[4] += w * s * norm2(v);
        loss += w * t.loss;
      }
  for (double x : m) CHECK(std::fabs(x) <= 1e-5 * loss);
}

TEST_CASE("Vlasov term: uniform density cancels") {
  auto f = uniform_maxwellian(1.0);
  auto pot = PairPotential::quartic_bump(0.7, 0.3);
  auto ball = SpatialQuadrature::ball(0.3, 12, 8, 16);
  auto q = QuadratureRule::make(4, 8, 6);
  for (TorusPoint r1 : {TorusPoint{0.5, 0.5, 0.5}, TorusPoint{0.01, 0.99, 0.3}}) {
    CHECK(max_abs(mean_field_gradient(f, r1, pot, ball, q)) <= 1e-10);
    CHECK(std::fabs(vlasov_term(f, r1, {0.3, 0.1, -0.2}, pot, 10.0, ball, q)) <= 1e-10);
  }
  CHECK_THROWS_AS(SpatialQuadrature::ball(0.3, 4, 4, 7), std::invalid_argument);
}

TEST_CASE("Vlasov term: narrow sources match direct summation") {
  const double L = 1.0, w = 0.004;
  const std::vector<TorusPoint> centers{{0.45, 0.5, 0.5}, {0.95, 0.45, 0.6}};
  const std::vector<double> mass{1.0, 0.5};
  PhaseField f;
  f.L = L;
  f.rho = [=](const TorusPoint& r) {
    double s = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) s += mass[k] * bump3(min_image(r, centers[k], L), w);
    return s;
  };
  f.f = [rho = f.rho](const TorusPoint& r, const Vec3& v) { return rho(r) * gauss3(v, {}, 1.0); };
  auto pot = PairPotential::quartic_bump(0.7, 0.3);
  auto grid = SpatialQuadrature::patches(centers, w, 8, L);
  auto q = QuadratureRule::make(4, 8, 6);

  for (TorusPoint r1 : {TorusPoint{0.6, 0.55, 0.45}, TorusPoint{0.8, 0.5, 0.55}, TorusPoint{0.5, 0.5, 0.5}}) {
    Vec3 direct;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Vec3 d = min_image(r1, centers[k], L);
      const double s = norm(d);
      if (s < pot.cutoff) direct += d * (mass[k] * pot.slope(s) / s);
    }
    const Vec3 g = mean_field_gradient(f, r1, pot, grid, q);
    CHECK(norm(direct) > 0.0);
    CHECK(max_abs(g - direct) <= 1e-3 * max_abs(direct));

    const Vec3 v1{0.3, -0.4, 0.2};
    const double expected = 10.0 / pot.m * dot(direct, v1 * (-gauss3(v1, {}, 1.0))) * f.rho(r1);
    const double got = vlasov_term(f, r1, v1, pot, 10.0, grid, q);
    CHECK(std::fabs(got - expected) <= 1e-3 * std::fabs(expected) + 1e-300);
  }
}

TEST_CASE("condition 11: uniform Maxwellian and separated blobs") {
  auto samples = sample_condition_11_set(2000, 1.0, 1.0, 7);
  for (const auto& s : samples) REQUIRE(dot(s.v2 - s.v1, s.sigma) >= 0.0);
  auto r = check_condition_11(uniform_maxwellian(1.0), 0.1, samples);
  CHECK(r.max_violation <= 1e-12);
  CHECK(r.max_violation <= r.noise_floor);
  CHECK(r.noise_floor > 0.0);

  // compact blobs of radius 0.02, centers 0.2 apart, a = 0.1
  const double er = 0.02;
  const std::vector<TorusPoint> centers{{0.3, 0.5, 0.5}, {0.5, 0.5, 0.5}};
  PhaseField blobs;
  blobs.f = [=](const TorusPoint& r, const Vec3& v) {
    double s = 0.0;
    for (const auto& c : centers) s += bump3(min_image(r, c, 1.0), er) * gauss3(v, {}, 1.0);
    return s;
  };
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ud(-er, er);
  std::vector<Condition11Sample> inside;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    auto s = samples[k];
    const auto& c = centers[k % 2];
    s.r1 = wrap({c.x + ud(gen), c.y + ud(gen), c.z + ud(gen)}, 1.0);
    inside.push_back(s);
  }
  auto rb = check_condition_11(blobs, 0.1, inside);
  CHECK(rb.max_violation == 0.0);
}

TEST_CASE("condition 11: product of Maxwellian and spatial profile vs local Maxwellian with shear") {
  auto samples = sample_condition_11_set(10000, 1.0, 1.0, 11);
  // M(v) g(x): both products carry g(r1) g(r1 - a sigma) and the velocity parts agree
  auto mod = check_condition_11(modulated_maxwellian(1.0), 0.1, samples);
  CHECK(mod.max_violation <= mod.noise_floor);
  // a position-dependent mean velocity breaks the invariance
  auto shear = check_condition_11(shear_flow_field(1.0, 0.5), 0.1, samples);
  CHECK(shear.max_violation > 5 * shear.noise_floor);
  CHECK(shear.worst_index < samples.size());
}
