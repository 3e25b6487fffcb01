#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "enskog/blobs.hpp"
#include "enskog/error.hpp"
#include "enskog/quadrature.hpp"

using namespace enskog;

namespace {

// particle 0 strikes 1 near t = 0.15, then 1 strikes 2 near t = 0.33
ParticleConfig three_body() {
  return ParticleConfig::from_raw(0.1, 1.0, {{0.2, 0.5, 0.5}, {0.45, 0.52, 0.5}, {0.7, 0.5, 0.53}},
                                  {{1, 0, 0}, {0, 0, 0}, {0, 0, 0}});
}

ParticleConfig head_on() {
  return ParticleConfig::from_raw(0.1, 1.0, {{0.3, 0.5, 0.5}, {0.6, 0.5, 0.5}}, {{1, 0, 0}, {0, 0, 0}});
}

}  // namespace

TEST_CASE("mollifier kernel") {
  const auto gl = gauss_legendre(4, -1.0, 1.0);
  double one = 0.0, second = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    one += gl.weights[i] * Mollifier::bump(gl.nodes[i]);
    second += gl.weights[i] * gl.nodes[i] * gl.nodes[i] * Mollifier::bump(gl.nodes[i]);
  }
  CHECK(std::fabs(std::pow(one, 6) - 1.0) <= 1e-10);
  CHECK(std::sqrt(second) == doctest::Approx(Mollifier::bump_std()).epsilon(1e-12));
  CHECK(Mollifier::bump(1.0) == 0.0);
  CHECK(Mollifier::bump(-1.0) == 0.0);
  CHECK(Mollifier::bump(0.0) == 0.9375);

  Mollifier m{0.02, 0.05};
  CHECK(m.peak() == doctest::Approx(std::pow(0.9375, 6) / (std::pow(0.02, 3) * std::pow(0.05, 3))).epsilon(1e-14));
  CHECK(m.density({0.02, 0, 0}, {}) == 0.0);
  CHECK(m.density({}, {0, 0, -0.05}) == 0.0);
  CHECK(m.density({0.0199, 0, 0}, {}) > 0.0);
  CHECK_THROWS_AS((Mollifier{0.0, 0.1}.density({}, {})), std::invalid_argument);
  CHECK_THROWS_AS((Mollifier{-1.0, 0.1}.validate()), std::invalid_argument);

  Rng rng = make_rng(3, "test.bump");
  double s1 = 0.0, s2 = 0.0, lo = 1.0, hi = -1.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = Mollifier::sample_bump(rng);
    s1 += x;
    s2 += x * x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  CHECK(lo >= -1.0);
  CHECK(hi <= 1.0);
  CHECK(std::fabs(s1 / n) <= 3.0 * Mollifier::bump_std() / std::sqrt(double(n)));
  CHECK(std::sqrt(s2 / n) == doctest::Approx(Mollifier::bump_std()).epsilon(0.01));
}

TEST_CASE("blob initial data") {
  const auto g = three_body();
  Mollifier m{0.02, 0.1};
  const auto f = make_blob_initial(g, m);
  const double inv_n = 1.0 / g.concentration();
  CHECK(f(g.positions[1], g.velocities[1]) == doctest::Approx(inv_n * m.peak()).epsilon(1e-14));
  CHECK(f(wrap({0.3, 0.5, 0.5}, 1.0), {}) == 0.0);
  CHECK(f(g.positions[0], {0.5, 0, 0}) == 0.0);

  // 6-D Gauss-Legendre over each blob's support (the bump is a quartic: 4 nodes per axis are exact)
  const auto gr = gauss_legendre(4, -m.eps_r, m.eps_r), gv = gauss_legendre(4, -m.eps_v, m.eps_v);
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 q = g.positions[i].as_vec(), w = g.velocities[i];
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) {
          const TorusPoint r = wrap(q + Vec3{gr.nodes[a], gr.nodes[b], gr.nodes[c]}, 1.0);
          const double wr = gr.weights[a] * gr.weights[b] * gr.weights[c];
          double rho = 0.0;
          for (int d = 0; d < 4; ++d)
            for (int e = 0; e < 4; ++e)
              for (int h = 0; h < 4; ++h)
                rho += gv.weights[d] * gv.weights[e] * gv.weights[h] * f(r, w + Vec3{gv.nodes[d], gv.nodes[e], gv.nodes[h]});
          CHECK(rho == doctest::Approx(f.rho(r)).epsilon(1e-12));
          total += wr * rho;
        }
  }
  CHECK(std::fabs(total - g.volume()) <= 1e-6);

  CHECK_THROWS_AS(make_blob_initial(g, {0.1, 0.1}), ConfigError);
  CHECK_THROWS_AS(make_blob_initial(g, {0.0, 0.1}), ConfigError);
}

TEST_CASE("draw_ensemble") {
  const auto g = three_body();
  auto zero = draw_ensemble(g, {0.0, 0.0}, 5, 1);
  for (const auto& c : zero.samples) CHECK(state_distance(c, g) == 0.0);

  Mollifier m{0.01, 0.02};
  const std::size_t S = 4000;
  auto ens = draw_ensemble(g, m, S, 42);
  CHECK(ens.size() == S);
  for (const auto& c : ens.samples) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      CHECK(max_abs(min_image(c.positions[k], g.positions[k], 1.0)) < m.eps_r);
      CHECK(max_abs(c.velocities[k] - g.velocities[k]) < m.eps_v);
    }
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    Vec3 mean;
    for (const auto& c : ens.samples) mean += min_image(c.positions[k], g.positions[k], 1.0);
    mean = mean / double(S);
    CHECK(max_abs(mean) <= 3.0 * m.eps_r * Mollifier::bump_std() / std::sqrt(double(S)));
  }
  auto again = draw_ensemble(g, m, S, 42);
  auto other = draw_ensemble(g, m, S, 43);
  CHECK(state_distance(again.samples[17], ens.samples[17]) == 0.0);
  CHECK(state_distance(other.samples[17], ens.samples[17]) > 0.0);
  CHECK_THROWS_AS(draw_ensemble(g, {0.08, 0.0}, 10, 1), ConfigError);
}

TEST_CASE("flow_ensemble") {
  const auto g = three_body();
  auto ens = draw_ensemble(g, {0.01, 0.01}, 50, 5);
  auto same = flow_ensemble(ens, 0.0);
  for (std::size_t s = 0; s < ens.size(); ++s) CHECK(state_distance(same.samples[s], ens.samples[s]) == 0.0);

  FlowOptions threaded;
  threaded.threads = 3;
  auto a = flow_ensemble(ens, 0.5), b = flow_ensemble(ens, 0.5, threaded);
  for (std::size_t s = 0; s < ens.size(); ++s) CHECK(state_distance(a.samples[s], b.samples[s]) == 0.0);
  CHECK(a.time() == doctest::Approx(0.5));

  // one particle: every sample drifts freely
  auto one = ParticleConfig::from_raw(0.1, 1.0, {{0.5, 0.5, 0.5}}, {{0.3, -0.2, 0.1}});
  auto e1 = draw_ensemble(one, {0.02, 0.05}, 100, 9);
  auto f1 = flow_ensemble(e1, 2.0);
  for (std::size_t s = 0; s < e1.size(); ++s) {
    const auto& c0 = e1.samples[s];
    const auto expect = translate(c0.positions[0], c0.velocities[0] * 2.0, 1.0);
    CHECK(torus_distance(f1.samples[s].positions[0], expect, 1.0) <= 1e-14);
    CHECK(f1.samples[s].velocities[0] == c0.velocities[0]);
  }

  // head-on pair: after the reference collision the clouds centre on the exchanged velocities.
  // The impact parameter (from eps_r and from eps_v times the flight time) biases the mean by
  // O((b/a)^2) against a noise of O(eps_v), so both widths are small.
  const auto h = head_on();
  const std::size_t S = 2000;
  auto eh = flow_ensemble(draw_ensemble(h, {0.0001, 0.0002}, S, 3), 0.4);
  const Vec3 post[2] = {{0, 0, 0}, {1, 0, 0}};
  for (std::size_t k = 0; k < 2; ++k) {
    Vec3 m, m2;
    for (const auto& c : eh.samples) {
      const Vec3 d = c.velocities[k] - post[k];
      m += d;
      for (int q = 0; q < 3; ++q) m2[q] += d[q] * d[q];
    }
    m = m / double(S);
    for (int q = 0; q < 3; ++q) {
      const double se = std::sqrt((m2[q] / S - m[q] * m[q]) / (S - 1));
      // six components at once: 4 SE each keeps the family-wise level near 3 SE
      CHECK_MESSAGE(std::fabs(m[q]) <= 4.0 * se, "particle " << k << " component " << q);
    }
  }
}

TEST_CASE("coherence_time") {
  const auto g = three_body();
  auto zero = draw_ensemble(g, {0.0, 0.0}, 3, 1);
  CHECK(coherence_time(zero, 1.0, 0.025) == 1.0);

  // one particle without velocity spread never leaves its blob
  auto one = ParticleConfig::from_raw(0.1, 1.0, {{0.5, 0.5, 0.5}}, {{0.3, -0.2, 0.1}});
  CHECK(coherence_time(draw_ensemble(one, {0.01, 0.0}, 200, 2), 5.0, 0.025) == 5.0);

  // with velocity spread the exit time is the first root of |d0 + dw t| = threshold
  auto spread = draw_ensemble(one, {0.01, 0.02}, 200, 2);
  double expect = 5.0;
  for (const auto& c : spread.samples) {
    const Vec3 d = min_image(c.positions[0], one.positions[0], 1.0), dw = c.velocities[0] - one.velocities[0];
    const double A = norm2(dw), B = dot(d, dw), C = norm2(d) - 0.025 * 0.025;
    expect = std::min(expect, (-B + std::sqrt(B * B - A * C)) / A);
  }
  CHECK(coherence_time(spread, 5.0, 0.025) == doctest::Approx(expect).epsilon(1e-12));

  // halving the widths never shortens the window
  double prev = -1.0;
  for (double e : {0.02, 0.01, 0.005, 0.0025}) {
    const double T = coherence_time(draw_ensemble(g, {e, e}, 500, 7), 1.0, 0.025);
    MESSAGE("eps " << e << " T " << T);
    CHECK(T >= prev);
    prev = T;
  }
  CHECK(prev > 0.331);  // past both reference collisions at the smallest width

  FlowOptions bev;
  bev.potential = PairPotential::quartic_bump(0.05, 0.15);
  bev.dt = 2e-3;
  const double Tb = coherence_time(draw_ensemble(g, {0.005, 0.005}, 20, 7), 0.5, 0.025, bev);
  CHECK(Tb > 0.0);
  CHECK(Tb <= 0.5);

  CHECK_THROWS_AS(coherence_time(zero, 1.0, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(coherence_time(zero, -1.0, 0.01), std::invalid_argument);
}

TEST_CASE("marginal estimators") {
  auto g = ParticleConfig::from_raw(0.1, 1.0, {{0.2, 0.5, 0.5}, {0.5, 0.5, 0.5}, {0.8, 0.5, 0.5}},
                                    {{0.5, 0, 0}, {0, 0.5, 0}, {0, 0, 0.5}});
  const std::size_t S = 2000;
  auto ens = draw_ensemble(g, {0.01, 0.01}, S, 11);
  const auto bw = scott_bandwidth(ens, 6);
  CHECK(bw.r.x == doctest::Approx(0.01 * std::pow(double(S), -0.1)).epsilon(0.05));

  // normalization: uniform draws over each cloud's bounding box, overlaps shared by box count
  Rng rng = make_rng(1, "test.norm");
  double integral = 0.0;
  const int draws = 20000;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec3 hr = Vec3{1, 1, 1} * 0.01 + bw.r, hv = Vec3{1, 1, 1} * 0.01 + bw.v;
    const double vol = 64.0 * hr.x * hr.y * hr.z * hv.x * hv.y * hv.z;
    double acc = 0.0;
    for (int i = 0; i < draws; ++i) {
      Vec3 dr, dv;
      for (int d = 0; d < 3; ++d) {
        dr[d] = (2.0 * uniform01(rng) - 1.0) * hr[d];
        dv[d] = (2.0 * uniform01(rng) - 1.0) * hv[d];
      }
      acc += estimate_f1(ens, {translate(g.positions[k], dr, 1.0), g.velocities[k] + dv}, bw).value;
    }
    integral += vol * acc / draws;  // the boxes are disjoint here
  }
  MESSAGE("integral of F1 " << integral);
  CHECK(std::fabs(integral - g.volume()) <= 5.0 / std::sqrt(double(S)) * g.volume());

  // far from every cloud all estimates vanish exactly
  const PhasePoint far{wrap({0.5, 0.1, 0.1}, 1.0), {}}, far2{wrap({0.5, 0.9, 0.1}, 1.0), {}};
  CHECK(estimate_f1(ens, far, bw).value == 0.0);
  auto fg = factorization_gap(ens, {{far, far2}});
  CHECK(fg.probes[0].gap == 0.0);
  CHECK(fg.max_gap == 0.0);

  // t = 0, two cloud centres: independent clouds factorize within the noise
  auto t0 = factorization_gap(ens, {reference_probe(ens, 0, 1), reference_probe(ens, 1, 2), reference_probe(ens, 0, 2)});
  for (const auto& p : t0.probes) {
    CHECK(p.f2 > 0.0);
    CHECK(std::fabs(p.gap) <= 3.0 * p.se);
  }

  // closer than a: excluded exactly
  const PhasePoint x1{g.positions[1], g.velocities[1]};
  const PhasePoint x2{translate(g.positions[1], {0.05, 0, 0}, 1.0), g.velocities[1]};
  CHECK(estimate_f2(ens, x1, x1, bw).value == 0.0);
  CHECK(estimate_f2(ens, x1, x2, bw).value == 0.0);
  CHECK(factorization_gap(ens, {{x1, x2}}).probes[0].excluded);

  // both sides of the collision continuity condition vanish at contact configurations
  const Vec3 sigma{1, 0, 0};
  const PhasePoint c2{translate(g.positions[1], -0.1 * sigma, 1.0), g.velocities[0]};
  const auto cr = collide(g.velocities[1], g.velocities[0], sigma);
  CHECK(estimate_f2(ens, x1, c2, bw).value == 0.0);
  CHECK(estimate_f2(ens, {g.positions[1], cr.v1p}, {c2.r, cr.v2p}, bw).value == 0.0);

  // relabelling the particles leaves every estimator unchanged
  auto perm = ens;
  auto swap = [](ParticleConfig& c) {
    std::swap(c.positions[0], c.positions[2]);
    std::swap(c.velocities[0], c.velocities[2]);
  };
  swap(perm.reference);
  for (auto& c : perm.samples) swap(c);
  const auto [p1, p2] = reference_probe(ens, 0, 1);
  CHECK(estimate_f1(perm, p1, bw).value == doctest::Approx(estimate_f1(ens, p1, bw).value).epsilon(1e-12));
  CHECK(estimate_f2(perm, p1, p2, bw).value == doctest::Approx(estimate_f2(ens, p1, p2, bw).value).epsilon(1e-12));

  auto degenerate = draw_ensemble(g, {0.0, 0.0}, 10, 1);
  CHECK_THROWS_AS(scott_bandwidth(degenerate, 6), std::invalid_argument);
}

TEST_CASE("limit_trajectory_error") {
  const auto g = three_body();
  auto zero = limit_trajectory_error(g, {{0.0, 0.0}}, 0.6, 10, 1);
  CHECK(zero[0].error == 0.0);

  auto one = ParticleConfig::from_raw(0.1, 1.0, {{0.5, 0.5, 0.5}}, {{0.3, -0.2, 0.1}});
  for (double e : {0.02, 0.005}) {
    auto r = limit_trajectory_error(one, {{e, 0.0}}, 1.5, 2000, 4);
    CHECK(r[0].error <= 4.0 * r[0].se);
  }

  // two reference collisions before the probe: the centroid error shrinks with the width
  std::vector<Mollifier> ms = {{0.02, 0.02}, {0.01, 0.01}, {0.005, 0.005}};
  auto errs = limit_trajectory_error(g, ms, 0.6, 2000, 11);
  for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
    MESSAGE("eps " << errs[i].eps_r << " error " << errs[i].error << " se " << errs[i].se);
    CHECK(errs[i].error - errs[i + 1].error > 3.0 * std::hypot(errs[i].se, errs[i + 1].se));
  }

  // head-on pair touches at t = 0.2
  CHECK_THROWS_WITH_AS(limit_trajectory_error(head_on(), ms, 0.2, 10, 1), "probe at contact", Error);
}

TEST_CASE("ensemble CSV and report JSON") {
  const auto g = three_body();
  auto ens = draw_ensemble(g, {0.01, 0.01}, 4, 1);
  std::ostringstream os;
  write_ensemble_csv(os, ens);
  const std::string body = os.str();
  CHECK(body.rfind("sample,particle,t,qx,qy,qz,wx,wy,wz\n", 0) == 0);
  CHECK(std::count(body.begin(), body.end(), '\n') == 1 + 3 * 5);

  BlobReport r;
  r.eps_r = 0.01;
  r.eps_v = 0.02;
  r.S = 4;
  r.T_epsilon = 0.2;
  r.centroid_errors = limit_trajectory_error(g, {{0.01, 0.01}}, 0.6, 50, 9);
  const std::string a = blob_report_json(r);
  auto j = nlohmann::json::parse(a);
  for (const char* key : {"epsilon_r", "epsilon_v", "S", "T_epsilon", "factorization_gap", "centroid_errors"})
    CHECK(j.contains(key));
  CHECK(j["centroid_errors"].size() == 1);
  r.centroid_errors = limit_trajectory_error(g, {{0.01, 0.01}}, 0.6, 50, 9);
  CHECK(blob_report_json(r) == a);
}
