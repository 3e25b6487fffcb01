#include "doctest.h"

#include <cmath>
#include <sstream>

#include "json.hpp"

#include "enskog/error.hpp"
#include "enskog/reversal.hpp"

using namespace enskog;

namespace {

ParticleConfig three_body() {
  return ParticleConfig::from_raw(0.1, 1.0, {{0.2, 0.5, 0.5}, {0.45, 0.52, 0.5}, {0.7, 0.5, 0.53}},
                                  {{1, 0, 0}, {0, 0, 0}, {0, 0, 0}});
}

SmoothOptions smooth_options() {
  SmoothOptions o;
  o.kinetic.channel_draws = 200'000;
  o.condition11_samples = 500;
  return o;
}

}  // namespace

TEST_CASE("particle reversal") {
  auto one = ParticleConfig::from_raw(0.1, 1.0, {{0.1, 0.2, 0.3}}, {{0.7, -0.3, 0.2}});
  auto r1 = run_particle_reversal(one, 3.0);
  CHECK(r1.max_error <= 1e-15);
  CHECK(r1.forward_collisions == 0);
  CHECK(r1.verdict == "reversible");

  auto g = sample_admissible_config(8, 0.1, 1.0, 1.0, 1);
  auto r0 = run_particle_reversal(g, 0.0);
  CHECK(r0.max_error == 0.0);

  auto r = run_particle_reversal(g, 2.0);
  MESSAGE("N=8 t=2 error " << r.max_error << " collisions " << r.forward_collisions);
  CHECK(r.max_error <= 1e-6);
  CHECK(r.forward_collisions == r.backward_collisions);
  CHECK(r.forward_collisions > 0);
  CHECK(r.verdict == "reversible");

  auto loose = run_particle_reversal(g, 2.0, 0.0);
  CHECK(loose.verdict == (loose.max_error == 0.0 ? "reversible" : "not reversible within tolerance"));
  CHECK_THROWS_AS(run_particle_reversal(g, -1.0), ConfigError);
}

TEST_CASE("smooth run: Maxwellian is degenerate") {
  auto mw = maxwellian_field(12, 5.0, 1.0, {}, 1.0);
  auto r = run_smooth_irreversibility(mw, 0.5, 1.0, smooth_options());
  MESSAGE("Maxwellian: violation " << r.condition11_violation << " floor " << r.condition11_floor);
  CHECK(r.condition11_violation <= r.condition11_floor);
  CHECK(std::fabs(r.h_series.front().H - r.h_series.back().H) <= r.h_tolerance);
  CHECK(r.verdict == "degenerate (equilibrium)");
}

TEST_CASE("smooth run: bimodal field is irreversible") {
  auto f = bimodal_velocity_field(12, 5.0, {1.5, 0.0, 0.0}, 1.0);
  auto r = run_smooth_irreversibility(f, 1.0, 2.0, smooth_options());
  MESSAGE("bimodal: violation " << r.condition11_violation << " floor " << r.condition11_floor);
  CHECK(r.verdict == "irreversible");
  CHECK(r.condition11_violation > 5.0 * r.condition11_floor);
  CHECK(r.reversal_step > 1);
  CHECK(r.reversal_step < r.h_series.size());
  for (std::size_t k = 1; k < r.h_series.size(); ++k) CHECK(r.h_series[k].H < r.h_series[k - 1].H);
  CHECK(r.checkpoint_slopes.size() == 10);
  for (double s : r.checkpoint_slopes) CHECK(s < 0.0);

  // reversing at t = 0 is a plain forward run of the reversed field
  auto r0 = run_smooth_irreversibility(f, 0.0, 0.5, smooth_options());
  HomogeneousSolver s(12, 5.0, 0.1, 10.0, smooth_options().kinetic);
  auto g = reverse_field(f);
  for (std::size_t k = 1; k < r0.h_series.size(); ++k) {
    g = s.step(g, r0.dt);
    CHECK(r0.h_series[k].H == h_functional(g));
  }

  std::ostringstream csv;
  write_h_series_csv(csv, r0);
  CHECK(csv.str().rfind("t,mass,px,py,pz,energy,H\n", 0) == 0);
  auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["class"] == "smooth-grid");
  CHECK(j["verdict"] == "irreversible");
  CHECK(j.contains("thresholds"));

  CHECK_THROWS_AS(run_smooth_irreversibility(f, 2.0, 1.0), ConfigError);
  CHECK_THROWS_AS(run_smooth_irreversibility(f, 1.0, 1.0), ConfigError);
}

TEST_CASE("blob reversal") {
  const auto g = three_body();
  auto zero = run_blob_reversal(g, {0.0, 0.0}, 3, 0.6, 1);
  auto particle = run_particle_reversal(g, 0.6);
  CHECK(zero.max_error == particle.max_error);
  CHECK(zero.coherence_time == 0.6);
  CHECK_FALSE(zero.outside_window);

  auto r = run_blob_reversal(g, {0.005, 0.005}, 200, 0.3, 7);
  MESSAGE("blob reversal error " << r.max_error << " T " << r.coherence_time);
  CHECK_FALSE(r.outside_window);
  CHECK(r.matches_particle_runs);
  CHECK(r.max_error <= r.max_particle_error);
  CHECK(r.max_error <= 1e-6);
  CHECK(r.verdict == "reversible");

  auto late = run_blob_reversal(g, {0.01, 0.01}, 50, 1.0, 7);
  CHECK(late.outside_window);
  CHECK(late.verdict.find("outside guaranteed window") != std::string::npos);

  auto j = nlohmann::json::parse(report_json(late));
  CHECK(j["outside_guaranteed_window"] == true);
  CHECK(j["class"] == "blob");
}
