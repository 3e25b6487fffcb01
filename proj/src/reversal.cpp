#include "enskog/reversal.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "enskog/error.hpp"
#include "enskog/parallel.hpp"

namespace enskog {

namespace {

struct StateError {
  double position = 0.0;
  double velocity = 0.0;
};

StateError compare(const ParticleConfig& x, const ParticleConfig& y) {
  StateError e;
  for (std::size_t k = 0; k < x.size(); ++k) {
    e.position = std::max(e.position, max_abs(min_image(x.positions[k], y.positions[k], x.L)));
    e.velocity = std::max(e.velocity, max_abs(x.velocities[k] - y.velocities[k]));
  }
  return e;
}

/// Condition-11 samples on lattice channels: all four velocities are grid nodes.
std::vector<Condition11Sample> channel_samples(const HomogeneousSolver& s, const VelocityField& f, std::size_t count,
                                               double L) {
  std::vector<Condition11Sample> out;
  const std::size_t C = s.channel_count();
  if (C == 0) return out;
  const std::size_t stride = std::max<std::size_t>(1, C / std::max<std::size_t>(count, 1));
  for (std::size_t c = 0; c < C && out.size() < count; c += stride) {
    const auto [i, j, k, l] = s.channel_nodes(c);
    const Vec3 d = f.node(k) - f.node(i);
    if (norm(d) == 0.0) continue;
    Condition11Sample smp;
    smp.r1 = wrap({0.5 * L, 0.5 * L, 0.5 * L}, L);
    smp.v1 = f.node(i);
    smp.v2 = f.node(j);
    smp.sigma = d / norm(d);
    out.push_back(smp);
  }
  return out;
}

}  // namespace

ReversalReport run_particle_reversal(const ParticleConfig& gamma, double t, double tol, const EvolveOptions& opt) {
  if (!(t >= 0.0)) throw ConfigError("reversal time must be >= 0");
  ReversalReport r;
  r.scenario = "particle-reversal";
  r.class_tag = "particle";
  r.t = t;
  r.tolerance = tol;
  const auto fwd = evolve(gamma, t, opt);
  const auto back = evolve(reverse(fwd.config), t, opt);
  const auto e = compare(back.config, reverse(gamma));
  r.position_error = e.position;
  r.velocity_error = e.velocity;
  r.max_error = std::max(e.position, e.velocity);
  r.forward_collisions = fwd.collisions;
  r.backward_collisions = back.collisions;
  r.verdict = r.max_error <= tol && fwd.collisions == back.collisions ? "reversible" : "not reversible within tolerance";
  return r;
}

ReversalReport run_smooth_irreversibility(const VelocityField& initial, double t_rev, double t_total,
                                          const SmoothOptions& opt) {
  if (!(t_rev >= 0.0) || !(t_rev < t_total)) throw ConfigError("reversal needs 0 <= t_rev < t_total");
  HomogeneousSolver solver(initial.M, initial.v_max, opt.a, opt.n, opt.kinetic);
  ReversalReport r;
  r.scenario = "smooth-irreversibility";
  r.class_tag = "smooth-grid";
  r.t = t_total;
  r.t_rev = t_rev;
  r.dt = opt.dt > 0.0 ? opt.dt : 0.5 * solver.stability_bound(initial);
  const auto steps = static_cast<std::size_t>(std::llround(t_total / r.dt));
  const auto rev = static_cast<std::size_t>(std::llround(t_rev / r.dt));
  if (rev >= steps) throw ConfigError("t_rev must fall at least one time step before t_total");
  r.h_tolerance = opt.kinetic.clip_budget * std::max(1.0, moments(initial).mass);

  VelocityField f = initial;
  r.h_series.push_back(observe(f));
  for (std::size_t k = 1; k <= steps; ++k) {
    if (k - 1 == rev) {
      const PhaseField pf = as_phase_field(f, opt.L);
      const auto c11 = check_condition_11(pf, opt.a, channel_samples(solver, f, opt.condition11_samples, opt.L));
      r.condition11_violation = c11.max_violation;
      r.condition11_floor = c11.noise_floor;
      f = reverse_field(f);
      r.reversal_step = r.h_series.size();
    }
    StepInfo info;
    f = solver.step(f, r.dt, &info);
    r.h_series.push_back(observe(f, info.clipped_mass));
  }

  const auto& hs = r.h_series;
  const double h_rev = hs[r.reversal_step - 1].H;
  for (std::size_t k = r.reversal_step; k < hs.size(); ++k)
    r.max_h_increase_after = std::max(r.max_h_increase_after, hs[k].H - hs[k - 1].H);
  r.h_drop_after = h_rev - hs.back().H;
  for (int w = 0; w < 10; ++w) {
    const std::size_t a = w * (hs.size() - 1) / 10, b = (w + 1) * (hs.size() - 1) / 10;
    r.checkpoint_slopes.push_back(b > a ? (hs[b].H - hs[a].H) / (hs[b].t - hs[a].t) : 0.0);
  }

  const double h_span = std::fabs(hs.front().H - hs.back().H);
  const bool monotone = r.max_h_increase_after <= r.h_tolerance;
  const bool c11 = r.condition11_violation > 5.0 * r.condition11_floor;
  if (h_span <= r.h_tolerance && !c11)
    r.verdict = "degenerate (equilibrium)";
  else if (monotone && r.h_drop_after > r.h_tolerance && c11)
    r.verdict = "irreversible";
  else
    r.verdict = "inconclusive";
  return r;
}

ReversalReport run_blob_reversal(const ParticleConfig& gamma, const Mollifier& moll, std::size_t S, double t,
                                 std::uint64_t seed, double tol, const FlowOptions& opt, double threshold) {
  if (!(t >= 0.0)) throw ConfigError("reversal time must be >= 0");
  if (threshold == 0.0) threshold = 0.25 * gamma.a;
  ReversalReport r;
  r.scenario = "blob-reversal";
  r.class_tag = "blob";
  r.t = t;
  r.tolerance = tol;
  r.eps_r = moll.eps_r;
  r.eps_v = moll.eps_v;
  r.samples = S;

  const auto ens = draw_ensemble(gamma, moll, S, seed);
  r.coherence_time = coherence_time(ens, t, threshold, opt);
  r.outside_window = r.coherence_time < t;
  const auto back = flow_ensemble(reverse_ensemble(flow_ensemble(ens, t, opt)), t, opt);

  std::vector<StateError> err(S);
  std::vector<double> particle_err(S, 0.0);
  const bool hard_spheres = !opt.potential;
  parallel_for(S, opt.threads, [&](std::size_t s) {
    err[s] = compare(back.samples[s], reverse(ens.initial[s]));
    if (hard_spheres) particle_err[s] = run_particle_reversal(ens.initial[s], t, tol).max_error;
  });
  r.matches_particle_runs = hard_spheres;
  for (std::size_t s = 0; s < S; ++s) {
    r.position_error = std::max(r.position_error, err[s].position);
    r.velocity_error = std::max(r.velocity_error, err[s].velocity);
    r.max_particle_error = std::max(r.max_particle_error, particle_err[s]);
    if (hard_spheres && std::max(err[s].position, err[s].velocity) != particle_err[s]) r.matches_particle_runs = false;
  }
  r.max_error = std::max(r.position_error, r.velocity_error);
  const auto ref = compare(back.reference, reverse(ens.reference_initial));
  r.max_error = std::max({r.max_error, ref.position, ref.velocity});
  r.verdict = r.max_error <= tol ? "reversible" : "not reversible within tolerance";
  if (r.outside_window) r.verdict += " (outside guaranteed window)";
  return r;
}

std::string report_json(const ReversalReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["class"] = r.class_tag;
  j["t"] = r.t;
  if (r.class_tag == "smooth-grid") {
    j["t_rev"] = r.t_rev;
    j["dt"] = r.dt;
    j["steps"] = r.h_series.size() - 1;
    j["H_initial"] = r.h_series.front().H;
    j["H_at_reversal"] = r.h_series[r.reversal_step - 1].H;
    j["H_final"] = r.h_series.back().H;
    j["max_H_increase_after_reversal"] = r.max_h_increase_after;
    j["H_drop_after_reversal"] = r.h_drop_after;
    j["checkpoint_slopes"] = r.checkpoint_slopes;
    j["condition11_violation"] = r.condition11_violation;
    j["condition11_noise_floor"] = r.condition11_floor;
    j["thresholds"] = {{"H_tolerance", r.h_tolerance}, {"condition11_factor", 5.0}};
  } else {
    j["position_error"] = r.position_error;
    j["velocity_error"] = r.velocity_error;
    j["max_error"] = r.max_error;
    if (r.class_tag == "particle") {
      j["forward_collisions"] = r.forward_collisions;
      j["backward_collisions"] = r.backward_collisions;
    } else {
      j["epsilon_r"] = r.eps_r;
      j["epsilon_v"] = r.eps_v;
      j["S"] = r.samples;
      j["coherence_time"] = r.coherence_time;
      j["outside_guaranteed_window"] = r.outside_window;
      j["max_particle_reversal_error"] = r.max_particle_error;
      j["matches_particle_runs"] = r.matches_particle_runs;
    }
    j["thresholds"] = {{"tolerance", r.tolerance}};
  }
  j["verdict"] = r.verdict;
  return j.dump(2);
}

void write_h_series_csv(std::ostream& os, const ReversalReport& r) { write_time_series_csv(os, r.h_series); }

}  // namespace enskog
