#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "enskog/blobs.hpp"
#include "enskog/hard_spheres.hpp"
#include "enskog/homogeneous.hpp"

namespace enskog {

/// Outcome of one reversal scenario. Which block is filled depends on class_tag.
struct ReversalReport {
  std::string scenario;
  std::string class_tag;  ///< "particle", "smooth-grid" or "blob"
  double t = 0.0;
  std::string verdict;

  // particle and blob
  double tolerance = 0.0;
  double position_error = 0.0;
  double velocity_error = 0.0;
  double max_error = 0.0;
  std::size_t forward_collisions = 0;
  std::size_t backward_collisions = 0;

  // smooth-grid
  double t_rev = 0.0;
  double dt = 0.0;
  std::size_t reversal_step = 0;  ///< index into h_series of the first post-reversal sample
  std::vector<KineticSample> h_series;
  double h_tolerance = 0.0;
  double max_h_increase_after = 0.0;  ///< largest single-step rise of H after the reversal
  double h_drop_after = 0.0;          ///< H(t_rev) - H(t_total)
  std::vector<double> checkpoint_slopes;  ///< dH/dt over 10 equal windows
  double condition11_violation = 0.0;
  double condition11_floor = 0.0;

  // blob
  double eps_r = 0.0;
  double eps_v = 0.0;
  std::size_t samples = 0;
  double coherence_time = 0.0;
  bool outside_window = false;
  double max_particle_error = 0.0;  ///< largest run_particle_reversal error over the samples
  bool matches_particle_runs = false;  ///< per-sample errors equal those of run_particle_reversal
};

/// evolve(reverse(evolve(gamma, t)), t) against reverse(gamma). Verdict
/// "reversible" iff the max-norm error is <= tol and both legs see the same
/// number of collisions.
ReversalReport run_particle_reversal(const ParticleConfig& gamma, double t, double tol = 1e-6,
                                     const EvolveOptions& opt = {});

struct SmoothOptions {
  double a = 0.1;
  double n = 10.0;
  double dt = 0.0;  ///< 0: half the stability bound of the initial field
  double L = 1.0;
  std::size_t condition11_samples = 2000;
  std::uint64_t seed = 1;
  KineticOptions kinetic;
};

/// Homogeneous run to t_rev, reverse_field, continue to t_total. Verdict
/// "irreversible" iff H is non-increasing after the reversal (tolerance one
/// clipping budget), drops by more than that tolerance, and the condition-11
/// violation at t_rev exceeds 5x its noise floor; "degenerate (equilibrium)" when
/// H stays flat; otherwise "inconclusive". Throws ConfigError unless
/// 0 <= t_rev < t_total.
ReversalReport run_smooth_irreversibility(const VelocityField& initial, double t_rev, double t_total,
                                          const SmoothOptions& opt = {});

/// Draws an ensemble, flows it t, reverses, flows t again and compares every
/// sample with its reversed initial state. The run is flagged "outside guaranteed
/// window" when t exceeds the measured coherence time (threshold a/4 by default).
ReversalReport run_blob_reversal(const ParticleConfig& gamma, const Mollifier& moll, std::size_t S, double t,
                                 std::uint64_t seed, double tol = 1e-6, const FlowOptions& opt = {},
                                 double threshold = 0.0);

std::string report_json(const ReversalReport& r);
/// t,mass,px,py,pz,energy,H of a smooth-grid report.
void write_h_series_csv(std::ostream& os, const ReversalReport& r);

}  // namespace enskog
