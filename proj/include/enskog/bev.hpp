#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "enskog/hard_spheres.hpp"

namespace enskog {

/// Smooth pair potential Phi(s) with compact support [0, cutoff).
struct PairPotential {
  std::function<double(double)> phi;
  std::function<double(double)> dphi;  ///< dPhi/ds
  double cutoff = 0.0;
  double m = 1.0;

  /// Phi(s) = eps (1 - (s/c)^2)^2 for s < c, 0 beyond; C^1 at the cutoff.
  static PairPotential quartic_bump(double eps, double cutoff, double m = 1.0);
  /// Phi(s) = k/2 (c - s)^2 for s < c.
  static PairPotential harmonic_tail(double k, double cutoff, double m = 1.0);
  /// Phi = 0; evolve_bev then reduces to hard-sphere flight.
  static PairPotential none(double m = 1.0);

  double value(double s) const { return s >= cutoff || !phi ? 0.0 : phi(s); }
  double slope(double s) const { return s >= cutoff || !dphi ? 0.0 : dphi(s); }
  /// Throws std::invalid_argument unless 0 <= cutoff <= L/2, m > 0 and both callables are set (cutoff > 0).
  void validate(double L) const;
};

/// Force on particle i: sum over j != i of -Phi'(s_ij) times the unit vector from j to i.
/// Throws Error when some pair is closer than a (beyond 1e-12 a).
Vec3 total_force(const ParticleConfig& config, const PairPotential& pot, std::size_t i);
double potential_energy(const ParticleConfig& config, const PairPotential& pot);
/// sum m |w|^2 / 2 + sum_{i<j} Phi(s_ij)
double total_energy(const ParticleConfig& config, const PairPotential& pot);

struct EnergySample {
  double t, kinetic, potential, total;
};

struct BevOptions {
  std::size_t max_events = 10'000'000;
  int max_halvings = 30;
  bool record_log = true;
  bool record_energy = true;
  EventObserver observer;
};

struct BevResult {
  ParticleConfig config;
  std::vector<EventRecord> log;
  std::vector<EnergySample> energy;  ///< after every step, starting at t = config.time
  std::size_t collisions = 0;
  std::size_t grazing = 0;
};

/// Velocity Verlet for the smooth force with elastic collisions at contact.
/// The run uses round(t/dt) equal steps (at least one). Inside a step, the first
/// contact on the Verlet position map is bracketed by sampling and bisected to
/// 1e-10 a; the state is advanced to contact, collided and the step resumed.
/// Steps in which some particle would move more than a/8 are split in halves.
/// Throws Error on bracket failure, step underflow or an exhausted event budget.
BevResult evolve_bev(const ParticleConfig& config, const PairPotential& pot, double t, double dt,
                     const BevOptions& options = {});

/// CSV rows t,kinetic,potential,total; the header is written when `header` is set.
void write_energy_csv(std::ostream& os, const std::vector<EnergySample>& energy, bool header);

}  // namespace enskog
