#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "enskog/collision.hpp"
#include "enskog/vec3.hpp"

namespace enskog {

/// Density over velocity space on M^3 cell-centred nodes of [-v_max, v_max]^3.
struct VelocityField {
  int M = 0;
  double v_max = 0.0;
  double time = 0.0;
  std::vector<double> values;  ///< index (ix * M + iy) * M + iz

  static VelocityField zeros(int M, double v_max);
  static VelocityField from_function(int M, double v_max, const std::function<double(const Vec3&)>& f);

  double spacing() const { return 2.0 * v_max / M; }
  double cell_volume() const {
    const double h = spacing();
    return h * h * h;
  }
  std::size_t size() const { return values.size(); }
  std::size_t index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(ix) * M + iy) * M + iz;
  }
  std::array<int, 3> lattice(std::size_t idx) const {
    return {static_cast<int>(idx / (std::size_t(M) * M)), static_cast<int>((idx / M) % M), static_cast<int>(idx % M)};
  }
  Vec3 node(std::size_t idx) const;
};

struct Moments {
  double mass = 0.0;
  Vec3 momentum;
  double energy = 0.0;  ///< sum of |v|^2 / 2 f dv
};
Moments moments(const VelocityField& f);

/// rho0 (2 pi theta)^{-3/2} exp(-|v - u|^2 / (2 theta)) sampled at the nodes.
VelocityField maxwellian_field(int M, double v_max, double rho0, const Vec3& u, double theta);
/// Equal-weight mixture of Maxwellians centred at +-u with unit total density.
VelocityField bimodal_velocity_field(int M, double v_max, const Vec3& u, double theta);
/// Continuous Maxwellian sharing mass, mean velocity and temperature with f, sampled on f's grid.
VelocityField matching_maxwellian(const VelocityField& f);

/// Sum of f ln f dv over nodes with f > 0.
double h_functional(const VelocityField& f);
/// v -> -v on the node set (the grid is symmetric).
VelocityField reverse_field(const VelocityField& f);
/// (sum (f - g)^2 dv)^{1/2}; grids must match.
double l2_distance(const VelocityField& f, const VelocityField& g);
/// Trilinear interpolation of the node values, zero outside the node hull.
PhaseField as_phase_field(const VelocityField& f, double L = 1.0);

struct KineticOptions {
  enum class Operator {
    /// Conservative discrete-velocity model: frozen lattice collision channels
    /// drawn by importance sampling, each conserving mass, momentum and energy exactly.
    Lattice,
    /// Nodewise Boltzmann-Enskog integral of the interpolated field (not conservative; small grids).
    Quadrature,
  };
  Operator op = Operator::Lattice;
  std::size_t channel_draws = 1'000'000;  ///< Lattice: sampled (v1, v2, outgoing) triples; each is also mirrored
  double proposal_scale = 1.5;            ///< Lattice: Gaussian width of the node proposal
  double proposal_uniform = 0.3;          ///< Lattice: uniform share of the proposal (bounds tail weights)
  std::uint64_t seed = 1;
  QuadratureRule quad = QuadratureRule::make(8, 16, 12);  ///< Quadrature mode only
  double clip_budget = 1e-6;                               ///< max clipped mass fraction per step
  double stability_factor = 0.1;
  unsigned threads = 1;
};

struct StepInfo {
  double clipped_mass = 0.0;
  double dt_max = 0.0;
};

/// Space-homogeneous solver for df/dt = St f with RK4 stepping.
class HomogeneousSolver {
 public:
  HomogeneousSolver(int M, double v_max, double a, double n, KineticOptions opt = {});

  /// St f at every node.
  std::vector<double> collision_term(const VelocityField& f) const;
  /// stability_factor / (n a^2 <loss rate>), <.> the mass-weighted mean over f.
  double stability_bound(const VelocityField& f) const;
  /// One RK4 step; negative values are clipped and the clipped mass reported.
  /// Throws Error if dt exceeds the stability bound or the clipped mass exceeds the budget.
  VelocityField step(const VelocityField& f, double dt, StepInfo* info = nullptr) const;

  std::size_t channel_count() const { return channels_.size(); }
  /// Node indices (i, j, k, l) of a Lattice channel (v_i, v_j) -> (v_k, v_l).
  std::array<std::uint32_t, 4> channel_nodes(std::size_t c) const {
    const auto& ch = channels_.at(c);
    return {ch.i, ch.j, ch.k, ch.l};
  }
  const KineticOptions& options() const { return opt_; }

 private:
  struct Channel {
    std::uint32_t i, j, k, l;
    double w;
  };
  void build_channels();
  void check_grid(const VelocityField& f) const;
  int M_;
  double v_max_, a_, n_;
  KineticOptions opt_;
  std::vector<Channel> channels_;
  // per-node incidence: channel index * 2 + (1 if the node is outgoing)
  std::vector<std::uint32_t> incidence_start_;
  std::vector<std::uint64_t> incidence_;
};

struct KineticSample {
  double t = 0.0;
  Moments m;
  double H = 0.0;
  double clipped_mass = 0.0;
};
KineticSample observe(const VelocityField& f, double clipped_mass = 0.0);

/// Header t,mass,px,py,pz,energy,H.
void write_time_series_csv(std::ostream& os, const std::vector<KineticSample>& series);
/// Header vx,vy,vz,f.
void write_field_csv(std::ostream& os, const VelocityField& f);
/// JSON with grid extents, M, spacing and time.
std::string field_header_json(const VelocityField& f);

}  // namespace enskog
