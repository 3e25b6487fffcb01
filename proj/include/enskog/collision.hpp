#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "enskog/bev.hpp"
#include "enskog/quadrature.hpp"
#include "enskog/torus.hpp"
#include "enskog/vec3.hpp"

namespace enskog {

enum class Normalization {
  Volume,  ///< integral of f over the phase space is V; prefactor n
  Mass,    ///< integral of f is the total mass M; prefactor 1/m
};

/// One-particle density f(r, v) on T^3 x R^3 given by a caller-supplied evaluator.
struct PhaseField {
  std::function<double(const TorusPoint&, const Vec3&)> f;
  /// Optional closed-form rho(r) = integral of f over v; otherwise computed by quadrature.
  std::function<double(const TorusPoint&)> rho;
  double L = 1.0;
  Normalization normalization = Normalization::Volume;
  double particle_mass = 1.0;
  /// Declares f independent of r; shifted evaluations are then skipped.
  bool uniform_in_r = false;
  std::string tag;

  double operator()(const TorusPoint& r, const Vec3& v) const { return f(r, v); }
};

/// Velocity-space Maxwellian density rho0 (2 pi theta)^{-3/2} exp(-|v-u|^2 / (2 theta)).
double maxwellian(const Vec3& v, double rho0, const Vec3& u, double theta);

/// Uniform-in-r Maxwellian field with integral V (Volume convention).
PhaseField uniform_maxwellian(double L, double theta = 1.0, const Vec3& u = {});
/// Uniform-in-r mixture of two equal-weight Maxwellians with means +-u, integral V.
PhaseField bimodal_field(double L, const Vec3& u, double theta = 1.0);
/// M(v) (1 + 1/2 sin(2 pi x / L)), integral V.
PhaseField modulated_maxwellian(double L, double theta = 1.0);
/// Local Maxwellian with density 1 + 1/2 sin(2 pi x/L) and flow
/// (flow_amplitude sin(2 pi y/L), 0, 0); integral V.
PhaseField shear_flow_field(double L, double flow_amplitude, double theta = 1.0);

struct QuadratureRule {
  enum class Kind {
    Tensor,   ///< v2 on a fixed tensor grid (f itself is not truncated); the hemisphere cut is a kink
    Aligned,  ///< per sigma, v2 - v1 = g_n sigma + g_t with g_n > 0: smooth integrand
  };
  Kind kind = Kind::Tensor;
  SphereRule sigma;
  CubeRule v;
  double v_max = 0.0;
  Vec3 v_center;
  Rule1D unit_normal;   ///< Aligned: GL on [-1, 1] mapped onto the g_n range
  Rule1D unit_tangent;  ///< Aligned: GL on [-1, 1] mapped onto each g_t range

  /// GL(n_cos) x uniform(n_phi) directions; n_v^3 GL velocity nodes on
  /// v_center + [-v_max, v_max]^3 with v_max = vmax_factor * velocity_scale.
  static QuadratureRule make(int n_cos = 16, int n_phi = 32, int n_v = 18, double velocity_scale = 1.0,
                             double vmax_factor = 6.0, const Vec3& v_center = {});
  /// Aligned variant: for each sigma node, n_normal GL nodes in g_n and n_tangent^2
  /// in the plane orthogonal to sigma, each spanning the projection of the velocity cube.
  static QuadratureRule make_aligned(int n_cos = 16, int n_phi = 32, int n_normal = 24, int n_tangent = 24,
                                     double velocity_scale = 1.0, double vmax_factor = 6.0,
                                     const Vec3& v_center = {});
  double sigma_weight_sum() const;
};

/// n under the Volume convention, 1/m under the Mass convention.
double collision_prefactor(const PhaseField& f, double n);

struct StTerms {
  double gain = 0.0;
  double loss = 0.0;
  double value() const { return gain - loss; }
};

struct StPair {
  StTerms enskog;
  StTerms boltzmann;
};

/// Gain and loss parts of the Boltzmann-Enskog collision integral at (r1, v1):
/// prefactor a^2 sum over sigma nodes with (v21, sigma) > 0 and v2 nodes of
/// (v21, sigma) [f(r1, v1') f(r1 + a sigma, v2') - f(r1, v1) f(r1 - a sigma, v2)].
/// f outside the velocity cube counts as 0. Throws Error on a negative f value.
StTerms st_enskog_terms(const PhaseField& f, const TorusPoint& r1, const Vec3& v1, double a, double n,
                        const QuadratureRule& quad);
/// Same with both factors at r1.
StTerms st_boltzmann_terms(const PhaseField& f, const TorusPoint& r1, const Vec3& v1, double a, double n,
                           const QuadratureRule& quad);
/// Both variants in one sweep sharing the unshifted evaluations.
StPair st_both(const PhaseField& f, const TorusPoint& r1, const Vec3& v1, double a, double n,
               const QuadratureRule& quad);

double st_enskog(const PhaseField& f, const TorusPoint& r1, const Vec3& v1, double a, double n,
                 const QuadratureRule& quad);
double st_boltzmann(const PhaseField& f, const TorusPoint& r1, const Vec3& v1, double a, double n,
                    const QuadratureRule& quad);

/// Integration points for the r2 integral of the Vlasov term.
struct SpatialQuadrature {
  enum class Kind { Absolute, Relative };
  Kind kind = Kind::Absolute;
  std::vector<Vec3> points;  ///< torus points (Absolute) or offsets from r1 (Relative)
  std::vector<double> weights;

  /// Midpoint grid with M^3 cells over the torus.
  static SpatialQuadrature torus_grid(double L, int M);
  /// Tensor GL patches center + [-half, half]^3 (n^3 nodes each), wrapped onto the torus.
  static SpatialQuadrature patches(const std::vector<TorusPoint>& centers, double half, int n, double L);
  /// Offsets filling the ball of radius `radius` around r1: GL in the radius times
  /// a sphere rule. Symmetric under offset -> -offset, so a uniform rho cancels.
  static SpatialQuadrature ball(double radius, int n_radial, int n_cos, int n_phi);
};

/// rho(r) from the field's closed form or, if absent, from the velocity nodes.
double density_at(const PhaseField& f, const TorusPoint& r, const QuadratureRule& quad);

/// Integral of grad_{r1} Phi(|r1 - r2|) rho(r2) dr2 (minimum-image distances).
Vec3 mean_field_gradient(const PhaseField& f, const TorusPoint& r1, const PairPotential& pot,
                         const SpatialQuadrature& grid, const QuadratureRule& quad);

/// (n/m) [integral of grad Phi rho] . df/dv1 with a central difference of step h_v.
/// Throws Error if the gradient is not finite.
double vlasov_term(const PhaseField& f, const TorusPoint& r1, const Vec3& v1, const PairPotential& pot, double n,
                   const SpatialQuadrature& grid, const QuadratureRule& quad, double h_v = 1e-4);

struct Condition11Sample {
  TorusPoint r1;
  Vec3 v1, v2, sigma;
};

struct Condition11Result {
  double max_violation = 0.0;
  /// Rounding floor of the compared products: 4 eps times the larger product plus
  /// their change under a 4-ulp relative perturbation of the velocities (max over samples).
  double noise_floor = 0.0;
  std::size_t worst_index = 0;
};

/// max over samples of |f(r1,v1) f(r1-a sigma,v2) - f(r1,v1') f(r1-a sigma,v2')|.
Condition11Result check_condition_11(const PhaseField& f, double a, const std::vector<Condition11Sample>& samples);

/// r1 uniform on the torus, v1 and v2 Gaussian with the given scale, sigma uniform
/// on the sphere and flipped onto the hemisphere (v21, sigma) >= 0.
std::vector<Condition11Sample> sample_condition_11_set(std::size_t count, double L, double velocity_scale,
                                                       std::uint64_t seed);

}  // namespace enskog
