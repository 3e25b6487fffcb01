#pragma once

#include <vector>

#include "enskog/vec3.hpp"

namespace enskog {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [lo, hi] (Newton iteration on P_n).
Rule1D gauss_legendre(int n, double lo = -1.0, double hi = 1.0);

/// n-point Gauss-Hermite rule rescaled to integrate g(x) dx directly, with nodes
/// center + scale * sqrt(2) * x_i; exact for g = polynomial * exp(-(x-center)^2 / (2 scale^2)).
Rule1D gauss_hermite(int n, double scale = 1.0, double center = 0.0);

/// Direction rule on the unit sphere: Gauss-Legendre in cos(theta) times a
/// uniform midpoint rule in phi. Weights sum to 4 pi; the node set is closed
/// under sigma -> -sigma when n_phi is even.
struct SphereRule {
  std::vector<Vec3> nodes;
  std::vector<double> weights;
};
SphereRule sphere_rule(int n_cos, int n_phi);

/// Tensor Gauss-Legendre rule on the cube center + [-half, half]^3.
struct CubeRule {
  std::vector<Vec3> nodes;
  std::vector<double> weights;
};
CubeRule cube_rule(int n, double half, const Vec3& center = {});

}  // namespace enskog
