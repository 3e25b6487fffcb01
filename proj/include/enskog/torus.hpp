#pragma once

#include <vector>

#include "enskog/vec3.hpp"

namespace enskog {

/// A point of the flat torus of side L; every coordinate lies in [0, L).
/// Construct through wrap() to keep the invariant.
struct TorusPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 as_vec() const { return {x, y, z}; }
  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
};

/// Reduces p componentwise modulo L into [0, L). Throws on non-finite input or L <= 0.
TorusPoint wrap(const Vec3& p, double L);

/// Shortest displacement d with p = wrap(q + d). Components lie in (-L/2, L/2];
/// exact antipodal ties resolve to +L/2.
Vec3 min_image(const TorusPoint& p, const TorusPoint& q, double L);

/// Translates p by d and wraps the result.
TorusPoint translate(const TorusPoint& p, const Vec3& d, double L);

/// Distance on the torus through the minimum image.
double torus_distance(const TorusPoint& p, const TorusPoint& q, double L);

/// Lattice offsets k*L needed to find the earliest contact of two spheres of
/// diameter a whose relative displacement (taken as a minimum image) moves by at
/// most `horizon` (a length). Always contains the 27 nearest images when
/// horizon > 0; horizon == 0 yields only the zero offset.
/// Throws std::invalid_argument unless 0 < a < L/2 and horizon >= 0.
std::vector<Vec3> image_offsets(double a, double L, double horizon);

}  // namespace enskog
