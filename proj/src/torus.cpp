#include "enskog/torus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace enskog {

namespace {

double wrap_coord(double x, double L) {
  double r = x - L * std::floor(x / L);
  // floor rounding can land exactly on L for tiny negative x
  if (r >= L || r < 0.0) r = 0.0;
  return r;
}

double min_image_coord(double d, double L) {
  const double half = 0.5 * L;
  if (d > half) {
    d -= L;
  } else if (d <= -half) {
    d += L;
  }
  return d;
}

}  // namespace

TorusPoint wrap(const Vec3& p, double L) {
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("wrap: box side must be positive");
  if (!is_finite(p)) throw std::invalid_argument("wrap: non-finite coordinate");
  return {wrap_coord(p.x, L), wrap_coord(p.y, L), wrap_coord(p.z, L)};
}

Vec3 min_image(const TorusPoint& p, const TorusPoint& q, double L) {
  if (!std::isfinite(p.x + p.y + p.z + q.x + q.y + q.z)) {
    throw std::invalid_argument("min_image: non-finite coordinate");
  }
  return {min_image_coord(p.x - q.x, L), min_image_coord(p.y - q.y, L), min_image_coord(p.z - q.z, L)};
}

TorusPoint translate(const TorusPoint& p, const Vec3& d, double L) { return wrap(p.as_vec() + d, L); }

double torus_distance(const TorusPoint& p, const TorusPoint& q, double L) { return norm(min_image(p, q, L)); }

std::vector<Vec3> image_offsets(double a, double L, double horizon) {
  if (!(a > 0.0)) throw std::invalid_argument("image_offsets: sphere diameter must be positive");
  if (!(a < 0.5 * L)) throw std::invalid_argument("sphere larger than half the box");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("image_offsets: horizon must be finite and non-negative");
  }
  if (horizon == 0.0) return {Vec3{}};

  // |d + k L| = a is reachable only if |k L| <= L/2 + horizon + a per component.
  const int kmax = std::max(1, static_cast<int>(std::floor((0.5 * L + horizon + a) / L)));
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>((2 * kmax + 1) * (2 * kmax + 1) * (2 * kmax + 1)));
  for (int i = -kmax; i <= kmax; ++i)
    for (int j = -kmax; j <= kmax; ++j)
      for (int k = -kmax; k <= kmax; ++k) out.push_back({i * L, j * L, k * L});
  return out;
}

}  // namespace enskog
