#include "enskog/quadrature.hpp"

#include <cmath>
#include <algorithm>
#include <stdexcept>
#include <vector>

namespace enskog {

Rule1D gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  if (!(hi > lo)) throw std::invalid_argument("gauss_legendre: empty interval");
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    // recompute the derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = mid - half * x;
    r.nodes[n - 1 - i] = mid + half * x;
    r.weights[i] = r.weights[n - 1 - i] = half * w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = mid;
  return r;
}

Rule1D gauss_hermite(int n, double scale, double center) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need at least one node");
  if (!(scale > 0.0)) throw std::invalid_argument("gauss_hermite: scale must be positive");
  // Newton on orthonormal Hermite polynomials, seeded from the previous roots
  const double pim4 = std::pow(M_PI, -0.25);
  std::vector<double> x(n), w(n);
  double z = 0.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    if (i == 0) z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    else if (i == 1) z -= 1.14 * std::pow(double(n), 0.426) / z;
    else if (i == 2) z = 1.86 * z - 0.86 * x[0];
    else if (i == 3) z = 1.91 * z - 0.91 * x[1];
    else z = 2.0 * z - x[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::fabs(dz) <= 1e-15 * std::max(1.0, std::fabs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = w[n - 1 - i] = 2.0 / (pp * pp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  Rule1D r;
  const double s = scale * std::sqrt(2.0);
  for (int i = n - 1; i >= 0; --i) {
    r.nodes.push_back(center + s * x[i]);
    r.weights.push_back(s * w[i] * std::exp(x[i] * x[i]));
  }
  return r;
}

SphereRule sphere_rule(int n_cos, int n_phi) {
  if (n_cos < 1 || n_phi < 1) throw std::invalid_argument("sphere_rule: node counts must be positive");
  const auto mu = gauss_legendre(n_cos);
  SphereRule s;
  const double dphi = 2.0 * M_PI / n_phi;
  for (int i = 0; i < n_cos; ++i) {
    const double st = std::sqrt(1.0 - mu.nodes[i] * mu.nodes[i]);
    for (int k = 0; k < n_phi; ++k) {
      const double phi = (k + 0.5) * dphi;
      s.nodes.push_back({st * std::cos(phi), st * std::sin(phi), mu.nodes[i]});
      s.weights.push_back(mu.weights[i] * dphi);
    }
  }
  return s;
}

CubeRule cube_rule(int n, double half, const Vec3& center) {
  if (!(half > 0.0)) throw std::invalid_argument("cube_rule: half-width must be positive");
  const auto g = gauss_legendre(n, -half, half);
  CubeRule c;
  c.nodes.reserve(static_cast<std::size_t>(n) * n * n);
  c.weights.reserve(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        c.nodes.push_back(center + Vec3{g.nodes[i], g.nodes[j], g.nodes[k]});
        c.weights.push_back(g.weights[i] * g.weights[j] * g.weights[k]);
      }
  return c;
}

}  // namespace enskog
