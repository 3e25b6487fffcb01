#include "enskog/collision.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "enskog/error.hpp"
#include "enskog/rng.hpp"

namespace enskog {

double maxwellian(const Vec3& v, double rho0, const Vec3& u, double theta) {
  const double norm_c = rho0 / std::pow(2.0 * M_PI * theta, 1.5);
  return norm_c * std::exp(-norm2(v - u) / (2.0 * theta));
}

namespace {

/// maxwellian() with the normalization hoisted out of the hot path.
struct Gaussian {
  double c, inv2theta;
  Vec3 u;
  Gaussian(double rho0, const Vec3& u_, double theta)
      : c(rho0 / std::pow(2.0 * M_PI * theta, 1.5)), inv2theta(0.5 / theta), u(u_) {
    if (!(theta > 0.0)) throw std::invalid_argument("Maxwellian temperature must be positive");
  }
  double operator()(const Vec3& v) const { return c * std::exp(-norm2(v - u) * inv2theta); }
};

}  // namespace

PhaseField uniform_maxwellian(double L, double theta, const Vec3& u) {
  PhaseField p;
  p.L = L;
  p.uniform_in_r = true;
  p.tag = "uniform-maxwellian";
  p.f = [g = Gaussian(1.0, u, theta)](const TorusPoint&, const Vec3& v) { return g(v); };
  p.rho = [](const TorusPoint&) { return 1.0; };
  return p;
}

PhaseField bimodal_field(double L, const Vec3& u, double theta) {
  PhaseField p;
  p.L = L;
  p.uniform_in_r = true;
  p.tag = "bimodal";
  p.f = [g1 = Gaussian(0.5, u, theta), g2 = Gaussian(0.5, -u, theta)](const TorusPoint&, const Vec3& v) {
    return g1(v) + g2(v);
  };
  p.rho = [](const TorusPoint&) { return 1.0; };
  return p;
}

PhaseField modulated_maxwellian(double L, double theta) {
  PhaseField p;
  p.L = L;
  p.tag = "modulated-maxwellian";
  const double k = 2.0 * M_PI / L;
  p.f = [g = Gaussian(1.0, {}, theta), k](const TorusPoint& r, const Vec3& v) {
    return (1.0 + 0.5 * std::sin(k * r.x)) * g(v);
  };
  p.rho = [k](const TorusPoint& r) { return 1.0 + 0.5 * std::sin(k * r.x); };
  return p;
}

PhaseField shear_flow_field(double L, double flow_amplitude, double theta) {
  PhaseField p;
  p.L = L;
  p.tag = "shear-flow";
  const double k = 2.0 * M_PI / L;
  p.f = [g = Gaussian(1.0, {}, theta), k, flow_amplitude](const TorusPoint& r, const Vec3& v) {
    const Vec3 u{flow_amplitude * std::sin(k * r.y), 0.0, 0.0};
    return (1.0 + 0.5 * std::sin(k * r.x)) * g(v - u);
  };
  p.rho = [k](const TorusPoint& r) { return 1.0 + 0.5 * std::sin(k * r.x); };
  return p;
}

QuadratureRule QuadratureRule::make(int n_cos, int n_phi, int n_v, double velocity_scale, double vmax_factor,
                                    const Vec3& v_center) {
  if (!(velocity_scale > 0.0) || !(vmax_factor > 0.0)) {
    throw std::invalid_argument("quadrature: velocity scale and extent must be positive");
  }
  QuadratureRule q;
  q.sigma = sphere_rule(n_cos, n_phi);
  q.v_max = vmax_factor * velocity_scale;
  q.v_center = v_center;
  q.v = cube_rule(n_v, q.v_max, v_center);
  return q;
}

QuadratureRule QuadratureRule::make_aligned(int n_cos, int n_phi, int n_normal, int n_tangent, double velocity_scale,
                                            double vmax_factor, const Vec3& v_center) {
  QuadratureRule q = make(n_cos, n_phi, 2, velocity_scale, vmax_factor, v_center);
  q.kind = Kind::Aligned;
  q.v = {};
  q.unit_normal = gauss_legendre(n_normal);
  q.unit_tangent = gauss_legendre(n_tangent);
  return q;
}

double QuadratureRule::sigma_weight_sum() const {
  double s = 0.0;
  for (double w : sigma.weights) s += w;
  return s;
}

double collision_prefactor(const PhaseField& f, double n) {
  if (f.normalization == Normalization::Volume) return n;
  if (!(f.particle_mass > 0.0)) throw std::invalid_argument("particle mass must be positive");
  return 1.0 / f.particle_mass;
}

namespace {

class Evaluator {
 public:
  explicit Evaluator(const PhaseField& f) : f_(f) {}
  double operator()(const TorusPoint& r, const Vec3& v) const {
    const double x = f_.f(r, v);
    if (!(x >= 0.0)) throw Error("phase field is negative or NaN at an evaluation point");
    return x;
  }

 private:
  const PhaseField& f_;
};

enum Variant : unsigned { kEnskog = 1, kBoltzmann = 2 };

/// Orthonormal e1, e2 completing sigma.
std::pair<Vec3, Vec3> plane_basis(const Vec3& s) {
  const Vec3 axis = std::fabs(s.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 e1 = cross(s, axis);
  e1 = e1 / norm(e1);
  return {e1, cross(s, e1)};
}

/// Chord of the ball |v - v_center| <= v_max along v1 + t e, clipped to t >= t_min.
std::pair<double, double> chord(const QuadratureRule& q, const Vec3& v1, const Vec3& e, double t_min) {
  const Vec3 d = q.v_center - v1;
  const double p = dot(d, e);
  const double h2 = q.v_max * q.v_max - (norm2(d) - p * p);
  if (h2 <= 0.0) return {0.0, 0.0};
  const double h = std::sqrt(h2);
  return {std::max(p - h, t_min), std::max(p + h, t_min)};
}

struct Mapped {
  std::vector<double> x, w;
};

Mapped map_rule(const Rule1D& unit, double lo, double hi) {
  Mapped m;
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (std::size_t i = 0; i < unit.nodes.size(); ++i) {
    m.x.push_back(mid + half * unit.nodes[i]);
    m.w.push_back(half * unit.weights[i]);
  }
  return m;
}

// With v2 - v1 = g_n sigma + g_t: v1' = v1 + g_n sigma and v2' = v1 + g_t, so the
// gain factorizes into a ray integral times a plane integral.
StPair sweep_aligned(const PhaseField& field, const TorusPoint& r1, const Vec3& v1, double a,
                     const QuadratureRule& quad, unsigned variants, double pref) {
  const Evaluator ev(field);
  const bool uniform = field.uniform_in_r;
  const bool want_e = variants & kEnskog;
  const bool want_b = (variants & kBoltzmann) || (want_e && uniform);
  const bool shifted = want_e && !uniform;
  const double f11 = ev(r1, v1);

  double ge = 0.0, le = 0.0, gb = 0.0, lb = 0.0;
  for (std::size_t s = 0; s < quad.sigma.nodes.size(); ++s) {
    const Vec3& sg = quad.sigma.nodes[s];
    const double ws = quad.sigma.weights[s];
    auto [e1, e2] = plane_basis(sg);
    // ray: chord of the ball; plane: square around the disk where it meets the ball
    auto [n_lo, n_hi] = chord(quad, v1, sg, 0.0);
    const Vec3 d = quad.v_center - v1;
    const double p = dot(d, sg);
    const double disk = std::sqrt(std::max(quad.v_max * quad.v_max - p * p, 0.0));
    const Mapped gn = map_rule(quad.unit_normal, n_lo, n_hi);
    const Mapped t1 = map_rule(quad.unit_tangent, dot(d, e1) - disk, dot(d, e1) + disk);
    const Mapped t2 = map_rule(quad.unit_tangent, dot(d, e2) - disk, dot(d, e2) + disk);
    // loss: v2 ranges over the ball, so g_n spans its full extent along sigma
    const Mapped gl = map_rule(quad.unit_normal, std::max(p - quad.v_max, 0.0), std::max(p + quad.v_max, 0.0));
    const Mapped l1 = map_rule(quad.unit_tangent, dot(d, e1) - quad.v_max, dot(d, e1) + quad.v_max);
    const Mapped l2 = map_rule(quad.unit_tangent, dot(d, e2) - quad.v_max, dot(d, e2) + quad.v_max);
    const TorusPoint rp = shifted ? translate(r1, sg * a, field.L) : r1;
    const TorusPoint rm = shifted ? translate(r1, sg * (-a), field.L) : r1;

    double ray = 0.0;
    for (std::size_t i = 0; i < gn.x.size(); ++i) ray += gn.w[i] * gn.x[i] * ev(r1, v1 + sg * gn.x[i]);
    double plane_b = 0.0, plane_e = 0.0, vol_b = 0.0, vol_e = 0.0;
    if (ray != 0.0) {
      for (std::size_t j = 0; j < t1.x.size(); ++j) {
        for (std::size_t k = 0; k < t2.x.size(); ++k) {
          const Vec3 v2p = v1 + e1 * t1.x[j] + e2 * t2.x[k];
          const double wt = t1.w[j] * t2.w[k];
          if (want_b) plane_b += wt * ev(r1, v2p);
          if (shifted) plane_e += wt * ev(rp, v2p);
        }
      }
    }
    if (f11 != 0.0 && gl.x.back() > 0.0) {
      for (std::size_t j = 0; j < l1.x.size(); ++j) {
        for (std::size_t k = 0; k < l2.x.size(); ++k) {
          const Vec3 base = v1 + e1 * l1.x[j] + e2 * l2.x[k];
          double line_b = 0.0, line_e = 0.0;
          for (std::size_t i = 0; i < gl.x.size(); ++i) {
            const Vec3 v2 = base + sg * gl.x[i];
            if (want_b) line_b += gl.w[i] * gl.x[i] * ev(r1, v2);
            if (shifted) line_e += gl.w[i] * gl.x[i] * ev(rm, v2);
          }
          const double wt = l1.w[j] * l2.w[k];
          vol_b += wt * line_b;
          vol_e += wt * line_e;
        }
      }
    }
    gb += ws * ray * plane_b;
    ge += ws * ray * plane_e;
    lb += ws * vol_b;
    le += ws * vol_e;
  }
  StPair out;
  out.boltzmann = {pref * gb, pref * f11 * lb};
  out.enskog = shifted ? StTerms{pref * ge, pref * f11 * le} : out.boltzmann;
  return out;
}

StPair sweep(const PhaseField& field, const TorusPoint& r1, const Vec3& v1, double a, double n,
             const QuadratureRule& quad, unsigned variants) {
  if (!(a > 0.0)) throw std::invalid_argument("sphere diameter must be positive");
  if (quad.kind == QuadratureRule::Kind::Aligned) {
    return sweep_aligned(field, r1, v1, a, quad, variants, collision_prefactor(field, n) * a * a);
  }
  const Evaluator ev(field);
  const double pref = collision_prefactor(field, n) * a * a;
  const bool uniform = field.uniform_in_r;
  const bool want_e = variants & kEnskog;
  const bool want_b = (variants & kBoltzmann) || (want_e && uniform);
  const bool shifted = want_e && !uniform;

  const auto& sig = quad.sigma.nodes;
  const auto& sw = quad.sigma.weights;
  const std::size_t ns = sig.size();
  std::vector<TorusPoint> r_plus, r_minus;
  if (shifted) {
    r_plus.reserve(ns);
    r_minus.reserve(ns);
    for (const auto& s : sig) {
      r_plus.push_back(translate(r1, s * a, field.L));
      r_minus.push_back(translate(r1, s * (-a), field.L));
    }
  }
  const double f11 = ev(r1, v1);

  double ge = 0.0, le = 0.0, gb = 0.0, lb = 0.0;
  const auto& vn = quad.v.nodes;
  const auto& vw = quad.v.weights;
  for (std::size_t k = 0; k < vn.size(); ++k) {
    const Vec3& v2 = vn[k];
    const Vec3 v21 = v2 - v1;
    const double f2 = want_b ? ev(r1, v2) : 0.0;
    double gbk = 0.0, lbk = 0.0, gek = 0.0, lek = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      const double c = dot(v21, sig[s]);
      if (c <= 0.0) continue;
      const double w = sw[s] * c;
      const Vec3 v1p = v1 + sig[s] * c;
      const Vec3 v2p = v2 - sig[s] * c;
      const double f1p = ev(r1, v1p);
      if (want_b) {
        gbk += w * (f1p == 0.0 ? 0.0 : f1p * ev(r1, v2p));
        lbk += w * f2;
      }
      if (shifted) {
        gek += w * (f1p == 0.0 ? 0.0 : f1p * ev(r_plus[s], v2p));
        lek += w * (f11 == 0.0 ? 0.0 : ev(r_minus[s], v2));
      }
    }
    gb += vw[k] * gbk;
    lb += vw[k] * lbk;
    ge += vw[k] * gek;
    le += vw[k] * lek;
  }
  StPair out;
  out.boltzmann = {pref * gb, pref * f11 * lb};
  out.enskog = shifted ? StTerms{pref * ge, pref * f11 * le} : out.boltzmann;
  return out;
}

}  // namespace

StTerms st_enskog_terms(const PhaseField& f, const TorusPoint& r1, const Vec3& v1, double a, double n,
                        const QuadratureRule& quad) {
  return sweep(f, r1, v1, a, n, quad, kEnskog).enskog;
}

StTerms st_boltzmann_terms(const PhaseField& f, const TorusPoint& r1, const Vec3& v1, double a, double n,
                           const QuadratureRule& quad) {
  return sweep(f, r1, v1, a, n, quad, kBoltzmann).boltzmann;
}

StPair st_both(const PhaseField& f, const TorusPoint& r1, const Vec3& v1, double a, double n,
               const QuadratureRule& quad) {
  return sweep(f, r1, v1, a, n, quad, kEnskog | kBoltzmann);
}

double st_enskog(const PhaseField& f, const TorusPoint& r1, const Vec3& v1, double a, double n,
                 const QuadratureRule& quad) {
  return st_enskog_terms(f, r1, v1, a, n, quad).value();
}

double st_boltzmann(const PhaseField& f, const TorusPoint& r1, const Vec3& v1, double a, double n,
                    const QuadratureRule& quad) {
  return st_boltzmann_terms(f, r1, v1, a, n, quad).value();
}

SpatialQuadrature SpatialQuadrature::torus_grid(double L, int M) {
  if (M < 1 || !(L > 0.0)) throw std::invalid_argument("torus_grid: need M >= 1 and L > 0");
  SpatialQuadrature g;
  g.kind = Kind::Absolute;
  const double h = L / M, w = h * h * h;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      for (int k = 0; k < M; ++k) {
        g.points.push_back({(i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h});
        g.weights.push_back(w);
      }
  return g;
}

SpatialQuadrature SpatialQuadrature::patches(const std::vector<TorusPoint>& centers, double half, int n, double L) {
  SpatialQuadrature g;
  g.kind = Kind::Absolute;
  const auto cube = cube_rule(n, half);
  for (const auto& c : centers) {
    for (std::size_t k = 0; k < cube.nodes.size(); ++k) {
      g.points.push_back(translate(c, cube.nodes[k], L).as_vec());
      g.weights.push_back(cube.weights[k]);
    }
  }
  return g;
}

SpatialQuadrature SpatialQuadrature::ball(double radius, int n_radial, int n_cos, int n_phi) {
  if (n_phi % 2 != 0) throw std::invalid_argument("ball: n_phi must be even");
  if (!(radius > 0.0)) throw std::invalid_argument("ball: radius must be positive");
  SpatialQuadrature g;
  g.kind = Kind::Relative;
  const auto rad = gauss_legendre(n_radial, 0.0, radius);
  const auto mu = gauss_legendre(n_cos);
  const double dphi = 2.0 * M_PI / n_phi;
  for (int ir = 0; ir < n_radial; ++ir) {
    const double r = rad.nodes[ir];
    const double wr = rad.weights[ir] * r * r;
    for (int i = 0; i < n_cos; ++i) {
      const double st = std::sqrt(1.0 - mu.nodes[i] * mu.nodes[i]);
      for (int k = 0; k < n_phi / 2; ++k) {
        const double phi = (k + 0.5) * dphi;
        const Vec3 d = Vec3{st * std::cos(phi), st * std::sin(phi), mu.nodes[i]} * r;
        // consecutive +d, -d pairs
        g.points.push_back(d);
        g.points.push_back(-d);
        g.weights.push_back(wr * mu.weights[i] * dphi);
        g.weights.push_back(wr * mu.weights[i] * dphi);
      }
    }
  }
  return g;
}

double density_at(const PhaseField& f, const TorusPoint& r, const QuadratureRule& quad) {
  if (f.rho) return f.rho(r);
  double s = 0.0;
  for (std::size_t k = 0; k < quad.v.nodes.size(); ++k) s += quad.v.weights[k] * f.f(r, quad.v.nodes[k]);
  return s;
}

Vec3 mean_field_gradient(const PhaseField& f, const TorusPoint& r1, const PairPotential& pot,
                         const SpatialQuadrature& grid, const QuadratureRule& quad) {
  Vec3 total;
  if (pot.cutoff <= 0.0) return total;
  auto term = [&](const Vec3& d, const TorusPoint& r2, double w) {
    const double s = norm(d);
    if (s == 0.0 || s >= pot.cutoff) return Vec3{};
    return d * (w * pot.slope(s) / s * density_at(f, r2, quad));
  };
  if (grid.kind == SpatialQuadrature::Kind::Absolute) {
    for (std::size_t k = 0; k < grid.points.size(); ++k) {
      const TorusPoint r2{grid.points[k].x, grid.points[k].y, grid.points[k].z};
      total += term(min_image(r1, r2, f.L), r2, grid.weights[k]);
    }
  } else {
    // d = r1 - r2 = -offset; mirrored offsets are summed pairwise
    for (std::size_t k = 0; k + 1 < grid.points.size(); k += 2) {
      const Vec3 a = term(-grid.points[k], translate(r1, grid.points[k], f.L), grid.weights[k]);
      const Vec3 b = term(-grid.points[k + 1], translate(r1, grid.points[k + 1], f.L), grid.weights[k + 1]);
      total += a + b;
    }
  }
  return total;
}

double vlasov_term(const PhaseField& f, const TorusPoint& r1, const Vec3& v1, const PairPotential& pot, double n,
                   const SpatialQuadrature& grid, const QuadratureRule& quad, double h_v) {
  if (!(h_v > 0.0)) throw std::invalid_argument("vlasov_term: h_v must be positive");
  const Vec3 g = mean_field_gradient(f, r1, pot, grid, quad);
  Vec3 dfdv;
  for (int k = 0; k < 3; ++k) {
    Vec3 e;
    e[k] = h_v;
    dfdv[k] = (f.f(r1, v1 + e) - f.f(r1, v1 - e)) / (2.0 * h_v);
  }
  if (!is_finite(dfdv) || !is_finite(g)) throw Error("vlasov_term: non-finite gradient");
  return collision_prefactor(f, n) / pot.m * dot(g, dfdv);
}

Condition11Result check_condition_11(const PhaseField& f, double a, const std::vector<Condition11Sample>& samples) {
  Condition11Result res;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    const double c = dot(s.v2 - s.v1, s.sigma);
    const Vec3 v1p = s.v1 + s.sigma * c;
    const Vec3 v2p = s.v2 - s.sigma * c;
    const TorusPoint r2 = translate(s.r1, s.sigma * (-a), f.L);
    const double pre = f.f(s.r1, s.v1) * f.f(r2, s.v2);
    const double post = f.f(s.r1, v1p) * f.f(r2, v2p);
    const double viol = std::fabs(pre - post);
    if (viol > res.max_violation) {
      res.max_violation = viol;
      res.worst_index = k;
    }
    // sensitivity of both products to a few-ulp relative change of the velocities
    const double bump = 1.0 + 4.0 * eps;
    const double pre_b = f.f(s.r1, s.v1 * bump) * f.f(r2, s.v2 * bump);
    const double post_b = f.f(s.r1, v1p * bump) * f.f(r2, v2p * bump);
    const double floor_k = 4.0 * eps * std::max(pre, post) + std::fabs(pre_b - pre) + std::fabs(post_b - post);
    res.noise_floor = std::max(res.noise_floor, floor_k);
  }
  return res;
}

std::vector<Condition11Sample> sample_condition_11_set(std::size_t count, double L, double velocity_scale,
                                                       std::uint64_t seed) {
  auto rng = make_rng(seed, "condition11.samples");
  std::vector<Condition11Sample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Condition11Sample s;
    s.r1 = wrap({uniform01(rng) * L, uniform01(rng) * L, uniform01(rng) * L}, L);
    s.v1 = Vec3{standard_normal(rng), standard_normal(rng), standard_normal(rng)} * velocity_scale;
    s.v2 = Vec3{standard_normal(rng), standard_normal(rng), standard_normal(rng)} * velocity_scale;
    Vec3 d{standard_normal(rng), standard_normal(rng), standard_normal(rng)};
    s.sigma = d / norm(d);
    if (dot(s.v2 - s.v1, s.sigma) < 0.0) s.sigma = -s.sigma;
    out.push_back(s);
  }
  return out;
}

}  // namespace enskog
