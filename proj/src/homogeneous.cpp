#include "enskog/homogeneous.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "enskog/error.hpp"
#include "enskog/parallel.hpp"
#include "enskog/rng.hpp"

namespace enskog {

VelocityField VelocityField::zeros(int M, double v_max) {
  if (M < 2) throw std::invalid_argument("velocity grid needs M >= 2");
  if (!(v_max > 0.0)) throw std::invalid_argument("velocity grid needs v_max > 0");
  VelocityField f;
  f.M = M;
  f.v_max = v_max;
  f.values.assign(static_cast<std::size_t>(M) * M * M, 0.0);
  return f;
}

VelocityField VelocityField::from_function(int M, double v_max, const std::function<double(const Vec3&)>& fn) {
  auto f = zeros(M, v_max);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double x = fn(f.node(k));
    if (!(x >= 0.0)) throw std::invalid_argument("velocity field values must be non-negative");
    f.values[k] = x;
  }
  return f;
}

Vec3 VelocityField::node(std::size_t idx) const {
  const auto n = lattice(idx);
  // offsets from the centre are exact half-integers, so mirrored nodes are exact negatives
  const double h = spacing(), c = 0.5 * (M - 1);
  return {h * (n[0] - c), h * (n[1] - c), h * (n[2] - c)};
}

Moments moments(const VelocityField& f) {
  Moments m;
  const double dv = f.cell_volume();
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double w = f.values[k] * dv;
    const Vec3 v = f.node(k);
    m.mass += w;
    m.momentum += v * w;
    m.energy += 0.5 * norm2(v) * w;
  }
  return m;
}

VelocityField maxwellian_field(int M, double v_max, double rho0, const Vec3& u, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("Maxwellian temperature must be positive");
  return VelocityField::from_function(M, v_max, [&](const Vec3& v) { return maxwellian(v, rho0, u, theta); });
}

VelocityField bimodal_velocity_field(int M, double v_max, const Vec3& u, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("Maxwellian temperature must be positive");
  return VelocityField::from_function(
      M, v_max, [&](const Vec3& v) { return maxwellian(v, 0.5, u, theta) + maxwellian(v, 0.5, -u, theta); });
}

VelocityField matching_maxwellian(const VelocityField& f) {
  const auto m = moments(f);
  if (!(m.mass > 0.0)) throw Error("matching Maxwellian of an empty field");
  const Vec3 u = m.momentum / m.mass;
  const double theta = (2.0 * m.energy / m.mass - norm2(u)) / 3.0;
  auto g = maxwellian_field(f.M, f.v_max, m.mass, u, theta);
  g.time = f.time;
  return g;
}

double h_functional(const VelocityField& f) {
  double h = 0.0;
  for (double x : f.values)
    if (x > 0.0) h += x * std::log(x);
  return h * f.cell_volume();
}

VelocityField reverse_field(const VelocityField& f) {
  VelocityField r = f;
  const std::size_t n = f.size();
  // the index map (ix,iy,iz) -> (M-1-ix, ...) is k -> n-1-k
  for (std::size_t k = 0; k < n; ++k) r.values[k] = f.values[n - 1 - k];
  return r;
}

double l2_distance(const VelocityField& f, const VelocityField& g) {
  if (f.M != g.M || f.v_max != g.v_max) throw std::invalid_argument("l2_distance: grids differ");
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += (f.values[k] - g.values[k]) * (f.values[k] - g.values[k]);
  return std::sqrt(s * f.cell_volume());
}

PhaseField as_phase_field(const VelocityField& f, double L) {
  auto vals = std::make_shared<const std::vector<double>>(f.values);
  const int M = f.M;
  const double h = f.spacing(), v_max = f.v_max;
  PhaseField p;
  p.L = L;
  p.uniform_in_r = true;
  p.tag = "grid-interpolant";
  p.f = [vals, M, h, v_max](const TorusPoint&, const Vec3& v) {
    int i0[3];
    double t[3];
    for (int d = 0; d < 3; ++d) {
      const double s = (v[d] + v_max) / h - 0.5;
      if (!(s > -1.0 && s < M)) return 0.0;
      i0[d] = static_cast<int>(std::floor(s));
      t[d] = s - i0[d];
    }
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
      double w = 1.0;
      int idx[3];
      for (int d = 0; d < 3; ++d) {
        const int bit = (c >> d) & 1;
        idx[d] = i0[d] + bit;
        w *= bit ? t[d] : 1.0 - t[d];
      }
      if (w == 0.0 || idx[0] < 0 || idx[1] < 0 || idx[2] < 0 || idx[0] >= M || idx[1] >= M || idx[2] >= M) continue;
      acc += w * (*vals)[(static_cast<std::size_t>(idx[0]) * M + idx[1]) * M + idx[2]];
    }
    return acc;
  };
  double mass = 0.0;
  for (double x : f.values) mass += x;
  mass *= f.cell_volume();
  p.rho = [mass](const TorusPoint&) { return mass; };
  return p;
}

HomogeneousSolver::HomogeneousSolver(int M, double v_max, double a, double n, KineticOptions opt)
    : M_(M), v_max_(v_max), a_(a), n_(n), opt_(std::move(opt)) {
  if (M < 2 || !(v_max > 0.0)) throw std::invalid_argument("solver grid needs M >= 2 and v_max > 0");
  if (!(a > 0.0) || !(n > 0.0)) throw std::invalid_argument("solver needs a > 0 and n > 0");
  if (!(opt_.clip_budget >= 0.0) || !(opt_.stability_factor > 0.0)) {
    throw std::invalid_argument("solver: clip budget and stability factor must be positive");
  }
  if (opt_.op == KineticOptions::Operator::Lattice) build_channels();
}

namespace {

/// Integer vectors g with |g|^2 = R and g = parity (mod 2) componentwise.
class LatticeSpheres {
 public:
  const std::vector<std::array<int, 3>>& get(int R, int parity) {
    auto& slot = cache_[static_cast<long>(R) * 8 + parity];
    if (slot.empty()) {
      const int r = static_cast<int>(std::sqrt(double(R)));
      for (int x = -r; x <= r; ++x) {
        if (((x & 1) != (parity & 1))) continue;
        for (int y = -r; y <= r; ++y) {
          if (((y & 1) != ((parity >> 1) & 1))) continue;
          const int z2 = R - x * x - y * y;
          if (z2 < 0) continue;
          const int z = static_cast<int>(std::lround(std::sqrt(double(z2))));
          if (z * z != z2 || (z & 1) != ((parity >> 2) & 1)) continue;
          slot.push_back({x, y, z});
          if (z != 0) slot.push_back({x, y, -z});
        }
      }
    }
    return slot;
  }

 private:
  std::map<long, std::vector<std::array<int, 3>>> cache_;
};

std::size_t draw_index(const std::vector<double>& cdf, Rng& rng) {
  const double u = uniform01(rng) * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

}  // namespace

void HomogeneousSolver::build_channels() {
  if (opt_.channel_draws == 0) throw std::invalid_argument("solver: channel_draws must be positive");
  if (!(opt_.proposal_scale > 0.0)) throw std::invalid_argument("solver: proposal_scale must be positive");
  if (!(opt_.proposal_uniform > 0.0 && opt_.proposal_uniform <= 1.0)) {
    throw std::invalid_argument("solver: proposal_uniform must lie in (0, 1]");
  }
  const auto grid = VelocityField::zeros(M_, v_max_);
  const std::size_t nn = grid.size();
  const double h = grid.spacing();

  // proposal mass per node: Gaussian plus a uniform floor, symmetric under v -> -v
  std::vector<double> p(nn), cdf(nn);
  double gsum = 0.0;
  for (std::size_t k = 0; k < nn; ++k) {
    p[k] = std::exp(-norm2(grid.node(k)) / (2.0 * opt_.proposal_scale * opt_.proposal_scale));
    gsum += p[k];
  }
  double total = 0.0;
  for (std::size_t k = 0; k < nn; ++k) {
    p[k] = (1.0 - opt_.proposal_uniform) * p[k] / gsum + opt_.proposal_uniform / double(nn);
    total += p[k];
    cdf[k] = total;
  }

  LatticeSpheres spheres;
  auto rng = make_rng(opt_.seed, "kinetic.channels");
  const double K = static_cast<double>(opt_.channel_draws);
  channels_.reserve(2 * opt_.channel_draws);
  for (std::size_t d = 0; d < opt_.channel_draws; ++d) {
    const std::size_t i = draw_index(cdf, rng), j = draw_index(cdf, rng);
    const double u = uniform01(rng);
    if (i == j) continue;
    const auto ni = grid.lattice(i), nj = grid.lattice(j);
    const std::array<int, 3> g{nj[0] - ni[0], nj[1] - ni[1], nj[2] - ni[2]};
    const int R = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
    const int parity = (g[0] & 1) | ((g[1] & 1) << 1) | ((g[2] & 1) << 2);
    const auto& sphere = spheres.get(R, parity);
    const auto& gp = sphere[std::min(sphere.size() - 1, static_cast<std::size_t>(u * sphere.size()))];
    std::array<int, 3> nk, nl;
    bool inside = true;
    for (int c = 0; c < 3; ++c) {
      const int N = ni[c] + nj[c];
      nk[c] = (N - gp[c]) / 2;
      nl[c] = (N + gp[c]) / 2;
      inside = inside && nk[c] >= 0 && nl[c] >= 0 && nk[c] < M_ && nl[c] < M_;
    }
    if (!inside) continue;
    const std::size_t k = grid.index(nk[0], nk[1], nk[2]), l = grid.index(nl[0], nl[1], nl[2]);
    if ((k == i && l == j) || (k == j && l == i)) continue;
    // weak form: 1/4 B (f'f'_* - f f_*)(psi + psi_* - psi' - psi'_*), B = pi |g| n a^2 per unit dv dv_*
    const double w = h * h * h * n_ * a_ * a_ * M_PI * h * std::sqrt(double(R)) / (4.0 * K * p[i] * p[j]) / 2.0;
    const auto as32 = [](std::size_t x) { return static_cast<std::uint32_t>(x); };
    channels_.push_back({as32(i), as32(j), as32(k), as32(l), w});
    channels_.push_back({as32(nn - 1 - i), as32(nn - 1 - j), as32(nn - 1 - k), as32(nn - 1 - l), w});
  }

  // node -> incident channels, in channel order (deterministic gather)
  incidence_start_.assign(nn + 1, 0);
  for (const auto& c : channels_)
    for (auto v : {c.i, c.j, c.k, c.l}) ++incidence_start_[v + 1];
  for (std::size_t k = 0; k < nn; ++k) incidence_start_[k + 1] += incidence_start_[k];
  incidence_.resize(incidence_start_.back());
  std::vector<std::uint32_t> fill(incidence_start_.begin(), incidence_start_.end() - 1);
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    const auto& ch = channels_[c];
    incidence_[fill[ch.i]++] = c * 2;
    incidence_[fill[ch.j]++] = c * 2;
    incidence_[fill[ch.k]++] = c * 2 + 1;
    incidence_[fill[ch.l]++] = c * 2 + 1;
  }
}

void HomogeneousSolver::check_grid(const VelocityField& f) const {
  if (f.M != M_ || f.v_max != v_max_ || f.size() != static_cast<std::size_t>(M_) * M_ * M_) {
    throw std::invalid_argument("velocity field grid does not match the solver");
  }
}

std::vector<double> HomogeneousSolver::collision_term(const VelocityField& f) const {
  check_grid(f);
  const std::size_t nn = f.size();
  std::vector<double> q(nn, 0.0);
  if (opt_.op == KineticOptions::Operator::Quadrature) {
    const PhaseField pf = as_phase_field(f);
    parallel_for(nn, opt_.threads, [&](std::size_t k) {
      q[k] = st_boltzmann(pf, TorusPoint{}, f.node(k), a_, n_, opt_.quad);
    });
    return q;
  }
  const auto& v = f.values;
  std::vector<double> flux(channels_.size());
  constexpr std::size_t block = 4096;
  parallel_for((channels_.size() + block - 1) / block, opt_.threads, [&](std::size_t b) {
    const std::size_t end = std::min(channels_.size(), (b + 1) * block);
    for (std::size_t c = b * block; c < end; ++c) {
      const auto& ch = channels_[c];
      flux[c] = ch.w * (v[ch.k] * v[ch.l] - v[ch.i] * v[ch.j]);
    }
  });
  parallel_for(nn, opt_.threads, [&](std::size_t k) {
    double s = 0.0;
    for (std::uint32_t e = incidence_start_[k]; e < incidence_start_[k + 1]; ++e) {
      const std::uint64_t code = incidence_[e];
      s += (code & 1) ? -flux[code >> 1] : flux[code >> 1];
    }
    q[k] = s;
  });
  return q;
}

double HomogeneousSolver::stability_bound(const VelocityField& f) const {
  check_grid(f);
  const double mass = moments(f).mass;
  if (!(mass > 0.0)) return std::numeric_limits<double>::infinity();
  double rate = 0.0;  // n a^2 times the mass-weighted mean of integral pi |g| f_* dv_*
  if (opt_.op == KineticOptions::Operator::Lattice) {
    const double dv = f.cell_volume();
    for (const auto& ch : channels_) rate += 4.0 * ch.w * dv * f.values[ch.i] * f.values[ch.j];
  } else {
    const double dv = f.cell_volume();
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f.values[i] == 0.0) continue;
      const Vec3 vi = f.node(i);
      double s = 0.0;
      for (std::size_t j = 0; j < f.size(); ++j) s += f.values[j] * norm(f.node(j) - vi);
      rate += f.values[i] * s;
    }
    rate *= n_ * a_ * a_ * M_PI * dv * dv;
  }
  rate /= mass;
  return rate > 0.0 ? opt_.stability_factor / rate : std::numeric_limits<double>::infinity();
}

VelocityField HomogeneousSolver::step(const VelocityField& f, double dt, StepInfo* info) const {
  check_grid(f);
  if (!(dt >= 0.0)) throw std::invalid_argument("time step must be non-negative");
  StepInfo local;
  local.dt_max = stability_bound(f);
  if (info) *info = local;
  if (dt == 0.0) return f;
  if (dt > local.dt_max) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "time step %.6g exceeds the stability bound %.6g", dt, local.dt_max);
    throw Error(buf);
  }
  const std::size_t nn = f.size();
  VelocityField stage = f;
  auto axpy = [&](const std::vector<double>& k, double c) {
    for (std::size_t i = 0; i < nn; ++i) stage.values[i] = f.values[i] + c * k[i];
  };
  const auto k1 = collision_term(f);
  axpy(k1, 0.5 * dt);
  const auto k2 = collision_term(stage);
  axpy(k2, 0.5 * dt);
  const auto k3 = collision_term(stage);
  axpy(k3, dt);
  const auto k4 = collision_term(stage);

  VelocityField out = f;
  out.time = f.time + dt;
  double clipped = 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    double x = f.values[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (x < 0.0) {
      clipped -= x;
      x = 0.0;
    }
    out.values[i] = x;
  }
  local.clipped_mass = clipped * f.cell_volume();
  if (info) *info = local;
  const double mass = moments(f).mass;
  if (local.clipped_mass > opt_.clip_budget * mass) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "resolution insufficient: clipped mass %.3g of %.6g in one step", local.clipped_mass,
                  mass);
    throw Error(buf);
  }
  return out;
}

KineticSample observe(const VelocityField& f, double clipped_mass) {
  return {f.time, moments(f), h_functional(f), clipped_mass};
}

void write_time_series_csv(std::ostream& os, const std::vector<KineticSample>& series) {
  os << "t,mass,px,py,pz,energy,H\n";
  char buf[256];
  for (const auto& s : series) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.m.mass, s.m.momentum.x,
                  s.m.momentum.y, s.m.momentum.z, s.m.energy, s.H);
    os << buf;
  }
}

void write_field_csv(std::ostream& os, const VelocityField& f) {
  os << "vx,vy,vz,f\n";
  char buf[128];
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Vec3 v = f.node(k);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", v.x, v.y, v.z, f.values[k]);
    os << buf;
  }
}

std::string field_header_json(const VelocityField& f) {
  nlohmann::ordered_json j;
  j["M"] = f.M;
  j["v_max"] = f.v_max;
  j["extent"] = {-f.v_max, f.v_max};
  j["spacing"] = f.spacing();
  j["cell_volume"] = f.cell_volume();
  j["time"] = f.time;
  j["layout"] = "cell-centred, vx slowest, vz fastest";
  return j.dump(2);
}

}  // namespace enskog
