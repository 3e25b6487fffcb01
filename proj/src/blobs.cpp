#include "enskog/blobs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "enskog/error.hpp"
#include "enskog/parallel.hpp"

namespace enskog {

double Mollifier::bump_std() { return 1.0 / std::sqrt(7.0); }

double Mollifier::sample_bump(Rng& rng) {
  double u[5];
  for (double& x : u) x = uniform01(rng);
  std::nth_element(u, u + 2, u + 5);
  return 2.0 * u[2] - 1.0;
}

void Mollifier::validate() const {
  if (!(eps_r >= 0.0) || !(eps_v >= 0.0) || !std::isfinite(eps_r) || !std::isfinite(eps_v))
    throw std::invalid_argument("mollifier widths must be finite and non-negative");
}

double Mollifier::density(const Vec3& dr, const Vec3& dv) const {
  if (!(eps_r > 0.0) || !(eps_v > 0.0)) throw std::invalid_argument("mollifier density needs eps_r > 0 and eps_v > 0");
  double p = 1.0;
  for (int d = 0; d < 3; ++d) p *= bump(dr[d] / eps_r) * bump(dv[d] / eps_v);
  if (p == 0.0) return 0.0;
  return p / (eps_r * eps_r * eps_r * eps_v * eps_v * eps_v);
}

double Mollifier::peak() const { return density({}, {}); }

void check_blob_separation(const ParticleConfig& gamma, const Mollifier& moll) {
  moll.validate();
  gamma.validate();
  const double need = gamma.a + 2.0 * moll.eps_r;
  const double have = min_pair_distance(gamma);
  if (!(have > need)) {
    std::ostringstream os;
    os << "blob separation violated: min pair distance " << have << " must exceed a + 2 eps_r = " << need;
    throw ConfigError(os.str());
  }
  if (2.0 * moll.eps_r >= gamma.L) throw ConfigError("blob width eps_r must be below L/2");
}

PhaseField make_blob_initial(const ParticleConfig& gamma, const Mollifier& moll) {
  check_blob_separation(gamma, moll);
  if (!(moll.eps_r > 0.0) || !(moll.eps_v > 0.0))
    throw ConfigError("blob initial data needs eps_r > 0 and eps_v > 0");
  const double inv_n = 1.0 / gamma.concentration();
  const double L = gamma.L;
  PhaseField out;
  out.L = L;
  out.tag = "blobs";
  out.f = [gamma, moll, inv_n, L](const TorusPoint& r, const Vec3& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
      const Vec3 dr = min_image(r, gamma.positions[i], L);
      if (max_abs(dr) >= moll.eps_r) continue;
      s += moll.density(dr, v - gamma.velocities[i]);
    }
    return inv_n * s;
  };
  out.rho = [gamma, moll, inv_n, L](const TorusPoint& r) {
    double s = 0.0;
    const double e3 = moll.eps_r * moll.eps_r * moll.eps_r;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
      const Vec3 dr = min_image(r, gamma.positions[i], L);
      s += Mollifier::bump(dr.x / moll.eps_r) * Mollifier::bump(dr.y / moll.eps_r) * Mollifier::bump(dr.z / moll.eps_r) /
           e3;
    }
    return inv_n * s;
  };
  return out;
}

BlobEnsemble draw_ensemble(const ParticleConfig& gamma, const Mollifier& moll, std::size_t S, std::uint64_t seed) {
  check_blob_separation(gamma, moll);
  if (S == 0) throw std::invalid_argument("ensemble needs at least one sample");
  BlobEnsemble ens;
  ens.reference = gamma;
  ens.reference_initial = gamma;
  ens.moll = moll;
  ens.seed = seed;
  ens.samples.resize(S, gamma);
  for (std::size_t s = 0; s < S; ++s) {
    Rng rng = make_rng(seed, "blobs.sample", s);
    ParticleConfig& c = ens.samples[s];
    for (std::size_t k = 0; k < c.size(); ++k) {
      Vec3 dq, dw;
      for (int d = 0; d < 3; ++d) dq[d] = moll.eps_r * Mollifier::sample_bump(rng);
      for (int d = 0; d < 3; ++d) dw[d] = moll.eps_v * Mollifier::sample_bump(rng);
      c.positions[k] = translate(gamma.positions[k], dq, gamma.L);
      c.velocities[k] = gamma.velocities[k] + dw;
    }
    c.validate();
  }
  ens.initial = ens.samples;
  return ens;
}

namespace {

ParticleConfig advance(const ParticleConfig& c, double t, const FlowOptions& opt, const EventObserver& obs = {}) {
  if (opt.potential) {
    BevOptions b;
    b.max_events = opt.max_events;
    b.record_log = false;
    b.record_energy = false;
    b.observer = obs;
    return evolve_bev(c, *opt.potential, t, opt.dt, b).config;
  }
  EvolveOptions e;
  e.max_events = opt.max_events;
  e.record_log = false;
  e.observer = obs;
  return evolve(c, t, e).config;
}

/// Hard-sphere trajectory as snapshots at its start and after every event.
struct Trajectory {
  std::vector<double> t;
  std::vector<ParticleConfig> snap;

  std::size_t segment(double time) const {
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    return it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
  }
  TorusPoint position(std::size_t k, double time) const {
    const ParticleConfig& c = snap[segment(time)];
    return translate(c.positions[k], c.velocities[k] * (time - c.time), c.L);
  }
  const Vec3& velocity(std::size_t k, double time) const { return snap[segment(time)].velocities[k]; }
};

Trajectory record(const ParticleConfig& c, double duration, const FlowOptions& opt) {
  Trajectory tr;
  tr.t.push_back(c.time);
  tr.snap.push_back(c);
  advance(c, duration, opt, [&tr](const ParticleConfig& now, const EventRecord&) {
    tr.t.push_back(now.time);
    tr.snap.push_back(now);
  });
  return tr;
}

/// Time in [0, span] after which |d + dw tau| first reaches thr, given |d| <= thr.
double exit_time(const Vec3& d, const Vec3& dw, double thr, double span) {
  const double A = norm2(dw), B = dot(d, dw), C = norm2(d) - thr * thr;
  if (A == 0.0) return span;
  const double disc = std::max(B * B - A * C, 0.0);
  const double tau = (-B + std::sqrt(disc)) / A;
  return std::clamp(tau, 0.0, span);
}

double coherence_hard_spheres(const BlobEnsemble& ens, double t_max, double threshold, const FlowOptions& opt) {
  const double t0 = ens.time();
  const Trajectory ref = record(ens.reference, t_max, opt);
  const std::size_t N = ens.reference.size();
  const double L = ens.reference.L;
  std::vector<double> T(ens.size(), t_max);
  parallel_for(ens.size(), opt.threads, [&](std::size_t s) {
    const Trajectory tr = record(ens.samples[s], t_max, opt);
    std::vector<double> times;
    for (int m = 0; m <= 100; ++m) times.push_back(t0 + t_max * m / 100.0);
    for (double x : ref.t) times.push_back(x);
    for (double x : tr.t) times.push_back(x);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    double prev = t0;
    for (double tc : times) {
      if (tc < t0 || tc > t0 + t_max) continue;
      double exit = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < N; ++k) {
        const Vec3 d = min_image(tr.position(k, tc), ref.position(k, tc), L);
        if (norm(d) <= threshold) continue;
        if (tc == t0) {
          exit = 0.0;
          break;
        }
        // straight flight on (prev, tc): both snapshots taken at prev are valid there
        const Vec3 d0 = min_image(tr.position(k, prev), ref.position(k, prev), L);
        const Vec3 dw = tr.velocity(k, prev) - ref.velocity(k, prev);
        exit = std::min(exit, prev - t0 + exit_time(d0, dw, threshold, tc - prev));
      }
      if (exit < std::numeric_limits<double>::infinity()) {
        T[s] = exit;
        return;
      }
      prev = tc;
    }
  });
  return *std::min_element(T.begin(), T.end());
}

double coherence_grid(const BlobEnsemble& ens, double t_max, double threshold, const FlowOptions& opt) {
  constexpr int kGrid = 100;
  const std::size_t N = ens.reference.size();
  std::vector<ParticleConfig> ref(kGrid + 1);
  ref[0] = ens.reference;
  for (int m = 1; m <= kGrid; ++m) ref[m] = advance(ref[m - 1], t_max / kGrid, opt);
  std::vector<double> T(ens.size(), t_max);
  parallel_for(ens.size(), opt.threads, [&](std::size_t s) {
    ParticleConfig c = ens.samples[s];
    for (int m = 0; m <= kGrid; ++m) {
      if (m > 0) c = advance(c, t_max / kGrid, opt);
      for (std::size_t k = 0; k < N; ++k) {
        if (torus_distance(c.positions[k], ref[m].positions[k], c.L) > threshold) {
          T[s] = m == 0 ? 0.0 : t_max * (m - 1) / kGrid;
          return;
        }
      }
    }
  });
  return *std::min_element(T.begin(), T.end());
}

double pair_cut(const TorusPoint& r1, const TorusPoint& r2, double a, double L) {
  return torus_distance(r1, r2, L) < a ? 0.0 : 1.0;
}

double kernel(const PhasePoint& x, const TorusPoint& q, const Vec3& w, const Bandwidth& bw, double L) {
  const Vec3 dr = min_image(x.r, q, L);
  double p = 1.0;
  for (int d = 0; d < 3; ++d) {
    p *= Mollifier::bump(dr[d] / bw.r[d]) / bw.r[d];
    if (p == 0.0) return 0.0;
  }
  for (int d = 0; d < 3; ++d) {
    p *= Mollifier::bump((x.v[d] - w[d]) / bw.v[d]) / bw.v[d];
    if (p == 0.0) return 0.0;
  }
  return p;
}

/// Kernel weights of every sample particle: K[s * N + k].
std::vector<double> kernel_table(const BlobEnsemble& ens, const PhasePoint& x, const Bandwidth& bw) {
  const std::size_t N = ens.reference.size();
  std::vector<double> K(ens.size() * N);
  for (std::size_t s = 0; s < ens.size(); ++s)
    for (std::size_t k = 0; k < N; ++k)
      K[s * N + k] = kernel(x, ens.samples[s].positions[k], ens.samples[s].velocities[k], bw, ens.reference.L);
  return K;
}

double mean(const std::vector<double>& y) {
  double s = 0.0;
  for (double v : y) s += v;
  return s / static_cast<double>(y.size());
}

double standard_error(const std::vector<double>& y) {
  if (y.size() < 2) return 0.0;
  const double m = mean(y);
  double s = 0.0;
  for (double v : y) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(y.size() - 1) / static_cast<double>(y.size()));
}

/// Per-sample terms of the F1 and F2 estimators at (x1, x2).
struct PerSample {
  std::vector<double> y1, y2, z;
};

PerSample per_sample(const BlobEnsemble& ens, const PhasePoint& x1, const PhasePoint& x2, const Bandwidth& bw) {
  const std::size_t N = ens.reference.size(), S = ens.size();
  const double c = ens.reference.volume() / static_cast<double>(N);
  const auto K1 = kernel_table(ens, x1, bw), K2 = kernel_table(ens, x2, bw);
  const double cut = pair_cut(x1.r, x2.r, ens.reference.a, ens.reference.L);
  PerSample p{std::vector<double>(S), std::vector<double>(S), std::vector<double>(S)};
  for (std::size_t s = 0; s < S; ++s) {
    double a1 = 0.0, a2 = 0.0, pair = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      a1 += K1[s * N + k];
      a2 += K2[s * N + k];
      pair += K1[s * N + k] * K2[s * N + k];
    }
    p.y1[s] = c * a1;
    p.y2[s] = c * a2;
    p.z[s] = cut * c * c * (a1 * a2 - pair);  // sum over k != l
  }
  return p;
}

}  // namespace

BlobEnsemble flow_ensemble(const BlobEnsemble& ens, double t, const FlowOptions& opt) {
  if (!(t >= 0.0)) throw std::invalid_argument("flow duration must be >= 0");
  BlobEnsemble out = ens;
  if (t == 0.0) return out;
  out.reference = advance(ens.reference, t, opt);
  parallel_for(ens.size(), opt.threads, [&](std::size_t s) { out.samples[s] = advance(ens.samples[s], t, opt); });
  return out;
}

BlobEnsemble reverse_ensemble(const BlobEnsemble& ens) {
  BlobEnsemble out = ens;
  out.reference = reverse(ens.reference);
  for (auto& c : out.samples) c = reverse(c);
  return out;
}

double coherence_time(const BlobEnsemble& ens, double t_max, double threshold, const FlowOptions& opt) {
  if (!(threshold > 0.0) || !(threshold < 0.5 * ens.reference.a))
    throw std::invalid_argument("coherence threshold must lie in (0, a/2)");
  if (!(t_max >= 0.0)) throw std::invalid_argument("t_max must be >= 0");
  return opt.potential ? coherence_grid(ens, t_max, threshold, opt) : coherence_hard_spheres(ens, t_max, threshold, opt);
}

Bandwidth scott_bandwidth(const BlobEnsemble& ens, int dim) {
  if (dim < 1) throw std::invalid_argument("bandwidth dimension must be >= 1");
  const std::size_t N = ens.reference.size(), S = ens.size();
  if (S < 2) throw std::invalid_argument("bandwidth needs at least two samples");
  Vec3 var_r, var_v;
  for (std::size_t k = 0; k < N; ++k) {
    Vec3 mr, mv, sr, sv;
    for (const auto& c : ens.samples) {
      const Vec3 dr = min_image(c.positions[k], ens.reference.positions[k], c.L);
      const Vec3 dv = c.velocities[k] - ens.reference.velocities[k];
      mr += dr;
      mv += dv;
      for (int d = 0; d < 3; ++d) {
        sr[d] += dr[d] * dr[d];
        sv[d] += dv[d] * dv[d];
      }
    }
    for (int d = 0; d < 3; ++d) {
      var_r[d] += (sr[d] - mr[d] * mr[d] / S) / (S - 1);
      var_v[d] += (sv[d] - mv[d] * mv[d] / S) / (S - 1);
    }
  }
  const double factor = std::sqrt(7.0) * std::pow(static_cast<double>(S), -1.0 / (dim + 4));
  Bandwidth bw;
  for (int d = 0; d < 3; ++d) {
    bw.r[d] = factor * std::sqrt(std::max(var_r[d], 0.0) / N);
    bw.v[d] = factor * std::sqrt(std::max(var_v[d], 0.0) / N);
    if (!(bw.r[d] > 0.0) || !(bw.v[d] > 0.0))
      throw std::invalid_argument("zero sample spread: kernel bandwidth undefined");
  }
  return bw;
}

Estimate estimate_f1(const BlobEnsemble& ens, const PhasePoint& x, const Bandwidth& bw) {
  const auto p = per_sample(ens, x, x, bw);
  return {mean(p.y1), standard_error(p.y1)};
}

Estimate estimate_f2(const BlobEnsemble& ens, const PhasePoint& x1, const PhasePoint& x2, const Bandwidth& bw) {
  const auto p = per_sample(ens, x1, x2, bw);
  return {mean(p.z), standard_error(p.z)};
}

FactorizationResult factorization_gap(const BlobEnsemble& ens,
                                      const std::vector<std::pair<PhasePoint, PhasePoint>>& probes) {
  FactorizationResult out;
  out.bandwidth = scott_bandwidth(ens, 12);
  for (const auto& [x1, x2] : probes) {
    const auto p = per_sample(ens, x1, x2, out.bandwidth);
    ProbeGap g;
    g.f1_x1 = mean(p.y1);
    g.f1_x2 = mean(p.y2);
    g.f2 = mean(p.z);
    g.gap = g.f2 - g.f1_x1 * g.f1_x2;
    std::vector<double> psi(p.z.size());
    for (std::size_t s = 0; s < psi.size(); ++s) psi[s] = p.z[s] - g.f1_x2 * p.y1[s] - g.f1_x1 * p.y2[s];
    g.se = standard_error(psi);
    g.excluded = torus_distance(x1.r, x2.r, ens.reference.L) < ens.reference.a;
    out.probes.push_back(g);
    if (g.excluded) continue;
    out.max_gap = std::max(out.max_gap, std::fabs(g.gap));
    if (g.gap != 0.0)
      out.max_ratio = std::max(out.max_ratio, g.se > 0.0 ? std::fabs(g.gap) / g.se : std::numeric_limits<double>::infinity());
  }
  return out;
}

std::pair<PhasePoint, PhasePoint> reference_probe(const BlobEnsemble& ens, std::size_t i, std::size_t j) {
  const auto& c = ens.reference;
  if (i >= c.size() || j >= c.size() || i == j) throw std::invalid_argument("probe needs two distinct particles");
  return {{c.positions[i], c.velocities[i]}, {c.positions[j], c.velocities[j]}};
}

CentroidError centroid_error(const BlobEnsemble& ens) {
  CentroidError out{ens.moll.eps_r, ens.moll.eps_v, 0.0, 0.0};
  const std::size_t S = ens.size();
  for (std::size_t k = 0; k < ens.reference.size(); ++k) {
    Vec3 m, m2;
    for (const auto& c : ens.samples) {
      const Vec3 d = min_image(c.positions[k], ens.reference.positions[k], c.L);
      m += d;
      for (int q = 0; q < 3; ++q) m2[q] += d[q] * d[q];
    }
    m = m / static_cast<double>(S);
    double var = 0.0;
    if (S > 1)
      for (int q = 0; q < 3; ++q) var += (m2[q] - S * m[q] * m[q]) / (S - 1);
    const double err = norm(m);
    if (k == 0 || err > out.error) {
      out.error = err;
      out.se = std::sqrt(std::max(var, 0.0) / S);
    }
  }
  return out;
}

std::vector<CentroidError> limit_trajectory_error(const ParticleConfig& gamma, const std::vector<Mollifier>& molls,
                                                  double t_probe, std::size_t S, std::uint64_t seed,
                                                  const FlowOptions& opt) {
  const ParticleConfig at = advance(gamma, t_probe, opt);
  if (min_pair_distance(at) <= gamma.a * (1.0 + 1e-9)) throw Error("probe at contact");
  std::vector<CentroidError> out;
  for (std::size_t i = 0; i < molls.size(); ++i) {
    const auto ens = draw_ensemble(gamma, molls[i], S, derive_seed(seed, "blobs.limit", i));
    out.push_back(centroid_error(flow_ensemble(ens, t_probe, opt)));
  }
  return out;
}

void write_ensemble_csv(std::ostream& os, const BlobEnsemble& ens) {
  os << "sample,particle,t,qx,qy,qz,wx,wy,wz\n";
  os.precision(17);
  auto rows = [&os](long s, const ParticleConfig& c) {
    for (std::size_t k = 0; k < c.size(); ++k) {
      const auto& q = c.positions[k];
      const auto& w = c.velocities[k];
      os << s << ',' << k << ',' << c.time << ',' << q.x << ',' << q.y << ',' << q.z << ',' << w.x << ',' << w.y << ','
         << w.z << '\n';
    }
  };
  rows(-1, ens.reference);
  for (std::size_t s = 0; s < ens.size(); ++s) rows(static_cast<long>(s), ens.samples[s]);
}

std::string blob_report_json(const BlobReport& r) {
  nlohmann::ordered_json j;
  j["epsilon_r"] = r.eps_r;
  j["epsilon_v"] = r.eps_v;
  j["S"] = r.S;
  j["T_epsilon"] = r.T_epsilon;
  j["factorization_gap"] = r.factorization_gap;
  j["factorization_gap_over_se"] = r.factorization_ratio;
  auto& c = j["centroid_errors"] = nlohmann::ordered_json::array();
  for (const auto& e : r.centroid_errors)
    c.push_back({{"epsilon_r", e.eps_r}, {"epsilon_v", e.eps_v}, {"error", e.error}, {"se", e.se}});
  return j.dump(2);
}

}  // namespace enskog
