#include "enskog/bev.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "enskog/error.hpp"

namespace enskog {

PairPotential PairPotential::quartic_bump(double eps, double cutoff, double m) {
  PairPotential p;
  p.cutoff = cutoff;
  p.m = m;
  p.phi = [eps, cutoff](double s) {
    const double x = 1.0 - (s / cutoff) * (s / cutoff);
    return eps * x * x;
  };
  p.dphi = [eps, cutoff](double s) {
    const double x = 1.0 - (s / cutoff) * (s / cutoff);
    return -4.0 * eps * s / (cutoff * cutoff) * x;
  };
  return p;
}

PairPotential PairPotential::harmonic_tail(double k, double cutoff, double m) {
  PairPotential p;
  p.cutoff = cutoff;
  p.m = m;
  p.phi = [k, cutoff](double s) { return 0.5 * k * (cutoff - s) * (cutoff - s); };
  p.dphi = [k, cutoff](double s) { return -k * (cutoff - s); };
  return p;
}

PairPotential PairPotential::none(double m) {
  PairPotential p;
  p.m = m;
  return p;
}

void PairPotential::validate(double L) const {
  if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("particle mass must be positive");
  if (!(cutoff >= 0.0) || cutoff > 0.5 * L) throw std::invalid_argument("potential cutoff must lie in [0, L/2]");
  if (cutoff > 0.0 && (!phi || !dphi)) throw std::invalid_argument("potential needs both phi and dphi");
}

namespace {

constexpr double kOverlapTol = 1e-12;
constexpr double kContactTol = 1e-10;  // bisection tolerance, relative to a
constexpr int kSamples = 16;

void check_pair_distance(double s, double a) {
  if (s < a * (1.0 - kOverlapTol)) throw Error("overlapping spheres at distance " + std::to_string(s));
}

std::vector<Vec3> all_forces(const ParticleConfig& c, const PairPotential& pot) {
  std::vector<Vec3> f(c.size());
  if (pot.cutoff <= 0.0) return f;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      const Vec3 d = min_image(c.positions[i], c.positions[j], c.L);
      const double s = norm(d);
      if (s >= pot.cutoff) continue;
      const Vec3 fij = d * (-pot.slope(s) / s);
      f[i] += fij;
      f[j] -= fij;
    }
  }
  return f;
}

struct Contact {
  double tau;
  std::size_t i, j;
  bool crossing;  ///< pair distance passes the cutoff; the step is split there, no collision
};

class BevSimulation {
 public:
  BevSimulation(const ParticleConfig& c, const PairPotential& pot, const BevOptions& opt)
      : cfg_(c), pot_(pot), opt_(opt), force_(all_forces(c, pot)) {}

  BevResult run(double t, double dt) {
    const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t / dt)));
    const double h = t / static_cast<double>(steps);
    const double t0 = cfg_.time;
    if (opt_.record_energy) record_energy();
    for (std::size_t k = 0; k < steps; ++k) {
      advance(h, 0);
      cfg_.time = t0 + static_cast<double>(k + 1) * h;
      if (opt_.record_energy) record_energy();
    }
    res_.config = cfg_;
    return std::move(res_);
  }

 private:
  void record_energy() {
    const double kin = pot_.m * kinetic_energy(cfg_);
    const double pe = potential_energy(cfg_, pot_);
    res_.energy.push_back({cfg_.time, kin, pe, kin + pe});
  }

  void advance(double h, int depth) {
    if (depth > opt_.max_halvings) throw Error("step-size underflow");
    double vmax = 0.0;
    for (std::size_t k = 0; k < cfg_.size(); ++k) {
      vmax = std::max(vmax, norm(cfg_.velocities[k] + force_[k] * (0.5 * h / pot_.m)));
    }
    // a pair gap closes by at most twice the largest displacement
    if (2.0 * vmax * h > 0.25 * cfg_.a) {
      advance(0.5 * h, depth + 1);
      advance(0.5 * h, depth + 1);
      return;
    }
    double remaining = h;
    std::size_t contacts = 0;
    const std::size_t guard = 4 * cfg_.size() * cfg_.size() + 16;
    while (remaining > 0.0) {
      auto hit = first_contact(remaining);
      if (!hit) {
        verlet(remaining);
        break;
      }
      verlet(hit->tau);
      remaining -= hit->tau;
      if (!hit->crossing) collide_pair(hit->i, hit->j);
      if (++contacts > guard) throw Error("too many contacts within one step");
    }
  }

  void verlet(double tau) {
    if (tau <= 0.0) return;
    const double inv_m = 1.0 / pot_.m;
    for (std::size_t k = 0; k < cfg_.size(); ++k) {
      cfg_.velocities[k] += force_[k] * (0.5 * tau * inv_m);
      cfg_.positions[k] = translate(cfg_.positions[k], cfg_.velocities[k] * tau, cfg_.L);
    }
    force_ = all_forces(cfg_, pot_);
    for (std::size_t k = 0; k < cfg_.size(); ++k) cfg_.velocities[k] += force_[k] * (0.5 * tau * inv_m);
    cfg_.time += tau;
  }

  /// Earliest tau in [0, h] at which some pair reaches distance a, or crosses the
  /// potential cutoff, on the Verlet position map. Phi'' jumps at the cutoff, so
  /// steps are split there to keep the integrator second order.
  std::optional<Contact> first_contact(double h) const {
    std::optional<Contact> best;
    const double a = cfg_.a;
    const double inv_m = 1.0 / pot_.m;
    for (std::size_t i = 0; i < cfg_.size(); ++i) {
      for (std::size_t j = i + 1; j < cfg_.size(); ++j) {
        const Vec3 d0 = min_image(cfg_.positions[i], cfg_.positions[j], cfg_.L);
        const Vec3 u = cfg_.velocities[i] - cfg_.velocities[j];
        const Vec3 acc = (force_[i] - force_[j]) * inv_m;
        const double reach = h * norm(u) + 0.5 * h * h * norm(acc);
        const double s0 = norm(d0);
        auto dist = [&](double tau) { return norm(d0 + u * tau + acc * (0.5 * tau * tau)); };
        if (s0 - a <= reach) {
          auto tau = pair_contact([&](double tau) { return dist(tau) - a; }, dot(d0, u) < 0.0, h);
          if (tau && (!best || *tau < best->tau)) best = Contact{*tau, i, j, false};
        }
        if (pot_.cutoff > 0.0 && std::fabs(s0 - pot_.cutoff) <= reach) {
          auto tau = crossing([&](double tau) { return dist(tau) - pot_.cutoff; }, h);
          if (tau && (!best || *tau < best->tau)) best = Contact{*tau, i, j, true};
        }
      }
    }
    return best;
  }

  template <class Gap>
  std::optional<double> pair_contact(const Gap& gap, bool approaching, double h) const {
    double g[kSamples + 1];
    double tau[kSamples + 1];
    for (int k = 0; k <= kSamples; ++k) {
      tau[k] = h * k / kSamples;
      g[k] = gap(tau[k]);
    }
    if (g[0] <= 0.0) {
      if (approaching) return 0.0;
      g[0] = 0.0;  // touching and separating
    }
    for (int k = 1; k <= kSamples; ++k) {
      if (g[k] < 0.0) return bisect(gap, tau[k - 1], tau[k]);
      // a shallow dip between samples: locate the minimum by golden section
      if (k < kSamples && g[k] <= g[k - 1] && g[k] <= g[k + 1]) {
        double lo = tau[k - 1], hi = tau[k + 1];
        constexpr double r = 0.6180339887498949;
        double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
        double f1 = gap(x1), f2 = gap(x2);
        for (int it = 0; it < 80 && f1 >= 0.0 && f2 >= 0.0; ++it) {
          if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = gap(x1);
          } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = gap(x2);
          }
        }
        if (f1 < 0.0) return bisect(gap, tau[k - 1], x1);
        if (f2 < 0.0) return bisect(gap, tau[k - 1], x2);
      }
    }
    return std::nullopt;
  }

  /// First sign change of f on (0, h]; returns a point just past it.
  template <class F>
  std::optional<double> crossing(const F& f, double h) const {
    double prev = 0.0;
    double f0 = f(0.0);
    for (int k = 1; k <= kSamples; ++k) {
      const double tk = h * k / kSamples;
      const double fk = f(tk);
      if (f0 == 0.0) {
        f0 = fk;
        prev = tk;
        continue;
      }
      if ((fk < 0.0) != (f0 < 0.0) && fk != 0.0) {
        double lo = prev, hi = tk;
        const double tol = kContactTol * cfg_.a;
        for (int it = 0; it < 200 && std::fabs(f(hi)) > tol; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          const double fm = f(mid);
          if (fm != 0.0 && (fm < 0.0) != (f0 < 0.0)) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        return hi;
      }
      prev = tk;
    }
    return std::nullopt;
  }

  /// Returns the outside end of a bracket shrunk until the gap is within tolerance.
  template <class Gap>
  double bisect(const Gap& gap, double lo, double hi) const {
    double glo = gap(lo);
    if (glo < 0.0) glo = 0.0;
    if (!(gap(hi) < 0.0)) throw Error("contact bisection: bracket failure");
    const double tol = kContactTol * cfg_.a;
    for (int it = 0; it < 200 && glo > tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double gm = gap(mid);
      if (gm < 0.0) {
        hi = mid;
      } else {
        lo = mid;
        glo = gm;
      }
    }
    return lo;
  }

  void collide_pair(std::size_t i, std::size_t j) {
    const Vec3 d = min_image(cfg_.positions[i], cfg_.positions[j], cfg_.L);
    const Vec3 sigma = d / norm(d);
    EventRecord rec;
    rec.event = {i, j, cfg_.time, sigma};
    rec.v1_pre = cfg_.velocities[i];
    rec.v2_pre = cfg_.velocities[j];
    const Vec3 v21 = rec.v2_pre - rec.v1_pre;
    if (dot(v21, sigma) <= 1e-12 * norm(v21)) {
      rec.grazing = true;
      rec.v1_post = rec.v1_pre;
      rec.v2_post = rec.v2_pre;
      ++res_.grazing;
    } else {
      const auto out = collide(rec.v1_pre, rec.v2_pre, sigma);
      rec.v1_post = out.v1p;
      rec.v2_post = out.v2p;
    }
    cfg_.velocities[i] = rec.v1_post;
    cfg_.velocities[j] = rec.v2_post;
    if (++res_.collisions > opt_.max_events) throw Error("event budget exceeded");
    if (opt_.observer) opt_.observer(cfg_, rec);
    if (opt_.record_log) res_.log.push_back(rec);
  }

  ParticleConfig cfg_;
  const PairPotential& pot_;
  const BevOptions& opt_;
  std::vector<Vec3> force_;
  BevResult res_;
};

}  // namespace

Vec3 total_force(const ParticleConfig& config, const PairPotential& pot, std::size_t i) {
  if (i >= config.size()) throw std::out_of_range("total_force: bad index");
  Vec3 f;
  for (std::size_t j = 0; j < config.size(); ++j) {
    if (j == i) continue;
    const Vec3 d = min_image(config.positions[i], config.positions[j], config.L);
    const double s = norm(d);
    check_pair_distance(s, config.a);
    if (s >= pot.cutoff) continue;
    f += d * (-pot.slope(s) / s);
  }
  return f;
}

double potential_energy(const ParticleConfig& config, const PairPotential& pot) {
  double e = 0.0;
  if (pot.cutoff <= 0.0) return e;
  for (std::size_t i = 0; i < config.size(); ++i)
    for (std::size_t j = i + 1; j < config.size(); ++j)
      e += pot.value(torus_distance(config.positions[i], config.positions[j], config.L));
  return e;
}

double total_energy(const ParticleConfig& config, const PairPotential& pot) {
  return pot.m * kinetic_energy(config) + potential_energy(config, pot);
}

BevResult evolve_bev(const ParticleConfig& config, const PairPotential& pot, double t, double dt,
                     const BevOptions& options) {
  config.validate();
  pot.validate(config.L);
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("evolve_bev: duration must be finite and >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("evolve_bev: dt must be positive");
  if (t == 0.0) {
    BevResult r;
    r.config = config;
    if (options.record_energy) {
      const double kin = pot.m * kinetic_energy(config), pe = potential_energy(config, pot);
      r.energy.push_back({config.time, kin, pe, kin + pe});
    }
    return r;
  }
  BevSimulation sim(config, pot, options);
  return sim.run(t, dt);
}

void write_energy_csv(std::ostream& os, const std::vector<EnergySample>& energy, bool header) {
  if (header) os << "t,kinetic,potential,total\n";
  char buf[160];
  for (const auto& e : energy) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", e.t, e.kinetic, e.potential, e.total);
    os << buf;
  }
}

}  // namespace enskog
