#include "enskog/hard_spheres.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <cstdio>

#include "json.hpp"

#include "enskog/error.hpp"
#include "enskog/rng.hpp"

namespace enskog {

namespace {

constexpr double kOverlapTol = 1e-12;  // relative to a
constexpr double kTripleTol = 1e-9;    // relative to a
constexpr double kSqrt2 = 1.4142135623730951;

std::optional<std::pair<double, Vec3>> earliest_contact(const TorusPoint& pi, const Vec3& wi, const TorusPoint& pj,
                                                         const Vec3& wj, double a, double L,
                                                         const std::vector<Vec3>& offsets, double horizon) {
  const Vec3 u = wi - wj;
  const double uu = norm2(u);
  if (uu == 0.0) return std::nullopt;
  const Vec3 d0 = min_image(pi, pj, L);
  const double a2 = a * a;

  double best = std::numeric_limits<double>::infinity();
  Vec3 best_d;
  for (const Vec3& off : offsets) {
    const Vec3 d = d0 + off;
    const double b = dot(d, u);
    if (b >= 0.0) continue;  // not approaching along this image
    const double c = norm2(d) - a2;
    const double disc = b * b - uu * c;
    if (disc < 0.0) continue;
    // smaller root of uu s^2 + 2 b s + c = 0 in the cancellation-free form
    double s = c / (-b + std::sqrt(disc));
    if (s < 0.0) s = 0.0;  // touching within rounding
    if (s <= horizon && s < best) {
      best = s;
      best_d = d;
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  const Vec3 contact = best_d + u * best;
  return std::make_pair(best, contact / norm(contact));
}

}  // namespace

ParticleConfig ParticleConfig::from_raw(double a, double L, const std::vector<Vec3>& q, const std::vector<Vec3>& w) {
  if (q.size() != w.size()) throw std::invalid_argument("positions and velocities differ in length");
  ParticleConfig c;
  c.a = a;
  c.L = L;
  c.positions.reserve(q.size());
  for (const auto& p : q) c.positions.push_back(wrap(p, L));
  c.velocities = w;
  c.validate();
  return c;
}

void ParticleConfig::validate() const {
  if (positions.empty()) throw std::invalid_argument("configuration needs at least one particle");
  if (positions.size() != velocities.size()) throw std::invalid_argument("positions and velocities differ in length");
  if (!(a > 0.0)) throw std::invalid_argument("sphere diameter must be positive");
  if (!(a < 0.5 * L)) throw std::invalid_argument("sphere larger than half the box");
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& p = positions[i];
    if (!(p.x >= 0.0 && p.x < L && p.y >= 0.0 && p.y < L && p.z >= 0.0 && p.z < L)) {
      throw std::invalid_argument("position outside the torus cell");
    }
    if (!is_finite(velocities[i])) throw std::invalid_argument("non-finite velocity");
  }
  const double dmin = min_pair_distance(*this);
  if (dmin < a * (1.0 - kOverlapTol)) {
    throw std::invalid_argument("overlapping spheres: min distance " + std::to_string(dmin));
  }
}

double min_pair_distance(const ParticleConfig& c) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j) m = std::min(m, torus_distance(c.positions[i], c.positions[j], c.L));
  return m;
}

Vec3 total_momentum(const ParticleConfig& c) {
  Vec3 p;
  for (const auto& w : c.velocities) p += w;
  return p;
}

double kinetic_energy(const ParticleConfig& c) {
  double e = 0.0;
  for (const auto& w : c.velocities) e += 0.5 * norm2(w);
  return e;
}

double state_distance(const ParticleConfig& x, const ParticleConfig& y) {
  if (x.size() != y.size()) throw std::invalid_argument("state_distance: size mismatch");
  double err = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    err = std::max(err, max_abs(min_image(x.positions[i], y.positions[i], x.L)));
    err = std::max(err, max_abs(x.velocities[i] - y.velocities[i]));
  }
  return err;
}

CollisionResult collide(const Vec3& v1, const Vec3& v2, const Vec3& sigma) {
  if (!is_finite(v1) || !is_finite(v2) || !is_finite(sigma)) throw std::invalid_argument("collide: non-finite input");
  if (std::fabs(norm(sigma) - 1.0) > 1e-12) throw std::invalid_argument("collide: sigma is not a unit vector");
  const Vec3 v21 = v2 - v1;
  const double normal = dot(v21, sigma);
  if (normal < -1e-12 * (norm(v21) + std::numeric_limits<double>::min())) {
    throw std::invalid_argument("collide: receding pair");
  }
  const Vec3 impulse = sigma * std::max(normal, 0.0);
  return {v1 + impulse, v2 - impulse, impulse};
}

std::optional<ContactPrediction> predict_collision(const ParticleConfig& config, std::size_t i, std::size_t j,
                                                   double horizon) {
  if (i >= config.size() || j >= config.size() || i == j) throw std::out_of_range("predict_collision: bad index");
  if (!(horizon >= 0.0)) throw std::invalid_argument("predict_collision: negative horizon");
  const Vec3 u = config.velocities[i] - config.velocities[j];
  const double travel = norm(u) * horizon;
  const auto offsets = image_offsets(config.a, config.L, std::isfinite(travel) ? travel : 0.0);
  auto hit = earliest_contact(config.positions[i], config.velocities[i], config.positions[j], config.velocities[j],
                              config.a, config.L, offsets, horizon);
  if (!hit) return std::nullopt;
  return ContactPrediction{config.time + hit->first, hit->second};
}

void EventQueue::push(double t, std::size_t i, std::size_t j, const Vec3& sigma) {
  heap_.push({t, i, j, counters_[i], j == kNoPartner ? 0 : counters_[j], sigma});
}

bool EventQueue::valid(const Entry& e) const {
  if (e.count_i != counters_[e.i]) return false;
  return e.j == kNoPartner || e.count_j == counters_[e.j];
}

std::optional<EventQueue::Entry> EventQueue::pop(double tie_tol) {
  while (!heap_.empty() && !valid(heap_.top())) heap_.pop();
  if (heap_.empty()) return std::nullopt;
  Entry first = heap_.top();
  heap_.pop();
  // gather simultaneous events and keep the lexicographically smallest pair
  std::vector<Entry> ties;
  while (!heap_.empty() && heap_.top().t <= first.t + tie_tol) {
    Entry e = heap_.top();
    heap_.pop();
    if (valid(e)) ties.push_back(e);
  }
  for (auto& e : ties) {
    if (std::tie(e.i, e.j) < std::tie(first.i, first.j)) std::swap(e, first);
  }
  for (auto& e : ties) heap_.push(e);
  return first;
}

namespace {

/// Lazily advanced particle state: position is exact at `stamp`.
class Simulation {
 public:
  Simulation(const ParticleConfig& c, const EvolveOptions& opt)
      : cfg_(c), opt_(opt), stamp_(c.size(), c.time), queue_(c.size()) {
    double v2 = 0.0;
    for (const auto& w : cfg_.velocities) v2 += norm2(w);
    speed_bound_ = kSqrt2 * std::sqrt(v2);
    horizon_ = opt.horizon > 0.0 ? opt.horizon : (speed_bound_ > 0.0 ? cfg_.L / speed_bound_ : 0.0);
    if (speed_bound_ > 0.0) offsets_ = image_offsets(cfg_.a, cfg_.L, speed_bound_ * horizon_);
  }

  EvolveResult run(double duration) {
    EvolveResult res;
    const double t_end = cfg_.time + duration;
    if (speed_bound_ > 0.0 && cfg_.size() > 1) {
      for (std::size_t i = 0; i < cfg_.size(); ++i) schedule(i, cfg_.time, i + 1);
      while (auto e = queue_.pop(opt_.tie_tol)) {
        if (e->t > t_end) break;
        if (e->j == EventQueue::kNoPartner) {
          sync(e->i, e->t);
          queue_.invalidate(e->i);
          schedule(e->i, e->t, 0);
          continue;
        }
        process(*e, res);
        if (res.collisions > opt_.max_events) throw Error("event budget exceeded");
      }
    }
    for (std::size_t i = 0; i < cfg_.size(); ++i) sync(i, t_end);
    cfg_.time = t_end;
    res.config = std::move(cfg_);
    return res;
  }

 private:
  TorusPoint position_at(std::size_t k, double t) const {
    return translate(cfg_.positions[k], cfg_.velocities[k] * (t - stamp_[k]), cfg_.L);
  }

  void sync(std::size_t k, double t) {
    if (t != stamp_[k]) {
      cfg_.positions[k] = position_at(k, t);
      stamp_[k] = t;
    }
  }

  /// Predicts contacts of i against all partners (only partners >= first_partner
  /// when seeding) and re-arms the horizon check.
  void schedule(std::size_t i, double now, std::size_t first_partner) {
    const TorusPoint pi = position_at(i, now);
    for (std::size_t j = first_partner; j < cfg_.size(); ++j) {
      if (j == i) continue;
      const TorusPoint pj = position_at(j, now);
      auto hit = earliest_contact(pi, cfg_.velocities[i], pj, cfg_.velocities[j], cfg_.a, cfg_.L, offsets_, horizon_);
      if (!hit) continue;
      const std::size_t lo = std::min(i, j), hi = std::max(i, j);
      const Vec3 sigma = lo == i ? hit->second : -hit->second;
      queue_.push(now + hit->first, lo, hi, sigma);
    }
    queue_.push(now + horizon_, i, EventQueue::kNoPartner);
  }

  void process(const EventQueue::Entry& e, EvolveResult& res) {
    const double t = e.t;
    sync(e.i, t);
    sync(e.j, t);
    const Vec3 d = min_image(cfg_.positions[e.i], cfg_.positions[e.j], cfg_.L);
    const Vec3 sigma = d / norm(d);

    for (std::size_t k = 0; k < cfg_.size(); ++k) {
      if (k == e.i || k == e.j) continue;
      const TorusPoint pk = position_at(k, t);
      const double lim = cfg_.a * (1.0 + kTripleTol);
      if (torus_distance(pk, cfg_.positions[e.i], cfg_.L) < lim || torus_distance(pk, cfg_.positions[e.j], cfg_.L) < lim) {
        throw Error("near-triple contact at t=" + std::to_string(t) + " between particles " + std::to_string(e.i) +
                    ", " + std::to_string(e.j) + " and " + std::to_string(k));
      }
    }

    EventRecord rec;
    rec.event = {e.i, e.j, t, sigma};
    rec.v1_pre = cfg_.velocities[e.i];
    rec.v2_pre = cfg_.velocities[e.j];
    const Vec3 v21 = rec.v2_pre - rec.v1_pre;
    const double normal = dot(v21, sigma);
    if (normal <= 1e-12 * norm(v21)) {
      // grazing: no momentum transfer, logged and counted
      rec.grazing = true;
      rec.v1_post = rec.v1_pre;
      rec.v2_post = rec.v2_pre;
      ++res.grazing;
    } else {
      const auto out = collide(rec.v1_pre, rec.v2_pre, sigma);
      rec.v1_post = out.v1p;
      rec.v2_post = out.v2p;
    }
    cfg_.velocities[e.i] = rec.v1_post;
    cfg_.velocities[e.j] = rec.v2_post;
    ++res.collisions;
    queue_.invalidate(e.i);
    queue_.invalidate(e.j);

    if (opt_.observer) {
      ParticleConfig snap = cfg_;
      for (std::size_t k = 0; k < snap.size(); ++k) snap.positions[k] = position_at(k, t);
      snap.time = t;
      opt_.observer(snap, rec);
    }
    if (opt_.record_log) res.log.push_back(rec);

    schedule(e.i, t, 0);
    schedule(e.j, t, 0);
  }

  ParticleConfig cfg_;
  const EvolveOptions& opt_;
  std::vector<double> stamp_;
  EventQueue queue_;
  std::vector<Vec3> offsets_;
  double speed_bound_ = 0.0;
  double horizon_ = 0.0;
};

}  // namespace

EvolveResult evolve(const ParticleConfig& config, double t, const EvolveOptions& options) {
  config.validate();
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("evolve: duration must be finite and >= 0");
  if (t == 0.0) {
    EvolveResult r;
    r.config = config;
    return r;
  }
  Simulation sim(config, options);
  return sim.run(t);
}

ParticleConfig reverse(const ParticleConfig& config) {
  ParticleConfig out = config;
  for (auto& w : out.velocities) w = -w;
  return out;
}

ParticleConfig sample_admissible_config(std::size_t N, double a, double L, double velocity_scale, std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("need at least one particle");
  if (!(a > 0.0)) throw std::invalid_argument("sphere diameter must be positive");
  if (!(a < 0.5 * L)) throw std::invalid_argument("sphere larger than half the box");
  const double packing = static_cast<double>(N) * (M_PI / 6.0) * a * a * a / (L * L * L);
  if (packing > 0.3) throw std::invalid_argument("packing fraction above 0.3");

  ParticleConfig c;
  c.a = a;
  c.L = L;
  auto pos_rng = make_rng(seed, "config.positions");
  auto vel_rng = make_rng(seed, "config.velocities");
  constexpr int kMaxAttempts = 100000;
  for (std::size_t i = 0; i < N; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const TorusPoint p = wrap({uniform01(pos_rng) * L, uniform01(pos_rng) * L, uniform01(pos_rng) * L}, L);
      placed = std::all_of(c.positions.begin(), c.positions.end(),
                           [&](const TorusPoint& q) { return torus_distance(p, q, L) > a; });
      if (placed) c.positions.push_back(p);
    }
    if (!placed) throw Error("packing too dense");
  }
  for (std::size_t i = 0; i < N; ++i) {
    const double x = standard_normal(vel_rng), y = standard_normal(vel_rng), z = standard_normal(vel_rng);
    c.velocities.push_back(Vec3{x, y, z} * velocity_scale);
  }
  return c;
}

void write_event_log(std::ostream& os, const std::vector<EventRecord>& log) {
  for (const auto& r : log) {
    nlohmann::ordered_json j;
    j["t"] = r.event.t_event;
    j["i"] = r.event.i;
    j["j"] = r.event.j;
    j["sigma"] = to_array(r.event.sigma);
    j["v1_pre"] = to_array(r.v1_pre);
    j["v2_pre"] = to_array(r.v2_pre);
    j["v1_post"] = to_array(r.v1_post);
    j["v2_post"] = to_array(r.v2_post);
    if (r.grazing) j["grazing"] = true;
    os << j.dump() << '\n';
  }
}

void write_snapshot(std::ostream& os, const ParticleConfig& c, bool header) {
  if (header) os << "t,particle,qx,qy,qz,wx,wy,wz\n";
  char buf[512];
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto& q = c.positions[k];
    const auto& w = c.velocities[k];
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", c.time, k, q.x, q.y, q.z, w.x,
                  w.y, w.z);
    os << buf;
  }
}

}  // namespace enskog
