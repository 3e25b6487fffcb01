#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <queue>
#include <vector>

#include "enskog/torus.hpp"
#include "enskog/vec3.hpp"

namespace enskog {

/// Phase point of N equal hard spheres of diameter a on the torus of side L.
/// Particle mass is 1 throughout the hard-sphere code.
struct ParticleConfig {
  double a = 0.0;
  double L = 1.0;
  double time = 0.0;
  std::vector<TorusPoint> positions;
  std::vector<Vec3> velocities;

  std::size_t size() const { return positions.size(); }
  double volume() const { return L * L * L; }
  /// Mean concentration n = N / V.
  double concentration() const { return static_cast<double>(size()) / volume(); }

  /// Builds a config from raw (unwrapped) coordinates and validates it.
  static ParticleConfig from_raw(double a, double L, const std::vector<Vec3>& q, const std::vector<Vec3>& w);

  /// Checks N >= 1, 0 < a < L/2, finite state and pairwise separation >= a (1 - 1e-12).
  /// Throws std::invalid_argument on violation.
  void validate() const;
};

/// Smallest pairwise centre distance (infinity for N < 2).
double min_pair_distance(const ParticleConfig& c);
Vec3 total_momentum(const ParticleConfig& c);
double kinetic_energy(const ParticleConfig& c);

/// Max-norm distance between two configs of equal size: positions through the
/// minimum image, velocities componentwise.
double state_distance(const ParticleConfig& x, const ParticleConfig& y);

struct CollisionEvent {
  std::size_t i = 0;
  std::size_t j = 0;
  double t_event = 0.0;
  /// Unit vector from the centre of j to the centre of i at contact.
  Vec3 sigma;
};

/// One processed collision as written to the event log.
struct EventRecord {
  CollisionEvent event;
  Vec3 v1_pre, v2_pre, v1_post, v2_post;
  bool grazing = false;
};

struct CollisionResult {
  Vec3 v1p;
  Vec3 v2p;
  /// Impulse transferred to the first sphere; the second receives exactly -impulse.
  Vec3 impulse;
};

/// Elastic hard-sphere law: v1' = v1 + sigma (v21, sigma), v2' = v2 - sigma (v21, sigma).
/// Throws std::invalid_argument if |sigma| deviates from 1 by more than 1e-12
/// or the pair is receding ((v21, sigma) < 0 beyond rounding).
CollisionResult collide(const Vec3& v1, const Vec3& v2, const Vec3& sigma);

struct ContactPrediction {
  double t_event;  ///< absolute time
  Vec3 sigma;
};

/// Earliest approaching contact of spheres i and j within `horizon` time units
/// after config.time. Positions are those at config.time.
std::optional<ContactPrediction> predict_collision(const ParticleConfig& config, std::size_t i, std::size_t j,
                                                   double horizon);

/// Pending events keyed by time with per-particle counters for lazy invalidation.
class EventQueue {
 public:
  static constexpr std::size_t kNoPartner = static_cast<std::size_t>(-1);

  struct Entry {
    double t;
    std::size_t i;
    std::size_t j;  ///< kNoPartner marks a horizon re-check of particle i
    std::uint64_t count_i;
    std::uint64_t count_j;
    Vec3 sigma;
  };

  explicit EventQueue(std::size_t n_particles) : counters_(n_particles, 0) {}

  void push(double t, std::size_t i, std::size_t j, const Vec3& sigma = {});
  /// Next valid event; among valid events within `tie_tol` of the earliest, the
  /// lexicographically smallest (i, j) wins. Stale entries are discarded.
  std::optional<Entry> pop(double tie_tol);
  void invalidate(std::size_t i) { ++counters_[i]; }
  bool empty() const { return heap_.empty(); }

 private:
  struct Later {
    bool operator()(const Entry& x, const Entry& y) const {
      if (x.t != y.t) return x.t > y.t;
      if (x.i != y.i) return x.i > y.i;
      return x.j > y.j;
    }
  };
  bool valid(const Entry& e) const;

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::vector<std::uint64_t> counters_;
};

/// Called after each processed collision with the full state synchronised to
/// the event time (post-collision velocities).
using EventObserver = std::function<void(const ParticleConfig&, const EventRecord&)>;

struct EvolveOptions {
  std::size_t max_events = 10'000'000;
  bool record_log = true;
  /// Prediction horizon in time units; 0 selects L / (sqrt(2) * |w|_2), which
  /// bounds the relative travel of any pair by L.
  double horizon = 0.0;
  double tie_tol = 1e-12;
  EventObserver observer;
};

struct EvolveResult {
  ParticleConfig config;
  std::vector<EventRecord> log;
  std::size_t collisions = 0;
  std::size_t grazing = 0;
};

/// Event-driven hard-sphere flow over a duration t >= 0.
/// Throws Error("event budget exceeded") or Error on a near-triple contact.
EvolveResult evolve(const ParticleConfig& config, double t, const EvolveOptions& options = {});

/// Negates every velocity; positions and time unchanged.
ParticleConfig reverse(const ParticleConfig& config);

/// Uniform non-overlapping positions by rejection and Gaussian velocities with
/// standard deviation velocity_scale per component. Deterministic in seed.
ParticleConfig sample_admissible_config(std::size_t N, double a, double L, double velocity_scale, std::uint64_t seed);

/// One JSON object per line: t, i, j, sigma, v1_pre, v2_pre, v1_post, v2_post (+ grazing when set).
void write_event_log(std::ostream& os, const std::vector<EventRecord>& log);
/// CSV rows t,particle,qx,qy,qz,wx,wy,wz; the header is written when `header` is set.
void write_snapshot(std::ostream& os, const ParticleConfig& config, bool header);

}  // namespace enskog
