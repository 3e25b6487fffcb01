#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "enskog/bev.hpp"
#include "enskog/collision.hpp"
#include "enskog/hard_spheres.hpp"
#include "enskog/rng.hpp"

namespace enskog {

/// Tensor bump b(x) = (15/16)(1 - x^2)^2 on [-1, 1]^6, scaled by eps_r in
/// position and eps_v in velocity. Either width may be 0 (a point mass in
/// that block); the density itself needs both positive.
struct Mollifier {
  double eps_r = 0.0;
  double eps_v = 0.0;

  static double bump(double x) {
    const double s = 1.0 - x * x;
    return x > -1.0 && x < 1.0 ? 0.9375 * s * s : 0.0;
  }
  /// Standard deviation of b, 1/sqrt(7).
  static double bump_std();
  /// Draw from b: the median of five uniforms is Beta(3, 3) on [0, 1].
  static double sample_bump(Rng& rng);

  bool degenerate() const { return eps_r == 0.0 && eps_v == 0.0; }
  /// Throws std::invalid_argument for negative or non-finite widths.
  void validate() const;
  /// delta_eps(dr, dv); throws std::invalid_argument unless both widths are positive.
  double density(const Vec3& dr, const Vec3& dv) const;
  /// delta_eps(0, 0) = (15/16)^6 / (eps_r^3 eps_v^3).
  double peak() const;
};

/// Throws ConfigError unless every pair of centres is farther apart than a + 2 eps_r.
void check_blob_separation(const ParticleConfig& gamma, const Mollifier& moll);

/// f(r, v) = n^{-1} sum_i delta_eps(r - q_i, v - w_i) with minimum-image offsets;
/// integrates to V. Throws ConfigError on the separation check.
PhaseField make_blob_initial(const ParticleConfig& gamma, const Mollifier& moll);

struct BlobEnsemble {
  ParticleConfig reference;
  ParticleConfig reference_initial;
  Mollifier moll;
  std::vector<ParticleConfig> samples;  ///< current states; particle labels follow the reference
  std::vector<ParticleConfig> initial;
  std::uint64_t seed = 0;

  std::size_t size() const { return samples.size(); }
  double time() const { return reference.time; }
};

/// S labelled configurations, particle k displaced from (q_k, w_k) by an
/// independent draw of the mollifier. Stream per sample: (seed, "blobs.sample", s).
BlobEnsemble draw_ensemble(const ParticleConfig& gamma, const Mollifier& moll, std::size_t S, std::uint64_t seed);

struct FlowOptions {
  std::optional<PairPotential> potential;  ///< set: evolve_bev with step dt
  double dt = 1e-3;
  std::size_t max_events = 1'000'000;
  unsigned threads = 1;
};

/// Pushes every sample and the reference forward by t.
BlobEnsemble flow_ensemble(const BlobEnsemble& ens, double t, const FlowOptions& opt = {});
/// Negates every sample and reference velocity.
BlobEnsemble reverse_ensemble(const BlobEnsemble& ens);

/// Largest T <= t_max such that every sample particle stays within `threshold`
/// of its reference particle on [0, T], measured from the ensemble's current time.
/// Hard spheres: motion is piecewise linear, so distances are checked at every
/// event time of sample and reference and on a 100-point grid, and the exit is
/// located exactly inside the first failing interval. With a potential only the
/// grid is checked and T is the last passing grid time.
/// Throws std::invalid_argument unless 0 < threshold < a/2 and t_max >= 0.
double coherence_time(const BlobEnsemble& ens, double t_max, double threshold, const FlowOptions& opt = {});

struct PhasePoint {
  TorusPoint r;
  Vec3 v;
};

/// Per-coordinate kernel half-widths of the marginal estimators.
struct Bandwidth {
  Vec3 r;
  Vec3 v;
};

/// Scott's rule per coordinate, sigma_d * S^{-1/(dim+4)}, expressed as half-widths
/// of the bump kernel (sqrt(7) times the standard deviation). sigma_d is the
/// root-mean-square over particles of each cloud's spread about its reference
/// particle. Throws std::invalid_argument when some spread is zero.
Bandwidth scott_bandwidth(const BlobEnsemble& ens, int dim);

struct Estimate {
  double value = 0.0;
  double se = 0.0;  ///< Monte Carlo standard error over samples
};

/// F1(x) = (V/N) (1/S) sum_s sum_k K(x - x_k^s), symmetric in the labels.
Estimate estimate_f1(const BlobEnsemble& ens, const PhasePoint& x, const Bandwidth& bw);
/// F2(x1, x2) = (V/N)^2 (1/S) sum_s sum_{k != l} K(x1 - x_k^s) K(x2 - x_l^s),
/// set to 0 when |r2 - r1| < a: no admissible sample has a pair that close.
Estimate estimate_f2(const BlobEnsemble& ens, const PhasePoint& x1, const PhasePoint& x2, const Bandwidth& bw);

struct ProbeGap {
  double f2 = 0.0;
  double f1_x1 = 0.0;
  double f1_x2 = 0.0;
  double gap = 0.0;  ///< f2 - f1_x1 f1_x2
  double se = 0.0;   ///< delta-method error of the gap from per-sample influences
  bool excluded = false;  ///< |r2 - r1| < a
};

struct FactorizationResult {
  std::vector<ProbeGap> probes;
  double max_gap = 0.0;    ///< over probes with |r2 - r1| >= a
  double max_ratio = 0.0;  ///< max of |gap| / se over those probes (0 when both vanish, inf when only se does)
  Bandwidth bandwidth;
};

/// |F2 - F1 F1| at each probe pair for the ensemble at its current time. Both
/// estimators use the same kernel, Scott's rule for the 12-dimensional pair space,
/// so the comparison carries no bandwidth bias when the clouds are independent.
FactorizationResult factorization_gap(const BlobEnsemble& ens, const std::vector<std::pair<PhasePoint, PhasePoint>>& probes);

/// Reference states of two distinct particles as a probe pair.
std::pair<PhasePoint, PhasePoint> reference_probe(const BlobEnsemble& ens, std::size_t i, std::size_t j);

struct CentroidError {
  double eps_r = 0.0;
  double eps_v = 0.0;
  double error = 0.0;  ///< max over particles of |mean offset of cloud k from q_k(t)|
  double se = 0.0;     ///< standard error of that particle's centroid (norm over components)
};

/// Max over particles of the distance between each cloud's position centroid and
/// the reference trajectory at t, for each mollifier in turn.
CentroidError centroid_error(const BlobEnsemble& ens);

/// Draws an ensemble per mollifier (stream (seed, "blobs.limit", index)), flows it
/// to t_probe and reports centroid errors. Throws Error("probe at contact") when
/// the reference has a pair within 1e-9 a of contact at t_probe.
std::vector<CentroidError> limit_trajectory_error(const ParticleConfig& gamma, const std::vector<Mollifier>& molls,
                                                  double t_probe, std::size_t S, std::uint64_t seed,
                                                  const FlowOptions& opt = {});

/// Rows sample,particle,t,qx,qy,qz,wx,wy,wz (reference rows use sample = -1).
void write_ensemble_csv(std::ostream& os, const BlobEnsemble& ens);

struct BlobReport {
  double eps_r = 0.0;
  double eps_v = 0.0;
  std::size_t S = 0;
  double T_epsilon = 0.0;
  double factorization_gap = 0.0;
  double factorization_ratio = 0.0;
  std::vector<CentroidError> centroid_errors;
};
std::string blob_report_json(const BlobReport& report);

}  // namespace enskog
