#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "enskog/bev.hpp"
#include "enskog/blobs.hpp"
#include "enskog/collision.hpp"
#include "enskog/error.hpp"
#include "enskog/hard_spheres.hpp"
#include "enskog/homogeneous.hpp"
#include "enskog/parallel.hpp"
#include "enskog/reversal.hpp"

#ifndef ENSKOG_VERSION
#define ENSKOG_VERSION "0.0.0"
#endif

namespace enskog::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

/// Read access to one JSON object with ConfigError on missing keys or bad types.
struct Cfg {
  const json* j;
  std::string where;

  std::string name(const char* k) const { return where.empty() ? std::string(k) : where + "." + k; }
  bool has(const char* k) const { return j->contains(k) && !(*j)[k].is_null(); }

  template <class T>
  T as(const char* k) const {
    try {
      return (*j)[k].get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + name(k) + "' has the wrong type: " + e.what());
    }
  }
  template <class T>
  T get(const char* k, const T& def) const {
    return has(k) ? as<T>(k) : def;
  }
  template <class T>
  T req(const char* k) const {
    if (!has(k)) throw ConfigError("missing config key '" + name(k) + "'");
    return as<T>(k);
  }
  Cfg sub(const char* k) const {
    if (!has(k) || !(*j)[k].is_object()) throw ConfigError("config key '" + name(k) + "' must be an object");
    return {&(*j)[k], name(k)};
  }
  Vec3 vec(const char* k, const Vec3& def) const {
    if (!has(k)) return def;
    const auto a = as<std::vector<double>>(k);
    if (a.size() != 3) throw ConfigError("config key '" + name(k) + "' must hold 3 numbers");
    return {a[0], a[1], a[2]};
  }
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

/// Runs a parse step, reporting validity-gate failures of the library as config errors.
template <class F>
auto gate(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

struct Context {
  std::string command;
  json config;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  fs::path out;
  std::vector<std::string> outputs;
  ojson summary;

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (out / name).string());
    f << content;
    if (!f) throw Error("write failed: " + (out / name).string());
    outputs.push_back(name);
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------- shared config blocks ----------

ParticleConfig parse_particles(const Cfg& c, std::uint64_t seed) {
  const double a = c.req<double>("a");
  const double L = c.get<double>("L", 1.0);
  require(L > 0.0 && std::isfinite(L), "box side L must be positive");
  require(a > 0.0, "sphere diameter a must be positive");
  require(a < 0.5 * L, "sphere larger than half the box");
  return gate([&] {
    if (c.has("positions")) {
      const auto q = c.as<std::vector<std::vector<double>>>("positions");
      const auto w = c.req<std::vector<std::vector<double>>>("velocities");
      require(!q.empty() && q.size() == w.size(), "positions and velocities must be non-empty and of equal length");
      std::vector<Vec3> qs, ws;
      for (std::size_t i = 0; i < q.size(); ++i) {
        require(q[i].size() == 3 && w[i].size() == 3, "each position and velocity needs 3 components");
        qs.push_back({q[i][0], q[i][1], q[i][2]});
        ws.push_back({w[i][0], w[i][1], w[i][2]});
      }
      return ParticleConfig::from_raw(a, L, qs, ws);
    }
    const int N = c.req<int>("N");
    require(N >= 1, "particle count N must be >= 1");
    return sample_admissible_config(static_cast<std::size_t>(N), a, L, c.get<double>("velocity_scale", 1.0),
                                    derive_seed(seed, "cli.particles"));
  });
}

std::optional<PairPotential> parse_potential(const Cfg& root, double L) {
  if (!root.has("potential")) return std::nullopt;
  const Cfg c = root.sub("potential");
  const auto kind = c.req<std::string>("kind");
  PairPotential p;
  if (kind == "none")
    return std::nullopt;
  else if (kind == "quartic_bump")
    p = PairPotential::quartic_bump(c.req<double>("eps"), c.req<double>("cutoff"), c.get<double>("m", 1.0));
  else if (kind == "harmonic_tail")
    p = PairPotential::harmonic_tail(c.req<double>("k"), c.req<double>("cutoff"), c.get<double>("m", 1.0));
  else
    throw ConfigError("unknown potential kind '" + kind + "'");
  gate([&] {
    p.validate(L);
    return 0;
  });
  return p;
}

VelocityField parse_velocity_field(const Cfg& root) {
  const int M = root.get<int>("M", 24);
  const double v_max = root.get<double>("v_max", 6.0);
  require(M >= 2, "grid size M must be >= 2");
  require(v_max > 0.0, "v_max must be positive");
  const Cfg c = root.sub("initial");
  const auto kind = c.req<std::string>("kind");
  const double theta = c.get<double>("theta", 1.0);
  require(theta > 0.0, "temperature theta must be positive");
  if (kind == "maxwellian") return maxwellian_field(M, v_max, c.get<double>("rho", 1.0), c.vec("u", {}), theta);
  if (kind == "bimodal") return bimodal_velocity_field(M, v_max, c.vec("u", {1.5, 0.0, 0.0}), theta);
  throw ConfigError("unknown initial field kind '" + kind + "'");
}

KineticOptions parse_kinetic_options(const Cfg& root, std::uint64_t seed, unsigned threads) {
  KineticOptions o;
  const auto op = root.get<std::string>("operator", "lattice");
  if (op == "lattice")
    o.op = KineticOptions::Operator::Lattice;
  else if (op == "quadrature")
    o.op = KineticOptions::Operator::Quadrature;
  else
    throw ConfigError("unknown operator '" + op + "'");
  o.channel_draws = root.get<std::size_t>("channel_draws", o.channel_draws);
  require(o.channel_draws >= 1, "channel_draws must be >= 1");
  o.clip_budget = root.get<double>("clip_budget", o.clip_budget);
  o.seed = derive_seed(seed, "cli.kinetic");
  o.threads = threads;
  return o;
}

double positive(const Cfg& c, const char* key, double def) {
  const double x = c.get<double>(key, def);
  require(x > 0.0 && std::isfinite(x), "config key '" + c.name(key) + "' must be positive");
  return x;
}

// ---------- simulate ----------

void cmd_simulate(const Cfg& c, Context& ctx) {
  const ParticleConfig gamma = parse_particles(c.sub("particles"), ctx.seed);
  const double t = c.req<double>("t");
  require(t >= 0.0, "simulation time t must be >= 0");
  const auto pot = parse_potential(c, gamma.L);
  const double dt = pot ? positive(c, "dt", 1e-3) : 0.0;
  const int chunks = c.get<int>("snapshots", 10);
  require(chunks >= 1, "snapshots must be >= 1");
  const auto max_events = c.get<std::size_t>("max_events", 10'000'000);

  std::ostringstream events, snaps, energy;
  write_snapshot(snaps, gamma, true);
  double min_gap = std::numeric_limits<double>::infinity();
  const EventObserver obs = [&](const ParticleConfig& now, const EventRecord&) {
    min_gap = std::min(min_gap, min_pair_distance(now));
  };
  ParticleConfig cur = gamma;
  std::size_t collisions = 0, grazing = 0;
  for (int k = 0; k < chunks; ++k) {
    const double span = t / chunks;
    if (pot) {
      BevOptions o;
      o.max_events = max_events;
      o.observer = obs;
      auto r = evolve_bev(cur, *pot, span, dt, o);
      write_event_log(events, r.log);
      write_energy_csv(energy, r.energy, k == 0);
      collisions += r.collisions;
      grazing += r.grazing;
      cur = r.config;
    } else {
      EvolveOptions o;
      o.max_events = max_events;
      o.observer = obs;
      auto r = evolve(cur, span, o);
      write_event_log(events, r.log);
      collisions += r.collisions;
      grazing += r.grazing;
      cur = r.config;
    }
    write_snapshot(snaps, cur, false);
  }
  ctx.write("events.jsonl", events.str());
  ctx.write("snapshots.csv", snaps.str());
  if (pot) ctx.write("energy.csv", energy.str());

  auto& s = ctx.summary;
  s["N"] = gamma.size();
  s["a"] = gamma.a;
  s["L"] = gamma.L;
  s["t"] = t;
  s["collisions"] = collisions;
  s["grazing"] = grazing;
  s["min_pair_distance_at_events"] = collisions > 0 ? json(min_gap) : json(nullptr);
  s["momentum_initial"] = to_array(total_momentum(gamma));
  s["momentum_final"] = to_array(total_momentum(cur));
  if (pot) {
    s["energy_initial"] = total_energy(gamma, *pot);
    s["energy_final"] = total_energy(cur, *pot);
  } else {
    s["energy_initial"] = kinetic_energy(gamma);
    s["energy_final"] = kinetic_energy(cur);
  }
}

// ---------- kinetic ----------

void cmd_kinetic(const Cfg& c, Context& ctx) {
  const VelocityField initial = parse_velocity_field(c);
  const double a = positive(c, "a", 0.1), n = positive(c, "n", 10.0);
  const int steps = c.req<int>("steps");
  require(steps >= 1, "steps must be >= 1");
  const double dt_cfg = c.get<double>("dt", 0.0);
  require(dt_cfg >= 0.0, "dt must be >= 0 (0 selects half the stability bound)");
  const int reverse_at = c.get<int>("reverse_at_step", -1);
  const KineticOptions opt = parse_kinetic_options(c, ctx.seed, ctx.threads);

  HomogeneousSolver solver(initial.M, initial.v_max, a, n, opt);
  const double dt = dt_cfg > 0.0 ? dt_cfg : 0.5 * solver.stability_bound(initial);
  VelocityField f = initial;
  std::vector<KineticSample> series{observe(f)};
  double max_rise = 0.0, max_rise_after = 0.0;
  for (int k = 0; k < steps; ++k) {
    if (k == reverse_at) f = reverse_field(f);
    StepInfo info;
    f = solver.step(f, dt, &info);
    series.push_back(observe(f, info.clipped_mass));
    const double rise = series.back().H - series[series.size() - 2].H;
    max_rise = std::max(max_rise, rise);
    if (reverse_at >= 0 && k >= reverse_at) max_rise_after = std::max(max_rise_after, rise);
  }
  std::ostringstream ts, field;
  write_time_series_csv(ts, series);
  write_field_csv(field, f);
  ctx.write("timeseries.csv", ts.str());
  ctx.write("field_final.csv", field.str());
  ctx.write("field_header.json", field_header_json(f));

  const auto m0 = series.front().m, m1 = series.back().m;
  auto& s = ctx.summary;
  s["M"] = initial.M;
  s["dt"] = dt;
  s["steps"] = steps;
  s["channels"] = solver.channel_count();
  s["mass_relative_drift"] = std::fabs(m1.mass - m0.mass) / m0.mass;
  s["momentum_drift"] = max_abs(m1.momentum - m0.momentum) / m0.mass;
  s["energy_relative_drift"] = std::fabs(m1.energy - m0.energy) / m0.energy;
  s["H_initial"] = series.front().H;
  s["H_final"] = series.back().H;
  s["max_H_increase"] = max_rise;
  if (reverse_at >= 0) s["max_H_increase_after_reversal"] = max_rise_after;
  double clipped = 0.0;
  for (const auto& x : series) clipped = std::max(clipped, x.clipped_mass);
  s["max_clipped_mass"] = clipped;
}

// ---------- blobs ----------

std::vector<Mollifier> parse_mollifiers(const Cfg& c) {
  const auto er = c.req<std::vector<double>>("epsilon_r");
  std::vector<double> ev;
  if (c.has("epsilon_v"))
    ev = c.as<std::vector<double>>("epsilon_v");
  else
    for (double e : er) ev.push_back(e * c.get<double>("epsilon_v_ratio", 1.0));
  require(!er.empty() && er.size() == ev.size(), "epsilon_r and epsilon_v must be non-empty and of equal length");
  std::vector<Mollifier> out;
  for (std::size_t i = 0; i < er.size(); ++i) {
    Mollifier m{er[i], ev[i]};
    gate([&] {
      m.validate();
      return 0;
    });
    out.push_back(m);
  }
  return out;
}

void cmd_blobs(const Cfg& c, Context& ctx) {
  const ParticleConfig gamma = parse_particles(c.sub("particles"), ctx.seed);
  const auto molls = parse_mollifiers(c);
  for (const auto& m : molls) check_blob_separation(gamma, m);
  const auto S = c.get<std::size_t>("S", 2000);
  require(S >= 2, "S must be >= 2");
  const double t_probe = c.req<double>("t_probe");
  require(t_probe >= 0.0, "t_probe must be >= 0");
  const double t_max = c.get<double>("t_max", t_probe);
  require(t_max >= 0.0, "t_max must be >= 0");
  const double threshold = c.get<double>("threshold", 0.25 * gamma.a);
  require(threshold > 0.0 && threshold < 0.5 * gamma.a, "threshold must lie in (0, a/2)");
  const bool ensembles = c.get<bool>("write_ensembles", true);
  FlowOptions flow;
  flow.potential = parse_potential(c, gamma.L);
  if (flow.potential) flow.dt = positive(c, "dt", 1e-3);
  flow.threads = ctx.threads;

  ojson reports = ojson::array();
  for (std::size_t i = 0; i < molls.size(); ++i) {
    const auto ens = draw_ensemble(gamma, molls[i], S, derive_seed(ctx.seed, "cli.blobs", i));
    BlobReport r;
    r.eps_r = molls[i].eps_r;
    r.eps_v = molls[i].eps_v;
    r.S = S;
    r.T_epsilon = coherence_time(ens, t_max, threshold, flow);
    if (!molls[i].degenerate() && molls[i].eps_r > 0.0 && molls[i].eps_v > 0.0) {
      std::set<double> times{0.0, 0.5 * r.T_epsilon, r.T_epsilon};
      for (double t : times) {
        const auto at = flow_ensemble(ens, t, flow);
        std::vector<std::pair<PhasePoint, PhasePoint>> probes;
        for (std::size_t p = 0; p < gamma.size(); ++p)
          for (std::size_t q = p + 1; q < gamma.size(); ++q) probes.push_back(reference_probe(at, p, q));
        if (probes.empty()) continue;
        const auto g = factorization_gap(at, probes);
        r.factorization_gap = std::max(r.factorization_gap, g.max_gap);
        r.factorization_ratio = std::max(r.factorization_ratio, g.max_ratio);
      }
    }
    const auto at_probe = flow_ensemble(ens, t_probe, flow);
    if (min_pair_distance(at_probe.reference) <= gamma.a * (1.0 + 1e-9)) throw Error("probe at contact");
    r.centroid_errors.push_back(centroid_error(at_probe));
    reports.push_back(ojson::parse(blob_report_json(r)));
    if (ensembles) {
      std::ostringstream os;
      write_ensemble_csv(os, at_probe);
      ctx.write("ensemble_" + std::to_string(i) + ".csv", os.str());
    }
  }
  ctx.write("blobs_report.json", reports.dump(2) + "\n");
  ctx.summary["reports"] = reports.size();
}

// ---------- reversal ----------

void cmd_reversal(const Cfg& c, Context& ctx) {
  const auto mode = c.req<std::string>("mode");
  ReversalReport r;
  if (mode == "particle") {
    const ParticleConfig gamma = parse_particles(c.sub("particles"), ctx.seed);
    const double t = c.req<double>("t");
    require(t >= 0.0, "t must be >= 0");
    r = run_particle_reversal(gamma, t, c.get<double>("tolerance", 1e-6));
  } else if (mode == "blob") {
    const ParticleConfig gamma = parse_particles(c.sub("particles"), ctx.seed);
    const Mollifier m{c.req<double>("epsilon_r"), c.req<double>("epsilon_v")};
    gate([&] {
      m.validate();
      return 0;
    });
    check_blob_separation(gamma, m);
    const double t = c.req<double>("t");
    require(t >= 0.0, "t must be >= 0");
    const auto S = c.get<std::size_t>("S", 200);
    require(S >= 1, "S must be >= 1");
    FlowOptions flow;
    flow.threads = ctx.threads;
    r = run_blob_reversal(gamma, m, S, t, derive_seed(ctx.seed, "cli.reversal"), c.get<double>("tolerance", 1e-6), flow);
  } else if (mode == "smooth") {
    const VelocityField initial = parse_velocity_field(c);
    SmoothOptions o;
    o.a = positive(c, "a", 0.1);
    o.n = positive(c, "n", 10.0);
    o.dt = c.get<double>("dt", 0.0);
    require(o.dt >= 0.0, "dt must be >= 0");
    o.condition11_samples = c.get<std::size_t>("condition11_samples", o.condition11_samples);
    o.kinetic = parse_kinetic_options(c, ctx.seed, ctx.threads);
    const double t_rev = c.req<double>("t_rev"), t_total = c.req<double>("t_total");
    require(t_rev >= 0.0 && t_rev < t_total, "reversal needs 0 <= t_rev < t_total");
    r = run_smooth_irreversibility(initial, t_rev, t_total, o);
    std::ostringstream os;
    write_h_series_csv(os, r);
    ctx.write("h_series.csv", os.str());
  } else {
    throw ConfigError("unknown reversal mode '" + mode + "'");
  }
  ctx.write("reversal_report.json", report_json(r) + "\n");
  ctx.summary["verdict"] = r.verdict;
}

// ---------- stscan ----------

PhaseField parse_phase_field(const Cfg& root, double L, std::uint64_t seed) {
  const Cfg c = root.sub("field");
  const auto kind = c.req<std::string>("kind");
  const double theta = positive(c, "theta", 1.0);
  if (kind == "uniform_maxwellian") return uniform_maxwellian(L, theta, c.vec("u", {}));
  if (kind == "bimodal") return bimodal_field(L, c.vec("u", {1.0, 0.0, 0.0}), theta);
  if (kind == "modulated") return modulated_maxwellian(L, theta);
  if (kind == "shear") return shear_flow_field(L, c.get<double>("flow_amplitude", 0.5), theta);
  if (kind == "blobs") {
    const auto gamma = parse_particles(c.sub("particles"), seed);
    require(gamma.L == L, "blob particles must use the scan's L");
    return make_blob_initial(gamma, {c.req<double>("epsilon_r"), c.req<double>("epsilon_v")});
  }
  throw ConfigError("unknown field kind '" + kind + "'");
}

QuadratureRule parse_quadrature(const Cfg& root) {
  if (!root.has("quadrature")) return QuadratureRule::make();
  const Cfg q = root.sub("quadrature");
  const auto kind = q.get<std::string>("kind", "tensor");
  const int n_cos = q.get<int>("n_cos", 16), n_phi = q.get<int>("n_phi", 32);
  const double scale = positive(q, "velocity_scale", 1.0), factor = positive(q, "vmax_factor", 6.0);
  return gate([&] {
    require(n_cos >= 1 && n_phi >= 1, "sphere rule sizes must be >= 1");
    if (kind == "tensor") {
      const int n_v = q.get<int>("n_v", 18);
      require(n_v >= 1, "n_v must be >= 1");
      return QuadratureRule::make(n_cos, n_phi, n_v, scale, factor, q.vec("v_center", {}));
    }
    if (kind == "aligned")
      return QuadratureRule::make_aligned(n_cos, n_phi, q.get<int>("n_normal", 24), q.get<int>("n_tangent", 24), scale,
                                          factor, q.vec("v_center", {}));
    throw ConfigError("unknown quadrature kind '" + kind + "'");
  });
}

void cmd_stscan(const Cfg& c, Context& ctx) {
  const double L = positive(c, "L", 1.0);
  const double a = positive(c, "a", 0.1), n = positive(c, "n", 10.0);
  require(a < 0.5 * L, "sphere larger than half the box");
  const PhaseField f = parse_phase_field(c, L, ctx.seed);
  const QuadratureRule quad = parse_quadrature(c);
  const auto probes = c.get<std::size_t>("probes", 100);
  require(probes >= 1, "probes must be >= 1");
  const double vscale = positive(c, "velocity_scale", 1.0);
  const auto pot = parse_potential(c, L);
  // "ball" (default): offsets over the potential's support, symmetric about r1; "torus": midpoint grid
  const auto grid_kind = c.get<std::string>("vlasov_quadrature", "ball");
  const int grid_n = c.get<int>("vlasov_grid", 16);
  require(grid_n >= 1, "vlasov_grid must be >= 1");
  require(grid_kind == "ball" || grid_kind == "torus", "vlasov_quadrature must be 'ball' or 'torus'");
  const bool richardson = c.get<bool>("richardson", false);
  const auto c11_count = c.get<std::size_t>("condition11_samples", 1000);

  std::vector<TorusPoint> rs(probes);
  std::vector<Vec3> vs(probes);
  Rng rng = make_rng(ctx.seed, "cli.stscan.probes");
  for (std::size_t k = 0; k < probes; ++k) {
    rs[k] = wrap({uniform01(rng) * L, uniform01(rng) * L, uniform01(rng) * L}, L);
    for (int d = 0; d < 3; ++d) vs[k][d] = vscale * standard_normal(rng);
  }
  SpatialQuadrature grid;
  if (pot)
    grid = grid_kind == "ball" ? SpatialQuadrature::ball(pot->cutoff, grid_n, grid_n, 2 * grid_n)
                               : SpatialQuadrature::torus_grid(L, grid_n);
  std::vector<StPair> st(probes), half(richardson ? probes : 0);
  std::vector<double> vlasov(probes, 0.0);
  parallel_for(probes, ctx.threads, [&](std::size_t k) {
    st[k] = st_both(f, rs[k], vs[k], a, n, quad);
    if (richardson) half[k] = st_both(f, rs[k], vs[k], 0.5 * a, 4.0 * n, quad);
    if (pot) vlasov[k] = vlasov_term(f, rs[k], vs[k], *pot, n, grid, quad);
  });

  std::ostringstream os;
  os << "r_x,r_y,r_z,v_x,v_y,v_z,st_enskog,st_boltzmann,vlasov\n";
  double gap = 0.0, gap_half = 0.0;
  for (std::size_t k = 0; k < probes; ++k) {
    os << fmt(rs[k].x) << ',' << fmt(rs[k].y) << ',' << fmt(rs[k].z) << ',' << fmt(vs[k].x) << ',' << fmt(vs[k].y)
       << ',' << fmt(vs[k].z) << ',' << fmt(st[k].enskog.value()) << ',' << fmt(st[k].boltzmann.value()) << ','
       << fmt(vlasov[k]) << '\n';
    gap += std::fabs(st[k].enskog.value() - st[k].boltzmann.value());
    if (richardson) gap_half += std::fabs(half[k].enskog.value() - half[k].boltzmann.value());
  }
  ctx.write("stscan.csv", os.str());

  auto& s = ctx.summary;
  s["field"] = f.tag;
  s["probes"] = probes;
  s["mean_abs_gap"] = gap / probes;
  if (richardson) {
    s["mean_abs_gap_half_a"] = gap_half / probes;
    s["richardson_ratio"] = gap_half > 0.0 ? json(gap / gap_half) : json(nullptr);
  }
  if (c11_count > 0) {
    const auto res = check_condition_11(f, a, sample_condition_11_set(c11_count, L, vscale, derive_seed(ctx.seed, "cli.c11")));
    s["condition11_violation"] = res.max_violation;
    s["condition11_noise_floor"] = res.noise_floor;
  }
}

// ---------- driver ----------

void write_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  ojson j;
  j["error"] = {{"kind", kind}, {"message", message}};
  j["exit_code"] = code;
  err << j.dump() << '\n';
}

void write_manifest(Context& ctx, double wall, int code, const std::string& message) {
  if (ctx.out.empty()) return;
  ojson m;
  m["tool"] = "enskog";
  m["version"] = ENSKOG_VERSION;
  m["command"] = ctx.command;
  m["seed"] = ctx.seed;
  m["threads"] = ctx.threads;
  m["config"] = ctx.config;
  m["outputs"] = ctx.outputs;
  m["summary"] = ctx.summary;
  m["exit_code"] = code;
  if (!message.empty()) m["error"] = message;
  m["wall_time_s"] = wall;
  std::ofstream f(ctx.out / "manifest.json");
  f << m.dump(2) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hard-sphere kinetic theory scenarios"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  const char* names[] = {"simulate", "kinetic", "blobs", "reversal", "stscan"};
  const char* help[] = {"event-driven or BEV particle run", "space-homogeneous kinetic run",
                        "mollified-blob ensemble sweep", "reversal scenarios", "collision-operator probe scan"};
  for (int k = 0; k < 5; ++k) {
    auto* sub = app.add_subcommand(names[k], help[k]);
    sub->add_option("--config", config_path, "JSON scenario file")->required();
    sub->add_option("--seed", seed, "64-bit seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory (default: config output_dir or ./out)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    write_error(err, "usage", e.what(), kExitConfig);
    return kExitConfig;
  }

  Context ctx;
  ctx.command = app.get_subcommands().front()->get_name();
  const auto start = std::chrono::steady_clock::now();
  auto wall = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  int code = kExitOk;
  std::string message;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
    try {
      ctx.config = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!ctx.config.is_object()) throw ConfigError("config must be a JSON object");
    const Cfg cfg{&ctx.config, ""};
    ctx.seed = seed ? *seed : cfg.get<std::uint64_t>("seed", 1);
    ctx.threads = threads;
    ctx.out = out_dir.empty() ? fs::path(cfg.get<std::string>("output_dir", "out")) : fs::path(out_dir);
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec) {
      const auto dir = ctx.out;
      ctx.out.clear();
      throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    }

    if (ctx.command == "simulate")
      cmd_simulate(cfg, ctx);
    else if (ctx.command == "kinetic")
      cmd_kinetic(cfg, ctx);
    else if (ctx.command == "blobs")
      cmd_blobs(cfg, ctx);
    else if (ctx.command == "reversal")
      cmd_reversal(cfg, ctx);
    else
      cmd_stscan(cfg, ctx);
  } catch (const ConfigError& e) {
    code = kExitConfig;
    message = e.what();
    write_error(err, "config", message, code);
  } catch (const std::exception& e) {
    code = kExitRuntime;
    message = e.what();
    write_error(err, "runtime", message, code);
  }
  try {
    write_manifest(ctx, wall(), code, message);
  } catch (const std::exception& e) {
    write_error(err, "runtime", std::string("manifest: ") + e.what(), kExitRuntime);
    return code == kExitOk ? kExitRuntime : code;
  }
  return code;
}

}  // namespace enskog::cli
