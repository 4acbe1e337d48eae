// SPDX-License-Identifier: MIT

#include "squeezelab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include <json.hpp>

#include "squeezelab/analytics.hpp"
#include "squeezelab/ensemble.hpp"
#include "squeezelab/fit.hpp"
#include "squeezelab/io.hpp"
#include "squeezelab/model.hpp"
#include "squeezelab/protocol.hpp"

namespace sqz {
namespace {

using nlohmann::json;

[[noreturn]] void cfg_fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config error at " + path + ": " + what);
}

void reject_unknown_keys(const json& j, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      cfg_fail(path.empty() ? item.key() : path + "." + item.key(),
               "unknown key");
  }
}

const json& expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) cfg_fail(path, "expected an object");
  return j;
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) cfg_fail(path, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) cfg_fail(path, "expected an integer");
  return j.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0)
    return static_cast<std::uint64_t>(j.get<long long>());
  cfg_fail(path, "expected a non-negative integer");
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) cfg_fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> get_grid(const json& j, const std::string& path) {
  if (!j.is_array()) cfg_fail(path, "expected an array of numbers");
  std::vector<double> v;
  v.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      cfg_fail(path + "[" + std::to_string(i) + "]", "expected a number");
    v.push_back(j[i].get<double>());
  }
  return v;
}

bool is_known_kind(const std::string& k) {
  static const char* kinds[] = {"ensemble", "twist",    "generation", "readout",
                                "map",      "squeeze",  "crossover"};
  for (const char* s : kinds)
    if (k == s) return true;
  return false;
}

void check_increasing(const std::vector<double>& g, const std::string& path,
                      bool allow_negative) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) cfg_fail(path, "entries must be finite");
    if (!allow_negative && g[i] < 0.0) cfg_fail(path, "entries must be >= 0");
    if (i > 0 && !(g[i] > g[i - 1]))
      cfg_fail(path, "entries must be strictly increasing");
  }
}

void require_grid(const std::vector<double>& g, const std::string& path) {
  if (g.empty()) cfg_fail(path, "must not be empty");
}

}  // namespace

RunConfig parse_config(const std::string& json_text,
                       const std::string& expected_kind) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config error: invalid JSON: ") +
                                e.what());
  }
  expect_object(j, "(top level)");
  reject_unknown_keys(j, "", {"version", "kind", "seed", "threads", "out",
                              "ensemble", "prelude", "engine", "grids", "fit",
                              "crossover"});
  if (!j.contains("version"))
    cfg_fail("version", "mandatory field is missing");

  RunConfig cfg;
  cfg.version = get_int(j.at("version"), "version");
  if (j.contains("kind")) cfg.kind = get_string(j.at("kind"), "kind");
  if (!expected_kind.empty()) {
    if (cfg.kind.empty())
      cfg.kind = expected_kind;
    else if (cfg.kind != expected_kind)
      cfg_fail("kind", "config says \"" + cfg.kind +
                           "\" but the subcommand is \"" + expected_kind + "\"");
  }
  if (j.contains("seed")) cfg.seed = get_u64(j.at("seed"), "seed");
  if (j.contains("threads")) cfg.threads = get_int(j.at("threads"), "threads");
  if (j.contains("out")) cfg.out = get_string(j.at("out"), "out");

  if (j.contains("ensemble")) {
    const json& e = expect_object(j.at("ensemble"), "ensemble");
    reject_unknown_keys(e, "ensemble",
                        {"density_ppm_nm", "box_nm", "thickness_nm", "eta",
                         "j0", "n_realizations", "fixed_count"});
    if (e.contains("density_ppm_nm"))
      cfg.ensemble.density_ppm_nm =
          get_number(e.at("density_ppm_nm"), "ensemble.density_ppm_nm");
    if (e.contains("box_nm"))
      cfg.ensemble.box_nm = get_number(e.at("box_nm"), "ensemble.box_nm");
    if (e.contains("thickness_nm"))
      cfg.ensemble.thickness_nm =
          get_number(e.at("thickness_nm"), "ensemble.thickness_nm");
    if (e.contains("eta"))
      cfg.ensemble.eta = get_number(e.at("eta"), "ensemble.eta");
    if (e.contains("j0")) cfg.ensemble.j0 = get_number(e.at("j0"), "ensemble.j0");
    if (e.contains("n_realizations"))
      cfg.ensemble.n_realizations =
          get_int(e.at("n_realizations"), "ensemble.n_realizations");
    if (e.contains("fixed_count"))
      cfg.ensemble.fixed_count =
          get_int(e.at("fixed_count"), "ensemble.fixed_count");
  }

  if (j.contains("prelude")) {
    const json& p = expect_object(j.at("prelude"), "prelude");
    reject_unknown_keys(p, "prelude", {"kind", "radius_nm"});
    if (p.contains("kind"))
      cfg.prelude.kind = get_string(p.at("kind"), "prelude.kind");
    if (p.contains("radius_nm"))
      cfg.prelude.radius_nm = get_number(p.at("radius_nm"), "prelude.radius_nm");
  }

  if (j.contains("engine")) {
    const json& e = expect_object(j.at("engine"), "engine");
    reject_unknown_keys(e, "engine", {"kind", "n_traj", "dt"});
    if (e.contains("kind")) cfg.engine.kind = get_string(e.at("kind"), "engine.kind");
    if (e.contains("n_traj"))
      cfg.engine.n_traj = get_int(e.at("n_traj"), "engine.n_traj");
    if (e.contains("dt")) cfg.engine.dt = get_number(e.at("dt"), "engine.dt");
  }

  if (j.contains("grids")) {
    const json& g = expect_object(j.at("grids"), "grids");
    reject_unknown_keys(g, "grids", {"t_g", "theta", "t_r", "t", "phi"});
    if (g.contains("t_g")) cfg.grids.t_g = get_grid(g.at("t_g"), "grids.t_g");
    if (g.contains("theta"))
      cfg.grids.theta = get_grid(g.at("theta"), "grids.theta");
    if (g.contains("t_r")) cfg.grids.t_r = get_grid(g.at("t_r"), "grids.t_r");
    if (g.contains("t")) cfg.grids.t = get_grid(g.at("t"), "grids.t");
    if (g.contains("phi")) cfg.grids.phi = get_grid(g.at("phi"), "grids.phi");
  }

  if (j.contains("fit")) {
    const json& f = expect_object(j.at("fit"), "fit");
    reject_unknown_keys(f, "fit",
                        {"p_mode", "p_fixed", "t_max_sweep", "mono_tol"});
    if (f.contains("p_mode")) cfg.fit.p_mode = get_string(f.at("p_mode"), "fit.p_mode");
    if (f.contains("p_fixed"))
      cfg.fit.p_fixed = get_number(f.at("p_fixed"), "fit.p_fixed");
    if (f.contains("t_max_sweep"))
      cfg.fit.t_max_sweep = get_grid(f.at("t_max_sweep"), "fit.t_max_sweep");
    if (f.contains("mono_tol"))
      cfg.fit.mono_tol = get_number(f.at("mono_tol"), "fit.mono_tol");
  }

  if (j.contains("crossover")) {
    const json& c = expect_object(j.at("crossover"), "crossover");
    reject_unknown_keys(c, "crossover", {"density_per_nm2", "r_min_nm", "j0"});
    if (c.contains("density_per_nm2"))
      cfg.crossover.density_per_nm2 =
          get_number(c.at("density_per_nm2"), "crossover.density_per_nm2");
    if (c.contains("r_min_nm"))
      cfg.crossover.r_min_nm = get_number(c.at("r_min_nm"), "crossover.r_min_nm");
    if (c.contains("j0")) cfg.crossover.j0 = get_number(c.at("j0"), "crossover.j0");
  }

  validate_config(cfg);
  return cfg;
}

RunConfig parse_config_file(const std::string& path,
                            const std::string& expected_kind) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw std::invalid_argument(std::string("config error: ") + e.what());
  }
  return parse_config(text, expected_kind);
}

void validate_config(const RunConfig& cfg) {
  if (cfg.version != kConfigVersion)
    cfg_fail("version", "unsupported schema version " +
                            std::to_string(cfg.version) + " (expected " +
                            std::to_string(kConfigVersion) + ")");
  if (cfg.kind.empty()) cfg_fail("kind", "mandatory field is missing");
  if (!is_known_kind(cfg.kind))
    cfg_fail("kind", "unknown experiment kind \"" + cfg.kind + "\"");
  if (cfg.threads < 1) cfg_fail("threads", "must be >= 1");

  if (cfg.engine.kind != "exact" && cfg.engine.kind != "dtwa")
    cfg_fail("engine.kind", "must be \"exact\" or \"dtwa\"");
  if (cfg.engine.kind == "dtwa" && cfg.engine.n_traj < 2)
    cfg_fail("engine.n_traj", "must be >= 2");
  if (cfg.engine.dt < 0.0) cfg_fail("engine.dt", "must be >= 0");

  try {
    removal_kind_from_string(cfg.prelude.kind);
  } catch (const std::invalid_argument&) {
    cfg_fail("prelude.kind",
             "must be none, hard_cutoff, shelving, or depolarization");
  }
  if (cfg.prelude.radius_nm < 0.0) cfg_fail("prelude.radius_nm", "must be >= 0");
  if (cfg.prelude.kind != "none" && !(cfg.prelude.radius_nm > 0.0))
    cfg_fail("prelude.radius_nm", "must be > 0 when a prelude is enabled");

  check_increasing(cfg.grids.t_g, "grids.t_g", false);
  check_increasing(cfg.grids.theta, "grids.theta", true);
  check_increasing(cfg.grids.t_r, "grids.t_r", false);
  check_increasing(cfg.grids.t, "grids.t", false);
  check_increasing(cfg.grids.phi, "grids.phi", true);

  const bool spin_kind = cfg.kind != "crossover";
  if (spin_kind) {
    if (!(cfg.ensemble.box_nm > 0.0)) cfg_fail("ensemble.box_nm", "must be > 0");
    if (cfg.ensemble.thickness_nm < 0.0)
      cfg_fail("ensemble.thickness_nm", "must be >= 0");
    if (cfg.ensemble.fixed_count < 0)
      cfg_fail("ensemble.fixed_count", "must be >= 0");
    if (cfg.ensemble.fixed_count == 0 && !(cfg.ensemble.density_ppm_nm > 0.0))
      cfg_fail("ensemble.density_ppm_nm",
               "must be > 0 (or set ensemble.fixed_count)");
    if (!(cfg.ensemble.eta >= 0.0 && cfg.ensemble.eta <= 1.0))
      cfg_fail("ensemble.eta", "must lie in [0, 1]");
    if (!(cfg.ensemble.j0 > 0.0)) cfg_fail("ensemble.j0", "must be > 0");
    if (cfg.ensemble.n_realizations < 1)
      cfg_fail("ensemble.n_realizations", "must be >= 1");
    if (cfg.kind != "ensemble" && !(cfg.ensemble.eta > 0.0))
      cfg_fail("ensemble.eta", "must be > 0 for this kind");
  }

  if (cfg.kind == "generation" || cfg.kind == "readout" || cfg.kind == "map" ||
      cfg.kind == "squeeze")
    require_grid(cfg.grids.t_g, "grids.t_g");
  if (cfg.kind == "readout" || cfg.kind == "map") {
    require_grid(cfg.grids.theta, "grids.theta");
    require_grid(cfg.grids.t_r, "grids.t_r");
    if (cfg.grids.t_r.front() != 0.0) cfg_fail("grids.t_r", "must start at 0");
  }
  if (cfg.kind == "twist") {
    require_grid(cfg.grids.phi, "grids.phi");
    require_grid(cfg.grids.t, "grids.t");
    for (double p : cfg.grids.phi)
      if (!(std::abs(p) < kPi / 2)) cfg_fail("grids.phi", "tip angles must satisfy |phi| < pi/2");
  }
  if (cfg.kind == "map") {
    if (cfg.grids.t_g.front() != 0.0)
      cfg_fail("grids.t_g", "must start at 0 for the map kind");
    if (cfg.grids.t_g.size() < 2)
      cfg_fail("grids.t_g", "needs at least two generation times");
    require_grid(cfg.fit.t_max_sweep, "fit.t_max_sweep");
    check_increasing(cfg.fit.t_max_sweep, "fit.t_max_sweep", false);
    if (cfg.fit.p_mode != "shared" && cfg.fit.p_mode != "fixed")
      cfg_fail("fit.p_mode", "must be \"shared\" or \"fixed\"");
    if (cfg.fit.p_mode == "fixed" &&
        !(cfg.fit.p_fixed >= 0.3 && cfg.fit.p_fixed <= 3.0))
      cfg_fail("fit.p_fixed", "must lie in [0.3, 3]");
    if (!(cfg.fit.mono_tol > 0.0)) cfg_fail("fit.mono_tol", "must be > 0");
  }
  if (cfg.kind == "crossover") {
    require_grid(cfg.grids.t, "grids.t");
    for (double t : cfg.grids.t)
      if (!(t > 0.0)) cfg_fail("grids.t", "times must be > 0");
    if (!(cfg.crossover.density_per_nm2 > 0.0))
      cfg_fail("crossover.density_per_nm2", "must be > 0");
    if (cfg.crossover.r_min_nm < 0.0)
      cfg_fail("crossover.r_min_nm", "must be >= 0");
    if (!(cfg.crossover.j0 > 0.0)) cfg_fail("crossover.j0", "must be > 0");
  }
}

std::uint64_t config_hash(const RunConfig& c) {
  std::string s;
  auto kv = [&s](const char* k, const std::string& v) {
    s += k;
    s += '=';
    s += v;
    s += '\n';
  };
  auto num = [&kv](const char* k, double v) { kv(k, format_g17(v)); };
  auto grid = [&kv](const char* k, const std::vector<double>& g) {
    std::string v;
    for (double d : g) {
      v += format_g17(d);
      v += ' ';
    }
    kv(k, v);
  };
  kv("version", std::to_string(c.version));
  kv("kind", c.kind);
  kv("seed", std::to_string(c.seed));
  num("ensemble.density_ppm_nm", c.ensemble.density_ppm_nm);
  num("ensemble.box_nm", c.ensemble.box_nm);
  num("ensemble.thickness_nm", c.ensemble.thickness_nm);
  num("ensemble.eta", c.ensemble.eta);
  num("ensemble.j0", c.ensemble.j0);
  kv("ensemble.n_realizations", std::to_string(c.ensemble.n_realizations));
  kv("ensemble.fixed_count", std::to_string(c.ensemble.fixed_count));
  kv("prelude.kind", c.prelude.kind);
  num("prelude.radius_nm", c.prelude.radius_nm);
  kv("engine.kind", c.engine.kind);
  kv("engine.n_traj", std::to_string(c.engine.n_traj));
  num("engine.dt", c.engine.dt);
  grid("grids.t_g", c.grids.t_g);
  grid("grids.theta", c.grids.theta);
  grid("grids.t_r", c.grids.t_r);
  grid("grids.t", c.grids.t);
  grid("grids.phi", c.grids.phi);
  kv("fit.p_mode", c.fit.p_mode);
  num("fit.p_fixed", c.fit.p_fixed);
  grid("fit.t_max_sweep", c.fit.t_max_sweep);
  num("fit.mono_tol", c.fit.mono_tol);
  num("crossover.density_per_nm2", c.crossover.density_per_nm2);
  num("crossover.r_min_nm", c.crossover.r_min_nm);
  num("crossover.j0", c.crossover.j0);
  return fnv1a64(s);
}

std::uint64_t realization_seed(std::uint64_t master, int r) {
  // Counter-based: realization r always maps to stream 500 + r, so growing
  // n_realizations appends new streams without touching existing ones.
  return derive_stream_seed(master, 500 + static_cast<std::uint64_t>(r));
}

namespace {

struct Writer {
  std::string dir;
  RunOutputs outs;

  void write(const std::string& rel, const std::string& content) {
    write_file_atomic((std::filesystem::path(dir) / rel).string(), content);
    outs.files.push_back(rel);
  }
};

int traj_count(const RunConfig& cfg) {
  return cfg.engine.kind == "dtwa" ? cfg.engine.n_traj : 0;
}

void base_comments(CsvBuilder& csv, const RunConfig& cfg) {
  csv.comment(std::string("tool=") + kCodeVersion);
  csv.comment("kind=" + cfg.kind);
  csv.comment("config_hash=" + hex64(config_hash(cfg)));
  csv.comment("master_seed=" + std::to_string(cfg.seed));
  csv.comment("units: time us, angle rad, coupling rad/us, length nm");
  csv.comment(
      "provenance: seed = disorder-realization seed (master seed on pooled "
      "rows); n_traj = sampled trajectories, 0 = deterministic engine");
}

QuenchPlan plan_for(const RunConfig& cfg, std::uint64_t rseed, int threads) {
  QuenchPlan p;
  p.prelude.kind = removal_kind_from_string(cfg.prelude.kind);
  p.prelude.radius = cfg.prelude.radius_nm;
  p.tg_grid = cfg.grids.t_g.empty() ? std::vector<double>{0.0} : cfg.grids.t_g;
  p.theta_grid =
      cfg.grids.theta.empty() ? std::vector<double>{0.0} : cfg.grids.theta;
  p.tr_grid = cfg.grids.t_r.empty() ? std::vector<double>{0.0} : cfg.grids.t_r;
  p.engine = cfg.engine.kind;
  p.eta = cfg.ensemble.eta;
  p.n_traj = cfg.engine.n_traj;
  p.dt = cfg.engine.dt;
  p.seed = rseed;
  p.threads = threads;
  p.j0 = cfg.ensemble.j0;
  return p;
}

SpinEnsemble sample_cfg_ensemble(const RunConfig& cfg, std::uint64_t rseed) {
  const Region box{cfg.ensemble.box_nm, cfg.ensemble.box_nm,
                   cfg.ensemble.thickness_nm};
  if (cfg.ensemble.fixed_count > 0)
    return sample_positions_fixed(cfg.ensemble.fixed_count, box, rseed);
  return sample_positions(ppm_nm_to_per_nm2(cfg.ensemble.density_ppm_nm), box,
                          rseed);
}

// Run `work(r)` for r in [0, n) on a shared work queue. Results land in
// per-realization slots, so the outcome does not depend on the number of
// workers; the first (lowest-r) failure is rethrown.
template <typename R, typename F>
std::vector<R> map_realizations(int n, int threads, F&& work) {
  std::vector<R> slots(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto body = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= n) break;
      try {
        slots[static_cast<std::size_t>(r)] = work(r);
      } catch (...) {
        errs[static_cast<std::size_t>(r)] = std::current_exception();
      }
    }
  };
  const int workers = std::min(threads, n);
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  for (int r = 0; r < n; ++r)
    if (errs[static_cast<std::size_t>(r)])
      std::rethrow_exception(errs[static_cast<std::size_t>(r)]);
  return slots;
}

const char* status_name(SpinStatus s) {
  switch (s) {
    case SpinStatus::active: return "active";
    case SpinStatus::shelved: return "shelved";
    case SpinStatus::depolarized: return "depolarized";
  }
  return "unknown";
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return pairwise_sum(v) / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// crossover: closed-form disorder-averaged decay tables
// ---------------------------------------------------------------------------

void run_crossover_kind(const RunConfig& cfg, Writer& w) {
  const CrossoverParams p{cfg.crossover.density_per_nm2, cfg.crossover.r_min_nm,
                          cfg.crossover.j0};
  CsvBuilder csv;
  base_comments(csv, cfg);
  csv.comment("closed-form disorder-averaged transverse decay; columns: "
              "normalized <Sx>, -ln <Sx>, local stretch exponent");
  csv.comment("density_per_nm2=" + format_g17(p.density) +
              " r_min_nm=" + format_g17(p.r_min) + " j0=" + format_g17(p.j0));
  csv.header({"seed", "n_traj", "t_us", "sx", "neg_log_sx", "local_exponent"});
  for (double t : cfg.grids.t)
    csv.row({CsvBuilder::cell(cfg.seed), "0", CsvBuilder::cell(t),
             CsvBuilder::cell(crossover_sx(p, t)),
             CsvBuilder::cell(crossover_log_decay(p, t)),
             CsvBuilder::cell(crossover_local_exponent(p, t))});
  w.write("crossover.csv", csv.str());

  json info;
  info["schema_version"] = 1;
  info["params"] = {{"density_per_nm2", p.density},
                    {"r_min_nm", p.r_min},
                    {"j0", p.j0}};
  try {
    info["crossover_time_us"] = crossover_time(p);
  } catch (const std::exception&) {
    info["crossover_time_us"] = nullptr;  // exponent never reaches 4/3
  }
  w.write("crossover.json", info.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// ensemble: persisted disorder realizations + coupling statistics
// ---------------------------------------------------------------------------

struct EnsembleData {
  SpinEnsemble e;
  Histogram hist;
  double chi = 0.0;
  double mean_nn = 0.0;
  std::uint64_t seed = 0;
};

void run_ensemble_kind(const RunConfig& cfg, Writer& w) {
  const int n_real = cfg.ensemble.n_realizations;
  auto slots = map_realizations<EnsembleData>(
      n_real, cfg.threads, [&cfg](int r) {
        EnsembleData d;
        d.seed = realization_seed(cfg.seed, r);
        d.e = sample_cfg_ensemble(cfg, d.seed);
        const RemovalModel prelude{removal_kind_from_string(cfg.prelude.kind),
                                   cfg.prelude.radius_nm};
        if (prelude.kind != RemovalKind::none) {
          const CouplingGraph raw = build_coupling(d.e, cfg.ensemble.j0);
          apply_removal(d.e, prelude, &raw, derive_stream_seed(d.seed, 1));
        }
        const CouplingGraph g = build_coupling(d.e, cfg.ensemble.j0);
        if (g.size() >= 2) {
          d.hist = coupling_distribution(g, 32);
          d.chi = mean_field_chi(g);
        }
        d.mean_nn = mean_of(nearest_active_distances(d.e));
        return d;
      });

  CsvBuilder summary;
  base_comments(summary, cfg);
  summary.comment(
      "one row per disorder realization; spacing = sqrt(area / n_active)");
  summary.header({"realization", "seed", "n_traj", "n_spins", "n_active",
                  "mean_spacing_nm", "mean_nn_nm", "mean_j_rad_us",
                  "max_j_rad_us", "mean_field_chi_rad_us"});
  CsvBuilder hist;
  base_comments(hist, cfg);
  hist.comment("pair-coupling histogram per realization (log-spaced bins; "
               "density normalized so sum(density*width) = 1)");
  hist.header({"realization", "seed", "n_traj", "bin_lo_rad_us",
               "bin_hi_rad_us", "count", "density"});

  const double area = cfg.ensemble.box_nm * cfg.ensemble.box_nm;
  for (int r = 0; r < n_real; ++r) {
    const EnsembleData& d = slots[static_cast<std::size_t>(r)];
    const std::size_t n_active = d.e.active_count();
    const double spacing =
        n_active > 0 ? std::sqrt(area / static_cast<double>(n_active)) : 0.0;
    summary.row({CsvBuilder::cell(r), CsvBuilder::cell(d.seed), "0",
                 CsvBuilder::cell(static_cast<int>(d.e.size())),
                 CsvBuilder::cell(static_cast<int>(n_active)),
                 CsvBuilder::cell(spacing), CsvBuilder::cell(d.mean_nn),
                 CsvBuilder::cell(d.hist.mean), CsvBuilder::cell(d.hist.max),
                 CsvBuilder::cell(d.chi)});
    for (std::size_t b = 0; b + 1 < d.hist.edges.size(); ++b)
      hist.row({CsvBuilder::cell(r), CsvBuilder::cell(d.seed), "0",
                CsvBuilder::cell(d.hist.edges[b]),
                CsvBuilder::cell(d.hist.edges[b + 1]),
                CsvBuilder::cell(static_cast<int>(d.hist.counts[b])),
                CsvBuilder::cell(d.hist.density[b])});

    json je;
    je["schema_version"] = 1;
    je["realization"] = r;
    je["seed"] = d.seed;
    je["box"] = {{"lx", d.e.region.lx}, {"ly", d.e.region.ly}, {"d", d.e.region.d}};
    je["density_per_nm2"] = d.e.density;
    json pos = json::array();
    for (const auto& p : d.e.positions) pos.push_back({p[0], p[1], p[2]});
    je["positions"] = pos;
    json st = json::array();
    for (SpinStatus s : d.e.status) st.push_back(status_name(s));
    je["status"] = st;
    w.write("ensembles/ensemble_" + std::to_string(r) + ".json",
            je.dump(2) + "\n");
  }
  w.write("summary.csv", summary.str());
  w.write("couplings.csv", hist.str());
}

// ---------------------------------------------------------------------------
// twist: tipped-quench calibration of the twisting rate
// ---------------------------------------------------------------------------

struct TwistData {
  std::vector<TwistSeries> series;
  std::vector<double> chi_tw;  // per phi; NaN where phi == 0
  double chi_mf = 0.0;
  std::uint64_t seed = 0;
};

void run_twist_kind(const RunConfig& cfg, Writer& w) {
  const int n_real = cfg.ensemble.n_realizations;
  const int inner = n_real == 1 ? cfg.threads : 1;
  auto slots = map_realizations<TwistData>(
      n_real, cfg.threads, [&cfg, inner](int r) {
        TwistData d;
        d.seed = realization_seed(cfg.seed, r);
        const SpinEnsemble raw = sample_cfg_ensemble(cfg, d.seed);
        const ProtocolContext ctx =
            prepare_context(plan_for(cfg, d.seed, inner), raw);
        d.chi_mf = mean_field_chi(ctx.graph);
        d.series = run_twisting(ctx, cfg.grids.phi, cfg.grids.t);
        for (const TwistSeries& s : d.series) {
          if (s.phi_o == 0.0) {
            d.chi_tw.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
          }
          std::vector<double> ratio(s.t.size());
          for (std::size_t i = 0; i < s.t.size(); ++i)
            ratio[i] = s.sx[i] == 0.0 ? 1e30 : s.sy[i] / s.sx[i];
          d.chi_tw.push_back(chi_from_twisting(s.t, ratio, s.phi_o));
        }
        return d;
      });

  CsvBuilder csv;
  base_comments(csv, cfg);
  csv.comment("tipped generation quench: collective transverse components and "
              "the in-plane phase atan2(<Sy>, <Sx>)");
  csv.header({"realization", "seed", "n_traj", "phi", "t_us", "sx", "sx_err",
              "sy", "sy_err", "phi_p"});
  const int nt = traj_count(cfg);
  for (int r = 0; r < n_real; ++r) {
    const TwistData& d = slots[static_cast<std::size_t>(r)];
    for (const TwistSeries& s : d.series)
      for (std::size_t i = 0; i < s.t.size(); ++i)
        csv.row({CsvBuilder::cell(r), CsvBuilder::cell(d.seed),
                 CsvBuilder::cell(nt), CsvBuilder::cell(s.phi_o),
                 CsvBuilder::cell(s.t[i]), CsvBuilder::cell(s.sx[i]),
                 CsvBuilder::cell(s.sx_err[i]), CsvBuilder::cell(s.sy[i]),
                 CsvBuilder::cell(s.sy_err[i]), CsvBuilder::cell(s.phi_p[i])});
  }
  w.write("twist.csv", csv.str());

  json cal;
  cal["schema_version"] = 1;
  json per_real = json::array();
  std::vector<double> all_tw, all_mf;
  for (int r = 0; r < n_real; ++r) {
    const TwistData& d = slots[static_cast<std::size_t>(r)];
    json jr;
    jr["realization"] = r;
    jr["seed"] = d.seed;
    jr["mean_field_chi"] = d.chi_mf;
    all_mf.push_back(d.chi_mf);
    json per_phi = json::array();
    for (std::size_t i = 0; i < d.chi_tw.size(); ++i) {
      per_phi.push_back(
          {{"phi", cfg.grids.phi[i]}, {"chi", d.chi_tw[i]}});  // NaN -> null
      if (std::isfinite(d.chi_tw[i])) all_tw.push_back(d.chi_tw[i]);
    }
    jr["per_phi"] = per_phi;
    per_real.push_back(jr);
  }
  cal["per_realization"] = per_real;
  cal["mean_field_chi_mean"] = mean_of(all_mf);
  cal["twisting_chi_mean"] =
      all_tw.empty() ? json(nullptr) : json(mean_of(all_tw));
  w.write("chi.json", cal.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// generation / readout / map / squeeze share per-realization quench work
// ---------------------------------------------------------------------------

struct GenData {
  DecayCurve curve;
  std::uint64_t seed = 0;
  std::size_t n_active = 0;
};

void write_generation_csv(const RunConfig& cfg, Writer& w,
                          const std::vector<GenData>& slots) {
  CsvBuilder csv;
  base_comments(csv, cfg);
  csv.comment("collective <Sx> along the generation quench; sx_norm = sx / "
              "(eta * n_active / 2)");
  csv.header({"realization", "seed", "n_traj", "t_us", "sx", "sx_err",
              "sx_norm"});
  const int nt = traj_count(cfg);
  for (std::size_t r = 0; r < slots.size(); ++r) {
    const GenData& d = slots[r];
    const double norm =
        cfg.ensemble.eta * static_cast<double>(d.n_active) / 2.0;
    for (std::size_t i = 0; i < d.curve.t.size(); ++i)
      csv.row({CsvBuilder::cell(static_cast<int>(r)), CsvBuilder::cell(d.seed),
               CsvBuilder::cell(nt), CsvBuilder::cell(d.curve.t[i]),
               CsvBuilder::cell(d.curve.value[i]),
               CsvBuilder::cell(d.curve.err[i]),
               CsvBuilder::cell(norm > 0.0 ? d.curve.value[i] / norm : 0.0)});
  }
  w.write("generation.csv", csv.str());
}

// Pooled normalized curve over realizations: values divided per realization
// by eta*n_active/2 and then averaged in fixed order.
DecayCurve pool_normalized(const std::vector<const DecayCurve*>& curves,
                           const std::vector<double>& norms) {
  DecayCurve out;
  out.t = curves.front()->t;
  out.t_g = curves.front()->t_g;
  out.theta = curves.front()->theta;
  const std::size_t n = out.t.size();
  out.value.resize(n);
  out.err.resize(n);
  std::vector<double> vals(curves.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < curves.size(); ++r)
      vals[r] = curves[r]->value[i] / norms[r];
    if (curves.size() == 1) {
      out.value[i] = vals[0];
      out.err[i] = curves[0]->err.empty() ? 0.0 : curves[0]->err[i] / norms[0];
    } else {
      const MeanErr me = mean_and_stderr(vals);
      out.value[i] = me.mean;
      out.err[i] = me.stderr_mean;
    }
  }
  return out;
}

void run_generation_kind(const RunConfig& cfg, Writer& w) {
  const int n_real = cfg.ensemble.n_realizations;
  const int inner = n_real == 1 ? cfg.threads : 1;
  auto slots = map_realizations<GenData>(
      n_real, cfg.threads, [&cfg, inner](int r) {
        GenData d;
        d.seed = realization_seed(cfg.seed, r);
        const SpinEnsemble raw = sample_cfg_ensemble(cfg, d.seed);
        const ProtocolContext ctx =
            prepare_context(plan_for(cfg, d.seed, inner), raw);
        d.n_active = ctx.ensemble.active_count();
        d.curve = run_generation(ctx).curve;
        return d;
      });
  write_generation_csv(cfg, w, slots);

  std::vector<const DecayCurve*> curves;
  std::vector<double> norms;
  for (const GenData& d : slots) {
    curves.push_back(&d.curve);
    norms.push_back(cfg.ensemble.eta * static_cast<double>(d.n_active) / 2.0);
  }
  const DecayCurve pooled = pool_normalized(curves, norms);
  CsvBuilder csv;
  base_comments(csv, cfg);
  csv.comment("normalized <Sx>/(eta*N/2) averaged over " +
              std::to_string(n_real) + " realizations");
  csv.header({"seed", "n_traj", "t_us", "sx_norm", "sx_norm_err"});
  for (std::size_t i = 0; i < pooled.t.size(); ++i)
    csv.row({CsvBuilder::cell(cfg.seed), CsvBuilder::cell(traj_count(cfg)),
             CsvBuilder::cell(pooled.t[i]), CsvBuilder::cell(pooled.value[i]),
             CsvBuilder::cell(pooled.err[i])});
  w.write("generation_mean.csv", csv.str());
}

struct ReadoutData {
  GenData gen;
  // curves[k][j]: readout decay for generation time k, rotation angle j
  std::vector<std::vector<DecayCurve>> curves;
  // var_ratio[k][j] = Var(S_theta) / (N/4) from the stored snapshot
  std::vector<std::vector<double>> var_ratio;
  double chi_mf = 0.0;
};

ReadoutData run_readout_realization(const RunConfig& cfg, int r, int inner,
                                    bool with_moments) {
  ReadoutData d;
  d.gen.seed = realization_seed(cfg.seed, r);
  const SpinEnsemble raw = sample_cfg_ensemble(cfg, d.gen.seed);
  const ProtocolContext ctx =
      prepare_context(plan_for(cfg, d.gen.seed, inner), raw);
  d.gen.n_active = ctx.ensemble.active_count();
  d.chi_mf = mean_field_chi(ctx.graph);
  GenerationResult gen = run_generation(ctx);
  d.gen.curve = gen.curve;
  const std::size_t K = gen.snapshots.size();
  const std::size_t J = cfg.grids.theta.size();
  d.curves.resize(K);
  d.var_ratio.assign(K, std::vector<double>(J, 0.0));
  const double var0 = static_cast<double>(d.gen.n_active) / 4.0;
  for (std::size_t k = 0; k < K; ++k) {
    d.curves[k].reserve(J);
    if (with_moments) {
      const CollectiveMoments m =
          snapshot_moments(ctx, gen.snapshots[k], cfg.grids.theta);
      for (std::size_t j = 0; j < J; ++j)
        d.var_ratio[k][j] = m.var_theta[j] / var0;
    }
    for (std::size_t j = 0; j < J; ++j)
      d.curves[k].push_back(
          run_readout(ctx, gen.snapshots[k], cfg.grids.theta[j]));
  }
  return d;
}

void run_readout_kind(const RunConfig& cfg, Writer& w) {
  const int n_real = cfg.ensemble.n_realizations;
  const int inner = n_real == 1 ? cfg.threads : 1;
  auto slots = map_realizations<ReadoutData>(
      n_real, cfg.threads,
      [&cfg, inner](int r) { return run_readout_realization(cfg, r, inner, false); });

  std::vector<GenData> gens;
  for (const ReadoutData& d : slots) gens.push_back(d.gen);
  write_generation_csv(cfg, w, gens);

  CsvBuilder csv;
  base_comments(csv, cfg);
  csv.comment("readout decay <Sx(t_r)> after generation for t_g and rotation "
              "X_theta");
  csv.header({"realization", "seed", "n_traj", "t_g_us", "theta", "t_r_us",
              "sx", "sx_err"});
  const int nt = traj_count(cfg);
  for (std::size_t r = 0; r < slots.size(); ++r) {
    const ReadoutData& d = slots[r];
    for (std::size_t k = 0; k < d.curves.size(); ++k)
      for (std::size_t j = 0; j < d.curves[k].size(); ++j) {
        const DecayCurve& c = d.curves[k][j];
        for (std::size_t i = 0; i < c.t.size(); ++i)
          csv.row({CsvBuilder::cell(static_cast<int>(r)),
                   CsvBuilder::cell(d.gen.seed), CsvBuilder::cell(nt),
                   CsvBuilder::cell(cfg.grids.t_g[k]),
                   CsvBuilder::cell(cfg.grids.theta[j]),
                   CsvBuilder::cell(c.t[i]), CsvBuilder::cell(c.value[i]),
                   CsvBuilder::cell(c.err.empty() ? 0.0 : c.err[i])});
      }
  }
  w.write("readout.csv", csv.str());
}

void run_map_kind(const RunConfig& cfg, Writer& w) {
  const int n_real = cfg.ensemble.n_realizations;
  const int inner = n_real == 1 ? cfg.threads : 1;
  auto slots = map_realizations<ReadoutData>(
      n_real, cfg.threads,
      [&cfg, inner](int r) { return run_readout_realization(cfg, r, inner, true); });

  const std::size_t K = cfg.grids.t_g.size();
  const std::size_t J = cfg.grids.theta.size();

  // Disorder averages (fixed order, independent of thread count).
  std::vector<double> norms;
  std::vector<double> chis;
  for (const ReadoutData& d : slots) {
    norms.push_back(cfg.ensemble.eta * static_cast<double>(d.gen.n_active) / 2.0);
    chis.push_back(d.chi_mf);
  }
  const double chi = mean_of(chis);

  std::vector<const DecayCurve*> gen_curves;
  for (const ReadoutData& d : slots) gen_curves.push_back(&d.gen.curve);
  DecayCurve gen_pooled = pool_normalized(gen_curves, norms);

  std::vector<std::vector<DecayCurve>> pooled(K);   // [k][j], shifted below
  std::vector<std::vector<double>> ratio(K, std::vector<double>(J, 0.0));
  for (std::size_t k = 0; k < K; ++k) {
    pooled[k].reserve(J);
    for (std::size_t j = 0; j < J; ++j) {
      std::vector<const DecayCurve*> cs;
      for (const ReadoutData& d : slots) cs.push_back(&d.curves[k][j]);
      pooled[k].push_back(pool_normalized(cs, norms));
      std::vector<double> rv;
      for (const ReadoutData& d : slots) rv.push_back(d.var_ratio[k][j]);
      ratio[k][j] = mean_of(rv);
    }
  }

  // Offset-time shift and the window-sweep stretched fits, one batch per t_g.
  const std::optional<double> fixed_p =
      cfg.fit.p_mode == "fixed" ? std::optional<double>(cfg.fit.p_fixed)
                                : std::nullopt;
  std::vector<std::vector<DecayCurve>> shifted(K);
  std::vector<std::vector<StretchedFit>> sweeps(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double t_g = cfg.grids.t_g[k];
    shifted[k].reserve(J);
    for (std::size_t j = 0; j < J; ++j) {
      const double t_o = offset_time(cfg.grids.theta[j], chi, t_g);
      DecayCurve c = pooled[k][j];
      c.t_g = t_g;
      c.theta = cfg.grids.theta[j];
      c.engine = cfg.engine.kind;
      shifted[k].push_back(shift_curve(c, t_o));
    }
    sweeps[k].reserve(cfg.fit.t_max_sweep.size());
    for (double t_max : cfg.fit.t_max_sweep)
      sweeps[k].push_back(fit_stretched(shifted[k], t_g, t_max, fixed_p));
  }

  // Dictionary support from every fit window: the (t_g, theta) variance is
  // window-independent, so the sweep contributes same-var points whose T2
  // scatter is absorbed by the plateau averaging of the map builder, and any
  // T2 the extraction queries lies inside the support hull by construction.
  std::vector<VarMapPoint> support;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < J; ++j)
      for (const StretchedFit& f : sweeps[k])
        support.push_back(
            {f.t2[j], ratio[k][j], cfg.grids.t_g[k], cfg.grids.theta[j]});
  const VarianceMap map = build_variance_map(support, cfg.fit.mono_tol);
  const std::vector<Xi2Point> xi2 =
      extract_xi2(map, sweeps, cfg.grids.theta, gen_pooled);

  // --- persisted results ---
  CsvBuilder gcsv;
  base_comments(gcsv, cfg);
  gcsv.comment("normalized <Sx>/(eta*N/2) averaged over " +
               std::to_string(n_real) + " realizations");
  gcsv.header({"seed", "n_traj", "t_us", "sx_norm", "sx_norm_err"});
  for (std::size_t i = 0; i < gen_pooled.t.size(); ++i)
    gcsv.row({CsvBuilder::cell(cfg.seed), CsvBuilder::cell(traj_count(cfg)),
              CsvBuilder::cell(gen_pooled.t[i]),
              CsvBuilder::cell(gen_pooled.value[i]),
              CsvBuilder::cell(gen_pooled.err[i])});
  w.write("generation_mean.csv", gcsv.str());

  CsvBuilder rcsv;
  base_comments(rcsv, cfg);
  rcsv.comment("disorder-averaged normalized readout decay; t_eff = t_r - t_o "
               "with the analytic offset time t_o");
  rcsv.header({"seed", "n_traj", "t_g_us", "theta", "t_o_us", "t_r_us",
               "t_eff_us", "sx_norm", "sx_norm_err"});
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < J; ++j) {
      const DecayCurve& c = shifted[k][j];
      for (std::size_t i = 0; i < c.t.size(); ++i)
        rcsv.row({CsvBuilder::cell(cfg.seed), CsvBuilder::cell(traj_count(cfg)),
                  CsvBuilder::cell(cfg.grids.t_g[k]),
                  CsvBuilder::cell(cfg.grids.theta[j]),
                  CsvBuilder::cell(c.t_o), CsvBuilder::cell(c.t[i] + c.t_o),
                  CsvBuilder::cell(c.t[i]), CsvBuilder::cell(c.value[i]),
                  CsvBuilder::cell(c.err[i])});
    }
  w.write("readout.csv", rcsv.str());

  json jf;
  jf["schema_version"] = 1;
  jf["p_mode"] = cfg.fit.p_mode;
  json per_tg = json::array();
  for (std::size_t k = 0; k < K; ++k) {
    json jk;
    jk["t_g_us"] = cfg.grids.t_g[k];
    jk["t_min_us"] = cfg.grids.t_g[k];
    json windows = json::array();
    for (std::size_t s = 0; s < sweeps[k].size(); ++s) {
      const StretchedFit& f = sweeps[k][s];
      json jw;
      jw["t_max_us"] = cfg.fit.t_max_sweep[s];
      jw["p"] = f.p;
      jw["p_err"] = f.p_err;
      jw["chi2"] = f.chi2;
      jw["n_points"] = f.n_points;
      json per_theta = json::array();
      for (std::size_t j = 0; j < J; ++j)
        per_theta.push_back({{"theta", cfg.grids.theta[j]},
                             {"t_o_us", shifted[k][j].t_o},
                             {"amp", f.amp[j]},
                             {"amp_err", f.amp_err[j]},
                             {"t2_us", f.t2[j]},
                             {"t2_err_us", f.t2_err[j]}});
      jw["per_theta"] = per_theta;
      windows.push_back(jw);
    }
    jk["windows"] = windows;
    per_tg.push_back(jk);
  }
  jf["per_tg"] = per_tg;
  w.write("fits.json", jf.dump(2) + "\n");

  json jm;
  jm["schema_version"] = 1;
  jm["mono_tol"] = cfg.fit.mono_tol;
  jm["slice_overlap_dev"] = map.slice_overlap_dev();
  jm["t2_lo_us"] = map.t2_lo();
  jm["t2_hi_us"] = map.t2_hi();
  json sup = json::array();
  for (const VarMapPoint& p : support)
    sup.push_back({{"t2_us", p.t2},
                   {"var_ratio", p.var},
                   {"t_g_us", p.t_g},
                   {"theta", p.theta}});
  jm["support"] = sup;
  jm["nodes"] = {{"t2_us", map.support_t2()}, {"var_ratio", map.support_var()}};
  w.write("map.json", jm.dump(2) + "\n");

  CsvBuilder xcsv;
  base_comments(xcsv, cfg);
  xcsv.comment("squeezing parameter recovered through the T2 <-> variance "
               "dictionary; xi2 = var_ratio_min * (Sx(0)/Sx(t_g))^2");
  xcsv.header({"seed", "n_traj", "t_g_us", "xi2", "xi2_err", "var_ratio_min",
               "theta_min"});
  for (const Xi2Point& p : xi2)
    xcsv.row({CsvBuilder::cell(cfg.seed), CsvBuilder::cell(traj_count(cfg)),
              CsvBuilder::cell(p.t_g), CsvBuilder::cell(p.xi2),
              CsvBuilder::cell(p.err), CsvBuilder::cell(p.var_ratio_min),
              CsvBuilder::cell(p.theta_min)});
  w.write("xi2.csv", xcsv.str());
}

// ---------------------------------------------------------------------------
// squeeze: squeezing parameter straight from engine moments
// ---------------------------------------------------------------------------

struct SqueezeData {
  SqueezeSeries s;
  std::uint64_t seed = 0;
};

void run_squeeze_kind(const RunConfig& cfg, Writer& w) {
  const int n_real = cfg.ensemble.n_realizations;
  const int inner = n_real == 1 ? cfg.threads : 1;
  auto slots = map_realizations<SqueezeData>(
      n_real, cfg.threads, [&cfg, inner](int r) {
        SqueezeData d;
        d.seed = realization_seed(cfg.seed, r);
        const SpinEnsemble raw = sample_cfg_ensemble(cfg, d.seed);
        const ProtocolContext ctx =
            prepare_context(plan_for(cfg, d.seed, inner), raw);
        d.s = run_squeeze(ctx);
        return d;
      });

  CsvBuilder csv;
  base_comments(csv, cfg);
  csv.comment("xi2 = N min_theta Var(S_theta) / <Sx>^2 per realization; "
              "xi2_ratio uses the coherent-state references");
  csv.header({"realization", "seed", "n_traj", "t_g_us", "xi2", "xi2_err",
              "xi2_ratio", "sx", "sx_err", "var_min", "n_spins"});
  const int nt = traj_count(cfg);
  for (std::size_t r = 0; r < slots.size(); ++r) {
    const SqueezeData& d = slots[r];
    for (std::size_t i = 0; i < d.s.t.size(); ++i)
      csv.row({CsvBuilder::cell(static_cast<int>(r)), CsvBuilder::cell(d.seed),
               CsvBuilder::cell(nt), CsvBuilder::cell(d.s.t[i]),
               CsvBuilder::cell(d.s.xi2[i]), CsvBuilder::cell(d.s.xi2_err[i]),
               CsvBuilder::cell(d.s.xi2_ratio[i]), CsvBuilder::cell(d.s.sx[i]),
               CsvBuilder::cell(d.s.sx_err[i]), CsvBuilder::cell(d.s.var_min[i]),
               CsvBuilder::cell(d.s.n_spins)});
  }
  w.write("squeeze.csv", csv.str());

  CsvBuilder mean;
  base_comments(mean, cfg);
  mean.comment("squeezing parameter averaged over " + std::to_string(n_real) +
               " realizations");
  mean.header({"seed", "n_traj", "t_g_us", "xi2", "xi2_err", "xi2_ratio",
               "xi2_ratio_err"});
  const std::size_t n_t = slots.front().s.t.size();
  std::vector<double> v1(slots.size()), v2(slots.size());
  for (std::size_t i = 0; i < n_t; ++i) {
    for (std::size_t r = 0; r < slots.size(); ++r) {
      v1[r] = slots[r].s.xi2[i];
      v2[r] = slots[r].s.xi2_ratio[i];
    }
    double m1, e1, m2, e2;
    if (slots.size() == 1) {
      m1 = v1[0];
      e1 = slots[0].s.xi2_err[i];
      m2 = v2[0];
      e2 = slots[0].s.xi2_err[i];
    } else {
      const MeanErr a = mean_and_stderr(v1);
      const MeanErr b = mean_and_stderr(v2);
      m1 = a.mean;
      e1 = a.stderr_mean;
      m2 = b.mean;
      e2 = b.stderr_mean;
    }
    mean.row({CsvBuilder::cell(cfg.seed), CsvBuilder::cell(nt),
              CsvBuilder::cell(slots.front().s.t[i]), CsvBuilder::cell(m1),
              CsvBuilder::cell(e1), CsvBuilder::cell(m2),
              CsvBuilder::cell(e2)});
  }
  w.write("squeeze_mean.csv", mean.str());
}

}  // namespace

RunOutputs run(const RunConfig& cfg) {
  validate_config(cfg);
  if (cfg.out.empty())
    throw std::invalid_argument("config error at out: output directory is required");
  const auto t_start = std::chrono::steady_clock::now();

  Writer w{cfg.out, {}};
  if (cfg.kind == "crossover")
    run_crossover_kind(cfg, w);
  else if (cfg.kind == "ensemble")
    run_ensemble_kind(cfg, w);
  else if (cfg.kind == "twist")
    run_twist_kind(cfg, w);
  else if (cfg.kind == "generation")
    run_generation_kind(cfg, w);
  else if (cfg.kind == "readout")
    run_readout_kind(cfg, w);
  else if (cfg.kind == "map")
    run_map_kind(cfg, w);
  else if (cfg.kind == "squeeze")
    run_squeeze_kind(cfg, w);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  json m;
  m["schema_version"] = 1;
  m["tool"] = kCodeVersion;
  m["kind"] = cfg.kind;
  m["config_hash"] = hex64(config_hash(cfg));
  m["master_seed"] = cfg.seed;
  m["engine"] = cfg.engine.kind;
  m["n_traj"] = traj_count(cfg);
  const int n_real = cfg.kind == "crossover" ? 0 : cfg.ensemble.n_realizations;
  m["n_realizations"] = n_real;
  json seeds = json::array();
  for (int r = 0; r < n_real; ++r) seeds.push_back(realization_seed(cfg.seed, r));
  m["realization_seeds"] = seeds;
  m["outputs"] = w.outs.files;
  m["wall_time_s"] = wall;
  w.write("manifest.json", m.dump(2) + "\n");
  return w.outs;
}

}  // namespace sqz
