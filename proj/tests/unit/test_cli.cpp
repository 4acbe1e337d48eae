#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "squeezelab/analytics.hpp"
#include "squeezelab/common.hpp"
#include "squeezelab/io.hpp"
#include "squeezelab/runner.hpp"

using namespace sqz;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sqz_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Csv {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

Csv load_csv(const fs::path& p) {
  Csv out;
  std::ifstream in(p);
  REQUIRE(in.good());
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      out.comments.push_back(line);
    } else if (!have_header) {
      out.columns = split_csv_line(line);
      have_header = true;
    } else {
      out.rows.push_back(split_csv_line(line));
    }
  }
  return out;
}

std::size_t column_index(const Csv& csv, const std::string& name) {
  for (std::size_t i = 0; i < csv.columns.size(); ++i)
    if (csv.columns[i] == name) return i;
  REQUIRE_MESSAGE(false, ("missing column " + name));
  return 0;
}

const std::string kCrossoverConfig = R"({
  "version": 1,
  "kind": "crossover",
  "seed": 11,
  "crossover": {"density_per_nm2": 0.00141, "r_min_nm": 5.0, "j0": 326.7256},
  "grids": {"t": [0.5, 1.0, 2.0, 4.0, 8.0]}
})";

std::string squeeze_config(int n_realizations, int threads) {
  std::ostringstream ss;
  ss << R"({
  "version": 1,
  "kind": "squeeze",
  "seed": 77,
  "threads": )"
     << threads << R"(,
  "ensemble": {"box_nm": 45.0, "thickness_nm": 0.0, "fixed_count": 4,
               "eta": 1.0, "n_realizations": )"
     << n_realizations << R"(},
  "engine": {"kind": "exact"},
  "grids": {"t_g": [0.0, 0.4, 0.8]}
})";
  return ss.str();
}

}  // namespace

TEST_CASE("configs are schema checked with the offending key path") {
  // Unknown keys anywhere are rejected and named.
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 1, "kind": "crossover",
      "bogus": 3})"),
                       doctest::Contains("bogus"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 1, "kind": "squeeze",
      "ensemble": {"boxx_nm": 40}})"),
                       doctest::Contains("ensemble.boxx_nm"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 1, "kind": "squeeze",
      "grids": {"tg": [0.0]}})"),
                       doctest::Contains("grids.tg"), std::invalid_argument);

  // The version field is mandatory and checked.
  CHECK_THROWS_WITH_AS(parse_config(R"({"kind": "crossover"})"),
                       doctest::Contains("version"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 2, "kind": "crossover"})"),
                       doctest::Contains("version"), std::invalid_argument);

  // Kind must be known and must agree with the subcommand.
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 1, "kind": "sqeeze"})"),
                       doctest::Contains("kind"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 1, "kind": "map"})", "twist"),
                       doctest::Contains("kind"), std::invalid_argument);
  CHECK(parse_config(kCrossoverConfig, "crossover").kind == "crossover");

  // Type errors carry the path too.
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 1, "kind": "crossover",
      "crossover": {"r_min_nm": "five"}})"),
                       doctest::Contains("crossover.r_min_nm"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 1, "kind": "generation",
      "grids": {"t_g": [0.0, "x"]}})"),
                       doctest::Contains("grids.t_g[1]"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 1, "kind": "crossover",
      "seed": -4})"),
                       doctest::Contains("seed"), std::invalid_argument);

  // Malformed JSON is a config error, not a crash.
  CHECK_THROWS_AS(parse_config("{"), std::invalid_argument);
}

TEST_CASE("kind-specific validation catches unusable grids") {
  // An empty rotation-angle grid can never produce a readout scan.
  const std::string readout_no_theta = R"({
    "version": 1, "kind": "readout", "ensemble": {"box_nm": 40, "fixed_count": 3},
    "engine": {"kind": "exact"},
    "grids": {"t_g": [0.0, 1.0], "theta": [], "t_r": [0.0, 0.5]}
  })";
  CHECK_THROWS_WITH_AS(parse_config(readout_no_theta),
                       doctest::Contains("grids.theta"),
                       std::invalid_argument);

  // Grids must be strictly increasing.
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 1, "kind": "generation",
      "ensemble": {"box_nm": 40, "fixed_count": 3}, "engine": {"kind": "exact"},
      "grids": {"t_g": [0.0, 1.0, 1.0]}})"),
                       doctest::Contains("grids.t_g"), std::invalid_argument);

  // Twist tips must stay away from the poles.
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 1, "kind": "twist",
      "ensemble": {"box_nm": 40, "fixed_count": 3}, "engine": {"kind": "exact"},
      "grids": {"phi": [1.6], "t": [0.1, 0.2]}})"),
                       doctest::Contains("grids.phi"), std::invalid_argument);

  // The map kind needs a zero-anchored generation grid and a window sweep.
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 1, "kind": "map",
      "ensemble": {"box_nm": 40, "fixed_count": 3}, "engine": {"kind": "exact"},
      "grids": {"t_g": [0.5, 1.0], "theta": [0.0, 0.8], "t_r": [0.0, 1.0]},
      "fit": {"t_max_sweep": [4.0]}})"),
                       doctest::Contains("grids.t_g"), std::invalid_argument);

  // Crossover needs a positive density and positive times.
  CHECK_THROWS_WITH_AS(parse_config(R"({"version": 1, "kind": "crossover",
      "grids": {"t": [1.0]}})"),
                       doctest::Contains("crossover.density_per_nm2"),
                       std::invalid_argument);
}

TEST_CASE("the config fingerprint tracks semantic fields only") {
  RunConfig a = parse_config(kCrossoverConfig);

  // Whitespace, key order, and comments-by-omission do not matter.
  RunConfig b = parse_config(R"({"grids": {"t": [0.5, 1.0, 2.0, 4.0, 8.0]},
      "seed": 11, "kind": "crossover",
      "crossover": {"j0": 326.7256, "r_min_nm": 5.0, "density_per_nm2": 0.00141},
      "version": 1})");
  CHECK(config_hash(a) == config_hash(b));

  // Threads and output directory are execution details, not semantics.
  RunConfig c = a;
  c.threads = 8;
  c.out = "/somewhere/else";
  CHECK(config_hash(a) == config_hash(c));

  // Any model-relevant change moves the hash.
  RunConfig d = a;
  d.seed = 12;
  CHECK(config_hash(a) != config_hash(d));
  RunConfig e = a;
  e.grids.t.back() = 9.0;
  CHECK(config_hash(a) != config_hash(e));
  RunConfig f = a;
  f.crossover.r_min_nm = 6.0;
  CHECK(config_hash(a) != config_hash(f));
}

TEST_CASE("realization seeds form a stable counter-based family") {
  const std::uint64_t master = 424242;
  const std::uint64_t s0 = realization_seed(master, 0);
  const std::uint64_t s1 = realization_seed(master, 1);
  const std::uint64_t s7 = realization_seed(master, 7);
  CHECK(s0 != s1);
  CHECK(s0 != s7);
  CHECK(s1 != s7);
  // Derivation depends only on (master, index): growing a run cannot move them.
  CHECK(realization_seed(master, 0) == s0);
  CHECK(realization_seed(master + 1, 0) != s0);
}

TEST_CASE("the crossover kind persists closed-form tables with a manifest") {
  const fs::path dir = fresh_dir("crossover_a");
  RunConfig cfg = parse_config(kCrossoverConfig);
  cfg.out = dir.string();
  const RunOutputs outs = run(cfg);

  REQUIRE(outs.files.size() == 3);
  CHECK(outs.files.back() == "manifest.json");

  const Csv csv = load_csv(dir / "crossover.csv");
  REQUIRE(csv.rows.size() == 5);
  const std::size_t ct = column_index(csv, "t_us");
  const std::size_t cs = column_index(csv, "sx");
  const std::size_t cn = column_index(csv, "n_traj");
  const CrossoverParams p{0.00141, 5.0, 326.7256};
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const double t = std::stod(csv.rows[i][ct]);
    // Bytes match the closed form exactly: same formatting path.
    CHECK(csv.rows[i][cs] == format_g17(crossover_sx(p, t)));
    CHECK(csv.rows[i][cn] == "0");  // deterministic result, no trajectories
  }

  const std::string manifest = read_file((dir / "manifest.json").string());
  CHECK(manifest.find("config_hash") != std::string::npos);
  CHECK(manifest.find(hex64(config_hash(cfg))) != std::string::npos);
  CHECK(manifest.find("crossover.csv") != std::string::npos);
  CHECK(manifest.find("wall_time_s") != std::string::npos);

  // The dictionary time is reported and matches the analytic crossover scale.
  const std::string info = read_file((dir / "crossover.json").string());
  CHECK(info.find("crossover_time_us") != std::string::npos);

  // Re-running the same config yields byte-identical data files.
  const fs::path dir2 = fresh_dir("crossover_b");
  cfg.out = dir2.string();
  run(cfg);
  CHECK(read_file((dir / "crossover.csv").string()) ==
        read_file((dir2 / "crossover.csv").string()));
  CHECK(read_file((dir / "crossover.json").string()) ==
        read_file((dir2 / "crossover.json").string()));
}

TEST_CASE("the ensemble kind persists realizations with valid geometry") {
  const fs::path dir = fresh_dir("ensemble");
  RunConfig cfg = parse_config(R"({
    "version": 1, "kind": "ensemble", "seed": 5,
    "ensemble": {"box_nm": 120.0, "thickness_nm": 5.0, "density_ppm_nm": 8.0,
                 "n_realizations": 2}
  })");
  cfg.out = dir.string();
  run(cfg);

  const Csv summary = load_csv(dir / "summary.csv");
  REQUIRE(summary.rows.size() == 2);
  const std::size_t cseed = column_index(summary, "seed");
  CHECK(summary.rows[0][cseed] ==
        std::to_string(realization_seed(5, 0)));
  CHECK(summary.rows[1][cseed] ==
        std::to_string(realization_seed(5, 1)));

  for (int r = 0; r < 2; ++r) {
    const std::string text = read_file(
        (dir / ("ensembles/ensemble_" + std::to_string(r) + ".json")).string());
    CHECK(text.find("\"schema_version\"") != std::string::npos);
    CHECK(text.find("\"positions\"") != std::string::npos);
    CHECK(text.find("\"status\"") != std::string::npos);
    CHECK(text.find("\"box\"") != std::string::npos);
  }

  const Csv hist = load_csv(dir / "couplings.csv");
  CHECK(hist.rows.size() > 0);
}

TEST_CASE("a squeeze run is byte-identical across thread counts") {
  const fs::path d1 = fresh_dir("squeeze_t1");
  const fs::path d3 = fresh_dir("squeeze_t3");

  RunConfig c1 = parse_config(squeeze_config(2, 1));
  c1.out = d1.string();
  RunConfig c3 = parse_config(squeeze_config(2, 3));
  c3.out = d3.string();
  CHECK(config_hash(c1) == config_hash(c3));  // threads are not semantic

  run(c1);
  run(c3);

  const std::string sq1 = read_file((d1 / "squeeze.csv").string());
  const std::string sq3 = read_file((d3 / "squeeze.csv").string());
  CHECK(sq1 == sq3);
  CHECK(read_file((d1 / "squeeze_mean.csv").string()) ==
        read_file((d3 / "squeeze_mean.csv").string()));

  // At t_g = 0 the coherent state has xi2 = 1 exactly.
  const Csv csv = load_csv(d1 / "squeeze.csv");
  const std::size_t ct = column_index(csv, "t_g_us");
  const std::size_t cx = column_index(csv, "xi2");
  bool checked = false;
  for (const auto& row : csv.rows)
    if (std::stod(row[ct]) == 0.0) {
      CHECK(std::stod(row[cx]) == doctest::Approx(1.0).epsilon(1e-9));
      checked = true;
    }
  CHECK(checked);
}

TEST_CASE("adding realizations never perturbs existing ones") {
  const fs::path d2 = fresh_dir("grow_2");
  const fs::path d4 = fresh_dir("grow_4");

  RunConfig c2 = parse_config(squeeze_config(2, 1));
  c2.out = d2.string();
  RunConfig c4 = parse_config(squeeze_config(4, 2));
  c4.out = d4.string();
  run(c2);
  run(c4);

  const Csv small = load_csv(d2 / "squeeze.csv");
  const Csv big = load_csv(d4 / "squeeze.csv");
  REQUIRE(big.rows.size() == 2 * small.rows.size());
  // The first two realizations of the larger run are the rows of the
  // smaller run, byte for byte.
  for (std::size_t i = 0; i < small.rows.size(); ++i)
    CHECK(small.rows[i] == big.rows[i]);
}

TEST_CASE("a map run recovers the squeezing series through the dictionary") {
  const char* config = R"({
  "version": 1,
  "kind": "map",
  "seed": 9,
  "ensemble": {"box_nm": 30.0, "fixed_count": 12, "eta": 1.0,
               "n_realizations": 5},
  "prelude": {"kind": "hard_cutoff", "radius_nm": 5.0},
  "engine": {"kind": "dtwa", "n_traj": 64},
  "grids": {
    "t_g": [0.0, 0.6],
    "theta": [0.0, 0.7, 1.4],
    "t_r": [0.0, 0.3333, 0.6667, 1.0, 1.3333, 1.6667, 2.0, 2.3333, 2.6667,
            3.0, 3.3333, 3.6667, 4.0, 4.3333, 4.6667, 5.0]
  },
  "fit": {"t_max_sweep": [3.5, 4.25, 5.0], "mono_tol": 0.3}
})";

  const fs::path d1 = fresh_dir("map_t1");
  const fs::path d2 = fresh_dir("map_t2");
  RunConfig c1 = parse_config(config, "map");
  c1.out = d1.string();
  RunConfig c2 = parse_config(config, "map");
  c2.threads = 2;
  c2.out = d2.string();
  run(c1);
  run(c2);

  // Every stage of the pipeline is persisted, and the data files are
  // byte-identical across worker counts.
  for (const char* f : {"generation_mean.csv", "readout.csv", "fits.json",
                        "map.json", "xi2.csv"}) {
    CHECK(fs::exists(d1 / f));
    CHECK(read_file((d1 / f).string()) == read_file((d2 / f).string()));
  }

  // The dictionary's validity range spans all of its input support, so the
  // closed-loop extraction never queries outside it.
  const auto map = nlohmann::json::parse(read_file((d1 / "map.json").string()));
  const double lo = map.at("t2_lo_us").get<double>();
  const double hi = map.at("t2_hi_us").get<double>();
  CHECK(lo < hi);
  for (const auto& s : map.at("support")) {
    const double t2 = s.at("t2_us").get<double>();
    CHECK(t2 >= lo);
    CHECK(t2 <= hi);
  }

  const Csv xi2 = load_csv(d1 / "xi2.csv");
  REQUIRE(xi2.rows.size() == 2);
  const std::size_t ct = column_index(xi2, "t_g_us");
  const std::size_t cx = column_index(xi2, "xi2");
  const std::size_t ce = column_index(xi2, "xi2_err");
  // Before any generation the coherent state sits at xi2 = 1 up to the
  // trajectory sampling noise the error column reports.
  CHECK(std::stod(xi2.rows[0][ct]) == 0.0);
  CHECK(std::abs(std::stod(xi2.rows[0][cx]) - 1.0) < 0.2);
  CHECK(std::stod(xi2.rows[0][ce]) > 0.0);
  CHECK(std::stod(xi2.rows[1][cx]) > 0.0);
}

TEST_CASE("the shipped recipe configs parse and agree on the working point") {
  const fs::path dir = fs::path(SQZ_SOURCE_DIR) / "configs";
  const char* names[] = {"full_disorder.json", "optimal_shelving.json",
                         "intermediate_shelving.json", "adiabatic_depol.json"};
  std::vector<RunConfig> cfgs;
  for (const char* n : names) {
    CAPTURE(n);
    cfgs.push_back(parse_config_file((dir / n).string(), "squeeze"));
  }
  for (const RunConfig& c : cfgs) {
    CHECK(c.kind == "squeeze");
    CHECK(c.ensemble.density_ppm_nm == 8.0);
    CHECK(c.ensemble.thickness_nm == 7.0);
    CHECK(c.ensemble.eta == 0.8);
    CHECK(c.grids.t_g.front() == 0.0);
    CHECK(c.grids.t_g.back() == 4.0);
  }
  CHECK(cfgs[0].prelude.kind == "none");
  CHECK(cfgs[1].prelude.kind == "shelving");
  CHECK(cfgs[1].prelude.radius_nm == 7.0);
  CHECK(cfgs[2].prelude.kind == "shelving");
  CHECK(cfgs[2].prelude.radius_nm == 6.0);
  CHECK(cfgs[3].prelude.kind == "depolarization");
  CHECK(cfgs[3].prelude.radius_nm == 14.0);
  // The four recipes differ only in the removal prelude.
  CHECK(config_hash(cfgs[0]) != config_hash(cfgs[1]));
  CHECK(config_hash(cfgs[1]) != config_hash(cfgs[2]));
  CHECK(config_hash(cfgs[2]) != config_hash(cfgs[3]));
}

TEST_CASE("running without an output directory is a config error") {
  RunConfig cfg = parse_config(kCrossoverConfig);
  cfg.out.clear();
  CHECK_THROWS_WITH_AS(run(cfg), doctest::Contains("out"),
                       std::invalid_argument);
}

TEST_SUITE_END();
