// SPDX-License-Identifier: MIT
//
// Configuration ingestion and the experiment driver behind the command line
// tool: versioned JSON schema with unknown-key rejection, a semantic config
// fingerprint, counter-based per-realization seeding, and seven experiment
// kinds persisted as CSV/JSON plus a run manifest.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "squeezelab/common.hpp"

namespace sqz {

inline constexpr const char* kCodeVersion = "squeezelab 0.1.0";
inline constexpr int kConfigVersion = 1;

// Spin ensemble shared by every spin-based kind. Densities are quoted in
// ppm*nm (areal dipole density relative to the diamond carbon density);
// box/thickness in nm; j0 in rad*nm^3/us.
struct EnsembleConfig {
  double density_ppm_nm = 8.0;
  double box_nm = 0.0;
  double thickness_nm = 0.0;
  double eta = 1.0;          // initial polarization
  double j0 = kJ0Default;
  int n_realizations = 1;    // disorder realizations
  int fixed_count = 0;       // > 0: sample exactly this many spins
};

// Pair-removal prelude applied before the interaction model is built.
struct PreludeConfig {
  std::string kind = "none";  // none | hard_cutoff | shelving | depolarization
  double radius_nm = 0.0;
};

struct EngineConfig {
  std::string kind = "dtwa";  // exact | dtwa
  int n_traj = 1024;          // trajectories (dtwa)
  double dt = 0.0;            // integrator step override, 0 = automatic
};

// Time grids in us, angles in rad. Which grids are required depends on the
// experiment kind (see the per-kind validation).
struct GridsConfig {
  std::vector<double> t_g;    // generation times
  std::vector<double> theta;  // readout rotation angles
  std::vector<double> t_r;    // readout times
  std::vector<double> t;      // plain time grid (twist, crossover)
  std::vector<double> phi;    // tip angles (twist)
};

// Decay-fit settings used by the `map` kind.
struct FitConfig {
  std::string p_mode = "shared";    // shared | fixed
  double p_fixed = 0.0;             // stretch power when p_mode == fixed
  std::vector<double> t_max_sweep;  // fit-window upper edges, us
  double mono_tol = 0.1;            // monotonicity tolerance of the dictionary
};

// Closed-form crossover curve parameters (`crossover` kind).
struct CrossoverConfig {
  double density_per_nm2 = 0.0;
  double r_min_nm = 0.0;
  double j0 = 1.0;  // rad*nm^3/us
};

struct RunConfig {
  int version = kConfigVersion;
  std::string kind;  // ensemble | twist | generation | readout | map | squeeze | crossover
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;  // output directory
  EnsembleConfig ensemble;
  PreludeConfig prelude;
  EngineConfig engine;
  GridsConfig grids;
  FitConfig fit;
  CrossoverConfig crossover;
};

// Parse and validate a JSON config document. Any unknown key is rejected with
// the dotted path to the offending key, the `version` field is mandatory, and
// every violation throws std::invalid_argument whose message starts with
// "config error". When expected_kind is non-empty the document may omit
// `kind`; if both are present they must agree.
RunConfig parse_config(const std::string& json_text,
                       const std::string& expected_kind = "");
RunConfig parse_config_file(const std::string& path,
                            const std::string& expected_kind = "");

// Full validation (also called by run()); throws std::invalid_argument.
void validate_config(const RunConfig& cfg);

// Fingerprint over the semantically meaningful fields: everything except
// `threads` and `out`, which cannot change any computed number.
std::uint64_t config_hash(const RunConfig& cfg);

// Seed of disorder realization r, derived from the master seed through a
// fixed counter scheme so adding realizations never perturbs existing ones.
std::uint64_t realization_seed(std::uint64_t master, int r);

struct RunOutputs {
  std::vector<std::string> files;  // written files relative to out, manifest last
};

// Execute the configured experiment and persist results plus manifest.json
// under cfg.out. Realizations are distributed over a work queue and reduced
// in fixed order, so outputs are byte-identical for any thread count.
// Throws std::invalid_argument for config problems and std::runtime_error
// for numeric/convergence failures.
RunOutputs run(const RunConfig& cfg);

}  // namespace sqz
