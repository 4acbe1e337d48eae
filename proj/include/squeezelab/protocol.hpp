// SPDX-License-Identifier: MIT
//
// Experiment sequencing on top of the exact and cluster trajectory engines:
// generation quench with reusable state snapshots, rotated readout quenches,
// the twisting-rate calibration sequence, and the transverse-field ramp that
// prepares the ensemble (either integrated dynamically or applied as a
// probabilistic removal model).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "squeezelab/dtwa.hpp"
#include "squeezelab/ensemble.hpp"
#include "squeezelab/exact.hpp"
#include "squeezelab/fit.hpp"
#include "squeezelab/model.hpp"

namespace sqz {

// Transverse-field ramp h(t) = h0 / sqrt(1 + h0^2 k t), the closed-form
// solution of dh/dt = -(k/2) h^3: the sweep slows down as the field weakens
// so the adiabaticity parameter h'(t)/h(t)^2 stays bounded by k.
struct RampSpec {
  double h0 = 0.0;       // initial field, rad/us (> 0)
  double k = 0.0;        // sweep-rate parameter (> 0)
  double duration = 0.0; // us
  bool wait = false;     // dephase depolarized spins after the ramp
  int steps = 200;       // staircase resolution for the dynamical engine
};

double ramp_profile(const RampSpec& ramp, double t);

// Full sequence description. Grids are in microseconds; tr_grid must start
// at 0 so every readout curve carries its own t_r = 0 reference point.
struct QuenchPlan {
  RemovalModel prelude{};            // applied to the ensemble up front
  std::vector<double> tg_grid;       // generation times
  std::vector<double> theta_grid;    // readout rotation angles, rad
  std::vector<double> tr_grid;       // readout times
  std::string engine = "exact";      // "exact" | "dtwa"
  double eta = 1.0;                  // initial polarization
  int n_traj = 1024;                 // trajectories (dtwa)
  double dt = 0.0;                   // integrator step override (dtwa)
  std::uint64_t seed = 0;
  int threads = 1;
  double j0 = kJ0Default;
};

void validate_plan(const QuenchPlan& plan);

// Prepared single-realization workspace: ensemble after the prelude, its
// coupling graph, the interaction model, and the cluster partition.
struct ProtocolContext {
  SpinEnsemble ensemble;
  CouplingGraph graph;
  PairModel model;
  ClusterPartition clusters;
  QuenchPlan plan;
};

ProtocolContext prepare_context(const QuenchPlan& plan,
                                const SpinEnsemble& raw);

// State saved at one generation time, reusable by any readout sequence.
// Exactly one of the two payloads is populated, matching plan.engine.
struct Snapshot {
  double t_g = 0.0;
  PureState psi;                    // exact engine
  std::vector<double> dtwa_states;  // n_traj blocks of state_size doubles
  std::size_t dtwa_state_size = 0;
  int n_traj = 0;
};

struct GenerationResult {
  DecayCurve curve;                // <Sx> on tg_grid
  std::vector<Snapshot> snapshots; // one per tg_grid entry
};

// Evolve the polarized state through the generation quench, recording <Sx>
// and a snapshot at every grid time.
GenerationResult run_generation(const ProtocolContext& ctx);

// Rotate a snapshot by theta about x and evolve through the readout quench.
DecayCurve run_readout(const ProtocolContext& ctx, const Snapshot& snap,
                       double theta);

// Collective moments of a stored snapshot (theta grid as in `moments`).
CollectiveMoments snapshot_moments(const ProtocolContext& ctx,
                                   const Snapshot& snap,
                                   const std::vector<double>& theta_grid);

// Twisting-rate calibration: tip the initial state by phi_o toward +z
// (rotation by -phi_o about y), evolve, and record the in-plane phase
// phi_p = atan2(<Sy>, <Sx>) together with both components.
struct TwistSeries {
  double phi_o = 0.0;
  std::vector<double> t, sx, sy, sx_err, sy_err, phi_p;
};

std::vector<TwistSeries> run_twisting(const ProtocolContext& ctx,
                                      const std::vector<double>& phi_grid,
                                      const std::vector<double>& t_grid);

// Squeezing parameter along the generation quench, straight from engine
// moments (no readout decay involved): xi2 = N min_theta Var(S_theta)/<Sx>^2
// evaluated on tg_grid, plus the measured-contrast variant
// xi2_ratio = [min_theta Var(S_theta)/Var0] [Sx(0)/Sx(t)]^2 with the
// coherent-state references Var0 = N/4 and Sx(0) = eta N/2.
struct SqueezeSeries {
  std::vector<double> t, xi2, xi2_err, xi2_ratio, sx, sx_err, var_min;
  int n_spins = 0;
};

SqueezeSeries run_squeeze(const ProtocolContext& ctx);

// Transverse-field ramp preparation. engine = "exact" integrates the
// staircase-discretized sweep (midpoint field per step, >= 10 steps) and
// marks spins whose residual <s_x> fell below 1/4 as depolarized;
// engine = "probabilistic" applies depolarization_probability with the
// radius set by the final field, r = (J0 / h_final)^(1/3). The reported
// per-spin polarization follows ensemble order; with ramp.wait the
// depolarized spins are projected to zero transverse polarization.
struct RampResult {
  std::vector<SpinStatus> status;       // per ensemble spin
  std::vector<double> sx_per_spin;      // residual <s_x> per ensemble spin
  std::vector<double> h_steps;          // staircase fields (dynamical only)
  double h_final = 0.0;
};

RampResult run_adiabatic_ramp(const SpinEnsemble& ensemble,
                              const RampSpec& ramp, const std::string& engine,
                              double j0 = kJ0Default, std::uint64_t seed = 0);

}  // namespace sqz
