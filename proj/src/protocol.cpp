// SPDX-License-Identifier: MIT

#include "squeezelab/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sqz {

namespace {

void check_grid(const std::vector<double>& g, const char* name,
                bool require_zero_start, bool allow_negative = false) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i]))
      throw std::invalid_argument(std::string(name) + " grid holds a non-finite entry");
    if (!allow_negative && g[i] < 0.0)
      throw std::invalid_argument(std::string(name) + " grid must be nonnegative");
    if (i > 0 && !(g[i] > g[i - 1]))
      throw std::invalid_argument(std::string(name) + " grid must be strictly increasing");
  }
  if (require_zero_start && !g.empty() && g.front() != 0.0)
    throw std::invalid_argument(std::string(name) + " grid must start at 0");
}

std::string describe_geometry(const ProtocolContext& ctx) {
  std::ostringstream os;
  os << ctx.graph.size() << " spins, box " << ctx.ensemble.region.lx << "x"
     << ctx.ensemble.region.ly << " nm";
  return os.str();
}

// Contiguous-block parallel loop matching the trajectory engine's layout so
// per-trajectory work is identical for any thread count.
void parallel_blocks(int n_items, int threads,
                     const std::function<void(int, int)>& body) {
  threads = std::max(1, std::min(threads, n_items));
  if (threads == 1) {
    body(0, n_items);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n_items + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n_items, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(body, lo, hi);
  }
  for (auto& th : pool) th.join();
}

double integrator_step(const DtwaSystem& sys, const QuenchPlan& plan,
                       double horizon) {
  double dt = plan.dt > 0.0 ? plan.dt : sys.default_dt();
  if (!(dt > 0.0)) dt = std::max(horizon, 1.0);  // free system: any step works
  return dt;
}

// <s_x^i> of a pure state: sigma_x flips bit i, so the expectation is the
// overlap between the state and its bit-flipped image.
double site_sx(const PureState& psi, std::size_t i) {
  const std::size_t mask = std::size_t(1) << i;
  double acc = 0.0;
  for (std::size_t s = 0; s < psi.dim(); ++s)
    acc += std::real(std::conj(psi.amp[s]) * psi.amp[s ^ mask]);
  return 0.5 * acc;
}

constexpr double kDepolarizedSxThreshold = 0.25;

}  // namespace

double ramp_profile(const RampSpec& ramp, double t) {
  if (!(ramp.h0 > 0.0)) throw std::invalid_argument("ramp needs h0 > 0");
  if (!(ramp.k > 0.0)) throw std::invalid_argument("ramp needs k > 0");
  const double tt = std::max(t, 0.0);
  return ramp.h0 / std::sqrt(1.0 + ramp.h0 * ramp.h0 * ramp.k * tt);
}

void validate_plan(const QuenchPlan& plan) {
  check_grid(plan.tg_grid, "generation-time", false);
  check_grid(plan.theta_grid, "readout-angle", false, true);
  check_grid(plan.tr_grid, "readout-time", true);
  if (plan.engine != "exact" && plan.engine != "dtwa")
    throw std::invalid_argument("engine must be \"exact\" or \"dtwa\"");
  if (!(plan.eta >= 0.0 && plan.eta <= 1.0))
    throw std::invalid_argument("polarization eta must lie in [0, 1]");
  if (plan.engine == "dtwa" && plan.n_traj < 2)
    throw std::invalid_argument("dtwa needs at least 2 trajectories");
  if (plan.threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (!(plan.j0 > 0.0)) throw std::invalid_argument("coupling scale J0 must be > 0");
  if (plan.dt < 0.0) throw std::invalid_argument("integrator step must be >= 0");
}

ProtocolContext prepare_context(const QuenchPlan& plan,
                                const SpinEnsemble& raw) {
  validate_plan(plan);
  ProtocolContext ctx;
  ctx.plan = plan;
  if (plan.prelude.kind != RemovalKind::none) {
    const CouplingGraph pre = build_coupling(raw, plan.j0);
    ctx.ensemble =
        apply_removal(raw, plan.prelude, &pre, derive_stream_seed(plan.seed, 1));
  } else {
    ctx.ensemble = raw;
  }
  ctx.graph = build_coupling(ctx.ensemble, plan.j0);
  if (ctx.graph.size() == 0)
    throw std::invalid_argument("no active spins are left after the prelude");
  if (plan.engine == "exact" && ctx.graph.size() > kExactMaxSpins) {
    std::ostringstream msg;
    msg << "exact engine capacity exceeded: " << ctx.graph.size() << " spins > "
        << kExactMaxSpins;
    throw std::invalid_argument(msg.str());
  }
  ctx.model = PairModel::xxz(ctx.graph);
  ctx.clusters = plan.engine == "dtwa" ? build_clusters(ctx.graph)
                                       : singleton_partition(ctx.graph.size());
  return ctx;
}

GenerationResult run_generation(const ProtocolContext& ctx) {
  const QuenchPlan& plan = ctx.plan;
  if (plan.tg_grid.empty())
    throw std::invalid_argument("generation needs a nonempty t_g grid");
  const std::size_t n = ctx.graph.size();
  const std::size_t n_tg = plan.tg_grid.size();

  GenerationResult res;
  res.curve.t = plan.tg_grid;
  res.curve.engine = plan.engine;
  res.curve.geometry = describe_geometry(ctx);
  res.snapshots.resize(n_tg);
  for (std::size_t k = 0; k < n_tg; ++k) res.snapshots[k].t_g = plan.tg_grid[k];

  if (plan.engine == "exact") {
    PureState psi =
        prepare_polarized(n, 'x', plan.eta, derive_stream_seed(plan.seed, 2));
    const ExactHamiltonian H(ctx.model);
    double prev = 0.0;
    for (std::size_t k = 0; k < n_tg; ++k) {
      const double step = plan.tg_grid[k] - prev;
      if (step > 0.0) psi = krylov_propagate(psi, H, step);
      prev = plan.tg_grid[k];
      res.curve.value.push_back(moments(psi, {}).sx);
      res.curve.err.push_back(0.0);
      res.snapshots[k].psi = psi;
    }
    return res;
  }

  const DtwaSystem sys(ctx.model, ctx.clusters);
  const std::size_t ss = sys.state_size();
  const int n_traj = plan.n_traj;
  const double dt = integrator_step(sys, plan, plan.tg_grid.back());
  for (auto& snap : res.snapshots) {
    snap.dtwa_states.assign(std::size_t(n_traj) * ss, 0.0);
    snap.dtwa_state_size = ss;
    snap.n_traj = n_traj;
  }
  std::vector<DtwaStage> stages(1);
  stages[0].duration = plan.tg_grid.back();
  stages[0].record = plan.tg_grid;

  std::vector<double> sx_slots(n_tg * std::size_t(n_traj));
  parallel_blocks(n_traj, plan.threads, [&](int lo, int hi) {
    DtwaSystem::Scratch scratch = sys.make_scratch();
    std::vector<double> y(ss);
    for (int traj = lo; traj < hi; ++traj) {
      Rng rng(derive_stream_seed(plan.seed, 1000 + std::uint64_t(traj)));
      sys.sample(y, plan.eta, 'x', rng);
      evolve_trajectory(sys, y, stages, dt, scratch,
                        [&](std::size_t rec, double, const double* yy) {
                          std::memcpy(res.snapshots[rec].dtwa_states.data() +
                                          std::size_t(traj) * ss,
                                      yy, ss * sizeof(double));
                          double out[6];
                          sys.observe(yy, out);
                          sx_slots[rec * n_traj + traj] = out[0];
                        });
    }
  });
  for (std::size_t k = 0; k < n_tg; ++k) {
    const MeanErr me = mean_and_stderr(
        std::span<const double>(sx_slots.data() + k * n_traj, n_traj));
    res.curve.value.push_back(me.mean);
    res.curve.err.push_back(me.stderr_mean);
  }
  return res;
}

DecayCurve run_readout(const ProtocolContext& ctx, const Snapshot& snap,
                       double theta) {
  const QuenchPlan& plan = ctx.plan;
  if (plan.tr_grid.empty())
    throw std::invalid_argument("readout needs a nonempty t_r grid");
  const bool snapshot_exact = snap.psi.n > 0;
  if (snapshot_exact != (plan.engine == "exact"))
    throw std::invalid_argument("snapshot engine does not match the plan");

  DecayCurve curve;
  curve.t = plan.tr_grid;
  curve.t_g = snap.t_g;
  curve.theta = theta;
  curve.engine = plan.engine;
  curve.geometry = describe_geometry(ctx);

  if (snapshot_exact) {
    PureState psi = rotate_global(snap.psi, 'x', theta);
    const ExactHamiltonian H(ctx.model);
    double prev = 0.0;
    for (double tr : plan.tr_grid) {
      if (tr - prev > 0.0) psi = krylov_propagate(psi, H, tr - prev);
      prev = tr;
      curve.value.push_back(moments(psi, {}).sx);
      curve.err.push_back(0.0);
    }
    return curve;
  }

  const DtwaSystem sys(ctx.model, ctx.clusters);
  const std::size_t ss = sys.state_size();
  if (snap.dtwa_state_size != ss || snap.n_traj <= 0 ||
      snap.dtwa_states.size() != std::size_t(snap.n_traj) * ss)
    throw std::invalid_argument("snapshot does not fit this cluster partition");
  const int n_traj = snap.n_traj;
  const std::size_t n_tr = plan.tr_grid.size();
  const double dt = integrator_step(sys, plan, plan.tr_grid.back());

  std::vector<DtwaStage> stages(1);
  stages[0].rot_axis = 'x';
  stages[0].rot_angle = theta;
  stages[0].duration = plan.tr_grid.back();
  stages[0].record = plan.tr_grid;

  std::vector<double> sx_slots(n_tr * std::size_t(n_traj));
  parallel_blocks(n_traj, plan.threads, [&](int lo, int hi) {
    DtwaSystem::Scratch scratch = sys.make_scratch();
    std::vector<double> y(ss);
    for (int traj = lo; traj < hi; ++traj) {
      std::memcpy(y.data(), snap.dtwa_states.data() + std::size_t(traj) * ss,
                  ss * sizeof(double));
      evolve_trajectory(sys, y, stages, dt, scratch,
                        [&](std::size_t rec, double, const double* yy) {
                          double out[6];
                          sys.observe(yy, out);
                          sx_slots[rec * n_traj + traj] = out[0];
                        });
    }
  });
  for (std::size_t k = 0; k < n_tr; ++k) {
    const MeanErr me = mean_and_stderr(
        std::span<const double>(sx_slots.data() + k * n_traj, n_traj));
    curve.value.push_back(me.mean);
    curve.err.push_back(me.stderr_mean);
  }
  return curve;
}

CollectiveMoments snapshot_moments(const ProtocolContext& ctx,
                                   const Snapshot& snap,
                                   const std::vector<double>& theta_grid) {
  if (snap.psi.n > 0) return moments(snap.psi, theta_grid);

  const DtwaSystem sys(ctx.model, ctx.clusters);
  const std::size_t ss = sys.state_size();
  if (snap.dtwa_state_size != ss || snap.n_traj <= 0)
    throw std::invalid_argument("snapshot does not fit this cluster partition");
  double acc[6] = {0, 0, 0, 0, 0, 0};
  double out[6];
  for (int traj = 0; traj < snap.n_traj; ++traj) {
    sys.observe(snap.dtwa_states.data() + std::size_t(traj) * ss, out);
    for (int q = 0; q < 6; ++q) acc[q] += out[q];
  }
  for (double& q : acc) q /= snap.n_traj;

  CollectiveMoments m;
  m.sx = acc[0];
  m.sy = acc[1];
  m.sz = acc[2];
  m.sz2 = acc[3];
  m.sy2 = acc[4];
  m.syz = acc[5];
  m.sx2 = 0.0;  // transverse-x second moment is not tracked by this engine
  const double czz = m.sz2 - m.sz * m.sz;
  const double cyy = m.sy2 - m.sy * m.sy;
  const double cyz = m.syz - m.sy * m.sz;
  for (double th : theta_grid) {
    const double c = std::cos(th), s = std::sin(th);
    m.theta.push_back(th);
    m.var_theta.push_back(c * c * czz + s * s * cyy + 2 * c * s * cyz);
  }
  const double tr = 0.5 * (czz + cyy);
  const double det = czz * cyy - cyz * cyz;
  m.var_min = tr - std::sqrt(std::max(tr * tr - det, 0.0));
  double th = 0.5 * std::atan2(2.0 * cyz, czz - cyy);
  const double c = std::cos(th), s = std::sin(th);
  const double v_here = c * c * czz + s * s * cyy + 2 * c * s * cyz;
  if (std::abs(v_here - m.var_min) > std::abs(v_here - (czz + cyy - m.var_min)))
    th += M_PI_2;
  m.theta_min = th;
  return m;
}

std::vector<TwistSeries> run_twisting(const ProtocolContext& ctx,
                                      const std::vector<double>& phi_grid,
                                      const std::vector<double>& t_grid) {
  const QuenchPlan& plan = ctx.plan;
  if (phi_grid.empty())
    throw std::invalid_argument("twisting needs a nonempty tipping-angle grid");
  check_grid(t_grid, "twisting-time", false);
  if (t_grid.empty())
    throw std::invalid_argument("twisting needs a nonempty time grid");
  for (double phi : phi_grid)
    if (!(std::abs(phi) < M_PI_2))
      throw std::invalid_argument("tipping angles must satisfy |phi| < pi/2");

  std::vector<TwistSeries> out;
  out.reserve(phi_grid.size());
  const std::size_t n = ctx.graph.size();

  if (plan.engine == "exact") {
    const PureState psi0 =
        prepare_polarized(n, 'x', plan.eta, derive_stream_seed(plan.seed, 2));
    const ExactHamiltonian H(ctx.model);
    for (double phi : phi_grid) {
      TwistSeries series;
      series.phi_o = phi;
      series.t = t_grid;
      // Tip the mean spin toward +z for positive phi.
      PureState psi = rotate_global(psi0, 'y', -phi);
      double prev = 0.0;
      for (double t : t_grid) {
        if (t - prev > 0.0) psi = krylov_propagate(psi, H, t - prev);
        prev = t;
        const CollectiveMoments m = moments(psi, {});
        series.sx.push_back(m.sx);
        series.sy.push_back(m.sy);
        series.sx_err.push_back(0.0);
        series.sy_err.push_back(0.0);
        series.phi_p.push_back(std::atan2(m.sy, m.sx));
      }
      out.push_back(std::move(series));
    }
    return out;
  }

  DtwaOptions opts;
  opts.n_traj = plan.n_traj;
  opts.dt = plan.dt;
  opts.eta = plan.eta;
  opts.axis = 'x';
  opts.seed = plan.seed;
  opts.threads = plan.threads;
  for (double phi : phi_grid) {
    std::vector<DtwaStage> stages(1);
    stages[0].rot_axis = 'y';
    stages[0].rot_angle = -phi;
    stages[0].duration = t_grid.back();
    stages[0].record = t_grid;
    const DtwaSeries series = run_dtwa(ctx.model, ctx.clusters, stages, opts);
    TwistSeries tw;
    tw.phi_o = phi;
    tw.t = t_grid;
    tw.sx = series.sx;
    tw.sy = series.sy;
    tw.sx_err = series.sx_err;
    tw.sy_err = series.sy_err;
    for (std::size_t k = 0; k < series.t.size(); ++k)
      tw.phi_p.push_back(std::atan2(series.sy[k], series.sx[k]));
    out.push_back(std::move(tw));
  }
  return out;
}

SqueezeSeries run_squeeze(const ProtocolContext& ctx) {
  const QuenchPlan& plan = ctx.plan;
  if (plan.tg_grid.empty())
    throw std::invalid_argument("squeezing scan needs a nonempty t_g grid");
  const std::size_t n = ctx.graph.size();
  SqueezeSeries out;
  out.t = plan.tg_grid;
  out.n_spins = static_cast<int>(n);
  const double sx_css = 0.5 * plan.eta * static_cast<double>(n);
  const double var_css = 0.25 * static_cast<double>(n);

  if (plan.engine == "exact") {
    PureState psi =
        prepare_polarized(n, 'x', plan.eta, derive_stream_seed(plan.seed, 2));
    const ExactHamiltonian H(ctx.model);
    double prev = 0.0;
    for (double tg : plan.tg_grid) {
      if (tg - prev > 0.0) psi = krylov_propagate(psi, H, tg - prev);
      prev = tg;
      const CollectiveMoments m = moments(psi, {});
      out.sx.push_back(m.sx);
      out.sx_err.push_back(0.0);
      out.var_min.push_back(m.var_min);
      out.xi2.push_back(squeezing_parameter(m, n));
      out.xi2_err.push_back(0.0);
      const double contrast = m.sx != 0.0 ? sx_css / m.sx : 0.0;
      out.xi2_ratio.push_back(m.var_min / var_css * contrast * contrast);
    }
    return out;
  }

  std::vector<DtwaStage> stages(1);
  stages[0].duration = plan.tg_grid.back();
  stages[0].record = plan.tg_grid;
  DtwaOptions opts;
  opts.n_traj = plan.n_traj;
  opts.dt = plan.dt;
  opts.eta = plan.eta;
  opts.axis = 'x';
  opts.seed = plan.seed;
  opts.threads = plan.threads;
  const DtwaSeries series = run_dtwa(ctx.model, ctx.clusters, stages, opts);
  for (std::size_t k = 0; k < series.t.size(); ++k) {
    const double vmin = series.var_min(k);
    const double sx = series.sx[k];
    out.sx.push_back(sx);
    out.sx_err.push_back(series.sx_err[k]);
    out.var_min.push_back(vmin);
    const double xi2 = sx != 0.0 ? n * vmin / (sx * sx) : 0.0;
    out.xi2.push_back(xi2);
    // Propagate trajectory scatter through the covariance eigenvalue (delta
    // method at the minimizing angle) and the contrast.
    const double czz = series.sz2[k] - series.sz[k] * series.sz[k];
    const double cyy = series.sy2[k] - series.sy[k] * series.sy[k];
    const double cyz = series.syz[k] - series.sy[k] * series.sz[k];
    double th = 0.5 * std::atan2(2.0 * cyz, czz - cyy);
    const double v0 = std::cos(th) * std::cos(th) * czz +
                      std::sin(th) * std::sin(th) * cyy +
                      2.0 * std::cos(th) * std::sin(th) * cyz;
    if (std::abs(v0 - vmin) > std::abs(v0 - (czz + cyy - vmin))) th += M_PI_2;
    const double c = std::cos(th), s = std::sin(th);
    const double mth = c * series.sz[k] + s * series.sy[k];
    const double var_err = std::sqrt(
        std::pow(c * c * series.sz2_err[k], 2) +
        std::pow(s * s * series.sy2_err[k], 2) +
        std::pow(2 * c * s * series.syz_err[k], 2) +
        std::pow(2 * c * mth * series.sz_err[k], 2) +
        std::pow(2 * s * mth * series.sy_err[k], 2));
    double xi2_err = 0.0;
    if (vmin > 0.0 && sx != 0.0)
      xi2_err = xi2 * std::sqrt(std::pow(var_err / vmin, 2) +
                                std::pow(2.0 * series.sx_err[k] / sx, 2));
    out.xi2_err.push_back(xi2_err);
    const double contrast = sx != 0.0 ? sx_css / sx : 0.0;
    out.xi2_ratio.push_back(vmin / var_css * contrast * contrast);
  }
  return out;
}

RampResult run_adiabatic_ramp(const SpinEnsemble& ensemble,
                              const RampSpec& ramp, const std::string& engine,
                              double j0, std::uint64_t seed) {
  if (!(ramp.duration > 0.0))
    throw std::invalid_argument("ramp duration must be > 0");
  RampResult res;
  res.h_final = ramp_profile(ramp, ramp.duration);

  if (engine == "probabilistic") {
    RemovalModel dep;
    dep.kind = RemovalKind::depolarization;
    dep.radius = std::cbrt(j0 / res.h_final);
    const SpinEnsemble after =
        apply_removal(ensemble, dep, nullptr, derive_stream_seed(seed, 3));
    res.status = after.status;
    res.sx_per_spin.resize(after.size(), 0.0);
    for (std::size_t i = 0; i < after.size(); ++i) {
      if (after.status[i] == SpinStatus::active)
        res.sx_per_spin[i] = 0.5;
      else if (after.status[i] == SpinStatus::depolarized && !ramp.wait)
        res.sx_per_spin[i] = 0.5;  // flagged, but not yet dephased
    }
    return res;
  }

  if (engine != "exact" && engine != "dynamical")
    throw std::invalid_argument(
        "ramp engine must be \"exact\" (dynamical staircase) or \"probabilistic\"");
  if (ramp.steps < 10)
    throw std::invalid_argument("staircase ramp needs at least 10 steps");

  const CouplingGraph g = build_coupling(ensemble, j0);
  const std::size_t n = g.size();
  if (n == 0) throw std::invalid_argument("ramp needs at least one active spin");
  if (n > kExactMaxSpins)
    throw std::invalid_argument("dynamical ramp exceeds the exact-engine capacity");
  const PairModel base = PairModel::xxz(g);

  PureState psi = prepare_product(n, 'x', std::vector<bool>(n, false));
  const double step = ramp.duration / ramp.steps;
  res.h_steps.reserve(ramp.steps);
  for (int s = 0; s < ramp.steps; ++s) {
    const double h_mid = ramp_profile(ramp, (s + 0.5) * step);
    res.h_steps.push_back(h_mid);
    PairModel m = base;
    m.add_transverse_field(h_mid);
    const ExactHamiltonian H(m);
    psi = krylov_propagate(psi, H, step);
  }

  res.status = ensemble.status;
  res.sx_per_spin.resize(ensemble.size(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double sx = site_sx(psi, k);
    const std::size_t who = g.spins[k];
    if (sx < kDepolarizedSxThreshold) {
      res.status[who] = SpinStatus::depolarized;
      res.sx_per_spin[who] = ramp.wait ? 0.0 : sx;
    } else {
      res.sx_per_spin[who] = sx;
    }
  }
  return res;
}

}  // namespace sqz
