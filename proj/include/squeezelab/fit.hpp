// SPDX-License-Identifier: MIT
//
// Analysis chain for readout decay curves: offset-time shifting, global
// stretched-exponential fits A exp(-(t/T2)^p), construction of the monotone
// dictionary between fitted T2 and the normalized quadrature variance, and
// extraction of the squeezing parameter from measured fits.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace sqz {

struct DecayCurve {
  std::vector<double> t;      // us
  std::vector<double> value;  // <Sx(t)>
  std::vector<double> err;    // standard errors; empty or zeros = unweighted
  double t_g = 0.0;           // generation time of the state being read out
  double theta = 0.0;         // readout rotation
  double t_o = 0.0;           // offset applied by shift_curve
  std::string engine;
  std::string geometry;
};

// Relabel the time axis to t_eff = t - t_o (no resampling) and record t_o.
DecayCurve shift_curve(const DecayCurve& c, double t_o);

struct StretchedFit {
  std::vector<double> amp, t2;  // per-curve amplitude and decay time
  std::vector<double> amp_err, t2_err;
  double p = 2.0;  // stretch power, shared across curves
  double p_err = 0.0;
  double t_min = 0.0, t_max = 0.0;  // fitting window
  double chi2 = 0.0;                // total weighted squared residual
  std::size_t n_points = 0;
};

// Weighted least squares of A_c exp(-(t/T2_c)^p) over every curve restricted
// to the window [t_min, t_max]. Weights are 1/err^2 when a curve carries
// positive errors, uniform otherwise. If fixed_p is empty the shared p is
// optimized by golden section on [0.3, 3] (outer loop) with per-curve
// linearized + Gauss-Newton solves inside; otherwise p is held fixed.
// Throws std::invalid_argument when any curve has fewer than 4 points in the
// window and std::runtime_error when the inner solver fails to converge.
StretchedFit fit_stretched(const std::vector<DecayCurve>& curves, double t_min,
                           double t_max,
                           std::optional<double> fixed_p = std::nullopt);

// Support point of the T2 <-> variance dictionary. `var` stores the
// dimensionless ratio Var(S_theta)/Var(S_{theta=0}).
struct VarMapPoint {
  double t2 = 0.0;
  double var = 0.0;
  double t_g = 0.0;
  double theta = 0.0;
};

// Monotone dictionary: larger variance <-> smaller T2. Built from scattered
// support points by (a) averaging nearly equal T2, (b) enforcing a
// decreasing trend by pool-adjacent-violators (rejected if the required
// adjustment exceeds mono_tol relative), and (c) interpolating with a
// shape-preserving monotone piecewise cubic that stays inside the support
// hull. The validity range spans the full T2 extent of the input points;
// where averaging pulled the outermost level inside that span the end value
// is held constant (flat segment, no invented slope). Evaluation outside the
// input support range throws (extrapolation).
class VarianceMap {
 public:
  double operator()(double t2) const;
  double t2_lo() const { return t2_.front(); }
  double t2_hi() const { return t2_.back(); }
  bool covers(double t2) const { return t2 >= t2_lo() && t2 <= t2_hi(); }
  const std::vector<double>& support_t2() const { return t2_; }
  const std::vector<double>& support_var() const { return var_; }
  // Largest relative disagreement between per-t_g slices of the input
  // scatter on their shared T2 range (0 when fewer than two slices overlap).
  double slice_overlap_dev() const { return overlap_dev_; }

  friend VarianceMap build_variance_map(std::vector<VarMapPoint> pts,
                                        double mono_tol);

 private:
  std::vector<double> t2_, var_, slope_;
  double overlap_dev_ = 0.0;
};

VarianceMap build_variance_map(std::vector<VarMapPoint> pts,
                               double mono_tol = 0.1);

struct Xi2Point {
  double t_g = 0.0;
  double xi2 = 0.0;
  double err = 0.0;            // window-sweep spread plus propagated fit error
  double var_ratio_min = 0.0;  // mapped min_theta Var(S_theta)/Var(S_0)
  double theta_min = 0.0;
};

// One squeezing point: map each curve's fitted T2 (one fit per t_max window
// in the sweep), take the minimum mapped variance ratio over the theta grid,
// and scale by (Sx(0)/Sx(t_g))^2 = sx_ratio^2. The error bar combines the
// spread across the window sweep with the fit uncertainty pushed through the
// local map slope. Throws std::runtime_error when a fitted T2 falls outside
// the map's validity range.
Xi2Point extract_xi2_point(const VarianceMap& map,
                           const std::vector<StretchedFit>& tmax_sweep,
                           const std::vector<double>& theta_grid, double t_g,
                           double sx_ratio);

// Full series against a generation curve whose grid starts at t = 0;
// sweep_per_tg[k] holds the window-sweep fits for generation.t[k].
std::vector<Xi2Point> extract_xi2(
    const VarianceMap& map,
    const std::vector<std::vector<StretchedFit>>& sweep_per_tg,
    const std::vector<double>& theta_grid, const DecayCurve& generation);

// Least-squares c0 + c1 cos(2 theta + phase) through (theta, value) samples,
// with the coefficient of determination of the fit. Used to check the
// sinusoidal shape of the extracted variance versus readout angle.
struct SinusoidFit {
  double c0 = 0.0, c1 = 0.0, phase = 0.0;
  double r2 = 0.0;
};
SinusoidFit fit_sinusoid(const std::vector<double>& theta,
                         const std::vector<double>& value);

}  // namespace sqz
