// SPDX-License-Identifier: MIT

#include "squeezelab/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sqz {

namespace {

constexpr double kTiny = 1e-300;

struct CurvePoints {
  std::vector<double> t, v, w;
  bool weighted = false;
};

// Restrict one curve to the fit window and attach inverse-variance weights.
CurvePoints window_points(const DecayCurve& c, double t_min, double t_max,
                          std::size_t index) {
  if (c.t.size() != c.value.size())
    throw std::invalid_argument("decay curve has mismatched t/value sizes");
  const bool has_err = c.err.size() == c.t.size();
  bool all_positive_err = has_err && !c.err.empty();
  if (has_err)
    for (double e : c.err)
      if (!(e > 0.0)) all_positive_err = false;

  CurvePoints out;
  out.weighted = all_positive_err;
  const double slack = 1e-9 * std::max(1.0, std::abs(t_max));
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    if (c.t[i] < t_min - slack || c.t[i] > t_max + slack) continue;
    if (!std::isfinite(c.value[i]))
      throw std::invalid_argument("decay curve holds a non-finite value");
    if (c.t[i] < -slack)
      throw std::invalid_argument(
          "fit window includes negative times; shift the curve first");
    out.t.push_back(std::max(c.t[i], 0.0));
    out.v.push_back(c.value[i]);
    out.w.push_back(all_positive_err ? 1.0 / (c.err[i] * c.err[i]) : 1.0);
  }
  if (out.t.size() < 4) {
    std::ostringstream msg;
    msg << "curve " << index << " keeps only " << out.t.size()
        << " points in the window [" << t_min << ", " << t_max
        << "]; at least 4 are required";
    throw std::invalid_argument(msg.str());
  }
  return out;
}

double model_value(double a, double tau, double p, double t) {
  return a * std::exp(-std::pow(t / tau, p));
}

double ssr_of(const CurvePoints& d, double a, double tau, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.t.size(); ++i) {
    const double r = d.v[i] - model_value(a, tau, p, d.t[i]);
    s += d.w[i] * r * r;
  }
  return s;
}

struct CurveSolution {
  double a = 0.0, tau = 0.0;
  double ssr = 0.0;
  double cov_aa = 0.0, cov_tt = 0.0;
};

// Weighted nonlinear fit of A exp(-(t/tau)^p) for one curve at fixed p:
// a log-linear pass seeds (A, tau), then damped Gauss-Newton refines the
// true residuals. Throws std::runtime_error with the residual trace when
// the iteration does not settle.
CurveSolution solve_curve(const CurvePoints& d, double p, bool want_cov) {
  const std::size_t n = d.t.size();
  double t_last = *std::max_element(d.t.begin(), d.t.end());
  if (!(t_last > 0.0))
    throw std::invalid_argument("fit window spans no positive time");

  // Log-linear seed on the positive samples: ln v = ln A - (t^p) / tau^p.
  double a = *std::max_element(d.v.begin(), d.v.end());
  double tau = t_last;
  {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(d.v[i] > 0.0)) continue;
      const double x = std::pow(d.t[i], p);
      const double y = std::log(d.v[i]);
      const double w = d.w[i] * d.v[i] * d.v[i];
      sw += w;
      sx += w * x;
      sy += w * y;
      sxx += w * x * x;
      sxy += w * x * y;
    }
    const double det = sw * sxx - sx * sx;
    if (sw > 0.0 && std::abs(det) > kTiny) {
      const double slope = (sw * sxy - sx * sy) / det;
      const double inter = (sxx * sy - sx * sxy) / det;
      if (slope < 0.0) {
        tau = std::pow(-1.0 / slope, 1.0 / p);
        a = std::exp(inter);
      }
    }
  }
  if (!(a > 0.0)) a = std::max(std::abs(a), 1e-12);

  double ssr = ssr_of(d, a, tau, p);
  std::vector<double> trace{ssr};
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    // Normal equations for beta = (A, tau).
    double maa = 0, mat = 0, mtt = 0, ga = 0, gt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = std::pow(d.t[i] / tau, p);
      const double e = std::exp(-u);
      const double f = a * e;
      const double ja = e;
      const double jt = f * p * u / tau;
      const double r = d.v[i] - f;
      maa += d.w[i] * ja * ja;
      mat += d.w[i] * ja * jt;
      mtt += d.w[i] * jt * jt;
      ga += d.w[i] * ja * r;
      gt += d.w[i] * jt * r;
    }
    const double det = maa * mtt - mat * mat;
    double da, dt;
    if (std::abs(det) > kTiny * std::max(1.0, maa * mtt)) {
      da = (mtt * ga - mat * gt) / det;
      dt = (maa * gt - mat * ga) / det;
    } else {  // gradient fallback when tau barely enters the window
      da = ga / std::max(maa, kTiny);
      dt = gt / std::max(mtt, kTiny);
    }

    double step = 1.0;
    double next_a = a, next_tau = tau, next_ssr = ssr;
    bool improved = false;
    for (int half = 0; half < 30; ++half, step *= 0.5) {
      const double ca = a + step * da;
      const double ct = tau + step * dt;
      if (!(ct > 0.0)) continue;
      const double s = ssr_of(d, ca, ct, p);
      if (s <= ssr * (1.0 + 1e-15) + kTiny) {
        next_a = ca;
        next_tau = ct;
        next_ssr = s;
        improved = s < ssr;
        break;
      }
    }
    const double rel_move = std::abs(next_a - a) / std::max(std::abs(a), kTiny) +
                            std::abs(next_tau - tau) / std::max(tau, kTiny);
    a = next_a;
    tau = next_tau;
    ssr = next_ssr;
    trace.push_back(ssr);
    if (rel_move < 1e-12 || (!improved && it > 2)) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "stretched-exponential solver did not converge; residual trace:";
    const std::size_t k0 = trace.size() > 6 ? trace.size() - 6 : 0;
    for (std::size_t k = k0; k < trace.size(); ++k) msg << ' ' << trace[k];
    throw std::runtime_error(msg.str());
  }

  CurveSolution out;
  out.a = a;
  out.tau = tau;
  out.ssr = ssr;
  if (want_cov) {
    double maa = 0, mat = 0, mtt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = std::pow(d.t[i] / tau, p);
      const double e = std::exp(-u);
      const double ja = e;
      const double jt = a * e * p * u / tau;
      maa += d.w[i] * ja * ja;
      mat += d.w[i] * ja * jt;
      mtt += d.w[i] * jt * jt;
    }
    const double det = maa * mtt - mat * mat;
    if (std::abs(det) > kTiny) {
      double scale = 1.0;
      if (!d.weighted && n > 2)
        scale = ssr / static_cast<double>(n - 2);  // estimate sigma^2
      out.cov_aa = scale * mtt / det;
      out.cov_tt = scale * maa / det;
    }
  }
  return out;
}

double total_ssr(const std::vector<CurvePoints>& data, double p) {
  double s = 0.0;
  for (const auto& d : data) s += solve_curve(d, p, false).ssr;
  return s;
}

}  // namespace

DecayCurve shift_curve(const DecayCurve& c, double t_o) {
  DecayCurve out = c;
  for (double& t : out.t) t -= t_o;
  out.t_o = c.t_o + t_o;
  return out;
}

StretchedFit fit_stretched(const std::vector<DecayCurve>& curves, double t_min,
                           double t_max, std::optional<double> fixed_p) {
  if (curves.empty()) throw std::invalid_argument("no curves to fit");
  if (!(t_max > t_min))
    throw std::invalid_argument("degenerate fit window: t_max must exceed t_min");

  std::vector<CurvePoints> data;
  data.reserve(curves.size());
  std::size_t n_points = 0;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    data.push_back(window_points(curves[c], t_min, t_max, c));
    n_points += data.back().t.size();
  }

  double p_best;
  if (fixed_p) {
    if (!(*fixed_p > 0.0) || *fixed_p > 4.0)
      throw std::invalid_argument("fixed stretch power must lie in (0, 4]");
    p_best = *fixed_p;
  } else {
    // Coarse bracket over [0.3, 3], then golden-section refinement. The
    // profile SSR(p) is smooth; the scan guards against picking a shoulder.
    const double lo = 0.3, hi = 3.0;
    const int n_scan = 28;
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> grid(n_scan);
    for (int i = 0; i < n_scan; ++i) {
      grid[i] = lo + (hi - lo) * i / (n_scan - 1);
      const double s = total_ssr(data, grid[i]);
      if (s < best_val) {
        best_val = s;
        best = i;
      }
    }
    double a = grid[std::max(best - 1, 0)];
    double b = grid[std::min(best + 1, n_scan - 1)];
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = total_ssr(data, x1), f2 = total_ssr(data, x2);
    for (int it = 0; it < 70 && (b - a) > 1e-11; ++it) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = total_ssr(data, x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = total_ssr(data, x2);
      }
    }
    p_best = 0.5 * (a + b);
  }

  StretchedFit fit;
  fit.p = p_best;
  fit.t_min = t_min;
  fit.t_max = t_max;
  fit.n_points = n_points;
  bool all_weighted = true;
  for (const auto& d : data) all_weighted = all_weighted && d.weighted;
  for (const auto& d : data) {
    const CurveSolution sol = solve_curve(d, p_best, true);
    fit.amp.push_back(sol.a);
    fit.t2.push_back(sol.tau);
    fit.amp_err.push_back(std::sqrt(std::max(sol.cov_aa, 0.0)));
    fit.t2_err.push_back(std::sqrt(std::max(sol.cov_tt, 0.0)));
    fit.chi2 += sol.ssr;
  }

  if (!fixed_p) {
    // 1-sigma bar on the shared power from the curvature of the SSR profile.
    const double dp = 1e-3 * std::max(1.0, p_best);
    const double s0 = fit.chi2;
    const double sp = total_ssr(data, std::min(p_best + dp, 4.0));
    const double sm = total_ssr(data, std::max(p_best - dp, 0.05));
    const double curv = (sp + sm - 2.0 * s0) / (dp * dp);
    if (curv > 0.0) {
      double scale = 1.0;
      const std::size_t dof = 2 * curves.size() + 1;
      if (!all_weighted && n_points > dof)
        scale = s0 / static_cast<double>(n_points - dof);
      fit.p_err = std::sqrt(2.0 * scale / curv);
    }
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Variance dictionary
// ---------------------------------------------------------------------------

namespace {

// Largest relative disagreement between linear interpolants of per-t_g
// subsets of the support scatter, sampled on their shared T2 range.
double slice_overlap(const std::vector<VarMapPoint>& pts) {
  std::map<double, std::vector<std::pair<double, double>>> slices;
  for (const auto& p : pts) slices[p.t_g].push_back({p.t2, p.var});
  std::vector<std::vector<std::pair<double, double>>> keep;
  for (auto& [tg, s] : slices) {
    if (s.size() < 2) continue;
    std::sort(s.begin(), s.end());
    keep.push_back(s);
  }
  auto interp = [](const std::vector<std::pair<double, double>>& s, double x) {
    auto it = std::lower_bound(s.begin(), s.end(), std::make_pair(x, -1e308));
    if (it == s.begin()) return s.front().second;
    if (it == s.end()) return s.back().second;
    const auto [x1, y1] = *it;
    const auto [x0, y0] = *(it - 1);
    const double f = x1 > x0 ? (x - x0) / (x1 - x0) : 0.0;
    return y0 + f * (y1 - y0);
  };
  double dev = 0.0;
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t j = i + 1; j < keep.size(); ++j) {
      const double lo = std::max(keep[i].front().first, keep[j].front().first);
      const double hi = std::min(keep[i].back().first, keep[j].back().first);
      if (!(hi > lo)) continue;
      for (int k = 0; k <= 64; ++k) {
        const double x = lo + (hi - lo) * k / 64.0;
        const double a = interp(keep[i], x);
        const double b = interp(keep[j], x);
        const double ref = 0.5 * (std::abs(a) + std::abs(b));
        if (ref > kTiny) dev = std::max(dev, std::abs(a - b) / ref);
      }
    }
  return dev;
}

}  // namespace

VarianceMap build_variance_map(std::vector<VarMapPoint> pts, double mono_tol) {
  if (pts.size() < 2)
    throw std::invalid_argument("variance dictionary needs at least 2 points");
  for (const auto& p : pts)
    if (!(p.t2 > 0.0) || !std::isfinite(p.var))
      throw std::invalid_argument("variance dictionary point with T2 <= 0");

  VarianceMap map;
  map.overlap_dev_ = slice_overlap(pts);

  std::sort(pts.begin(), pts.end(), [](const VarMapPoint& a, const VarMapPoint& b) {
    return a.t2 < b.t2;
  });

  // Average support points whose T2 agree to rounding.
  std::vector<double> x, y;
  std::size_t i = 0;
  while (i < pts.size()) {
    std::size_t j = i + 1;
    double sx = pts[i].t2, sy = pts[i].var;
    while (j < pts.size() &&
           pts[j].t2 - pts[i].t2 <= 1e-9 * std::max(1.0, pts[i].t2)) {
      sx += pts[j].t2;
      sy += pts[j].var;
      ++j;
    }
    x.push_back(sx / static_cast<double>(j - i));
    y.push_back(sy / static_cast<double>(j - i));
    i = j;
  }

  // Pool-adjacent-violators: enforce a non-increasing trend, then reject the
  // construction when the data had to move more than mono_tol relative.
  struct Block {
    double sum;
    int cnt;
    double val() const { return sum / cnt; }
  };
  std::vector<Block> blocks;
  for (double v : y) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 &&
           blocks[blocks.size() - 2].val() < blocks.back().val()) {
      blocks[blocks.size() - 2].sum += blocks.back().sum;
      blocks[blocks.size() - 2].cnt += blocks.back().cnt;
      blocks.pop_back();
    }
  }
  std::vector<double> yfit;
  yfit.reserve(y.size());
  for (const auto& b : blocks) yfit.insert(yfit.end(), b.cnt, b.val());

  double worst = 0.0;
  std::size_t worst_at = 0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double rel = std::abs(yfit[k] - y[k]) / std::max(std::abs(y[k]), kTiny);
    if (rel > worst) {
      worst = rel;
      worst_at = k;
    }
  }
  if (worst > mono_tol) {
    std::ostringstream msg;
    msg << "variance dictionary is not monotone within tolerance " << mono_tol
        << ": point (T2=" << x[worst_at] << ", var=" << y[worst_at]
        << ") would move to " << yfit[worst_at] << " (relative " << worst
        << "); check the readout fits feeding the map";
    throw std::runtime_error(msg.str());
  }

  // Collapse exact plateaus left by the pooling into single nodes so the
  // interpolant is strictly decreasing.
  std::vector<double> xs, ys;
  i = 0;
  while (i < yfit.size()) {
    std::size_t j = i + 1;
    double sx = x[i];
    while (j < yfit.size() && yfit[j] == yfit[i]) {
      sx += x[j];
      ++j;
    }
    xs.push_back(sx / static_cast<double>(j - i));
    ys.push_back(yfit[i]);
    i = j;
  }
  if (xs.size() < 2)
    throw std::runtime_error(
        "variance dictionary support collapses to a single level; widen the "
        "generation-time coverage");

  // Averaging a plateau's T2 pulls the outermost nodes inside the scatter of
  // the input support. Re-extend the validity range to the full input span
  // with flat end segments: within the measured scatter the dictionary holds
  // the end value constant instead of refusing the query, and no slope is
  // invented beyond the data.
  if (x.front() < xs.front()) {
    xs.insert(xs.begin(), x.front());
    ys.insert(ys.begin(), ys.front());
  }
  if (x.back() > xs.back()) {
    xs.push_back(x.back());
    ys.push_back(ys.back());
  }

  // Shape-preserving monotone cubic slopes (Fritsch-Butland interior rule,
  // clamped three-point ends).
  const std::size_t m = xs.size();
  std::vector<double> h(m - 1), d(m - 1), slope(m, 0.0);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    h[k] = xs[k + 1] - xs[k];
    d[k] = (ys[k + 1] - ys[k]) / h[k];
  }
  if (m == 2) {
    slope[0] = slope[1] = d[0];
  } else {
    for (std::size_t k = 1; k + 1 < m; ++k) {
      if (d[k - 1] * d[k] <= 0.0) {
        slope[k] = 0.0;
      } else {
        slope[k] = 3.0 * (h[k - 1] + h[k]) /
                   ((2.0 * h[k] + h[k - 1]) / d[k - 1] +
                    (h[k] + 2.0 * h[k - 1]) / d[k]);
      }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
      double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (s * d0 <= 0.0) return 0.0;
      if (std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
      return s;
    };
    slope[0] = end_slope(h[0], h[1], d[0], d[1]);
    slope[m - 1] = end_slope(h[m - 2], h[m - 3], d[m - 2], d[m - 3]);
  }

  map.t2_ = std::move(xs);
  map.var_ = std::move(ys);
  map.slope_ = std::move(slope);
  return map;
}

double VarianceMap::operator()(double t2) const {
  const double slack = 1e-12 * std::max(1.0, t2_hi());
  if (t2 < t2_lo() - slack || t2 > t2_hi() + slack) {
    std::ostringstream msg;
    msg << "T2 = " << t2 << " lies outside the dictionary's validity range ["
        << t2_lo() << ", " << t2_hi() << "]; refusing to extrapolate";
    throw std::runtime_error(msg.str());
  }
  const double x = std::clamp(t2, t2_lo(), t2_hi());
  std::size_t k =
      std::upper_bound(t2_.begin(), t2_.end(), x) - t2_.begin();
  k = std::clamp<std::size_t>(k, 1, t2_.size() - 1) - 1;
  const double hh = t2_[k + 1] - t2_[k];
  const double s = (x - t2_[k]) / hh;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * var_[k] + (s3 - 2 * s2 + s) * hh * slope_[k] +
         (-2 * s3 + 3 * s2) * var_[k + 1] + (s3 - s2) * hh * slope_[k + 1];
}

// ---------------------------------------------------------------------------
// Squeezing extraction
// ---------------------------------------------------------------------------

Xi2Point extract_xi2_point(const VarianceMap& map,
                           const std::vector<StretchedFit>& tmax_sweep,
                           const std::vector<double>& theta_grid, double t_g,
                           double sx_ratio) {
  if (tmax_sweep.empty())
    throw std::invalid_argument("squeezing extraction needs at least one fit");
  std::vector<double> candidates;
  double fit_term = 0.0;
  Xi2Point out;
  out.t_g = t_g;
  for (std::size_t s = 0; s < tmax_sweep.size(); ++s) {
    const StretchedFit& fit = tmax_sweep[s];
    if (fit.t2.size() != theta_grid.size())
      throw std::invalid_argument(
          "fit holds a different number of curves than the theta grid");
    double rmin = std::numeric_limits<double>::infinity();
    double th_min = 0.0, err_min = 0.0;
    for (std::size_t k = 0; k < theta_grid.size(); ++k) {
      double ratio;
      try {
        ratio = map(fit.t2[k]);
      } catch (const std::runtime_error& e) {
        std::ostringstream msg;
        msg << "t_g=" << t_g << ", theta=" << theta_grid[k] << ": " << e.what();
        throw std::runtime_error(msg.str());
      }
      if (ratio < rmin) {
        rmin = ratio;
        th_min = theta_grid[k];
        // Local slope of the dictionary for the fit-error propagation.
        const double span = map.t2_hi() - map.t2_lo();
        const double dh = std::max(1e-6 * span, 1e-12);
        const double hi = std::min(fit.t2[k] + dh, map.t2_hi());
        const double lo = std::max(fit.t2[k] - dh, map.t2_lo());
        const double sl = hi > lo ? (map(hi) - map(lo)) / (hi - lo) : 0.0;
        err_min = std::abs(sl) * fit.t2_err[k];
      }
    }
    candidates.push_back(rmin * sx_ratio * sx_ratio);
    if (s == 0) {
      out.var_ratio_min = rmin;
      out.theta_min = th_min;
      fit_term = err_min * sx_ratio * sx_ratio;
    }
  }
  double sum = 0.0;
  auto [lo_it, hi_it] = std::minmax_element(candidates.begin(), candidates.end());
  for (double c : candidates) sum += c;
  out.xi2 = sum / static_cast<double>(candidates.size());
  const double spread = *hi_it - *lo_it;
  out.err = std::sqrt(spread * spread + fit_term * fit_term);
  return out;
}

std::vector<Xi2Point> extract_xi2(
    const VarianceMap& map,
    const std::vector<std::vector<StretchedFit>>& sweep_per_tg,
    const std::vector<double>& theta_grid, const DecayCurve& generation) {
  if (generation.t.empty() || std::abs(generation.t.front()) > 1e-12)
    throw std::invalid_argument("generation curve must start at t = 0");
  if (sweep_per_tg.size() != generation.t.size())
    throw std::invalid_argument(
        "one fit sweep per generation-grid point is required");
  const double sx0 = generation.value.front();
  std::vector<Xi2Point> out;
  for (std::size_t k = 0; k < sweep_per_tg.size(); ++k) {
    const double t_g = generation.t[k];
    if (sweep_per_tg[k].empty()) {
      if (std::abs(t_g) <= 1e-12) {
        Xi2Point p;
        p.t_g = 0.0;
        p.xi2 = 1.0;
        p.var_ratio_min = 1.0;
        out.push_back(p);
      }
      continue;  // no readout data at this generation time
    }
    const double sx = generation.value[k];
    if (std::abs(sx) < kTiny)
      throw std::runtime_error("generation signal vanished; xi^2 undefined");
    out.push_back(extract_xi2_point(map, sweep_per_tg[k], theta_grid, t_g,
                                    sx0 / sx));
  }
  return out;
}

SinusoidFit fit_sinusoid(const std::vector<double>& theta,
                         const std::vector<double>& value) {
  if (theta.size() != value.size() || theta.size() < 3)
    throw std::invalid_argument("sinusoid fit needs >= 3 (theta, value) pairs");
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const Eigen::Vector3d row(1.0, std::cos(2.0 * theta[i]),
                              std::sin(2.0 * theta[i]));
    m += row * row.transpose();
    rhs += row * value[i];
  }
  const Eigen::Vector3d beta = m.ldlt().solve(rhs);
  SinusoidFit fit;
  fit.c0 = beta[0];
  fit.c1 = std::hypot(beta[1], beta[2]);
  fit.phase = std::atan2(-beta[2], beta[1]);
  double ssr = 0.0, sst = 0.0, mean = 0.0;
  for (double v : value) mean += v;
  mean /= static_cast<double>(value.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double f =
        beta[0] + beta[1] * std::cos(2 * theta[i]) + beta[2] * std::sin(2 * theta[i]);
    ssr += (value[i] - f) * (value[i] - f);
    sst += (value[i] - mean) * (value[i] - mean);
  }
  fit.r2 = sst > kTiny ? 1.0 - ssr / sst : (ssr < kTiny ? 1.0 : 0.0);
  return fit;
}

}  // namespace sqz
