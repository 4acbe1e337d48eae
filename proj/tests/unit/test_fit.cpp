// SPDX-License-Identifier: MIT

#include "squeezelab/fit.hpp"

#include <cmath>

#include "doctest.h"
#include "squeezelab/common.hpp"

using namespace sqz;

namespace {

DecayCurve stretched_curve(double a, double t2, double p, double t0, double t1,
                           std::size_t n, double noise = 0.0,
                           std::uint64_t seed = 0) {
  DecayCurve c;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + (t1 - t0) * static_cast<double>(i) / (n - 1);
    c.t.push_back(t);
    double v = a * std::exp(-std::pow(t / t2, p));
    if (noise > 0.0) {
      v += noise * rng.normal();
      c.err.push_back(noise);
    }
    c.value.push_back(v);
  }
  return c;
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("noiseless stretched decays are recovered to high precision") {
  const DecayCurve c = stretched_curve(2.3, 3.0, 0.8, 0.1, 10.0, 40);
  const StretchedFit fit = fit_stretched({c}, 0.1, 10.0);
  CHECK(fit.p == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(fit.t2[0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(fit.amp[0] == doctest::Approx(2.3).epsilon(1e-6));
  CHECK(fit.chi2 < 1e-12);
  CHECK(fit.n_points == 40);
}

TEST_CASE("curves with different lifetimes share one stretch power") {
  const DecayCurve c1 = stretched_curve(1.0, 2.0, 1.3, 0.05, 8.0, 30);
  const DecayCurve c2 = stretched_curve(0.6, 4.0, 1.3, 0.05, 8.0, 30);
  const StretchedFit fit = fit_stretched({c1, c2}, 0.05, 8.0);
  CHECK(fit.p == doctest::Approx(1.3).epsilon(1e-6));
  CHECK(fit.t2[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(fit.t2[1] == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("a noisy Gaussian decay is identified as such") {
  std::vector<DecayCurve> curves{
      stretched_curve(1.0, 5.0, 2.0, 0.2, 12.0, 50, 0.01, 42)};
  const StretchedFit fit = fit_stretched(curves, 0.2, 12.0);
  CHECK(std::abs(fit.p - 2.0) < 0.02);
  CHECK(std::abs(fit.t2[0] - 5.0) < 0.1);
  CHECK(fit.p_err > 0.0);
  CHECK(fit.p_err < 0.05);
  CHECK(fit.t2_err[0] > 0.0);
}

TEST_CASE("uniform amplitude rescaling moves only the amplitudes") {
  const DecayCurve c = stretched_curve(1.0, 3.0, 0.8, 0.1, 10.0, 40);
  DecayCurve scaled = c;
  for (double& v : scaled.value) v *= 137.0;
  const StretchedFit f1 = fit_stretched({c}, 0.1, 10.0);
  const StretchedFit f2 = fit_stretched({scaled}, 0.1, 10.0);
  CHECK(f2.p == doctest::Approx(f1.p).epsilon(1e-9));
  CHECK(f2.t2[0] == doctest::Approx(f1.t2[0]).epsilon(1e-9));
  CHECK(f2.amp[0] == doctest::Approx(137.0 * f1.amp[0]).epsilon(1e-9));
}

TEST_CASE("fixing the power skips the profile search") {
  const DecayCurve c = stretched_curve(1.0, 3.0, 0.8, 0.1, 10.0, 40);
  const StretchedFit fit = fit_stretched({c}, 0.1, 10.0, 2.0);
  CHECK(fit.p == 2.0);
  CHECK(fit.p_err == 0.0);
  CHECK_THROWS_AS(fit_stretched({c}, 0.1, 10.0, -1.0), std::invalid_argument);
}

TEST_CASE("fit windows are validated") {
  const DecayCurve c = stretched_curve(1.0, 3.0, 0.8, 0.1, 10.0, 20);
  CHECK_THROWS_AS(fit_stretched({c}, 5.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(fit_stretched({c}, 9.0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(fit_stretched({}, 0.0, 1.0), std::invalid_argument);

  DecayCurve neg = c;
  for (double& t : neg.t) t -= 1.0;
  CHECK_THROWS_AS(fit_stretched({neg}, -1.0, 9.0), std::invalid_argument);
}

TEST_CASE("the offset shift relabels the grid without resampling") {
  DecayCurve c = stretched_curve(1.0, 3.0, 1.0, 0.0, 5.0, 6);
  c.t_g = 1.4;
  const DecayCurve s = shift_curve(c, -1.4);
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    CHECK(s.t[i] == doctest::Approx(c.t[i] + 1.4).epsilon(1e-15));
    CHECK(s.value[i] == c.value[i]);
  }
  CHECK(s.t_o == -1.4);
  CHECK(s.t_g == 1.4);
  const DecayCurve s2 = shift_curve(s, 0.4);
  CHECK(s2.t_o == doctest::Approx(-1.0));
}

TEST_CASE("the variance dictionary is exact on its support") {
  // Mean-field-model support: var ratio = (t2_ref / T2)^2 on a grid.
  const double t2_ref = 1.2;
  std::vector<VarMapPoint> pts;
  for (double t2 : {0.6, 0.9, 1.2, 1.9, 3.0, 4.5})
    pts.push_back({t2, (t2_ref / t2) * (t2_ref / t2), 0.8, 0.0});
  const VarianceMap map = build_variance_map(pts);
  for (const auto& p : pts)
    CHECK(map(p.t2) == doctest::Approx(p.var).epsilon(1e-12));
  CHECK(map.t2_lo() == doctest::Approx(0.6));
  CHECK(map.t2_hi() == doctest::Approx(4.5));

  // Monotone in between and inside the hull of neighbouring support values.
  double prev = map(0.6);
  for (double t2 = 0.62; t2 < 4.5; t2 += 0.02) {
    const double v = map(t2);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
  CHECK(map(1.05) < map(0.9));
  CHECK(map(1.05) > map(1.2));
}

TEST_CASE("non-monotone dictionaries are rejected with diagnostics") {
  std::vector<VarMapPoint> pts{{1.0, 1.00, 0, 0},
                               {1.5, 0.60, 0, 0},
                               {2.0, 0.90, 0, 0},  // large violation
                               {2.5, 0.30, 0, 0}};
  CHECK_THROWS_WITH_AS(build_variance_map(pts, 0.1),
                       doctest::Contains("monotone"), std::runtime_error);

  // A violation inside the tolerance is smoothed away instead.
  std::vector<VarMapPoint> mild{{1.0, 1.000, 0, 0},
                                {1.5, 0.600, 0, 0},
                                {2.0, 0.605, 0, 0},
                                {2.5, 0.300, 0, 0}};
  const VarianceMap map = build_variance_map(mild, 0.1);
  CHECK(map(1.75) <= map(1.25));

  CHECK_THROWS_AS(build_variance_map({{1.0, 1.0, 0, 0}}, 0.1),
                  std::invalid_argument);
}

TEST_CASE("evaluations outside the support range refuse to extrapolate") {
  std::vector<VarMapPoint> pts{
      {1.0, 1.0, 0, 0}, {2.0, 0.5, 0, 0}, {3.0, 0.2, 0, 0}};
  const VarianceMap map = build_variance_map(pts);
  CHECK_THROWS_WITH_AS(map(0.5), doctest::Contains("extrapolate"),
                       std::runtime_error);
  CHECK_THROWS_AS(map(3.5), std::runtime_error);
  CHECK(map.covers(1.5));
  CHECK(!map.covers(0.5));
}

TEST_CASE("slice overlap across generation times is reported") {
  // Two t_g slices tracing the same underlying law agree.
  auto law = [](double t2) { return 2.0 - 0.5 * t2; };
  std::vector<VarMapPoint> pts;
  for (double t2 : {1.0, 1.5, 2.0, 3.0}) pts.push_back({t2, law(t2), 0.8, 0});
  for (double t2 : {1.2, 1.8, 2.6}) pts.push_back({t2, law(t2), 1.6, 0});
  const VarianceMap consistent = build_variance_map(pts);
  CHECK(consistent.slice_overlap_dev() < 1e-12);

  // A slice shifted by 30% shows up in the diagnostic.
  std::vector<VarMapPoint> off = pts;
  for (auto& p : off)
    if (p.t_g == 1.6) p.var *= 1.3;
  const double dev = build_variance_map(off, 0.5).slice_overlap_dev();
  CHECK(dev > 0.2);
}

TEST_CASE("squeezing extraction follows the mapped minimum") {
  const double t2_ref = 1.2;
  std::vector<VarMapPoint> pts;
  for (double t2 : {0.5, 0.8, 1.2, 2.0, 3.0, 4.0})
    pts.push_back({t2, (t2_ref / t2) * (t2_ref / t2), 0.8, 0.0});
  const VarianceMap map = build_variance_map(pts);

  const std::vector<double> theta{0.0, M_PI / 4, M_PI / 2};
  StretchedFit fit;
  fit.t2 = {1.2, 3.0, 0.9};
  fit.t2_err = {0.0, 0.0, 0.0};
  fit.amp = {1, 1, 1};
  fit.amp_err = {0, 0, 0};

  const double sx_ratio = 1.25;
  const Xi2Point pt = extract_xi2_point(map, {fit}, theta, 0.8, sx_ratio);
  const double expected = (t2_ref / 3.0) * (t2_ref / 3.0) * sx_ratio * sx_ratio;
  CHECK(pt.xi2 == doctest::Approx(expected).epsilon(1e-9));
  CHECK(pt.theta_min == doctest::Approx(M_PI / 4));
  CHECK(pt.err == doctest::Approx(0.0).epsilon(1e-12));

  // A window sweep with scattered T2 widens the error bar.
  StretchedFit fit2 = fit;
  fit2.t2 = {1.2, 2.8, 0.9};
  const Xi2Point swept = extract_xi2_point(map, {fit, fit2}, theta, 0.8, sx_ratio);
  CHECK(swept.err > 0.0);
  CHECK(swept.xi2 > pt.xi2);  // the shorter T2 maps to a larger variance

  // Fitted T2 outside the dictionary -> extrapolation error.
  StretchedFit far = fit;
  far.t2 = {1.2, 5.5, 0.9};
  CHECK_THROWS_AS(extract_xi2_point(map, {far}, theta, 0.8, sx_ratio),
                  std::runtime_error);
}

TEST_CASE("series extraction is anchored at the unsqueezed start") {
  std::vector<VarMapPoint> pts{
      {1.0, 1.0, 0, 0}, {2.0, 0.25, 0, 0}, {3.0, 0.11, 0, 0}};
  const VarianceMap map = build_variance_map(pts);
  DecayCurve gen;
  gen.t = {0.0, 0.8};
  gen.value = {8.0, 6.4};

  StretchedFit fit;
  fit.t2 = {1.0, 2.0};
  fit.t2_err = {0.0, 0.0};
  fit.amp = {1, 1};
  fit.amp_err = {0, 0};
  const std::vector<double> theta{0.0, 1.2};

  const auto series = extract_xi2(map, {{}, {fit}}, theta, gen);
  REQUIRE(series.size() == 2);
  CHECK(series[0].t_g == 0.0);
  CHECK(series[0].xi2 == 1.0);  // no twisting yet
  CHECK(series[1].t_g == 0.8);
  CHECK(series[1].xi2 == doctest::Approx(0.25 * std::pow(8.0 / 6.4, 2)));

  DecayCurve late = gen;
  late.t = {0.4, 0.8};
  CHECK_THROWS_AS(extract_xi2(map, {{}, {fit}}, theta, late),
                  std::invalid_argument);
}

TEST_CASE("variance versus readout angle is sinusoidal") {
  std::vector<double> theta, value;
  for (int k = 0; k < 9; ++k) {
    const double th = k * M_PI / 9.0;
    theta.push_back(th);
    value.push_back(2.0 + 0.7 * std::cos(2 * th + 0.4));
  }
  const SinusoidFit fit = fit_sinusoid(theta, value);
  CHECK(fit.c0 == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(fit.c1 == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(fit.phase == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(5);
  for (double& v : value) v += 0.02 * rng.normal();
  CHECK(fit_sinusoid(theta, value).r2 > 0.95);
}

}  // TEST_SUITE
