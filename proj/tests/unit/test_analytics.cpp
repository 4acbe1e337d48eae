#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "squeezelab/analytics.hpp"
#include "squeezelab/common.hpp"
#include "squeezelab/exact.hpp"
#include "squeezelab/model.hpp"

using namespace sqz;

namespace {

// Independent oracle for E_nu(x): adaptive Simpson on a compactified variable.
double simpson(const std::function<double(double)>& f, double a, double b, int depth,
               double fa, double fm, double fb, double whole) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 1e-13 * (1.0 + std::abs(whole)))
    return left + right;
  return simpson(f, a, m, depth - 1, fa, flm, fm, left) +
         simpson(f, m, b, depth - 1, fm, frm, fb, right);
}

double quad(const std::function<double(double)>& f, double a, double b) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  return simpson(f, a, b, 40, fa, fm, fb, whole);
}

double exp_integral_oracle(double nu, double x) {
  // E_nu(x) = int_1^inf exp(-x t) t^-nu dt, substitute t = 1/u, dt = -du/u^2:
  // = int_0^1 exp(-x/u) u^(nu-2) du.
  auto f = [&](double u) {
    if (u <= 0.0) return 0.0;
    return std::exp(-x / u) * std::pow(u, nu - 2.0);
  };
  return quad(f, 0.0, 1.0);
}

}  // namespace

TEST_SUITE_BEGIN("analytics");

TEST_CASE("generalized exponential integral against quadrature") {
  for (double nu : {1.0 / 3.0, 4.0 / 3.0, 2.5}) {
    for (double x : {0.05, 0.3, 0.9, 1.1, 3.0, 10.0}) {
      const double ref = exp_integral_oracle(nu, x);
      CHECK(exp_integral(nu, x) == doctest::Approx(ref).epsilon(1e-9));
    }
  }
  CHECK(exp_integral(4.0 / 3.0, 0.0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK_THROWS_AS((void)exp_integral(1.0 / 3.0, 0.0), std::invalid_argument);
}

TEST_CASE("Gamma(-1/3) via reflection matches the recurrence route") {
  // Gamma(-1/3) = -3 Gamma(2/3).
  CHECK(gamma_neg_third() == doctest::Approx(-3.0 * std::tgamma(2.0 / 3.0)).epsilon(1e-14));
  CHECK(gamma_neg_third() == doctest::Approx(-4.062353818).epsilon(1e-9));
}

TEST_CASE("stretched-exponential limit without a cutoff") {
  CrossoverParams p{1.41e-3, 0.0, 1.0};
  const double t = 37.0;
  const double expected =
      kTwoPi * p.density / 12.0 * (-gamma_neg_third()) * std::pow(t, 2.0 / 3.0);
  CHECK(crossover_log_decay(p, t) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(crossover_local_exponent(p, t) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS((void)crossover_time(p), std::invalid_argument);
}

TEST_CASE("crossover decay: Gaussian early, stretched late") {
  CrossoverParams p{1.41e-3, 10.0, 1.0};
  // Early: local exponent ~ 2.
  const double t_early = 1e-2 * std::pow(p.r_min, 3);
  CHECK(crossover_local_exponent(p, t_early) == doctest::Approx(2.0).epsilon(1e-3));
  // Late: approaches 2/3 from above.
  const double t_late = 3e3 * std::pow(p.r_min, 3);
  const double nu_late = crossover_local_exponent(p, t_late);
  CHECK(nu_late > 2.0 / 3.0);
  CHECK(nu_late < 0.8);
  // Exponent decreases monotonically through the window.
  double prev = 3.0;
  for (double t = t_early; t < t_late; t *= 2.0) {
    const double nu = crossover_local_exponent(p, t);
    CHECK(nu < prev + 1e-9);
    prev = nu;
  }
}

TEST_CASE("crossover time scales exactly as r_min^3 / j0") {
  CrossoverParams a{1.41e-3, 6.0, 1.0};
  CrossoverParams b{1.41e-3, 12.0, 1.0};
  CrossoverParams c{1.41e-3, 6.0, 3.5};
  const double ta = crossover_time(a);
  const double tb = crossover_time(b);
  const double tc = crossover_time(c);
  CHECK(crossover_local_exponent(a, ta) == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
  CHECK(tb / ta == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(tc * 3.5 == doctest::Approx(ta).epsilon(1e-9));
  // Density drops out of the exponent entirely.
  CrossoverParams d{7.0e-4, 6.0, 1.0};
  CHECK(crossover_time(d) == doctest::Approx(ta).epsilon(1e-9));
}

TEST_CASE("offset time limits") {
  const double chi = 0.42, tg = 1.7;
  CHECK(offset_time(0.0, chi, tg) == doctest::Approx(-tg).epsilon(1e-14));
  // chi t_g -> 0: t_o -> -cos(2 theta) t_g.
  for (double theta : {0.2, 0.8, 1.3}) {
    CHECK(offset_time(theta, 1e-9, tg) ==
          doctest::Approx(-std::cos(2 * theta) * tg).epsilon(1e-7));
  }
  // Anti-squeezed axis at small twisting: positive offset.
  CHECK(offset_time(kPi / 2, chi, 0.1) > 0.0);
  CHECK(offset_time(kPi / 2, chi, 0.1) == doctest::Approx(0.1).epsilon(2e-3));
}

TEST_CASE("one-axis twisting closed forms") {
  OatParams p;
  p.chi = 0.5;
  p.n = 12;
  p.l = 6.0;
  p.var_sz = 3.0;  // coherent state: n/4
  p.syz = 0.0;
  CHECK(oat_decay(p, 0.0) == doctest::Approx(6.0));
  CHECK(oat_decay(p, 0.3) == doctest::Approx(6.0 * std::pow(std::cos(0.15), 11)));
  // Envelope convention exp(-(t/T2)^2): matches the exact early decay
  // (n/2) cos^(n-1)(chi t) ~ exp(-(n-1) chi^2 t^2 / 2) when var_sz = n/4.
  CHECK(oat_t2(p) == doctest::Approx(1.0 / (std::sqrt(2.0) * 0.5 * std::sqrt(3.0))).epsilon(1e-14));
  CHECK(oat_offset_time(p) == doctest::Approx(0.0));
  p.syz = 0.9;
  CHECK(oat_offset_time(p) == doctest::Approx(-0.9 / (2 * 0.5 * 3.0 * 6.0)).epsilon(1e-14));
}

TEST_CASE("chi estimate from a synthetic precession series") {
  const double chi = 0.31, theta = 0.4;
  std::vector<double> t, lin, curved;
  for (int k = 0; k <= 60; ++k) {
    const double tk = 0.05 * k;
    t.push_back(tk);
    lin.push_back(std::sin(theta) * chi * tk);
    // tan-like curvature; points outside the early window must be rejected.
    curved.push_back(std::sin(theta) * std::tan(chi * tk));
  }
  CHECK(chi_from_twisting(t, lin, theta) == doctest::Approx(chi).epsilon(1e-12));
  // With curvature the windowed straight-line fit is biased at the few-percent
  // level; that is the advertised accuracy of the estimator.
  CHECK(chi_from_twisting(t, curved, theta) == doctest::Approx(chi).epsilon(0.06));
  CHECK_THROWS_AS((void)chi_from_twisting(t, curved, 0.0), std::invalid_argument);
}

TEST_CASE("dimer twisting closed form matches the exact engine") {
  const double J = 0.37;
  for (double phi : {0.2, 0.7, -0.5}) {
    auto css = prepare_polarized(2, 'x', 1.0, 0);
    auto tipped = rotate_global(css, 'y', phi);  // tips towards -z for phi > 0
    auto m0 = moments(tipped, std::vector<double>{0.0});
    CHECK(m0.sz == doctest::Approx(-std::sin(phi)).epsilon(1e-12));
    ExactHamiltonian H(PairModel::dimer(J));
    for (double t : {0.4, 1.9}) {
      auto ev = krylov_propagate(tipped, H, t);
      auto m = moments(ev, std::vector<double>{0.0});
      auto ref = dimer_twisting(phi, J, t);
      CHECK(m.sx == doctest::Approx(ref.sx).epsilon(1e-10));
      CHECK(m.sy == doctest::Approx(ref.sy).epsilon(1e-10));
    }
  }
}

TEST_CASE("dimer readout closed form matches the exact engine") {
  const double J = 0.52;
  auto css = prepare_polarized(2, 'x', 1.0, 0);
  ExactHamiltonian H(PairModel::dimer(J));
  for (double theta : {0.0, 0.6, 1.2}) {
    for (double tg : {0.5, 1.4}) {
      auto gen = krylov_propagate(css, H, tg);
      auto rot = rotate_global(gen, 'x', theta);
      for (double tr : {0.3, tg, 2.1}) {
        auto ev = krylov_propagate(rot, H, tr);
        auto m = moments(ev, std::vector<double>{0.0});
        CHECK(m.sx == doctest::Approx(dimer_readout(theta, J, tg, tr)).epsilon(1e-10));
      }
    }
  }
  // Revival at t_r = t_g isolates sin^2(theta).
  const double theta = 0.8, tg = 1.1;
  CHECK(dimer_readout(theta, J, tg, tg) ==
        doctest::Approx(std::sin(theta) * std::sin(theta) +
                        std::cos(theta) * std::cos(theta) * std::cos(2 * J * tg)));
}

TEST_CASE("offset evolution zeroes the correlator for theta = 0") {
  // Generate, don't rotate, evolve backwards by t_o = -t_g: correlator
  // returns exactly to zero (coherent state again).
  const std::size_t n = 8;
  const double chi = 0.3, tg = 0.25;
  ExactHamiltonian H(PairModel::oat(chi, n));
  auto psi = prepare_polarized(n, 'x', 1.0, 0);
  auto gen = krylov_propagate(psi, H, tg);
  auto m1 = moments(gen, std::vector<double>{0.0});
  CHECK(m1.syz > 0.0);  // correlator builds up with positive sign
  const double t_o = offset_time(0.0, 2.0 * chi * m1.sx, tg);
  auto back = krylov_propagate(gen, H, t_o);
  auto m2 = moments(back, std::vector<double>{0.0});
  CHECK(std::abs(m2.syz) / m2.sz2 < 1e-9);
}

TEST_SUITE_END();
