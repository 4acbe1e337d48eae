// SPDX-License-Identifier: MIT

#include "squeezelab/analytics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "squeezelab/common.hpp"

namespace sqz {

// ---------------------------------------------------------------------------
// One-axis twisting
// ---------------------------------------------------------------------------

double oat_decay(const OatParams& p, double t) {
  return 0.5 * double(p.n) * std::pow(std::cos(p.chi * t), int(p.n) - 1);
}

double oat_t2(const OatParams& p) {
  if (!(p.chi > 0.0) || !(p.var_sz > 0.0))
    throw std::invalid_argument("oat_t2: chi and var_sz must be positive");
  return 1.0 / (std::sqrt(2.0) * p.chi * std::sqrt(p.var_sz));
}

double oat_offset_time(const OatParams& p) {
  if (!(p.chi != 0.0) || !(p.var_sz > 0.0) || !(p.l != 0.0))
    throw std::invalid_argument("oat_offset_time: chi, var_sz, l must be nonzero");
  return -p.syz / (2.0 * p.chi * p.var_sz * p.l);
}

double offset_time(double theta, double chi, double t_g) {
  const double u = chi * t_g;
  const double s = std::sin(theta), c2 = std::cos(2.0 * theta),
               s2 = std::sin(2.0 * theta);
  // Numerator divided through by chi so the chi -> 0 limit is regular.
  const double num = c2 * t_g + 0.5 * s2 * chi * t_g * t_g;
  const double den = 1.0 + s * s * u * u + s2 * u;
  return -num / den;
}

double chi_from_twisting(std::span<const double> t, std::span<const double> ratio,
                         double theta_tip, double window) {
  if (t.size() != ratio.size())
    throw std::invalid_argument("chi_from_twisting: size mismatch");
  const double st = std::sin(theta_tip);
  if (st == 0.0) throw std::invalid_argument("chi_from_twisting: sin(theta_tip) = 0");
  double stt = 0.0, str = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] <= 0.0) continue;
    if (std::abs(ratio[k]) >= window) continue;
    stt += t[k] * t[k];
    str += t[k] * ratio[k];
    ++used;
  }
  if (used < 2)
    throw std::invalid_argument("chi_from_twisting: too few points inside window");
  return (str / stt) / st;
}

// ---------------------------------------------------------------------------
// Dimer
// ---------------------------------------------------------------------------

DimerXY dimer_twisting(double phi_o, double J, double t) {
  DimerXY out;
  out.sx = std::cos(phi_o) * std::cos(J * t);
  out.sy = -std::sin(phi_o) * std::cos(phi_o) * std::sin(J * t);
  return out;
}

double dimer_readout(double theta, double J, double t_g, double t_r) {
  const double s = std::sin(theta), c = std::cos(theta);
  return s * s * std::cos(J * (t_g - t_r)) + c * c * std::cos(J * (t_g + t_r));
}

// ---------------------------------------------------------------------------
// Generalized exponential integral
// ---------------------------------------------------------------------------

double gamma_neg_third() {
  // Reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z) at z = -1/3.
  return kPi / (std::sin(-kPi / 3.0) * std::tgamma(4.0 / 3.0));
}

static double exp_integral_series(double nu, double x) {
  // E_nu(x) = Gamma(1-nu) x^(nu-1) - sum_k (-x)^k / (k! (k+1-nu))
  double sum = 0.0;
  double term = 1.0;  // (-x)^k / k!
  for (int k = 0; k < 200; ++k) {
    const double denom = double(k) + 1.0 - nu;
    if (denom == 0.0)
      throw std::invalid_argument("exp_integral: integer order not supported here");
    const double add = term / denom;
    sum += add;
    if (std::abs(add) < 1e-17 * std::max(1.0, std::abs(sum)) && k > 2) break;
    term *= -x / double(k + 1);
  }
  return std::tgamma(1.0 - nu) * std::pow(x, nu - 1.0) - sum;
}

static double exp_integral_contfrac(double nu, double x) {
  // Modified Lentz on the standard continued fraction
  //   E_nu(x) = e^-x / (x + nu - 1*nu/(x + nu + 2 - 2(nu+1)/(x + nu + 4 - ...)))
  const double tiny = 1e-300;
  double b = x + nu;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 400; ++i) {
    const double a = -double(i) * (nu - 1.0 + double(i));
    b += 2.0;
    d = a * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x);
}

double exp_integral(double nu, double x) {
  if (x < 0.0) throw std::invalid_argument("exp_integral: x must be >= 0");
  if (x == 0.0) {
    if (nu <= 1.0) throw std::invalid_argument("exp_integral: diverges at x=0 for nu<=1");
    return 1.0 / (nu - 1.0);
  }
  return (x < 1.0) ? exp_integral_series(nu, x) : exp_integral_contfrac(nu, x);
}

// ---------------------------------------------------------------------------
// Crossover decay
// ---------------------------------------------------------------------------

// sum_{k>=1} -(-x)^k / (k! (k - 1/3)) = 3x/2 - 3x^2/10 + x^3/16 - ...
// This is E_{4/3}(x) - Gamma(-1/3) x^{1/3} - 3, the part of the exponential
// integral that survives after the x^{1/3} singularity cancels analytically
// against the stretched-exponential term of the decay exponent.
static double crossover_regular_series(double x) {
  double sum = 0.0;
  double term = 1.0;  // (-x)^k / k!, starting update below
  for (int k = 1; k < 200; ++k) {
    term *= -x / double(k);
    const double add = -term / (double(k) - 1.0 / 3.0);
    sum += add;
    if (std::abs(add) < 1e-17 * std::max(1.0, std::abs(sum)) && k > 2) break;
  }
  return sum;
}

double crossover_log_decay(const CrossoverParams& p, double t) {
  if (p.density < 0.0 || p.r_min < 0.0 || p.j0 <= 0.0)
    throw std::invalid_argument("crossover: bad parameters");
  if (t == 0.0) return 0.0;
  const double chi = (p.j0 * t) * (p.j0 * t);
  const double chi13 = std::cbrt(chi);
  const double g13 = gamma_neg_third();
  double val = 0.0;
  if (p.r_min > 0.0) {
    const double r2 = p.r_min * p.r_min;
    const double x = chi / (8.0 * r2 * r2 * r2);
    if (x < 1.0) {
      // The x^{1/3} singularity of E_{4/3} cancels the chi^{1/3} term exactly;
      // summing only the regular remainder avoids the cancellation.
      val = r2 / 6.0 * crossover_regular_series(x);
    } else {
      val = r2 / 6.0 * (exp_integral(4.0 / 3.0, x) - 3.0) - chi13 / 12.0 * g13;
    }
  } else {
    val = -chi13 / 12.0 * g13;  // positive (g13 < 0)
  }
  return kTwoPi * p.density * val;
}

double crossover_sx(const CrossoverParams& p, double t) {
  return std::exp(-crossover_log_decay(p, t));
}

double crossover_local_exponent(const CrossoverParams& p, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("crossover_local_exponent: t must be > 0");
  if (p.r_min == 0.0) return 2.0 / 3.0;
  const double h = 1e-5;
  const double lo = crossover_log_decay(p, t * std::exp(-h));
  const double hi = crossover_log_decay(p, t * std::exp(h));
  if (!(lo > 0.0) || !(hi > 0.0))
    throw std::runtime_error("crossover_local_exponent: decay underflow");
  return (std::log(hi) - std::log(lo)) / (2.0 * h);
}

double crossover_time(const CrossoverParams& p) {
  if (!(p.r_min > 0.0))
    throw std::invalid_argument("crossover_time: requires r_min > 0");
  // The exponent depends on time only through x = (j0 t)^2 / (8 r_min^6),
  // so it falls monotonically from 2 towards 2/3; bracket the 4/3 crossing.
  const double target = 4.0 / 3.0;
  const double r3 = p.r_min * p.r_min * p.r_min;
  double t_lo = 1e-3 * r3 / p.j0, t_hi = t_lo;
  if (crossover_local_exponent(p, t_lo) <= target)
    throw std::runtime_error("crossover_time: no crossing (lower bracket)");
  for (int i = 0; i < 200; ++i) {
    t_hi *= 2.0;
    if (crossover_local_exponent(p, t_hi) < target) break;
    if (i == 199) throw std::runtime_error("crossover_time: no crossing found");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = std::sqrt(t_lo * t_hi);
    if (crossover_local_exponent(p, mid) > target)
      t_lo = mid;
    else
      t_hi = mid;
    if (t_hi / t_lo < 1.0 + 1e-12) break;
  }
  return std::sqrt(t_lo * t_hi);
}

}  // namespace sqz
