// SPDX-License-Identifier: MIT
//
// Closed-form references: one-axis-twisting decay and timing formulas, the
// two-spin (dimer) twisting/readout signals, and the disorder-averaged
// transverse decay that interpolates between Gaussian and stretched
// exponential when close pairs are removed below r_min.
//
// Throughout, "chi" denotes the observable twisting rate: the slope of
// <{Sy,Sz}>/2 / <Sz^2> versus time out of a coherent +x state. For a
// one-axis-twisting Hamiltonian chi_oat * Sz^2 that slope is 2*chi_oat*L
// (L the mean spin length); for the dipolar model it is mean_field_chi().

#pragma once

#include <cstddef>
#include <span>

namespace sqz {

// ---------------------------------------------------------------------------
// One-axis twisting
// ---------------------------------------------------------------------------

struct OatParams {
  double chi = 0.0;     // bare twisting coefficient of chi * Sz^2, rad/us
  std::size_t n = 0;    // spin count
  double l = 0.0;       // mean spin length at the start of readout
  double var_sz = 0.0;  // Var(Sz) of the state being read out
  double syz = 0.0;     // <{Sy,Sz}>/2 - <Sy><Sz> of that state
};

// Exact transverse decay from a coherent state: <Sx>(t) = (n/2) cos^(n-1)(chi t).
double oat_decay(const OatParams& p, double t);

// Gaussian-envelope time of the mean-field model in the exp(-(t/T2)^2)
// convention used by the stretched-exponential fits: T2 = 1/(sqrt(2) chi sqrt(Var Sz)),
// so that exp(-(t/T2)^2) = exp(-2 chi^2 Var(Sz) t^2) matches the early decay.
double oat_t2(const OatParams& p);

// Time shift that zeroes the (Sy,Sz) correlator during readout:
// t_o = -syz / (2 chi var_sz l).
double oat_offset_time(const OatParams& p);

// Offset time for a squeezed state generated for t_g, rotated by theta about
// x before readout (Gaussian model, eta = 1):
//   chi t_o = -[cos(2 theta) u + (1/2) sin(2 theta) u^2]
//             / [1 + sin^2(theta) u^2 + sin(2 theta) u],   u = chi t_g,
// with chi the observable twisting rate. Finite for chi -> 0 (-> -cos(2theta) t_g).
double offset_time(double theta, double chi, double t_g);

// Estimate chi from a measured precession series: least-squares slope through
// the origin of ratio = Sy/Sx versus t, restricted to the early window
// |ratio| < window, divided by sin(theta_tip). theta_tip is signed so that
// <Sz(0)> = +(N/2) sin(theta_tip).
double chi_from_twisting(std::span<const double> t, std::span<const double> ratio,
                         double theta_tip, double window = 0.2);

// ---------------------------------------------------------------------------
// Dimer closed forms (two spins coupled by J, totals over both spins).
// phi_o tips the coherent +x state towards -z: <Sz(0)> = -sin(phi_o).
// ---------------------------------------------------------------------------

struct DimerXY {
  double sx = 0.0;
  double sy = 0.0;
};

DimerXY dimer_twisting(double phi_o, double J, double t);

// Readout signal of a dimer prepared for t_g, rotated by theta about x, and
// read out for t_r:
//   <Sx> = sin^2(theta) cos(J (t_g - t_r)) + cos^2(theta) cos(J (t_g + t_r)).
double dimer_readout(double theta, double J, double t_g, double t_r);

// ---------------------------------------------------------------------------
// Disorder-averaged decay with a minimum-distance cutoff
// ---------------------------------------------------------------------------

// Generalized exponential integral E_nu(x) = int_1^inf exp(-x u) u^-nu du for
// real nu (series for small x, continued fraction for large x).
double exp_integral(double nu, double x);

double gamma_neg_third();  // Gamma(-1/3) via the reflection formula

struct CrossoverParams {
  double density = 0.0;  // spins per nm^2
  double r_min = 0.0;    // pair-removal scale, nm
  double j0 = 1.0;       // coupling scale, rad nm^3 / us
};

// Disorder-averaged <Sx>(t) / <Sx>(0):
//   -ln Sx = 2 pi n [ (r_min^2 / 6)(E_{4/3}(x) - 3) - (chi^{1/3}/12) Gamma(-1/3) ],
// with chi(t) = (j0 t)^2 and x = chi / (8 r_min^6). r_min = 0 reduces to the
// pure stretched exponential exp(-2 pi n |Gamma(-1/3)| (j0 t)^{2/3} / 12).
double crossover_sx(const CrossoverParams& p, double t);

double crossover_log_decay(const CrossoverParams& p, double t);  // -ln Sx >= 0

// Local stretch exponent d ln(-ln Sx) / d ln t. Runs from 2 (Gaussian, early)
// to 2/3 (stretched, late) when r_min > 0; identically 2/3 for r_min = 0.
double crossover_local_exponent(const CrossoverParams& p, double t);

// Time where the local exponent crosses 4/3. Scales exactly as r_min^3 / j0;
// throws if the exponent never reaches 4/3 (r_min = 0).
double crossover_time(const CrossoverParams& p);

}  // namespace sqz
