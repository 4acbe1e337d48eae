// SPDX-License-Identifier: MIT
//
// Exact quantum engine for small spin-1/2 ensembles: matrix-free Hamiltonian
// application, Krylov (Lanczos) time propagation, global rotations, and
// collective-spin moments.
//
// Basis convention: computational z basis, bit i of the index = 0 means spin
// i is in sz = +1/2. rotate_global(state, axis, angle) applies
// exp(-i * angle * S_axis); a readout pulse that maps the quadrature
// S_theta = cos(theta) Sz + sin(theta) Sy onto Sz is rotate_global('x', theta):
//   <R psi | Sz | R psi> = <psi | S_theta | psi>.

#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "squeezelab/model.hpp"

namespace sqz {

using cplx = std::complex<double>;

struct PureState {
  std::size_t n = 0;       // spin count
  std::vector<cplx> amp;   // 2^n amplitudes

  std::size_t dim() const { return amp.size(); }
  double norm() const;
};

// Hard cap on exact-engine sizes; memory grows as 2^n.
inline constexpr std::size_t kExactMaxSpins = 24;

// Product state polarized along +axis ('x', 'y' or 'z'); each spin is flipped
// to the -axis direction independently with probability (1-eta)/2. eta = 1
// consumes no randomness.
PureState prepare_polarized(std::size_t n, char axis, double eta, std::uint64_t seed);

// Deterministic variant with an explicit flip mask.
PureState prepare_product(std::size_t n, char axis, const std::vector<bool>& flipped);

// exp(-i * angle * S_axis) |state>, applied as a product of one-site 2x2
// rotations (valid for any state).
PureState rotate_global(const PureState& state, char axis, double angle);

class ExactHamiltonian {
 public:
  explicit ExactHamiltonian(const PairModel& m);

  std::size_t nspins() const { return n_; }
  std::size_t dim() const { return std::size_t(1) << n_; }

  // out = H * in (out is overwritten). Matrix-free, O(P * 2^n) with P the
  // number of coupled pairs.
  void apply(std::span<const cplx> in, std::span<cplx> out) const;

  PureState apply(const PureState& s) const;

  double energy(const PureState& s) const;  // <s|H|s>

  // Crude upper bound on ||H|| used by the propagator's step control.
  double norm_bound() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> diag_;  // zz couplings + z field + constant
  struct XYPair { std::uint32_t i, j; double half_c; };
  std::vector<XYPair> pairs_;  // cxy terms, stored as cxy/2 flip amplitude
  double hx_ = 0.0, hy_ = 0.0;
};

struct KrylovOptions {
  int m = 30;             // Krylov subspace dimension
  double tol = 1e-10;     // target error for the whole requested interval
  int max_substeps = 1 << 20;
};

// exp(-i H t) |state| via adaptive-substep Lanczos. Hermitian H only.
PureState krylov_propagate(const PureState& state, const ExactHamiltonian& H,
                           double t, const KrylovOptions& opts = {});

// Dense-diagonalization reference propagator (n <= 10): exact up to LAPACK
// roundoff, used as the oracle for the Krylov path.
PureState dense_propagate(const PureState& state, const PairModel& m, double t);

struct CollectiveMoments {
  double sx = 0, sy = 0, sz = 0;
  double sx2 = 0, sy2 = 0, sz2 = 0;
  double syz = 0;  // symmetrized <{Sy,Sz}>/2
  std::vector<double> theta;      // readout angle grid
  std::vector<double> var_theta;  // Var(S_theta), S_theta = cos Sz + sin Sy
  double var_min = 0;             // analytic minimum over theta
  double theta_min = 0;           // argmin
};

// Collective first and second moments; the theta grid is evaluated through
// the exact quadratic form, the minimum through the 2x2 covariance of
// (Sz, Sy).
CollectiveMoments moments(const PureState& state, std::span<const double> theta_grid);

// Wineland squeezing parameter xi^2 = N * min_theta Var(S_theta) / <Sx>^2.
double squeezing_parameter(const CollectiveMoments& m, std::size_t n);

}  // namespace sqz
