// SPDX-License-Identifier: MIT
//
// Spin model construction: dipolar coupling graphs over an ensemble and the
// Hamiltonians built from them.
//
// Hamiltonian convention (fixed across every engine in this library):
//
//   H = sum_{i<j} [ cxy_ij (sx_i sx_j + sy_i sy_j) + czz_ij sz_i sz_j ]
//       + hx Sx + hy Sy + hz Sz + const
//
// with spin-1/2 operators (|s| = 1/2). The dipolar XXZ model uses
// cxy = -J_ij, czz = +J_ij with J_ij = J0 / r_ij^3, each unordered pair
// counted once. A one-axis-twisting model chi*Sz^2 maps onto czz = 2*chi
// plus the constant chi*N/4.

#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "squeezelab/common.hpp"
#include "squeezelab/ensemble.hpp"

namespace sqz {

struct CouplingGraph {
  // Indices into the originating ensemble, one per modeled (active) spin.
  std::vector<std::size_t> spins;
  // Symmetric pair couplings J_ij in rad/us, zero diagonal. Row sums cached.
  Eigen::MatrixXd J;
  std::vector<double> row_sum;
  double J0 = kJ0Default;

  std::size_t size() const { return spins.size(); }
};

// Build the dipolar coupling graph over the active spins of an ensemble.
// J0 in rad nm^3 / us.
CouplingGraph build_coupling(const SpinEnsemble& e, double J0 = kJ0Default);

// Coupling graph for an explicit position list (all spins active).
CouplingGraph build_coupling(const std::vector<std::array<double, 3>>& positions,
                             double J0 = kJ0Default);

struct Histogram {
  std::vector<double> edges;    // bins+1 edges (log-spaced over the data range)
  std::vector<double> density;  // normalized: sum(density*width) = 1
  std::vector<std::size_t> counts;
  double mean = 0.0;            // mean pair coupling
  double max = 0.0;
};

// Distribution of the pairwise couplings J_ij (i<j) of a graph.
Histogram coupling_distribution(const CouplingGraph& g, int bins);

// Collective twisting rate of the interacting ensemble in rad/us:
//   chi = (2/N) sum_{i<j} J_ij = (1/N) sum_i J_i.
// This is the rate at which the mean spin precesses per unit Sz, i.e. the
// slope of <{Sy,Sz}>/2 / <Sz^2> versus time out of a coherent state, matching
// the exact engine. (The semiclassical literature often quotes 4 J_eff / N
// with unit-length spins; that convention is 4x larger.)
double mean_field_chi(const CouplingGraph& g);

// ---------------------------------------------------------------------------
// Pair-coupling Hamiltonian container consumed by the exact and cluster
// engines. Dense N x N storage; N stays modest (<= a few hundred).
// ---------------------------------------------------------------------------

struct PairModel {
  std::size_t n = 0;
  Eigen::MatrixXd cxy;  // symmetric, zero diagonal
  Eigen::MatrixXd czz;  // symmetric, zero diagonal
  Eigen::Vector3d field{0.0, 0.0, 0.0};  // uniform field: + field . S
  double constant = 0.0;

  static PairModel xxz(const CouplingGraph& g);
  static PairModel oat(double chi, std::size_t n);
  static PairModel dimer(double J);
  PairModel& add_transverse_field(double hx);  // adds -hx * Sx
  PairModel& add_field(double hx, double hy, double hz);
};

}  // namespace sqz
