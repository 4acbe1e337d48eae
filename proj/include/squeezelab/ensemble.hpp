// SPDX-License-Identifier: MIT
//
// Positional disorder: planar Poisson ensembles of spin defects and the
// physical removal mechanisms that thin them out (hard cutoff on nearest
// neighbour distance, resonance-based shelving to an auxiliary level,
// depolarization by an incoherent bath of off-layer spins).

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sqz {

struct CouplingGraph;  // model.hpp

enum class SpinStatus : std::uint8_t { active = 0, shelved = 1, depolarized = 2 };

// Sampling region: a layer of lateral size lx * ly and thickness d (nm).
// Spins get a uniform z in [0, d] (d = 0 gives a flat 2D layer); all
// distances downstream are full 3D distances.
struct Region {
  double lx = 0.0;
  double ly = 0.0;
  double d = 0.0;
};

struct SpinEnsemble {
  Region region;
  double density = 0.0;  // spins per nm^2 (sampled intensity)
  std::uint64_t seed = 0;
  std::vector<std::array<double, 3>> positions;  // nm
  std::vector<SpinStatus> status;                // same length as positions

  std::size_t size() const { return positions.size(); }
  std::size_t active_count() const;
  std::vector<std::size_t> active_indices() const;
};

enum class RemovalKind { none, hard_cutoff, shelving, depolarization };

struct RemovalModel {
  RemovalKind kind = RemovalKind::none;
  // Interpretation of radius, nm:
  //   hard_cutoff     -> r_min: any spin whose nearest active neighbour is
  //                      closer than r_min is removed (and symmetrically).
  //   shelving        -> r_shelve: sets the shelving drive Omega = J0 / r^3.
  //   depolarization  -> r_depol: distance at which the bath coupling equals
  //                      the intralayer nearest-neighbour coupling.
  double radius = 0.0;
};

RemovalKind removal_kind_from_string(const std::string& s);
std::string to_string(RemovalKind k);

// Poisson-distributed count with intensity density*area; positions uniform.
SpinEnsemble sample_positions(double density, const Region& region, std::uint64_t seed);

// Same layout but with a fixed number of spins (useful for matched-size
// comparisons between methods).
SpinEnsemble sample_positions_fixed(std::size_t count, const Region& region,
                                    std::uint64_t seed);

// Nearest-neighbour distance law for an ideal Poisson gas of intensity n in
// dim = 2 or 3 (per-unit-length pdf in the same length units as r).
double nn_distance_pdf(double r, double n, int dim = 2);

// Probability that a spin with total mean-field coupling J (rad/us) is left
// in the shelved level by a sweep of Rabi frequency Omega (rad/us):
//   p = 1 - Omega^2/(Omega^2+J^2) * sin^2( (pi/2) sqrt(1 + (J/Omega)^2) ).
double shelving_probability(double J, double Omega);

// Probability that a spin whose nearest active neighbour sits at r_nn is
// scrambled by the depolarizing drive. Tightly coupled pairs (r_nn << r_depol)
// are removed with probability -> 1, isolated spins survive (p -> 0 for
// r_nn >> r_depol). r_depol = 0 disables the mechanism (returns 0).
double depolarization_probability(double r_nn, double r_depol);

// Distance of each active spin to its nearest active neighbour (nm).
// Entries for inactive spins are set to +infinity.
std::vector<double> nearest_active_distances(const SpinEnsemble& e);

// Apply a removal model, returning a copy with updated status flags.
// hard_cutoff is deterministic; shelving and depolarization draw one uniform
// per spin from `seed`. The coupling graph must describe the *input* ensemble
// (used by shelving for the mean-field sums; may be null for the other kinds).
SpinEnsemble apply_removal(const SpinEnsemble& e, const RemovalModel& model,
                           const CouplingGraph* coupling, std::uint64_t seed);

}  // namespace sqz
