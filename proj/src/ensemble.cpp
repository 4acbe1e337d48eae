// SPDX-License-Identifier: MIT

#include "squeezelab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "squeezelab/common.hpp"
#include "squeezelab/model.hpp"

namespace sqz {

std::size_t SpinEnsemble::active_count() const {
  std::size_t n = 0;
  for (auto s : status)
    if (s == SpinStatus::active) ++n;
  return n;
}

std::vector<std::size_t> SpinEnsemble::active_indices() const {
  std::vector<std::size_t> idx;
  idx.reserve(status.size());
  for (std::size_t i = 0; i < status.size(); ++i)
    if (status[i] == SpinStatus::active) idx.push_back(i);
  return idx;
}

RemovalKind removal_kind_from_string(const std::string& s) {
  if (s == "none") return RemovalKind::none;
  if (s == "hard_cutoff") return RemovalKind::hard_cutoff;
  if (s == "shelving") return RemovalKind::shelving;
  if (s == "depolarization") return RemovalKind::depolarization;
  throw std::invalid_argument("unknown removal kind: " + s);
}

std::string to_string(RemovalKind k) {
  switch (k) {
    case RemovalKind::none: return "none";
    case RemovalKind::hard_cutoff: return "hard_cutoff";
    case RemovalKind::shelving: return "shelving";
    case RemovalKind::depolarization: return "depolarization";
  }
  return "none";
}

static void fill_uniform_positions(SpinEnsemble& e, std::size_t count, Rng& rng) {
  e.positions.resize(count);
  e.status.assign(count, SpinStatus::active);
  for (std::size_t i = 0; i < count; ++i) {
    // The z draw is always consumed so the position stream does not depend
    // on whether the layer is flat.
    e.positions[i] = {rng.uniform(0.0, e.region.lx), rng.uniform(0.0, e.region.ly),
                      rng.uniform(0.0, e.region.d)};
  }
}

SpinEnsemble sample_positions(double density, const Region& region, std::uint64_t seed) {
  if (!(density >= 0.0)) throw std::invalid_argument("sample_positions: density < 0");
  if (!(region.lx > 0.0) || !(region.ly > 0.0))
    throw std::invalid_argument("sample_positions: region must have positive extent");
  if (region.d < 0.0)
    throw std::invalid_argument("sample_positions: thickness must be >= 0");
  SpinEnsemble e;
  e.region = region;
  e.density = density;
  e.seed = seed;
  Rng rng(derive_stream_seed(seed, 0));
  const std::size_t count = rng.poisson(density * region.lx * region.ly);
  fill_uniform_positions(e, count, rng);
  return e;
}

SpinEnsemble sample_positions_fixed(std::size_t count, const Region& region,
                                    std::uint64_t seed) {
  if (!(region.lx > 0.0) || !(region.ly > 0.0))
    throw std::invalid_argument("sample_positions_fixed: region must have positive extent");
  if (region.d < 0.0)
    throw std::invalid_argument("sample_positions_fixed: thickness must be >= 0");
  SpinEnsemble e;
  e.region = region;
  e.density = double(count) / (region.lx * region.ly);
  e.seed = seed;
  Rng rng(derive_stream_seed(seed, 0));
  fill_uniform_positions(e, count, rng);
  return e;
}

double nn_distance_pdf(double r, double n, int dim) {
  if (r < 0.0 || n <= 0.0) return 0.0;
  if (dim == 2) {
    return kTwoPi * r * n * std::exp(-kPi * r * r * n);
  }
  if (dim == 3) {
    const double shell = 4.0 * kPi * n * r * r;
    return shell * std::exp(-(4.0 / 3.0) * kPi * n * r * r * r);
  }
  throw std::invalid_argument("nn_distance_pdf: dim must be 2 or 3");
}

double shelving_probability(double J, double Omega) {
  if (!(Omega > 0.0)) throw std::invalid_argument("shelving_probability: Omega must be > 0");
  J = std::abs(J);
  const double ratio2 = (J / Omega) * (J / Omega);
  const double transfer =
      1.0 / (1.0 + ratio2) * std::pow(std::sin(0.5 * kPi * std::sqrt(1.0 + ratio2)), 2);
  return 1.0 - transfer;
}

double depolarization_probability(double r_nn, double r_depol) {
  if (r_depol <= 0.0) return 0.0;  // mechanism disabled
  if (!(r_nn > 0.0)) return 1.0;   // infinitely strong pair, always scrambled
  // y = r_nn / r_depol. Tightly coupled pairs (y << 1) are scrambled with
  // probability -> 1; well-isolated spins (y >> 1) survive, p -> 0.
  const double y = r_nn / r_depol;
  const double y3 = y * y * y;
  const double y6 = y3 * y3;
  const double root = std::sqrt(1.0 + 4.0 * y6);
  const double num = 4.0 * y3 * (root - 1.0);
  const double den = 4.0 * y6 + (root - 1.0) * (root - 1.0);
  if (den == 0.0) return 0.0;
  const double locked = num / den;  // residual polarization of the pair
  return 1.0 - locked;
}

std::vector<double> nearest_active_distances(const SpinEnsemble& e) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> out(e.size(), inf);
  const auto idx = e.active_indices();
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const auto& p = e.positions[idx[a]];
      const auto& q = e.positions[idx[b]];
      const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
      const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
      out[idx[a]] = std::min(out[idx[a]], d);
      out[idx[b]] = std::min(out[idx[b]], d);
    }
  }
  return out;
}

SpinEnsemble apply_removal(const SpinEnsemble& e, const RemovalModel& model,
                           const CouplingGraph* coupling, std::uint64_t seed) {
  SpinEnsemble out = e;
  switch (model.kind) {
    case RemovalKind::none:
      return out;

    case RemovalKind::hard_cutoff: {
      // Remove, in one shot, every active spin whose nearest active
      // neighbour in the *input* configuration is closer than r_min. The
      // operation is idempotent: survivors are pairwise >= r_min apart, so a
      // second pass removes nothing.
      const auto d = nearest_active_distances(e);
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (out.status[i] == SpinStatus::active && d[i] < model.radius)
          out.status[i] = SpinStatus::depolarized;
      }
      return out;
    }

    case RemovalKind::shelving: {
      if (coupling == nullptr)
        throw std::invalid_argument("apply_removal: shelving needs the coupling graph");
      if (!(model.radius > 0.0))
        throw std::invalid_argument("apply_removal: shelving radius must be > 0");
      const double Omega = coupling->J0 / std::pow(model.radius, 3);
      Rng rng(derive_stream_seed(seed, 1));
      // One Bernoulli per modeled spin, in graph order.
      for (std::size_t k = 0; k < coupling->size(); ++k) {
        const std::size_t i = coupling->spins[k];
        const double p = shelving_probability(coupling->row_sum[k], Omega);
        if (rng.bernoulli(p)) out.status[i] = SpinStatus::shelved;
      }
      return out;
    }

    case RemovalKind::depolarization: {
      const auto d = nearest_active_distances(e);
      Rng rng(derive_stream_seed(seed, 2));
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (e.status[i] != SpinStatus::active) continue;
        const double p = depolarization_probability(d[i], model.radius);
        if (rng.bernoulli(p)) out.status[i] = SpinStatus::depolarized;
      }
      return out;
    }
  }
  return out;
}

}  // namespace sqz
