#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "squeezelab/common.hpp"
#include "squeezelab/ensemble.hpp"
#include "squeezelab/model.hpp"

using namespace sqz;

TEST_SUITE_BEGIN("ensemble");

TEST_CASE("shelving probability limits and anchor value") {
  CHECK(shelving_probability(0.0, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
  // J == Omega: 1 - (1/2) sin^2(pi/sqrt(2))
  const double expected = 1.0 - 0.5 * std::pow(std::sin(kPi / std::sqrt(2.0)), 2);
  CHECK(shelving_probability(2.0, 2.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.685).epsilon(5e-3));
  CHECK(shelving_probability(100.0, 1.0) > 0.99);
  // Shelving grows with coupling strength at fixed drive.
  CHECK(shelving_probability(5.0, 1.0) > shelving_probability(0.3, 1.0));
}

TEST_CASE("depolarization probability limits and anchor value") {
  CHECK(depolarization_probability(10.0, 0.0) == 0.0);
  // y = 1: p = 1 - 4(sqrt5 - 1) / (4 + (sqrt5 - 1)^2)
  const double s = std::sqrt(5.0) - 1.0;
  const double expected = 1.0 - 4.0 * s / (4.0 + s * s);
  CHECK(depolarization_probability(14.0, 14.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.1056).epsilon(1e-3));
  // Close pairs are scrambled, isolated spins survive.
  CHECK(depolarization_probability(0.1, 14.0) > 0.99);
  CHECK(depolarization_probability(200.0, 14.0) < 1e-6);
  CHECK(depolarization_probability(7.0, 14.0) > depolarization_probability(14.0, 14.0));
  CHECK(depolarization_probability(14.0, 14.0) > depolarization_probability(28.0, 14.0));
}

TEST_CASE("nearest neighbour pdf normalization and mode") {
  const double n2 = 0.013;
  // 2D: mode at 1/sqrt(2 pi n), integral 1.
  const double mode = 1.0 / std::sqrt(kTwoPi * n2);
  CHECK(nn_distance_pdf(mode, n2, 2) > nn_distance_pdf(mode * 0.9, n2, 2));
  CHECK(nn_distance_pdf(mode, n2, 2) > nn_distance_pdf(mode * 1.1, n2, 2));
  for (int dim : {2, 3}) {
    double integral = 0.0;
    const double dr = 0.01;
    for (double r = 0.5 * dr; r < 60.0; r += dr)
      integral += nn_distance_pdf(r, n2, dim) * dr;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-4));
  }
  CHECK_THROWS_AS((void)nn_distance_pdf(1.0, 1.0, 4), std::invalid_argument);
}

TEST_CASE("position sampling is deterministic and in-region") {
  const Region box{200.0, 150.0};
  auto a = sample_positions(0.01, box, 42);
  auto b = sample_positions(0.01, box, 42);
  auto c = sample_positions(0.01, box, 43);
  REQUIRE(a.size() == b.size());
  CHECK(a.positions == b.positions);
  CHECK(a.size() != c.size());  // different Poisson draw almost surely
  for (const auto& p : a.positions) {
    CHECK(p[0] >= 0.0);
    CHECK(p[0] <= box.lx);
    CHECK(p[1] >= 0.0);
    CHECK(p[1] <= box.ly);
  }
  // Count close to intensity * area (5 sigma).
  const double mean = 0.01 * box.lx * box.ly;
  CHECK(std::abs(double(a.size()) - mean) < 5.0 * std::sqrt(mean));

  auto f = sample_positions_fixed(37, box, 7);
  CHECK(f.size() == 37);
}

TEST_CASE("empirical nearest-neighbour law matches the Poisson pdf") {
  const double n = 0.01;
  const Region box{600.0, 600.0};
  auto e = sample_positions(n, box, 2024);
  auto d = nearest_active_distances(e);
  // Interior spins only, to suppress boundary bias.
  const double margin = 2.0 / std::sqrt(n);
  std::vector<double> interior;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto& p = e.positions[i];
    if (p[0] > margin && p[0] < box.lx - margin && p[1] > margin &&
        p[1] < box.ly - margin)
      interior.push_back(d[i]);
  }
  REQUIRE(interior.size() > 1000);
  std::sort(interior.begin(), interior.end());
  // Kolmogorov-Smirnov distance against CDF(r) = 1 - exp(-pi n r^2).
  double ks = 0.0;
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const double cdf = 1.0 - std::exp(-kPi * n * interior[i] * interior[i]);
    const double emp_hi = double(i + 1) / double(interior.size());
    const double emp_lo = double(i) / double(interior.size());
    ks = std::max(ks, std::max(std::abs(cdf - emp_hi), std::abs(cdf - emp_lo)));
  }
  CHECK(ks < 0.05);
}

TEST_CASE("typical spacing at the working density") {
  // 8 ppm*nm layer: (area/count)^(1/2) in the tens of nm.
  const double n = ppm_nm_to_per_nm2(8.0);
  CHECK(n == doctest::Approx(8.0e-6 * 176.25).epsilon(1e-12));
  const Region box{800.0, 800.0};
  auto e = sample_positions(n, box, 5);
  const double spacing = std::sqrt(box.lx * box.ly / double(e.size()));
  CHECK(spacing > 15.0);
  CHECK(spacing < 30.0);
}

TEST_CASE("a thick layer spreads spins in three dimensions") {
  const double n = ppm_nm_to_per_nm2(8.0);
  const Region box{400.0, 400.0, 7.0};
  double mean_spacing = 0.0;
  bool z_spread = false, z_in_range = true;
  for (int s = 0; s < 100; ++s) {
    auto e = sample_positions(n, box, 9000 + s);
    REQUIRE(e.size() > 0);
    mean_spacing += std::sqrt(box.lx * box.ly / double(e.size()));
    for (const auto& p : e.positions) {
      z_in_range = z_in_range && p[2] >= 0.0 && p[2] <= box.d;
      z_spread = z_spread || p[2] > 1.0;
    }
  }
  mean_spacing /= 100.0;
  CHECK(mean_spacing > 15.0);
  CHECK(mean_spacing < 30.0);
  CHECK(z_in_range);
  CHECK(z_spread);

  // Couplings see the full 3D separation: (3, 0, 4) is 5 nm away.
  SpinEnsemble two;
  two.region = box;
  two.density = 2.0 / (box.lx * box.ly);
  two.positions = {{0.0, 0.0, 0.0}, {3.0, 0.0, 4.0}};
  two.status.assign(2, SpinStatus::active);
  const CouplingGraph g = build_coupling(two);
  CHECK(g.J(0, 1) == doctest::Approx(kJ0Default / 125.0).epsilon(1e-12));
}

TEST_CASE("hard cutoff removal: idempotent, monotone, pairwise-separated") {
  auto e = sample_positions(0.02, Region{300.0, 300.0}, 99);
  RemovalModel m{RemovalKind::hard_cutoff, 8.0};
  auto once = apply_removal(e, m, nullptr, 1);
  auto twice = apply_removal(once, m, nullptr, 2);
  CHECK(once.status == twice.status);
  CHECK(once.active_count() < e.active_count());
  CHECK(once.active_count() > 0);

  auto d = nearest_active_distances(once);
  for (std::size_t i = 0; i < once.size(); ++i) {
    if (once.status[i] == SpinStatus::active) CHECK(d[i] >= m.radius);
  }

  // Monotonicity: larger cutoff removes a superset.
  auto wider = apply_removal(e, RemovalModel{RemovalKind::hard_cutoff, 12.0}, nullptr, 1);
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (once.status[i] != SpinStatus::active)
      CHECK(wider.status[i] != SpinStatus::active);
  }
}

TEST_CASE("shelving removal prunes strongly coupled spins") {
  auto e = sample_positions(ppm_nm_to_per_nm2(8.0), Region{500.0, 500.0}, 11);
  auto g = build_coupling(e);
  // Strong drive (small radius -> large Omega): almost nothing shelved.
  auto strong = apply_removal(e, RemovalModel{RemovalKind::shelving, 2.0}, &g, 3);
  // Weak drive: almost everything shelved.
  auto weak = apply_removal(e, RemovalModel{RemovalKind::shelving, 60.0}, &g, 3);
  CHECK(strong.active_count() > 0.8 * double(e.active_count()));
  CHECK(weak.active_count() < 0.2 * double(e.active_count()));
  // Determinism.
  auto again = apply_removal(e, RemovalModel{RemovalKind::shelving, 7.0}, &g, 3);
  auto again2 = apply_removal(e, RemovalModel{RemovalKind::shelving, 7.0}, &g, 3);
  CHECK(again.status == again2.status);
  CHECK_THROWS_AS((void)apply_removal(e, RemovalModel{RemovalKind::shelving, 7.0},
                                      nullptr, 3),
                  std::invalid_argument);
}

TEST_CASE("depolarization removal thins close pairs") {
  auto e = sample_positions(ppm_nm_to_per_nm2(8.0), Region{500.0, 500.0}, 21);
  auto thin = apply_removal(e, RemovalModel{RemovalKind::depolarization, 14.0}, nullptr, 4);
  CHECK(thin.active_count() < e.active_count());
  // Spins that survived should on average sit farther from their neighbours.
  auto d_before = nearest_active_distances(e);
  double removed_mean = 0.0, kept_mean = 0.0;
  std::size_t removed = 0, kept = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!std::isfinite(d_before[i])) continue;
    if (thin.status[i] == SpinStatus::active) {
      kept_mean += d_before[i];
      ++kept;
    } else {
      removed_mean += d_before[i];
      ++removed;
    }
  }
  REQUIRE(removed > 0);
  REQUIRE(kept > 0);
  CHECK(kept_mean / double(kept) > removed_mean / double(removed));
}

TEST_SUITE_END();
