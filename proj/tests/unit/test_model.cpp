#include <doctest.h>

#include <cmath>

#include "squeezelab/common.hpp"
#include "squeezelab/model.hpp"

using namespace sqz;

TEST_SUITE_BEGIN("model");

TEST_CASE("pair coupling follows 1/r^3 with the bare scale") {
  std::vector<std::array<double, 3>> pts{{0, 0, 0}, {10, 0, 0}};
  auto g = build_coupling(pts);
  CHECK(g.J(0, 1) == doctest::Approx(kJ0Default / 1000.0).epsilon(1e-14));
  CHECK(g.J(0, 1) == g.J(1, 0));
  CHECK(g.J(0, 0) == 0.0);
  // 2*pi*52 rad nm^3/us at 10 nm: about 0.327 rad/us.
  CHECK(g.J(0, 1) == doctest::Approx(0.3267).epsilon(1e-3));
}

TEST_CASE("coupling graph excludes inactive spins") {
  SpinEnsemble e;
  e.region = {100.0, 100.0};
  e.positions = {{0, 0, 0}, {10, 0, 0}, {20, 0, 0}};
  e.status = {SpinStatus::active, SpinStatus::shelved, SpinStatus::active};
  auto g = build_coupling(e);
  REQUIRE(g.size() == 2);
  CHECK(g.spins == std::vector<std::size_t>{0, 2});
  CHECK(g.J(0, 1) == doctest::Approx(kJ0Default / 8000.0).epsilon(1e-14));
}

TEST_CASE("mean-field chi of a dimer is the pair coupling") {
  std::vector<std::array<double, 3>> pts{{0, 0, 0}, {10, 0, 0}};
  auto g = build_coupling(pts);
  CHECK(mean_field_chi(g) == doctest::Approx(kJ0Default / 1000.0).epsilon(1e-14));
}

TEST_CASE("mean-field chi equals (2/N) sum of pair couplings") {
  std::vector<std::array<double, 3>> pts{{0, 0, 0}, {13, 0, 0}, {4, 19, 0}, {40, 8, 0}};
  auto g = build_coupling(pts);
  double sum = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) sum += g.J(i, j);
  CHECK(mean_field_chi(g) == doctest::Approx(2.0 * sum / 4.0).epsilon(1e-14));
  CHECK(mean_field_chi(g) > 0.0);
}

TEST_CASE("coupling distribution is a normalized density") {
  auto e = sample_positions(0.002, Region{400, 400}, 17);
  auto g = build_coupling(e);
  auto h = coupling_distribution(g, 24);
  REQUIRE(h.density.size() == 24);
  double total = 0.0;
  std::size_t count_total = 0;
  for (std::size_t b = 0; b < h.density.size(); ++b) {
    total += h.density[b] * (h.edges[b + 1] - h.edges[b]);
    count_total += h.counts[b];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(count_total == g.size() * (g.size() - 1) / 2);
  CHECK(h.max > h.mean);
}

TEST_CASE("one-axis twisting pair model") {
  auto m = PairModel::oat(0.25, 6);
  CHECK(m.n == 6);
  CHECK(m.czz(0, 5) == doctest::Approx(0.5));
  CHECK(m.czz(2, 2) == 0.0);
  CHECK(m.cxy(0, 5) == 0.0);
  CHECK(m.constant == doctest::Approx(0.25 * 6 / 4.0));
}

TEST_CASE("xxz pair model signs") {
  std::vector<std::array<double, 3>> pts{{0, 0, 0}, {10, 0, 0}};
  auto g = build_coupling(pts);
  auto m = PairModel::xxz(g);
  const double J = kJ0Default / 1000.0;
  CHECK(m.cxy(0, 1) == doctest::Approx(-J));
  CHECK(m.czz(0, 1) == doctest::Approx(J));
  m.add_transverse_field(0.7);
  CHECK(m.field[0] == doctest::Approx(-0.7));
}

TEST_SUITE_END();
