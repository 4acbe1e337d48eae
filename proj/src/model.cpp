// SPDX-License-Identifier: MIT

#include "squeezelab/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sqz {

static CouplingGraph graph_from_points(const std::vector<std::array<double, 3>>& pts,
                                       std::vector<std::size_t> ids, double J0) {
  const std::size_t n = pts.size();
  CouplingGraph g;
  g.J0 = J0;
  g.spins = std::move(ids);
  g.J = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = pts[i][0] - pts[j][0];
      const double dy = pts[i][1] - pts[j][1];
      const double dz = pts[i][2] - pts[j][2];
      const double r2 = dx * dx + dy * dy + dz * dz;
      if (r2 <= 0.0)
        throw std::invalid_argument("build_coupling: coincident spins");
      const double Jij = J0 / (r2 * std::sqrt(r2));
      g.J(i, j) = Jij;
      g.J(j, i) = Jij;
    }
  }
  g.row_sum.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.row_sum[i] = g.J.row(i).sum();
  return g;
}

CouplingGraph build_coupling(const SpinEnsemble& e, double J0) {
  const auto idx = e.active_indices();
  std::vector<std::array<double, 3>> pts(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) pts[k] = e.positions[idx[k]];
  return graph_from_points(pts, idx, J0);
}

CouplingGraph build_coupling(const std::vector<std::array<double, 3>>& positions,
                             double J0) {
  std::vector<std::size_t> ids(positions.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return graph_from_points(positions, std::move(ids), J0);
}

Histogram coupling_distribution(const CouplingGraph& g, int bins) {
  if (bins < 1) throw std::invalid_argument("coupling_distribution: bins < 1");
  std::vector<double> vals;
  const std::size_t n = g.size();
  vals.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) vals.push_back(g.J(i, j));
  Histogram h;
  if (vals.empty()) return h;
  auto [lo_it, hi_it] = std::minmax_element(vals.begin(), vals.end());
  double lo = *lo_it, hi = *hi_it;
  h.mean = pairwise_sum(vals) / double(vals.size());
  h.max = hi;
  if (lo <= 0.0 || lo == hi) {
    lo = std::max(lo, hi * 1e-12);
    hi = std::max(hi, lo * (1.0 + 1e-9));
  }
  // Log-spaced bins: couplings span many decades.
  const double llo = std::log(lo), lhi = std::log(hi * (1.0 + 1e-12));
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b)
    h.edges[b] = std::exp(llo + (lhi - llo) * double(b) / double(bins));
  h.counts.assign(bins, 0);
  for (double v : vals) {
    int b = int(std::floor((std::log(v) - llo) / (lhi - llo) * bins));
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[b];
  }
  h.density.resize(bins);
  for (int b = 0; b < bins; ++b) {
    const double width = h.edges[b + 1] - h.edges[b];
    h.density[b] = double(h.counts[b]) / (double(vals.size()) * width);
  }
  return h;
}

double mean_field_chi(const CouplingGraph& g) {
  const std::size_t n = g.size();
  if (n == 0) return 0.0;
  return pairwise_sum(g.row_sum) / double(n);  // (1/N) sum_i J_i = (2/N) sum_{i<j} J_ij
}

PairModel PairModel::xxz(const CouplingGraph& g) {
  PairModel m;
  m.n = g.size();
  m.cxy = -g.J;
  m.czz = g.J;
  return m;
}

PairModel PairModel::oat(double chi, std::size_t n) {
  PairModel m;
  m.n = n;
  m.cxy = Eigen::MatrixXd::Zero(n, n);
  m.czz = Eigen::MatrixXd::Constant(n, n, 2.0 * chi);
  m.czz.diagonal().setZero();
  m.constant = chi * double(n) / 4.0;  // chi*Sz^2 = const + 2 chi sum_{i<j} sz sz
  return m;
}

PairModel PairModel::dimer(double J) {
  PairModel m;
  m.n = 2;
  m.cxy = Eigen::MatrixXd::Zero(2, 2);
  m.czz = Eigen::MatrixXd::Zero(2, 2);
  m.cxy(0, 1) = m.cxy(1, 0) = -J;
  m.czz(0, 1) = m.czz(1, 0) = J;
  return m;
}

PairModel& PairModel::add_transverse_field(double hx) {
  field[0] -= hx;
  return *this;
}

PairModel& PairModel::add_field(double hx, double hy, double hz) {
  field[0] += hx;
  field[1] += hy;
  field[2] += hz;
  return *this;
}

}  // namespace sqz
