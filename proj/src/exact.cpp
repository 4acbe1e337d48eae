// SPDX-License-Identifier: MIT

#include "squeezelab/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "squeezelab/common.hpp"

namespace sqz {

double PureState::norm() const {
  double s2 = 0.0;
  for (const auto& a : amp) s2 += std::norm(a);
  return std::sqrt(s2);
}

static void spinor_for_axis(char axis, bool flipped, cplx out[2]) {
  const double inv = 1.0 / std::sqrt(2.0);
  switch (axis) {
    case 'x':
      out[0] = inv;
      out[1] = flipped ? cplx(-inv) : cplx(inv);
      return;
    case 'y':
      out[0] = inv;
      out[1] = flipped ? cplx(0.0, -inv) : cplx(0.0, inv);
      return;
    case 'z':
      out[0] = flipped ? cplx(0.0) : cplx(1.0);
      out[1] = flipped ? cplx(1.0) : cplx(0.0);
      return;
    default:
      throw std::invalid_argument("axis must be 'x', 'y' or 'z'");
  }
}

PureState prepare_product(std::size_t n, char axis, const std::vector<bool>& flipped) {
  if (n == 0 || n > kExactMaxSpins)
    throw std::invalid_argument("prepare_product: unsupported spin count");
  if (flipped.size() != n)
    throw std::invalid_argument("prepare_product: flip mask size mismatch");
  PureState st;
  st.n = n;
  st.amp.assign(std::size_t(1) << n, cplx(1.0));
  std::vector<std::array<cplx, 2>> spinors(n);
  for (std::size_t i = 0; i < n; ++i) spinor_for_axis(axis, flipped[i], spinors[i].data());
  for (std::size_t s = 0; s < st.amp.size(); ++s) {
    cplx a(1.0);
    for (std::size_t i = 0; i < n; ++i) a *= spinors[i][(s >> i) & 1u];
    st.amp[s] = a;
  }
  return st;
}

PureState prepare_polarized(std::size_t n, char axis, double eta, std::uint64_t seed) {
  if (!(eta >= -1.0 && eta <= 1.0))
    throw std::invalid_argument("prepare_polarized: eta must lie in [-1, 1]");
  std::vector<bool> flips(n, false);
  if (eta < 1.0) {
    Rng rng(derive_stream_seed(seed, 3));
    const double p_flip = 0.5 * (1.0 - eta);
    for (std::size_t i = 0; i < n; ++i) flips[i] = rng.bernoulli(p_flip);
  }
  return prepare_product(n, axis, flips);
}

PureState rotate_global(const PureState& state, char axis, double angle) {
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  // u = exp(-i * angle * sigma_axis / 2) in the (up, down) basis.
  cplx u00, u01, u10, u11;
  switch (axis) {
    case 'x':
      u00 = c; u01 = cplx(0, -s); u10 = cplx(0, -s); u11 = c;
      break;
    case 'y':
      u00 = c; u01 = -s; u10 = s; u11 = c;
      break;
    case 'z':
      u00 = cplx(c, -s); u01 = 0; u10 = 0; u11 = cplx(c, s);
      break;
    default:
      throw std::invalid_argument("axis must be 'x', 'y' or 'z'");
  }
  PureState out = state;
  const std::size_t dim = out.amp.size();
  for (std::size_t i = 0; i < state.n; ++i) {
    const std::size_t bit = std::size_t(1) << i;
    for (std::size_t s0 = 0; s0 < dim; ++s0) {
      if (s0 & bit) continue;
      const std::size_t s1 = s0 | bit;
      const cplx a0 = out.amp[s0], a1 = out.amp[s1];
      out.amp[s0] = u00 * a0 + u01 * a1;
      out.amp[s1] = u10 * a0 + u11 * a1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hamiltonian
// ---------------------------------------------------------------------------

ExactHamiltonian::ExactHamiltonian(const PairModel& m) : n_(m.n) {
  if (n_ == 0 || n_ > kExactMaxSpins)
    throw std::invalid_argument("ExactHamiltonian: unsupported spin count");
  const std::size_t dim = std::size_t(1) << n_;

  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if (m.cxy(i, j) != 0.0)
        pairs_.push_back({std::uint32_t(i), std::uint32_t(j), 0.5 * m.cxy(i, j)});

  hx_ = m.field[0];
  hy_ = m.field[1];
  const double hz = m.field[2];

  diag_.assign(dim, 0.0);
  std::vector<double> zeta(n_);
  for (std::size_t s = 0; s < dim; ++s) {
    for (std::size_t i = 0; i < n_; ++i) zeta[i] = ((s >> i) & 1u) ? -1.0 : 1.0;
    double d = m.constant;
    for (std::size_t i = 0; i < n_; ++i) {
      d += 0.5 * hz * zeta[i];
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double c = m.czz(i, j);
        if (c != 0.0) d += 0.25 * c * zeta[i] * zeta[j];
      }
    }
    diag_[s] = d;
  }
}

void ExactHamiltonian::apply(std::span<const cplx> in, std::span<cplx> out) const {
  const std::size_t dim = this->dim();
  if (in.size() != dim || out.size() != dim)
    throw std::invalid_argument("ExactHamiltonian::apply: dimension mismatch");

  for (std::size_t s = 0; s < dim; ++s) out[s] = diag_[s] * in[s];

  for (const auto& p : pairs_) {
    const std::size_t bi = std::size_t(1) << p.i;
    const std::size_t bj = std::size_t(1) << p.j;
    const std::size_t mask = bi | bj;
    const double hc = p.half_c;
    // Flip-flop: acts on configurations where the two bits differ.
    for (std::size_t s = 0; s < dim; ++s) {
      const bool di = (s & bi) != 0, dj = (s & bj) != 0;
      if (di != dj) out[s ^ mask] += hc * in[s];
    }
  }

  if (hx_ != 0.0 || hy_ != 0.0) {
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t bit = std::size_t(1) << i;
      for (std::size_t s0 = 0; s0 < dim; ++s0) {
        if (s0 & bit) continue;
        const std::size_t s1 = s0 | bit;
        // sx: 1/2 off-diagonal; sy: -i/2 (down->up), +i/2 (up->down).
        out[s0] += cplx(0.5 * hx_, -0.5 * hy_) * in[s1];
        out[s1] += cplx(0.5 * hx_, 0.5 * hy_) * in[s0];
      }
    }
  }
}

PureState ExactHamiltonian::apply(const PureState& s) const {
  PureState out;
  out.n = s.n;
  out.amp.resize(s.amp.size());
  apply(s.amp, out.amp);
  return out;
}

double ExactHamiltonian::energy(const PureState& s) const {
  PureState hs = apply(s);
  double e = 0.0;
  for (std::size_t k = 0; k < s.amp.size(); ++k)
    e += std::real(std::conj(s.amp[k]) * hs.amp[k]);
  return e;
}

double ExactHamiltonian::norm_bound() const {
  double d = 0.0;
  for (double v : diag_) d = std::max(d, std::abs(v));
  double off = 0.0;
  for (const auto& p : pairs_) off += 2.0 * std::abs(p.half_c);
  off += 0.5 * double(n_) * (std::abs(hx_) + std::abs(hy_));
  return d + off;
}

// ---------------------------------------------------------------------------
// Lanczos propagation
// ---------------------------------------------------------------------------

namespace {

double vec_norm(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const auto& a : v) s += std::norm(a);
  return std::sqrt(s);
}

cplx vec_dot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace

PureState krylov_propagate(const PureState& state, const ExactHamiltonian& H,
                           double t, const KrylovOptions& opts) {
  if (state.n != H.nspins())
    throw std::invalid_argument("krylov_propagate: state/Hamiltonian size mismatch");
  if (t == 0.0) return state;
  const std::size_t dim = H.dim();
  const int m = int(std::min<std::size_t>(std::max(2, opts.m), dim));

  PureState cur = state;
  double remaining = t;
  const double sign = (t > 0.0) ? 1.0 : -1.0;
  remaining = std::abs(t);
  double dt_try = remaining;
  int steps = 0;

  std::vector<std::vector<cplx>> V;
  std::vector<cplx> w(dim);

  while (remaining > 0.0) {
    if (++steps > opts.max_substeps)
      throw std::runtime_error("krylov_propagate: substep limit exceeded");

    const double beta0 = vec_norm(cur.amp);
    if (beta0 == 0.0) return cur;

    // Build the Lanczos basis once; it is reused for any substep size.
    V.assign(1, cur.amp);
    for (auto& a : V[0]) a /= beta0;
    std::vector<double> alpha, beta;
    bool invariant = false;
    for (int k = 0; k < m; ++k) {
      H.apply(V[k], w);
      if (k > 0) {
        const double b = beta[k - 1];
        const auto& vp = V[k - 1];
        for (std::size_t i = 0; i < dim; ++i) w[i] -= b * vp[i];
      }
      const double a = std::real(vec_dot(V[k], w));
      alpha.push_back(a);
      const auto& vk = V[k];
      for (std::size_t i = 0; i < dim; ++i) w[i] -= a * vk[i];
      // One pass of full reorthogonalization keeps the basis clean.
      for (const auto& vj : V) {
        const cplx c = vec_dot(vj, w);
        for (std::size_t i = 0; i < dim; ++i) w[i] -= c * vj[i];
      }
      const double b = vec_norm(w);
      if (b <= 1e-13 * std::max(1.0, H.norm_bound())) {
        invariant = true;  // happy breakdown: subspace is exact
        break;
      }
      beta.push_back(b);
      if (k + 1 < m) {
        V.push_back(w);
        for (auto& x : V.back()) x /= b;
      }
    }
    const int kk = int(alpha.size());

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(kk, kk);
    for (int i = 0; i < kk; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < kk) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::VectorXd evals = es.eigenvalues();
    const Eigen::MatrixXd evecs = es.eigenvectors();

    double dt = std::min(dt_try, remaining);
    Eigen::VectorXcd u(kk);
    for (;;) {
      Eigen::VectorXcd phase(kk);
      for (int i = 0; i < kk; ++i)
        phase[i] = std::exp(cplx(0.0, -sign * evals[i] * dt)) * evecs(0, i);
      u = evecs * phase;  // exp(-i T dt) e_1
      // A-posteriori residual estimate: coupling out of the subspace times
      // the weight the propagated vector puts on the last basis state.
      const double err =
          (invariant || beta.empty()) ? 0.0 : beta.back() * std::abs(u[kk - 1]) * dt;
      const double budget = opts.tol * std::max(dt / std::abs(t), 1e-3);
      if (err <= budget || dt <= std::abs(t) * 1e-12) {
        // Accept; grow the next attempt if we were well under budget.
        dt_try = (err < 0.1 * budget) ? dt * 2.0 : dt;
        break;
      }
      dt *= 0.5;
      if (++steps > opts.max_substeps)
        throw std::runtime_error("krylov_propagate: substep limit exceeded");
    }

    std::vector<cplx> next(dim, cplx(0.0));
    for (int k = 0; k < int(V.size()) && k < kk; ++k) {
      const cplx c = beta0 * u[k];
      const auto& vk = V[k];
      for (std::size_t i = 0; i < dim; ++i) next[i] += c * vk[i];
    }
    cur.amp = std::move(next);
    remaining -= dt;
  }
  return cur;
}

PureState dense_propagate(const PureState& state, const PairModel& m, double t) {
  if (m.n > 10) throw std::invalid_argument("dense_propagate: n must be <= 10");
  const ExactHamiltonian H(m);
  const std::size_t dim = H.dim();
  Eigen::MatrixXcd Hd(dim, dim);
  std::vector<cplx> e(dim), col(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    std::fill(e.begin(), e.end(), cplx(0.0));
    e[j] = 1.0;
    H.apply(e, col);
    for (std::size_t i = 0; i < dim; ++i) Hd(i, j) = col[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Hd);
  Eigen::VectorXcd psi(dim);
  for (std::size_t i = 0; i < dim; ++i) psi[i] = state.amp[i];
  Eigen::VectorXcd proj = es.eigenvectors().adjoint() * psi;
  for (std::size_t k = 0; k < dim; ++k)
    proj[k] *= std::exp(cplx(0.0, -es.eigenvalues()[k] * t));
  psi = es.eigenvectors() * proj;
  PureState out;
  out.n = state.n;
  out.amp.assign(psi.data(), psi.data() + dim);
  return out;
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

namespace {

// psi_mu = S_mu psi for mu in {x, y, z}.
void collective_apply(const PureState& st, std::vector<cplx>& px,
                      std::vector<cplx>& py, std::vector<cplx>& pz) {
  const std::size_t dim = st.amp.size();
  px.assign(dim, cplx(0.0));
  py.assign(dim, cplx(0.0));
  pz.assign(dim, cplx(0.0));
  for (std::size_t s = 0; s < dim; ++s) {
    const int pop = int(std::popcount(s));
    const double z = 0.5 * (double(st.n) - 2.0 * double(pop));
    pz[s] = z * st.amp[s];
  }
  for (std::size_t i = 0; i < st.n; ++i) {
    const std::size_t bit = std::size_t(1) << i;
    for (std::size_t s0 = 0; s0 < dim; ++s0) {
      if (s0 & bit) continue;
      const std::size_t s1 = s0 | bit;
      const cplx a0 = st.amp[s0], a1 = st.amp[s1];
      px[s0] += 0.5 * a1;
      px[s1] += 0.5 * a0;
      py[s0] += cplx(0.0, -0.5) * a1;
      py[s1] += cplx(0.0, 0.5) * a0;
    }
  }
}

double re_dot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::real(std::conj(a[i]) * b[i]);
  return s;
}

}  // namespace

CollectiveMoments moments(const PureState& state, std::span<const double> theta_grid) {
  CollectiveMoments m;
  std::vector<cplx> px, py, pz;
  collective_apply(state, px, py, pz);
  m.sx = re_dot(state.amp, px);
  m.sy = re_dot(state.amp, py);
  m.sz = re_dot(state.amp, pz);
  m.sx2 = re_dot(px, px);
  m.sy2 = re_dot(py, py);
  m.sz2 = re_dot(pz, pz);
  m.syz = re_dot(py, pz);  // Re<Sy psi|Sz psi> = <{Sy,Sz}>/2

  const double var_z = m.sz2 - m.sz * m.sz;
  const double var_y = m.sy2 - m.sy * m.sy;
  const double cov = m.syz - m.sy * m.sz;

  m.theta.assign(theta_grid.begin(), theta_grid.end());
  m.var_theta.resize(m.theta.size());
  for (std::size_t k = 0; k < m.theta.size(); ++k) {
    const double c = std::cos(m.theta[k]), s = std::sin(m.theta[k]);
    m.var_theta[k] = c * c * var_z + s * s * var_y + 2.0 * s * c * cov;
  }

  const double tr = var_z + var_y;
  const double diff = var_z - var_y;
  const double rad = std::sqrt(0.25 * diff * diff + cov * cov);
  m.var_min = 0.5 * tr - rad;
  m.theta_min = 0.5 * std::atan2(2.0 * cov, diff);
  // atan2 gives the angle that maximizes the (z-like) component; check both
  // candidate axes and keep the minimizing one.
  {
    const double c = std::cos(m.theta_min), s = std::sin(m.theta_min);
    const double v = c * c * var_z + s * s * var_y + 2.0 * s * c * cov;
    if (std::abs(v - m.var_min) > 1e-9 * std::max(1.0, std::abs(m.var_min))) {
      m.theta_min += 0.5 * kPi;
    }
  }
  return m;
}

double squeezing_parameter(const CollectiveMoments& m, std::size_t n) {
  if (m.sx == 0.0) throw std::invalid_argument("squeezing_parameter: <Sx> is zero");
  return double(n) * m.var_min / (m.sx * m.sx);
}

}  // namespace sqz
