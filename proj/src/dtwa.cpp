// SPDX-License-Identifier: MIT

#include "squeezelab/dtwa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace sqz {

namespace {

Eigen::Matrix3d rotation_matrix(char axis, double angle) {
  // Matches the exact engine: expectation values transform as
  // <s>_new = R <s>_old under the global pulse exp(-i angle S_axis).
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  switch (axis) {
    case 'x':
      r(1, 1) = c; r(1, 2) = -s;
      r(2, 1) = s; r(2, 2) = c;
      break;
    case 'y':
      r(0, 0) = c; r(0, 2) = s;
      r(2, 0) = -s; r(2, 2) = c;
      break;
    case 'z':
      r(0, 0) = c; r(0, 1) = -s;
      r(1, 0) = s; r(1, 1) = c;
      break;
    default:
      throw std::invalid_argument("rotation axis must be 'x', 'y' or 'z'");
  }
  return r;
}

inline void cross(const double f[3], const double v[3], double out[3]) {
  out[0] = f[1] * v[2] - f[2] * v[1];
  out[1] = f[2] * v[0] - f[0] * v[2];
  out[2] = f[0] * v[1] - f[1] * v[0];
}

int axis_index(char axis) {
  switch (axis) {
    case 'x': return 0;
    case 'y': return 1;
    case 'z': return 2;
    default: throw std::invalid_argument("polarization axis must be 'x', 'y' or 'z'");
  }
}

}  // namespace

std::size_t ClusterPartition::state_size() const {
  std::size_t s = 0;
  for (const auto& c : clusters) s += c.is_pair() ? 15 : 3;
  return s;
}

ClusterPartition build_clusters(const CouplingGraph& g, int max_cluster_size) {
  const std::size_t n = g.size();
  if (n == 0) throw std::invalid_argument("build_clusters: empty graph");
  if (max_cluster_size < 1 || max_cluster_size > 2)
    throw std::invalid_argument("build_clusters: cluster size must be 1 or 2");

  ClusterPartition part;
  part.n_spins = n;
  if (max_cluster_size == 1) {
    for (std::size_t i = 0; i < n; ++i)
      part.clusters.push_back({int(i), -1, 0.0});
    return part;
  }

  struct Edge {
    double w;
    int i, j;
  };
  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = std::abs(g.J(Eigen::Index(i), Eigen::Index(j)));
      if (w > 0.0) edges.push_back({w, int(i), int(j)});
    }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.w != b.w) return a.w > b.w;  // strongest couple first
    if (a.i != b.i) return a.i < b.i;  // ties: lowest index pair
    return a.j < b.j;
  });

  std::vector<char> used(n, 0);
  for (const Edge& e : edges)
    if (!used[e.i] && !used[e.j]) {
      used[e.i] = used[e.j] = 1;
      part.clusters.push_back({e.i, e.j, e.w});
    }
  for (std::size_t i = 0; i < n; ++i)
    if (!used[i]) part.clusters.push_back({int(i), -1, 0.0});
  return part;
}

ClusterPartition singleton_partition(std::size_t n) {
  ClusterPartition part;
  part.n_spins = n;
  for (std::size_t i = 0; i < n; ++i)
    part.clusters.push_back({int(i), -1, 0.0});
  return part;
}

// ---------------------------------------------------------------------------
// DtwaSystem
// ---------------------------------------------------------------------------

DtwaSystem::DtwaSystem(const PairModel& model, const ClusterPartition& part)
    : n_(model.n), part_(part) {
  if (part_.n_spins != n_)
    throw std::invalid_argument("DtwaSystem: partition size does not match model");
  if (n_ == 0) throw std::invalid_argument("DtwaSystem: empty model");

  offset_.resize(part_.clusters.size());
  spin_slot_.assign(n_, std::numeric_limits<std::size_t>::max());
  pair_a_.assign(part_.clusters.size(), Eigen::Vector3d::Zero());
  mxy_ = model.cxy;
  mzz_ = model.czz;
  h_ = model.field;

  std::size_t off = 0;
  for (std::size_t k = 0; k < part_.clusters.size(); ++k) {
    const Cluster& c = part_.clusters[k];
    offset_[k] = off;
    if (c.a < 0 || std::size_t(c.a) >= n_ ||
        (c.is_pair() && (std::size_t(c.b) >= n_ || c.b == c.a)))
      throw std::invalid_argument("DtwaSystem: invalid cluster indices");
    if (spin_slot_[c.a] != std::numeric_limits<std::size_t>::max())
      throw std::invalid_argument("DtwaSystem: clusters overlap");
    spin_slot_[c.a] = off;
    if (c.is_pair()) {
      if (spin_slot_[c.b] != std::numeric_limits<std::size_t>::max())
        throw std::invalid_argument("DtwaSystem: clusters overlap");
      spin_slot_[c.b] = off + 3;
      pair_a_[k] = Eigen::Vector3d(model.cxy(c.a, c.b), model.cxy(c.a, c.b),
                                   model.czz(c.a, c.b));
      // Intra-cluster couplings are handled exactly; mask them out of the
      // mean-field matrices.
      mxy_(c.a, c.b) = mxy_(c.b, c.a) = 0.0;
      mzz_(c.a, c.b) = mzz_(c.b, c.a) = 0.0;
      off += 15;
    } else {
      off += 3;
    }
  }
  state_size_ = off;
  for (std::size_t i = 0; i < n_; ++i)
    if (spin_slot_[i] == std::numeric_limits<std::size_t>::max())
      throw std::invalid_argument("DtwaSystem: partition must cover every spin");

  max_coupling_ = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      max_coupling_ = std::max(
          {max_coupling_, std::abs(model.cxy(i, j)), std::abs(model.czz(i, j))});
}

DtwaSystem::Scratch DtwaSystem::make_scratch() const {
  Scratch s;
  s.m.resize(Eigen::Index(n_), 3);
  s.f.resize(Eigen::Index(n_), 3);
  s.k1.resize(state_size_);
  s.k2.resize(state_size_);
  s.k3.resize(state_size_);
  s.k4.resize(state_size_);
  s.ytmp.resize(state_size_);
  return s;
}

void DtwaSystem::sample(std::span<double> y, double eta, char axis,
                        Rng& rng) const {
  if (y.size() != state_size_)
    throw std::invalid_argument("DtwaSystem::sample: state size mismatch");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("DtwaSystem::sample: eta must be in [0,1]");
  const int ax = axis_index(axis);
  const double p_flip = 0.5 * (1.0 - eta);
  // Three uniforms per spin, in spin order, regardless of eta: the stream
  // layout never depends on the polarization.
  for (std::size_t i = 0; i < n_; ++i) {
    const double u_flip = rng.uniform01();
    const double u1 = rng.uniform01();
    const double u2 = rng.uniform01();
    double v[3];
    v[ax] = (u_flip < p_flip) ? -0.5 : 0.5;
    v[(ax + 1) % 3] = (u1 < 0.5) ? -0.5 : 0.5;
    v[(ax + 2) % 3] = (u2 < 0.5) ? -0.5 : 0.5;
    const std::size_t o = spin_slot_[i];
    y[o] = v[0];
    y[o + 1] = v[1];
    y[o + 2] = v[2];
  }
  // Pair correlation blocks: outer products of the sampled member vectors.
  for (std::size_t k = 0; k < part_.clusters.size(); ++k) {
    if (!part_.clusters[k].is_pair()) continue;
    const std::size_t o = offset_[k];
    for (int al = 0; al < 3; ++al)
      for (int be = 0; be < 3; ++be)
        y[o + 6 + 3 * al + be] = y[o + al] * y[o + 3 + be];
  }
}

void DtwaSystem::mean_initial(std::span<double> y, double eta, char axis) const {
  if (y.size() != state_size_)
    throw std::invalid_argument("DtwaSystem::mean_initial: state size mismatch");
  const int ax = axis_index(axis);
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < n_; ++i) y[spin_slot_[i] + ax] = 0.5 * eta;
  for (std::size_t k = 0; k < part_.clusters.size(); ++k) {
    if (!part_.clusters[k].is_pair()) continue;
    const std::size_t o = offset_[k];
    for (int al = 0; al < 3; ++al)
      for (int be = 0; be < 3; ++be)
        y[o + 6 + 3 * al + be] = y[o + al] * y[o + 3 + be];
  }
}

void DtwaSystem::rotate(std::span<double> y, char axis, double angle) const {
  if (y.size() != state_size_)
    throw std::invalid_argument("DtwaSystem::rotate: state size mismatch");
  const Eigen::Matrix3d r = rotation_matrix(axis, angle);
  using RowMat3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;
  for (std::size_t k = 0; k < part_.clusters.size(); ++k) {
    const std::size_t o = offset_[k];
    Eigen::Map<Eigen::Vector3d> a(y.data() + o);
    a = (r * a).eval();
    if (part_.clusters[k].is_pair()) {
      Eigen::Map<Eigen::Vector3d> b(y.data() + o + 3);
      b = (r * b).eval();
      Eigen::Map<RowMat3> c(y.data() + o + 6);
      c = (r * c * r.transpose()).eval();
    }
  }
}

void DtwaSystem::rhs(const double* y, double* dy, Scratch& s) const {
  // Gather one-body vectors and build the mean fields felt by each spin
  // (external field plus all couplings outside the spin's own cluster).
  for (std::size_t i = 0; i < n_; ++i) {
    const double* m = y + spin_slot_[i];
    s.m(Eigen::Index(i), 0) = m[0];
    s.m(Eigen::Index(i), 1) = m[1];
    s.m(Eigen::Index(i), 2) = m[2];
  }
  s.f.col(0).noalias() = mxy_ * s.m.col(0);
  s.f.col(1).noalias() = mxy_ * s.m.col(1);
  s.f.col(2).noalias() = mzz_ * s.m.col(2);

  for (std::size_t k = 0; k < part_.clusters.size(); ++k) {
    const Cluster& cl = part_.clusters[k];
    const std::size_t o = offset_[k];
    const Eigen::Index ia = cl.a;
    double fa[3] = {s.f(ia, 0) + h_(0), s.f(ia, 1) + h_(1), s.f(ia, 2) + h_(2)};
    if (!cl.is_pair()) {
      cross(fa, y + o, dy + o);
      continue;
    }
    const Eigen::Index ib = cl.b;
    double fb[3] = {s.f(ib, 0) + h_(0), s.f(ib, 1) + h_(1), s.f(ib, 2) + h_(2)};
    const Eigen::Vector3d& A = pair_a_[k];
    const double* a = y + o;
    const double* b = y + o + 3;
    const double* C = y + o + 6;  // row-major: C[3*alpha + beta]
    double* da = dy + o;
    double* db = dy + o + 3;
    double* dC = dy + o + 6;

    // Exact intra-pair Heisenberg terms for the one-body components:
    //   d<s^a_al> = eps_{al,be,ga} A_be C_{ga,be},
    //   d<s^b_al> = eps_{al,be,ga} A_be C_{be,ga}.
    double t[3];
    da[0] = A(1) * C[3 * 2 + 1] - A(2) * C[3 * 1 + 2];
    da[1] = A(2) * C[3 * 0 + 2] - A(0) * C[3 * 2 + 0];
    da[2] = A(0) * C[3 * 1 + 0] - A(1) * C[3 * 0 + 1];
    cross(fa, a, t);
    da[0] += t[0]; da[1] += t[1]; da[2] += t[2];

    db[0] = A(1) * C[3 * 1 + 2] - A(2) * C[3 * 2 + 1];
    db[1] = A(2) * C[3 * 2 + 0] - A(0) * C[3 * 0 + 2];
    db[2] = A(0) * C[3 * 0 + 1] - A(1) * C[3 * 1 + 0];
    cross(fb, b, t);
    db[0] += t[0]; db[1] += t[1]; db[2] += t[2];

    // Correlation block: the field of each member rotates its own index,
    // and the intra-pair coupling mixes in the one-body vectors through the
    // spin-1/2 product identity s_mu s_al = delta/4 + (i/2) eps s_ga:
    //   dC_{al,be} = (f_a x C_col(be))_al + (f_b x C_row(al))_be
    //                - (A_al/4) eps_{al,be,nu} b_nu + (A_be/4) eps_{al,be,mu} a_mu.
    for (int be = 0; be < 3; ++be) {
      const double col[3] = {C[be], C[3 + be], C[6 + be]};
      cross(fa, col, t);
      dC[be] = t[0];
      dC[3 + be] = t[1];
      dC[6 + be] = t[2];
    }
    for (int al = 0; al < 3; ++al) {
      cross(fb, C + 3 * al, t);
      dC[3 * al] += t[0];
      dC[3 * al + 1] += t[1];
      dC[3 * al + 2] += t[2];
    }
    dC[3 * 0 + 1] += -(A(0) / 4) * b[2] + (A(1) / 4) * a[2];
    dC[3 * 1 + 0] += (A(1) / 4) * b[2] - (A(0) / 4) * a[2];
    dC[3 * 0 + 2] += (A(0) / 4) * b[1] - (A(2) / 4) * a[1];
    dC[3 * 2 + 0] += -(A(2) / 4) * b[1] + (A(0) / 4) * a[1];
    dC[3 * 1 + 2] += -(A(1) / 4) * b[0] + (A(2) / 4) * a[0];
    dC[3 * 2 + 1] += (A(2) / 4) * b[0] - (A(1) / 4) * a[0];
  }
}

void DtwaSystem::step_rk4(std::span<double> y, double dt, Scratch& s) const {
  const std::size_t m = state_size_;
  if (y.size() != m) throw std::invalid_argument("step_rk4: state size mismatch");
  rhs(y.data(), s.k1.data(), s);
  for (std::size_t i = 0; i < m; ++i) s.ytmp[i] = y[i] + 0.5 * dt * s.k1[i];
  rhs(s.ytmp.data(), s.k2.data(), s);
  for (std::size_t i = 0; i < m; ++i) s.ytmp[i] = y[i] + 0.5 * dt * s.k2[i];
  rhs(s.ytmp.data(), s.k3.data(), s);
  for (std::size_t i = 0; i < m; ++i) s.ytmp[i] = y[i] + dt * s.k3[i];
  rhs(s.ytmp.data(), s.k4.data(), s);
  for (std::size_t i = 0; i < m; ++i)
    y[i] += dt / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
}

void DtwaSystem::observe(const double* y, double out[6]) const {
  double mx = 0, my = 0, mz = 0;       // collective first moments
  double szz = 0, syy = 0, syz = 0;    // same-site products to subtract
  double pzz = 0, pyy = 0, pyz = 0;    // exact intra-pair corrections
  for (std::size_t k = 0; k < part_.clusters.size(); ++k) {
    const std::size_t o = offset_[k];
    const double* a = y + o;
    mx += a[0]; my += a[1]; mz += a[2];
    szz += a[2] * a[2]; syy += a[1] * a[1]; syz += a[1] * a[2];
    if (!part_.clusters[k].is_pair()) continue;
    const double* b = y + o + 3;
    mx += b[0]; my += b[1]; mz += b[2];
    szz += b[2] * b[2]; syy += b[1] * b[1]; syz += b[1] * b[2];
    const double* C = y + o + 6;
    pzz += 2.0 * C[3 * 2 + 2] - 2.0 * a[2] * b[2];
    pyy += 2.0 * C[3 * 1 + 1] - 2.0 * a[1] * b[1];
    pyz += C[3 * 1 + 2] + C[3 * 2 + 1] - a[1] * b[2] - a[2] * b[1];
  }
  // Cross-site terms use mean-field products (exact ones inside pairs);
  // same-site terms are fixed by the operator identities s_mu s_mu = 1/4 and
  // {s_mu, s_nu} = 0 for mu != nu.
  const double quarter_n = 0.25 * double(n_);
  out[0] = mx;
  out[1] = my;
  out[2] = mz;
  out[3] = quarter_n + mz * mz - szz + pzz;
  out[4] = quarter_n + my * my - syy + pyy;
  out[5] = my * mz - syz + pyz;
}

double DtwaSystem::default_dt() const {
  const double scale = std::max(max_coupling_, h_.norm());
  return scale > 0.0 ? 1.0 / (50.0 * scale) : 0.0;
}

// ---------------------------------------------------------------------------
// Trajectory driver and ensemble averaging
// ---------------------------------------------------------------------------

void evolve_trajectory(
    const DtwaSystem& system, std::span<double> y,
    const std::vector<DtwaStage>& stages, double dt, DtwaSystem::Scratch& s,
    const std::function<void(std::size_t, double, const double*)>& on_record) {
  if (!(dt > 0.0))
    throw std::invalid_argument("evolve_trajectory: step size must be positive");
  double t_global = 0.0;
  std::size_t rec = 0;
  for (const DtwaStage& stage : stages) {
    if (stage.duration < 0.0)
      throw std::invalid_argument("evolve_trajectory: negative stage duration");
    if (stage.rot_axis != 0) system.rotate(y, stage.rot_axis, stage.rot_angle);
    double tau = 0.0;
    auto advance_to = [&](double target) {
      const double seg = target - tau;
      if (seg < -1e-12)
        throw std::invalid_argument(
            "evolve_trajectory: record times must be non-decreasing");
      if (seg > 0.0) {
        const int nsteps = std::max(1, int(std::ceil(seg / dt - 1e-12)));
        const double h = seg / nsteps;
        for (int k = 0; k < nsteps; ++k) system.step_rk4(y, h, s);
      }
      tau = target;
    };
    for (double tr : stage.record) {
      if (tr < 0.0 || tr > stage.duration * (1.0 + 1e-12) + 1e-15)
        throw std::invalid_argument(
            "evolve_trajectory: record time outside its stage");
      advance_to(std::min(tr, stage.duration));
      for (std::size_t i = 0; i < y.size(); ++i)
        if (!std::isfinite(y[i]))
          throw std::runtime_error(
              "evolve_trajectory: state diverged; reduce the integrator step");
      on_record(rec++, t_global + tau, y.data());
    }
    advance_to(stage.duration);
    t_global += stage.duration;
  }
}

double DtwaSeries::var_theta(std::size_t k, double theta) const {
  const double vz = sz2[k] - sz[k] * sz[k];
  const double vy = sy2[k] - sy[k] * sy[k];
  const double cv = syz[k] - sy[k] * sz[k];
  const double c = std::cos(theta), s = std::sin(theta);
  return c * c * vz + s * s * vy + 2.0 * c * s * cv;
}

double DtwaSeries::var_min(std::size_t k) const {
  const double vz = sz2[k] - sz[k] * sz[k];
  const double vy = sy2[k] - sy[k] * sy[k];
  const double cv = syz[k] - sy[k] * sz[k];
  const double mid = 0.5 * (vz + vy);
  const double rad = std::sqrt(0.25 * (vz - vy) * (vz - vy) + cv * cv);
  return mid - rad;
}

DtwaSeries run_dtwa(const PairModel& model, const ClusterPartition& part,
                    const std::vector<DtwaStage>& stages,
                    const DtwaOptions& opts) {
  if (opts.n_traj < 2)
    throw std::invalid_argument("run_dtwa: need at least two trajectories");
  DtwaSystem system(model, part);

  double total = 0.0;
  std::vector<double> tgrid;
  for (const DtwaStage& st : stages) {
    for (double tr : st.record) tgrid.push_back(total + tr);
    total += st.duration;
  }
  double dt = opts.dt > 0.0 ? opts.dt : system.default_dt();
  if (!(dt > 0.0)) dt = total > 0.0 ? total / 1000.0 : 1.0;

  const std::size_t n_rec = tgrid.size();
  const int n_traj = opts.n_traj;
  std::vector<double> slots(std::size_t(n_traj) * n_rec * 6, 0.0);

  auto worker = [&](int lo, int hi) {
    DtwaSystem::Scratch scratch = system.make_scratch();
    std::vector<double> y(system.state_size());
    for (int traj = lo; traj < hi; ++traj) {
      Rng rng(derive_stream_seed(opts.seed, 1000 + std::uint64_t(traj)));
      system.sample(y, opts.eta, opts.axis, rng);
      evolve_trajectory(system, y, stages, dt, scratch,
                        [&](std::size_t rec, double, const double* yy) {
                          system.observe(
                              yy, &slots[(std::size_t(traj) * n_rec + rec) * 6]);
                        });
    }
  };

  const int threads = std::clamp(opts.threads, 1, n_traj);
  if (threads == 1) {
    worker(0, n_traj);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int block = (n_traj + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const int lo = w * block;
      const int hi = std::min(n_traj, lo + block);
      if (lo < hi) pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  DtwaSeries out;
  out.t = tgrid;
  out.n_spins = model.n;
  out.n_traj = n_traj;
  std::vector<std::vector<double>*> series = {&out.sx,  &out.sy,  &out.sz,
                                              &out.sz2, &out.sy2, &out.syz};
  std::vector<std::vector<double>*> errs = {&out.sx_err,  &out.sy_err,
                                            &out.sz_err,  &out.sz2_err,
                                            &out.sy2_err, &out.syz_err};
  std::vector<double> vals(n_traj);
  for (int obs = 0; obs < 6; ++obs) {
    series[obs]->resize(n_rec);
    errs[obs]->resize(n_rec);
    for (std::size_t rec = 0; rec < n_rec; ++rec) {
      for (int traj = 0; traj < n_traj; ++traj)
        vals[std::size_t(traj)] = slots[(std::size_t(traj) * n_rec + rec) * 6 +
                                        std::size_t(obs)];
      const MeanErr me = mean_and_stderr(vals);
      (*series[obs])[rec] = me.mean;
      (*errs[obs])[rec] = me.stderr_mean;
    }
  }
  return out;
}

}  // namespace sqz
