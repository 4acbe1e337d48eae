// SPDX-License-Identifier: MIT
//
// Discrete truncated Wigner engine with one- and two-spin clusters.
//
// Spins are grouped into clusters of size <= 2 by greedy matching on the
// pair coupling strength. Each trajectory carries, per cluster, either a
// 3-component Bloch vector <s_a> (singleton) or the 15 independent
// expectation values of a spin pair: a_a = <s_a x 1>, b_b = <1 x s_b> and
// the 3x3 correlation block C_ab = <s_a x s_b>. Intra-cluster terms evolve
// under the exact Heisenberg equations (a closed linear system on those
// components); couplings to spins outside the cluster are replaced by the
// instantaneous one-body expectations of their own clusters (mean field).
//
// Initial conditions sample the discrete Wigner function of a polarized
// product state: the component along the polarization axis is +1/2
// deterministically (-1/2 for the flipped fraction, drawn with probability
// (1-eta)/2 per spin; the flipped population is sampled mirrored about the
// flipped axis), and each transverse component is an independent fair coin
// over {+1/2, -1/2}. Pair correlation blocks start as the outer product of
// the two sampled one-body vectors.
//
// Collective second moments are estimated with exact intra-cluster pair
// components where available, products of one-body components across
// clusters, and the same-site operator identities s_mu s_mu = 1/4,
// {s_mu, s_nu} = 0 (mu != nu) instead of sampled same-site products.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "squeezelab/common.hpp"
#include "squeezelab/model.hpp"

namespace sqz {

struct Cluster {
  int a = -1;
  int b = -1;          // -1 for singletons
  double score = 0.0;  // pairing coupling strength, 0 for singletons
  bool is_pair() const { return b >= 0; }
};

struct ClusterPartition {
  std::vector<Cluster> clusters;  // disjoint, union = all spins
  std::size_t n_spins = 0;
  std::size_t state_size() const;  // 3 per singleton + 15 per pair
};

// Greedy maximum-weight matching: sort pairs by coupling strength
// (descending; ties broken by lowest index pair), accept a pair when both
// spins are still free; leftovers become singletons. max_cluster_size = 1
// yields the all-singletons partition (original discrete TWA).
ClusterPartition build_clusters(const CouplingGraph& g, int max_cluster_size = 2);

// All-singletons partition over n spins.
ClusterPartition singleton_partition(std::size_t n);

// One experiment segment: an optional global rotation pulse applied at the
// start (exp(-i angle S_axis), matching the exact engine's rotate_global),
// then free evolution for `duration` with observables recorded at the listed
// times (relative to the stage start, non-decreasing, within [0, duration];
// 0 records immediately after the pulse).
struct DtwaStage {
  char rot_axis = 0;  // 0 = no pulse, else 'x', 'y' or 'z'
  double rot_angle = 0.0;
  double duration = 0.0;  // us
  std::vector<double> record;
};

struct DtwaOptions {
  int n_traj = 1024;
  double dt = 0.0;  // integrator step, us; 0 = auto: 1 / (50 max coupling)
  double eta = 1.0;  // polarization
  char axis = 'x';   // initial polarization axis
  std::uint64_t seed = 0;
  int threads = 1;
};

// Trajectory-averaged collective observables on the concatenated record grid.
// Second moments are symmetrized: sz2 = <Sz^2>, sy2 = <Sy^2>,
// syz = <{Sy,Sz}>/2. Standard errors are over trajectories.
struct DtwaSeries {
  std::vector<double> t;
  std::vector<double> sx, sy, sz, sz2, sy2, syz;
  std::vector<double> sx_err, sy_err, sz_err, sz2_err, sy2_err, syz_err;
  std::size_t n_spins = 0;
  int n_traj = 0;

  // Variance of S_theta = cos(theta) Sz + sin(theta) Sy at record index k,
  // and its minimum over theta (smallest eigenvalue of the (Sz, Sy)
  // covariance block).
  double var_theta(std::size_t k, double theta) const;
  double var_min(std::size_t k) const;
};

class DtwaSystem {
 public:
  DtwaSystem(const PairModel& model, const ClusterPartition& part);

  std::size_t n_spins() const { return n_; }
  std::size_t state_size() const { return state_size_; }
  const ClusterPartition& partition() const { return part_; }

  // Scratch buffers for the integrator; one per thread.
  struct Scratch {
    Eigen::MatrixXd m, f;  // n x 3 one-body vectors and mean fields
    std::vector<double> k1, k2, k3, k4, ytmp;
  };
  Scratch make_scratch() const;

  // Draw one phase-space sample (3 uniforms consumed per spin, in spin
  // order, independent of eta so streams stay aligned across configs).
  void sample(std::span<double> y, double eta, char axis, Rng& rng) const;

  // Deterministic Wigner-mean initial state (exact first moments; pair
  // blocks are outer products). Evolving this single trajectory reproduces
  // the exact quantum moments of any set of mutually isolated clusters.
  void mean_initial(std::span<double> y, double eta, char axis) const;

  // Global rotation exp(-i angle S_axis) applied to every cluster.
  void rotate(std::span<double> y, char axis, double angle) const;

  void rhs(const double* y, double* dy, Scratch& s) const;
  void step_rk4(std::span<double> y, double dt, Scratch& s) const;

  // out = {Sx, Sy, Sz, <Sz^2>, <Sy^2>, <{Sy,Sz}>/2} for one trajectory.
  void observe(const double* y, double out[6]) const;

  // 1 / (50 max(|coupling|, |field|)); 0 if the model is free.
  double default_dt() const;

 private:
  std::size_t n_ = 0;
  std::size_t state_size_ = 0;
  ClusterPartition part_;
  std::vector<std::size_t> offset_;     // state offset per cluster
  std::vector<std::size_t> spin_slot_;  // spin -> its m-vector offset in y
  Eigen::MatrixXd mxy_, mzz_;           // couplings with intra-cluster zeroed
  std::vector<Eigen::Vector3d> pair_a_;  // (cxy, cxy, czz) per cluster (pairs)
  Eigen::Vector3d h_;
  double max_coupling_ = 0.0;
};

// Integrate one trajectory through a stage schedule with fixed step <= dt,
// invoking on_record(record_index, global_time, y) at every record point.
// Throws if the state stops being finite (diverged integration).
void evolve_trajectory(
    const DtwaSystem& system, std::span<double> y,
    const std::vector<DtwaStage>& stages, double dt, DtwaSystem::Scratch& s,
    const std::function<void(std::size_t, double, const double*)>& on_record);

// Run n_traj independent trajectories through the stage schedule and average
// the collective observables. Deterministic for a fixed seed: trajectory
// seeds are derived by counter, per-trajectory results land in indexed slots,
// and the reduction is a fixed-order pairwise tree, so the output is
// identical for any thread count.
DtwaSeries run_dtwa(const PairModel& model, const ClusterPartition& part,
                    const std::vector<DtwaStage>& stages,
                    const DtwaOptions& opts);

}  // namespace sqz
