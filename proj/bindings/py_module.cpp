// SPDX-License-Identifier: MIT
//
// Python bindings for the squeezelab core: ensemble geometry, coupling
// graphs, the exact and cluster-trajectory engines, protocol sequencing,
// closed-form references, decay fitting, and the config-driven runner.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>
#include <string>

#include "squeezelab/analytics.hpp"
#include "squeezelab/common.hpp"
#include "squeezelab/dtwa.hpp"
#include "squeezelab/ensemble.hpp"
#include "squeezelab/exact.hpp"
#include "squeezelab/fit.hpp"
#include "squeezelab/io.hpp"
#include "squeezelab/model.hpp"
#include "squeezelab/protocol.hpp"
#include "squeezelab/runner.hpp"

namespace py = pybind11;
using namespace sqz;

namespace {

char axis_char(const std::string& axis) {
  if (axis.size() != 1 || (axis != "x" && axis != "y" && axis != "z"))
    throw std::invalid_argument("axis must be one of 'x', 'y', 'z'");
  return axis[0];
}

std::string status_string(SpinStatus s) {
  switch (s) {
    case SpinStatus::active: return "active";
    case SpinStatus::shelved: return "shelved";
    case SpinStatus::depolarized: return "depolarized";
  }
  return "active";
}

py::array_t<double> positions_array(const SpinEnsemble& e) {
  py::array_t<double> out({py::ssize_t(e.size()), py::ssize_t(3)});
  auto buf = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < py::ssize_t(e.size()); ++i)
    for (py::ssize_t k = 0; k < 3; ++k) buf(i, k) = e.positions[i][k];
  return out;
}

SpinEnsemble removal_wrapper(const SpinEnsemble& e, const std::string& kind,
                             double radius, std::uint64_t seed, double j0) {
  RemovalModel model{removal_kind_from_string(kind), radius};
  if (model.kind == RemovalKind::shelving) {
    const CouplingGraph g = build_coupling(e, j0);
    return apply_removal(e, model, &g, seed);
  }
  return apply_removal(e, model, nullptr, seed);
}

}  // namespace

PYBIND11_MODULE(_squeezelab, m) {
  m.doc() =
      "Spin-squeezing simulation toolkit: positionally disordered dipolar "
      "ensembles, exact and cluster-trajectory engines, decay fitting and "
      "the variance dictionary.";
  m.attr("__version__") = kCodeVersion;
  m.attr("J0_DEFAULT") = kJ0Default;

  m.def("derive_stream_seed", &derive_stream_seed, py::arg("master"),
        py::arg("stream"), "Counter-derived child seed of a master seed.");
  m.def(
      "ppm_nm_to_per_nm2",
      [](double ppm_nm) { return ppm_nm_to_per_nm2(ppm_nm); },
      py::arg("ppm_nm"),
      "Areal density (nm^-2) of a layer quoted in ppm*nm of diamond carbon.");

  // -- ensemble ------------------------------------------------------------
  py::class_<Region>(m, "Region")
      .def(py::init([](double lx, double ly, double d) {
             return Region{lx, ly, d};
           }),
           py::arg("lx"), py::arg("ly"), py::arg("d"))
      .def_readwrite("lx", &Region::lx)
      .def_readwrite("ly", &Region::ly)
      .def_readwrite("d", &Region::d);

  py::class_<SpinEnsemble>(m, "SpinEnsemble")
      .def_property_readonly("size", &SpinEnsemble::size)
      .def_property_readonly("active_count", &SpinEnsemble::active_count)
      .def_property_readonly("positions", &positions_array,
                             "(n, 3) positions in nm")
      .def_property_readonly("status",
                             [](const SpinEnsemble& e) {
                               std::vector<std::string> out;
                               out.reserve(e.status.size());
                               for (auto s : e.status)
                                 out.push_back(status_string(s));
                               return out;
                             })
      .def_readonly("seed", &SpinEnsemble::seed)
      .def_readonly("density", &SpinEnsemble::density);

  m.def("sample_positions", &sample_positions, py::arg("density"),
        py::arg("region"), py::arg("seed"),
        "Poisson-sampled layer at an areal density (nm^-2).");
  m.def("sample_positions_fixed", &sample_positions_fixed, py::arg("count"),
        py::arg("region"), py::arg("seed"), "Fixed spin count in a region.");
  m.def("apply_removal", &removal_wrapper, py::arg("ensemble"),
        py::arg("kind"), py::arg("radius"), py::arg("seed") = 0,
        py::arg("j0") = kJ0Default,
        "Removal prelude: kind is none | hard_cutoff | shelving | "
        "depolarization; radius in nm.");
  m.def("nearest_active_distances", &nearest_active_distances,
        py::arg("ensemble"));

  // -- model ---------------------------------------------------------------
  py::class_<CouplingGraph>(m, "CouplingGraph")
      .def_readonly("J", &CouplingGraph::J)
      .def_readonly("spins", &CouplingGraph::spins)
      .def_readonly("row_sum", &CouplingGraph::row_sum)
      .def_readonly("J0", &CouplingGraph::J0)
      .def_property_readonly("size", &CouplingGraph::size);

  m.def("build_coupling",
        py::overload_cast<const SpinEnsemble&, double>(&build_coupling),
        py::arg("ensemble"), py::arg("j0") = kJ0Default,
        "Dipolar coupling graph J0/r^3 over the active spins.");
  m.def("mean_field_chi", &mean_field_chi, py::arg("graph"),
        "Observable twisting rate (2/N) sum_{i<j} J_ij.");

  py::class_<PairModel>(m, "PairModel")
      .def_static("xxz", &PairModel::xxz, py::arg("graph"))
      .def_static("oat", &PairModel::oat, py::arg("chi"), py::arg("n"))
      .def_static("dimer", &PairModel::dimer, py::arg("J"))
      .def("add_transverse_field", &PairModel::add_transverse_field,
           py::arg("hx"), py::return_value_policy::reference_internal)
      .def_readonly("n", &PairModel::n);

  // -- exact engine ----------------------------------------------------------
  py::class_<PureState>(m, "PureState")
      .def_property_readonly("n", [](const PureState& s) { return s.n; })
      .def_property_readonly("amp",
                             [](const PureState& s) {
                               return py::array_t<cplx>(
                                   py::ssize_t(s.amp.size()), s.amp.data());
                             })
      .def("norm", &PureState::norm);

  m.def(
      "prepare_polarized",
      [](std::size_t n, const std::string& axis, double eta,
         std::uint64_t seed) {
        return prepare_polarized(n, axis_char(axis), eta, seed);
      },
      py::arg("n"), py::arg("axis") = "x", py::arg("eta") = 1.0,
      py::arg("seed") = 0);
  m.def(
      "rotate_global",
      [](const PureState& s, const std::string& axis, double angle) {
        return rotate_global(s, axis_char(axis), angle);
      },
      py::arg("state"), py::arg("axis"), py::arg("angle"),
      "exp(-i angle S_axis) |state>");
  m.def(
      "krylov_propagate",
      [](const PureState& s, const PairModel& model, double t, double tol) {
        ExactHamiltonian H(model);
        KrylovOptions opts;
        opts.tol = tol;
        py::gil_scoped_release release;
        return krylov_propagate(s, H, t, opts);
      },
      py::arg("state"), py::arg("model"), py::arg("t"),
      py::arg("tol") = 1e-10);
  m.def(
      "dense_propagate",
      [](const PureState& s, const PairModel& model, double t) {
        return dense_propagate(s, model, t);
      },
      py::arg("state"), py::arg("model"), py::arg("t"));
  m.def(
      "energy",
      [](const PureState& s, const PairModel& model) {
        return ExactHamiltonian(model).energy(s);
      },
      py::arg("state"), py::arg("model"), "<state|H|state>");

  py::class_<CollectiveMoments>(m, "CollectiveMoments")
      .def_readonly("sx", &CollectiveMoments::sx)
      .def_readonly("sy", &CollectiveMoments::sy)
      .def_readonly("sz", &CollectiveMoments::sz)
      .def_readonly("sx2", &CollectiveMoments::sx2)
      .def_readonly("sy2", &CollectiveMoments::sy2)
      .def_readonly("sz2", &CollectiveMoments::sz2)
      .def_readonly("syz", &CollectiveMoments::syz)
      .def_readonly("theta", &CollectiveMoments::theta)
      .def_readonly("var_theta", &CollectiveMoments::var_theta)
      .def_readonly("var_min", &CollectiveMoments::var_min)
      .def_readonly("theta_min", &CollectiveMoments::theta_min);

  m.def(
      "moments",
      [](const PureState& s, const std::vector<double>& theta_grid) {
        return moments(s, theta_grid);
      },
      py::arg("state"), py::arg("theta_grid") = std::vector<double>{});
  m.def("squeezing_parameter", &squeezing_parameter, py::arg("moments"),
        py::arg("n"));

  // -- cluster trajectory engine ---------------------------------------------
  py::class_<ClusterPartition>(m, "ClusterPartition")
      .def_property_readonly("n_spins",
                             [](const ClusterPartition& p) { return p.n_spins; })
      .def_property_readonly("n_clusters",
                             [](const ClusterPartition& p) {
                               return p.clusters.size();
                             })
      .def_property_readonly("pairs", [](const ClusterPartition& p) {
        std::vector<std::pair<int, int>> out;
        for (const auto& c : p.clusters)
          if (c.is_pair()) out.emplace_back(c.a, c.b);
        return out;
      });

  m.def("build_clusters", &build_clusters, py::arg("graph"),
        py::arg("max_cluster_size") = 2);
  m.def("singleton_partition", &singleton_partition, py::arg("n"));

  py::class_<DtwaStage>(m, "DtwaStage")
      .def(py::init([](const std::string& rot_axis, double rot_angle,
                       double duration, std::vector<double> record) {
             DtwaStage st;
             st.rot_axis = rot_axis.empty() ? 0 : axis_char(rot_axis);
             st.rot_angle = rot_angle;
             st.duration = duration;
             st.record = std::move(record);
             return st;
           }),
           py::arg("rot_axis") = "", py::arg("rot_angle") = 0.0,
           py::arg("duration") = 0.0,
           py::arg("record") = std::vector<double>{});

  py::class_<DtwaOptions>(m, "DtwaOptions")
      .def(py::init<>())
      .def_readwrite("n_traj", &DtwaOptions::n_traj)
      .def_readwrite("dt", &DtwaOptions::dt)
      .def_readwrite("eta", &DtwaOptions::eta)
      .def_readwrite("seed", &DtwaOptions::seed)
      .def_readwrite("threads", &DtwaOptions::threads);

  py::class_<DtwaSeries>(m, "DtwaSeries")
      .def_readonly("t", &DtwaSeries::t)
      .def_readonly("sx", &DtwaSeries::sx)
      .def_readonly("sy", &DtwaSeries::sy)
      .def_readonly("sz", &DtwaSeries::sz)
      .def_readonly("sz2", &DtwaSeries::sz2)
      .def_readonly("sy2", &DtwaSeries::sy2)
      .def_readonly("syz", &DtwaSeries::syz)
      .def_readonly("sx_err", &DtwaSeries::sx_err)
      .def_readonly("sy_err", &DtwaSeries::sy_err)
      .def_readonly("n_spins", &DtwaSeries::n_spins)
      .def_readonly("n_traj", &DtwaSeries::n_traj)
      .def("var_theta", &DtwaSeries::var_theta, py::arg("k"), py::arg("theta"))
      .def("var_min", &DtwaSeries::var_min, py::arg("k"));

  m.def(
      "run_dtwa",
      [](const PairModel& model, const ClusterPartition& part,
         const std::vector<DtwaStage>& stages, const DtwaOptions& opts) {
        py::gil_scoped_release release;
        return run_dtwa(model, part, stages, opts);
      },
      py::arg("model"), py::arg("clusters"), py::arg("stages"),
      py::arg("options"));

  // -- closed forms ----------------------------------------------------------
  py::class_<OatParams>(m, "OatParams")
      .def(py::init([](double chi, std::size_t n, double l, double var_sz,
                       double syz) {
             return OatParams{chi, n, l, var_sz, syz};
           }),
           py::arg("chi"), py::arg("n"), py::arg("l") = 0.0,
           py::arg("var_sz") = 0.0, py::arg("syz") = 0.0)
      .def_readwrite("chi", &OatParams::chi)
      .def_readwrite("n", &OatParams::n)
      .def_readwrite("l", &OatParams::l)
      .def_readwrite("var_sz", &OatParams::var_sz)
      .def_readwrite("syz", &OatParams::syz);

  m.def("oat_decay", &oat_decay, py::arg("params"), py::arg("t"));
  m.def("oat_t2", &oat_t2, py::arg("params"));
  m.def("oat_offset_time", &oat_offset_time, py::arg("params"));
  m.def("offset_time", &offset_time, py::arg("theta"), py::arg("chi"),
        py::arg("t_g"),
        "Readout time shift zeroing the (Sy, Sz) correlator.");
  m.def(
      "dimer_twisting",
      [](double phi_o, double J, double t) {
        const DimerXY v = dimer_twisting(phi_o, J, t);
        return py::make_tuple(v.sx, v.sy);
      },
      py::arg("phi_o"), py::arg("J"), py::arg("t"),
      "(Sx, Sy) of one tipped pair.");
  m.def("dimer_readout", &dimer_readout, py::arg("theta"), py::arg("J"),
        py::arg("t_g"), py::arg("t_r"));
  m.def(
      "chi_from_twisting",
      [](const std::vector<double>& t, const std::vector<double>& ratio,
         double theta_tip, double window) {
        return chi_from_twisting(t, ratio, theta_tip, window);
      },
      py::arg("t"), py::arg("ratio"), py::arg("theta_tip"),
      py::arg("window") = 0.2);

  py::class_<CrossoverParams>(m, "CrossoverParams")
      .def(py::init([](double density, double r_min, double j0) {
             return CrossoverParams{density, r_min, j0};
           }),
           py::arg("density"), py::arg("r_min"), py::arg("j0") = 1.0)
      .def_readwrite("density", &CrossoverParams::density)
      .def_readwrite("r_min", &CrossoverParams::r_min)
      .def_readwrite("j0", &CrossoverParams::j0);

  m.def("crossover_sx", &crossover_sx, py::arg("params"), py::arg("t"));
  m.def("crossover_log_decay", &crossover_log_decay, py::arg("params"),
        py::arg("t"));
  m.def("crossover_local_exponent", &crossover_local_exponent,
        py::arg("params"), py::arg("t"));
  m.def("crossover_time", &crossover_time, py::arg("params"));

  // -- protocol ----------------------------------------------------------------
  py::class_<QuenchPlan>(m, "QuenchPlan")
      .def(py::init<>())
      .def_readwrite("tg_grid", &QuenchPlan::tg_grid)
      .def_readwrite("theta_grid", &QuenchPlan::theta_grid)
      .def_readwrite("tr_grid", &QuenchPlan::tr_grid)
      .def_readwrite("engine", &QuenchPlan::engine)
      .def_readwrite("eta", &QuenchPlan::eta)
      .def_readwrite("n_traj", &QuenchPlan::n_traj)
      .def_readwrite("dt", &QuenchPlan::dt)
      .def_readwrite("seed", &QuenchPlan::seed)
      .def_readwrite("threads", &QuenchPlan::threads)
      .def_readwrite("j0", &QuenchPlan::j0)
      .def_property(
          "prelude",
          [](const QuenchPlan& p) {
            return py::make_tuple(to_string(p.prelude.kind), p.prelude.radius);
          },
          [](QuenchPlan& p, py::tuple kr) {
            p.prelude = {removal_kind_from_string(py::cast<std::string>(kr[0])),
                         py::cast<double>(kr[1])};
          },
          "(kind, radius_nm) removal applied before the quench");

  py::class_<ProtocolContext>(m, "ProtocolContext")
      .def_property_readonly(
          "n_active",
          [](const ProtocolContext& c) { return c.graph.size(); })
      .def_property_readonly(
          "chi", [](const ProtocolContext& c) { return mean_field_chi(c.graph); });

  m.def(
      "prepare_context",
      [](const QuenchPlan& plan, const SpinEnsemble& raw) {
        py::gil_scoped_release release;
        return prepare_context(plan, raw);
      },
      py::arg("plan"), py::arg("raw"));

  py::class_<SqueezeSeries>(m, "SqueezeSeries")
      .def_readonly("t", &SqueezeSeries::t)
      .def_readonly("xi2", &SqueezeSeries::xi2)
      .def_readonly("xi2_err", &SqueezeSeries::xi2_err)
      .def_readonly("xi2_ratio", &SqueezeSeries::xi2_ratio)
      .def_readonly("sx", &SqueezeSeries::sx)
      .def_readonly("sx_err", &SqueezeSeries::sx_err)
      .def_readonly("var_min", &SqueezeSeries::var_min)
      .def_readonly("n_spins", &SqueezeSeries::n_spins);

  m.def(
      "run_squeeze",
      [](const ProtocolContext& ctx) {
        py::gil_scoped_release release;
        return run_squeeze(ctx);
      },
      py::arg("context"),
      "Squeezing parameter along the generation quench from engine moments.");

  py::class_<TwistSeries>(m, "TwistSeries")
      .def_readonly("phi_o", &TwistSeries::phi_o)
      .def_readonly("t", &TwistSeries::t)
      .def_readonly("sx", &TwistSeries::sx)
      .def_readonly("sy", &TwistSeries::sy)
      .def_readonly("sx_err", &TwistSeries::sx_err)
      .def_readonly("sy_err", &TwistSeries::sy_err)
      .def_readonly("phi_p", &TwistSeries::phi_p);

  m.def(
      "run_twisting",
      [](const ProtocolContext& ctx, const std::vector<double>& phi_grid,
         const std::vector<double>& t_grid) {
        py::gil_scoped_release release;
        return run_twisting(ctx, phi_grid, t_grid);
      },
      py::arg("context"), py::arg("phi_grid"), py::arg("t_grid"));

  py::class_<RampSpec>(m, "RampSpec")
      .def(py::init([](double h0, double k, double duration, bool wait,
                       int steps) {
             return RampSpec{h0, k, duration, wait, steps};
           }),
           py::arg("h0"), py::arg("k"), py::arg("duration"),
           py::arg("wait") = false, py::arg("steps") = 200)
      .def_readwrite("h0", &RampSpec::h0)
      .def_readwrite("k", &RampSpec::k)
      .def_readwrite("duration", &RampSpec::duration);

  m.def("ramp_profile", &ramp_profile, py::arg("ramp"), py::arg("t"));

  py::class_<RampResult>(m, "RampResult")
      .def_property_readonly("status",
                             [](const RampResult& r) {
                               std::vector<std::string> out;
                               for (auto s : r.status)
                                 out.push_back(status_string(s));
                               return out;
                             })
      .def_readonly("sx_per_spin", &RampResult::sx_per_spin)
      .def_readonly("h_final", &RampResult::h_final);

  m.def(
      "run_adiabatic_ramp",
      [](const SpinEnsemble& e, const RampSpec& ramp, const std::string& engine,
         double j0, std::uint64_t seed) {
        py::gil_scoped_release release;
        return run_adiabatic_ramp(e, ramp, engine, j0, seed);
      },
      py::arg("ensemble"), py::arg("ramp"), py::arg("engine") = "exact",
      py::arg("j0") = kJ0Default, py::arg("seed") = 0);

  // -- decay fits and the variance dictionary ---------------------------------
  py::class_<DecayCurve>(m, "DecayCurve")
      .def(py::init([](std::vector<double> t, std::vector<double> value,
                       std::vector<double> err, double t_g, double theta) {
             DecayCurve c;
             c.t = std::move(t);
             c.value = std::move(value);
             c.err = std::move(err);
             c.t_g = t_g;
             c.theta = theta;
             return c;
           }),
           py::arg("t"), py::arg("value"),
           py::arg("err") = std::vector<double>{}, py::arg("t_g") = 0.0,
           py::arg("theta") = 0.0)
      .def_readonly("t", &DecayCurve::t)
      .def_readonly("value", &DecayCurve::value)
      .def_readonly("err", &DecayCurve::err)
      .def_readonly("t_g", &DecayCurve::t_g)
      .def_readonly("theta", &DecayCurve::theta)
      .def_readonly("t_o", &DecayCurve::t_o);

  m.def("shift_curve", &shift_curve, py::arg("curve"), py::arg("t_o"),
        "Relabel times as t_eff = t - t_o.");

  py::class_<StretchedFit>(m, "StretchedFit")
      .def_readonly("amp", &StretchedFit::amp)
      .def_readonly("t2", &StretchedFit::t2)
      .def_readonly("amp_err", &StretchedFit::amp_err)
      .def_readonly("t2_err", &StretchedFit::t2_err)
      .def_readonly("p", &StretchedFit::p)
      .def_readonly("p_err", &StretchedFit::p_err)
      .def_readonly("chi2", &StretchedFit::chi2)
      .def_readonly("n_points", &StretchedFit::n_points);

  m.def(
      "fit_stretched",
      [](const std::vector<DecayCurve>& curves, double t_min, double t_max,
         std::optional<double> fixed_p) {
        py::gil_scoped_release release;
        return fit_stretched(curves, t_min, t_max, fixed_p);
      },
      py::arg("curves"), py::arg("t_min"), py::arg("t_max"),
      py::arg("fixed_p") = std::nullopt,
      "amp * exp(-(t/T2)^p) with T2 and amp per curve and p shared.");

  py::class_<VarianceMap>(m, "VarianceMap")
      .def("__call__", &VarianceMap::operator(), py::arg("t2"))
      .def("covers", &VarianceMap::covers, py::arg("t2"))
      .def_property_readonly("t2_lo", &VarianceMap::t2_lo)
      .def_property_readonly("t2_hi", &VarianceMap::t2_hi)
      .def_property_readonly("support_t2", &VarianceMap::support_t2)
      .def_property_readonly("support_var", &VarianceMap::support_var)
      .def_property_readonly("slice_overlap_dev",
                             &VarianceMap::slice_overlap_dev);

  m.def(
      "build_variance_map",
      [](const std::vector<std::tuple<double, double, double, double>>& pts,
         double mono_tol) {
        std::vector<VarMapPoint> support;
        support.reserve(pts.size());
        for (const auto& [t2, var, t_g, theta] : pts)
          support.push_back({t2, var, t_g, theta});
        return build_variance_map(std::move(support), mono_tol);
      },
      py::arg("points"), py::arg("mono_tol") = 0.1,
      "points: iterable of (t2, var_ratio, t_g, theta).");

  // -- config-driven runner -----------------------------------------------------
  m.def(
      "run_config",
      [](const std::string& json_text, const std::string& out,
         std::optional<std::uint64_t> seed, std::optional<int> threads,
         const std::string& kind) {
        RunConfig cfg = parse_config(json_text, kind);
        cfg.out = out;
        if (seed) cfg.seed = *seed;
        if (threads) cfg.threads = *threads;
        validate_config(cfg);
        py::gil_scoped_release release;
        const RunOutputs outs = run(cfg);
        return outs.files;
      },
      py::arg("json_text"), py::arg("out"), py::arg("seed") = std::nullopt,
      py::arg("threads") = std::nullopt, py::arg("kind") = "",
      "Parse a JSON run config, execute it, and return the written files.");
  m.def(
      "config_fingerprint",
      [](const std::string& json_text) {
        const RunConfig cfg = parse_config(json_text, "");
        return hex64(config_hash(cfg));
      },
      py::arg("json_text"),
      "Semantic fingerprint of a config (worker count and output path "
      "excluded).");
}
