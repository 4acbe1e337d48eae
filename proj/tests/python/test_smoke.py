"""End-to-end smoke tests for the Python bindings.

Small systems only: these guard that the bound surface is callable and wired
to the same numerics as the C++ suite, not that the physics is right (the
C++ unit and acceptance suites own that).
"""

import json
import math

import pytest

import squeezelab as sqz


def test_version_and_constants():
    assert sqz.__version__.startswith("squeezelab")
    assert sqz.J0_DEFAULT == pytest.approx(2.0 * math.pi * 52.0)
    assert sqz.ppm_nm_to_per_nm2(8.0) == pytest.approx(1.41e-3, rel=1e-2)


def test_ensemble_sampling_and_removal():
    region = sqz.Region(40.0, 40.0, 7.0)
    ens = sqz.sample_positions_fixed(24, region, seed=7)
    assert ens.size == 24
    assert ens.positions.shape == (24, 3)
    assert all(s == "active" for s in ens.status)

    cut = sqz.apply_removal(ens, "hard_cutoff", 6.0)
    assert cut.active_count < ens.active_count
    kept = sqz.nearest_active_distances(cut)
    active = [d for d, s in zip(kept, cut.status) if s == "active"]
    assert min(active) >= 6.0

    # shelving needs the coupling graph internally; the wrapper builds it
    shelved = sqz.apply_removal(ens, "shelving", 7.0, seed=3)
    assert shelved.size == ens.size


def test_coupling_graph_scaling():
    region = sqz.Region(30.0, 30.0, 7.0)
    ens = sqz.sample_positions_fixed(10, region, seed=11)
    g = sqz.build_coupling(ens, j0=sqz.J0_DEFAULT)
    assert g.size == 10
    assert g.J.shape == (10, 10)
    g2 = sqz.build_coupling(ens, j0=2.0 * sqz.J0_DEFAULT)
    assert sqz.mean_field_chi(g2) == pytest.approx(2.0 * sqz.mean_field_chi(g), rel=1e-12)


def test_exact_oat_matches_closed_form():
    n, chi = 8, 0.4
    model = sqz.PairModel.oat(chi, n)
    state = sqz.prepare_polarized(n)
    t = 0.7
    evolved = sqz.krylov_propagate(state, model, t)
    mom = sqz.moments(evolved)
    params = sqz.OatParams(chi=chi, n=n)
    assert mom.sx == pytest.approx(sqz.oat_decay(params, t), abs=1e-10)
    assert mom.var_min < n / 4.0  # squeezed below the initial variance
    assert sqz.squeezing_parameter(mom, n) < 1.0

    dense = sqz.dense_propagate(state, model, t)
    overlap = abs(
        sum(a.conjugate() * b for a, b in zip(dense.amp, evolved.amp))
    )
    assert overlap == pytest.approx(1.0, abs=1e-10)


def test_energy_conserved_exact():
    region = sqz.Region(25.0, 25.0, 7.0)
    ens = sqz.sample_positions_fixed(8, region, seed=5)
    model = sqz.PairModel.xxz(sqz.build_coupling(ens))
    state = sqz.prepare_polarized(8)
    e0 = sqz.energy(state, model)
    evolved = sqz.krylov_propagate(state, model, 1.5)
    assert sqz.energy(evolved, model) == pytest.approx(e0, abs=1e-9)
    assert evolved.norm() == pytest.approx(1.0, abs=1e-12)


def test_dtwa_pair_matches_closed_form():
    J = 4.0
    model = sqz.PairModel.dimer(J)
    graph_free = sqz.build_clusters  # alias only used below
    part = sqz.singleton_partition(2)
    # one isolated pair evolved exactly inside the cluster engine
    region = sqz.Region(10.0, 10.0, 1.0)
    phi = 0.6
    times = [0.0, 0.1, 0.2, 0.3]
    stages = [sqz.DtwaStage(rot_axis="y", rot_angle=phi, duration=0.3, record=times)]
    opts = sqz.DtwaOptions()
    opts.n_traj = 4096
    opts.seed = 12
    # pair the two spins so their dynamics is solved exactly per trajectory
    ens = sqz.sample_positions_fixed(2, region, seed=1)
    g = sqz.build_coupling(ens)
    pairing = graph_free(g)
    assert pairing.n_clusters == 1 and pairing.pairs == [(0, 1)]
    series = sqz.run_dtwa(model, pairing, stages, opts)
    assert series.n_traj == 4096
    for k, t in enumerate(times):
        sx_ref, sy_ref = sqz.dimer_twisting(phi, J, t)
        assert series.sx[k] == pytest.approx(sx_ref, abs=5 * (series.sx_err[k] + 1e-12))
        assert series.sy[k] == pytest.approx(sy_ref, abs=5 * (series.sy_err[k] + 1e-12))


def test_protocol_squeeze_runs():
    region = sqz.Region(30.0, 30.0, 7.0)
    ens = sqz.sample_positions_fixed(8, region, seed=21)
    plan = sqz.QuenchPlan()
    plan.tg_grid = [0.0, 0.4, 0.8]
    plan.theta_grid = [0.0]
    plan.tr_grid = [0.0]
    plan.engine = "exact"
    ctx = sqz.prepare_context(plan, ens)
    assert ctx.n_active == 8
    series = sqz.run_squeeze(ctx)
    assert series.t == plan.tg_grid
    assert series.xi2[0] == pytest.approx(1.0, rel=1e-9)
    assert all(v > 0 for v in series.xi2)


def test_fit_and_variance_map_roundtrip():
    t2_true, p = 2.0, 1.4
    ts = [0.25 * k for k in range(1, 25)]
    curve = sqz.DecayCurve(
        t=ts,
        value=[math.exp(-((t / t2_true) ** p)) for t in ts],
        err=[0.01] * len(ts),
    )
    fit = sqz.fit_stretched([curve], 0.0, 6.0)
    assert fit.t2[0] == pytest.approx(t2_true, rel=1e-3)
    assert fit.p == pytest.approx(p, rel=1e-2)

    pts = [(0.8, 3.0, 0.0, 0.0), (1.5, 1.8, 0.0, 0.3), (2.5, 0.9, 0.0, 0.6), (4.0, 0.4, 0.0, 0.9)]
    vmap = sqz.build_variance_map(pts)
    assert vmap.covers(2.5) and not vmap.covers(0.2)
    assert vmap(1.5) == pytest.approx(1.8, rel=1e-12)
    assert vmap(2.0) < 1.8 and vmap(2.0) > 0.9  # monotone between nodes


def test_offset_time_small_angle_limit():
    chi, t_g = 1e-3, 0.2  # deviation from the limit is linear in chi*t_g
    for theta in (0.0, 0.5, 1.0, -0.7):
        t_o = sqz.offset_time(theta, chi, t_g)
        assert t_o == pytest.approx(-math.cos(2 * theta) * t_g, abs=1e-3)
    assert sqz.offset_time(0.0, 1.3, 0.9) == pytest.approx(-0.9, abs=1e-12)


def test_run_config_writes_outputs(tmp_path):
    cfg = {
        "version": 1,
        "kind": "ensemble",
        "seed": 9,
        "ensemble": {
            "box_nm": 40.0,
            "thickness_nm": 7.0,
            "fixed_count": 12,
        },
        "prelude": {"kind": "hard_cutoff", "radius_nm": 5.0},
    }
    out = tmp_path / "run"
    files = sqz.run_config(json.dumps(cfg), str(out))
    assert files and files[-1] == "manifest.json"
    for name in files:
        assert (out / name).is_file()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["master_seed"] == 9
    fp = sqz.config_fingerprint(json.dumps(cfg))
    assert manifest["config_hash"] == fp
    # threads and output location do not change the fingerprint
    cfg2 = dict(cfg, threads=4)
    assert sqz.config_fingerprint(json.dumps(cfg2)) == fp
