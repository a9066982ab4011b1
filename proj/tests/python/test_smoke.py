import math

import numpy as np
import pytest

import combcast as cc


def test_zipf_model_matches_direct_sum():
    model = cc.ZipfModel(1.3, 50)
    direct = sum(i ** -1.3 for i in range(1, 51))
    assert model.normalization() == pytest.approx(direct, rel=1e-12)
    total = sum(model.normalized_popularity(i) for i in range(1, 51))
    assert total == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(Exception):
        model.popularity(0)


def test_threshold_scan_endpoints_and_argmin():
    params = cc.CostParams(
        subscribers=100,
        file_size_bits=1.0,
        bandwidth_hz=1.0,
        spf_unicast=2.0,
        spf_broadcast=1.0,
        zipf=cc.ZipfModel(1.5, 40),
    )
    assert cc.total_time(params, 1) == pytest.approx(50.0, rel=1e-12)
    assert cc.total_time(params, 41) == pytest.approx(40.0, rel=1e-12)
    report = cc.argmin_discrete(params)
    assert len(report.total_time) == 41
    assert report.methods_agree
    assert report.best_threshold == report.sign_change_threshold
    assert report.time_at_best == pytest.approx(min(report.total_time))
    assert report.improvement_vs_unicast == pytest.approx(
        1.0 - report.time_at_best / report.total_time[0]
    )
    assert report.closed_form is not None
    increments = [
        cc.time_increment(params, i) for i in range(1, 41)
    ]
    rebuilt = [
        report.total_time[i + 1] - report.total_time[i] for i in range(40)
    ]
    assert increments == pytest.approx(rebuilt, abs=1e-12)


def test_closed_form_requires_steep_popularity():
    params = cc.CostParams(100, 1.0, 1.0, 2.0, 1.0, cc.ZipfModel(0.8, 40))
    with pytest.raises(Exception):
        cc.closed_form_threshold(params)


def test_broadcast_solver_on_orthogonal_channel():
    problem = cc.BroadcastProblem(
        channel=np.eye(2, dtype=complex),
        sinr_weights=np.ones(2),
        power_limits=np.ones(2),
        noise_power=np.ones(2),
    )
    result = cc.solve_broadcast_maxmin(problem, n_rand=500, seed=7)
    assert result.status == cc.SolveOutcome.Optimal
    assert result.t_star <= result.relaxation_bound * (1 + 1e-9)
    assert result.t_star > 0.97
    radiated = cc.per_antenna_power(result.precoders)
    assert np.all(radiated <= 1 + 1e-6)
    replay = min(
        cc.sinr(result.precoders, np.eye(2, dtype=complex)[i], 1.0, i)
        for i in range(2)
    )
    assert replay == pytest.approx(result.t_star, rel=1e-9)


def test_unicast_solver_on_identity_channel():
    problem = cc.UnicastProblem(
        channel=np.eye(2, dtype=complex),
        sinr_weights=np.ones(2),
        power_limits=np.ones(2),
        noise_power=np.ones(2),
    )
    result = cc.solve_unicast_maxmin(problem, bisection_tol=1e-6)
    assert result.status == cc.SolveOutcome.Optimal
    assert result.t_star == pytest.approx(1.0, rel=1e-3)
    assert result.rank_residual.max() <= 1e-5
    assert result.precoders.mode == cc.Mode.Unicast
    assert result.achieved_sinr == pytest.approx([1.0, 1.0], rel=1e-3)


def test_spectral_efficiency_mapping():
    assert cc.spectral_efficiency(1.0) == pytest.approx(1.0)
    assert cc.spectral_efficiency(3.0) == pytest.approx(2.0)
    assert cc.spectral_efficiency(0.0) == 0.0


def test_channel_generation_is_seeded():
    topo = cc.place_users(3, 1.0, 8, seed=42)
    assert topo.num_users() == 8
    assert topo.bs_positions == pytest.approx([0.0, 1.0, 2.0])
    span_lo, span_hi = -0.5, 2.5
    assert all(span_lo <= u <= span_hi for u in topo.user_positions)
    config = cc.ChannelConfig(path_loss_exponent=3.0, fading=True,
                              noise_power=1.0, seed=5)
    a = cc.generate_channel(topo, config, 5).coefficients
    b = cc.generate_channel(topo, config, 5).coefficients
    assert np.array_equal(a, b)
    assert a.shape == (8, 3)


def test_config_parsing_and_errors():
    cfg = cc.parse_config_text(
        "n_bs = 3\nn_users = 12\nalpha = 1.1, 1.7\nn_mc = 5\n", "inline"
    )
    assert cfg.n_bs == 3
    assert cfg.n_users == 12
    assert cfg.alpha == pytest.approx([1.1, 1.7])
    with pytest.raises(cc.ConfigError):
        cc.parse_config_text("no_such_key = 1\n", "inline")
    bad = cc.SimConfig()
    bad.n_bs = 0
    with pytest.raises(cc.ConfigError):
        bad.validate()


def small_config():
    cfg = cc.SimConfig()
    cfg.n_bs = 2
    cfg.n_users = 6
    cfg.i_max = 20
    cfg.n_mc = 4
    cfg.n_rand = 60
    cfg.seed = 99
    cfg.alpha = [1.1]
    return cfg


def test_estimate_is_deterministic_across_threads():
    cfg = small_config()
    serial = cc.estimate_spectral_efficiencies(cfg, 1)
    again = cc.estimate_spectral_efficiencies(cfg, 1)
    threaded = cc.estimate_spectral_efficiencies(cfg, 2)
    assert serial.mean_spf_unicast == again.mean_spf_unicast
    assert serial.mean_spf_unicast == threaded.mean_spf_unicast
    assert serial.mean_spf_broadcast == threaded.mean_spf_broadcast
    assert serial.mean_spf_unicast > 0
    assert serial.mean_spf_broadcast > 0
    assert len(serial.samples) == 4
    assert serial.failed_draws == 0


def test_run_simulate_emits_outputs(tmp_path):
    cfg = small_config()
    cfg.out_dir = str(tmp_path)
    cc.run_simulate(cfg, 1)
    for name in ("run_report.txt", "spf_samples.csv", "cost_curves.csv",
                 "demand_profile.csv"):
        assert (tmp_path / name).is_file()
    report = (tmp_path / "run_report.txt").read_text()
    keys = dict(
        line.split("=", 1) for line in report.splitlines() if "=" in line
    )
    assert float(keys["mean_spf_unicast"]) > 0
    assert math.isfinite(float(keys["spf_ratio_unicast_over_broadcast"]))


def test_improvement_report_spans_alpha_list():
    cfg = small_config()
    cfg.alpha = [1.1, 1.5, 2.0]
    summary = cc.improvement_report(cfg, 3.0, 1.0)
    assert len(summary.per_alpha) == 3
    assert summary.max_improvement_vs_unicast >= 0
    per = {round(r.alpha, 3): r.threshold for r in summary.per_alpha}
    assert all(rep.methods_agree for rep in per.values())
