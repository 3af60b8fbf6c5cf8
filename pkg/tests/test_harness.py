"""Config validation, regret evaluators, interval policies, trace files, CLI."""

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from pfoco.cli import main as cli_main
from pfoco.geometry import Ball, L1Ball, exact_project
from pfoco.harness import (
    ConfigError,
    build_schedule,
    build_set,
    exhaustive_intervals,
    interval_regret_report,
    intervals_from_cfg,
    parse_config_dict,
    read_trace_csv,
    resolve_out_dir,
    run_one,
    static_regret,
    strided_intervals,
    write_trace_csv,
)
from pfoco.learners import ogd_wf_run
from pfoco.losses import make_iid_absdev_schedule, make_iid_linear_schedule, make_iid_quadratic_schedule

from support import sample_members


def _base_config(**overrides):
    cfg = {
        "T": 64,
        "seeds": [0],
        "set": {"kind": "ball", "n": 2, "radius": 1.0},
        "loss": {"kind": "iid_linear"},
        "learner": {"kind": "so_ogd", "c": 1.0},
    }
    cfg.update(overrides)
    return cfg


# ----------------------------------------------------------------------
# config validation


def test_unknown_keys_rejected_at_every_level():
    with pytest.raises(ConfigError, match="unknown keys \\['bogus'\\] in config"):
        parse_config_dict(_base_config(bogus=1))
    with pytest.raises(ConfigError, match="set"):
        parse_config_dict(_base_config(set={"kind": "ball", "n": 2, "radius": 1.0, "color": "red"}))
    with pytest.raises(ConfigError, match="loss"):
        parse_config_dict(_base_config(loss={"kind": "iid_linear", "shift": 2}))
    with pytest.raises(ConfigError, match="learner"):
        parse_config_dict(_base_config(learner={"kind": "so_ogd", "step": 0.1}))
    with pytest.raises(ConfigError, match="intervals"):
        parse_config_dict(_base_config(intervals={"policy": "strided", "stride": 4}))


def test_missing_and_mistyped_fields_rejected():
    with pytest.raises(ConfigError, match="missing keys"):
        parse_config_dict({"T": 10, "set": {"kind": "ball", "n": 2, "radius": 1.0}, "loss": {"kind": "iid_linear"}})
    with pytest.raises(ConfigError, match="must be an integer"):
        parse_config_dict(_base_config(T=10.5))
    with pytest.raises(ConfigError, match="seeds"):
        parse_config_dict(_base_config(seeds=[]))
    with pytest.raises(ConfigError, match="seeds"):
        parse_config_dict(_base_config(seeds=[0, True]))
    with pytest.raises(ConfigError, match="unknown set kind"):
        parse_config_dict(_base_config(set={"kind": "cylinder"}))
    with pytest.raises(ConfigError, match="unknown loss kind"):
        parse_config_dict(_base_config(loss={"kind": "hinge"}))
    with pytest.raises(ConfigError, match="unknown learner kind"):
        parse_config_dict(_base_config(learner={"kind": "adagrad"}))


def test_learner_keys_must_match_kind():
    with pytest.raises(ConfigError, match="do not apply to learner 'so_ogd'"):
        parse_config_dict(_base_config(learner={"kind": "so_ogd", "eta": 0.1}))
    with pytest.raises(ConfigError, match="requires an explicit exploration constant"):
        parse_config_dict(_base_config(learner={"kind": "loo_bbgd"}))


def test_segment_lengths_must_sum_to_horizon():
    loss = {"kind": "switching_linear", "segments": [[30, [1.0, 0.0]], [30, [0.0, 1.0]]]}
    with pytest.raises(ConfigError, match="segment lengths sum to 60, but T = 64"):
        parse_config_dict(_base_config(loss=loss))


def test_interval_config_validation():
    with pytest.raises(ConfigError, match="unknown interval policy"):
        parse_config_dict(_base_config(intervals={"policy": "dyadic"}))
    with pytest.raises(ConfigError, match="out of range"):
        parse_config_dict(_base_config(intervals={"policy": "list", "intervals": [[1, 65]]}))
    with pytest.raises(ConfigError, match="does not apply to policy"):
        parse_config_dict(_base_config(intervals={"policy": "list", "intervals": [[1, 4]], "extra": [[1, 2]]}))
    with pytest.raises(ConfigError, match="limited to T <= 512"):
        parse_config_dict(_base_config(T=600, intervals={"policy": "exhaustive"}))


def test_precondition_failures_name_the_inequality():
    # so_ogd default c = 4R/r = 4 needs T > 16
    cfg = parse_config_dict(_base_config(T=9, learner={"kind": "so_ogd"}))
    with pytest.raises(ConfigError, match=r"c\*T\^\(-1/2\) < 1"):
        run_one(cfg, 0)
    cfg = parse_config_dict(_base_config(T=16, learner={"kind": "loo_bbgd", "c": 5.0}))
    with pytest.raises(ConfigError, match=r"c\*T\^\(-1/4\) < r"):
        run_one(cfg, 0)
    sc = _base_config(
        T=4,
        loss={"kind": "iid_quadratic", "alpha": 1.0},
        learner={"kind": "loo_bogd_sc"},
    )
    with pytest.raises(ConfigError, match=r"T >= 27\*\(alpha\*R/G_f\)\^2"):
        run_one(parse_config_dict(sc), 0)


def test_build_set_covers_all_kinds():
    ball = build_set({"kind": "ball", "n": 3, "radius": 2.0})
    assert isinstance(ball, Ball) and ball.R == 2.0
    box = build_set({"kind": "box", "lower": [-1.0, -2.0], "upper": [1.0, 1.0]})
    assert box.n == 2
    simplex = build_set({"kind": "simplex", "n": 4})
    assert simplex.r == 0.0
    l1 = build_set({"kind": "l1", "n": 2, "radius": 1.5})
    assert isinstance(l1, L1Ball)
    poly = build_set({"kind": "polytope", "A": [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], "b": [1.0, 1.0, 1.0, 1.0]})
    assert poly.r == pytest.approx(1.0)
    with pytest.raises(ConfigError, match="bad set config"):
        build_set({"kind": "box", "lower": [0.5, 0.5], "upper": [1.0, 1.0]})


# ----------------------------------------------------------------------
# interval policies


def test_strided_intervals_shape():
    T = 128
    iv = strided_intervals(T)
    assert (1, T) in iv
    assert all(1 <= s <= e <= T for s, e in iv)
    assert len(iv) == len(set(iv))
    lengths = sorted({e - s + 1 for s, e in iv}, reverse=True)
    expect = []
    L = T
    while True:
        expect.append(L)
        if math.ceil(L / 2) < 8:
            break
        L = math.ceil(L / 2)
    assert lengths == sorted(expect, reverse=True)
    # every length is placed flush against the right edge too
    for L in expect:
        assert (T - L + 1, T) in iv


def test_strided_intervals_tiny_horizon_and_extras():
    assert strided_intervals(5) == [(1, 5)]
    iv = strided_intervals(64, boundaries=[1, 21], extra=[[3, 7]])
    assert (1, 20) in iv and (21, 64) in iv and (1, 64) in iv
    assert (3, 7) in iv


def test_exhaustive_intervals_count_and_limit():
    T = 24
    iv = exhaustive_intervals(T)
    assert len(iv) == T * (T + 1) // 2
    assert len(set(iv)) == len(iv)
    with pytest.raises(ValueError, match="limited to"):
        exhaustive_intervals(513)


def test_intervals_from_cfg_list_policy():
    got = intervals_from_cfg({"policy": "list", "intervals": [[4, 9], [1, 3], [4, 9]]}, 16)
    assert got == [(1, 3), (4, 9)]


# ----------------------------------------------------------------------
# regret evaluators


def _played_trace(set_, schedule, rng):
    # an arbitrary feasible play sequence with recorded losses
    plays = sample_members(set_, rng, schedule.T)
    losses = np.array([schedule.losses[t].value(plays[t]) for t in range(schedule.T)])
    zeros = np.zeros(schedule.T, dtype=np.int64)
    from pfoco.learners import RunTrace

    return RunTrace(plays, losses, zeros.copy(), zeros.copy(), zeros.copy(), None, [], {})


def test_linear_interval_regret_matches_direct_sum():
    rng = np.random.default_rng(7)
    set_ = L1Ball(3, 1.0)
    schedule = make_iid_linear_schedule(40, 3, set_.R, rng)
    trace = _played_trace(set_, schedule, rng)
    report = interval_regret_report(trace, schedule, set_, exhaustive_intervals(40))
    by_pair = {(r.start, r.end): r for r in report.intervals}
    for s, e in [(1, 40), (5, 5), (13, 29), (40, 40), (2, 39)]:
        csum = np.sum(schedule.linear_coefficients()[s - 1 : e], axis=0)
        comp = float(csum @ set_.loo(csum))
        direct = sum(float(schedule.losses[t - 1].value(trace.plays[t - 1])) for t in range(s, e + 1))
        r = by_pair[(s, e)]
        assert r.regret == pytest.approx(direct - comp, abs=1e-9)
        assert r.certificate.method == "loo_exact"
    assert report.max_regret == max(r.regret for r in report.intervals)


def test_linear_comparator_beats_sampled_points():
    rng = np.random.default_rng(11)
    set_ = Ball(4, 1.0)
    schedule = make_iid_linear_schedule(30, 4, set_.R, rng)
    trace = _played_trace(set_, schedule, rng)
    members = sample_members(set_, rng, 50)
    for s, e in [(1, 30), (10, 20)]:
        r = interval_regret_report(trace, schedule, set_, [(s, e)]).intervals[0]
        played = float(np.sum(trace.losses[s - 1 : e]))
        for z in members:
            at_z = sum(float(schedule.losses[t - 1].value(z)) for t in range(s, e + 1))
            assert played - at_z <= r.regret + 1e-9


def test_quadratic_comparator_certified_and_consistent():
    rng = np.random.default_rng(23)
    set_ = Ball(3, 1.0)
    schedule = make_iid_quadratic_schedule(25, 3, set_.R, rng, alpha=1.5, spread=0.5)
    trace = _played_trace(set_, schedule, rng)
    report = interval_regret_report(trace, schedule, set_, [(1, 25), (7, 19), (4, 4)])
    members = sample_members(set_, rng, 60)
    for r in report.intervals:
        assert r.certificate.method == "projected_quadratic"
        assert 0.0 <= r.certificate.gap <= r.certificate.tol
        played = float(np.sum(trace.losses[r.start - 1 : r.end]))
        comp = played - r.regret
        direct_at = lambda z: sum(  # noqa: E731
            float(schedule.losses[t - 1].value(z)) for t in range(r.start, r.end + 1)
        )
        # the certified value is attained by an actual feasible point
        alpha, B, C = schedule.quadratic_parts()
        w = np.sum(alpha * B[r.start - 1 : r.end] - C[r.start - 1 : r.end], axis=0)
        x_star = exact_project(set_, w / (alpha * (r.end - r.start + 1)))
        assert direct_at(x_star) == pytest.approx(comp, rel=1e-10, abs=1e-10)
        for z in members:
            assert comp <= direct_at(z) + 1e-8


def test_absdev_schedule_has_no_certified_comparator():
    rng = np.random.default_rng(3)
    set_ = Ball(2, 1.0)
    schedule = make_iid_absdev_schedule(20, 2, set_.R, rng)
    trace = _played_trace(set_, schedule, rng)
    with pytest.raises(ValueError, match="no certified comparator"):
        static_regret(trace, schedule, set_)


def test_static_regret_equals_full_interval():
    rng = np.random.default_rng(5)
    set_ = Ball(2, 1.0)
    schedule = make_iid_linear_schedule(32, 2, set_.R, rng)
    trace = _played_trace(set_, schedule, rng)
    sr = static_regret(trace, schedule, set_)
    full = interval_regret_report(trace, schedule, set_, [(1, 32)]).intervals[0]
    assert sr == full


def test_strided_max_never_exceeds_exhaustive_max():
    rng = np.random.default_rng(17)
    set_ = Ball(2, 1.0)
    schedule = make_iid_linear_schedule(96, 2, set_.R, rng)
    trace = _played_trace(set_, schedule, rng)
    strided = interval_regret_report(trace, schedule, set_, strided_intervals(96))
    exhaustive = interval_regret_report(trace, schedule, set_, exhaustive_intervals(96))
    assert strided.max_regret <= exhaustive.max_regret + 1e-12
    assert set(strided_intervals(96)) <= set(exhaustive_intervals(96))


# ----------------------------------------------------------------------
# trace files and determinism


def test_trace_csv_round_trip_is_exact(tmp_path):
    cfg = parse_config_dict(
        _base_config(
            T=48,
            set={"kind": "ball", "n": 2, "radius": 1.0},
            learner={"kind": "so_bgd", "c": 1.0, "c_prime": 0.25},
        )
    )
    trace, _, _, _ = run_one(cfg, 9)
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, str(path))
    back = read_trace_csv(str(path))
    assert np.array_equal(back.plays, trace.plays)
    assert np.array_equal(back.losses, trace.losses)
    assert np.array_equal(back.loo_cum, trace.loo_cum)
    assert np.array_equal(back.so_cum, trace.so_cum)
    assert np.array_equal(back.block_index, trace.block_index)

    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.splitlines()[0] == b"t,x,loss,loo_calls_cum,so_calls_cum,block_index"


def test_same_seed_means_byte_identical_traces(tmp_path):
    cfg = parse_config_dict(
        _base_config(
            T=40,
            loss={"kind": "iid_linear"},
            learner={"kind": "so_bgd", "c": 1.0, "c_prime": 0.25},
        )
    )
    paths = []
    for i in range(2):
        trace, _, _, _ = run_one(cfg, 4)
        p = tmp_path / f"t{i}.csv"
        write_trace_csv(trace, str(p))
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()

    other, _, _, _ = run_one(cfg, 5)
    assert not np.array_equal(other.plays, read_trace_csv(str(paths[0])).plays)


def test_run_summary_records_bounds_and_checks():
    cfg = parse_config_dict(_base_config(T=100, learner={"kind": "so_ogd"}))
    _, _, _, summary = run_one(cfg, 0)
    assert summary["bound_scope"] == "adaptive"
    assert summary["bounds"]["oracle"] == "so"
    assert summary["checks"]["oracle_calls_within_bound"] is True
    assert "regret_within_bound" in summary["checks"]
    assert summary["observed"]["n_intervals"] >= 1


def test_ogd_wf_runs_from_config_without_bounds():
    cfg = parse_config_dict(_base_config(learner={"kind": "ogd_wf"}))
    trace, schedule, set_, summary = run_one(cfg, 1)
    assert summary["bounds"] is None
    assert trace.counters.loo_calls == 0 and trace.counters.so_calls == 0
    for t in range(trace.T):
        assert set_.contains(trace.plays[t])


def test_out_dir_resolution_order(monkeypatch):
    cfg = parse_config_dict(_base_config(out_dir="from_cfg"))
    cfg_none = parse_config_dict(_base_config())
    monkeypatch.setenv("PFOCO_OUT_DIR", "from_env")
    assert resolve_out_dir("from_cli", cfg) == "from_cli"
    assert resolve_out_dir(None, cfg) == "from_cfg"
    assert resolve_out_dir(None, cfg_none) == "from_env"
    monkeypatch.delenv("PFOCO_OUT_DIR")
    assert resolve_out_dir(None, cfg_none) == "runs"


# ----------------------------------------------------------------------
# CLI


def _write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_cli_run_and_regret_agree(tmp_path, capsys):
    cfg_path = _write_cfg(tmp_path, _base_config(T=60, seeds=[2], learner={"kind": "so_ogd", "c": 1.0}))
    out = str(tmp_path / "out")
    assert cli_main(["run", cfg_path, "--out", out]) == 0
    capsys.readouterr()

    trace_path = os.path.join(out, "cfg_seed2.csv")
    assert os.path.exists(trace_path)
    summary = json.loads(open(os.path.join(out, "cfg_seed2.summary.json")).read())

    assert cli_main(["regret", trace_path, cfg_path, "--seed", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    static_line = [ln for ln in lines if ln.startswith("static regret")][0]
    got = float(static_line.split(":")[1].split("(")[0])
    assert got == pytest.approx(summary["observed"]["static_regret"], rel=1e-9, abs=1e-9)


def test_cli_validate_exit_codes(tmp_path, capsys):
    good = _write_cfg(tmp_path, _base_config(), "good.json")
    assert cli_main(["validate", good]) == 0
    capsys.readouterr()

    bad = _write_cfg(tmp_path, _base_config(bogus=1), "bad.json")
    assert cli_main(["validate", bad]) == 2
    assert "unknown keys" in capsys.readouterr().err

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert cli_main(["validate", str(broken)]) == 2
    assert "not valid JSON" in capsys.readouterr().err

    # theorem precondition violations are configuration errors too
    tight = _write_cfg(tmp_path, _base_config(T=9, learner={"kind": "so_ogd"}), "tight.json")
    assert cli_main(["validate", tight]) == 2
    assert "c*T^(-1/2) < 1" in capsys.readouterr().err


def test_cli_intervals_file_and_missing_config(tmp_path, capsys):
    cfg_path = _write_cfg(tmp_path, _base_config(T=30, seeds=[0]))
    out = str(tmp_path / "out")
    assert cli_main(["run", cfg_path, "--out", out]) == 0
    capsys.readouterr()
    iv_path = tmp_path / "iv.json"
    iv_path.write_text("[[1, 30], [10, 20]]")
    trace_path = os.path.join(out, "cfg_seed0.csv")
    assert cli_main(["regret", trace_path, cfg_path, "--intervals", str(iv_path)]) == 0
    assert "over 2 intervals" in capsys.readouterr().out

    assert cli_main(["validate", str(tmp_path / "nope.json")]) == 2
    assert "not found" in capsys.readouterr().err


def test_cli_entry_point_installed():
    res = subprocess.run(
        [sys.executable, "-m", "pfoco.cli", "--help"],
        capture_output=True,
        text=True,
    )
    # argparse prints help and exits 0
    assert res.returncode == 0
    assert "run" in res.stdout and "regret" in res.stdout and "validate" in res.stdout
