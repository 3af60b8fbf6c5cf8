"""Command-line front end.

Subcommands:

* ``pfoco run CONFIG [--seeds 0,1,2] [--out DIR]`` -- run the
  experiment for each seed, writing ``<config>_seed<k>.csv`` traces and
  ``.summary.json`` files into the output directory (``--out``, then
  the config's ``out_dir``, then $PFOCO_OUT_DIR, then ``runs``).
* ``pfoco regret TRACE CONFIG [--intervals POLICY|FILE] [--seed K]``
  -- re-score a written trace against the certified comparators.
* ``pfoco validate CONFIG`` -- parse and resolve a config without
  running it.

Exit codes: 0 success, 2 invalid configuration or parameters, 3 oracle
contract violation (an oracle budget ceiling was exceeded at runtime).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .geometry import OracleContractError
from .harness import (
    ConfigError,
    build_schedule,
    build_set,
    exhaustive_intervals,
    intervals_from_cfg,
    interval_regret_report,
    parse_config_file,
    read_trace_csv,
    resolve_out_dir,
    run_one,
    static_regret,
    strided_intervals,
    trace_basename,
    write_run_outputs,
)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pfoco", description="Projection-free online convex optimization benchmarks.")
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config")
    run_p.add_argument("--seeds", help="comma-separated seed list overriding the config")
    run_p.add_argument("--out", help="output directory for traces and summaries")

    reg_p = sub.add_parser("regret", help="score a trace CSV against certified comparators")
    reg_p.add_argument("trace")
    reg_p.add_argument("config")
    reg_p.add_argument(
        "--intervals",
        help="'strided', 'exhaustive', or a JSON file holding [[start, end], ...] (default: config or strided)",
    )
    reg_p.add_argument("--seed", type=int, help="seed that produced the trace (default: first config seed)")

    val_p = sub.add_parser("validate", help="check a config without running it")
    val_p.add_argument("config")
    return p


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip() != ""]
    except ValueError as e:
        raise ConfigError(f"bad --seeds list {text!r}") from e


def _cmd_run(args) -> int:
    cfg = parse_config_file(args.config)
    seeds = _parse_seeds(args.seeds) if args.seeds else cfg.seeds
    out_dir = resolve_out_dir(args.out, cfg)
    for seed in seeds:
        trace, _, _, summary = run_one(cfg, seed)
        base = trace_basename(args.config, seed)
        trace_path, summary_path = write_run_outputs(out_dir, base, trace, summary)
        obs = summary["observed"]
        reg = obs.get("adaptive_regret", obs.get("static_regret"))
        reg_txt = "n/a" if reg is None else f"{reg:.6g}"
        print(
            f"seed {seed}: regret {reg_txt}, loo {obs['loo_calls']}, so {obs['so_calls']}, "
            f"{obs['wall_time_s']:.2f}s -> {trace_path}"
        )
        print(f"  summary: {summary_path}")
    return 0


def _cmd_regret(args) -> int:
    cfg = parse_config_file(args.config)
    trace = read_trace_csv(args.trace)
    if trace.T != cfg.T:
        raise ConfigError(f"trace has {trace.T} rounds but config.T = {cfg.T}")
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    ss_sched, _ = np.random.SeedSequence(seed).spawn(2)
    set_ = build_set(cfg.set_cfg)
    schedule = build_schedule(cfg.loss_cfg, cfg.T, set_, np.random.default_rng(ss_sched))

    if args.intervals == "strided":
        intervals = strided_intervals(cfg.T, schedule.boundaries)
    elif args.intervals == "exhaustive":
        intervals = exhaustive_intervals(cfg.T)
    elif args.intervals:
        with open(args.intervals) as fh:
            pairs = json.load(fh)
        intervals = sorted({(int(s), int(e)) for s, e in pairs})
    else:
        intervals = intervals_from_cfg(cfg.intervals_cfg, cfg.T, schedule.boundaries)

    sr = static_regret(trace, schedule, set_)
    report = interval_regret_report(trace, schedule, set_, intervals)
    print(f"static regret [1, {cfg.T}]: {sr.regret:.10g} (comparator: {sr.certificate.method})")
    print(
        f"adaptive regret over {report.n_intervals} intervals: {report.max_regret:.10g} "
        f"at [{report.argmax[0]}, {report.argmax[1]}]"
    )
    return 0


def _cmd_validate(args) -> int:
    cfg = parse_config_file(args.config)
    set_ = build_set(cfg.set_cfg)
    ss_sched, _ = np.random.SeedSequence(cfg.seeds[0]).spawn(2)
    schedule = build_schedule(cfg.loss_cfg, cfg.T, set_, np.random.default_rng(ss_sched))
    kind = cfg.learner_cfg["kind"]
    print(f"ok: T={cfg.T} seeds={cfg.seeds} set={cfg.set_cfg['kind']} (n={set_.n}, R={set_.R:.6g}, r={set_.r:.6g})")
    print(f"ok: loss={schedule.kind} G_f={schedule.G_f:.6g} M={schedule.M:.6g}")
    _validate_learner_params(cfg, set_, schedule, kind)
    return 0


def _validate_learner_params(cfg, set_, schedule, kind):
    from . import learners

    lc = cfg.learner_cfg
    if kind == "loo_bogd":
        p = learners.loo_bogd_params(set_, schedule.G_f, cfg.T, eta=lc.get("eta"), eps=lc.get("eps"), K=lc.get("K"))
    elif kind == "loo_bogd_sc":
        alpha = lc.get("alpha", schedule.alpha_min)
        if not (alpha and alpha > 0):
            raise ConfigError("learner parameters rejected: needs a strongly convex schedule (alpha > 0)")
        p = learners.loo_bogd_sc_params(set_, schedule.G_f, cfg.T, alpha=float(alpha), K=lc.get("K"))
    elif kind == "loo_bbgd":
        p = learners.loo_bbgd_params(set_, schedule.M, cfg.T, c=float(lc["c"]), G_f=schedule.G_f)
    elif kind == "so_ogd":
        c = lc.get("c")
        p = learners.so_ogd_params(set_, schedule.G_f, cfg.T, c=None if c is None else float(c))
    elif kind == "so_bgd":
        c, cp = lc.get("c"), lc.get("c_prime")
        p = learners.so_bgd_params(
            set_,
            schedule.M,
            cfg.T,
            c=None if c is None else float(c),
            c_prime=None if cp is None else float(cp),
            G_f=schedule.G_f,
        )
    else:
        print(f"ok: learner={kind} (no oracle bounds)")
        return
    bounds = learners.theoretical_bounds(p)
    print(
        f"ok: learner={kind} K={p.K} B={p.B} -> regret bound {bounds['regret']:.6g}, "
        f"{bounds['oracle']} calls bound {bounds['oracle_calls']:.6g}"
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "regret":
            return _cmd_regret(args)
        return _cmd_validate(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OracleContractError as e:
        print(f"oracle contract violation: {e}", file=sys.stderr)
        for k, v in sorted(getattr(e, "diagnostics", {}).items()):
            print(f"  {k}: {v}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
