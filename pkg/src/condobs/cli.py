"""Command-line front end: simulate, check, compare, presets.

Exit codes: 0 success (and diagnostic pass for `check`), 1 configuration or
usage error (and diagnostic fail), 2 numerical failure during integration.
The output directory comes from --out, falling back to the CONDOBS_OUT
environment variable, then the working directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .analysis import AnalysisError, assumption_ii_check, compare_runs, pe_check
from .config import ConfigError, ExperimentConfig
from .engine import EngineError, NumericalError, run_experiment
from .kinetics import KineticsError
from .model import MODEL_PRESETS, ModelError
from .observer import ObserverError, state_counts
from .trace import Trace, TraceError

_CONFIG_ERRORS = (ConfigError, EngineError, ModelError, ObserverError,
                  TraceError, KineticsError, AnalysisError, OSError)


def _out_dir(args) -> Path:
    d = args.out or os.environ.get("CONDOBS_OUT") or "."
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    if getattr(args, "preset", None):
        cfg.model = args.preset
    if getattr(args, "observer", None):
        cfg.observer = args.observer
    if getattr(args, "gains", None):
        cfg.gains = {"preset": args.gains}
    if getattr(args, "seed", None) is not None:
        cfg.integrator["rng_seed"] = args.seed
    if getattr(args, "dt", None) is not None:
        cfg.integrator["dt"] = args.dt
    if getattr(args, "t_end", None) is not None:
        cfg.integrator["t_end"] = args.t_end
    if getattr(args, "stride", None) is not None:
        cfg.integrator["record_stride"] = args.stride
    if getattr(args, "noise", None):
        cfg.noise["enabled"] = args.noise == "on"
    if getattr(args, "snr_db", None) is not None:
        cfg.noise["snr_db"] = args.snr_db
    cfg.__post_init__()  # revalidate after overrides
    return cfg


def _run_from_config(cfg: ExperimentConfig):
    model = cfg.build_model()
    gains = cfg.build_gains(model)
    integ = cfg.build_integrator()
    noise = cfg.build_noise()
    inputs = cfg.build_inputs(model)
    x0, obs_init, P0 = cfg.build_initial(model)
    t0 = time.perf_counter()
    trace = run_experiment(model, cfg.observer, gains, integ, noise, inputs,
                           x0=x0, observer_init=obs_init, P0=P0,
                           freeze_theta_at=cfg.freeze_theta_at)
    runtime = time.perf_counter() - t0
    return model, trace, runtime


def _final_errors(trace: Trace) -> dict:
    out = {}
    for c in trace.columns_matching("theta_hat"):
        name = c.removeprefix("theta_hat.")
        out[name] = float(abs(trace.column(c)[-1]
                              - trace.column(f"theta_true.{name}")[-1]))
    return out


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    model, trace, runtime = _run_from_config(cfg)
    trace_path = out / cfg.output.get("trace_csv", "trace.csv")
    summary_path = out / cfg.output.get("summary_json", "summary.json")
    trace.save_csv(trace_path)
    summary = {
        "observer": cfg.observer,
        "t_end_ms": cfg.build_integrator().t_end,
        "runtime_s": runtime,
        "n_samples": trace.n_samples,
        "state_counts": state_counts(model),
        "final_abs_errors": _final_errors(trace) if cfg.observer != "none" else {},
        "trace_csv": str(trace_path),
    }
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"wrote {trace_path} ({trace.n_samples} samples) and {summary_path}")
    return 0


def cmd_check(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    trace = Trace.load_csv(args.trace)
    opts = cfg.analysis_options()
    pe = pe_check(trace, opts["pe_window"])
    model = cfg.build_model()
    gains = cfg.build_gains(model)
    if not hasattr(gains, "gamma0"):
        raise ConfigError("check needs a distributed gain schedule")
    delta = opts["delta"]
    if delta is None:
        delta = [max(tp.delta, 1e-12) for tp in pe.types.values()]
    aii = assumption_ii_check(trace, gains, opts["pe_window"], opts["beta"], delta)
    report = {"pe": pe.to_dict(), "assumption_ii": aii.to_dict()}
    report_path = out / cfg.output.get("report_json", "report.json")
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    ok = pe.passed and aii.passed
    print(f"PE: {'pass' if pe.passed else 'FAIL'}  "
          f"assumption-II: {'pass' if aii.passed else 'FAIL'}  -> {report_path}")
    return 0 if ok else 1


def cmd_compare(args) -> int:
    out = _out_dir(args)
    if args.config_a and args.config_b:
        cfg_a = ExperimentConfig.from_json(args.config_a)
        cfg_b = ExperimentConfig.from_json(args.config_b)
    else:
        base = _load_config(args)
        cfg_a = ExperimentConfig.from_dict(base.to_dict())
        cfg_b = ExperimentConfig.from_dict(base.to_dict())
        if args.observer_a:
            cfg_a.observer = args.observer_a
        if args.observer_b:
            cfg_b.observer = args.observer_b
        if args.gains_a:
            cfg_a.gains = {"preset": args.gains_a}
        if args.gains_b:
            cfg_b.gains = {"preset": args.gains_b}
    model_a, trace_a, rt_a = _run_from_config(cfg_a)
    model_b, trace_b, rt_b = _run_from_config(cfg_b)
    cmp = compare_runs(trace_a, trace_b)
    counts = state_counts(model_a)
    report = {
        "a": {"observer": cfg_a.observer, "runtime_s": rt_a,
              "metrics": cmp.a.to_dict()},
        "b": {"observer": cfg_b.observer, "runtime_s": rt_b,
              "metrics": cmp.b.to_dict()},
        "state_counts": counts,
    }
    report_path = out / "compare.json"
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"covariance states: full={counts['full']} "
          f"distributed={counts['distributed']} "
          f"diagonal={counts['distributed-scalar']}")
    print(f"wrote {report_path}")
    return 0


def cmd_presets(args) -> int:
    print("model presets:  " + ", ".join(sorted(MODEL_PRESETS)))
    print("gain presets:   A, B")
    print("input presets:  hh2, zero")
    return 0


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--preset", help="model preset name")
    p.add_argument("--observer",
                   choices=["none", "full", "distributed", "distributed-scalar"])
    p.add_argument("--gains", help="gain preset (A or B)")
    p.add_argument("--seed", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--stride", type=int, help="record every Nth step")
    p.add_argument("--noise", choices=["on", "off"])
    p.add_argument("--snr-db", dest="snr_db", type=float)
    p.add_argument("--out", help="output directory (default: $CONDOBS_OUT or .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condobs",
        description="Conductance-based network simulation and online "
                    "conductance estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one experiment, write trace + summary")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="excitation diagnostics on a recorded trace")
    _add_common(p)
    p.add_argument("--trace", required=True, help="trace CSV to analyze")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compare", help="run two experiments and compare estimates")
    _add_common(p)
    p.add_argument("--config-a", help="config JSON for run A")
    p.add_argument("--config-b", help="config JSON for run B")
    p.add_argument("--observer-a",
                   choices=["none", "full", "distributed", "distributed-scalar"])
    p.add_argument("--observer-b",
                   choices=["none", "full", "distributed", "distributed-scalar"])
    p.add_argument("--gains-a", help="gain preset for run A")
    p.add_argument("--gains-b", help="gain preset for run B")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("presets", help="list built-in presets")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
