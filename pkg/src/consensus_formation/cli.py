"""Command-line scenario runner.

Exit codes: 0 success, 1 certificate refusal, 2 numeric failure, 64 usage
or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import metrics, selftest
from .certificate import certify
from .config import ScenarioConfig, bundled_scenarios, load_config
from .engine import run, run_integrator_oracle
from .errors import CertificateError, ConfigurationError, FormationError
from .factory import BuiltScenario, build_scenario

EXIT_OK = 0
EXIT_CERTIFICATE = 1
EXIT_NUMERIC = 2
EXIT_USAGE = 64

OUT_ENV = "FORMATION_SIM_OUT"
DEFAULT_OUT = "formation_out"
MODES = ("run", "certify-only", "oracle", "sweep", "self-test")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="formation-sim", description="Consensus formation tracking simulator.")
    p.add_argument("command", nargs="?", choices=MODES, help="what to do (same as --mode)")
    p.add_argument("--mode", choices=MODES, help="run | certify-only | oracle | sweep | self-test")
    p.add_argument("--scenario", help=f"config file or bundled name ({', '.join(bundled_scenarios())})")
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--seed", type=int, help="override scenario.seed")
    p.add_argument("--dt", type=float, help="override simulation.dt")
    p.add_argument("--horizon", type=float, help="override simulation.horizon")
    p.add_argument("--gain", choices=("identity", "diagonal", "matrix", "search", "cascade", "riccati"),
                   help="override gain.kind")
    p.add_argument("--record-stride", type=int, help="override simulation.record_stride")
    p.add_argument("--seeds", help="sweep seeds, e.g. '0 1 2' (override run.seeds)")
    p.add_argument("--workers", type=int, default=None, help="sweep worker threads")
    p.add_argument("--override-certificate", action="store_true", default=None,
                   help="run even when the gain certificate is refuted")
    p.add_argument("--no-trace", action="store_true", help="skip the per-step trace CSV")
    return p


def resolve_mode(args: argparse.Namespace, cfg: ScenarioConfig | None) -> str:
    if args.command and args.mode and args.command != args.mode:
        raise UsageError(f"conflicting modes {args.command!r} and --mode {args.mode!r}")
    mode = args.command or args.mode
    if mode is None:
        mode = cfg.get("run", "mode") if cfg is not None else None
    if mode is None:
        raise UsageError("no mode given (use run, certify-only, oracle, sweep or self-test)")
    return mode


def apply_overrides(cfg: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    seeds = None
    if args.seeds is not None:
        try:
            seeds = tuple(int(s) for s in args.seeds.replace(",", " ").split())
        except ValueError:
            raise UsageError(f"bad --seeds {args.seeds!r}") from None
    return cfg.with_overrides({
        ("scenario", "seed"): args.seed,
        ("simulation", "dt"): args.dt,
        ("simulation", "horizon"): args.horizon,
        ("simulation", "record_stride"): args.record_stride,
        ("simulation", "override_certificate"): args.override_certificate,
        ("gain", "kind"): args.gain,
        ("run", "seeds"): seeds,
    })


def output_dir(args: argparse.Namespace, cfg: ScenarioConfig) -> Path:
    out = args.out or cfg.get("output", "dir") or os.environ.get(OUT_ENV) or DEFAULT_OUT
    path = Path(out)
    if path.exists() and not path.is_dir():
        raise UsageError(f"output path {path} exists and is not a directory")
    return path


def reproduce_command(args: argparse.Namespace, mode: str, cfg: ScenarioConfig) -> str:
    """Command line that regenerates the run; the output directory is left out on purpose."""
    parts = ["formation-sim", mode, "--scenario", str(args.scenario),
             "--seed", str(cfg.get("scenario", "seed")),
             "--dt", repr(cfg.get("simulation", "dt")),
             "--horizon", repr(cfg.get("simulation", "horizon")),
             "--gain", cfg.get("gain", "kind"),
             "--record-stride", str(cfg.get("simulation", "record_stride"))]
    if cfg.get("simulation", "override_certificate"):
        parts.append("--override-certificate")
    return " ".join(shlex.quote(p) for p in parts)


def _certificate_report(built: BuiltScenario):
    sc = built.scenario
    return certify(sc.gain.P, sc.spec, sc.model, built.domain,
                   samples=built.config.get("certificate", "samples"),
                   seed=built.config.get("certificate", "sample_seed"))


def _refused(report) -> bool:
    sampled = report.sampled_assumption5_max
    return not report.verdict or (sampled is not None and sampled > 0)


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(metrics._jsonable(doc), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_certify(built: BuiltScenario, out: Path) -> int:
    report = _certificate_report(built)
    out.mkdir(parents=True, exist_ok=True)
    doc = report.to_dict()
    _write_json(out / "certificate.json", doc)
    refused = _refused(report)
    print(f"certificate: {'fail' if refused else 'pass'}")
    for r in report.reasons:
        print(f"  {r}")
    if report.sampled_assumption5_max is not None:
        print(f"  sampled drift check max {report.sampled_assumption5_max:.3e}")
    return EXIT_CERTIFICATE if refused else EXIT_OK


def simulate(built: BuiltScenario, out: Path, reproduce: str, write_trace: bool = True,
             quiet: bool = False) -> tuple[int, metrics.RunSummary | None]:
    sc = built.scenario
    report = _certificate_report(built)
    if _refused(report) and not built.override_certificate:
        if not quiet:
            print("certificate refuted; refusing to run (use --override-certificate)", file=sys.stderr)
            for r in report.reasons:
                print(f"  {r}", file=sys.stderr)
        return EXIT_CERTIFICATE, None
    t0 = time.perf_counter()
    trace = run(sc, override_certificate=True, certificate=report)
    duration = time.perf_counter() - t0
    out.mkdir(parents=True, exist_ok=True)
    summary = metrics.summarize(trace, sc.model, report.to_dict(), built.config.echo(),
                                built.window, reproduce)
    summary.duration = duration
    if write_trace and built.config.get("output", "trace"):
        metrics.export_trace(trace, out / "trace.csv")
    metrics.export_edge_residuals(trace, out / "formation_errors.csv")
    metrics.export_tracking_errors(trace, sc.model, out / "tracking_errors.csv")
    metrics.export_summary(summary, out / "summary.json")
    _write_json(out / "timing.json", {"wall_clock_seconds": duration})
    if not quiet:
        print(f"leader tracking RMSE {summary.leader_tracking.aggregate:.6g} m")
        for i, v in sorted(summary.formation.items()):
            print(f"{metrics.agent_label(i)} formation RMSE {v:.6g} m")
        print(f"outputs written to {out}")
    if not trace.completed:
        if not quiet:
            print(f"numeric failure at step {trace.failed_step}: {trace.failure}", file=sys.stderr)
        return EXIT_NUMERIC, summary
    return EXIT_OK, summary


def cmd_oracle(built: BuiltScenario, out: Path) -> int:
    sc = built.scenario
    if sc.model.input_dim != sc.model.state_dim or np.any(sc.model.drift(sc.initial_states)):
        raise UsageError("oracle mode needs a single-integrator plant")
    res = run_integrator_oracle(sc.spec, sc.initial_states, sc.horizon, sc.dt)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"spread": res.spread, "displacements": res.displacements,
           "mean_displacement": res.displacements.mean(axis=0)}
    _write_json(out / "oracle.json", doc)
    print(f"oracle displacement spread {res.spread:.3e}")
    if not np.all(np.isfinite(res.displacements)):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(built: BuiltScenario, args: argparse.Namespace, out: Path, mode_cfg: ScenarioConfig) -> int:
    seeds = mode_cfg.get("run", "seeds")

    def one(seed: int) -> tuple[int, int, metrics.RunSummary | None]:
        cfg = mode_cfg.with_overrides({("scenario", "seed"): seed})
        b = build_scenario(cfg)
        code, summary = simulate(b, out / f"seed_{seed}", reproduce_command(args, "run", cfg),
                                 write_trace=not args.no_trace, quiet=True)
        return seed, code, summary

    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(one, seeds))
    codes = [c for _, c, _ in results]
    done = [s for _, c, s in results if s is not None]
    table: dict[str, dict[str, float]] = {}
    if done:
        series = {"leader": [s.leader_tracking.aggregate for s in done]}
        for i in sorted(done[0].formation):
            series[metrics.agent_label(i)] = [s.formation[i] for s in done]
        table = {k: {"min": min(v), "mean": float(np.mean(v)), "max": max(v)} for k, v in series.items()}
    doc = {"seeds": list(seeds), "exit_codes": codes, "rmse": table}
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "sweep.json", doc)
    for k, v in table.items():
        print(f"{k}: min {v['min']:.4g} mean {v['mean']:.4g} max {v['max']:.4g}")
    return max(codes) if codes else EXIT_OK


def cmd_self_test() -> int:
    results = selftest.run_all()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail} ({r.seconds:.2f} s)")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CERTIFICATE


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if (args.command or args.mode) == "self-test":
            return cmd_self_test()
        if not args.scenario:
            raise UsageError("--scenario is required")
        cfg = apply_overrides(load_config(args.scenario), args)
        mode = resolve_mode(args, cfg)
        if mode == "self-test":
            return cmd_self_test()
        out = output_dir(args, cfg)
        built = build_scenario(cfg)
        if mode == "certify-only":
            return cmd_certify(built, out)
        if mode == "oracle":
            return cmd_oracle(built, out)
        if mode == "sweep":
            return cmd_sweep(built, args, out, cfg)
        code, _ = simulate(built, out, reproduce_command(args, "run", cfg), write_trace=not args.no_trace)
        return code
    except (UsageError, ConfigurationError) as exc:
        print(f"formation-sim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CertificateError as exc:
        print(f"formation-sim: certificate: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    except FormationError as exc:
        print(f"formation-sim: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
