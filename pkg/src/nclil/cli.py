"""Command-line harness.

Every subcommand follows the same protocol: resolve the configuration
(defaults < config file < explicit flags), echo it to
resolved-config.json in the output directory, run, write summary.json
plus per-trial CSVs, and exit 0 on success, 1 on invalid configuration,
2 when a checked inequality was violated (with a reproducer.json naming
the offending trials).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import verify
from .errors import ConfigError, NclilError
from .filtration import AlgebraModel
from .lil import (BaselineConfig, LILParameters, LILRunConfig,
                  SemicircleConfig, run_lil_experiment,
                  scalar_kolmogorov_baseline, semicircular_demo)
from .verify import write_rows_csv


class _Parser(argparse.ArgumentParser):
    def error(self, message):   # argparse default exits 2, which we reserve
        raise ConfigError(message)


def _np_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, default=_np_default)
        f.write("\n")


def _parse_floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}") from exc


def _parse_model(text: str) -> AlgebraModel:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"model spec must look like kind:m:n, got {text!r}")
    return AlgebraModel(parts[0], int(parts[1]), int(parts[2]))


def _resolve(args, defaults: dict) -> dict:
    resolved = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config) as f:
            file_cfg = json.load(f)
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        resolved.update(file_cfg)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            resolved[key] = val
    return resolved


def _prepare_out(args, name: str, resolved: dict) -> Path:
    out = Path(args.out) if args.out else Path(f"{name}-out")
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "resolved-config.json", {"command": name, **resolved})
    return out


def _emit_sweep(name: str, result, out: Path, resolved: dict, started: float) -> int:
    with open(out / "trials.csv", "w", newline="") as f:
        write_rows_csv(result.rows, f)
    summary = result.to_json()
    summary["runtime_seconds"] = time.perf_counter() - started
    _write_json(out / "summary.json", summary)
    if result.violations:
        _write_json(out / "reproducer.json", {
            "command": name, "config": resolved,
            "violations": result.violations[:10]})
        print(f"{name}: {len(result.violations)} violations out of "
              f"{len(result.rows)} checks; reproducer in {out}/reproducer.json")
        return 2
    print(f"{name}: ok ({len(result.rows)} checks, outputs in {out})")
    return 0


def _add_common(sp, seed_default=0):
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--config", help="JSON file with config values")
    sp.add_argument("--seed", type=int, default=None,
                    help=f"stream seed (default {seed_default})")


def cmd_verify_ce(args) -> int:
    started = time.perf_counter()
    defaults = {"samples": 100, "seed": 0}
    resolved = _resolve(args, defaults)
    out = _prepare_out(args, "verify-ce", resolved)
    res = verify.sweep_ce(samples=resolved["samples"], seed=resolved["seed"])
    return _emit_sweep("verify-ce", res, out, resolved, started)


def cmd_verify_expineq(args) -> int:
    started = time.perf_counter()
    defaults = {"trials": 1000, "eps": [0.1, 0.5, 1.0], "lambda_points": 20,
                "seed": 0, "workers": 1}
    resolved = _resolve(args, defaults)
    out = _prepare_out(args, "verify-expineq", resolved)
    res = verify.sweep_expineq(trials=resolved["trials"], eps_values=resolved["eps"],
                               lambda_points=resolved["lambda_points"],
                               seed=resolved["seed"], workers=resolved["workers"])
    return _emit_sweep("verify-expineq", res, out, resolved, started)


def cmd_verify_doob(args) -> int:
    started = time.perf_counter()
    defaults = {"trials_per_kind": 100, "p": [4.0, 6.0, 8.0],
                "kinds": ["tensor", "pinching", "diagonal"], "seed": 0, "workers": 1}
    resolved = _resolve(args, defaults)
    if min(resolved["p"]) < 4.0:
        raise ConfigError(f"doob check needs p >= 4, got {resolved['p']}")
    out = _prepare_out(args, "verify-doob", resolved)
    res = verify.sweep_doob(trials_per_kind=resolved["trials_per_kind"],
                            ps=resolved["p"], kinds=resolved["kinds"],
                            seed=resolved["seed"], workers=resolved["workers"])
    return _emit_sweep("verify-doob", res, out, resolved, started)


def cmd_verify_dualdoob(args) -> int:
    started = time.perf_counter()
    defaults = {"trials_per_kind": 50, "p": [1.0, 1.5, 2.0],
                "kinds": ["tensor", "pinching", "diagonal"], "seed": 0, "workers": 1}
    resolved = _resolve(args, defaults)
    if min(resolved["p"]) < 1.0 or max(resolved["p"]) > 2.0:
        raise ConfigError(f"dual doob check needs p in [1, 2], got {resolved['p']}")
    out = _prepare_out(args, "verify-dualdoob", resolved)
    res = verify.sweep_dual_doob(trials_per_kind=resolved["trials_per_kind"],
                                 ps=resolved["p"], kinds=resolved["kinds"],
                                 seed=resolved["seed"], workers=resolved["workers"])
    return _emit_sweep("verify-dualdoob", res, out, resolved, started)


def cmd_verify_chebyshev(args) -> int:
    started = time.perf_counter()
    defaults = {"trials": 20, "t_points": 20, "seed": 0, "workers": 1}
    resolved = _resolve(args, defaults)
    out = _prepare_out(args, "verify-chebyshev", resolved)
    res = verify.sweep_chebyshev(trials=resolved["trials"], t_points=resolved["t_points"],
                                 seed=resolved["seed"], workers=resolved["workers"])
    return _emit_sweep("verify-chebyshev", res, out, resolved, started)


def cmd_verify_scalarineq(args) -> int:
    started = time.perf_counter()
    defaults = {"count": 400, "seed": 0}
    resolved = _resolve(args, defaults)
    out = _prepare_out(args, "verify-scalarineq", resolved)
    res = verify.sweep_scalar_bound(random_count=resolved["count"], seed=resolved["seed"])
    return _emit_sweep("verify-scalarineq", res, out, resolved, started)


def cmd_lil_run(args) -> int:
    defaults = {
        "horizon": 1_000_000, "paths": 4096, "law": "rademacher", "variance": 1.0,
        "eta": 1.5, "delta": 0.1, "delta_prime": 0.1, "eps": 0.1, "eps_prime": None,
        "beta": 2.0, "seed": 0, "checkpoints": 200, "window_decades": 1.0,
        "model": None, "generator": "model", "bound_scale": 1.0, "strict": True,
        "chunk": 2048,
    }
    resolved = _resolve(args, defaults)
    if args.allow_uncertified:
        resolved["strict"] = False
    params = LILParameters(eta=resolved["eta"], delta=resolved["delta"],
                           delta_prime=resolved["delta_prime"], eps=resolved["eps"],
                           eps_prime=resolved["eps_prime"], beta=resolved["beta"])
    model = resolved["model"]
    if isinstance(model, str):
        model = _parse_model(model)
    elif isinstance(model, dict):
        model = AlgebraModel.from_json(model)
    cfg = LILRunConfig(
        params=params, horizon=resolved["horizon"], paths=resolved["paths"],
        law=resolved["law"], variance=resolved["variance"], seed=resolved["seed"],
        model=model, generator=resolved["generator"],
        bound_scale=resolved["bound_scale"], checkpoints=resolved["checkpoints"],
        window_decades=resolved["window_decades"], strict=resolved["strict"],
        chunk=resolved["chunk"])
    resolved["model"] = None if model is None else model.to_json()
    out = _prepare_out(args, "lil-run", resolved)

    report = run_lil_experiment(cfg)
    summary = report.to_json()
    summary["runtime_seconds"] = report.runtime_seconds
    _write_json(out / "summary.json", summary)

    rows = []
    cum = 0.0
    for b in report.blocks:
        row = b.to_json()
        if b.used:
            cum += b.bound.bound_final
            row["partial_sum"] = cum
        else:
            row["partial_sum"] = ""
        rows.append(row)
    with open(out / "blocks.csv", "w", newline="") as f:
        write_rows_csv(rows, f)
    cps = report.checkpoints
    cp_rows = [dict(zip(cps.keys(), vals)) for vals in zip(*cps.values())]
    with open(out / "checkpoints.csv", "w", newline="") as f:
        write_rows_csv(cp_rows, f)

    print(f"lil-run [{report.engine}]: blocks={len(report.blocks)} "
          f"used={len(report.used_blocks)} n0={report.n0} "
          f"deficit={report.deficit:.4f} limsup={report.empirical_limsup:.4f} "
          f"threshold={report.threshold:.3f} "
          f"reduction_certified={report.params.reduction_certified}")
    if not report.bc["ok"]:
        _write_json(out / "reproducer.json", {
            "command": "lil-run", "config": resolved, "bc": report.bc})
        print(f"lil-run: summability wiring check failed; see {out}/reproducer.json")
        return 2
    print(f"lil-run: ok (outputs in {out})")
    return 0


def cmd_baseline_scalar(args) -> int:
    defaults = {"paths": 4096, "horizon": 1_000_000, "law": "rademacher",
                "seed": 0, "chunk": 4096}
    resolved = _resolve(args, defaults)
    out = _prepare_out(args, "baseline-scalar", resolved)
    cfg = BaselineConfig(paths=resolved["paths"], horizon=resolved["horizon"],
                         law=resolved["law"], seed=resolved["seed"],
                         chunk=resolved["chunk"])
    rep = scalar_kolmogorov_baseline(cfg)
    summary = rep.to_json()
    summary["runtime_seconds"] = rep.runtime_seconds
    _write_json(out / "summary.json", summary)
    if args.per_path:
        with open(out / "paths.csv", "w", newline="") as f:
            write_rows_csv([{"path": i, "runmax": float(v)}
                            for i, v in enumerate(rep.per_path)], f)
    flag = " (pre-asymptotic horizon)" if rep.preasymptotic else ""
    print(f"baseline-scalar: median={rep.median:.4f} q90={rep.q90:.4f} "
          f"frac>2={rep.frac_above_2:.4f}{flag} (outputs in {out})")
    return 0


def cmd_demo_semicircular(args) -> int:
    defaults = {"size": 200, "steps": 10_000, "checkpoints": [100, 1000, 10_000],
                "seed": 0, "ks_tol": 0.05}
    resolved = _resolve(args, defaults)
    out = _prepare_out(args, "demo-semicircular", resolved)
    cfg = SemicircleConfig(size=resolved["size"], steps=resolved["steps"],
                           checkpoints=tuple(int(c) for c in resolved["checkpoints"]),
                           seed=resolved["seed"])
    rep = semicircular_demo(cfg)
    summary = rep.to_json()
    summary["runtime_seconds"] = rep.runtime_seconds
    _write_json(out / "summary.json", summary)
    with open(out / "trials.csv", "w", newline="") as f:
        write_rows_csv(rep.rows, f)
    print(f"demo-semicircular: stats={[round(r['stat'], 4) for r in rep.rows]} "
          f"ks_first={rep.ks_first:.4f} trend_ok={rep.trend_ok}")
    if not rep.trend_ok or rep.ks_first > resolved["ks_tol"]:
        _write_json(out / "reproducer.json", {
            "command": "demo-semicircular", "config": resolved,
            "rows": rep.rows, "ks_first": rep.ks_first})
        print(f"demo-semicircular: expected trend failed; see {out}/reproducer.json")
        return 2
    print(f"demo-semicircular: ok (outputs in {out})")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="nclil",
                     description="numerical laboratory for iterated-logarithm "
                                 "bounds on matrix martingales")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("verify-ce", help="conditional-expectation axioms")
    _add_common(sp)
    sp.add_argument("--samples", type=int, default=None)
    sp.set_defaults(func=cmd_verify_ce)

    sp = sub.add_parser("verify-expineq", help="exponential moment bound sweep")
    _add_common(sp)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--eps", type=_parse_floats, default=None)
    sp.add_argument("--lambda-points", dest="lambda_points", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_verify_expineq)

    sp = sub.add_parser("verify-doob", help="column-norm consequence sweep")
    _add_common(sp)
    sp.add_argument("--trials-per-kind", dest="trials_per_kind", type=int, default=None)
    sp.add_argument("--p", type=_parse_floats, default=None)
    sp.add_argument("--kinds", type=lambda s: s.split(","), default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_verify_doob)

    sp = sub.add_parser("verify-dualdoob", help="dual projection sum sweep")
    _add_common(sp)
    sp.add_argument("--trials-per-kind", dest="trials_per_kind", type=int, default=None)
    sp.add_argument("--p", type=_parse_floats, default=None)
    sp.add_argument("--kinds", type=lambda s: s.split(","), default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_verify_dualdoob)

    sp = sub.add_parser("verify-chebyshev", help="constructive Chebyshev sweep")
    _add_common(sp)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--t-points", dest="t_points", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_verify_chebyshev)

    sp = sub.add_parser("verify-scalarineq", help="scalar power-exponential bound sweep")
    _add_common(sp)
    sp.add_argument("--count", type=int, default=None)
    sp.set_defaults(func=cmd_verify_scalarineq)

    sp = sub.add_parser("lil-run", help="block decomposition experiment")
    _add_common(sp)
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--paths", type=int, default=None)
    sp.add_argument("--law", default=None)
    sp.add_argument("--variance", type=float, default=None)
    sp.add_argument("--eta", type=float, default=None)
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--delta-prime", dest="delta_prime", type=float, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--eps-prime", dest="eps_prime", type=float, default=None)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--checkpoints", type=int, default=None)
    sp.add_argument("--window-decades", dest="window_decades", type=float, default=None)
    sp.add_argument("--model", default=None, help="dense carrier, e.g. tensor:2:8")
    sp.add_argument("--generator", default=None, choices=["model", "tensor"])
    sp.add_argument("--bound-scale", dest="bound_scale", type=float, default=None)
    sp.add_argument("--chunk", type=int, default=None)
    sp.add_argument("--allow-uncertified", action="store_true",
                    help="keep uncertified blocks instead of failing")
    sp.set_defaults(func=cmd_lil_run)

    sp = sub.add_parser("baseline-scalar", help="classical random-walk calibration")
    _add_common(sp)
    sp.add_argument("--paths", type=int, default=None)
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--law", default=None)
    sp.add_argument("--chunk", type=int, default=None)
    sp.add_argument("--per-path", action="store_true", help="write per-path maxima")
    sp.set_defaults(func=cmd_baseline_scalar)

    sp = sub.add_parser("demo-semicircular", help="matrix sum edge statistics")
    _add_common(sp)
    sp.add_argument("--size", type=int, default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--checkpoints", type=lambda s: [int(v) for v in s.split(",")],
                    default=None)
    sp.add_argument("--ks-tol", dest="ks_tol", type=float, default=None)
    sp.set_defaults(func=cmd_demo_semicircular)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NclilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
