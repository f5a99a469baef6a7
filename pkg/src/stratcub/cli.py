"""Command line interface.

Subcommands mirror the experiment kinds (partition, wce, besov, mz,
indicator, sharpness) plus ``rates`` (refit an existing CSV) and ``verify``
(a fast self-check battery).  Every experiment writes ``<out>.csv`` and
``<out>.json``; the exit code is nonzero iff any verdict fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import ExperimentConfig, run_experiment
from .rates import rate_fit


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", type=str, default=None,
                    help="JSON file with ExperimentConfig fields (flags override)")
    sp.add_argument("--space", type=str, default=None, choices=["torus", "sphere2"])
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--n", type=int, nargs="+", default=None, help="N grid")
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--kappa", type=float, default=None)
    sp.add_argument("--family", type=str, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--draws", type=int, default=None)
    sp.add_argument("--my", type=int, default=None)
    sp.add_argument("--mz", type=int, default=None)
    sp.add_argument("--fn", type=str, default=None, help="test function id")
    sp.add_argument("--fn-alpha", type=float, default=None)
    sp.add_argument("--set", type=str, default=None, choices=["arc", "box", "cap"])
    sp.add_argument("--variant", type=str, default=None, choices=["single", "sum"])
    sp.add_argument("--budget", type=int, default=None, help="partition sample budget")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--out", type=str, default=None, help="output path stem")


_FLAG_TO_FIELD = {
    "space": "space_kind", "dim": "dim", "n": "n_list", "alpha": "alpha",
    "eps": "eps", "kappa": "kappa", "family": "family", "p": "p",
    "draws": "n_draws", "my": "m_y", "mz": "m_z", "fn": "function",
    "fn_alpha": "fn_alpha", "set": "set_kind", "variant": "variant",
    "budget": "sample_budget", "seed": "seed", "workers": "workers",
    "out": "out",
}


def _config_from_args(kind: str, args: argparse.Namespace) -> ExperimentConfig:
    fields: dict = {"kind": kind}
    if args.config:
        fields.update(json.loads(Path(args.config).read_text()))
        fields["kind"] = kind
    for flag, fieldname in _FLAG_TO_FIELD.items():
        v = getattr(args, flag, None)
        if v is not None:
            fields[fieldname] = tuple(v) if flag == "n" else v
    if "n_list" in fields:
        fields["n_list"] = tuple(fields["n_list"])
    if "fn_params" in fields:
        fields["fn_params"] = dict(fields["fn_params"])
    if "set_params" in fields:
        fields["set_params"] = dict(fields["set_params"])
    return ExperimentConfig(**fields)


def _run_kind(kind: str, args: argparse.Namespace) -> int:
    cfg = _config_from_args(kind, args)
    rows, summary = run_experiment(cfg)
    print(json.dumps(summary, sort_keys=True, default=str, indent=1))
    return 0 if summary.get("verdict", True) else 1


def _cmd_rates(args: argparse.Namespace) -> int:
    lines = Path(args.csv).read_text().strip().splitlines()
    header = lines[0].split(",")
    idx = {name: header.index(name) for name in ("N", "value", "stderr")}
    points = []
    for line in lines[1:]:
        parts = line.split(",")
        points.append((float(parts[idx["N"]]), float(parts[idx["value"]]),
                       float(parts[idx["stderr"]])))
    fit = rate_fit(points, seed=args.seed or 0)
    result = {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2,
              "slope_ci": list(fit.slope_ci)}
    ok = True
    if args.expected is not None:
        ok = abs(fit.slope - args.expected) <= args.tol
        result["expected"] = args.expected
        result["verdict"] = ok
    print(json.dumps(result, sort_keys=True, indent=1))
    return 0 if ok else 1


def _cmd_verify(args: argparse.Namespace) -> int:
    """Fast end-to-end battery: partition exactness, the p = 2 moment
    identity, and the sub-regime worst-case-error slope at reduced budgets."""
    seed = args.seed if args.seed is not None else 0
    out = args.out
    failures = []
    battery = [
        ExperimentConfig(kind="partition", space_kind="torus", dim=1,
                         n_list=(16, 64, 256), sample_budget=20_000, seed=seed,
                         out=(out + "_partition" if out else None)),
        ExperimentConfig(kind="mz", space_kind="torus", dim=1,
                         n_list=(8, 16, 32, 64), function="coordinate", p=2.0,
                         n_draws=800, seed=seed,
                         out=(out + "_mz" if out else None)),
        ExperimentConfig(kind="wce", space_kind="torus", dim=1,
                         n_list=(16, 32, 64, 128), family="riesz", alpha=0.75,
                         p=2.0, n_draws=100, m_y=256, m_z=8, seed=seed,
                         out=(out + "_wce" if out else None)),
    ]
    for cfg in battery:
        rows, summary = run_experiment(cfg)
        line = {k: summary.get(k) for k in ("experiment", "verdict", "slope",
                                            "predicted_exponent") if k in summary}
        print(json.dumps(line, sort_keys=True, default=str))
        if not summary.get("verdict", True):
            failures.append(cfg.kind)
    if failures:
        print(f"FAILED: {failures}")
        return 1
    print("all checks passed")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="stratcub",
        description="Stratified random cubature experiments on T^d and S^2")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in ("partition", "wce", "besov", "mz", "indicator", "sharpness"):
        sp = sub.add_parser(kind, help=f"run a {kind} experiment")
        _add_common(sp)
    sp = sub.add_parser("rates", help="refit slopes from an experiment CSV")
    sp.add_argument("--csv", type=str, required=True)
    sp.add_argument("--expected", type=float, default=None)
    sp.add_argument("--tol", type=float, default=0.1)
    sp.add_argument("--seed", type=int, default=0)
    sp = sub.add_parser("verify", help="fast self-check battery")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", type=str, default=None)

    args = parser.parse_args(argv)
    if args.command == "rates":
        return _cmd_rates(args)
    if args.command == "verify":
        return _cmd_verify(args)
    return _run_kind(args.command, args)


if __name__ == "__main__":
    sys.exit(main())
