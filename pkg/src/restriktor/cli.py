"""Command-line front end and experiment orchestration."""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from .config import ExperimentConfig, load_config
from .curve import CurveModel, load_model
from .errors import RestriktorError
from .experiments import RUNNERS, Check, Context, default_suite

SUMMARY_NAME = "summary.json"


def resolve_threads(flag: int | None) -> int:
    """--threads wins; RESTRIKTOR_THREADS is the fallback; default 1."""
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("RESTRIKTOR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise RestriktorError(f"RESTRIKTOR_THREADS must be an integer, got {env!r}") from None
    return 1


def _model_for(path: str | None, m: int = 4) -> CurveModel:
    if path is None:
        return CurveModel(m, (Fraction(1),))
    if not Path(path).is_file():
        raise RestriktorError(f"model file not found: {path}")
    return load_model(path)


def _run_one(name: str, kind: str, params: dict, ctx: Context, nested: bool = True) -> list[Check]:
    if kind not in RUNNERS:
        raise RestriktorError(f"experiment '{name}': unknown kind '{kind}'")
    sub = Context(ctx.model, ctx.out_dir / name if nested else ctx.out_dir, ctx.seed, ctx.tolerance_scale)
    params = dict(params)
    params.setdefault("out", f"{kind}.csv")
    return RUNNERS[kind](params, sub)


def run(config: ExperimentConfig, threads: int | None = None, echo=print) -> int:
    """Run every configured experiment, write summary.json, return the exit status."""
    model = _model_for(config.model)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx = Context(model, out, config.seed, config.tolerance_scale)
    n = resolve_threads(threads if threads is not None else config.threads)
    jobs = config.experiments
    # each experiment writes into its own subdirectory unless it is the only one
    nested = len(jobs) > 1
    for kind in {k for _, k, _ in jobs}:
        if kind not in RUNNERS:
            raise RestriktorError(f"unknown experiment kind '{kind}'")
    if n > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(n) as pool:
            results = list(pool.map(lambda e: _run_one(*e, ctx, nested), jobs))
    else:
        results = [_run_one(*e, ctx, nested) for e in jobs]
    entries = []
    for (name, kind, _), checks in zip(jobs, results):
        for c in checks:
            d = c.as_dict()
            d["experiment"] = name
            entries.append(d)
            echo(c.line())
    ok = all(e["status"] == "PASS" for e in entries)
    summary = {"status": "PASS" if ok else "FAIL", "model": {"m": model.m, "chi": [str(c) for c in model.chi]},
               "seed": config.seed, "tolerance_scale": config.tolerance_scale, "checks": entries}
    (out / SUMMARY_NAME).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0 if ok else 1


# ------------------------------------------------------------------ argument parsing

def _dyadic(text: str) -> float:
    """Accepts 0.0625, 1/16 or 2^-4."""
    t = text.strip()
    try:
        if t.startswith("2^"):
            return 2.0 ** float(t[2:])
        return float(Fraction(t))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="curve model file (default: m=4, chi=1)")
    common.add_argument("--out-dir", default="out", help="directory for CSV and summary output")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="worker threads (env RESTRIKTOR_THREADS)")
    common.add_argument("--tolerance-scale", type=float, default=1.0, help="multiplier for all tolerances")

    ap = argparse.ArgumentParser(prog="restriktor", description="Finite-type cone restriction toolkit",
                                 parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common])

    p = add("decompose", "build the tile decomposition")
    p.add_argument("--delta", type=_dyadic, required=True)
    p.add_argument("--beta", type=_dyadic)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--out", default="tiles.csv")

    p = add("audit-overlap", "count tile overlaps at sampled points")
    p.add_argument("--delta", type=_dyadic, required=True)
    p.add_argument("--beta", type=_dyadic)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--outer", action="store_true", help="use the outer box test instead of exact tile sums")
    p.add_argument("--doubled", action="store_true", help="count doubled tiles")
    p.add_argument("--out", default="report.csv")

    p = add("geometry", "exact convex geometry trials")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--out", default="geo.csv")

    p = add("conv-check", "convolution bound on tile pairs")
    p.add_argument("--delta", type=_dyadic, default=2.0**-5)
    p.add_argument("--beta", type=_dyadic)
    p.add_argument("--s", default="1 1.5 2", help="space separated exponents")
    p.add_argument("--pairs", default="auto", help="'auto' or 'k,j,n:l,i,p;...'")
    p.add_argument("--out", default="conv.csv")

    p = add("match", "sequence matching")
    p.add_argument("--a", help="file with the sequence a")
    p.add_argument("--b", help="file with the sequence b")
    p.add_argument("--C", type=float, help="gap ratio constant")
    p.add_argument("--trials", type=int, default=1000, help="random trials when no files are given")
    p.add_argument("--out", default="match.csv")

    p = add("knapp", "dilation slope of the Knapp quotient")
    p.add_argument("--points", help="\"p',1/q; ...\" (default: three admissible points)")
    p.add_argument("--out", default="knapp.csv")

    p = add("osc", "decay of the one-dimensional oscillatory integral")
    p.add_argument("--T", type=float, default=2.0)
    p.add_argument("--out", default="osc.csv")

    p = add("diverge", "partial integrals at and beyond the endpoint")
    p.add_argument("--p-prime", default=None, help="space separated p' values (default m+1 and m+2)")
    p.add_argument("--out", default="diverge.csv")

    p = add("superlemma", "discrete extension spot check")
    p.add_argument("--deltas", default="2^-6 2^-8")
    p.add_argument("--points", help="\"p',1/q; ...\"")
    p.add_argument("--draws", type=int, default=32)
    p.add_argument("--out", default="superlemma.csv")

    p = add("suite", "run a configured list of experiments")
    p.add_argument("--config", help="INI or JSON experiment file (default: built-in desk suite)")
    return ap


def _params_from_args(args) -> dict:
    skip = {"command", "model", "out_dir", "seed", "threads", "tolerance_scale", "config"}
    params = {}
    for k, v in vars(args).items():
        if k in skip or v is None or v is False:
            continue
        params[k] = v
    if args.command == "audit-overlap":
        params["exact"] = "false" if params.pop("outer", False) else "true"
        params["doubled"] = "true" if params.get("doubled") else "false"
    if args.command == "conv-check" and "pairs" in params and params["pairs"] == "auto":
        params["deltas"] = [params["delta"]]
    if args.command == "superlemma":
        params["deltas"] = [_dyadic(t) for t in params["deltas"].split()]
    if args.command == "diverge" and "p_prime" in params:
        params["p_prime"] = [float(Fraction(t)) for t in params["p_prime"].split()]
    return params


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "suite":
            if args.config:
                cfg = load_config(args.config)
                if args.model:
                    cfg.model = args.model
                if args.out_dir != "out":
                    cfg.out_dir = args.out_dir
                if args.seed:
                    cfg.seed = args.seed
                if args.tolerance_scale != 1.0:
                    cfg.tolerance_scale = args.tolerance_scale
            else:
                cfg = ExperimentConfig(args.model, args.out_dir, args.seed, None, args.tolerance_scale)
                cfg.experiments = default_suite(_model_for(args.model))
        else:
            cfg = ExperimentConfig(args.model, args.out_dir, args.seed, None, args.tolerance_scale,
                                   [(args.command, args.command, _params_from_args(args))])
        return run(cfg, args.threads)
    except (RestriktorError, ValueError) as exc:
        print(f"restriktor: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
