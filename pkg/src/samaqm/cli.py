"""Command-line entry point: ``run``, ``train``, ``gen-dataset`` and ``compare``."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

from . import config as cfgmod
from .config import ConfigError, ScenarioConfig, TrainSettings, parse_config
from .metrics import RunSummary, atomic_write, format_csv, format_summary_csv, format_table
from .sam import LabelPolicy, gen_dataset, train_sam
from .svm import ConvergenceError, ModelFormatError, TrainConfig, TrainingError, load_model
from .engine import rng_stream


class UsageError(ValueError):
    pass


def _overrides(args) -> List[str]:
    items = list(args.set or [])
    if args.seed is not None:
        items.append(f"seed={args.seed}")
    return items


def _scenario(args, require_controller=True) -> ScenarioConfig:
    return parse_config(args.config, _overrides(args), preset=args.preset,
                        require_controller=require_controller)


def _train_settings(args) -> TrainSettings:
    return parse_config(args.config, _overrides(args), schema=TrainSettings)


def _run_one(cfg: ScenarioConfig, controller: str):
    from .scenario import run_scenario

    r = run_scenario(cfg, controller)
    return r.summary, format_csv(r.log)


def _write_outputs(out: str, results: Sequence[tuple]) -> None:
    os.makedirs(out, exist_ok=True)
    summaries: List[RunSummary] = []
    for s, csv_text in results:
        atomic_write(os.path.join(out, f"{s.controller}.csv"), csv_text)
        summaries.append(s)
    atomic_write(os.path.join(out, "summary.txt"), format_table(summaries))
    atomic_write(os.path.join(out, "summary.csv"), format_summary_csv(summaries))
    sys.stdout.write(format_table(summaries))


def _check_model(cfg: ScenarioConfig, controllers: Sequence[str]) -> None:
    if "sam" in controllers:
        if not cfg.sam_model_path:
            raise cfgmod.MissingKeyError("sam.model_path", " (required when running sam)")
        load_model(cfg.sam_model_path)


def cmd_run(args) -> int:
    cfg = _scenario(args)
    _check_model(cfg, [cfg.controller])
    _write_outputs(args.out, [_run_one(cfg, cfg.controller)])
    return 0


def cmd_compare(args) -> int:
    controllers = [c.strip() for c in args.controllers.split(",") if c.strip()]
    if len(controllers) < 2:
        raise UsageError("compare needs at least two controllers")
    if len(set(controllers)) != len(controllers):
        raise UsageError("compare: duplicate controller names")
    for c in controllers:
        if c not in cfgmod.CONTROLLERS:
            raise cfgmod.BadValueError("--controllers", c, f"expected one of {', '.join(cfgmod.CONTROLLERS)}")
    base = _scenario(args, require_controller=False)
    _check_model(base, controllers)
    cfgs = [base.replace(controller=c, seed=base.seed + (i if args.vary_seed else 0))
            for i, c in enumerate(controllers)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, cfgs, controllers))
    else:
        results = [_run_one(c, c.controller) for c in cfgs]
    _write_outputs(args.out, results)
    return 0


def cmd_train(args) -> int:
    st = _train_settings(args)
    tc = TrainConfig(st.C, st.gamma, st.tol, st.max_passes)
    policy = LabelPolicy(st.theta, st.g, st.weights)
    out = args.out
    if os.path.isdir(out):
        out = os.path.join(out, "sam.model")
    rep = train_sam(tc, policy, st.n, st.seed, path=out)
    print(f"dataset size     {rep.n}")
    print(f"class balance    {rep.positives} drop / {rep.n - rep.positives} enqueue ({rep.balance:.1%} drop)")
    print(f"train accuracy   {rep.accuracy:.4f}")
    print(f"support vectors  {rep.n_support}")
    print(f"model written to {out}")
    return 0


def format_dataset(data) -> str:
    lines = ["u1,u2,u3,u4,u5,label"]
    for s in data:
        lines.append(",".join(repr(float(u)) for u in s.x) + ("," + ("+1" if s.y > 0 else "-1")))
    return "\n".join(lines) + "\n"


def cmd_gen_dataset(args) -> int:
    st = _train_settings(args)
    policy = LabelPolicy(st.theta, st.g, st.weights)
    data = gen_dataset(st.n, policy, rng_stream(st.seed, "dataset"))
    out = args.out
    if os.path.isdir(out):
        out = os.path.join(out, "dataset.csv")
    atomic_write(out, format_dataset(data))
    pos = sum(s.y > 0 for s in data)
    print(f"{len(data)} patterns, {pos} drop / {len(data) - pos} enqueue ({pos / len(data):.1%} drop) -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="samaqm", description="AQM comparison simulator (RED, Blue, PI, SAM)")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    common.add_argument("--seed", type=int, help="random seed (same as --set seed=N)")
    sub = p.add_subparsers(dest="command", required=True)

    sim = argparse.ArgumentParser(add_help=False, parents=[common])
    sim.add_argument("--preset", choices=sorted(cfgmod.PRESETS), help="scenario size preset")
    sim.add_argument("--out", default="out", help="output directory (default: out)")

    r = sub.add_parser("run", parents=[sim], help="simulate one controller")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", parents=[sim], help="simulate several controllers on one scenario")
    c.add_argument("--controllers", default="red,blue,pi,sam", help="comma-separated list")
    c.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    c.add_argument("--vary-seed", action="store_true", help="offset the seed per controller")
    c.set_defaults(func=cmd_compare)

    t = sub.add_parser("train", parents=[common], help="train a SAM model file")
    t.add_argument("--preset", choices=sorted(cfgmod.PRESETS), help=argparse.SUPPRESS)
    t.add_argument("--out", default="sam.model", help="model file (or directory)")
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("gen-dataset", parents=[common], help="write a labeled pattern dataset")
    g.add_argument("--preset", choices=sorted(cfgmod.PRESETS), help=argparse.SUPPRESS)
    g.add_argument("--out", default="dataset.csv", help="CSV file (or directory)")
    g.set_defaults(func=cmd_gen_dataset)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError, TrainingError, ConvergenceError, ModelFormatError,
            OSError, ValueError) as exc:
        print(f"samaqm {args.command}: error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, (ConfigError, UsageError)) else 1


if __name__ == "__main__":
    sys.exit(main())
