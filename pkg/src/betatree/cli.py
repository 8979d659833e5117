"""Command line interface: ``betatree build|modes|simulate|plot``.

Settings are resolved as flags > ``--config`` JSON file > defaults, and the
effective configuration is echoed into every document written. Errors exit
with status 1 and a single ``error: <Class>: <message>`` line on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, fields

import numpy as np

from . import harness
from .document import HistogramDocument, document_from_betatree, emit_plot_data, ingest_csv
from .errors import BetaTreeError
from .inference import extract_betatree, plan_alphas, propagate_gof, tree_ci
from .modes import find_modes
from .partition import BOUNDING_BOX, FULL_SPACE, Config, build_kdtree, validate_and_prepare

_CONFIG_FLAGS = {
    "alpha": "alpha",
    "stop_factor": "stop_threshold_factor",
    "box_trim": "trim_fraction",
    "trim_count": "trim_count",
    "max_path_len": "max_path_length",
    "jitter": "jitter",
    "seed": "seed",
}


def _add_config_flags(p):
    g = p.add_argument_group("histogram settings")
    g.add_argument("--config", help="JSON file with Config fields")
    g.add_argument("--alpha", type=float)
    g.add_argument("--box-trim", type=float, help="fraction trimmed per tail and coordinate")
    g.add_argument("--trim-count", type=int, help="order statistics trimmed per tail")
    g.add_argument("--no-box", action="store_true", help="root rectangle is all of R^d")
    g.add_argument("--stop-factor", type=float, help="leaf when n_k < factor * log n")
    g.add_argument("--jitter", action="store_true", default=None, help="break ties with seeded noise")
    g.add_argument("--seed", type=int)
    g.add_argument("--max-path-len", type=int)


def _add_input_flags(p):
    p.add_argument("--delimiter", default=",")
    p.add_argument("--header", action="store_true", help="first row holds column names")
    p.add_argument("--columns", help="comma-separated names or 0-based indices")


def resolve_config(args) -> Config:
    values = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            values.update(json.load(fh))
    for flag, name in _CONFIG_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    if getattr(args, "no_box", False):
        values["root_mode"] = FULL_SPACE
    known = {f.name for f in fields(Config)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return Config(**values)


def _read_points(args):
    cols = args.columns.split(",") if args.columns else None
    return ingest_csv(args.input, delimiter=args.delimiter, header=args.header, columns=cols).data


def _build(x, cfg):
    x = validate_and_prepare(x, cfg)
    tree = build_kdtree(x, cfg)
    inf = propagate_gof(tree_ci(tree, plan_alphas(tree, cfg.alpha)))
    return extract_betatree(inf), x.shape[0]


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_build(args):
    cfg = resolve_config(args)
    bt, n = _build(_read_points(args), cfg)
    _write(document_from_betatree(bt, cfg, n).dumps(), args.output)


def cmd_modes(args):
    if args.doc:
        doc = HistogramDocument.load(args.doc)
        cfg = Config(**doc.config)
        if args.max_path_len is not None:
            cfg = Config(**{**asdict(cfg), "max_path_length": args.max_path_len})
            doc.config = asdict(cfg)
        bt = doc.to_betatree()
    else:
        if not args.input:
            raise ValueError("give an input CSV or --doc")
        cfg = resolve_config(args)
        bt, n = _build(_read_points(args), cfg)
        doc = document_from_betatree(bt, cfg, n)
    report = find_modes(bt, max_len=cfg.max_path_length)
    _write(doc.with_modes(report).dumps(), args.output)


def cmd_simulate(args):
    seed = 0 if args.seed is None else args.seed
    if args.study == "pivot":
        res = harness.pivot_check(args.n, args.d, args.node, args.reps, seed,
                                  root_mode=BOUNDING_BOX if args.box else FULL_SPACE)
    elif args.study == "coverage":
        cfg = Config(alpha=args.alpha, root_mode=FULL_SPACE if args.no_box else BOUNDING_BOX)
        res = harness.coverage_check(harness.UniformCube(args.d), args.n, args.alpha, args.reps, seed, cfg)
    elif args.study == "theorem1":
        viol = 0
        eligible = 0
        for r in range(args.reps):
            x = harness.sample_uniform(args.d, args.n, harness.replication_rng(seed, r))
            t1 = harness.theorem1_check(build_kdtree(x, Config(alpha=args.alpha)), q=args.q)
            viol += t1.violations
            eligible += t1.eligible
        res = harness.SimulationResult(kind="theorem1", replications=args.reps, theorem1_violations=viol,
                                       params={"n": args.n, "d": args.d, "q": args.q,
                                               "eligible_nodes": eligible, "seed": seed})
    else:
        spec = harness.SCENARIO_2D if args.study == "scenario2d" else harness.SCENARIO_3D
        n = args.n or (2000 if args.study == "scenario2d" else 20000)
        cfg = Config(alpha=args.alpha, root_mode=FULL_SPACE if args.no_box else BOUNDING_BOX)
        res = harness.bin_count_study(spec, n, range(seed, seed + args.reps), cfg)
    _write(json.dumps(res.to_record(), sort_keys=True, indent=1) + "\n", args.output)


def cmd_plot(args):
    doc = HistogramDocument.load(args.doc)
    pts = None
    if args.data:
        cols = args.columns.split(",") if args.columns else None
        pts = ingest_csv(args.data, delimiter=args.delimiter, header=args.header, columns=cols).data
    out = emit_plot_data(doc, slice_axis=args.slice_axis, slice_value=args.slice_value,
                         slab=args.slab, density_floor=args.density_floor, points=pts)
    _write(json.dumps(out, sort_keys=True) + "\n", args.output)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="betatree", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a Beta-tree histogram from a CSV file")
    p.add_argument("input")
    _add_input_flags(p)
    _add_config_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("modes", help="run mode hunting on a CSV file or a saved document")
    p.add_argument("input", nargs="?")
    p.add_argument("--doc", help="histogram document produced by 'build'")
    _add_input_flags(p)
    _add_config_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("simulate", help="Monte Carlo checks")
    p.add_argument("study", choices=["pivot", "coverage", "theorem1", "scenario2d", "scenario3d"])
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--node", type=int, default=1, help="heap index k for the pivot study")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--box", action="store_true", help="pivot study with a bounding box")
    p.add_argument("--no-box", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="emit plot-ready rectangles and points")
    p.add_argument("--doc", required=True)
    p.add_argument("--data", help="CSV with observations to include")
    _add_input_flags(p)
    p.add_argument("--slice-axis", type=int, help="0-based axis of the slicing plane")
    p.add_argument("--slice-value", type=float)
    p.add_argument("--slab", type=float, default=0.0, help="half-width of the observation slab")
    p.add_argument("--density-floor", type=float, default=0.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.n is None and args.study in ("pivot", "coverage", "theorem1"):
        args.n = {"pivot": 100, "coverage": 1000, "theorem1": 10_000}[args.study]
    try:
        args.func(args)
    except (BetaTreeError, ValueError, OSError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
