"""Command-line front end: ``generate``, ``metrics``, ``benchmark`` and ``voronoi``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adaptive import METHODS as ADAPTIVE_METHODS
from .adaptive import AdaptiveSampler, AdaptiveSpec
from .design import (
    DesignMatrix,
    format_coordinate,
    intersite_distance,
    lhs_fraction,
    phi_p,
    projected_distance,
    voronoi_cell_areas,
    write_design,
)
from .evaluation import configs_from_file, run_experiment, write_results
from .exceptions import DoeError, PhiPOverflowError, UndefinedMetricError
from .lowdiscrepancy import SequenceState
from .oneshot import load_design, random_lhs, sf_lhs

log = logging.getLogger("seqdoe")

DEFAULT_SEED = 20230101
ONESHOT = ("random_lhs", "sflhs")
SEQUENCES = ("halton", "sobol")
GENERATE_METHODS = ONESHOT + SEQUENCES + ADAPTIVE_METHODS
_METHOD_ALIASES = {"sf_lhs": "sflhs", "rlhs": "random_lhs"}


class CliError(Exception):
    pass


def _seed(value):
    if value == "random":
        return "random"
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {value!r}")


def _alpha(value):
    if value == "auto":
        return value
    try:
        a = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"alpha must be 'auto' or a number in [0, 1], got {value!r}")
    if not 0.0 <= a <= 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in [0, 1], got {a}")
    return a


def _method(value):
    value = _METHOD_ALIASES.get(value, value)
    if value not in GENERATE_METHODS:
        raise argparse.ArgumentTypeError(
            f"invalid method {value!r}; choose from {', '.join(GENERATE_METHODS)}"
        )
    return value


def _resolve_seed(seed):
    if seed == "random":
        seed = secrets.randbits(63)
    print(f"seed: {seed}")
    return seed


def _fmt(value):
    return "" if value is None else repr(float(value))


def _safe_metrics(design, p=50):
    """Metric values with ``None`` where a metric is undefined, plus notices."""
    out, notes = {}, []
    for name, func in (("intersite", intersite_distance), ("projected", projected_distance)):
        try:
            out[name] = func(design)
        except UndefinedMetricError:
            out[name] = None
            notes.append(f"{name}: undefined (needs at least 2 points)")
    try:
        out["phi_p"] = phi_p(design, p)
    except UndefinedMetricError:
        out["phi_p"] = None
        notes.append("phi_p: undefined (needs at least 2 points)")
    except PhiPOverflowError:
        out["phi_p"] = None
        notes.append("phi_p: undefined (coincident points)")
    out["lhs_fraction"] = lhs_fraction(design)
    return out, notes


def _print_report(values, notes):
    for key in ("intersite", "projected", "phi_p", "lhs_fraction"):
        if values[key] is not None:
            print(f"{key}: {values[key]:.10g}")
    for note in notes:
        print(note)


class _Outputs:
    """Collects files written by a command and removes them if it fails."""

    def __init__(self):
        self.written = []

    def text(self, path, content):
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
        self.written.append(path)

    def design(self, path, design):
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        write_design(design, tmp)
        os.replace(tmp, path)
        self.written.append(path)

    def cleanup(self):
        for p in self.written:
            try:
                p.unlink()
            except FileNotFoundError:
                pass


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_generate(args, outputs):
    method = args.method
    seed = _resolve_seed(args.seed)
    if args.n < 1:
        raise CliError("--n must be positive")
    initial = None
    if args.initial:
        initial = load_design(args.initial)
        if args.dim is not None and args.dim != initial.dim:
            raise CliError(f"--dim {args.dim} does not match the {initial.dim}-D initial design")
    dim = initial.dim if initial is not None else args.dim
    if dim is None or dim < 1:
        raise CliError("--dim is required (or give --initial)")

    trace_rows = []

    def trace(design):
        values, _ = _safe_metrics(design)
        trace_rows.append((design.size, _fmt(values["intersite"]), _fmt(values["projected"]),
                           _fmt(values["lhs_fraction"])))

    if method in ONESHOT:
        if initial is not None or args.init_size is not None:
            raise CliError(f"{method} is one-shot and takes no --initial/--init-size")
        if method == "sflhs":
            design = sf_lhs(args.n, dim, seed, args.pool)
        else:
            design = random_lhs(args.n, dim, seed)
    elif method in SEQUENCES:
        state = SequenceState(method, dim)
        design = initial if initial is not None else DesignMatrix.empty(dim)
        while design.size < args.n:
            design = design.append(state.next())
            trace(design)
    else:
        if initial is None:
            if args.init_size is None:
                raise CliError(f"{method} needs --initial <design.csv> or --init-size <k>")
            design = sf_lhs(args.init_size, dim, seed, args.pool)
        elif args.init_size is not None:
            raise CliError("give either --initial or --init-size, not both")
        else:
            design = initial
        if design.size >= args.n:
            raise CliError(f"--n {args.n} must exceed the starting design size {design.size}")
        spec = AdaptiveSpec(method, seed=seed, alpha=args.alpha,
                            candidates_factor=args.candidates_factor,
                            slices_factor=args.slices_factor)
        sampler = AdaptiveSampler(spec, seed=np.random.SeedSequence(seed, spawn_key=(1,)))
        design, _ = sampler.extend(design, args.n, callback=trace)
        if sampler.fallbacks:
            print(f"warning: mipt fell back to max-projected selection {sampler.fallbacks} time(s)")

    outputs.design(args.out, design)
    if trace_rows:
        trace_path = args.trace or str(Path(args.out).with_suffix("")) + "_trace.csv"
        outputs.text(trace_path, _csv(("n", "intersite", "projected", "lhs_fraction"), trace_rows))
        print(f"trace: {trace_path}")
    print(f"design: {args.out} ({design.size} x {design.dim})")
    values, notes = _safe_metrics(design)
    _print_report(values, notes)


def cmd_metrics(args, outputs):
    design = load_design(args.design)
    values, notes = _safe_metrics(design, args.p)
    print(f"design: {args.design} ({design.size} x {design.dim})")
    _print_report(values, notes)
    if args.out:
        outputs.text(args.out, _csv(("n", "dim", "intersite", "projected", "phi_p", "lhs_fraction"),
                                    [(design.size, design.dim, _fmt(values["intersite"]),
                                      _fmt(values["projected"]), _fmt(values["phi_p"]),
                                      _fmt(values["lhs_fraction"]))]))


def cmd_benchmark(args, outputs):
    configs, workers = configs_from_file(args.config)
    if args.workers is not None:
        workers = args.workers
    seed = configs[0].seed
    print(f"seed: {seed}")
    results = []
    for cfg in configs:
        print(f"running {cfg.method} on {cfg.function} d={cfg.dim} with {cfg.metamodel} "
              f"({cfg.repetitions} repetitions, n {cfg.initial_size}->{cfg.max_samples})")
        results.append(run_experiment(cfg, workers=workers))
    paths = write_results(results, args.out_dir, prefix=args.prefix)
    outputs.written.extend(paths.values())
    for kind, path in paths.items():
        print(f"{kind}: {path}")


def voronoi_table(design, probes, seed):
    """Rows of (index, coordinates..., area, darkness) for a design.

    Darkness is ``(max_area - area) / (max_area - min_area)``; it is 0 for
    every cell when the area range is indistinguishable from sampling noise.
    """
    areas = voronoi_cell_areas(design, probes, seed)
    lo, hi = float(areas.min()), float(areas.max())
    span = hi - lo
    # a spread within Monte Carlo noise counts as the degenerate equal-area case
    noise = 4.0 * np.sqrt(2.0 * hi * (1.0 - hi) / probes)
    darkness = (hi - areas) / span if span > noise else np.zeros_like(areas)
    rows = []
    for i, (a, dk) in enumerate(zip(areas, darkness)):
        coords = [format_coordinate(v) for v in design.points[i]] if design.dim == 2 else []
        rows.append([i, *coords, repr(float(a)), repr(float(dk))])
    header = ["index"] + (["x", "y"] if design.dim == 2 else []) + ["area", "darkness"]
    return header, rows


def cmd_voronoi(args, outputs):
    design = load_design(args.design)
    seed = _resolve_seed(args.seed)
    if args.probes < 1:
        raise CliError("--probes must be positive")
    header, rows = voronoi_table(design, args.probes, seed)
    outputs.text(args.out, _csv(header, rows))
    print(f"cells: {args.out} ({design.size} generators, {args.probes} probes)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqdoe", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate or extend a design")
    g.add_argument("--method", type=_method, required=True,
                   help=f"one of {', '.join(GENERATE_METHODS)}")
    g.add_argument("--dim", type=int)
    g.add_argument("--n", type=int, required=True, help="final number of points")
    g.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help="integer or 'random'")
    g.add_argument("--out", required=True, help="design CSV to write")
    g.add_argument("--trace", help="per-iteration metrics CSV (default: <out>_trace.csv)")
    g.add_argument("--initial", help="starting design CSV for sequential methods")
    g.add_argument("--init-size", type=int, help="size of an sf-LHS start for adaptive methods")
    g.add_argument("--alpha", type=_alpha, default="auto", help="MIPT tolerance: 'auto' or a value in [0, 1]")
    g.add_argument("--pool", type=int, help="sf-LHS pool size (default 1000*dim)")
    g.add_argument("--candidates-factor", type=int, default=100)
    g.add_argument("--slices-factor", type=int, default=10)
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("metrics", help="report design-quality metrics")
    m.add_argument("--design", required=True)
    m.add_argument("--p", type=int, default=50, help="phi_p exponent")
    m.add_argument("--out", help="optional CSV with the metric values")
    m.set_defaults(func=cmd_metrics)

    b = sub.add_parser("benchmark", help="run an RMSE campaign from a config file")
    b.add_argument("--config", required=True)
    b.add_argument("--out-dir", required=True)
    b.add_argument("--prefix", default="benchmark")
    b.add_argument("--workers", type=int, help="parallel repetitions (default: DOE_THREADS or 1)")
    b.set_defaults(func=cmd_benchmark)

    v = sub.add_parser("voronoi", help="Monte Carlo Voronoi cell areas of a design")
    v.add_argument("--design", required=True)
    v.add_argument("--probes", type=int, default=100_000)
    v.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_voronoi)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    outputs = _Outputs()
    try:
        args.func(args, outputs)
    except (CliError, DoeError, ValueError, OSError) as exc:
        outputs.cleanup()
        print(f"seqdoe {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except BaseException:
        outputs.cleanup()
        raise
    return 0


if __name__ == "__main__":
    sys.exit(main())
