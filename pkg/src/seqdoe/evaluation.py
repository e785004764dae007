"""Error metrics, cross-validation and the RMSE-versus-sample-size campaign runner.

A campaign repeats, for each repetition, the loop

1. build a 10-point best-of-pool LHS start (seeded per repetition);
2. draw a fixed cloud of ``5000 d`` uniform test points;
3. add samples one at a time with the chosen sampler, refit the metamodel
   after each addition and record its RMSE on the test cloud.

One-shot baselines (``sflhs``, ``random_lhs``) are instead rebuilt from
scratch at every ``stride``-th sample size.  Per-size means and Student-t
95% intervals are then computed across repetitions.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .adaptive import METHODS as ADAPTIVE_METHODS
from .adaptive import AdaptiveSampler, AdaptiveSpec
from .benchmarks import FUNCTIONS, get_function
from .design import DesignMatrix, scale_from_unit
from .exceptions import ConfigError, FitError
from .lowdiscrepancy import SequenceState
from .metamodels import GP_LENGTH_SCALES, GP_MIXTURES, TrainingSet, fit
from .oneshot import random_lhs, sf_lhs, substream

log = logging.getLogger(__name__)

__all__ = [
    "BASELINE_METHODS",
    "SEQUENCE_METHODS",
    "RUNNER_METHODS",
    "AggregateRow",
    "ExperimentConfig",
    "ExperimentResult",
    "aggregate_ci",
    "checkpoints",
    "configs_from_file",
    "cv_rmse",
    "parse_config",
    "rmse",
    "run_experiment",
    "write_results",
]

BASELINE_METHODS = ("sflhs", "random_lhs")
SEQUENCE_METHODS = ("halton", "sobol")
RUNNER_METHODS = ADAPTIVE_METHODS + SEQUENCE_METHODS + BASELINE_METHODS
_ALIASES = {"sflhs-baseline": "sflhs", "sf_lhs": "sflhs", "rlhs": "random_lhs"}

RAW_HEADER = ("method", "function", "dim", "metamodel", "repetition", "n_samples", "rmse")
AGGREGATE_HEADER = (
    "method", "function", "dim", "metamodel", "n_samples",
    "mean_rmse", "ci_low", "ci_high", "failures",
)


def rmse(true_values, predicted) -> float:
    """Root mean square error between paired sequences."""
    t = np.asarray(true_values, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.size} true values, {p.size} predictions")
    if t.size == 0:
        raise ValueError("rmse of empty sequences")
    return float(np.sqrt(np.mean((t - p) ** 2)))


def cv_rmse(train: TrainingSet, metamodel: str = "gp", k: int = 10, seed=0, **options) -> float:
    """k-fold cross-validated RMSE over the pooled held-out residuals.

    Rows are shuffled with ``seed`` and split into ``k`` near-equal folds;
    each fold is predicted by a model trained on the others.  With
    ``k == n`` this is leave-one-out.
    """
    n = len(train)
    if k < 2:
        raise ValueError("k must be at least 2")
    if n < k:
        raise ValueError(f"cannot split {n} samples into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    pred = np.empty(n)
    for fold in np.array_split(perm, k):
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        model = fit(metamodel, TrainingSet(train.inputs[mask], train.responses[mask]), **options)
        pred[fold] = model.predict(train.inputs[fold])
    return rmse(train.responses, pred)


def aggregate_ci(values, level: float = 0.95):
    """Mean and Student-t half-width of the confidence interval on the mean."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("aggregate_ci needs at least one value")
    mean = float(np.mean(v))
    if v.size == 1:
        return mean, 0.0
    s = float(np.std(v, ddof=1))
    half = float(stats.t.ppf(0.5 + level / 2.0, v.size - 1) * s / math.sqrt(v.size))
    return mean, half


# -- configuration ------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """One campaign: a function, a sampler and a metamodel.

    ``max_samples`` defaults to ``10 * dim`` and ``test_points`` to
    ``5000 * dim``; the sf-LHS pool holds ``pool_factor * dim`` candidates.
    """

    function: str
    dim: int
    method: str
    metamodel: str = "gp"
    initial_size: int = 10
    max_samples: int | None = None
    repetitions: int = 30
    test_points: int | None = None
    stride: int = 10
    seed: int = 0
    alpha: object = "auto"
    candidates_factor: int = 100
    slices_factor: int = 10
    pool_factor: int = 1000
    gp_length_scales: tuple = GP_LENGTH_SCALES
    gp_mixtures: tuple = GP_MIXTURES
    svr_c: float = 100.0
    svr_epsilon: float = 0.01
    svr_gamma: float | None = None

    def __post_init__(self):
        method = _ALIASES.get(self.method, self.method)
        if method not in RUNNER_METHODS:
            raise ConfigError(f"method: unknown sampler {self.method!r}; valid: {', '.join(RUNNER_METHODS)}")
        object.__setattr__(self, "method", method)
        if self.function not in FUNCTIONS:
            raise ConfigError(
                f"function: unknown id {self.function!r}; valid ids: {', '.join(sorted(FUNCTIONS))}"
            )
        try:
            get_function(self.function, self.dim)
        except ValueError as exc:
            raise ConfigError(f"dim: {exc}") from None
        if self.metamodel not in ("gp", "svr"):
            raise ConfigError(f"metamodel: expected 'gp' or 'svr', got {self.metamodel!r}")
        if self.max_samples is None:
            object.__setattr__(self, "max_samples", 10 * self.dim)
        if self.test_points is None:
            object.__setattr__(self, "test_points", 5000 * self.dim)
        if self.initial_size < 2:
            raise ConfigError("initial_size: must be at least 2")
        if self.initial_size >= self.max_samples:
            raise ConfigError(
                f"max_samples: must exceed initial_size ({self.max_samples} <= {self.initial_size})"
            )
        if self.repetitions < 1:
            raise ConfigError("repetitions: must be at least 1")
        if self.stride < 1:
            raise ConfigError("stride: must be at least 1")
        if self.test_points < 1:
            raise ConfigError("test_points: must be positive")
        if self.alpha != "auto":
            try:
                a = float(self.alpha)
            except (TypeError, ValueError):
                raise ConfigError(f"alpha: expected 'auto' or a number, got {self.alpha!r}") from None
            if not 0.0 <= a <= 1.0:
                raise ConfigError(f"alpha: must lie in [0, 1], got {a}")
            object.__setattr__(self, "alpha", a)
        for name in ("candidates_factor", "slices_factor", "pool_factor"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be positive")

    def metamodel_options(self) -> dict:
        if self.metamodel == "gp":
            return {"length_scales": tuple(self.gp_length_scales), "mixtures": tuple(self.gp_mixtures)}
        return {"C": self.svr_c, "epsilon": self.svr_epsilon, "gamma": self.svr_gamma}


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


# config key -> (field, parser); "methods" expands into one config per method
_CONFIG_KEYS = {
    "function": ("function", str),
    "dim": ("dim", int),
    "metamodel": ("metamodel", str),
    "initial_size": ("initial_size", int),
    "max_samples": ("max_samples", int),
    "repetitions": ("repetitions", int),
    "test_points": ("test_points", int),
    "stride": ("stride", int),
    "seed": ("seed", int),
    "alpha": ("alpha", lambda v: v if v == "auto" else float(v)),
    "candidates_factor": ("candidates_factor", int),
    "slices_factor": ("slices_factor", int),
    "pool_factor": ("pool_factor", int),
    "gp.length_scales": ("gp_length_scales", _floats),
    "gp.mixtures": ("gp_mixtures", _floats),
    "svr.c": ("svr_c", float),
    "svr.epsilon": ("svr_epsilon", float),
    "svr.gamma": ("svr_gamma", float),
}
_SPECIAL_KEYS = ("method", "methods", "workers")


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Returns a mapping of raw string values keyed by lower-cased key.

    Raises
    ------
    ConfigError
        On malformed lines, duplicate keys or unknown keys (named in the message).
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in _CONFIG_KEYS and key not in _SPECIAL_KEYS:
            valid = ", ".join(sorted(list(_CONFIG_KEYS) + list(_SPECIAL_KEYS)))
            raise ConfigError(f"line {lineno}: unknown key {key!r}; valid keys: {valid}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def configs_from_mapping(mapping: dict):
    """Build one :class:`ExperimentConfig` per listed method.

    Returns
    -------
    configs : list of ExperimentConfig
    workers : int or None
    """
    kwargs = {}
    for key, value in mapping.items():
        if key in _SPECIAL_KEYS:
            continue
        name, conv = _CONFIG_KEYS[key]
        try:
            kwargs[name] = conv(value)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {value!r}") from None
    for required in ("function", "dim"):
        if required not in kwargs:
            raise ConfigError(f"{required}: missing required key")
    if "method" in mapping and "methods" in mapping:
        raise ConfigError("methods: give either 'method' or 'methods', not both")
    methods = mapping.get("methods", mapping.get("method"))
    if not methods:
        raise ConfigError("methods: missing required key")
    names = [m.strip() for m in methods.split(",") if m.strip()]
    workers = None
    if "workers" in mapping:
        try:
            workers = int(mapping["workers"])
        except ValueError:
            raise ConfigError(f"workers: cannot parse {mapping['workers']!r}") from None
    return [ExperimentConfig(method=m, **kwargs) for m in names], workers


def configs_from_file(path):
    return configs_from_mapping(parse_config(Path(path).read_text(encoding="utf-8")))


# -- runner -------------------------------------------------------------------

@dataclass(frozen=True)
class AggregateRow:
    n_samples: int
    mean: float | None
    ci_low: float | None
    ci_high: float | None
    failures: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list  # (repetition, n_samples, rmse or None)
    aggregates: list
    metadata: dict = field(default_factory=dict)

    def mean_at(self, n: int) -> float | None:
        for row in self.aggregates:
            if row.n_samples == n:
                return row.mean
        raise KeyError(n)

    def raw_rows(self):
        c = self.config
        for rep, n, value in self.records:
            yield (c.method, c.function, c.dim, c.metamodel, rep, n, value)

    def aggregate_rows(self):
        c = self.config
        for row in self.aggregates:
            yield (c.method, c.function, c.dim, c.metamodel, row.n_samples,
                   row.mean, row.ci_low, row.ci_high, row.failures)


def checkpoints(config: ExperimentConfig) -> list:
    """Sample sizes at which one-shot baselines are evaluated."""
    sizes = list(range(config.initial_size, config.max_samples + 1, config.stride))
    if sizes[-1] != config.max_samples:
        sizes.append(config.max_samples)
    return sizes


def _score(config, func, design, cloud, truth, options):
    x = design.points
    y = func(scale_from_unit(x, func.bounds))
    try:
        model = fit(config.metamodel, TrainingSet(x, y), **options)
        return rmse(truth, model.predict(cloud)), model.hyperparameters
    except (FitError, np.linalg.LinAlgError) as exc:
        log.warning("%s rep fit failed at n=%d: %s", config.method, design.size, exc)
        return None, None


def _run_repetition(config: ExperimentConfig, rep: int):
    func = get_function(config.function, config.dim)
    d = config.dim
    root = substream(config.seed, rep)
    cloud = np.random.default_rng(substream(root, 1)).random((config.test_points, d))
    truth = func(scale_from_unit(cloud, func.bounds))
    options = config.metamodel_options()
    pool = config.pool_factor * d
    out = []
    info = {"fallbacks": 0, "hyperparameters": []}

    def record(design):
        value, hyper = _score(config, func, design, cloud, truth, options)
        out.append((rep, design.size, value))
        info["hyperparameters"].append(hyper)

    if config.method in BASELINE_METHODS:
        for n in checkpoints(config):
            seed = substream(substream(root, 3), n)
            if config.method == "sflhs":
                design = sf_lhs(n, d, seed, pool)
            else:
                design = random_lhs(n, d, seed)
            record(design)
    elif config.method in SEQUENCE_METHODS:
        state = SequenceState(config.method, d)
        design = DesignMatrix(np.array([state.next() for _ in range(config.initial_size)]))
        record(design)
        while design.size < config.max_samples:
            design = design.append(state.next())
            record(design)
    else:
        design = sf_lhs(config.initial_size, d, substream(root, 0), pool)
        spec = AdaptiveSpec(
            config.method,
            alpha=config.alpha,
            candidates_factor=config.candidates_factor,
            slices_factor=config.slices_factor,
        )
        sampler = AdaptiveSampler(spec, seed=substream(root, 2))
        record(design)
        sampler.extend(design, config.max_samples, callback=record)
        info["fallbacks"] = sampler.fallbacks
    return out, info


def _aggregate(records, sizes):
    rows = []
    for n in sizes:
        vals = [v for _, m, v in records if m == n and v is not None]
        failures = sum(1 for _, m, v in records if m == n and v is None)
        if vals:
            mean, half = aggregate_ci(vals)
            rows.append(AggregateRow(n, mean, mean - half, mean + half, failures))
        else:
            rows.append(AggregateRow(n, None, None, None, failures))
    return rows


def default_workers() -> int:
    env = os.environ.get("DOE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer DOE_THREADS=%r", env)
    return 1


def _rep_task(args):
    return _run_repetition(*args)


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run every repetition of a campaign and aggregate the RMSE curves.

    Repetitions are independent; with ``workers > 1`` they run in separate
    processes.  Output does not depend on scheduling order.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    start = time.perf_counter()
    tasks = [(config, r) for r in range(config.repetitions)]
    if workers > 1 and config.repetitions > 1:
        with ProcessPoolExecutor(max_workers=min(workers, config.repetitions)) as ex:
            results = list(ex.map(_rep_task, tasks))
    else:
        results = [_rep_task(t) for t in tasks]
    records = sorted((rec for out, _ in results for rec in out), key=lambda r: (r[0], r[1]))
    sizes = sorted({n for _, n, _ in records})
    aggregates = _aggregate(records, sizes)
    metadata = {
        "package_version": __version__,
        "config": _config_echo(config),
        "wall_time_s": time.perf_counter() - start,
        "workers": workers,
        "fit_failures": sum(1 for r in records if r[2] is None),
        "mipt_fallbacks": sum(info["fallbacks"] for _, info in results),
        "selected_hyperparameters": _hyper_counts(info for _, info in results),
    }
    return ExperimentResult(config, records, aggregates, metadata)


def _config_echo(config):
    echo = asdict(config)
    for key, value in echo.items():
        if isinstance(value, tuple):
            echo[key] = list(value)
    if echo["svr_gamma"] is None:
        echo["svr_gamma_resolved"] = 1.0 / config.dim
    return echo


def _hyper_counts(infos):
    counts = {}
    for info in infos:
        for hyper in info["hyperparameters"]:
            if hyper is None:
                continue
            key = ",".join(f"{k}={v:g}" for k, v in sorted(hyper.items()) if v is not None)
            counts[key] = counts.get(key, 0) + 1
    return dict(sorted(counts.items()))


# -- output -------------------------------------------------------------------

def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_results(results, out_dir, prefix: str = "benchmark") -> dict:
    """Write raw, aggregate and metadata files for a list of results.

    Returns the mapping of output kind to path.  Files are written to a
    temporary name first, so a failure never leaves partial outputs.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "raw": out_dir / f"{prefix}_raw.csv",
        "aggregate": out_dir / f"{prefix}_aggregate.csv",
        "metadata": out_dir / f"{prefix}_metadata.json",
    }
    texts = {
        "raw": _csv_text(RAW_HEADER, (row for r in results for row in r.raw_rows())),
        "aggregate": _csv_text(AGGREGATE_HEADER, (row for r in results for row in r.aggregate_rows())),
        "metadata": json.dumps(
            {
                "runs": [r.metadata for r in results],
                "gp_grid": {"length_scales": list(GP_LENGTH_SCALES), "mixtures": list(GP_MIXTURES),
                            "variance": 1.0},
            },
            indent=2,
            sort_keys=True,
        ) + "\n",
    }
    tmp = {k: p.with_name(p.name + ".tmp") for k, p in paths.items()}
    try:
        for kind, text in texts.items():
            with open(tmp[kind], "w", newline="\n", encoding="utf-8") as fh:
                fh.write(text)
        for kind in paths:
            os.replace(tmp[kind], paths[kind])
    finally:
        for p in tmp.values():
            if p.exists():
                p.unlink()
    return paths


def with_overrides(config: ExperimentConfig, **changes) -> ExperimentConfig:
    """Copy of ``config`` with some fields replaced (re-validated)."""
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(changes) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
    return replace(config, **changes)
