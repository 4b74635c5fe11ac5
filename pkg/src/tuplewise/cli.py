"""Command-line driver: ``tuplewise <command> --config FILE [--seed S] [--out PATH] [--threads N]``.

Commands
--------
variance-curves
    Closed-form variance against pair budget.
estimate
    Monte Carlo relative variances on the p = 1 - q = eps family.
learn
    Repartitioned SGD learning curves.
check-theory
    All theory checks; exits with status 1 if any row fails.

The config file is a JSON object. Its optional ``"experiment"`` key must
name the command; ``"seed"`` and ``"out"`` may be given there or on the
command line, and the flags win. Every other key must be a parameter of the
command, and unknown keys are an error. ``--threads`` only changes speed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import MISSING, dataclass, field, fields, is_dataclass, replace

import numpy as np

from .checks import CheckRow, SgdCheckConfig, TheoryCheckConfig, run_checks, synthetic_task
from .cluster import relative_variance_study
from .data import DiscreteAUCDistribution, GaussianProductDistribution, load_two_sample_csv
from .hoeffding import (
    VarianceComponents,
    hoeffding_components_closed_auc,
    hoeffding_components_closed_product,
    hoeffding_components_enumerated,
)
from .kernels import AUCKernel
from .sampling import SchemeKind, SeedProtocol, Tag, derive_seed
from .sgd import SgdConfig, TrainingDivergedError, prepare_task, repartition_study, subsample
from .variance import Strategy, variance_curves

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "VarianceCurvesParams",
    "EstimateParams",
    "LearnParams",
    "load_config",
    "main",
    "fmt_float",
    "HEADERS",
]

DEFAULT_SEED = 12345

HEADERS = {
    "variance-curves": ["strategy", "scheme", "T", "B", "pair_budget", "variance"],
    "estimate": ["epsilon", "estimator", "empirical_rel_var", "theoretical_rel_var", "stderr", "runs"],
    "learn": ["n_r", "run", "iteration", "monitor_loss", "monitor_auc", "test_auc"],
    "check-theory": ["check_name", "closed_form", "empirical", "rel_error", "tolerance", "pass"],
}


class ConfigError(ValueError):
    """The configuration document is malformed or names an unknown key."""


def fmt_float(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _parse_n_r(v):
    if isinstance(v, str):
        if v.strip().lower() == "inf":
            return math.inf
        raise ConfigError(f"n_r must be a positive integer or \"inf\", got {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)) or v != int(v) or v < 1:
        raise ConfigError(f"n_r must be a positive integer or \"inf\", got {v!r}")
    return int(v)


# -- parameter documents ---------------------------------------------------------------


@dataclass(frozen=True)
class VarianceCurvesParams:
    """``model`` is ``auc`` (closed form), ``auc-enumerated``, ``product`` or ``components``."""

    model: str = "auc"
    p: float = 0.1
    q: float = 0.9
    mu_x: float = 0.0
    sigma_x: float = 1.0
    mu_z: float = 1.0
    sigma_z: float = 1.0
    sigma0_sq: float = 1.0
    sigma1_sq: float = 1.0
    sigma2_sq: float = 1.0
    n: int = 100_000
    m: int = 200
    N: int = 100
    T_values: tuple = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)
    B_values: tuple = (1, 10, 100, 1000, 2000)
    schemes: tuple = ("prop-swor", "prop-swr")
    worker_variance: str = "bootstrap"

    def components(self) -> VarianceComponents:
        if self.model == "auc":
            return hoeffding_components_closed_auc(self.p, self.q)
        if self.model == "auc-enumerated":
            return hoeffding_components_enumerated(AUCKernel(), DiscreteAUCDistribution(self.p, self.q))
        if self.model == "product":
            dist = GaussianProductDistribution(self.mu_x, self.sigma_x, self.mu_z, self.sigma_z)
            return hoeffding_components_closed_product(dist)
        if self.model == "components":
            return VarianceComponents.from_parts(self.sigma0_sq, self.sigma1_sq, self.sigma2_sq)
        raise ConfigError(f"unknown model {self.model!r}")


@dataclass(frozen=True)
class EstimateParams:
    epsilons: tuple = (0.1, 0.02, 0.004)
    estimators: tuple = ("complete", "local-complete", "repart-complete")
    n: int = 1000
    m: int = 40
    N: int = 8
    T: int = 4
    B: int = 1
    runs: int = 2000


@dataclass(frozen=True)
class LearnData:
    """``source`` is ``synthetic`` or ``csv``. ``subsample`` keeps that fraction of each class."""

    source: str = "synthetic"
    n_total: int = 1000
    positive_fraction: float = 0.07
    dim: int = 9
    separation: float = 2.5
    path: str | None = None
    positive_labels: tuple = (1,)
    feature_columns: tuple | None = None
    label_column: int = -1
    header: bool = False
    delimiter: str | None = None
    subsample: float = 1.0


@dataclass(frozen=True)
class LearnParams:
    data: LearnData = field(default_factory=LearnData)
    test_fraction: float = 0.2
    N: int = 10
    B: int = 20
    iterations: int = 500
    step_size: float = 0.001
    momentum: float = 0.9
    l2_coeff: float = 0.05
    monitor_pairs: int = 2000
    test_every: int = 10
    n_r_values: tuple = (1, 25, math.inf)
    runs: int = 20
    scheme: str = "prop-swor"


_PARAMS = {
    "variance-curves": VarianceCurvesParams,
    "estimate": EstimateParams,
    "learn": LearnParams,
    "check-theory": TheoryCheckConfig,
}


def _build(cls, doc, where: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected a JSON object, got {type(doc).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(doc) - set(known))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}; allowed: {sorted(known)}")
    kwargs = {}
    for name, value in doc.items():
        f = known[name]
        default = f.default_factory() if f.default_factory is not MISSING else f.default
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}")
            continue
        if name == "n_r_values":
            if not isinstance(value, list) or not value:
                raise ConfigError(f"{where}.{name}: expected a nonempty list")
            value = tuple(_parse_n_r(v) for v in value)
        elif isinstance(value, list):
            value = tuple(value)
        elif isinstance(value, dict):
            raise ConfigError(f"{where}.{name}: unexpected object")
        if default is not None and value is not None:
            if isinstance(default, bool) != isinstance(value, bool):
                raise ConfigError(f"{where}.{name}: expected {type(default).__name__}, got {value!r}")
            if isinstance(default, int) and not isinstance(default, bool):
                if not isinstance(value, int) or isinstance(value, bool):
                    raise ConfigError(f"{where}.{name}: expected an integer, got {value!r}")
            if isinstance(default, float) and not isinstance(value, (int, float)):
                raise ConfigError(f"{where}.{name}: expected a number, got {value!r}")
            if isinstance(default, str) and not isinstance(value, str):
                raise ConfigError(f"{where}.{name}: expected a string, got {value!r}")
            if isinstance(default, tuple) and not isinstance(value, tuple):
                raise ConfigError(f"{where}.{name}: expected a list, got {value!r}")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: object
    seed: int = DEFAULT_SEED
    out: str | None = None


def load_config(kind: str, path: str | None = None, text: str | None = None) -> ExperimentConfig:
    """Parse and validate a config document for ``kind``; no file means all defaults."""
    if kind not in _PARAMS:
        raise ConfigError(f"unknown experiment {kind!r}")
    doc = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if text is not None:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path or '<config>'}: invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("the config document must be a JSON object")
    doc = dict(doc)
    declared = doc.pop("experiment", kind)
    if declared != kind:
        raise ConfigError(f"config is for {declared!r} but the command is {kind!r}")
    seed = doc.pop("seed", DEFAULT_SEED)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    out = doc.pop("out", None)
    if out is not None and not isinstance(out, str):
        raise ConfigError("out must be a string path")
    params = _build(_PARAMS[kind], doc, kind)
    if kind == "check-theory":
        params = replace(params, seed=seed)
    return ExperimentConfig(kind, params, seed, out)


# -- commands ---------------------------------------------------------------------------


def cmd_variance_curves(cfg: ExperimentConfig, lanes: int = 1) -> list[list[str]]:
    p = cfg.params
    try:
        c = p.components()
        points = variance_curves(c, p.n, p.m, p.N, p.T_values, p.B_values, p.schemes, p.worker_variance)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"variance-curves: {exc}") from exc
    return [
        [pt.strategy.value, pt.scheme.value, str(pt.T), "" if pt.B is None else str(pt.B),
         str(pt.pair_budget), fmt_float(pt.variance)]
        for pt in points
    ]


def cmd_estimate(cfg: ExperimentConfig, lanes: int = 1) -> list[list[str]]:
    p = cfg.params
    for e in p.estimators:
        if Strategy.parse(e) is Strategy.BootstrapSingle:
            raise ConfigError("estimate: bootstrap-single has no prop-SWOR ratio; use check-theory")
    rows = relative_variance_study(
        p.epsilons, p.estimators, p.n, p.m, p.N, p.T, p.runs, cfg.seed, B=p.B, lanes=lanes
    )
    return [
        [fmt_float(r.epsilon), r.estimator, fmt_float(r.empirical_rel_var),
         fmt_float(r.theoretical_rel_var), fmt_float(r.stderr), str(r.runs)]
        for r in rows
    ]


def _learn_data(p: LearnParams, seed: int):
    d = p.data
    if d.source == "synthetic":
        s = SgdCheckConfig(n_total=d.n_total, positive_fraction=d.positive_fraction, dim=d.dim,
                           separation=d.separation, test_fraction=p.test_fraction, N=p.N)
        return synthetic_task(s, derive_seed(seed, 9))
    if d.source == "csv":
        if not d.path:
            raise ConfigError("learn.data.path is required for csv data")
        full = load_two_sample_csv(d.path, d.positive_labels, d.feature_columns, d.label_column,
                                   d.header, d.delimiter)
        rng = SeedProtocol(derive_seed(seed, 10)).generator(0, Tag.DATA)
        if d.subsample < 1.0:
            full = subsample(full, d.subsample, rng)
        return prepare_task(full, p.test_fraction, p.N, rng)
    raise ConfigError(f"learn.data.source must be 'synthetic' or 'csv', got {d.source!r}")


def _nr_label(nr) -> str:
    return "inf" if nr == math.inf else str(int(nr))


def cmd_learn(cfg: ExperimentConfig, lanes: int = 1) -> list[list[str]]:
    """Per-run rows, then ``q25``, ``median`` and ``q75`` rows in the run column."""
    p = cfg.params
    tr, te = _learn_data(p, cfg.seed)
    base = SgdConfig(
        N=p.N, B=p.B, step_size=p.step_size, momentum=p.momentum, l2_coeff=p.l2_coeff,
        total_iterations=p.iterations, scheme=p.scheme, monitor_pairs=p.monitor_pairs,
        test_every=p.test_every,
    )
    study = repartition_study(tr, te, base, p.n_r_values, p.runs, derive_seed(cfg.seed, 9, 1), lanes)
    rows = []

    def cell(v):
        return "" if math.isnan(v) else fmt_float(v)

    for nr, traces in study.items():
        label = _nr_label(nr)
        for r, t in enumerate(traces):
            for s in range(t.iterations):
                rows.append([label, str(r), str(s + 1), cell(t.monitor_loss[s]),
                             cell(t.monitor_auc[s]), cell(t.test_auc[s])])
        stacks = [np.stack([getattr(t, a) for t in traces]) for a in ("monitor_loss", "monitor_auc", "test_auc")]
        for name, qv in (("q25", 25), ("median", 50), ("q75", 75)):
            cols = [np.percentile(a, qv, axis=0) for a in stacks]
            for s in range(p.iterations):
                rows.append([label, name, str(s + 1)] + [cell(c[s]) for c in cols])
    return rows


def cmd_check_theory(cfg: ExperimentConfig, lanes: int = 1) -> list[CheckRow]:
    return run_checks(cfg.params, lanes)


def _check_rows(rows: list[CheckRow]) -> list[list[str]]:
    return [
        [r.check_name, fmt_float(r.closed_form), fmt_float(r.empirical), fmt_float(r.rel_error),
         fmt_float(r.tolerance), "true" if r.passed else "false"]
        for r in rows
    ]


def render_csv(kind: str, rows: list[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADERS[kind])
    w.writerows(rows)
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tuplewise", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("variance-curves", "closed-form variance against pair budget"),
        ("estimate", "Monte Carlo relative variance study"),
        ("learn", "repartitioned SGD learning curves"),
        ("check-theory", "run every theory check; nonzero exit if one fails"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON config file (defaults apply when omitted)")
        sp.add_argument("--seed", type=int, help="master seed, overrides the config")
        sp.add_argument("--out", help="output CSV path, '-' or omitted for stdout")
        sp.add_argument("--threads", type=int, default=1, help="worker processes; never changes results")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kind = args.command
    try:
        cfg = load_config(kind, args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
            cfg = replace(cfg, seed=args.seed)
            if kind == "check-theory":
                cfg = replace(cfg, params=replace(cfg.params, seed=args.seed))
        if args.out is not None:
            cfg = replace(cfg, out=args.out)
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        status = 0
        if kind == "variance-curves":
            rows = cmd_variance_curves(cfg, args.threads)
        elif kind == "estimate":
            rows = cmd_estimate(cfg, args.threads)
        elif kind == "learn":
            rows = cmd_learn(cfg, args.threads)
        else:
            checks = cmd_check_theory(cfg, args.threads)
            rows = _check_rows(checks)
            failed = [r.check_name for r in checks if not r.passed]
            if failed:
                print(f"{len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
                status = 1
    except ConfigError as exc:
        print(f"tuplewise {kind}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, TrainingDivergedError) as exc:
        print(f"tuplewise {kind}: {exc}", file=sys.stderr)
        return 2
    text = render_csv(kind, rows)
    if cfg.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
