"""Experiment harness: configuration, replication, and CSV/table reporting.

A configuration describes a target, a grid of proposals, the weighting
schemes to compare, and the replication plan. Every (scheme, P, k) cell is
replicated ``n_runs`` times; each run's seed is derived from
(base_seed, scheme id, P, k, run index) through a seed sequence, so runs
are reproducible independently of execution order and results are
bit-identical across invocations.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .clustering import HereticalConfig, hdm_weights, random_partition
from .core import (
    EstimateRecord,
    MomentFunction,
    ProposalSet,
    draw_mis_samples,
    estimate_record,
    weights_dm,
    weights_partial,
    weights_standard,
)
from .distributions import (
    GaussianParams,
    MixtureSpec,
    StudentTParams,
    TargetSpec,
)

__all__ = [
    "SCHEMES",
    "ProposalGrid",
    "ExperimentConfig",
    "RunResult",
    "SummaryRow",
    "builtin_example1",
    "builtin_example2",
    "get_example",
    "load_config",
    "run_seed",
    "run_single",
    "run_cell",
    "run_experiment",
    "run_experiment_detailed",
    "write_csv",
    "write_runs_csv",
    "print_table",
]

SCHEMES = ("s-mis", "dm", "p-dm", "h-dm")
DEFAULT_BASE_SEED = 12345


@dataclass(frozen=True)
class ProposalGrid:
    """Equidistant grid of same-shape proposals over a closed interval.

    Locations include both endpoints: count points from interval[0] to
    interval[1]. ``scale_sq`` is the shared variance (Gaussian) or squared
    scale (Student-t); ``dof`` applies to Student-t grids only.
    """

    family: str
    count: int
    interval: tuple
    scale_sq: float
    dof: float | None = None

    def __post_init__(self) -> None:
        if self.family not in ("gaussian", "student-t"):
            raise ValueError(f"unknown proposal family {self.family!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        lo, hi = self.interval
        if not lo < hi:
            raise ValueError(f"interval lower bound must be below upper, got {self.interval}")
        if self.family == "student-t" and self.dof is None:
            raise ValueError("student-t grid needs dof")

    def build(self) -> ProposalSet:
        locations = np.linspace(self.interval[0], self.interval[1], self.count)
        if self.family == "gaussian":
            params = [GaussianParams(float(c), self.scale_sq) for c in locations]
        else:
            params = [
                StudentTParams(float(c), self.scale_sq, self.dof)
                for c in locations
            ]
        return ProposalSet(params)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one MSE comparison experiment."""

    name: str
    target: TargetSpec
    proposals: ProposalGrid
    schemes: tuple
    p_values: tuple
    alpha: float
    k_values: tuple
    n_runs: int = 5000
    base_seed: int = DEFAULT_BASE_SEED
    moment: MomentFunction = dataclasses.field(
        default_factory=MomentFunction.identity
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "p_values", tuple(int(p) for p in self.p_values))
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}")
        if not self.schemes:
            raise ValueError("at least one scheme required")
        n = self.proposals.count
        for p in self.p_values:
            if p < 1 or n % p != 0:
                raise ValueError(f"P={p} must divide N={n}")
        if not self.p_values and ({"p-dm", "h-dm"} & set(self.schemes)):
            raise ValueError("p_values required for partition-based schemes")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.k_values or any(k < 1 for k in self.k_values):
            raise ValueError("k_values must be positive")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")

    def cells(self):
        """Yield every (scheme, P, k) cell. The single-proposal-mixture
        degeneracies pin P for the non-partition schemes: the standard rule
        corresponds to P=N, the full mixture to P=1."""
        n = self.proposals.count
        for scheme in self.schemes:
            if scheme == "s-mis":
                ps_values = (n,)
            elif scheme == "dm":
                ps_values = (1,)
            else:
                ps_values = self.p_values
            for p in ps_values:
                for k in self.k_values:
                    yield scheme, p, k


@dataclass(frozen=True)
class RunResult:
    """One replication of one cell."""

    scheme: str
    P: int
    k: int
    run_index: int
    record: EstimateRecord


@dataclass(frozen=True)
class SummaryRow:
    """Aggregated cell statistics; field order defines the CSV column order."""

    scheme: str
    P: int
    M: int
    k: int
    L: int
    n_runs: int
    mse_self_normalized: float
    mse_unnormalized: float
    variance_self_normalized: float
    variance_unnormalized: float
    bias_sq_self_normalized: float
    bias_sq_unnormalized: float
    mean_z_hat: float
    mean_max_normalized_weight: float
    mean_proposal_evals: float
    mean_search_evals: float
    base_seed: int


def builtin_example1() -> ExperimentConfig:
    """Bimodal Gaussian target, 32 Gaussian proposals on [-8, 8], all four
    schemes, P=16 for the partition-based ones, k from 1 to 5."""
    target = TargetSpec.from_mixture(
        MixtureSpec(
            (
                (0.5, GaussianParams(-3.0, 1.0)),
                (0.5, GaussianParams(5.0, 1.0)),
            )
        )
    )
    return ExperimentConfig(
        name="example1",
        target=target,
        proposals=ProposalGrid("gaussian", 32, (-8.0, 8.0), 3.0),
        schemes=("s-mis", "dm", "p-dm", "h-dm"),
        p_values=(16,),
        alpha=1.0,
        k_values=(1, 2, 3, 4, 5),
    )


def builtin_example2() -> ExperimentConfig:
    """Five-component Student-t target, 32 Student-t proposals on [-8, 8],
    partition-based schemes over P in {1, 2, 4, 8, 16, 32}, alpha=0.1, k=1."""
    locations = (-3.0, -1.0, 0.0, 3.0, 4.0)
    target = TargetSpec.from_mixture(
        MixtureSpec(
            tuple((0.2, StudentTParams(a, 1.0, 5.0)) for a in locations)
        )
    )
    return ExperimentConfig(
        name="example2",
        target=target,
        proposals=ProposalGrid("student-t", 32, (-8.0, 8.0), 3.0, dof=4.0),
        schemes=("p-dm", "h-dm"),
        p_values=(1, 2, 4, 8, 16, 32),
        alpha=0.1,
        k_values=(1,),
    )


_EXAMPLES = {"1": builtin_example1, "2": builtin_example2}


def get_example(name) -> ExperimentConfig:
    key = str(name)
    if key not in _EXAMPLES:
        raise ValueError(f"unknown builtin example {name!r}; choose from 1, 2")
    return _EXAMPLES[key]()


def run_seed(base_seed: int, scheme: str, P: int, k: int, run_index: int
             ) -> np.random.SeedSequence:
    """Per-run seed: a pure function of the cell coordinates and run index."""
    return np.random.SeedSequence(
        base_seed, spawn_key=(SCHEMES.index(scheme), P, k, run_index)
    )


def run_single(
    target: TargetSpec,
    ps: ProposalSet,
    scheme: str,
    P: int,
    k: int,
    alpha: float,
    moment: MomentFunction,
    seed,
) -> EstimateRecord:
    """Execute one replication: draw, weight, estimate."""
    rng = np.random.default_rng(seed)
    ss = draw_mis_samples(ps, k, rng)
    if scheme == "s-mis":
        wv = weights_standard(ss, ps, target)
    elif scheme == "dm":
        wv = weights_dm(ss, ps, target)
    elif scheme == "p-dm":
        part = random_partition(len(ps), P, rng)
        wv = weights_partial(ss, ps, target, part)
    elif scheme == "h-dm":
        wv, _ = hdm_weights(ss, ps, target, HereticalConfig(P, alpha), rng)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return estimate_record(ss, wv, moment, z=target.normalizing_constant)


def run_cell(
    cfg: ExperimentConfig,
    scheme: str,
    P: int,
    k: int,
    ps: ProposalSet | None = None,
) -> list:
    """All replications of one (scheme, P, k) cell, in run-index order."""
    if ps is None:
        ps = cfg.proposals.build()
    return [
        run_single(
            cfg.target,
            ps,
            scheme,
            P,
            k,
            cfg.alpha,
            cfg.moment,
            run_seed(cfg.base_seed, scheme, P, k, r),
        )
        for r in range(cfg.n_runs)
    ]


def _summarize(cfg: ExperimentConfig, scheme: str, P: int, k: int,
               records) -> SummaryRow:
    ref = cfg.target.reference_mean
    n = cfg.proposals.count
    sn = np.array([r.self_normalized for r in records])
    un = np.array([r.unnormalized for r in records])
    return SummaryRow(
        scheme=scheme,
        P=P,
        M=n // P,
        k=k,
        L=k * n,
        n_runs=len(records),
        mse_self_normalized=float(np.mean((sn - ref) ** 2)),
        mse_unnormalized=float(np.mean((un - ref) ** 2)),
        variance_self_normalized=float(np.var(sn)),
        variance_unnormalized=float(np.var(un)),
        bias_sq_self_normalized=float((np.mean(sn) - ref) ** 2),
        bias_sq_unnormalized=float((np.mean(un) - ref) ** 2),
        mean_z_hat=float(np.mean([r.z_hat for r in records])),
        mean_max_normalized_weight=float(
            np.mean([r.max_normalized_weight for r in records])
        ),
        mean_proposal_evals=float(np.mean([r.proposal_evals for r in records])),
        mean_search_evals=float(np.mean([r.search_evals for r in records])),
        base_seed=cfg.base_seed,
    )


def run_experiment_detailed(cfg: ExperimentConfig):
    """Run every cell; return (summary rows, per-run results).

    Rows are sorted by (scheme, P, k); per-run results follow the same cell
    order with ascending run index inside each cell.
    """
    ps = cfg.proposals.build()
    rows = []
    runs = []
    for scheme, P, k in sorted(cfg.cells()):
        records = run_cell(cfg, scheme, P, k, ps=ps)
        rows.append(_summarize(cfg, scheme, P, k, records))
        runs.extend(
            RunResult(scheme, P, k, r, rec) for r, rec in enumerate(records)
        )
    return rows, runs


def run_experiment(cfg: ExperimentConfig):
    """Run every cell and return the summary rows sorted by (scheme, P, k)."""
    rows, _ = run_experiment_detailed(cfg)
    return rows


def _format_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(rows, path) -> None:
    """Write summary rows as CSV: exact field-name header, 17 significant
    digits (lossless float64 round trip), LF newlines."""
    if not rows:
        raise ValueError("no rows to write")
    names = [f.name for f in dataclasses.fields(SummaryRow)]
    lines = [",".join(names)]
    for row in rows:
        lines.append(
            ",".join(_format_value(getattr(row, n)) for n in names)
        )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


_RUN_COLUMNS = (
    "scheme",
    "P",
    "k",
    "run_index",
    "self_normalized",
    "unnormalized",
    "z_hat",
    "max_normalized_weight",
    "target_evals",
    "proposal_evals",
    "search_evals",
)


def write_runs_csv(runs, path) -> None:
    """Per-run dump for external plotting, same formatting rules as write_csv."""
    if not runs:
        raise ValueError("no runs to write")
    lines = [",".join(_RUN_COLUMNS)]
    for rr in runs:
        rec = rr.record
        values = (
            rr.scheme,
            rr.P,
            rr.k,
            rr.run_index,
            rec.self_normalized,
            rec.unnormalized,
            rec.z_hat,
            rec.max_normalized_weight,
            rec.target_evals,
            rec.proposal_evals,
            rec.search_evals,
        )
        lines.append(",".join(_format_value(v) for v in values))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def print_table(rows) -> None:
    """Fixed-width summary table on stdout."""
    if not rows:
        raise ValueError("no rows to print")
    names = [f.name for f in dataclasses.fields(SummaryRow)]
    cells = [
        [
            format(v, ".4g") if isinstance(v, float) else str(v)
            for v in (getattr(row, n) for n in names)
        ]
        for row in rows
    ]
    widths = [
        max([len(name)] + [len(c[i]) for c in cells])
        for i, name in enumerate(names)
    ]
    print("  ".join(name.ljust(w) for name, w in zip(names, widths)))
    for line in cells:
        print("  ".join(cell.rjust(w) for cell, w in zip(line, widths)))


def _mixture_from_table(table) -> MixtureSpec:
    family = table.get("family", "gaussian")
    weights = table["weights"]
    locations = table["locations"]
    scale_sq = table["scale_sq"]
    if not (len(weights) == len(locations) == len(scale_sq)):
        raise ValueError("target weights/locations/scale_sq lengths differ")
    if family == "gaussian":
        comps = tuple(
            (w, GaussianParams(loc, s))
            for w, loc, s in zip(weights, locations, scale_sq)
        )
    elif family == "student-t":
        dof = table["dof"]
        if len(dof) != len(weights):
            raise ValueError("target dof length differs")
        comps = tuple(
            (w, StudentTParams(loc, s, d))
            for w, loc, s, d in zip(weights, locations, scale_sq, dof)
        )
    else:
        raise ValueError(f"unknown target family {family!r}")
    return MixtureSpec(comps)


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from a TOML file (see README for the schema)."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    target_table = doc["target"]
    mixture = _mixture_from_table(target_table)
    z = float(target_table.get("normalizing_constant", 1.0))
    if "reference_mean" in target_table:
        target = TargetSpec(mixture, z, float(target_table["reference_mean"]))
    else:
        target = TargetSpec.from_mixture(mixture, z)
    prop = doc["proposals"]
    grid = ProposalGrid(
        family=prop.get("family", "gaussian"),
        count=int(prop["count"]),
        interval=(float(prop["interval"][0]), float(prop["interval"][1])),
        scale_sq=float(prop["scale_sq"]),
        dof=float(prop["dof"]) if "dof" in prop else None,
    )
    run = doc.get("run", {})
    return ExperimentConfig(
        name=str(doc.get("name", "custom")),
        target=target,
        proposals=grid,
        schemes=tuple(run.get("schemes", SCHEMES)),
        p_values=tuple(run.get("p_values", ())),
        alpha=float(run.get("alpha", 1.0)),
        k_values=tuple(run.get("k_values", (1,))),
        n_runs=int(run.get("n_runs", 5000)),
        base_seed=int(run.get("base_seed", DEFAULT_BASE_SEED)),
        moment=MomentFunction.by_name(run.get("moment", "identity")),
    )
