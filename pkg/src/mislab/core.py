"""MIS sampling, weighting rules, and the moment estimators.

Weights are computed in log space and exponentiated at the end; ratios of
extremely small densities (common with heavy-tailed targets) stay finite
that way. All three weighting rules share one mixture-evaluation path, so
the exact degeneracies (partial weights with a single subset equal the
full-mixture weights; singleton subsets equal the standard weights) hold
bit for bit, not just approximately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distributions import (
    ComponentParams,
    GaussianParams,
    StudentTParams,
    TargetSpec,
    gaussian_logpdf,
    logsumexp_axis,
    sample,
    student_t_logpdf,
)

__all__ = [
    "MomentFunction",
    "ProposalSet",
    "SampleSet",
    "WeightVector",
    "EstimateRecord",
    "draw_mis_samples",
    "weights_standard",
    "weights_dm",
    "weights_partial",
    "normalize_weights",
    "estimate_self_normalized",
    "estimate_unnormalized",
    "estimate_z",
    "max_normalized_weight",
    "estimate_record",
]


@dataclass(frozen=True)
class MomentFunction:
    """Pointwise map f applied to sample values when estimating a moment."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def identity(cls) -> "MomentFunction":
        return cls("identity", lambda x: x)

    @classmethod
    def square(cls) -> "MomentFunction":
        return cls("square", lambda x: x * x)

    @classmethod
    def from_callable(cls, fn: Callable, name: str = "user") -> "MomentFunction":
        return cls(name, fn)

    @classmethod
    def by_name(cls, name: str) -> "MomentFunction":
        if name == "identity":
            return cls.identity()
        if name == "square":
            return cls.square()
        raise ValueError(f"unknown moment function {name!r}")

    def __call__(self, x):
        return self.fn(x)


class ProposalSet:
    """Ordered collection of proposal densities, indexed 0..N-1.

    Homogeneous Gaussian or Student-t sets get vectorized matrix evaluation;
    mixed sets fall back to a per-proposal loop. ``equal_variance_gaussians``
    flags the configuration where the nearest-proposal search can use plain
    distances instead of density evaluations.
    """

    def __init__(self, proposals: Sequence[ComponentParams]):
        self.proposals = tuple(proposals)
        if not self.proposals:
            raise ValueError("proposal set must contain at least one proposal")
        self._all_gaussian = all(
            isinstance(p, GaussianParams) for p in self.proposals
        )
        self._all_student = not self._all_gaussian and all(
            isinstance(p, StudentTParams) for p in self.proposals
        )
        if self._all_gaussian:
            self._means = np.array([p.mean for p in self.proposals])
            self._variances = np.array([p.variance for p in self.proposals])
            self._stds = np.sqrt(self._variances)
        elif self._all_student:
            self._locations = np.array([p.location for p in self.proposals])
            self._scale_sqs = np.array([p.scale_sq for p in self.proposals])
            self._scales = np.sqrt(self._scale_sqs)
            self._dofs = np.array([p.dof for p in self.proposals])
        self.equal_variance_gaussians = bool(
            self._all_gaussian and np.all(self._variances == self._variances[0])
        )

    def __len__(self) -> int:
        return len(self.proposals)

    @property
    def locations(self) -> np.ndarray:
        """Location parameter of each proposal (mean for Gaussians)."""
        if self._all_gaussian:
            return self._means
        if self._all_student:
            return self._locations
        return np.array(
            [
                p.mean if isinstance(p, GaussianParams) else p.location
                for p in self.proposals
            ]
        )

    def logpdf_matrix(self, xs: np.ndarray, indices: np.ndarray) -> np.ndarray:
        """Log q_j(x_i) for every x in xs (rows) and proposal j in indices (cols)."""
        xs = np.asarray(xs, dtype=float)
        idx = np.asarray(indices, dtype=int)
        if self._all_gaussian:
            return gaussian_logpdf(
                xs[:, None], self._means[idx][None, :], self._variances[idx][None, :]
            )
        if self._all_student:
            return student_t_logpdf(
                xs[:, None],
                self._locations[idx][None, :],
                self._scale_sqs[idx][None, :],
                self._dofs[idx][None, :],
            )
        cols = []
        for j in idx:
            p = self.proposals[j]
            if isinstance(p, GaussianParams):
                cols.append(gaussian_logpdf(xs, p.mean, p.variance))
            else:
                cols.append(student_t_logpdf(xs, p.location, p.scale_sq, p.dof))
        return np.stack(cols, axis=1)

    def logpdf_at(self, xs: np.ndarray, idx_matrix: np.ndarray) -> np.ndarray:
        """Log q_j(x_i) where row i is evaluated at the indices idx_matrix[i].

        Same arithmetic per element as ``logpdf_matrix``; the per-row index
        layout lets partial-mixture weighting run as one vectorized call.
        """
        xs = np.asarray(xs, dtype=float)
        idx = np.asarray(idx_matrix, dtype=int)
        if self._all_gaussian:
            return gaussian_logpdf(
                xs[:, None], self._means[idx], self._variances[idx]
            )
        if self._all_student:
            return student_t_logpdf(
                xs[:, None], self._locations[idx], self._scale_sqs[idx], self._dofs[idx]
            )
        out = np.empty(idx.shape)
        for i in range(idx.shape[0]):
            out[i] = self.logpdf_matrix(xs[i:i + 1], idx[i])[0]
        return out

    def logpdf_own(self, xs: np.ndarray, proposal_indices: np.ndarray) -> np.ndarray:
        """Log q_{n(i)}(x_i): each sample evaluated under its own proposal."""
        xs = np.asarray(xs, dtype=float)
        idx = np.asarray(proposal_indices, dtype=int)
        if self._all_gaussian:
            return gaussian_logpdf(xs, self._means[idx], self._variances[idx])
        if self._all_student:
            return student_t_logpdf(
                xs, self._locations[idx], self._scale_sqs[idx], self._dofs[idx]
            )
        out = np.empty(len(xs))
        for i, (x, j) in enumerate(zip(xs, idx)):
            p = self.proposals[j]
            if isinstance(p, GaussianParams):
                out[i] = gaussian_logpdf(x, p.mean, p.variance)
            else:
                out[i] = student_t_logpdf(x, p.location, p.scale_sq, p.dof)
        return out


@dataclass(frozen=True)
class SampleSet:
    """Drawn samples with the index of the proposal that generated each one.

    Exactly ``samples_per_proposal`` samples carry each proposal index, so
    the total count L equals k*N.
    """

    values: np.ndarray
    proposal_indices: np.ndarray
    samples_per_proposal: int

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        idx = np.asarray(self.proposal_indices, dtype=int)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "proposal_indices", idx)
        k = self.samples_per_proposal
        if k < 1:
            raise ValueError(f"samples_per_proposal must be >= 1, got {k}")
        if values.shape != idx.shape or values.ndim != 1:
            raise ValueError("values and proposal_indices must be 1-D and aligned")
        if len(values) % k != 0:
            raise ValueError("sample count is not a multiple of samples_per_proposal")
        n = len(values) // k
        if idx.min() < 0 or idx.max() >= n:
            raise ValueError("proposal indices out of range")
        counts = np.bincount(idx, minlength=n)
        if not np.all(counts == k):
            raise ValueError("each proposal index must appear exactly k times")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_proposals(self) -> int:
        return len(self.values) // self.samples_per_proposal


_SCHEME_TAGS = ("standard", "dm", "partial")


@dataclass
class WeightVector:
    """Importance weights aligned with a SampleSet, plus evaluation counts.

    ``proposal_evals`` and ``target_evals`` record how many density
    evaluations the producing weighting rule performed; ``search_evals``
    counts density evaluations spent by a nearest-proposal search (zero for
    the a-priori schemes).
    """

    weights: np.ndarray
    scheme_tag: str
    proposal_evals: int
    target_evals: int
    search_evals: int = 0

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if self.scheme_tag not in _SCHEME_TAGS:
            raise ValueError(f"unknown scheme_tag {self.scheme_tag!r}")
        if w.ndim != 1:
            raise ValueError("weights must be 1-D")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ValueError("weights must be finite and non-negative")

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class EstimateRecord:
    """Per-run outputs: both moment estimators, Z-hat, and cost counters."""

    self_normalized: float
    unnormalized: float | None
    z_hat: float
    max_normalized_weight: float
    target_evals: int
    proposal_evals: int
    search_evals: int = 0


def draw_mis_samples(
    ps: ProposalSet, k: int, rng: np.random.Generator
) -> SampleSet:
    """Draw exactly k samples from each proposal.

    Output order is proposal-major, replicate-minor: the k draws of proposal
    0 come first, then proposal 1, and so on. A fixed seed yields a
    bit-identical SampleSet on every call.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = len(ps)
    idx = np.repeat(np.arange(n), k)
    if ps._all_gaussian:
        values = rng.normal(ps._means[idx], ps._stds[idx])
    elif ps._all_student:
        z = rng.standard_normal(len(idx))
        chi_sq = rng.chisquare(ps._dofs[idx])
        values = ps._locations[idx] + ps._scales[idx] * z / np.sqrt(
            chi_sq / ps._dofs[idx]
        )
    else:
        values = np.array([sample(ps.proposals[j], rng) for j in idx])
    return SampleSet(values, idx, k)


def _check_drawn_from(ss: SampleSet, ps: ProposalSet) -> None:
    if ss.n_proposals != len(ps):
        raise ValueError(
            f"sample set covers {ss.n_proposals} proposals, proposal set has {len(ps)}"
        )


def _exp_weights(log_w: np.ndarray, context: str) -> np.ndarray:
    if not np.all(np.isfinite(log_w)):
        raise ValueError(f"{context}: proposal density vanished at a sample")
    w = np.exp(log_w)
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{context}: weight overflow")
    return w


def weights_standard(
    ss: SampleSet, ps: ProposalSet, target: TargetSpec
) -> WeightVector:
    """Standard MIS weights: target over the sample's own generating proposal.

    Costs one proposal evaluation and one target evaluation per sample.
    """
    _check_drawn_from(ss, ps)
    length = len(ss)
    log_pi = target.log_unnormalized(ss.values)
    log_q = ps.logpdf_own(ss.values, ss.proposal_indices)
    w = _exp_weights(log_pi - log_q, "weights_standard")
    return WeightVector(w, "standard", proposal_evals=length, target_evals=length)


def weights_dm(ss: SampleSet, ps: ProposalSet, target: TargetSpec) -> WeightVector:
    """Full-mixture weights: target over the equal-weight mixture of all N proposals.

    Costs L*N proposal evaluations.
    """
    _check_drawn_from(ss, ps)
    length = len(ss)
    n = len(ps)
    log_pi = target.log_unnormalized(ss.values)
    log_mix = logsumexp_axis(
        ps.logpdf_matrix(ss.values, np.arange(n)), axis=1
    ) - math.log(n)
    w = _exp_weights(log_pi - log_mix, "weights_dm")
    return WeightVector(w, "dm", proposal_evals=length * n, target_evals=length)


def weights_partial(
    ss: SampleSet, ps: ProposalSet, target: TargetSpec, part
) -> WeightVector:
    """Partial-mixture weights from a partition of the proposals.

    Each sample is weighted by the target over the equal-weight mixture of
    the M proposals in its generating proposal's subset, costing L*M
    proposal evaluations. With a single subset this is exactly the full
    mixture rule; with singleton subsets it is exactly the standard rule.
    """
    _check_drawn_from(ss, ps)
    if part.n_proposals != len(ps):
        raise ValueError(
            f"partition covers {part.n_proposals} proposals, proposal set has {len(ps)}"
        )
    length = len(ss)
    m = part.subset_size
    log_pi = target.log_unnormalized(ss.values)
    # Row i holds the members of the subset owning sample i's proposal.
    members = np.asarray(part.subsets, dtype=int)
    idx_matrix = members[part.subset_of[ss.proposal_indices]]
    log_mix = logsumexp_axis(
        ps.logpdf_at(ss.values, idx_matrix), axis=1
    ) - math.log(m)
    w = _exp_weights(log_pi - log_mix, "weights_partial")
    return WeightVector(w, "partial", proposal_evals=length * m, target_evals=length)


def normalize_weights(wv: WeightVector) -> WeightVector:
    """Rescale weights to sum to one, preserving order and counters."""
    total = wv.weights.sum()
    if not total > 0.0:
        raise ValueError("degenerate weight vector")
    return WeightVector(
        wv.weights / total,
        wv.scheme_tag,
        proposal_evals=wv.proposal_evals,
        target_evals=wv.target_evals,
        search_evals=wv.search_evals,
    )


def estimate_self_normalized(
    ss: SampleSet, wv: WeightVector, f: MomentFunction
) -> float:
    """Self-normalized estimator: sum(w f(x)) / sum(w)."""
    total = wv.weights.sum()
    if not total > 0.0:
        raise ValueError("degenerate weight vector")
    return float(wv.weights @ np.asarray(f(ss.values), dtype=float) / total)


def estimate_unnormalized(
    ss: SampleSet, wv: WeightVector, f: MomentFunction, z: float
) -> float:
    """Unnormalized estimator: sum(w f(x)) / (L z), for known z > 0."""
    if not z > 0.0:
        raise ValueError(f"z must be positive, got {z}")
    return float(wv.weights @ np.asarray(f(ss.values), dtype=float) / (len(ss) * z))


def estimate_z(wv: WeightVector) -> float:
    """Normalizing-constant estimator: mean of the raw (unnormalized) weights."""
    return float(wv.weights.sum() / len(wv))


def max_normalized_weight(wv: WeightVector) -> float:
    """Largest weight after normalization; in [1/L, 1]."""
    total = wv.weights.sum()
    if not total > 0.0:
        raise ValueError("degenerate weight vector")
    return float(wv.weights.max() / total)


def estimate_record(
    ss: SampleSet,
    wv: WeightVector,
    f: MomentFunction,
    z: float | None = None,
) -> EstimateRecord:
    """Bundle both estimators and diagnostics for one run.

    The unnormalized estimator is only computed when the normalizing
    constant z is known.
    """
    return EstimateRecord(
        self_normalized=estimate_self_normalized(ss, wv, f),
        unnormalized=None if z is None else estimate_unnormalized(ss, wv, f, z),
        z_hat=estimate_z(wv),
        max_normalized_weight=max_normalized_weight(wv),
        target_evals=wv.target_evals,
        proposal_evals=wv.proposal_evals,
        search_evals=wv.search_evals,
    )
