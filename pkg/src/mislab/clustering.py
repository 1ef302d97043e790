"""Partition construction for the partial-mixture weighting rules.

Two ways to split N proposals into P disjoint subsets of M = N/P indices:

* ``random_partition`` draws the split before looking at any sample
  (the a-priori scheme).
* ``heretical_partition`` builds the split after the samples are drawn,
  repeatedly pairing the proposal behind the current largest standard
  weight with the proposal nearest to that sample, so that the recomputed
  partial-mixture weight of the worst offender shrinks. The ``alpha``
  knob stops the weight-driven phase once ceil(alpha*N) proposals are
  placed and fills the rest at random; alpha=0 reproduces the a-priori
  scheme exactly (same rng consumption), alpha=1 runs the pairing loop to
  completion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    ProposalSet,
    SampleSet,
    WeightVector,
    weights_partial,
    weights_standard,
)
from .distributions import TargetSpec

__all__ = [
    "Partition",
    "HereticalConfig",
    "EvalCounter",
    "random_partition",
    "closest_proposal",
    "heretical_partition",
    "hdm_weights",
]

# Provenance tags recorded per proposal by heretical_partition.
ALLOC_WEIGHT = "weight"  # placed as the max-weight sample's own proposal
ALLOC_PAIRED = "paired"  # placed as the nearest proposal to that sample
ALLOC_RANDOM = "random"  # placed by the random fill or the fallback


@dataclass(frozen=True)
class Partition:
    """P disjoint subsets of proposal indices, each of size M, covering 0..N-1.

    ``subset_of`` maps a proposal index to the index of its subset.
    ``provenance`` (set by heretical_partition) tags how each proposal was
    allocated; None for a-priori partitions.
    """

    subsets: tuple
    subset_of: np.ndarray
    provenance: tuple | None = None

    def __post_init__(self) -> None:
        subsets = tuple(tuple(int(j) for j in s) for s in self.subsets)
        object.__setattr__(self, "subsets", subsets)
        object.__setattr__(
            self, "subset_of", np.asarray(self.subset_of, dtype=int)
        )
        if not subsets:
            raise ValueError("partition needs at least one subset")
        sizes = {len(s) for s in subsets}
        if len(sizes) != 1:
            raise ValueError(f"subsets must have equal sizes, got {sorted(sizes)}")
        n = sum(len(s) for s in subsets)
        flat = sorted(j for s in subsets for j in s)
        if flat != list(range(n)):
            raise ValueError("subsets must be disjoint and cover 0..N-1")
        if self.subset_of.shape != (n,):
            raise ValueError("subset_of must map every proposal index")
        for p, members in enumerate(subsets):
            for j in members:
                if self.subset_of[j] != p:
                    raise ValueError("subset_of inconsistent with subsets")

    @classmethod
    def from_subsets(cls, subsets: Iterable[Sequence[int]], provenance=None
                     ) -> "Partition":
        subsets = tuple(tuple(sorted(int(j) for j in s)) for s in subsets)
        n = sum(len(s) for s in subsets)
        subset_of = np.empty(n, dtype=int)
        for p, members in enumerate(subsets):
            for j in members:
                if not 0 <= j < n:
                    raise ValueError(f"proposal index {j} out of range")
                subset_of[j] = p
        return cls(subsets, subset_of, provenance)

    @property
    def n_subsets(self) -> int:
        return len(self.subsets)

    @property
    def subset_size(self) -> int:
        return len(self.subsets[0])

    @property
    def n_proposals(self) -> int:
        return len(self.subset_of)


@dataclass(frozen=True)
class HereticalConfig:
    """Knobs for the a-posteriori clustering: subset count P and the clustered
    fraction alpha in [0, 1]."""

    P: int
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.P < 1:
            raise ValueError(f"P must be >= 1, got {self.P}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


class EvalCounter:
    """Mutable tally of density evaluations spent by the nearest-proposal search."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def add(self, n: int) -> None:
        self.count += n


def _split_check(n: int, p: int) -> int:
    if p < 1 or n % p != 0:
        raise ValueError(f"P={p} must divide N={n}")
    return n // p


def random_partition(n: int, p: int, rng: np.random.Generator) -> Partition:
    """Uniform a-priori partition: a random permutation of 0..N-1 chopped into
    P consecutive blocks of M."""
    m = _split_check(n, p)
    perm = rng.permutation(n)
    return Partition.from_subsets(perm[i * m:(i + 1) * m] for i in range(p))


def closest_proposal(
    x: float,
    candidates: Sequence[int],
    ps: ProposalSet,
    counter: EvalCounter | None = None,
    use_shortcut: bool | None = None,
) -> int:
    """Candidate proposal with the highest density at x; ties go to the lowest
    index.

    For equal-variance Gaussian proposal sets the density argmax reduces to
    the nearest mean, which needs no density evaluations; otherwise each
    candidate costs one evaluation, tallied on ``counter``.
    """
    cands = np.sort(np.asarray(candidates, dtype=int))
    if cands.size == 0:
        raise ValueError("candidates must be non-empty")
    if use_shortcut is None:
        use_shortcut = ps.equal_variance_gaussians
    if use_shortcut:
        if not ps.equal_variance_gaussians:
            raise ValueError("distance shortcut needs equal-variance Gaussians")
        best = int(np.argmin(np.abs(x - ps.locations[cands])))
    else:
        log_q = ps.logpdf_matrix(np.array([x]), cands)[0]
        if counter is not None:
            counter.add(cands.size)
        best = int(np.argmax(log_q))
    return int(cands[best])


def heretical_partition(
    ss: SampleSet,
    wv_standard: WeightVector,
    ps: ProposalSet,
    cfg: HereticalConfig,
    rng: np.random.Generator,
    counter: EvalCounter | None = None,
) -> Partition:
    """A-posteriori partition driven by the standard weights.

    Samples are processed in descending standard-weight order (ties to the
    lowest sample index). For the current sample with generating proposal g:

    * g already placed: drop the sample and continue.
    * otherwise find j*, the available proposal nearest to the sample value
      (g itself excluded). If j* already sits in a subset with room, g joins
      it; if j* is unplaced, g and j* go together into the lowest-indexed
      subset with two free slots, falling back to independent uniform
      placement over subsets with a free slot when no such subset exists.

    A subset that reaches size M leaves the available pool with all its
    members. Once ceil(alpha*N) proposals are placed, every remaining
    proposal is assigned uniformly at random to the remaining free slots,
    consuming the rng exactly like ``random_partition`` does when nothing
    was placed yet.

    Parameters
    ----------
    ss : SampleSet
        Drawn samples; their values steer the nearest-proposal pairing.
    wv_standard : WeightVector
        Standard weights for ``ss`` (must align with it).
    ps : ProposalSet
        The proposals being partitioned.
    cfg : HereticalConfig
        Subset count P and clustered fraction alpha.
    rng : numpy.random.Generator
        Stream for the random fill and the fallback placements.
    counter : EvalCounter, optional
        Receives the nearest-proposal search cost.

    Returns
    -------
    Partition
        Valid partition with per-proposal provenance tags.
    """
    n = len(ps)
    p_count = cfg.P
    m = _split_check(n, p_count)
    if len(wv_standard) != len(ss):
        raise ValueError(
            f"weight vector length {len(wv_standard)} != sample count {len(ss)}"
        )
    if ss.n_proposals != n:
        raise ValueError("sample set does not cover this proposal set")

    threshold = math.ceil(cfg.alpha * n)
    members: list[list[int]] = [[] for _ in range(p_count)]
    subset_of = np.full(n, -1, dtype=int)
    available = np.ones(n, dtype=bool)
    provenance = [ALLOC_RANDOM] * n
    allocated = 0

    def place(j: int, p: int, tag: str) -> None:
        nonlocal allocated
        members[p].append(j)
        subset_of[j] = p
        provenance[j] = tag
        allocated += 1
        if len(members[p]) == m:
            available[members[p]] = False

    def place_random(j: int, tag: str) -> None:
        free = [p for p in range(p_count) if len(members[p]) < m]
        pick = free[0] if len(free) == 1 else free[int(rng.integers(len(free)))]
        place(j, pick, tag)

    # Descending weight; stable sort keeps the lowest sample index on ties.
    order = np.argsort(-wv_standard.weights, kind="stable")
    for sample_idx in order:
        if allocated >= threshold:
            break
        g = int(ss.proposal_indices[sample_idx])
        if subset_of[g] >= 0:
            continue
        pool = np.nonzero(available)[0]
        candidates = pool[pool != g]
        if candidates.size == 0:
            # Everything else is locked into full subsets; g can only go to
            # a free slot at random (mirrors the fallback rule).
            place_random(g, ALLOC_RANDOM)
            continue
        j_star = closest_proposal(
            float(ss.values[sample_idx]), candidates, ps, counter
        )
        if subset_of[j_star] >= 0:
            # j* is placed and, being available, its subset has room.
            place(g, int(subset_of[j_star]), ALLOC_WEIGHT)
        else:
            roomy = next(
                (p for p in range(p_count) if m - len(members[p]) >= 2), None
            )
            if roomy is not None:
                place(g, roomy, ALLOC_WEIGHT)
                place(j_star, roomy, ALLOC_PAIRED)
            else:
                # No subset can hold the pair: place each independently at
                # random over subsets with a free slot.
                place_random(g, ALLOC_RANDOM)
                place_random(j_star, ALLOC_RANDOM)

    remaining = np.nonzero(subset_of < 0)[0]
    if remaining.size:
        slots = [
            p for p in range(p_count) for _ in range(m - len(members[p]))
        ]
        perm = rng.permutation(remaining)
        for j, p in zip(perm, slots):
            place(int(j), p, ALLOC_RANDOM)

    return Partition.from_subsets(members, provenance=tuple(provenance))


def hdm_weights(
    ss: SampleSet,
    ps: ProposalSet,
    target: TargetSpec,
    cfg: HereticalConfig,
    rng: np.random.Generator,
) -> tuple[WeightVector, Partition]:
    """Full pipeline: standard weights, a-posteriori partition, partial reweighting.

    The returned weight vector reports the reweighting cost (L*M proposal
    evaluations, i.e. N^2/P when k=1) with the nearest-proposal search cost
    carried separately in ``search_evals``.
    """
    wv_std = weights_standard(ss, ps, target)
    counter = EvalCounter()
    part = heretical_partition(ss, wv_std, ps, cfg, rng, counter)
    wv = weights_partial(ss, ps, target, part)
    wv.search_evals = counter.count
    return wv, part
