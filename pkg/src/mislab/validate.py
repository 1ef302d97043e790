"""Fast invariant checks behind ``mislab validate``.

These are desk-speed structural checks (exact degeneracies, evaluation
counts, partition validity, density normalization) over a handful of
seeds. The statistical acceptance suite with thousands of replications
lives in the pytest tests.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate

from .clustering import (
    HereticalConfig,
    hdm_weights,
    heretical_partition,
    random_partition,
)
from .core import (
    draw_mis_samples,
    normalize_weights,
    weights_dm,
    weights_partial,
    weights_standard,
)
from .distributions import eval_mixture
from .experiments import ExperimentConfig, get_example


def _density_mass(pdf) -> float:
    """Integral of pdf over the real line: core window plus analytic tails.

    Heavy polynomial tails (Student-t) carry mass well past any fixed
    window, so the tails are integrated separately out to infinity.
    """
    core, _ = integrate.quad(pdf, -40.0, 40.0, limit=200)
    left, _ = integrate.quad(pdf, -np.inf, -40.0)
    right, _ = integrate.quad(pdf, 40.0, np.inf)
    return core + left + right


def _check_normalization(cfg: ExperimentConfig) -> tuple[bool, str]:
    worst = 0.0
    mass = _density_mass(lambda x: eval_mixture(x, cfg.target.mixture))
    worst = max(worst, abs(mass - 1.0))
    ps = cfg.proposals.build()
    for j in range(len(ps)):
        mass = _density_mass(
            lambda x: float(np.exp(ps.logpdf_matrix(np.array([x]), [j])[0, 0]))
        )
        worst = max(worst, abs(mass - 1.0))
    return worst < 1e-8, f"max |mass - 1| = {worst:.2e}"


def _check_degeneracies(cfg: ExperimentConfig, seeds) -> tuple[bool, str]:
    ps = cfg.proposals.build()
    target = cfg.target
    n = len(ps)
    for seed in seeds:
        rng = np.random.default_rng(seed)
        ss = draw_mis_samples(ps, 1, rng)
        w_dm = weights_dm(ss, ps, target)
        w_std = weights_standard(ss, ps, target)
        part_one = random_partition(n, 1, np.random.default_rng(seed + 1))
        part_sng = random_partition(n, n, np.random.default_rng(seed + 2))
        if not np.array_equal(
            weights_partial(ss, ps, target, part_one).weights, w_dm.weights
        ):
            return False, f"P=1 mismatch at seed {seed}"
        if not np.array_equal(
            weights_partial(ss, ps, target, part_sng).weights, w_std.weights
        ):
            return False, f"P=N mismatch at seed {seed}"
    return True, f"bit-identical on {len(seeds)} seeds"


def _check_alpha_zero(cfg: ExperimentConfig, seeds) -> tuple[bool, str]:
    ps = cfg.proposals.build()
    target = cfg.target
    n = len(ps)
    p = cfg.p_values[0]
    for seed in seeds:
        rng_a = np.random.default_rng(seed)
        ss_a = draw_mis_samples(ps, 1, rng_a)
        part_a = random_partition(n, p, rng_a)
        w_a = weights_partial(ss_a, ps, target, part_a)
        rng_b = np.random.default_rng(seed)
        ss_b = draw_mis_samples(ps, 1, rng_b)
        w_b, part_b = hdm_weights(
            ss_b, ps, target, HereticalConfig(p, alpha=0.0), rng_b
        )
        if part_a.subsets != part_b.subsets:
            return False, f"partition mismatch at seed {seed}"
        if not np.array_equal(w_a.weights, w_b.weights):
            return False, f"weight mismatch at seed {seed}"
    return True, f"alpha=0 matches the a-priori pipeline on {len(seeds)} seeds"


def _check_eval_counts(cfg: ExperimentConfig) -> tuple[bool, str]:
    ps = cfg.proposals.build()
    target = cfg.target
    n = len(ps)
    p = cfg.p_values[0]
    m = n // p
    rng = np.random.default_rng(0)
    ss = draw_mis_samples(ps, 1, rng)
    length = len(ss)
    checks = [
        (weights_standard(ss, ps, target).proposal_evals, length),
        (weights_dm(ss, ps, target).proposal_evals, length * n),
        (
            weights_partial(
                ss, ps, target, random_partition(n, p, rng)
            ).proposal_evals,
            length * m,
        ),
    ]
    wv_h, _ = hdm_weights(ss, ps, target, HereticalConfig(p, cfg.alpha), rng)
    checks.append((wv_h.proposal_evals, length * m))
    if wv_h.search_evals > n * n:
        return False, f"search evals {wv_h.search_evals} exceed N^2"
    for got, want in checks:
        if got != want:
            return False, f"expected {want} proposal evals, counted {got}"
    return True, f"counts {[c[0] for c in checks]} as expected"


def _check_partitions(cfg: ExperimentConfig, seeds) -> tuple[bool, str]:
    ps = cfg.proposals.build()
    target = cfg.target
    n = len(ps)
    for seed in seeds:
        rng = np.random.default_rng(seed)
        ss = draw_mis_samples(ps, 1, rng)
        wv = weights_standard(ss, ps, target)
        for p in cfg.p_values:
            part = heretical_partition(
                ss, wv, ps, HereticalConfig(p, cfg.alpha), rng
            )
            # Construction re-validates disjointness/coverage/sizes; verify
            # normalization of the reweighted vector on top.
            normalized = normalize_weights(
                weights_partial(ss, ps, target, part)
            )
            if abs(normalized.weights.sum() - 1.0) > 1e-12:
                return False, f"normalization off at seed {seed}, P={p}"
    return True, f"valid partitions and normalized weights on {len(seeds)} seeds"


def run_validation(example, stream=None) -> bool:
    """Run all invariant checks for a builtin example; print one line each.

    Returns True when every check passes.
    """
    import sys

    out = stream or sys.stdout
    cfg = get_example(example)
    seeds = list(range(100, 110))
    checks = [
        ("density normalization", lambda: _check_normalization(cfg)),
        ("exact degeneracies (P=1, P=N)", lambda: _check_degeneracies(cfg, seeds)),
        ("alpha=0 reduction", lambda: _check_alpha_zero(cfg, seeds)),
        ("evaluation counts", lambda: _check_eval_counts(cfg)),
        ("partition invariants", lambda: _check_partitions(cfg, seeds[:4])),
    ]
    all_ok = True
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # surface the failure, keep checking
            ok, detail = False, f"raised {exc!r}"
        all_ok &= ok
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {cfg.name}: {name} ({detail})", file=out)
    return all_ok
