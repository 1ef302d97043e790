"""One-dimensional parametric densities used as proposals and targets.

Gaussian and non-standardized Student-t components, finite mixtures of
either family, and an unnormalized-target wrapper that carries the known
normalizing constant and reference mean used for error measurement.

All density evaluation is routed through the ``*_logpdf`` helpers so that
every caller (scalar convenience functions, vectorized weighting code)
performs bit-identical arithmetic for the same inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln

__all__ = [
    "GaussianParams",
    "StudentTParams",
    "MixtureSpec",
    "TargetSpec",
    "gaussian_logpdf",
    "student_t_logpdf",
    "logsumexp_axis",
    "eval_gaussian",
    "eval_student_t",
    "eval_mixture",
    "sample",
    "reference_mean",
]

_LOG_TWO_PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianParams:
    """Gaussian component: mean and variance (same squared units as x)."""

    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise ValueError("Gaussian parameters must be finite")
        if self.variance <= 0.0:
            raise ValueError(f"variance must be positive, got {self.variance}")


@dataclass(frozen=True)
class StudentTParams:
    """Non-standardized Student-t: location, squared scale, degrees of freedom."""

    location: float
    scale_sq: float
    dof: float

    def __post_init__(self) -> None:
        if not all(
            math.isfinite(v) for v in (self.location, self.scale_sq, self.dof)
        ):
            raise ValueError("Student-t parameters must be finite")
        if self.scale_sq <= 0.0:
            raise ValueError(f"scale_sq must be positive, got {self.scale_sq}")
        if self.dof <= 0.0:
            raise ValueError(f"dof must be positive, got {self.dof}")


ComponentParams = Union[GaussianParams, StudentTParams]


def _require_finite(x) -> np.ndarray:
    xs = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xs)):
        raise ValueError("x must be finite")
    return xs


def gaussian_logpdf(x, mean, variance):
    """Elementwise log N(x; mean, variance); broadcasts over all arguments."""
    return -0.5 * ((x - mean) ** 2 / variance + _LOG_TWO_PI + np.log(variance))


def student_t_logpdf(x, location, scale_sq, dof):
    """Elementwise log density of the location-scale Student-t.

    Density with scale s = sqrt(scale_sq):

        Gamma((dof+1)/2) / (Gamma(dof/2) sqrt(dof*pi*scale_sq))
            * (1 + (x-location)^2 / (dof*scale_sq)) ** (-(dof+1)/2)

    Broadcasts over all arguments.
    """
    z_sq = (x - location) ** 2 / (dof * scale_sq)
    log_norm = (
        gammaln((dof + 1.0) / 2.0)
        - gammaln(dof / 2.0)
        - 0.5 * (np.log(dof * math.pi) + np.log(scale_sq))
    )
    return log_norm - 0.5 * (dof + 1.0) * np.log1p(z_sq)


def logsumexp_axis(a: np.ndarray, axis: int) -> np.ndarray:
    """log(sum(exp(a))) along an axis, for finite inputs.

    One shared implementation so that callers combining the same log
    densities (e.g. a full mixture versus a partial mixture over all
    indices) produce bit-identical results. A single-element reduction
    returns its input exactly.
    """
    m = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(
        np.sum(np.exp(a - m), axis=axis)
    )


def _component_logpdf(x, params: ComponentParams):
    if isinstance(params, GaussianParams):
        return gaussian_logpdf(x, params.mean, params.variance)
    return student_t_logpdf(x, params.location, params.scale_sq, params.dof)


def _scalar_or_array(x, values: np.ndarray):
    if np.ndim(x) == 0:
        return float(values)
    return values


def eval_gaussian(x, p: GaussianParams):
    """Gaussian density at x (scalar or array). Raises on non-finite x."""
    xs = _require_finite(x)
    return _scalar_or_array(x, np.exp(gaussian_logpdf(xs, p.mean, p.variance)))


def eval_student_t(x, p: StudentTParams):
    """Non-standardized Student-t density at x (scalar or array)."""
    xs = _require_finite(x)
    return _scalar_or_array(
        x, np.exp(student_t_logpdf(xs, p.location, p.scale_sq, p.dof))
    )


@dataclass(frozen=True)
class MixtureSpec:
    """Finite mixture of Gaussian and/or Student-t components.

    ``components`` is an ordered tuple of (weight, params) pairs; weights lie
    in (0, 1] and must sum to 1 within 1e-12.
    """

    components: tuple

    def __post_init__(self) -> None:
        comps = tuple(
            (float(w), p) for w, p in self.components
        )
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("mixture needs at least one component")
        for w, p in comps:
            if not (0.0 < w <= 1.0):
                raise ValueError(f"component weight {w} outside (0, 1]")
            if not isinstance(p, (GaussianParams, StudentTParams)):
                raise TypeError(f"unsupported component params: {type(p)!r}")
        total = math.fsum(w for w, _ in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"component weights sum to {total}, expected 1")

    def logpdf(self, x):
        """Log mixture density, stable in log space."""
        xs = np.asarray(x, dtype=float)
        stacked = np.stack(
            [math.log(w) + _component_logpdf(xs, p) for w, p in self.components],
            axis=0,
        )
        return logsumexp_axis(stacked, axis=0)

    def mean(self) -> float:
        return reference_mean(self)


def eval_mixture(x, m: MixtureSpec):
    """Mixture density at x: sum of weight_i * component_density_i(x)."""
    xs = _require_finite(x)
    return _scalar_or_array(x, np.exp(m.logpdf(xs)))


def reference_mean(m: MixtureSpec) -> float:
    """Exact mixture mean: sum of weight_i * location_i.

    The Student-t mean equals its location only for dof > 1; components at or
    below that threshold have no mean and raise.
    """
    terms = []
    for w, p in m.components:
        if isinstance(p, GaussianParams):
            terms.append(w * p.mean)
        else:
            if p.dof <= 1.0:
                raise ValueError(
                    f"mixture mean undefined: Student-t component with dof={p.dof} <= 1"
                )
            terms.append(w * p.location)
    return math.fsum(terms)


def sample(p: ComponentParams, rng: np.random.Generator) -> float:
    """One draw from a Gaussian or Student-t component.

    Student-t draws use location + scale * z / sqrt(chi2(dof)/dof) with two
    sub-draws from the stream, so the per-sample draw count is fixed and the
    stream position after each call is deterministic.
    """
    if isinstance(p, GaussianParams):
        return float(rng.normal(p.mean, math.sqrt(p.variance)))
    z = rng.standard_normal()
    chi_sq = rng.chisquare(p.dof)
    return float(p.location + math.sqrt(p.scale_sq) * z / math.sqrt(chi_sq / p.dof))


@dataclass(frozen=True)
class TargetSpec:
    """Unnormalized target density with known ground truth.

    The unnormalized target is ``normalizing_constant * mixture`` where the
    mixture itself is normalized, so the integral of the target equals
    ``normalizing_constant``. ``reference_mean`` is the exact first moment
    used as ground truth when measuring estimator error.
    """

    mixture: MixtureSpec
    normalizing_constant: float
    reference_mean: float

    def __post_init__(self) -> None:
        if not (
            math.isfinite(self.normalizing_constant)
            and self.normalizing_constant > 0.0
        ):
            raise ValueError("normalizing_constant must be positive and finite")
        if not math.isfinite(self.reference_mean):
            raise ValueError("reference_mean must be finite")

    @classmethod
    def from_mixture(
        cls, mixture: MixtureSpec, normalizing_constant: float = 1.0
    ) -> "TargetSpec":
        """Build a target whose reference mean is the exact mixture mean."""
        return cls(mixture, normalizing_constant, reference_mean(mixture))

    def log_unnormalized(self, x):
        """Log of the unnormalized target density."""
        return math.log(self.normalizing_constant) + self.mixture.logpdf(
            np.asarray(x, dtype=float)
        )

    def unnormalized_density(self, x):
        xs = _require_finite(x)
        return _scalar_or_array(x, np.exp(self.log_unnormalized(xs)))
