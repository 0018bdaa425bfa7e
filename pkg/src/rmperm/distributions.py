"""Reference distributions, random generation and the weighted-chi-square
Monte Carlo oracle.

Randomness is organised around :class:`RngStream`: a (seed, path) pair backed
by numpy's counter-based Philox generator. Identical streams reproduce
identical draw sequences on any machine and under any scheduling, and child
streams derived by index are independent, which is what makes the Monte Carlo
harness replicable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaincc, gammaincinv

from .errors import DimensionError
from .linalg import psd_sqrt

__all__ = [
    "RngStream",
    "WeightedChiSq",
    "chi2_cdf",
    "chi2_quantile",
    "f_inf_quantile",
    "random_permutation",
    "sample_mvnormal",
    "sample_standardized",
    "weighted_chi2_sample",
]

# Exact moments of the log-normal with underlying standard normal:
# mean exp(1/2), variance e*(e-1).
_LOGNORMAL_MEAN = float(np.exp(0.5))
_LOGNORMAL_SD = float(np.sqrt(np.e * (np.e - 1.0)))

DISTRIBUTION_TAGS = ("normal", "exponential", "lognormal")


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream addressed by a seed and a spawn path.

    ``child(i, j, ...)`` derives an independent substream; substreams with
    distinct paths never overlap, so parallel replicates can each own one
    without coordinating.
    """

    seed: int
    path: tuple[int, ...] = field(default=())

    def child(self, *indices: int) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(int(i) for i in indices))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


def chi2_cdf(x, f: float):
    """Chi-square CDF with real-valued degrees of freedom f > 0.

    Implemented as the regularized lower incomplete gamma P(f/2, x/2), so
    non-integer f from the two-moment approximation is supported directly.
    """
    if not f > 0:
        raise ValueError(f"degrees of freedom must be > 0, got {f}")
    x = np.asarray(x, dtype=np.float64)
    out = gammainc(f / 2.0, np.maximum(x, 0.0) / 2.0)
    return float(out) if out.ndim == 0 else out


def chi2_sf(x, f: float):
    """Upper tail 1 - chi2_cdf(x, f), computed without cancellation."""
    if not f > 0:
        raise ValueError(f"degrees of freedom must be > 0, got {f}")
    x = np.asarray(x, dtype=np.float64)
    out = gammaincc(f / 2.0, np.maximum(x, 0.0) / 2.0)
    return float(out) if out.ndim == 0 else out


def chi2_quantile(p: float, f: float) -> float:
    """Inverse chi-square CDF for 0 < p < 1 and real f > 0."""
    if not f > 0:
        raise ValueError(f"degrees of freedom must be > 0, got {f}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    return float(2.0 * gammaincinv(f / 2.0, p))


def f_inf_quantile(p: float, nu: float) -> float:
    """Quantile of the F(nu, infinity) law, i.e. of chi2_nu / nu."""
    return chi2_quantile(p, nu) / nu


def sample_standardized(dist: str, n: int, rng) -> np.ndarray:
    """Draw n i.i.d. values with mean 0 and variance 1.

    The base law is standard normal, rate-1 exponential, or log-normal with
    underlying standard normal; exponential and log-normal draws are shifted
    and scaled by their exact analytic moments.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    gen = _as_generator(rng)
    if dist == "normal":
        return gen.standard_normal(n)
    if dist == "exponential":
        return gen.standard_exponential(n) - 1.0
    if dist == "lognormal":
        return (gen.lognormal(0.0, 1.0, n) - _LOGNORMAL_MEAN) / _LOGNORMAL_SD
    raise ValueError(f"unknown distribution {dist!r}; expected one of {DISTRIBUTION_TAGS}")


def sample_mvnormal(mean, cov, rng, size: int | None = None) -> np.ndarray:
    """Draws from N(mean, cov) via the symmetric PSD square root of cov.

    Returns one vector by default, or a (size, dim) matrix when ``size`` is
    given.
    """
    mean = np.asarray(mean, dtype=np.float64)
    root = psd_sqrt(cov)
    if root.shape[0] != mean.shape[0]:
        raise DimensionError(
            f"mean has length {mean.shape[0]} but cov is {root.shape[0]}x{root.shape[0]}"
        )
    gen = _as_generator(rng)
    if size is None:
        return mean + root @ gen.standard_normal(mean.shape[0])
    return mean + gen.standard_normal((size, mean.shape[0])) @ root


def random_permutation(n: int, rng) -> np.ndarray:
    """Uniformly distributed permutation of 0..n-1 (Fisher-Yates)."""
    if n < 1:
        raise ValueError(f"permutation length must be >= 1, got {n}")
    return _as_generator(rng).permutation(n)


@dataclass(frozen=True)
class WeightedChiSq:
    """Law of sum_j weights[j] * X_j with X_j i.i.d. chi-square(1).

    A noncentrality delta >= 0 is attached to the first term only, i.e.
    X_1 = (Z + sqrt(delta))^2; the central case delta = 0 is the primary use
    and the per-term allocation matters only for nonzero delta.
    """

    weights: np.ndarray
    noncentrality: float = 0.0

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        if w.size < 1:
            raise ValueError("at least one weight is required")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if self.noncentrality < 0:
            raise ValueError(f"noncentrality must be >= 0, got {self.noncentrality}")
        object.__setattr__(self, "weights", w)


def weighted_chi2_sample(law: WeightedChiSq, m: int, rng) -> np.ndarray:
    """m i.i.d. draws from a weighted sum of chi-square(1) variables."""
    if m < 1:
        raise ValueError(f"sample count must be >= 1, got {m}")
    gen = _as_generator(rng)
    z = gen.standard_normal((m, law.weights.size))
    if law.noncentrality > 0.0:
        z[:, 0] += np.sqrt(law.noncentrality)
    return (z * z) @ law.weights
