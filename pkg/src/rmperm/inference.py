"""Point estimators and the asymptotic Wald-type and ANOVA-type tests.

The Wald-type statistic (WTS) studentizes the contrasted mean vector with the
scaled covariance and is referred to a chi-square law with rank(H) degrees of
freedom. The ANOVA-type statistic (ATS) projects the means instead and uses a
two-moment (Box) approximation, comparing the scaled statistic to an
F(nu_hat, infinity) quantile. Both are exposed on raw datasets and on
per-group summary statistics, the latter for analyses where only published
means and covariance matrices are available.

This module is the plain-numpy reference path; the resampling and simulation
modules reuse the same formulas through the compiled kernels and are tested
for agreement against it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .design import HypothesisMatrix
from .distributions import RngStream, WeightedChiSq, chi2_sf, weighted_chi2_sample
from .errors import (
    DegenerateCovarianceError,
    DesignError,
    DimensionError,
    InsufficientDataError,
)
from .linalg import direct_sum, moore_penrose, psd_sqrt, sym_eigen

__all__ = [
    "Dataset",
    "GroupSummary",
    "ScaledCovariance",
    "TestOutcome",
    "ats_eigen_null_oracle",
    "ats_f_test",
    "ats_f_test_from_summaries",
    "ats_tilde",
    "box_df",
    "scaled_cov",
    "summarize",
    "wts",
    "wts_from_summaries",
]


@dataclass(frozen=True)
class Dataset:
    """Per-group matrices of repeated measurements.

    ``groups[i]`` is the n_i x t_i matrix of group i (subjects in rows,
    occasions in columns). Groups may have different numbers of occasions;
    factorial hypothesis builders additionally require equal t_i.
    """

    groups: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.groups:
            raise DesignError("a dataset needs at least one group")
        validated = []
        for i, g in enumerate(self.groups):
            g = np.ascontiguousarray(np.asarray(g, dtype=np.float64))
            if g.ndim != 2:
                raise DimensionError(f"group {i} must be a 2-d subjects x occasions matrix")
            if g.shape[0] < 2:
                raise InsufficientDataError(
                    f"group {i} has {g.shape[0]} subject(s); covariance estimation needs >= 2"
                )
            if g.shape[1] < 1:
                raise DimensionError(f"group {i} has no occasions")
            if not np.all(np.isfinite(g)):
                raise ValueError(f"group {i} contains non-finite values")
            validated.append(g)
        object.__setattr__(self, "groups", tuple(validated))

    @classmethod
    def from_arrays(cls, groups) -> "Dataset":
        return cls(groups=tuple(groups))

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def n_vec(self) -> tuple[int, ...]:
        return tuple(g.shape[0] for g in self.groups)

    @property
    def t_vec(self) -> tuple[int, ...]:
        return tuple(g.shape[1] for g in self.groups)

    @property
    def n_total(self) -> int:
        return sum(self.n_vec)

    @property
    def total_dim(self) -> int:
        return sum(self.t_vec)

    @property
    def n_values(self) -> int:
        return sum(n * t for n, t in zip(self.n_vec, self.t_vec))

    def pooled(self) -> np.ndarray:
        """All values as one flat vector: group-major, subject-major,
        occasion-minor (each subject's measurements stay contiguous)."""
        return np.concatenate([g.ravel() for g in self.groups])

    def with_pooled(self, values: np.ndarray) -> "Dataset":
        """Rebuild a dataset of this shape from a flat pooled vector."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n_values,):
            raise DimensionError(
                f"pooled vector must have length {self.n_values}, got {values.shape}"
            )
        out = []
        off = 0
        for g in self.groups:
            size = g.shape[0] * g.shape[1]
            out.append(values[off:off + size].reshape(g.shape))
            off += size
        return Dataset(groups=tuple(out))


@dataclass(frozen=True)
class GroupSummary:
    """Sample mean, unbiased sample covariance and size of one group."""

    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.shape != (mean.size, mean.size):
            raise DimensionError(
                f"covariance shape {cov.shape} does not match mean length {mean.size}"
            )
        if self.n < 2:
            raise InsufficientDataError(f"group size must be >= 2, got {self.n}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("summary statistics must be finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class ScaledCovariance:
    """Block-diagonal studentizer N * diag(Vhat_1/n_1, ..., Vhat_a/n_a)."""

    sigma_hat: np.ndarray
    n_total: int


@dataclass(frozen=True)
class TestOutcome:
    """Result of one hypothesis test.

    ``reference`` describes the null reference distribution (e.g. "chi2(3)",
    "F(2.31, inf)" or "empirical(B=500)"); ``df`` carries rank(H) for the
    WTS and the Box degrees of freedom for the ATS.
    """

    method: str
    statistic: float
    reference: str
    p_value: float
    df: float
    extra: dict = field(default_factory=dict)


def summarize(data: Dataset) -> list[GroupSummary]:
    """Per-group mean and unbiased covariance (divisor n_i - 1)."""
    out = []
    for g in data.groups:
        mean = g.mean(axis=0)
        centered = g - mean
        cov = centered.T @ centered / (g.shape[0] - 1)
        out.append(GroupSummary(mean=mean, cov=cov, n=g.shape[0]))
    return out


def scaled_cov(summaries) -> ScaledCovariance:
    """Assemble N * diag(Vhat_i / n_i) from group summaries."""
    summaries = list(summaries)
    n_total = sum(s.n for s in summaries)
    blocks = [(n_total / s.n) * s.cov for s in summaries]
    return ScaledCovariance(sigma_hat=direct_sum(blocks), n_total=n_total)


def _stacked_mean(summaries) -> np.ndarray:
    return np.concatenate([s.mean for s in summaries])


def _check_dims(total_dim: int, h: HypothesisMatrix):
    if h.total_dim != total_dim:
        raise DesignError(
            f"hypothesis matrix has {h.total_dim} columns but the design has "
            f"{total_dim} mean components"
        )


def wts_from_summaries(summaries, h: HypothesisMatrix) -> TestOutcome:
    """Wald-type test from group summary statistics."""
    summaries = list(summaries)
    sc = scaled_cov(summaries)
    ybar = _stacked_mean(summaries)
    _check_dims(ybar.size, h)
    mid = h.h @ sc.sigma_hat @ h.h.T
    if not np.all(np.isfinite(mid)) or np.trace(mid) <= 0.0:
        raise DegenerateCovarianceError(
            "H Sigma H' is numerically zero; the Wald-type statistic is undefined"
        )
    hy = h.h @ ybar
    stat = float(sc.n_total * hy @ moore_penrose(mid) @ hy)
    f = float(h.rank)
    return TestOutcome(
        method="WTS-asym",
        statistic=stat,
        reference=f"chi2({h.rank})",
        p_value=float(chi2_sf(stat, f)),
        df=f,
    )


def wts(data: Dataset, h: HypothesisMatrix) -> TestOutcome:
    """Wald-type test N * Ybar' H' (H Sigma H')^+ H Ybar vs chi2(rank H)."""
    return wts_from_summaries(summarize(data), h)


def ats_tilde(data: Dataset, h: HypothesisMatrix) -> float:
    """Unscaled ANOVA-type quadratic form N * Ybar' T Ybar."""
    summaries = summarize(data)
    ybar = _stacked_mean(summaries)
    _check_dims(ybar.size, h)
    n_total = sum(s.n for s in summaries)
    return float(n_total * ybar @ h.projector @ ybar)


def box_df(sc: ScaledCovariance, t_proj: np.ndarray) -> float:
    """Two-moment degrees of freedom tr(T Sigma)^2 / tr((T Sigma)^2)."""
    ts = np.asarray(t_proj, dtype=np.float64) @ sc.sigma_hat
    tr1 = float(np.trace(ts))
    tr2 = float(np.einsum("ij,ji->", ts, ts))
    if tr2 <= 0.0 or not np.isfinite(tr2):
        raise DegenerateCovarianceError("tr((T Sigma)^2) is not positive")
    return tr1 * tr1 / tr2


def ats_f_test_from_summaries(summaries, h: HypothesisMatrix) -> TestOutcome:
    """ANOVA-type test from group summary statistics."""
    summaries = list(summaries)
    sc = scaled_cov(summaries)
    ybar = _stacked_mean(summaries)
    _check_dims(ybar.size, h)
    ts = h.projector @ sc.sigma_hat
    tr1 = float(np.trace(ts))
    if tr1 <= 0.0 or not np.isfinite(tr1):
        raise DegenerateCovarianceError("tr(T Sigma) is not positive")
    nu = box_df(sc, h.projector)
    qtilde = float(sc.n_total * ybar @ h.projector @ ybar)
    stat = qtilde / tr1
    return TestOutcome(
        method="ATS-F",
        statistic=stat,
        reference=f"F({nu:.6g}, inf)",
        p_value=float(chi2_sf(nu * stat, nu)),
        df=nu,
        extra={"qtilde": qtilde, "trace_t_sigma": tr1},
    )


def ats_f_test(data: Dataset, h: HypothesisMatrix) -> TestOutcome:
    """ANOVA-type test: F_N = Qtilde / tr(T Sigma) against F(nu_hat, inf).

    The rejection rule uses the scaled statistic F_N, whose first two moments
    the Box approximation matches; the unscaled quadratic form is reported in
    ``extra['qtilde']``.
    """
    return ats_f_test_from_summaries(summarize(data), h)


def ats_eigen_null_oracle(
    sc: ScaledCovariance, t_proj: np.ndarray, m: int, rng: RngStream
) -> np.ndarray:
    """Monte Carlo draws from the weighted chi-square null law of the ATS.

    The weights are the eigenvalues of T Sigma, obtained from the symmetric
    product Sigma^(1/2) T Sigma^(1/2) which shares its nonzero spectrum.
    Used as an independent calibration oracle for the F approximation.
    """
    t_proj = np.asarray(t_proj, dtype=np.float64)
    root = psd_sqrt(sc.sigma_hat)
    weights = sym_eigen(root @ t_proj @ root).values
    law = WeightedChiSq(weights=np.maximum(weights, 0.0))
    return weighted_chi2_sample(law, m, rng)
