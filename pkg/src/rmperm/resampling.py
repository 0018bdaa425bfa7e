"""Resampling-based tests: pooled-observation permutation of the Wald-type
statistic, plus nonparametric and parametric bootstrap versions of both
statistics.

The permutation scheme pools all scalar observations, permutes them uniformly
(deliberately breaking the within-subject dependencies), reshapes them back
into the original group/subject/occasion layout, and recomputes means *and*
per-group covariances on each permuted dataset. Studentizing by the permuted
covariance is what makes the conditional distribution of the permuted
statistic track the null distribution of the observed one.

Resamples are generated in fixed-size chunks, each chunk owning an RNG
substream derived from the plan's seed by chunk index, so results do not
depend on execution order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .design import HypothesisMatrix
from .distributions import RngStream
from .errors import DegenerateCovarianceError, DesignError
from .inference import Dataset, summarize
from .linalg import psd_sqrt

__all__ = [
    "PermutationLimitCheck",
    "ResamplePlan",
    "ResampleResult",
    "npbs",
    "pbs",
    "permutation_limit_diagnostics",
    "permute_pooled",
    "wtps",
]

RESAMPLE_SCHEMES = ("permutation", "npbs", "pbs")

# Resamples per RNG chunk. Fixed so that chunk -> substream assignment (and
# therefore every drawn resample) is independent of scheduling.
CHUNK_SIZE = 256


@dataclass(frozen=True)
class ResamplePlan:
    """How to resample: scheme, number of resamples and the seed."""

    scheme: str
    b: int = 1000
    seed: RngStream | int = 0

    def __post_init__(self):
        if self.scheme not in RESAMPLE_SCHEMES:
            raise DesignError(f"unknown resampling scheme {self.scheme!r}")
        if self.b < 1:
            raise ValueError(f"resample count must be >= 1, got {self.b}")
        if not isinstance(self.seed, RngStream):
            object.__setattr__(self, "seed", RngStream(int(self.seed)))


@dataclass(frozen=True)
class ResampleResult:
    """Observed statistic, its resampled replicates and the p-value.

    Degenerate resamples (studentizer numerically zero) are stored as +inf so
    they count against rejection; ``n_degenerate`` tallies them. The p-value
    convention is (1 + #{resampled >= observed}) / (b + 1), which keeps the
    test valid at finite b under exchangeability.
    """

    method: str
    scheme: str
    observed: float
    resampled: np.ndarray
    p_value: float
    n_degenerate: int
    extra: dict = field(default_factory=dict)


def _layout_arrays(data: Dataset):
    n_arr = np.asarray(data.n_vec, dtype=np.int64)
    t_arr = np.asarray(data.t_vec, dtype=np.int64)
    return n_arr, t_arr


def _check_dims(data: Dataset, h: HypothesisMatrix):
    if h.total_dim != data.total_dim:
        raise DesignError(
            f"hypothesis matrix has {h.total_dim} columns but the dataset has "
            f"{data.total_dim} mean components"
        )


def _chunks(b: int):
    start = 0
    ci = 0
    while start < b:
        yield ci, min(CHUNK_SIZE, b - start)
        start += CHUNK_SIZE
        ci += 1


def _finalize(method: str, scheme: str, observed: float, stats: np.ndarray, extra=None):
    degenerate = ~np.isfinite(stats)
    resampled = np.where(degenerate, np.inf, stats)
    count_ge = int(np.count_nonzero(resampled >= observed))
    p = (1 + count_ge) / (resampled.size + 1)
    return ResampleResult(
        method=method,
        scheme=scheme,
        observed=float(observed),
        resampled=resampled,
        p_value=float(p),
        n_degenerate=int(np.count_nonzero(degenerate)),
        extra=extra or {},
    )


def permute_pooled(data: Dataset, rng) -> Dataset:
    """Uniformly permute the pooled scalar observations and reshape back."""
    if isinstance(rng, RngStream):
        rng = rng.generator()
    pooled = data.pooled()
    return data.with_pooled(pooled[rng.permutation(pooled.size)])


def _observed_wts(pooled, n_arr, t_arr, h_mat) -> float:
    observed = float(kernels.wts_single(pooled, n_arr, t_arr, h_mat))
    if not np.isfinite(observed):
        raise DegenerateCovarianceError(
            "H Sigma H' is numerically zero; the Wald-type statistic is undefined"
        )
    return observed


def wtps(data: Dataset, h: HypothesisMatrix, plan: ResamplePlan) -> ResampleResult:
    """Permutation test of the Wald-type statistic on pooled observations.

    Each of the ``plan.b`` resamples permutes all scalar values, then
    recomputes group means and covariances before evaluating the statistic.
    """
    if plan.scheme != "permutation":
        raise DesignError(f"wtps needs scheme='permutation', got {plan.scheme!r}")
    _check_dims(data, h)
    n_arr, t_arr = _layout_arrays(data)
    pooled = data.pooled()
    observed = _observed_wts(pooled, n_arr, t_arr, h.h)
    base = np.arange(pooled.size)
    parts = []
    for ci, size in _chunks(plan.b):
        gen = plan.seed.child(ci).generator()
        idx = gen.permuted(np.broadcast_to(base, (size, pooled.size)), axis=1)
        idx = idx.astype(np.int64, copy=False)
        parts.append(kernels.batch_wts_gather(pooled, idx, n_arr, t_arr, h.h))
    return _finalize("WTPS", "permutation", observed, np.concatenate(parts))


def npbs(
    data: Dataset, h: HypothesisMatrix, plan: ResamplePlan, statistic: str = "wts"
) -> ResampleResult:
    """Nonparametric bootstrap: draw all values i.i.d. with replacement from
    the pooled observations, reshape, and recompute the statistic."""
    if plan.scheme != "npbs":
        raise DesignError(f"npbs needs scheme='npbs', got {plan.scheme!r}")
    if statistic not in ("wts", "ats"):
        raise ValueError(f"statistic must be 'wts' or 'ats', got {statistic!r}")
    _check_dims(data, h)
    n_arr, t_arr = _layout_arrays(data)
    pooled = data.pooled()
    parts = []
    if statistic == "wts":
        observed = _observed_wts(pooled, n_arr, t_arr, h.h)
        for ci, size in _chunks(plan.b):
            gen = plan.seed.child(ci).generator()
            idx = gen.integers(0, pooled.size, size=(size, pooled.size), dtype=np.int64)
            parts.append(kernels.batch_wts_gather(pooled, idx, n_arr, t_arr, h.h))
        return _finalize("NPBS-WTS", "npbs", observed, np.concatenate(parts))
    observed = _observed_ats(pooled, n_arr, t_arr, h.projector)
    for ci, size in _chunks(plan.b):
        gen = plan.seed.child(ci).generator()
        idx = gen.integers(0, pooled.size, size=(size, pooled.size), dtype=np.int64)
        parts.append(kernels.batch_ats_gather(pooled, idx, n_arr, t_arr, h.projector))
    return _finalize("NPBS-ATS", "npbs", observed, np.concatenate(parts))


def _observed_ats(pooled, n_arr, t_arr, tproj) -> float:
    q, tr1, _ = kernels.ats_single(pooled, n_arr, t_arr, tproj)
    if not np.isfinite(tr1) or tr1 <= 0.0:
        raise DegenerateCovarianceError("tr(T Sigma) is not positive")
    return float(q / tr1)


def _gaussian_batch(data: Dataset, roots, size: int, gen) -> np.ndarray:
    """size x N~ matrix of parametric bootstrap values, N(0, Vhat_i) per group."""
    out = np.empty((size, data.n_values))
    z = gen.standard_normal((size, data.n_values))
    off = 0
    for g, root in zip(data.groups, roots):
        n_i, t_i = g.shape
        block = z[:, off:off + n_i * t_i].reshape(size, n_i, t_i)
        out[:, off:off + n_i * t_i] = (block @ root).reshape(size, n_i * t_i)
        off += n_i * t_i
    return out


def pbs(
    data: Dataset, h: HypothesisMatrix, plan: ResamplePlan, statistic: str = "wts"
) -> ResampleResult:
    """Parametric bootstrap: per group draw n_i vectors from N(0, Vhat_i),
    mimicking the observed covariance structure."""
    if plan.scheme != "pbs":
        raise DesignError(f"pbs needs scheme='pbs', got {plan.scheme!r}")
    if statistic not in ("wts", "ats"):
        raise ValueError(f"statistic must be 'wts' or 'ats', got {statistic!r}")
    _check_dims(data, h)
    n_arr, t_arr = _layout_arrays(data)
    pooled = data.pooled()
    # Symmetric PSD roots of the group covariances; raises if any Vhat_i has
    # an eigenvalue below -atol.
    roots = [psd_sqrt(s.cov) for s in summarize(data)]
    parts = []
    if statistic == "wts":
        observed = _observed_wts(pooled, n_arr, t_arr, h.h)
        for ci, size in _chunks(plan.b):
            gen = plan.seed.child(ci).generator()
            values = _gaussian_batch(data, roots, size, gen)
            parts.append(kernels.batch_wts_values(values, n_arr, t_arr, h.h))
        return _finalize("PBS-WTS", "pbs", observed, np.concatenate(parts))
    observed = _observed_ats(pooled, n_arr, t_arr, h.projector)
    for ci, size in _chunks(plan.b):
        gen = plan.seed.child(ci).generator()
        values = _gaussian_batch(data, roots, size, gen)
        parts.append(kernels.batch_ats_values(values, n_arr, t_arr, h.projector))
    return _finalize("PBS-ATS", "pbs", observed, np.concatenate(parts))


@dataclass(frozen=True)
class PermutationLimitCheck:
    """Plug-in limit quantities and empirical permutation moments.

    ``gamma`` is the textbook limit shape diag(N/n_i) - J; the exact
    conditional covariance of the root-N scaled permuted means under sampling
    without replacement is ``mean_cov_expected`` (its J-coefficient is N/(N~-1)
    rather than 1, which is also what the empirical covariance approaches).
    ``sigma_pi_mean`` should approach ``sigma_pi_expected``, the limit of the
    permuted scaled covariance: sigma2_hat * diag(N/n_i).
    """

    sigma2_hat: float
    gamma: np.ndarray
    mean_cov_empirical: np.ndarray
    mean_cov_expected: np.ndarray
    sigma_pi_mean: np.ndarray
    sigma_pi_expected: np.ndarray
    n_draws: int


def permutation_limit_diagnostics(data: Dataset, m: int, rng) -> PermutationLimitCheck:
    """Empirically check the permutation limit theorems on a dataset.

    Draws ``m`` pooled permutations, records the scaled permuted mean vectors
    and the permuted scaled covariances, and returns their empirical moments
    next to the plug-in limits they should approach.
    """
    if m < 100:
        raise ValueError(f"diagnostics need m >= 100 draws, got {m}")
    if not isinstance(rng, RngStream):
        rng = RngStream(int(rng))
    n_arr, t_arr = _layout_arrays(data)
    pooled = data.pooled()
    n_total = data.n_total
    n_values = data.n_values
    total_dim = data.total_dim

    sigma2_hat = float(pooled.var())  # divisor N~, the plug-in second moment
    scale_blocks = np.concatenate(
        [np.full(t_i, n_total / n_i) for n_i, t_i in zip(data.n_vec, data.t_vec)]
    )
    gamma = np.diag(scale_blocks) - np.ones((total_dim, total_dim))
    # Exact conditional covariance of sqrt(N) (Ybar_pi - Ybar..) under uniform
    # permutation: diagonal (N/n_i)(N~-n_i)/(N~-1), off-diagonal -N/(N~-1),
    # all times the pooled variance.
    off = -n_total / (n_values - 1)
    mean_cov_expected = np.full((total_dim, total_dim), off)
    d = 0
    for n_i, t_i in zip(data.n_vec, data.t_vec):
        diag_val = (n_total / n_i) * (n_values - n_i) / (n_values - 1)
        for s in range(t_i):
            mean_cov_expected[d + s, d + s] = diag_val
        d += t_i
    mean_cov_expected *= sigma2_hat
    sigma_pi_expected = sigma2_hat * np.diag(scale_blocks)

    base = np.arange(n_values)
    mean_parts = []
    sigma_sum = np.zeros((total_dim, total_dim))
    done = 0
    ci = 0
    while done < m:
        size = min(CHUNK_SIZE, m - done)
        gen = rng.child(ci).generator()
        idx = gen.permuted(np.broadcast_to(base, (size, n_values)), axis=1)
        means, sigmas = kernels.batch_mean_sigma_gather(
            pooled, idx.astype(np.int64, copy=False), n_arr, t_arr
        )
        mean_parts.append(means)
        sigma_sum += sigmas.sum(axis=0)
        done += size
        ci += 1
    means = np.concatenate(mean_parts)
    grand = pooled.mean()
    scaled = np.sqrt(n_total) * (means - grand)
    centered = scaled - scaled.mean(axis=0)
    mean_cov_empirical = centered.T @ centered / m
    return PermutationLimitCheck(
        sigma2_hat=sigma2_hat,
        gamma=gamma,
        mean_cov_empirical=mean_cov_empirical,
        mean_cov_expected=mean_cov_expected,
        sigma_pi_mean=sigma_sum / m,
        sigma_pi_expected=sigma_pi_expected,
        n_draws=m,
    )
