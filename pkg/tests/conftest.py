"""Shared fixtures: the oxygen-consumption summary statistics and small
helpers used across test modules."""

import numpy as np
import pytest

# Published summary statistics of the leukocyte oxygen-consumption experiment:
# two treatment groups of 12 experimental batches, a 2 (staphylococci) x 3
# (time) within-subject structure, occasion order (with, 6), (with, 12),
# (with, 18), (without, 6), (without, 12), (without, 18).
O2_MEAN_PLACEBO = np.array([1.618, 2.434, 3.527, 1.322, 2.430, 3.425])
O2_MEAN_VERUM = np.array([1.656, 2.799, 4.029, 1.394, 2.57, 3.677])
O2_COV_PLACEBO = np.array([
    [0.025, -0.022, -0.004, 0.009, 0.015, 0.025],
    [-0.022, 0.092, -0.005, -0.001, -0.024, -0.035],
    [-0.004, -0.005, 0.081, -0.013, -0.010, -0.004],
    [0.009, -0.001, -0.013, 0.037, 0.044, 0.038],
    [0.015, -0.024, -0.010, 0.044, 0.069, 0.063],
    [0.025, -0.035, -0.004, 0.038, 0.063, 0.115],
])
O2_COV_VERUM = np.array([
    [0.043, 0.012, 0.046, 0.033, 0.014, 0.055],
    [0.012, 0.113, 0.008, 0.009, 0.060, 0.032],
    [0.046, 0.008, 0.065, 0.041, 0.005, 0.066],
    [0.033, 0.009, 0.041, 0.047, 0.016, 0.059],
    [0.014, 0.060, 0.005, 0.016, 0.058, 0.047],
    [0.055, 0.032, 0.066, 0.059, 0.047, 0.116],
])
O2_N = 12


@pytest.fixture
def o2_summaries():
    from rmperm import GroupSummary

    return [
        GroupSummary(mean=O2_MEAN_PLACEBO, cov=O2_COV_PLACEBO, n=O2_N),
        GroupSummary(mean=O2_MEAN_VERUM, cov=O2_COV_VERUM, n=O2_N),
    ]


def exact_moment_dataset(means, covs, n, seed=0):
    """Surrogate raw data whose sample mean and covariance equal the given
    summary statistics exactly (raw data for the experiment is unpublished).

    Draws standard normal matrices, whitens them by their own sample
    covariance and recolors with the target covariance, so any statistic that
    depends on the data only through (mean, cov, n) is reproduced exactly.
    """
    from rmperm import Dataset
    from rmperm.linalg import moore_penrose, psd_sqrt

    rng = np.random.default_rng(seed)
    groups = []
    for mean, cov in zip(means, covs):
        t = len(mean)
        z = rng.standard_normal((n, t))
        z = z - z.mean(axis=0)
        sample_cov = z.T @ z / (n - 1)
        whiten = moore_penrose(psd_sqrt(sample_cov))
        y = z @ whiten @ psd_sqrt(cov) + np.asarray(mean)
        groups.append(y)
    return Dataset(groups=tuple(groups))


def brute_force_wts_single_row(groups, h_row):
    """Scalar reference for the Wald-type statistic with a 1-row contrast.

    Works entirely in plain Python loops: group means, unbiased covariances,
    the scalar h Sigma h' and the quadratic form N * (h ybar)^2 / (h Sigma h').
    Independent of the package's linear algebra.
    """
    a = len(groups)
    n_total = sum(len(g) for g in groups)
    ybar = []
    covs = []
    for g in groups:
        n_i = len(g)
        t_i = len(g[0])
        means = [sum(g[k][s] for k in range(n_i)) / n_i for s in range(t_i)]
        cov = [[0.0] * t_i for _ in range(t_i)]
        for s in range(t_i):
            for r in range(t_i):
                acc = 0.0
                for k in range(n_i):
                    acc += (g[k][s] - means[s]) * (g[k][r] - means[r])
                cov[s][r] = acc / (n_i - 1)
        ybar.extend(means)
        covs.append((n_i, cov))
    hy = sum(h_row[j] * ybar[j] for j in range(len(h_row)))
    # h Sigma h' with Sigma block diagonal of (N / n_i) * cov_i
    hsh = 0.0
    offset = 0
    for n_i, cov in covs:
        t_i = len(cov)
        for s in range(t_i):
            for r in range(t_i):
                hsh += h_row[offset + s] * h_row[offset + r] * cov[s][r] * (n_total / n_i)
        offset += t_i
    return n_total * hy * hy / hsh
