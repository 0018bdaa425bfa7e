"""Vectorized numpy kernels, the fallback when numba is disabled or missing.

Same signatures and layout contract as ``_kernels_loops``; batches are
evaluated with stacked array operations (one eigh call over the whole batch)
instead of an explicit loop, so the fallback stays usable for Monte Carlo
work, just slower than the compiled path.
"""

import numpy as np

_EPS = np.finfo(np.float64).eps


def _group_slices(n_arr, t_arr):
    slices = []
    off_v = 0
    off_d = 0
    for ni, ti in zip(n_arr, t_arr):
        slices.append((int(ni), int(ti), off_v, off_d))
        off_v += int(ni) * int(ti)
        off_d += int(ti)
    return slices, off_d


def _batch_mean_sigma(values2d, n_arr, t_arr):
    b = values2d.shape[0]
    slices, total_dim = _group_slices(n_arr, t_arr)
    n_total = int(np.sum(n_arr))
    means = np.empty((b, total_dim))
    sigmas = np.zeros((b, total_dim, total_dim))
    for ni, ti, off_v, off_d in slices:
        blk = values2d[:, off_v:off_v + ni * ti].reshape(b, ni, ti)
        m = blk.mean(axis=1)
        centered = blk - m[:, None, :]
        cov = np.einsum("bks,bkr->bsr", centered, centered) / (ni - 1.0)
        means[:, off_d:off_d + ti] = m
        sigmas[:, off_d:off_d + ti, off_d:off_d + ti] = cov * (n_total / ni)
    return means, sigmas


def mean_and_sigma(values, n_arr, t_arr):
    means, sigmas = _batch_mean_sigma(values[None, :], n_arr, t_arr)
    return means[0], sigmas[0]


def _batch_wts(means, sigmas, h, n_total):
    r = h.shape[0]
    m = np.einsum("ij,bjk,lk->bil", h, sigmas, h, optimize=True)
    trace = np.einsum("bii->b", m)
    bad = ~np.isfinite(trace) | (trace <= 0.0) | ~np.isfinite(m).all(axis=(1, 2))
    safe = np.where(bad[:, None, None], np.eye(r)[None, :, :], m)
    w, vecs = np.linalg.eigh(safe)
    wmax = w[:, -1]
    bad |= ~np.isfinite(wmax) | (wmax <= 0.0)
    cutoff = r * _EPS * wmax
    hy = means @ h.T
    z = np.einsum("bij,bi->bj", vecs, hy)
    keep = w > cutoff[:, None]
    winv = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)
    q = n_total * np.einsum("bj,bj->b", z * z, winv)
    return np.where(bad, np.nan, q)


def _batch_ats(means, sigmas, tproj, n_total):
    ts = np.einsum("ij,bjk->bik", tproj, sigmas)
    tr1 = np.einsum("bii->b", ts)
    tr2 = np.einsum("bij,bji->b", ts, ts)
    qtilde = n_total * np.einsum("bi,ij,bj->b", means, tproj, means)
    bad = ~np.isfinite(tr1) | (tr1 <= 0.0)
    return (
        np.where(bad, np.nan, qtilde),
        np.where(bad, np.nan, tr1),
        np.where(bad, np.nan, tr2),
    )


def wts_quadform(mean, sigma, h, n_total):
    return float(_batch_wts(mean[None, :], sigma[None, :, :], h, n_total)[0])


def ats_quantities(mean, sigma, tproj, n_total):
    q, tr1, tr2 = _batch_ats(mean[None, :], sigma[None, :, :], tproj, n_total)
    return float(q[0]), float(tr1[0]), float(tr2[0])


def wts_single(values, n_arr, t_arr, h):
    return float(batch_wts_values(values[None, :], n_arr, t_arr, h)[0])


def ats_single(values, n_arr, t_arr, tproj):
    mean, sigma = mean_and_sigma(values, n_arr, t_arr)
    return ats_quantities(mean, sigma, tproj, int(np.sum(n_arr)))


def batch_wts_values(values2d, n_arr, t_arr, h):
    means, sigmas = _batch_mean_sigma(values2d, n_arr, t_arr)
    return _batch_wts(means, sigmas, h, int(np.sum(n_arr)))


def batch_wts_gather(pooled, idx, n_arr, t_arr, h):
    return batch_wts_values(pooled[idx], n_arr, t_arr, h)


def batch_ats_values(values2d, n_arr, t_arr, tproj):
    means, sigmas = _batch_mean_sigma(values2d, n_arr, t_arr)
    q, tr1, _ = _batch_ats(means, sigmas, tproj, int(np.sum(n_arr)))
    return q / tr1


def batch_ats_gather(pooled, idx, n_arr, t_arr, tproj):
    return batch_ats_values(pooled[idx], n_arr, t_arr, tproj)


def batch_mean_sigma_gather(pooled, idx, n_arr, t_arr):
    return _batch_mean_sigma(pooled[idx], n_arr, t_arr)
