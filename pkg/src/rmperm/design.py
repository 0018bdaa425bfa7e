"""Contrast/hypothesis matrices for one-, two- and three-factor
repeated-measures layouts, and their projectors.

Column ordering convention: a subject's expectation vector is laid out with
the *last* factor varying fastest. For a design with groups x factorB x
factorT the mean vector is ordered group-major, then B, then T, matching a
Kronecker product written ``group (x) B (x) T``. All builders and the CSV
assembler share this convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContrastError, DesignError
from .linalg import centering, kronecker, moore_penrose

__all__ = [
    "FactorialLayout",
    "HypothesisMatrix",
    "TWO_FACTOR_EFFECTS",
    "THREE_FACTOR_EFFECTS",
    "contrast_projector",
    "custom_hypothesis",
    "hyp_three_factor",
    "hyp_two_factor",
]

TWO_FACTOR_EFFECTS = ("G", "T", "GT")
THREE_FACTOR_EFFECTS = ("A", "B", "T", "AB", "AT", "BT", "ABT")

_ROW_SUM_TOL_BUILDER = 1e-12
_ROW_SUM_TOL_CUSTOM = 1e-8


@dataclass(frozen=True)
class FactorialLayout:
    """Shape of a factorial repeated-measures design.

    ``whole_plot_levels`` is the number of groups; ``sub_plot_levels`` lists
    the within-subject factor level counts whose product is the number of
    occasions per subject.
    """

    whole_plot_levels: int
    sub_plot_levels: tuple[int, ...]

    def __post_init__(self):
        if self.whole_plot_levels < 1:
            raise DesignError("whole-plot factor needs at least one level")
        subs = tuple(int(k) for k in self.sub_plot_levels)
        if not subs or any(k < 1 for k in subs):
            raise DesignError("every sub-plot factor needs at least one level")
        object.__setattr__(self, "sub_plot_levels", subs)

    @property
    def occasions(self) -> int:
        return int(np.prod(self.sub_plot_levels))

    @property
    def total_dim(self) -> int:
        return self.whole_plot_levels * self.occasions


def contrast_projector(h: np.ndarray) -> np.ndarray:
    """Projector T = H' (H H')^+ H onto the row space of H.

    The Moore-Penrose inverse is one valid generalized inverse; the quadratic
    forms built from T do not depend on which generalized inverse is used.
    """
    h = np.asarray(h, dtype=np.float64)
    return h.T @ moore_penrose(h @ h.T) @ h


@dataclass(frozen=True)
class HypothesisMatrix:
    """A contrast matrix H with its cached projector and rank.

    Every row of ``h`` sums to zero; ``projector`` is H'(HH')^+H, symmetric
    and idempotent; ``rank`` is rank(H), the chi-square degrees of freedom of
    the Wald-type statistic.
    """

    h: np.ndarray
    label: str
    projector: np.ndarray = field(repr=False)
    rank: int

    @property
    def total_dim(self) -> int:
        return self.h.shape[1]


def _validated(h: np.ndarray, label: str, row_sum_tol: float) -> HypothesisMatrix:
    h = np.ascontiguousarray(np.asarray(h, dtype=np.float64))
    if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 1:
        raise ContrastError(f"hypothesis matrix must be 2-d and non-empty, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ContrastError("hypothesis matrix entries must be finite")
    row_sums = h.sum(axis=1)
    worst = float(np.max(np.abs(row_sums)))
    if worst > row_sum_tol:
        raise ContrastError(
            f"rows of a contrast matrix must sum to zero; worst row sum {worst:.3e}"
        )
    rank = int(np.linalg.matrix_rank(h))
    if rank < 1:
        raise ContrastError("hypothesis matrix must have rank >= 1")
    return HypothesisMatrix(h=h, label=label, projector=contrast_projector(h), rank=rank)


def hyp_two_factor(effect: str, a: int, t: int) -> HypothesisMatrix:
    """Hypothesis matrix for a design with a groups and t occasions.

    ``T``  : no time effect, H = (1/a) 1_a' (x) P_t           (rank t-1)
    ``GT`` : no group x time interaction, H = P_a (x) P_t     (rank (a-1)(t-1))
    ``G``  : no group effect, H = P_a (x) (1/t) 1_t'          (rank a-1)
    """
    if effect == "T":
        if a < 1 or t < 2:
            raise DesignError(f"effect T needs a >= 1 and t >= 2, got a={a}, t={t}")
        h = kronecker(np.full((1, a), 1.0 / a), centering(t))
    elif effect == "GT":
        if a < 2 or t < 2:
            raise DesignError(f"effect GT needs a >= 2 and t >= 2, got a={a}, t={t}")
        h = kronecker(centering(a), centering(t))
    elif effect == "G":
        if a < 2 or t < 1:
            raise DesignError(f"effect G needs a >= 2 and t >= 1, got a={a}, t={t}")
        h = kronecker(centering(a), np.full((1, t), 1.0 / t))
    else:
        raise DesignError(
            f"unknown two-factor effect {effect!r}; expected one of {TWO_FACTOR_EFFECTS}"
        )
    return _validated(h, effect, _ROW_SUM_TOL_BUILDER)


def hyp_three_factor(effect: str, a: int, b: int, t: int) -> HypothesisMatrix:
    """Hypothesis matrix for a groups and a b x t within-subject structure.

    Each factor appearing in the effect name contributes its centering matrix
    to the Kronecker product; the remaining factors are averaged out with
    (1/k) 1_k'. Ranks multiply: e.g. ABT has rank (a-1)(b-1)(t-1).
    """
    if effect not in THREE_FACTOR_EFFECTS:
        raise DesignError(
            f"unknown three-factor effect {effect!r}; expected one of {THREE_FACTOR_EFFECTS}"
        )
    for name, levels in (("A", a), ("B", b), ("T", t)):
        if name in effect and levels < 2:
            raise DesignError(f"factor {name} appears in effect {effect} but has {levels} level(s)")
        if levels < 1:
            raise DesignError(f"factor {name} needs at least one level, got {levels}")
    parts = []
    for name, levels in (("A", a), ("B", b), ("T", t)):
        if name in effect:
            parts.append(centering(levels))
        else:
            parts.append(np.full((1, levels), 1.0 / levels))
    h = kronecker(kronecker(parts[0], parts[1]), parts[2])
    return _validated(h, effect, _ROW_SUM_TOL_BUILDER)


def custom_hypothesis(h, total_dim: int, label: str = "custom") -> HypothesisMatrix:
    """Validate a user-supplied contrast matrix against the design dimension."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != total_dim:
        raise DesignError(
            f"custom hypothesis matrix must have {total_dim} columns, got shape {h.shape}"
        )
    return _validated(h, label, _ROW_SUM_TOL_CUSTOM)
