"""Ordered statistics post-processing (OSD-0 and combination sweep)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gf2
from .bp import DecodingProblem

OSD0 = "osd0"
COMBINATION_SWEEP = "cs"


class InconsistentSyndrome(ValueError):
    """The syndrome is not in the column space of H."""


@dataclass(frozen=True)
class OsdConfig:
    order: int = 10
    variant: str = COMBINATION_SWEEP

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("OSD order must be non-negative")
        if self.variant not in (OSD0, COMBINATION_SWEEP):
            raise ValueError(f"variant must be {OSD0!r} or {COMBINATION_SWEEP!r}")


def soft_weight(problem: DecodingProblem, e: np.ndarray) -> float:
    """Negative log-likelihood ratio of ``e`` relative to the zero error."""
    return float(problem.channel_llr[np.asarray(e, dtype=bool)].sum())


def osd_decode(problem: DecodingProblem, s: np.ndarray, llr_out: np.ndarray, cfg: OsdConfig = OsdConfig()) -> np.ndarray:
    """Solve ``H e = s`` on the least reliable independent columns.

    Columns are ranked by ascending BP marginal (most likely in error first,
    ties to the lower index).  The combination sweep also tries every single
    non-pivot flip and every pair among the first ``order`` non-pivot bits,
    keeping the candidate with the lowest soft weight under the priors.
    """
    s = np.asarray(s, dtype=np.uint8)
    llr_out = np.asarray(llr_out, dtype=np.float64)
    n, m = problem.n, problem.m
    if llr_out.size != n or s.size != m:
        raise gf2.DimensionError(f"expected llr of length {n} and syndrome of length {m}")

    order = np.lexsort((np.arange(n), llr_out))
    aug = np.zeros((m, n + 1), dtype=np.uint8)
    aug[:, :n] = problem.H.to_dense()[:, order]
    aug[:, n] = s
    words = gf2._pack_rows(aug)
    pivots = gf2._eliminate(words, n + 1, pivot_cols=n)
    reduced = gf2._unpack_rows(words, n + 1)
    r = len(pivots)
    if reduced[r:, n].any():
        raise InconsistentSyndrome("syndrome is not reachable from any error pattern")

    base = reduced[:r, n].astype(np.uint8)
    is_pivot = np.zeros(n, dtype=bool)
    is_pivot[pivots] = True
    free = np.flatnonzero(~is_pivot)
    cols = reduced[:r][:, free]
    w = problem.channel_llr[order]
    w_piv = w[pivots]
    w_free = w[free]

    best_free: tuple[int, ...] = ()
    best_piv = base
    if cfg.variant == COMBINATION_SWEEP and free.size:
        best_cost = float(w_piv @ base)
        singles = base[:, None] ^ cols
        cost1 = w_piv @ singles + w_free
        i = int(np.argmin(cost1))
        if cost1[i] < best_cost:
            best_cost, best_free, best_piv = float(cost1[i]), (i,), singles[:, i]
        lam = min(cfg.order, free.size)
        if lam >= 2:
            a, b = np.triu_indices(lam, k=1)
            pairs = base[:, None] ^ cols[:, a] ^ cols[:, b]
            cost2 = w_piv @ pairs + w_free[a] + w_free[b]
            j = int(np.argmin(cost2))
            if cost2[j] < best_cost:
                best_free, best_piv = (int(a[j]), int(b[j])), pairs[:, j]

    e_perm = np.zeros(n, dtype=np.uint8)
    e_perm[pivots] = best_piv
    e_perm[free[list(best_free)]] = 1
    e = np.zeros(n, dtype=np.uint8)
    e[order] = e_perm
    return e
