"""Normalized min-sum BP syndrome decoding with oscillation tracking.

The message-passing loop runs in a compiled extension when available and
falls back to a numpy implementation otherwise.  Set ``SPECBP_PURE_PYTHON=1``
to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import _minsum_py
from .gf2 import BinMatrix, DimensionError

try:
    if os.environ.get("SPECBP_PURE_PYTHON") == "1":
        raise ImportError("pure python requested")
    from . import _minsum as _minsum_ext
except ImportError:  # pragma: no cover - depends on build
    _minsum_ext = None

KERNELS = {"python": _minsum_py.min_sum}
if _minsum_ext is not None:
    KERNELS["cython"] = _minsum_ext.min_sum
BACKEND = "cython" if "cython" in KERNELS else "python"

ADAPTIVE = "adaptive"
FIXED = "fixed"


def damping_factor(i: int) -> float:
    """Adaptive damping ``1 - 2**-i``: 0.5 at the first iteration, tending to 1."""
    if i < 1:
        raise ValueError("iteration index starts at 1")
    return 1.0 - 2.0**-i


@dataclass(frozen=True)
class BpConfig:
    max_iters: int = 50
    damping: str = ADAPTIVE
    alpha: float = 1.0
    llr_clamp: float = 64.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.damping not in (ADAPTIVE, FIXED):
            raise ValueError(f"damping must be {ADAPTIVE!r} or {FIXED!r}")
        if self.damping == FIXED and not 0 < self.alpha <= 1:
            raise ValueError("fixed damping factor must lie in (0, 1]")
        if self.llr_clamp <= 0:
            raise ValueError("llr_clamp must be positive")

    @property
    def kernel_alpha(self) -> float:
        """Value passed to the kernel; non-positive selects the adaptive rule."""
        return self.alpha if self.damping == FIXED else 0.0

    def describe(self) -> str:
        rule = "1-2^-i" if self.damping == ADAPTIVE else f"fixed {self.alpha}"
        return f"min-sum max_iters={self.max_iters} damping={rule} clamp={self.llr_clamp}"


class DecodingProblem:
    """Check matrix plus per-bit priors, with a cached Tanner graph."""

    def __init__(self, H: BinMatrix, priors: Sequence[float] | np.ndarray | float):
        self.H = H
        pri = np.broadcast_to(np.asarray(priors, dtype=np.float64), (H.cols,)).copy()
        if pri.size and (pri.min() <= 0 or pri.max() > 0.5):
            raise ValueError("priors must lie in (0, 0.5]")
        self.priors = pri
        self.channel_llr = np.log((1 - pri) / pri)

    @property
    def n(self) -> int:
        return self.H.cols

    @property
    def m(self) -> int:
        return self.H.rows

    @cached_property
    def _graph(self) -> tuple[np.ndarray, np.ndarray]:
        dense = self.H.to_dense()
        chk, var = np.nonzero(dense)
        chk_ptr = np.zeros(self.m + 1, dtype=np.int64)
        np.cumsum(np.bincount(chk, minlength=self.m), out=chk_ptr[1:])
        return chk_ptr, var.astype(np.int64)

    @property
    def chk_ptr(self) -> np.ndarray:
        return self._graph[0]

    @property
    def edge_var(self) -> np.ndarray:
        return self._graph[1]

    @cached_property
    def edge_chk(self) -> np.ndarray:
        return np.repeat(np.arange(self.m), np.diff(self.chk_ptr))

    @cached_property
    def columns(self) -> list[np.ndarray]:
        """Check indices touched by each bit."""
        order = np.argsort(self.edge_var, kind="stable")
        chk = self.edge_chk[order]
        bounds = np.searchsorted(self.edge_var[order], np.arange(self.n + 1))
        return [chk[bounds[i] : bounds[i + 1]] for i in range(self.n)]

    def syndrome(self, e: np.ndarray) -> np.ndarray:
        """``H @ e`` for a dense 0/1 vector."""
        e = np.asarray(e, dtype=np.uint8)
        if e.size != self.n:
            raise DimensionError(f"error has length {e.size}, expected {self.n}")
        hits = np.bincount(self.edge_chk, weights=e[self.edge_var], minlength=self.m)
        return (hits.astype(np.int64) & 1).astype(np.uint8)

    def flip_syndrome(self, s: np.ndarray, bits: Sequence[int]) -> np.ndarray:
        """``s xor H t`` where ``t`` is supported on ``bits``."""
        out = np.array(s, dtype=np.uint8, copy=True)
        for b in bits:
            out[self.columns[b]] ^= 1
        return out


@dataclass
class BpOutcome:
    converged: bool
    e_hat: np.ndarray
    llr_out: np.ndarray
    flip_counts: np.ndarray
    iterations: int
    backend: str = field(default=BACKEND, repr=False)


def decode(
    problem: DecodingProblem,
    s: np.ndarray,
    cfg: BpConfig = BpConfig(),
    track_oscillations: bool = True,
    backend: str | None = None,
) -> BpOutcome:
    """Run flooding min-sum on syndrome ``s``.

    Each iteration passes variable-to-check then check-to-variable messages,
    forms the marginal LLRs, takes the hard decision (``llr <= 0`` decodes to
    1), bumps the flip counter of every bit whose decision changed relative to
    the previous iteration (the all-zero vector before the first), and stops
    as soon as the estimate reproduces ``s``.
    """
    s = np.ascontiguousarray(s, dtype=np.uint8)
    if s.size != problem.m:
        raise DimensionError(f"syndrome has length {s.size}, expected {problem.m}")
    name = backend or BACKEND
    kernel = KERNELS[name]
    converged, iters, e_hat, llr_out, flips = kernel(
        problem.chk_ptr,
        problem.edge_var,
        problem.channel_llr,
        s,
        cfg.max_iters,
        cfg.kernel_alpha,
        cfg.llr_clamp,
        track_oscillations,
    )
    return BpOutcome(bool(converged), e_hat, llr_out, flips, int(iters), name)
