"""Oscillation-guided speculative BP decoding.

When the first BP run fails, the bits whose hard decisions flipped most often
form a candidate set.  Small flip patterns over that set are applied to the
syndrome, each modified syndrome is decoded by an independent BP instance, and
the pattern is XOR-ed back into the first estimate that converges.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import bp
from .bp import BpConfig, BpOutcome, DecodingProblem

INITIAL_BP = "InitialBp"
TEST_VECTOR = "TestVector"
FAILURE = "Failure"


@dataclass(frozen=True)
class SpeculativeConfig:
    phi_size: int = 8
    w_max: int = 1
    n_s: int = 0
    bp: BpConfig = field(default_factory=BpConfig)
    parallelism: int = 1

    def __post_init__(self):
        if self.phi_size < 1:
            raise ValueError("phi_size must be at least 1")
        if self.w_max < 1:
            raise ValueError("w_max must be at least 1")
        if self.n_s < 0:
            raise ValueError("n_s must be non-negative")
        if self.n_s == 0 and self.w_max > self.phi_size:
            raise ValueError("exhaustive enumeration needs w_max <= phi_size")
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")

    @property
    def exhaustive(self) -> bool:
        return self.n_s == 0

    def max_test_vectors(self) -> int:
        if self.exhaustive:
            return sum(math.comb(self.phi_size, w) for w in range(1, self.w_max + 1))
        return sum(min(self.n_s, math.comb(self.phi_size, w)) for w in range(1, self.w_max + 1))


@dataclass(frozen=True)
class TestVector:
    bits: tuple[int, ...]
    ordinal: int

    @property
    def weight(self) -> int:
        return len(self.bits)

    def to_dense(self, n: int) -> np.ndarray:
        t = np.zeros(n, dtype=np.uint8)
        t[list(self.bits)] = 1
        return t


@dataclass
class SpeculativeResult:
    e_hat: np.ndarray
    source: str
    ordinal: int | None
    serial_iterations: int
    wall_iterations: int
    initial: BpOutcome
    phi: list[int] = field(default_factory=list)
    padded: bool = False

    @property
    def success(self) -> bool:
        return self.source != FAILURE

    @property
    def method(self) -> str:
        if self.source == TEST_VECTOR:
            return f"{TEST_VECTOR}({self.ordinal})"
        return self.source


def select_candidates(flip_counts: Sequence[int] | np.ndarray, phi_size: int) -> tuple[list[int], bool]:
    """Indices of the ``phi_size`` most-flipped bits.

    Ties go to the lower index.  The flag reports whether never-flipped bits
    had to be used as padding.
    """
    counts = np.asarray(flip_counts, dtype=np.int64)
    if phi_size > counts.size:
        raise ValueError(f"phi_size {phi_size} exceeds the {counts.size} available bits")
    order = np.lexsort((np.arange(counts.size), -counts))[:phi_size]
    padded = int(np.count_nonzero(counts)) < phi_size
    return [int(i) for i in order], padded


def gen_test_vectors(
    phi: Sequence[int], w_max: int, n_s: int = 0, rng: np.random.Generator | None = None
) -> list[TestVector]:
    """Flip patterns over ``phi`` in ordinal order.

    ``n_s == 0`` enumerates every subset of weight 1..w_max; combinations are
    taken over candidate positions, so patterns built from the most-flipped
    bits come first within a weight.  Otherwise ``n_s`` distinct subsets are
    drawn uniformly per weight (all of them when fewer exist).
    """
    phi = list(phi)
    out: list[TestVector] = []
    for w in range(1, min(w_max, len(phi)) + 1):
        total = math.comb(len(phi), w)
        if n_s == 0 or total <= n_s:
            picks = list(itertools.combinations(range(len(phi)), w))
        else:
            if rng is None:
                raise ValueError("sampled test vectors need an rng")
            seen: set[tuple[int, ...]] = set()
            picks = []
            while len(picks) < n_s:
                pos = tuple(sorted(int(i) for i in rng.choice(len(phi), size=w, replace=False)))
                if pos not in seen:
                    seen.add(pos)
                    picks.append(pos)
        for pos in picks:
            out.append(TestVector(tuple(phi[i] for i in pos), len(out)))
    return out


def precision_recall(phi: Sequence[int], e: np.ndarray) -> tuple[float, float]:
    """Hit precision and recall of the candidate set against a true error."""
    support = set(np.flatnonzero(np.asarray(e)).tolist())
    hits = len(support.intersection(phi))
    precision = hits / len(phi) if len(phi) else 0.0
    recall = hits / len(support) if support else 1.0
    return precision, recall


_POOLS: dict[int, ThreadPoolExecutor] = {}


def _pool(workers: int) -> ThreadPoolExecutor:
    if workers not in _POOLS:
        _POOLS[workers] = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="specbp")
    return _POOLS[workers]


def decode(
    problem: DecodingProblem,
    s: np.ndarray,
    cfg: SpeculativeConfig = SpeculativeConfig(),
    rng: np.random.Generator | None = None,
) -> SpeculativeResult:
    s = np.asarray(s, dtype=np.uint8)
    first = bp.decode(problem, s, cfg.bp, track_oscillations=True)
    if first.converged:
        return SpeculativeResult(first.e_hat, INITIAL_BP, None, first.iterations, first.iterations, first)

    phi, padded = select_candidates(first.flip_counts, min(cfg.phi_size, problem.n))
    vectors = gen_test_vectors(phi, cfg.w_max, cfg.n_s, rng)

    def attempt(t: TestVector) -> BpOutcome:
        return bp.decode(problem, problem.flip_syndrome(s, t.bits), cfg.bp, track_oscillations=False)

    iters: list[int] = []
    winner: tuple[TestVector, BpOutcome] | None = None
    step = cfg.parallelism
    for start in range(0, len(vectors), step):
        batch = vectors[start : start + step]
        results = list(_pool(step).map(attempt, batch)) if step > 1 else [attempt(batch[0])]
        for t, res in zip(batch, results):
            iters.append(res.iterations)
            if res.converged:
                winner = (t, res)
                break
        if winner is not None:
            break

    serial = first.iterations + sum(iters)
    wall = first.iterations + (max(iters) if iters else 0)
    if winner is None:
        return SpeculativeResult(first.e_hat, FAILURE, None, serial, wall, first, phi, padded)
    t, res = winner
    e_hat = res.e_hat.copy()
    e_hat[list(t.bits)] ^= 1
    return SpeculativeResult(e_hat, TEST_VECTOR, t.ordinal, serial, wall, first, phi, padded)
