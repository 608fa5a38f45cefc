"""Dense bit-packed linear algebra over GF(2).

Rows are stored as little-endian ``uint64`` words: column ``j`` lives in word
``j // 64`` at bit ``j % 64``.  Padding bits past the last column are always
zero, so word-wise equality is matrix equality.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

WORD_BITS = 64
_WORD = np.uint64


class DimensionError(ValueError):
    """Raised when operand shapes are not conformable."""


def _n_words(n: int) -> int:
    return (n + WORD_BITS - 1) // WORD_BITS


def _pack_rows(dense: np.ndarray) -> np.ndarray:
    """Pack a 2-D 0/1 array into ``(rows, words)`` uint64."""
    rows, cols = dense.shape
    words = _n_words(cols)
    padded = np.zeros((rows, words * WORD_BITS), dtype=np.uint8)
    padded[:, :cols] = dense & 1
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(_WORD, copy=False).reshape(rows, words)


def _unpack_rows(words: np.ndarray, cols: int) -> np.ndarray:
    rows = words.shape[0]
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols), dtype=np.uint8)
    as_bytes = np.ascontiguousarray(words.astype("<u8", copy=False)).view(np.uint8)
    return np.unpackbits(as_bytes.reshape(rows, -1), axis=1, bitorder="little")[:, :cols]


def _parity(words: np.ndarray, axis: int = -1) -> np.ndarray:
    """Parity of the total popcount along ``axis``."""
    if words.shape[axis] == 0:
        return np.zeros(np.delete(words.shape, axis), dtype=np.uint8)
    folded = np.bitwise_xor.reduce(words, axis=axis)
    return (np.bitwise_count(folded) & 1).astype(np.uint8)


class BinVector:
    """Bit-packed vector over GF(2)."""

    __slots__ = ("n", "words")

    def __init__(self, n: int, words: np.ndarray | None = None):
        if n < 0:
            raise ValueError("length must be non-negative")
        self.n = n
        if words is None:
            words = np.zeros(_n_words(n), dtype=_WORD)
        self.words = words

    @classmethod
    def from_bits(cls, bits: Iterable[int] | np.ndarray) -> BinVector:
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        return cls(arr.size, _pack_rows(arr.reshape(1, -1))[0])

    @classmethod
    def from_support(cls, n: int, support: Iterable[int]) -> BinVector:
        idx = np.fromiter(support, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise IndexError(f"support index out of range for length {n}")
        # repeated indices cancel
        bits = (np.bincount(idx, minlength=n) & 1).astype(np.uint8)
        return cls.from_bits(bits)

    def to_bits(self) -> np.ndarray:
        return _unpack_rows(self.words.reshape(1, -1), self.n)[0].copy()

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.to_bits())

    def weight(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, j: int) -> int:
        if not 0 <= j < self.n:
            raise IndexError(j)
        return int((self.words[j // WORD_BITS] >> _WORD(j % WORD_BITS)) & _WORD(1))

    def __xor__(self, other: BinVector) -> BinVector:
        if self.n != other.n:
            raise DimensionError(f"vector lengths differ: {self.n} vs {other.n}")
        return BinVector(self.n, self.words ^ other.words)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinVector):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.n, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BinVector({''.join(map(str, self.to_bits()))})"


class BinMatrix:
    """Bit-packed matrix over GF(2).

    Instances are treated as immutable; every operation returns a new matrix.
    Empty shapes (``0 x n`` or ``n x 0``) are valid.
    """

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray | None = None):
        if rows < 0 or cols < 0:
            raise ValueError("shape must be non-negative")
        self.rows = rows
        self.cols = cols
        if words is None:
            words = np.zeros((rows, _n_words(cols)), dtype=_WORD)
        self.words = words

    # construction -------------------------------------------------------

    @classmethod
    def from_dense(cls, dense: Sequence[Sequence[int]] | np.ndarray, cols: int | None = None) -> BinMatrix:
        arr = np.asarray(dense, dtype=np.uint8)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, cols or 0)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls(arr.shape[0], arr.shape[1], _pack_rows(arr))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> BinMatrix:
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> BinMatrix:
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_rows(cls, rows: Sequence[BinVector], cols: int) -> BinMatrix:
        if not rows:
            return cls(0, cols)
        for r in rows:
            if r.n != cols:
                raise DimensionError(f"row length {r.n} does not match {cols}")
        return cls(len(rows), cols, np.stack([r.words for r in rows]))

    # access -------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def to_dense(self) -> np.ndarray:
        return _unpack_rows(self.words, self.cols).copy()

    def row(self, i: int) -> BinVector:
        return BinVector(self.cols, self.words[i].copy())

    def column(self, j: int) -> np.ndarray:
        """Column ``j`` as a dense 0/1 array."""
        return ((self.words[:, j // WORD_BITS] >> _WORD(j % WORD_BITS)) & _WORD(1)).astype(np.uint8)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(ij)
        return int((self.words[i, j // WORD_BITS] >> _WORD(j % WORD_BITS)) & _WORD(1))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.shape, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BinMatrix({self.rows}x{self.cols})"

    def is_zero(self) -> bool:
        return not self.words.any()

    def row_weights(self) -> np.ndarray:
        return np.bitwise_count(self.words).sum(axis=1).astype(np.int64)

    # structure ----------------------------------------------------------

    @property
    def T(self) -> BinMatrix:
        return BinMatrix.from_dense(self.to_dense().T)

    def hstack(self, other: BinMatrix) -> BinMatrix:
        if self.rows != other.rows:
            raise DimensionError(f"cannot hstack {self.shape} and {other.shape}")
        return BinMatrix.from_dense(np.hstack([self.to_dense(), other.to_dense()]))

    def vstack(self, other: BinMatrix) -> BinMatrix:
        if self.cols != other.cols:
            raise DimensionError(f"cannot vstack {self.shape} and {other.shape}")
        return BinMatrix(self.rows + other.rows, self.cols, np.vstack([self.words, other.words]))

    def select_columns(self, cols: Sequence[int]) -> BinMatrix:
        return BinMatrix.from_dense(self.to_dense()[:, np.asarray(cols, dtype=np.int64)].reshape(self.rows, len(cols)))

    def __add__(self, other: BinMatrix) -> BinMatrix:
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        return BinMatrix(self.rows, self.cols, self.words ^ other.words)

    def __matmul__(self, other: BinMatrix) -> BinMatrix:
        return mul(self, other)


# operations -------------------------------------------------------------


def mul(a: BinMatrix, b: BinMatrix) -> BinMatrix:
    """Matrix product over GF(2)."""
    if a.cols != b.rows:
        raise DimensionError(f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}")
    out = np.zeros((a.rows, _n_words(b.cols)), dtype=_WORD)
    if a.rows == 0 or b.cols == 0:
        return BinMatrix(a.rows, b.cols, out)
    for k in range(a.cols):
        hit = a.column(k).astype(bool)
        if hit.any():
            out[hit] ^= b.words[k]
    return BinMatrix(a.rows, b.cols, out)


def mat_vec(a: BinMatrix, v: BinVector) -> BinVector:
    """Compute ``a @ v`` over GF(2)."""
    if a.cols != v.n:
        raise DimensionError(f"cannot multiply {a.rows}x{a.cols} matrix by length-{v.n} vector")
    if a.rows == 0:
        return BinVector(0)
    bits = _parity(a.words & v.words[None, :])
    return BinVector.from_bits(bits)


def _eliminate(words: np.ndarray, cols: int, pivot_cols: int | None = None) -> list[int]:
    """In-place reduced row echelon form; returns pivot columns in order.

    Pivots are searched left to right, taking the first row with a one in the
    current column.  Only the first ``pivot_cols`` columns are eligible.
    """
    rows = words.shape[0]
    limit = cols if pivot_cols is None else pivot_cols
    pivots: list[int] = []
    r = 0
    for c in range(limit):
        if r == rows:
            break
        w, b = divmod(c, WORD_BITS)
        colbits = ((words[:, w] >> _WORD(b)) & _WORD(1)).astype(bool)
        cand = np.flatnonzero(colbits[r:])
        if cand.size == 0:
            continue
        p = r + int(cand[0])
        if p != r:
            words[[r, p]] = words[[p, r]]
            colbits[[r, p]] = colbits[[p, r]]
        colbits[r] = False
        if colbits.any():
            words[colbits] ^= words[r]
        pivots.append(c)
        r += 1
    return pivots


def row_reduce(a: BinMatrix) -> tuple[BinMatrix, list[int]]:
    """Reduced row echelon form and the ordered pivot columns."""
    words = a.words.copy()
    pivots = _eliminate(words, a.cols)
    return BinMatrix(a.rows, a.cols, words), pivots


def rank(a: BinMatrix) -> int:
    if a.rows == 0 or a.cols == 0:
        return 0
    return len(_eliminate(a.words.copy(), a.cols))


def solve(a: BinMatrix, s: BinVector) -> tuple[BinVector | None, list[int]]:
    """Solve ``a @ x = s``.

    Returns ``(x, pivots)`` where ``x`` has zeros on every free column, or
    ``(None, pivots)`` when the system is inconsistent.
    """
    if a.rows != s.n:
        raise DimensionError(f"matrix has {a.rows} rows but syndrome has length {s.n}")
    aug = np.hstack([a.to_dense(), s.to_bits().reshape(-1, 1)]) if a.rows else np.zeros((0, a.cols + 1), np.uint8)
    words = _pack_rows(aug)
    pivots = _eliminate(words, a.cols + 1, pivot_cols=a.cols)
    rhs_col = a.cols
    w, b = divmod(rhs_col, WORD_BITS)
    rhs = ((words[:, w] >> _WORD(b)) & _WORD(1)).astype(np.uint8)
    if rhs[len(pivots):].any():
        return None, pivots
    x = np.zeros(a.cols, dtype=np.uint8)
    x[pivots] = rhs[: len(pivots)]
    return BinVector.from_bits(x), pivots


def kernel_basis(a: BinMatrix) -> BinMatrix:
    """Basis of the right null space, one vector per row."""
    n = a.cols
    if a.rows == 0:
        return BinMatrix.identity(n)
    reduced, pivots = row_reduce(a)
    dense = reduced.to_dense()[: len(pivots)]
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        basis[i, pivots] = dense[:, f]
    return BinMatrix.from_dense(basis.reshape(len(free), n))


def in_rowspace(a: BinMatrix, v: BinVector) -> bool:
    if a.cols != v.n:
        raise DimensionError(f"vector length {v.n} does not match {a.cols} columns")
    if not v.words.any():
        return True
    return rank(a.vstack(BinMatrix(1, v.n, v.words.reshape(1, -1)))) == rank(a)


class RowspaceTester:
    """Repeated membership tests against a fixed row space."""

    def __init__(self, a: BinMatrix):
        reduced, pivots = row_reduce(a)
        self.cols = a.cols
        self._basis = reduced.words[: len(pivots)]
        self._pivots = pivots

    def reduce(self, v: BinVector) -> BinVector:
        if v.n != self.cols:
            raise DimensionError(f"vector length {v.n} does not match {self.cols} columns")
        w = v.words.copy()
        for row, c in zip(self._basis, self._pivots):
            if (w[c // WORD_BITS] >> _WORD(c % WORD_BITS)) & _WORD(1):
                w ^= row
        return BinVector(v.n, w)

    def contains(self, v: BinVector) -> bool:
        return not self.reduce(v).words.any()


def kron(a: BinMatrix, b: BinMatrix) -> BinMatrix:
    return BinMatrix.from_dense(np.kron(a.to_dense(), b.to_dense()).astype(np.uint8).reshape(a.rows * b.rows, a.cols * b.cols))


def shift_matrix(l: int) -> BinMatrix:
    """``l x l`` cyclic shift with ``S[i, (i + 1) % l] = 1``."""
    if l < 1:
        raise ValueError("shift matrix size must be at least 1")
    return BinMatrix.from_dense(np.roll(np.eye(l, dtype=np.uint8), 1, axis=1))


def matrix_power(a: BinMatrix, e: int) -> BinMatrix:
    if a.rows != a.cols:
        raise DimensionError("matrix power needs a square matrix")
    result = BinMatrix.identity(a.rows)
    base = a
    while e:
        if e & 1:
            result = mul(result, base)
        base = mul(base, base)
        e >>= 1
    return result


def inverse(a: BinMatrix) -> BinMatrix:
    """Inverse of a square full-rank matrix."""
    n = a.rows
    if a.cols != n:
        raise DimensionError(f"cannot invert a {a.rows}x{a.cols} matrix")
    words = _pack_rows(np.hstack([a.to_dense(), np.eye(n, dtype=np.uint8)]))
    pivots = _eliminate(words, 2 * n, pivot_cols=n)
    if len(pivots) != n:
        raise np.linalg.LinAlgError("matrix is singular over GF(2)")
    return BinMatrix.from_dense(_unpack_rows(words, 2 * n)[:, n:])
