"""Generalized-bicycle, bivariate-bicycle and coprime-BB CSS codes.

A code is described by two polynomials ``a`` and ``b`` in commuting shift
operators ``x = S_l (x) I_m`` and ``y = I_l (x) S_m``; the checks are
``H_X = [A | B]`` and ``H_Z = [B^T | A^T]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from . import gf2
from .gf2 import BinMatrix, BinVector


class Family(str, Enum):
    GB = "GB"
    BB = "BB"
    COPRIME_BB = "CoprimeBB"

    @classmethod
    def parse(cls, text: str) -> Family:
        key = text.strip().lower().replace("-", "").replace("_", "")
        for fam in cls:
            if fam.value.lower() == key:
                return fam
        raise ValueError(f"unknown code family {text!r}")


class CodeSpecError(ValueError):
    """Malformed or inconsistent code specification."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, order=True)
class PolyTerm:
    """Monomial ``x^x_exp * y^y_exp``, already reduced mod (l, m)."""

    x_exp: int
    y_exp: int

    def __str__(self) -> str:
        return f"x^{self.x_exp}*y^{self.y_exp}"


@dataclass(frozen=True)
class CodeSpec:
    family: Family
    l: int
    m: int
    a_terms: tuple[PolyTerm, ...]
    b_terms: tuple[PolyTerm, ...]
    name: str = ""

    def __post_init__(self):
        if self.l < 1 or self.m < 1:
            raise CodeSpecError("l and m must be positive")
        if self.family is Family.GB and self.m != 1:
            raise CodeSpecError("GB codes require m == 1")
        for label, terms in (("a", self.a_terms), ("b", self.b_terms)):
            if not terms:
                raise CodeSpecError(f"polynomial {label} has no terms")
            seen: set[PolyTerm] = set()
            for t in terms:
                if not (0 <= t.x_exp < self.l and 0 <= t.y_exp < self.m):
                    raise CodeSpecError(f"term {t} of {label} is not reduced mod ({self.l}, {self.m})")
                if t in seen:
                    raise CodeSpecError(f"duplicate monomial {t} in polynomial {label}")
                seen.add(t)

    @classmethod
    def from_exponents(
        cls,
        family: Family | str,
        l: int,
        m: int,
        a: list[tuple[int, int]] | list[int],
        b: list[tuple[int, int]] | list[int],
        name: str = "",
    ) -> CodeSpec:
        """Build a spec from raw exponents.

        For GB codes the exponents are plain integers (powers of ``x``); for
        coprime-BB codes they are powers of ``pi = xy``; for BB codes they are
        ``(x_exp, y_exp)`` pairs.
        """
        family = family if isinstance(family, Family) else Family.parse(family)
        return cls(family, l, m, _reduce_terms(family, l, m, a, "a"), _reduce_terms(family, l, m, b, "b"), name)

    def to_text(self) -> str:
        def fmt(terms):
            return ",".join(f"x^{t.x_exp}*y^{t.y_exp}" for t in terms)

        # pi exponents are not recoverable uniquely, so always emit x/y form
        fam = Family.BB if self.family is Family.COPRIME_BB else self.family
        return f"{fam.value} {self.l} {self.m} a:{fmt(self.a_terms)} b:{fmt(self.b_terms)}"


def _reduce_terms(family, l, m, raw, label) -> tuple[PolyTerm, ...]:
    out: list[PolyTerm] = []
    for item in raw:
        if family is Family.COPRIME_BB and isinstance(item, int):
            term = PolyTerm(item % l, item % m)
        elif isinstance(item, int):
            term = PolyTerm(item % l, 0)
        else:
            term = PolyTerm(item[0] % l, item[1] % m)
        if term in out:
            raise CodeSpecError(f"duplicate monomial {term} in polynomial {label} after reduction")
        out.append(term)
    return tuple(out)


_TERM_RE = re.compile(r"^(?:(?P<pi>pi)(?:\^(?P<pe>\d+))?|(?P<one>1)|(?P<xy>(?:[xy](?:\^\d+)?)(?:\*[xy](?:\^\d+)?)*))$")


def _parse_term(tok: str, l: int, m: int, line: int) -> PolyTerm:
    mt = _TERM_RE.match(tok)
    if not mt:
        raise CodeSpecError(f"malformed term {tok!r}", line)
    if mt.group("pi"):
        e = int(mt.group("pe") or 1)
        return PolyTerm(e % l, e % m)
    if mt.group("one"):
        return PolyTerm(0, 0)
    xe = ye = 0
    for factor in tok.split("*"):
        var, _, exp = factor.partition("^")
        e = int(exp) if exp else 1
        if var == "x":
            xe += e
        else:
            ye += e
    return PolyTerm(xe % l, ye % m)


def parse_code_spec(text: str, name: str = "") -> CodeSpec:
    """Parse ``family l m a:<terms> b:<terms>``.

    Terms are comma separated ``x^i*y^j``, ``pi^e`` or ``1``.  Blank lines and
    ``#`` comments are skipped; the first remaining line is the spec.
    """
    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip().lower()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 5:
            raise CodeSpecError("expected 'family l m a:<terms> b:<terms>'", lineno)
        try:
            family = Family.parse(parts[0])
        except ValueError as exc:
            raise CodeSpecError(str(exc), lineno) from None
        try:
            l, m = int(parts[1]), int(parts[2])
        except ValueError:
            raise CodeSpecError("l and m must be integers", lineno) from None
        if l < 1 or m < 1:
            raise CodeSpecError("l and m must be positive", lineno)
        polys = {}
        for chunk in parts[3:]:
            label, sep, terms = chunk.partition(":")
            if not sep or label not in ("a", "b") or label in polys:
                raise CodeSpecError(f"bad polynomial field {chunk!r}", lineno)
            tokens = [t for t in terms.split(",") if t]
            if not tokens:
                raise CodeSpecError(f"polynomial {label} has no terms", lineno)
            reduced = [_parse_term(t, l, m, lineno) for t in tokens]
            if len(set(reduced)) != len(reduced):
                dup = next(t for t in reduced if reduced.count(t) > 1)
                raise CodeSpecError(f"duplicate monomial {dup} in polynomial {label} after reduction", lineno)
            polys[label] = tuple(reduced)
        try:
            return CodeSpec(family, l, m, polys["a"], polys["b"], name)
        except CodeSpecError as exc:
            raise CodeSpecError(str(exc), lineno) from None
    raise CodeSpecError("empty code specification", max(lineno, 1))


def load_code_spec(path: str | Path) -> CodeSpec:
    path = Path(path)
    return parse_code_spec(path.read_text(), name=path.stem)


@dataclass(frozen=True, eq=False)
class CssCode:
    n: int
    k: int
    hx: BinMatrix
    hz: BinMatrix
    lx: BinMatrix
    lz: BinMatrix
    spec: CodeSpec | None = None
    name: str = ""
    rank_hx: int = field(default=0, repr=False)
    rank_hz: int = field(default=0, repr=False)

    def __str__(self) -> str:
        return f"[[{self.n},{self.k}]] {self.name}".strip()


def polynomial_matrix(terms, l: int, m: int) -> BinMatrix:
    """Sum of ``x^i y^j`` over the terms as an ``lm x lm`` matrix."""
    x = gf2.kron(gf2.shift_matrix(l), BinMatrix.identity(m))
    y = gf2.kron(BinMatrix.identity(l), gf2.shift_matrix(m))
    acc = BinMatrix.zeros(l * m, l * m)
    for t in terms:
        acc = acc + gf2.mul(gf2.matrix_power(x, t.x_exp), gf2.matrix_power(y, t.y_exp))
    return acc


def build_code(spec: CodeSpec) -> CssCode:
    a = polynomial_matrix(spec.a_terms, spec.l, spec.m)
    b = polynomial_matrix(spec.b_terms, spec.l, spec.m)
    hx = a.hstack(b)
    hz = b.T.hstack(a.T)
    return css_code_from_checks(hx, hz, spec=spec, name=spec.name)


def css_code_from_checks(hx: BinMatrix, hz: BinMatrix, spec: CodeSpec | None = None, name: str = "") -> CssCode:
    """Wrap a pair of commuting check matrices, computing logicals and k."""
    if hx.cols != hz.cols:
        raise gf2.DimensionError(f"H_X has {hx.cols} columns but H_Z has {hz.cols}")
    if not gf2.mul(hx, hz.T).is_zero():
        raise AssertionError("H_X H_Z^T != 0; checks do not commute")
    n = hx.cols
    rx, rz = gf2.rank(hx), gf2.rank(hz)
    lx, lz = compute_logicals(hx, hz)
    code = CssCode(n, n - rx - rz, hx, hz, lx, lz, spec, name, rx, rz)
    _check_invariants(code)
    return code


def _independent_mod(base: BinMatrix, candidates: BinMatrix) -> BinMatrix:
    """Rows spanning ``span(candidates)`` modulo ``rowspace(base)``."""
    reduced, pivots = gf2.row_reduce(base)
    basis = reduced.words[: len(pivots)]
    w = candidates.words.copy()
    for row, c in zip(basis, pivots):
        hit = ((w[:, c // gf2.WORD_BITS] >> np.uint64(c % gf2.WORD_BITS)) & np.uint64(1)).astype(bool)
        if hit.any():
            w[hit] ^= row
    residual, rpiv = gf2.row_reduce(BinMatrix(candidates.rows, candidates.cols, w))
    return BinMatrix(len(rpiv), candidates.cols, residual.words[: len(rpiv)].copy())


def compute_logicals(hx: BinMatrix, hz: BinMatrix) -> tuple[BinMatrix, BinMatrix]:
    """X and Z logical bases with ``lx @ lz.T = I``.

    ``lx`` spans ker(H_Z) / rowspace(H_X); ``lz`` spans ker(H_X) / rowspace(H_Z).
    The basis is fixed by pivot order, not canonical.
    """
    lx = _independent_mod(hx, gf2.kernel_basis(hz))
    lz = _independent_mod(hz, gf2.kernel_basis(hx))
    if lx.rows != lz.rows:
        raise AssertionError("X and Z logical counts differ")
    if lx.rows == 0:
        return lx, lz
    pairing = gf2.mul(lx, lz.T)
    lz = gf2.mul(gf2.inverse(pairing).T, lz)
    return lx, lz


def _check_invariants(code: CssCode) -> None:
    if code.lx.rows != code.k or code.lz.rows != code.k:
        raise AssertionError(f"expected {code.k} logicals, got {code.lx.rows}/{code.lz.rows}")
    if not gf2.mul(code.hz, code.lx.T).is_zero() or not gf2.mul(code.hx, code.lz.T).is_zero():
        raise AssertionError("logical operator fails a check")
    if code.k and gf2.rank(gf2.mul(code.lx, code.lz.T)) != code.k:
        raise AssertionError("logical pairing is degenerate")


def _min_weight_probe(gen: BinMatrix, detect: BinMatrix, trials: int, rng: np.random.Generator) -> int:
    """Lightest codeword of ``rowspace(gen)`` flipped by ``detect`` over random information sets."""
    best = gen.cols + 1
    dense = gen.to_dense()
    det = detect.to_dense()
    for _ in range(trials):
        perm = rng.permutation(gen.cols)
        reduced, pivots = gf2.row_reduce(BinMatrix.from_dense(dense[:, perm]))
        rows = reduced.to_dense()[: len(pivots)]
        if not len(rows):
            continue
        rows = rows[:, np.argsort(perm)]
        nontrivial = ((rows.astype(np.int64) @ det.T.astype(np.int64)) & 1).any(axis=1)
        weights = rows.sum(axis=1)
        if nontrivial.any():
            best = min(best, int(weights[nontrivial].min()))
    return best


def min_weight_logical_upper_bound(code: CssCode, budget: int, seed: int = 0) -> int:
    """Upper bound on the code distance.

    Starts from the lightest logical basis row and probes ``budget`` random
    information sets of ker(H_X) and ker(H_Z), keeping the lightest codeword
    that acts nontrivially on the logicals.
    """
    if code.k == 0:
        raise ValueError("code encodes no logical qubits")
    best = int(min(code.lx.row_weights().min(), code.lz.row_weights().min()))
    if budget <= 0:
        return best
    rng = np.random.default_rng(seed)
    z_side = _min_weight_probe(gf2.kernel_basis(code.hx), code.lx, budget, rng)
    x_side = _min_weight_probe(gf2.kernel_basis(code.hz), code.lz, budget, rng)
    return min(best, z_side, x_side)


# builtins ---------------------------------------------------------------

BUILTIN_SPECS: dict[str, CodeSpec] = {
    "bb72": CodeSpec.from_exponents("BB", 6, 6, [(3, 0), (0, 1), (0, 2)], [(0, 3), (1, 0), (2, 0)], "bb72"),
    "bb144": CodeSpec.from_exponents("BB", 12, 6, [(3, 0), (0, 1), (0, 2)], [(0, 3), (1, 0), (2, 0)], "bb144"),
    "bb288": CodeSpec.from_exponents("BB", 12, 12, [(3, 0), (0, 2), (0, 7)], [(0, 3), (1, 0), (2, 0)], "bb288"),
    "cbb126": CodeSpec.from_exponents("CoprimeBB", 7, 9, [0, 1, 58], [0, 13, 41], "cbb126"),
    "cbb154": CodeSpec.from_exponents("CoprimeBB", 7, 11, [0, 1, 31], [0, 19, 53], "cbb154"),
    "gb254": CodeSpec.from_exponents("GB", 127, 1, [0, 15, 20, 28, 66], [0, 58, 59, 100, 121], "gb254"),
}

_BUILT: dict[str, CssCode] = {}


def builtin_code(name: str) -> CssCode:
    key = name.lower()
    if key not in BUILTIN_SPECS:
        raise KeyError(f"unknown builtin code {name!r}; choose from {', '.join(BUILTIN_SPECS)}")
    if key not in _BUILT:
        _BUILT[key] = build_code(BUILTIN_SPECS[key])
    return _BUILT[key]


def fixture_path(name: str) -> Path:
    """Path of the shipped spec file for a builtin code."""
    return Path(str(resources.files("specbp") / "data" / "codes" / f"{name}.code"))


def sector_problem_matrices(code: CssCode, sector: str) -> tuple[BinMatrix, BinMatrix]:
    """Check and detecting-logical matrices for one error sector.

    ``sector='z'`` decodes Z errors with H_X and judges them with the X
    logicals; ``sector='x'`` is the mirror image.
    """
    sector = sector.lower()
    if sector == "z":
        return code.hx, code.lx
    if sector == "x":
        return code.hz, code.lz
    raise ValueError(f"sector must be 'x' or 'z', got {sector!r}")


def residual_is_logical(detect: BinMatrix, residual: BinVector) -> bool:
    return bool(gf2.mat_vec(detect, residual).words.any())
