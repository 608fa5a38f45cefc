import itertools

import numpy as np
import pytest

from specbp import codes
from specbp.gf2 import BinMatrix

HAMMING = np.array(
    [
        [1, 0, 1, 0, 1, 0, 1],
        [0, 1, 1, 0, 0, 1, 1],
        [0, 0, 0, 1, 1, 1, 1],
    ],
    dtype=np.uint8,
)


def dense_rank(a: np.ndarray) -> int:
    """Plain int elimination, deliberately independent of the packed code."""
    a = (np.array(a, dtype=np.int64) % 2).copy()
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        hit = [i for i in range(r, rows) if a[i, c]]
        if not hit:
            continue
        a[[r, hit[0]]] = a[[hit[0], r]]
        for i in range(rows):
            if i != r and a[i, c]:
                a[i] = (a[i] + a[r]) % 2
        r += 1
        if r == rows:
            break
    return r


def all_vectors(n: int) -> np.ndarray:
    return np.array(list(itertools.product([0, 1], repeat=n)), dtype=np.uint8)


@pytest.fixture(scope="session")
def steane():
    h = BinMatrix.from_dense(HAMMING)
    return codes.css_code_from_checks(h, h, name="steane")


@pytest.fixture(scope="session")
def bb72():
    return codes.builtin_code("bb72")


@pytest.fixture(scope="session")
def cbb154():
    return codes.builtin_code("cbb154")


# acceptance reporting ------------------------------------------------------

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    def record(number: int, passed: bool, detail: str) -> bool:
        _ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(_ACCEPTANCE[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])
