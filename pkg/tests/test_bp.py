import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specbp import bp
from specbp.bp import BpConfig, DecodingProblem
from specbp.gf2 import BinMatrix, DimensionError

BACKENDS = sorted(bp.KERNELS)


def random_ldpc(rng, m, n, col_weight=3):
    dense = np.zeros((m, n), dtype=np.uint8)
    for j in range(n):
        dense[rng.choice(m, size=min(col_weight, m), replace=False), j] = 1
    return dense


class TestDamping:
    def test_values(self):
        assert bp.damping_factor(1) == 0.5
        assert bp.damping_factor(3) == 0.875
        assert bp.damping_factor(52) < 1.0
        seq = [bp.damping_factor(i) for i in range(1, 20)]
        assert seq == sorted(seq)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            bp.damping_factor(0)

    @pytest.mark.parametrize(
        "kwargs",
        [dict(max_iters=0), dict(damping="nope"), dict(damping="fixed", alpha=0.0), dict(damping="fixed", alpha=1.5), dict(llr_clamp=0)],
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            BpConfig(**kwargs)


class TestProblem:
    def test_priors_domain(self):
        h = BinMatrix.identity(2)
        with pytest.raises(ValueError):
            DecodingProblem(h, 0.0)
        with pytest.raises(ValueError):
            DecodingProblem(h, [0.1, 0.6])
        assert DecodingProblem(h, 0.5).channel_llr.tolist() == [0.0, 0.0]

    def test_syndrome_and_flip(self):
        dense = np.array([[1, 1, 0], [0, 1, 1], [0, 0, 0]], dtype=np.uint8)
        prob = DecodingProblem(BinMatrix.from_dense(dense), 0.1)
        assert prob.syndrome(np.array([0, 1, 0])).tolist() == [1, 1, 0]
        assert prob.flip_syndrome(np.array([1, 1, 0]), [2]).tolist() == [1, 0, 0]
        with pytest.raises(DimensionError):
            prob.syndrome(np.zeros(4))

    def test_wrong_syndrome_length(self, bb72):
        prob = DecodingProblem(bb72.hx, 0.01)
        with pytest.raises(DimensionError):
            bp.decode(prob, np.zeros(5, dtype=np.uint8))


@pytest.mark.parametrize("backend", BACKENDS)
class TestDecode:
    def test_zero_syndrome(self, bb72, backend):
        prob = DecodingProblem(bb72.hx, 0.01)
        out = bp.decode(prob, np.zeros(prob.m, dtype=np.uint8), backend=backend)
        assert out.converged and out.iterations == 1
        assert not out.e_hat.any()
        assert not out.flip_counts.any()

    def test_single_bit(self, backend):
        prob = DecodingProblem(BinMatrix.from_dense([[1]]), 0.1)
        out = bp.decode(prob, np.array([1], dtype=np.uint8), backend=backend)
        assert out.converged and out.iterations == 1
        assert out.e_hat.tolist() == [1]
        # flip counts start from the all-zero estimate
        assert out.flip_counts.tolist() == [1]

    def test_tie_decodes_to_one(self, backend):
        # prior 0.5 makes the channel LLR zero; with s=0 the marginal stays 0
        prob = DecodingProblem(BinMatrix.from_dense([[1, 1]]), 0.5)
        out = bp.decode(prob, np.zeros(1, dtype=np.uint8), BpConfig(max_iters=1), backend=backend)
        assert out.e_hat.tolist() == [1, 1]
        assert out.converged

    def test_weight_one_bb72(self, bb72, backend):
        prob = DecodingProblem(bb72.hx, 0.01)
        for j in range(prob.n):
            e = np.zeros(prob.n, dtype=np.uint8)
            e[j] = 1
            s = prob.syndrome(e)
            out = bp.decode(prob, s, backend=backend)
            assert out.converged, j
            assert np.array_equal(prob.syndrome(out.e_hat), s)

    def test_iteration_cap(self, backend):
        rng = np.random.default_rng(8)
        prob = DecodingProblem(BinMatrix.from_dense(random_ldpc(rng, 12, 20)), 0.2)
        for _ in range(20):
            s = rng.integers(0, 2, prob.m, dtype=np.uint8)
            out = bp.decode(prob, s, BpConfig(max_iters=7), backend=backend)
            assert 1 <= out.iterations <= 7
            assert out.converged == np.array_equal(prob.syndrome(out.e_hat), s)
            assert (np.abs(out.llr_out) <= 64).all()
            assert (out.flip_counts <= out.iterations).all()

    def test_deterministic(self, cbb154, backend):
        rng = np.random.default_rng(2)
        prob = DecodingProblem(cbb154.hx, 0.05)
        s = prob.syndrome((rng.random(prob.n) < 0.05).astype(np.uint8))
        a = bp.decode(prob, s, backend=backend)
        b = bp.decode(prob, s.copy(), backend=backend)
        assert a.converged == b.converged and a.iterations == b.iterations
        assert np.array_equal(a.e_hat, b.e_hat)
        assert np.array_equal(a.llr_out, b.llr_out)
        assert np.array_equal(a.flip_counts, b.flip_counts)

    def test_column_permutation_symmetry(self, bb72, backend):
        rng = np.random.default_rng(4)
        dense = bb72.hx.to_dense()
        perm = rng.permutation(dense.shape[1])
        priors = rng.uniform(0.01, 0.1, dense.shape[1])
        base = DecodingProblem(bb72.hx, priors)
        permuted = DecodingProblem(BinMatrix.from_dense(dense[:, perm]), priors[perm])
        for _ in range(30):
            e = (rng.random(dense.shape[1]) < 0.06).astype(np.uint8)
            s = base.syndrome(e)
            a = bp.decode(base, s, backend=backend)
            b = bp.decode(permuted, s, backend=backend)
            assert a.converged == b.converged and a.iterations == b.iterations
            assert np.array_equal(a.e_hat[perm], b.e_hat)
            assert np.array_equal(a.llr_out[perm], b.llr_out)
            assert np.array_equal(a.flip_counts[perm], b.flip_counts)


@pytest.mark.skipif("cython" not in bp.KERNELS, reason="compiled kernel not built")
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["adaptive", "fixed"]))
def test_backends_agree(seed, damping):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 15)), int(rng.integers(1, 30))
    dense = rng.integers(0, 2, (m, n), dtype=np.uint8) * (rng.random((m, n)) < 0.4)
    priors = rng.uniform(0.001, 0.5, n)
    prob = DecodingProblem(BinMatrix.from_dense(dense.astype(np.uint8), n), priors)
    s = rng.integers(0, 2, m, dtype=np.uint8)
    cfg = BpConfig(max_iters=int(rng.integers(1, 30)), damping=damping, alpha=float(rng.uniform(0.3, 1.0)))
    a = bp.decode(prob, s, cfg, backend="python")
    b = bp.decode(prob, s, cfg, backend="cython")
    assert (a.converged, a.iterations) == (b.converged, b.iterations)
    assert np.array_equal(a.e_hat, b.e_hat)
    assert np.array_equal(a.flip_counts, b.flip_counts)
    assert np.array_equal(a.llr_out, b.llr_out)


@pytest.mark.skipif("cython" not in bp.KERNELS, reason="compiled kernel not built")
def test_backends_agree_on_code(cbb154):
    rng = np.random.default_rng(0)
    prob = DecodingProblem(cbb154.hz, 0.05)
    for _ in range(100):
        s = prob.syndrome((rng.random(prob.n) < 0.05).astype(np.uint8))
        a = bp.decode(prob, s, backend="python")
        b = bp.decode(prob, s, backend="cython")
        assert (a.converged, a.iterations) == (b.converged, b.iterations)
        assert np.array_equal(a.e_hat, b.e_hat) and np.array_equal(a.flip_counts, b.flip_counts)


def test_pure_python_switch():
    env = dict(os.environ, SPECBP_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import specbp.bp as b; print(b.BACKEND, sorted(b.KERNELS))"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split()[0] == "python"
