"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line through the ``acceptance`` fixture; the
lines are repeated in the terminal summary.  Criterion 8 needs an external
circuit-level DEM for the [[144,12,12]] code: point ``SPECBP_DEM_144`` at a
``.dem`` or ``.json`` file sampled at p = 0.001 to enable it.
"""

import os
import subprocess
import sys
import time
from decimal import Decimal, getcontext

import numpy as np
import pytest

from specbp import bp, codes, dem, gf2, osd, sim, speculative
from specbp.bp import BpConfig, DecodingProblem
from specbp.gf2 import BinMatrix
from specbp.sim import DecoderConfig, NoiseSpec, Stop
from specbp.speculative import SpeculativeConfig

from conftest import HAMMING, all_vectors

TABLE = {
    "bb72": (72, 12),
    "bb144": (144, 12),
    "bb288": (288, 12),
    "cbb126": (126, 12),
    "cbb154": (154, 6),
    "gb254": (254, 28),
}


def test_01_code_construction(acceptance):
    start = time.perf_counter()
    got = {}
    css = {}
    for name, spec in codes.BUILTIN_SPECS.items():
        code = codes.build_code(spec)
        got[name] = (code.n, code.k)
        css[name] = gf2.mul(code.hx, code.hz.T).is_zero()
    elapsed = time.perf_counter() - start
    ok = got == TABLE and all(css.values()) and elapsed < 5
    acceptance(1, ok, f"(n,k) {got}; css all ok={all(css.values())}; {elapsed:.2f}s")
    assert ok


def test_02_weight_one_completeness(acceptance):
    start = time.perf_counter()
    misses = []
    total = 0
    for name in ("bb72", "cbb154"):
        code = codes.builtin_code(name)
        for sector in ("z", "x"):
            H, _ = codes.sector_problem_matrices(code, sector)
            prob = DecodingProblem(H, 0.01)
            for j in range(prob.n):
                e = np.zeros(prob.n, dtype=np.uint8)
                e[j] = 1
                s = prob.syndrome(e)
                out = bp.decode(prob, s, BpConfig(50))
                total += 1
                if not (out.converged and np.array_equal(prob.syndrome(out.e_hat), s)):
                    misses.append((name, sector, j))
    elapsed = time.perf_counter() - start
    ok = not misses and elapsed < 30
    acceptance(2, ok, f"{total - len(misses)}/{total} weight-1 errors converged; {elapsed:.2f}s")
    assert ok, misses[:10]


def _instance_pool():
    rng = np.random.default_rng(99)
    pool = []
    for name in ("bb72", "cbb126", "cbb154"):
        code = codes.builtin_code(name)
        pool += [code.hx, code.hz]
    h = BinMatrix.from_dense(HAMMING)
    pool.append(h)
    for _ in range(4):
        m, n = int(rng.integers(10, 30)), int(rng.integers(20, 60))
        pool.append(BinMatrix.from_dense((rng.random((m, n)) < 0.12).astype(np.uint8)))
    return pool


def test_03_flip_restore_soundness(acceptance):
    rng = np.random.default_rng(2024)
    pool = _instance_pool()
    instances = branch_successes = spec_successes = violations = 0
    while instances < 10_000:
        H = pool[int(rng.integers(len(pool)))]
        p = float(rng.uniform(0.01, 0.12))
        prob = DecodingProblem(H, p)
        e = (rng.random(prob.n) < p).astype(np.uint8)
        s = prob.syndrome(e)
        # an explicit branch: random phi, random t inside it
        phi = rng.choice(prob.n, size=int(rng.integers(1, min(12, prob.n) + 1)), replace=False)
        t_bits = rng.choice(phi, size=int(rng.integers(1, min(3, phi.size) + 1)), replace=False)
        out = bp.decode(prob, prob.flip_syndrome(s, t_bits), BpConfig(30), track_oscillations=False)
        if out.converged:
            branch_successes += 1
            restored = out.e_hat.copy()
            restored[t_bits] ^= 1
            violations += not np.array_equal(prob.syndrome(restored), s)
        # the full decoder on the same syndrome
        cfg = SpeculativeConfig(
            phi_size=int(rng.integers(1, min(8, prob.n) + 1)), w_max=1, bp=BpConfig(30), parallelism=int(rng.integers(1, 4))
        )
        res = speculative.decode(prob, s, cfg)
        if res.success:
            spec_successes += 1
            violations += not np.array_equal(prob.syndrome(res.e_hat), s)
        instances += 1
    ok = violations == 0
    acceptance(
        3, ok, f"{instances} instances, {branch_successes} branch and {spec_successes} decoder successes, {violations} violations"
    )
    assert ok


def test_04_degeneracy_invariance(acceptance):
    rng = np.random.default_rng(404)
    changed = 0
    instances = 0
    for name in ("bb72", "cbb154", "gb254"):
        code = codes.builtin_code(name)
        for sector, stab in (("z", code.hz.to_dense()), ("x", code.hx.to_dense())):
            H, _ = codes.sector_problem_matrices(code, sector)
            prob = DecodingProblem(H, 0.05)
            for _ in range(167):
                e = (rng.random(code.n) < 0.05).astype(np.uint8)
                s = prob.syndrome(e)
                out = bp.decode(prob, s)
                if not out.converged:
                    # any syndrome-consistent estimate works for this check
                    out_e = osd.osd_decode(prob, s, out.llr_out, osd.OsdConfig(0, osd.OSD0))
                else:
                    out_e = out.e_hat
                rows = rng.integers(0, stab.shape[0], 100)
                shifted = out_e ^ (stab[rows].sum(axis=0) % 2).astype(np.uint8)
                before = sim.is_logical_failure(code, e, out_e, sector=sector)
                after = sim.is_logical_failure(code, e, shifted, sector=sector)
                changed += before != after
                instances += 1
    ok = instances >= 1000 and changed == 0
    acceptance(4, ok, f"{instances} instances, {changed} verdicts changed by stabilizer shifts")
    assert ok


def test_05_oracle_equivalence(acceptance, steane):
    start = time.perf_counter()
    prob = DecodingProblem(steane.hx, 0.05)
    p = 0.05
    vs = all_vectors(7)
    weights = vs.sum(axis=1)
    probs = p**weights * (1 - p) ** (7 - weights)
    synd = (vs.astype(np.int64) @ HAMMING.T.astype(np.int64)) % 2
    detect = steane.lx.to_dense()
    classes = ((vs.astype(np.int64) @ detect.T.astype(np.int64)) % 2)[:, 0]

    # speculative decoding against maximum-likelihood logical classes
    cfg = SpeculativeConfig(phi_size=7, w_max=7, bp=BpConfig(50))
    agree = disagree = nonconverged = 0
    wrong = []
    for e in vs[weights <= 3]:
        s = prob.syndrome(e)
        res = speculative.decode(prob, s, cfg)
        if not res.success:
            nonconverged += 1
            continue
        match = (synd == s).all(axis=1)
        mld = int(probs[match & (classes == 1)].sum() > probs[match & (classes == 0)].sum())
        got = int((detect.astype(np.int64) @ res.e_hat)[0] % 2)
        if got == mld:
            agree += 1
        else:
            disagree += 1
            wrong.append((np.flatnonzero(e).tolist(), res.method, np.flatnonzero(res.e_hat).tolist()))

    # OSD-CS with exact posteriors against the brute-force minimum
    osd_mismatch = 0
    for code_s in range(8):
        s = np.array([(code_s >> i) & 1 for i in range(3)], dtype=np.uint8)
        match = (synd == s).all(axis=1)
        w = probs[match]
        p1 = (w[:, None] * vs[match]).sum(axis=0)
        p0 = (w[:, None] * (1 - vs[match])).sum(axis=0)
        llr = np.log(p0) - np.log(p1)
        got = osd.osd_decode(prob, s, llr, osd.OsdConfig(7))
        best = min(osd.soft_weight(prob, c) for c in vs[match])
        osd_mismatch += abs(osd.soft_weight(prob, got) - best) > 1e-12

    elapsed = time.perf_counter() - start
    ok = disagree == 0 and osd_mismatch == 0 and elapsed < 60
    detail = (
        f"speculative vs MLD: {agree} agree, {disagree} disagree, {nonconverged} unconverged; "
        f"OSD-CS mismatches {osd_mismatch}/8; {elapsed:.2f}s"
    )
    if wrong:
        detail += f"; first disagreement error={wrong[0][0]} via {wrong[0][1]} -> {wrong[0][2]}"
    acceptance(5, ok, detail)
    assert ok, wrong


def test_06_speculative_beats_bp(acceptance, cbb154):
    spec_cfg = DecoderConfig("spec", spec=SpeculativeConfig(phi_size=8, w_max=1, bp=BpConfig(50)))
    bp_cfg = DecoderConfig("bp", BpConfig(50))
    rows = []
    for p in (0.02, 0.03, 0.05):
        noise = NoiseSpec(sim.CAPACITY, p)
        a = sim.run_sim(cbb154, bp_cfg, noise, Stop(shots=10_000), seed=7, threads=4)
        b = sim.run_sim(cbb154, spec_cfg, noise, Stop(shots=10_000), seed=7, threads=4)
        rows.append((p, a.ler, b.ler))
    below = all(spec < base for _, base, spec in rows)
    gap = rows[0][1] / rows[0][2] if rows[0][2] > 0 else float("inf")
    ok = below and gap > 2
    table = ", ".join(f"p={p}: BP {base:.4f} vs spec {spec:.4f}" for p, base, spec in rows)
    acceptance(6, ok, f"{table}; gap at p=0.02 {gap:.1f}x")
    assert ok


def test_07_oscillation_informativeness(acceptance, cbb154):
    stats = pytest.importorskip("scipy.stats")
    p, phi_size, target = 0.02, 8, 1000
    sectors = [DecodingProblem(codes.sector_problem_matrices(cbb154, s)[0], p) for s in ("z", "x")]
    hits = failures = shot = 0
    precisions = []
    while failures < target:
        rng = sim.shot_rng(77, shot)
        shot += 1
        for prob in sectors:
            e = (rng.random(prob.n) < p).astype(np.uint8)
            out = bp.decode(prob, prob.syndrome(e), BpConfig(50))
            if out.converged or failures == target:
                continue
            phi, _ = speculative.select_candidates(out.flip_counts, phi_size)
            prec, _ = speculative.precision_recall(phi, e)
            precisions.append(prec)
            hits += int(round(prec * phi_size))
            failures += 1
    mean = float(np.mean(precisions))
    test = stats.binomtest(hits, failures * phi_size, p, alternative="greater")
    ok = mean > p and test.pvalue < 0.01
    acceptance(7, ok, f"{failures} BP failures over {shot} shots; mean precision {mean:.3f} vs p={p}; one-sided p-value {test.pvalue:.2e}")
    assert ok


DEM_144 = os.environ.get("SPECBP_DEM_144")


@pytest.mark.skipif(not DEM_144, reason="set SPECBP_DEM_144 to a [[144,12,12]] circuit-level DEM at p=0.001")
def test_08_iteration_statistics(acceptance):
    model = dem.load_model(DEM_144)
    bp_cfg = DecoderConfig("bp", BpConfig(100))
    spec_cfg = DecoderConfig("spec", spec=SpeculativeConfig(phi_size=50, w_max=6, n_s=10, bp=BpConfig(100)))
    threads = os.cpu_count() or 1
    base = sim.run_sim(model, bp_cfg, NoiseSpec(sim.DEM), Stop(shots=10_000), seed=8, threads=threads)
    spec = sim.run_sim(model, spec_cfg, NoiseSpec(sim.DEM), Stop(shots=10_000), seed=8, threads=threads)
    in_band = 7.9 <= base.mean_iterations <= 9.9
    direction = spec.ler <= base.ler
    ok = in_band and direction
    acceptance(
        8, ok, f"mean BP iterations {base.mean_iterations:.2f} (band [7.9, 9.9]); LER BP {base.ler:.4g} vs spec {spec.ler:.4g}"
    )
    assert ok


def test_08_direction_on_generated_dem():
    # the supplementary direction property on a circuit-level model we can build locally
    stim = pytest.importorskip("stim")
    circuit = stim.Circuit.generated(
        "surface_code:rotated_memory_x", distance=5, rounds=5, after_clifford_depolarization=0.006,
        before_measure_flip_probability=0.006, after_reset_flip_probability=0.006,
    )
    model = dem.parse_dem(str(circuit.detector_error_model(decompose_errors=False)), merge=True)
    spec_cfg = DecoderConfig("spec", spec=SpeculativeConfig(phi_size=8, w_max=1, bp=BpConfig(50)))
    base = sim.run_sim(model, DecoderConfig("bp", BpConfig(50)), NoiseSpec(sim.DEM), Stop(shots=2000), seed=8, threads=4)
    spec = sim.run_sim(model, spec_cfg, NoiseSpec(sim.DEM), Stop(shots=2000), seed=8, threads=4)
    assert base.logical_errors > 0
    assert spec.ler <= base.ler


def test_08_skip_notice(acceptance):
    if DEM_144:
        pytest.skip("DEM supplied; the real check runs")
    acceptance(8, True, "SKIPPED (optional input): no [[144,12,12]] DEM supplied via SPECBP_DEM_144")


def _simulate(tmp_path, tag, *argv):
    prefix = tmp_path / tag
    subprocess.run([sys.executable, "-m", "specbp", "simulate", *argv, "--out", str(prefix)], check=True, capture_output=True)
    return (tmp_path / f"{tag}.csv").read_bytes()


def test_09_determinism(acceptance, tmp_path):
    toy = tmp_path / "toy.dem"
    toy.write_text(
        "repeat 4 {\n error(0.03) D0 D2\n error(0.03) D1 D3\n error(0.03) D0 L0\n error(0.01) D0 D1\n shift_detectors 2\n}\n"
    )
    runs = {
        "bp": ["--builtin", "bb72", "--noise", "capacity:0.03,0.05", "--stop", "shots:1200", "--seed", "21"],
        "spec": ["--builtin", "cbb154", "--noise", "capacity:0.04", "--decoder", "spec", "--stop", "errors:30", "--seed", "22"],
        "sampled": [
            "--builtin", "bb72", "--noise", "capacity:0.05", "--decoder", "spec", "--phi", "12", "--wmax", "3",
            "--ns", "4", "--stop", "shots:800", "--seed", "23",
        ],
        "bposd": ["--builtin", "bb72", "--noise", "capacity:0.06", "--decoder", "bposd", "--stop", "shots:600", "--seed", "24"],
        "dem": ["--dem", str(toy), "--rounds", "4", "--stop", "shots:3000", "--seed", "25"],
    }
    identical = {}
    for tag, argv in runs.items():
        outputs = {_simulate(tmp_path, f"{tag}_t{t}", *argv, "--threads", str(t)) for t in (1, 2, 5)}
        identical[tag] = len(outputs) == 1
    ok = all(identical.values())
    acceptance(9, ok, f"byte-identical CSV across threads 1/2/5: {identical}")
    assert ok


def test_10_ler_per_round(acceptance):
    checks = []
    for d in (1, 2, 12, 100):
        checks.append(sim.ler_per_round(0.0, d) == 0.0)
    for ler in (1e-9, 0.01, 0.1, 0.5, 0.99):
        checks.append(sim.ler_per_round(ler, 1) == ler)
    # 50-digit reference; the float expression itself loses digits for small ler
    getcontext().prec = 50
    for ler, d in [(0.1, 12), (0.02, 3), (1e-6, 10), (1e-12, 4), (0.5, 2), (0.999, 7)]:
        want = 1 - (1 - Decimal(ler)) ** (Decimal(1) / Decimal(d))
        got = Decimal(sim.ler_per_round(ler, d))
        checks.append(abs(got - want) <= Decimal("1e-12") * want)
    checks.append(abs(sim.ler_per_round(0.1, 12) - 0.008741610954696721) <= 1e-12 * 0.0087416)
    ok = all(checks)
    acceptance(10, ok, f"{sum(checks)}/{len(checks)} formula checks within 1e-12 relative")
    assert ok
