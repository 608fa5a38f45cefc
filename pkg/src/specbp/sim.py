"""Monte Carlo estimation of logical error rates.

Every shot draws from its own counter-based Philox stream keyed by the master
seed, so the set of sampled errors does not depend on how shots are spread
over worker threads.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import bp, osd, speculative
from .bp import BpConfig, DecodingProblem
from .codes import CssCode, residual_is_logical, sector_problem_matrices
from .dem import DetectorModel
from .gf2 import BinVector, mat_vec

CAPACITY = "capacity"
DEPOLARIZING = "depolarizing"
DEM = "dem"

CSV_VERSION = "specbp-sim-csv v1"
CSV_COLUMNS = ("p", "shots", "errors", "ler", "ler_per_round", "mean_iters")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = CAPACITY
    p: float | None = None

    def __post_init__(self):
        if self.kind not in (CAPACITY, DEPOLARIZING, DEM):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind != DEM and (self.p is None or not 0 < self.p < 0.5):
            raise ValueError("code-capacity noise needs p in (0, 0.5)")


@dataclass(frozen=True)
class DecoderConfig:
    """Which decoder a simulation runs.

    ``phi_size`` sets the candidate-set size used for precision/recall
    statistics on initial BP failures; for the speculative decoder it follows
    ``spec.phi_size`` when left unset.
    """

    kind: str = "bp"
    bp: BpConfig = field(default_factory=BpConfig)
    spec: speculative.SpeculativeConfig | None = None
    osd: osd.OsdConfig | None = None
    phi_size: int | None = None

    def __post_init__(self):
        if self.kind not in ("bp", "spec", "bposd"):
            raise ValueError(f"unknown decoder {self.kind!r}")
        if self.kind == "spec" and self.spec is None:
            object.__setattr__(self, "spec", speculative.SpeculativeConfig(bp=self.bp))
        if self.kind == "spec" and self.spec.bp != self.bp:
            object.__setattr__(self, "bp", self.spec.bp)
        if self.kind == "bposd" and self.osd is None:
            object.__setattr__(self, "osd", osd.OsdConfig())

    @property
    def stats_phi(self) -> int:
        if self.phi_size is not None:
            return self.phi_size
        return self.spec.phi_size if self.spec is not None else 8

    def label(self) -> str:
        if self.kind == "bp":
            return f"BP{self.bp.max_iters}"
        if self.kind == "bposd":
            tag = "OSD0" if self.osd.variant == osd.OSD0 else f"OSD{self.osd.order}"
            return f"BP{self.bp.max_iters}-{tag}"
        s = self.spec
        mode = "exh" if s.exhaustive else f"ns{s.n_s}"
        return f"SPEC-BP{s.bp.max_iters}-phi{s.phi_size}-w{s.w_max}-{mode}"


@dataclass
class DecodeResult:
    e_hat: np.ndarray
    converged: bool
    iterations: int
    initial_iterations: int
    initial_converged: bool
    method: str
    phi: list[int]


def run_decoder(dcfg: DecoderConfig, problem: DecodingProblem, s: np.ndarray, rng: np.random.Generator) -> DecodeResult:
    if dcfg.kind == "spec":
        res = speculative.decode(problem, s, dcfg.spec, rng)
        phi = res.phi
        if not res.initial.converged and len(phi) != min(dcfg.stats_phi, problem.n):
            phi, _ = speculative.select_candidates(res.initial.flip_counts, min(dcfg.stats_phi, problem.n))
        return DecodeResult(
            res.e_hat, res.success, res.serial_iterations, res.initial.iterations, res.initial.converged, res.method, phi
        )
    out = bp.decode(problem, s, dcfg.bp, track_oscillations=True)
    phi: list[int] = []
    if not out.converged:
        phi, _ = speculative.select_candidates(out.flip_counts, min(dcfg.stats_phi, problem.n))
    if dcfg.kind == "bposd" and not out.converged:
        e_hat = osd.osd_decode(problem, s, out.llr_out, dcfg.osd)
        return DecodeResult(e_hat, True, out.iterations, out.iterations, False, "Osd", phi)
    method = "InitialBp" if out.converged else "Failure"
    return DecodeResult(out.e_hat, out.converged, out.iterations, out.iterations, out.converged, method, phi)


# experiment contexts ------------------------------------------------------


class CodeCapacityContext:
    """Both error sectors of a CSS code under code-capacity noise."""

    def __init__(self, code: CssCode, noise: NoiseSpec):
        if noise.kind not in (CAPACITY, DEPOLARIZING):
            raise ValueError("code-capacity context needs capacity noise")
        self.code = code
        self.noise = noise
        prior = noise.p if noise.kind == CAPACITY else 2 * noise.p / 3
        self.sectors = []
        for name in ("z", "x"):
            H, detect = sector_problem_matrices(code, name)
            self.sectors.append((name, DecodingProblem(H, prior), detect.to_dense()))

    def sample(self, rng: np.random.Generator) -> list[np.ndarray]:
        """Errors for the z and x sectors, in that order."""
        n, p = self.code.n, self.noise.p
        if self.noise.kind == CAPACITY:
            ez = (rng.random(n) < p).astype(np.uint8)
            ex = (rng.random(n) < p).astype(np.uint8)
        else:
            u = rng.random(n)
            ex = (u < 2 * p / 3).astype(np.uint8)
            ez = ((u >= p / 3) & (u < p)).astype(np.uint8)
        return [ez, ex]


class DemContext:
    def __init__(self, model: DetectorModel):
        self.model = model

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return (rng.random(self.model.num_mechanisms) < self.model.priors).astype(np.uint8)


def sample_error(noise: NoiseSpec, context, rng: np.random.Generator):
    """Draw one error: a ``[z, x]`` pair for codes, a mechanism vector for DEMs."""
    if isinstance(context, CssCode):
        context = CodeCapacityContext(context, noise)
    elif isinstance(context, DetectorModel):
        context = DemContext(context)
    return context.sample(rng)


def is_logical_failure(
    target: CssCode | DetectorModel,
    e: np.ndarray,
    e_hat: np.ndarray,
    converged: bool = True,
    sector: str = "z",
) -> bool:
    """Whether decoding ``e`` to ``e_hat`` corrupts logical information.

    For a code the residual ``e + e_hat`` fails iff it anticommutes with a
    logical of the opposite type; for a DEM iff the predicted observable flips
    differ.  A non-converged decode always counts as a failure.
    """
    if not converged:
        return True
    e = np.asarray(e, dtype=np.uint8)
    e_hat = np.asarray(e_hat, dtype=np.uint8)
    if isinstance(target, DetectorModel):
        if not np.array_equal(target.syndrome(e), target.syndrome(e_hat)):
            raise AssertionError("converged estimate does not reproduce the syndrome")
        return not np.array_equal(target.observable_flips(e), target.observable_flips(e_hat))
    H, detect = sector_problem_matrices(target, sector)
    residual = BinVector.from_bits(e ^ e_hat)
    if mat_vec(H, residual).words.any():
        raise AssertionError("converged estimate does not reproduce the syndrome")
    return residual_is_logical(detect, residual)


def ler_per_round(ler: float, d: int) -> float:
    """``1 - (1 - ler) ** (1 / d)``."""
    if not 0 <= ler < 1:
        raise ValueError("ler must lie in [0, 1)")
    if d < 1:
        raise ValueError("d must be at least 1")
    if d == 1:
        return float(ler)
    return float(-math.expm1(math.log1p(-ler) / d))


# shots ------------------------------------------------------------------


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    """Independent stream for one shot: Philox keyed by the seed, counter offset by the shot."""
    key = seed & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, shot, 0]))


@dataclass
class DecodeStat:
    iterations: int
    initial_iterations: int
    initial_converged: bool
    precision: float | None = None
    recall: float | None = None


@dataclass
class ShotRecord:
    failure: bool
    nonconverged: bool
    decodes: list[DecodeStat]


def _syndrome_checked(problem: DecodingProblem, res: DecodeResult, s: np.ndarray) -> None:
    if res.converged and not np.array_equal(problem.syndrome(res.e_hat), s):
        raise AssertionError(f"decoder {res.method} reported convergence with a wrong syndrome")


def run_shot(context, dcfg: DecoderConfig, seed: int, shot: int) -> ShotRecord:
    rng = shot_rng(seed, shot)
    stats: list[DecodeStat] = []
    failure = nonconverged = False
    if isinstance(context, CodeCapacityContext):
        errors = context.sample(rng)
        for (name, problem, detect), e in zip(context.sectors, errors):
            s = problem.syndrome(e)
            res = run_decoder(dcfg, problem, s, rng)
            _syndrome_checked(problem, res, s)
            stats.append(_stat(res, e))
            if not res.converged:
                nonconverged = failure = True
            elif ((detect.astype(np.int64) @ (e ^ res.e_hat)) & 1).any():
                failure = True
    else:
        model = context.model
        e = context.sample(rng)
        problem = model.problem
        s = problem.syndrome(e)
        res = run_decoder(dcfg, problem, s, rng)
        _syndrome_checked(problem, res, s)
        stats.append(_stat(res, e))
        if not res.converged:
            nonconverged = failure = True
        else:
            failure = not np.array_equal(model.observable_flips(e), model.observable_flips(res.e_hat))
    return ShotRecord(failure, nonconverged, stats)


def _stat(res: DecodeResult, e: np.ndarray) -> DecodeStat:
    stat = DecodeStat(res.iterations, res.initial_iterations, res.initial_converged)
    if not res.initial_converged and res.phi:
        stat.precision, stat.recall = speculative.precision_recall(res.phi, e)
    return stat


# reports ----------------------------------------------------------------


@dataclass(frozen=True)
class Stop:
    """Stop after ``shots`` shots, or once ``errors`` logical errors are seen."""

    shots: int | None = None
    errors: int | None = None
    max_shots: int = 10_000_000

    def __post_init__(self):
        if (self.shots is None) == (self.errors is None):
            raise ValueError("give exactly one of shots or errors")

    @property
    def limit(self) -> int:
        return self.shots if self.shots is not None else self.max_shots


@dataclass
class SimReport:
    shots: int
    logical_errors: int
    nonconverged: int
    ler: float
    ler_per_round: float | None
    d_rounds: int | None
    mean_iterations: float
    decodes: int
    iteration_histogram: list[int]
    nonconvergence_curve: list[float]
    bp_failures: int
    precision_mean: float | None
    recall_mean: float | None
    seed: int
    p: float | None = None
    decoder: str = ""
    noise: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


class _Accumulator:
    def __init__(self, max_iters: int):
        self.max_iters = max_iters
        self.shots = self.errors = self.nonconverged = 0
        self.iter_sum = 0
        self.decodes = 0
        self.hist = [0] * (max_iters + 2)
        self.prec: list[float] = []
        self.rec: list[float] = []

    def add(self, rec: ShotRecord) -> None:
        self.shots += 1
        self.errors += rec.failure
        self.nonconverged += rec.nonconverged
        for d in rec.decodes:
            self.decodes += 1
            self.iter_sum += d.iterations
            self.hist[d.initial_iterations if d.initial_converged else self.max_iters + 1] += 1
            if d.precision is not None:
                self.prec.append(d.precision)
                self.rec.append(d.recall)

    def report(self, seed: int, rounds: int | None, p, decoder: str, noise: str) -> SimReport:
        ler = self.errors / self.shots if self.shots else 0.0
        converged_by = np.cumsum(self.hist[1 : self.max_iters + 1])
        curve = [float(1 - c / self.decodes) if self.decodes else 0.0 for c in converged_by]
        return SimReport(
            shots=self.shots,
            logical_errors=self.errors,
            nonconverged=self.nonconverged,
            ler=ler,
            ler_per_round=ler_per_round(ler, rounds) if rounds and ler < 1 else None,
            d_rounds=rounds,
            mean_iterations=self.iter_sum / self.decodes if self.decodes else 0.0,
            decodes=self.decodes,
            iteration_histogram=list(self.hist),
            nonconvergence_curve=curve,
            bp_failures=len(self.prec),
            precision_mean=float(math.fsum(self.prec) / len(self.prec)) if self.prec else None,
            recall_mean=float(math.fsum(self.rec) / len(self.rec)) if self.rec else None,
            seed=seed,
            p=p,
            decoder=decoder,
            noise=noise,
        )


def iter_shots(context, dcfg: DecoderConfig, seed: int, limit: int, threads: int = 1, chunk: int = 512) -> Iterable[ShotRecord]:
    """Shot records in shot order; work is farmed out in fixed-size chunks."""
    if threads <= 1:
        for shot in range(limit):
            yield run_shot(context, dcfg, seed, shot)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for start in range(0, limit, chunk):
            shots = range(start, min(start + chunk, limit))
            yield from pool.map(lambda k: run_shot(context, dcfg, seed, k), shots)


def run_sim(
    target: CssCode | DetectorModel,
    dcfg: DecoderConfig,
    noise: NoiseSpec,
    stop: Stop,
    seed: int,
    threads: int = 1,
    rounds: int | None = None,
) -> SimReport:
    """Sample, decode and judge shots until ``stop`` is met.

    Code-capacity shots decode both sectors and count a logical error when
    either sector fails or does not converge.
    """
    if isinstance(target, CssCode):
        context = CodeCapacityContext(target, noise)
    else:
        context = DemContext(target)
        rounds = rounds if rounds is not None else target.rounds
    acc = _Accumulator(dcfg.bp.max_iters)
    for rec in iter_shots(context, dcfg, seed, stop.limit, threads):
        acc.add(rec)
        if stop.errors is not None and acc.errors >= stop.errors:
            break
    noise_label = noise.kind if noise.p is None else f"{noise.kind}:{noise.p!r}"
    return acc.report(seed, rounds, noise.p, dcfg.label(), noise_label)


def complexity_curve(
    target: CssCode | DetectorModel,
    configs: Sequence[DecoderConfig],
    noise: NoiseSpec,
    seed: int,
    threshold: float = 1e-3,
    shots_high: int = 10_000,
    shots_low: int = 100_000,
    threads: int = 1,
) -> list[tuple[float, float]]:
    """(mean serial iterations, LER) per decoder configuration.

    Each point first runs ``shots_high`` shots; when the resulting LER is
    below ``threshold`` it is rerun with ``shots_low`` shots.
    """
    points = []
    for cfg in configs:
        rep = run_sim(target, cfg, noise, Stop(shots=shots_high), seed, threads)
        if rep.ler < threshold and shots_low > shots_high:
            rep = run_sim(target, cfg, noise, Stop(shots=shots_low), seed, threads)
        points.append((rep.mean_iterations, rep.ler))
    return points


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def reports_to_csv(reports: Sequence[SimReport]) -> str:
    buf = io.StringIO()
    buf.write(f"# {CSV_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow([_fmt(r.p), r.shots, r.logical_errors, _fmt(r.ler), _fmt(r.ler_per_round), _fmt(r.mean_iterations)])
    return buf.getvalue()
