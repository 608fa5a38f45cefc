"""Detector error model ingestion.

Reads the text dialect emitted by Stim (``error``, ``detector``,
``logical_observable``, ``shift_detectors``, ``repeat`` blocks, ``#``
comments) plus an equivalent JSON problem format, and turns it into a check
matrix over error mechanisms.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .bp import DecodingProblem
from .gf2 import BinMatrix


class DemParseError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class Mechanism:
    probability: float
    detectors: tuple[int, ...]
    observables: tuple[int, ...]

    @property
    def signature(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.detectors, self.observables


@dataclass(eq=False)
class DetectorModel:
    num_detectors: int
    num_observables: int
    mechanisms: list[Mechanism] = field(default_factory=list)
    rounds: int | None = None

    def __post_init__(self):
        for j, mech in enumerate(self.mechanisms):
            if not 0 < mech.probability <= 0.5:
                raise ValueError(f"mechanism {j} has probability {mech.probability} outside (0, 0.5]")
            if any(d >= self.num_detectors or d < 0 for d in mech.detectors):
                raise ValueError(f"mechanism {j} references a detector outside [0, {self.num_detectors})")
            if any(o >= self.num_observables or o < 0 for o in mech.observables):
                raise ValueError(f"mechanism {j} references an observable outside [0, {self.num_observables})")

    @property
    def num_mechanisms(self) -> int:
        return len(self.mechanisms)

    @cached_property
    def priors(self) -> np.ndarray:
        return np.array([m.probability for m in self.mechanisms], dtype=np.float64)

    def _incidence(self, rows: int, attr: str) -> BinMatrix:
        dense = np.zeros((rows, self.num_mechanisms), dtype=np.uint8)
        for j, mech in enumerate(self.mechanisms):
            dense[list(getattr(mech, attr)), j] = 1
        return BinMatrix.from_dense(dense)

    @cached_property
    def H(self) -> BinMatrix:
        return self._incidence(self.num_detectors, "detectors")

    @cached_property
    def O(self) -> BinMatrix:
        return self._incidence(self.num_observables, "observables")

    @cached_property
    def problem(self) -> DecodingProblem:
        return DecodingProblem(self.H, self.priors)

    @cached_property
    def observable_problem(self) -> DecodingProblem:
        # only the Tanner-graph helpers are used; priors are irrelevant
        return DecodingProblem(self.O, np.full(self.num_mechanisms, 0.5))

    def syndrome(self, e: np.ndarray) -> np.ndarray:
        return self.problem.syndrome(e)

    def observable_flips(self, e: np.ndarray) -> np.ndarray:
        return self.observable_problem.syndrome(e)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DetectorModel):
            return NotImplemented
        return (
            self.num_detectors == other.num_detectors
            and self.num_observables == other.num_observables
            and self.mechanisms == other.mechanisms
        )


# tokenizer --------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<space>[ \t\r]+)
  | (?P<open>\{)
  | (?P<close>\})
  | (?P<caret>\^)
  | (?P<target>[DL]\d+)(?![\w.])
  | (?P<name>[A-Za-z_]+)(?P<tag>\[[^\]\n]*\])?(?:\((?P<args>[^)\n]*)\))?
  | (?P<number>[-+]?\d+)(?![\w.])
  | (?P<bad>\S+)
    """,
    re.VERBOSE,
)

_INSTRUCTIONS = {"error", "detector", "logical_observable", "shift_detectors", "repeat"}


@dataclass
class _Instr:
    name: str
    args: list[str]
    targets: list[str]
    line: int
    body: list[_Instr] | None = None


def _tokenize(text: str):
    line = 1
    for mt in _TOKEN.finditer(text):
        kind = mt.lastgroup
        if kind == "tag" or kind == "args":
            kind = "name"
        if kind == "newline":
            line += 1
            continue
        if kind in ("comment", "space"):
            continue
        if kind == "bad":
            raise DemParseError(f"unexpected token {mt.group()!r}", line)
        yield kind, mt, line


def _parse_block(tokens, depth: int) -> list[_Instr]:
    out: list[_Instr] = []
    cur: _Instr | None = None
    line = 1
    for kind, mt, line in tokens:
        if kind == "name":
            name = mt.group("name").lower()
            if name not in _INSTRUCTIONS:
                raise DemParseError(f"unknown instruction {mt.group('name')!r}", line)
            args = mt.group("args")
            cur = _Instr(name, [a.strip() for a in args.split(",")] if args and args.strip() else [], [], line)
            out.append(cur)
        elif kind == "open":
            if cur is None or cur.name != "repeat" or cur.body is not None:
                raise DemParseError("'{' without a repeat instruction", line)
            cur.body = _parse_block(tokens, depth + 1)
            cur = None
        elif kind == "close":
            if depth == 0:
                raise DemParseError("unmatched '}'", line)
            return out
        else:
            if cur is None:
                raise DemParseError(f"target {mt.group()!r} outside an instruction", line)
            cur.targets.append(mt.group())
    if depth:
        raise DemParseError("unterminated repeat block", line)
    return out


class _Builder:
    def __init__(self):
        self.offset = 0
        self.max_det = -1
        self.max_obs = -1
        self.mechanisms: list[Mechanism] = []

    def run(self, block: list[_Instr]) -> None:
        for ins in block:
            getattr(self, "_" + ins.name)(ins)

    def _error(self, ins: _Instr) -> None:
        if len(ins.args) != 1:
            raise DemParseError("error takes exactly one probability argument", ins.line)
        try:
            p = float(ins.args[0])
        except ValueError:
            raise DemParseError(f"malformed probability {ins.args[0]!r}", ins.line) from None
        if not 0 <= p <= 1 or p != p:
            raise DemParseError(f"probability {p} outside [0, 1]", ins.line)
        if p > 0.5:
            raise DemParseError(f"probability {p} above 0.5 is not decodable", ins.line)
        dets: set[int] = set()
        obs: set[int] = set()
        for tok in ins.targets:
            if tok == "^":
                continue
            if tok[0] == "D":
                d = int(tok[1:]) + self.offset
                dets ^= {d}
                self.max_det = max(self.max_det, d)
            elif tok[0] == "L":
                o = int(tok[1:])
                obs ^= {o}
                self.max_obs = max(self.max_obs, o)
            else:
                raise DemParseError(f"bad error target {tok!r}", ins.line)
        if p > 0:
            self.mechanisms.append(Mechanism(p, tuple(sorted(dets)), tuple(sorted(obs))))

    def _detector(self, ins: _Instr) -> None:
        for tok in ins.targets:
            if tok[0] != "D":
                raise DemParseError(f"detector expects D targets, got {tok!r}", ins.line)
            self.max_det = max(self.max_det, int(tok[1:]) + self.offset)

    def _logical_observable(self, ins: _Instr) -> None:
        for tok in ins.targets:
            if tok[0] != "L":
                raise DemParseError(f"logical_observable expects L targets, got {tok!r}", ins.line)
            self.max_obs = max(self.max_obs, int(tok[1:]))

    def _shift_detectors(self, ins: _Instr) -> None:
        if len(ins.targets) > 1:
            raise DemParseError("shift_detectors takes a single count", ins.line)
        for tok in ins.targets:
            if tok[0] in "DL^":
                raise DemParseError(f"bad shift count {tok!r}", ins.line)
            k = int(tok)
            if k < 0:
                raise DemParseError("negative detector shift", ins.line)
            self.offset += k

    def _repeat(self, ins: _Instr) -> None:
        if len(ins.targets) != 1 or not ins.targets[0].lstrip("+-").isdigit():
            raise DemParseError("repeat needs one integer count", ins.line)
        count = int(ins.targets[0])
        if count < 0:
            raise DemParseError("negative repeat count", ins.line)
        if ins.body is None:
            raise DemParseError("repeat without a block", ins.line)
        for _ in range(count):
            self.run(ins.body)


def parse_dem(
    text: str,
    num_detectors: int | None = None,
    num_observables: int | None = None,
    merge: bool = False,
) -> DetectorModel:
    """Parse DEM text.

    Components joined by ``^`` are merged into one mechanism whose detector
    and observable sets are the XOR of the parts.  Zero-probability errors are
    dropped.  Counts default to the largest referenced index plus one and can
    only be raised by the keyword arguments.
    """
    block = _parse_block(_tokenize(text), 0)
    b = _Builder()
    b.run(block)
    n_det = max(b.max_det + 1, num_detectors or 0)
    n_obs = max(b.max_obs + 1, num_observables or 0)
    model = DetectorModel(n_det, n_obs, b.mechanisms)
    return merge_duplicates(model) if merge else model


def merge_duplicates(model: DetectorModel) -> DetectorModel:
    """Combine mechanisms with identical signatures.

    Two independent mechanisms with the same effect fire an odd number of
    times with probability ``p1 (1 - p2) + p2 (1 - p1)``.  Survivors keep the
    position of their first occurrence.
    """
    merged: dict[tuple, float] = {}
    for mech in model.mechanisms:
        key = mech.signature
        if key in merged:
            q = merged[key]
            merged[key] = q * (1 - mech.probability) + mech.probability * (1 - q)
        else:
            merged[key] = mech.probability
    mechs = [Mechanism(p, d, o) for (d, o), p in merged.items()]
    return DetectorModel(model.num_detectors, model.num_observables, mechs, model.rounds)


def serialize_dem(model: DetectorModel) -> str:
    lines = []
    for mech in model.mechanisms:
        targets = [f"D{d}" for d in mech.detectors] + [f"L{o}" for o in mech.observables]
        lines.append(f"error({mech.probability!r}) " + " ".join(targets))
    if model.num_detectors:
        lines.append(f"detector D{model.num_detectors - 1}")
    if model.num_observables:
        lines.append(f"logical_observable L{model.num_observables - 1}")
    return "\n".join(lines) + "\n"


def model_to_json(model: DetectorModel) -> dict:
    out = {
        "num_detectors": model.num_detectors,
        "num_observables": model.num_observables,
        "mechanisms": [
            {"p": m.probability, "detectors": list(m.detectors), "observables": list(m.observables)}
            for m in model.mechanisms
        ],
    }
    if model.rounds is not None:
        out["rounds"] = model.rounds
    return out


def model_from_json(data: dict | str) -> DetectorModel:
    if isinstance(data, str):
        data = json.loads(data)
    mechs = []
    for j, raw in enumerate(data["mechanisms"]):
        p = float(raw["p"])
        if p == 0:
            continue
        if not 0 < p <= 0.5:
            raise ValueError(f"mechanism {j}: probability {p} outside (0, 0.5]")
        dets = sorted(set(int(d) for d in raw.get("detectors", [])))
        obs = sorted(set(int(o) for o in raw.get("observables", [])))
        mechs.append(Mechanism(p, tuple(dets), tuple(obs)))
    return DetectorModel(int(data["num_detectors"]), int(data["num_observables"]), mechs, data.get("rounds"))


def load_model(path: str | Path, merge: bool = True) -> DetectorModel:
    """Load a ``.json`` problem or a DEM text file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        model = model_from_json(text)
        return merge_duplicates(model) if merge else model
    return parse_dem(text, merge=merge)
