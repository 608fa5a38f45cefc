"""Command-line entry point: ``specbp code | decode | simulate | replay``."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, bp, codes, dem, osd, sim, speculative
from .bp import BpConfig


class CliError(Exception):
    pass


# shared option groups -----------------------------------------------------


def _add_target(p: argparse.ArgumentParser, allow_dem: bool = True) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--builtin", help=f"builtin code: {', '.join(codes.BUILTIN_SPECS)}")
    g.add_argument("--spec", help="code spec file ('family l m a:<terms> b:<terms>')")
    if allow_dem:
        g.add_argument("--dem", help="detector error model (.dem text or .json problem)")
        p.add_argument("--no-merge", action="store_true", help="keep duplicate DEM mechanisms separate")


def _add_decoder(p: argparse.ArgumentParser) -> None:
    p.add_argument("--decoder", choices=["bp", "spec", "bposd"], default="bp")
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--damping", default="adaptive", help="'adaptive' (1-2^-i) or 'fixed:<alpha>'")
    p.add_argument("--llr-clamp", type=float, default=64.0)
    p.add_argument("--phi", type=int, default=8, help="candidate set size")
    p.add_argument("--wmax", type=int, default=1, help="maximum test-vector weight")
    p.add_argument("--ns", type=int, default=0, help="test vectors sampled per weight (0 = all)")
    p.add_argument("--exhaustive", action="store_true", help="require exhaustive test vectors")
    p.add_argument("--parallelism", type=int, default=1, help="concurrent speculative BP runs")
    p.add_argument("--osd-order", type=int, default=10)
    p.add_argument("--osd-variant", choices=[osd.OSD0, osd.COMBINATION_SWEEP], default=osd.COMBINATION_SWEEP)
    p.add_argument("--stats-phi", type=int, default=None, help="candidate size for precision/recall stats")


def _bp_config(args) -> BpConfig:
    damping = args.damping.lower()
    if damping == "adaptive":
        return BpConfig(args.max_iters, bp.ADAPTIVE, llr_clamp=args.llr_clamp)
    kind, _, alpha = damping.partition(":")
    if kind != "fixed" or not alpha:
        raise CliError(f"bad --damping {args.damping!r}; use 'adaptive' or 'fixed:<alpha>'")
    return BpConfig(args.max_iters, bp.FIXED, float(alpha), args.llr_clamp)


def _decoder_config(args) -> sim.DecoderConfig:
    bpc = _bp_config(args)
    if args.exhaustive and args.ns > 0:
        raise CliError("--exhaustive cannot be combined with --ns > 0")
    spec = None
    if args.decoder == "spec":
        spec = speculative.SpeculativeConfig(args.phi, args.wmax, args.ns, bpc, args.parallelism)
    return sim.DecoderConfig(
        args.decoder, bpc, spec, osd.OsdConfig(args.osd_order, args.osd_variant), phi_size=args.stats_phi
    )


def _load_target(args):
    """Returns (target, identity dict)."""
    if getattr(args, "dem", None):
        path = Path(args.dem)
        if not path.exists():
            raise CliError(f"no such DEM file: {path}")
        model = dem.load_model(path, merge=not args.no_merge)
        ident = {"kind": "dem", "name": path.name, "sha256": hashlib.sha256(path.read_bytes()).hexdigest()}
        return model, ident
    if args.spec:
        path = Path(args.spec)
        if not path.exists():
            raise CliError(f"no such spec file: {path}")
        spec = codes.load_code_spec(path)
        code = codes.build_code(spec)
        return code, {"kind": "spec", "name": path.name, "sha256": hashlib.sha256(path.read_bytes()).hexdigest()}
    if args.builtin:
        try:
            code = codes.builtin_code(args.builtin)
        except KeyError as exc:
            raise CliError(exc.args[0]) from None
        text = codes.BUILTIN_SPECS[args.builtin.lower()].to_text()
        return code, {"kind": "builtin", "name": args.builtin.lower(), "sha256": hashlib.sha256(text.encode()).hexdigest()}
    raise CliError("choose a target with --builtin, --spec or --dem")


# commands -----------------------------------------------------------------


def cmd_code(args) -> int:
    if getattr(args, "dem", None):
        raise CliError("code describes CSS codes; --dem is not accepted")
    code, _ = _load_target(args)
    css_ok = codes.gf2.mul(code.hx, code.hz.T).is_zero()
    print(f"code      {code.name or '-'}")
    print(f"n         {code.n}")
    print(f"k         {code.k}")
    print(f"rank(H_X) {code.rank_hx}")
    print(f"rank(H_Z) {code.rank_hz}")
    print(f"css_check {'ok' if css_ok else 'FAILED'}")
    if args.distance_budget:
        bound = codes.min_weight_logical_upper_bound(code, args.distance_budget, seed=args.seed)
        print(f"d_upper   {bound}")
    if args.export:
        prefix = Path(args.export)
        for label, mat in (("hx", code.hx), ("hz", code.hz), ("lx", code.lx), ("lz", code.lz)):
            np.savetxt(f"{prefix}_{label}.txt", mat.to_dense(), fmt="%d", delimiter="")
        print(f"exported  {prefix}_{{hx,hz,lx,lz}}.txt")
    return 0


def _read_bits(path: str, length: int) -> np.ndarray:
    if path == "zeros":
        return np.zeros(length, dtype=np.uint8)
    text = Path(path).read_text()
    digits = [c for c in text if c in "01"]
    if len(digits) != length:
        raise CliError(f"syndrome file has {len(digits)} bits, expected {length}")
    return np.array(digits, dtype=np.uint8)


def cmd_decode(args) -> int:
    target, _ = _load_target(args)
    dcfg = _decoder_config(args)
    if isinstance(target, dem.DetectorModel):
        problem = target.problem
    else:
        H, _ = codes.sector_problem_matrices(target, args.sector)
        problem = bp.DecodingProblem(H, args.p)
    e = None
    if args.error is not None:
        idx = [int(i) for i in args.error.split(",") if i.strip()]
        if any(i < 0 or i >= problem.n for i in idx):
            raise CliError(f"error index out of range [0, {problem.n})")
        e = np.zeros(problem.n, dtype=np.uint8)
        e[idx] ^= 1
        s = problem.syndrome(e)
    elif args.syndrome is not None:
        s = _read_bits(args.syndrome, problem.m)
    else:
        raise CliError("give --error or --syndrome")
    rng = sim.shot_rng(args.seed, 0)
    res = sim.run_decoder(dcfg, problem, s, rng)
    ok = np.array_equal(problem.syndrome(res.e_hat), s)
    print(f"decoder    {dcfg.label()}")
    print(f"converged  {res.converged}")
    print(f"method     {res.method}")
    print(f"iterations {res.iterations}")
    print(f"syndrome   {'satisfied' if ok else 'violated'}")
    print(f"e_hat      {','.join(map(str, np.flatnonzero(res.e_hat))) or '-'}")
    if e is not None and res.converged:
        if isinstance(target, dem.DetectorModel):
            fail = sim.is_logical_failure(target, e, res.e_hat)
        else:
            fail = sim.is_logical_failure(target, e, res.e_hat, sector=args.sector)
        print(f"logical    {'flipped' if fail else 'preserved'}")
    return 0


def _parse_noise(text: str) -> list[sim.NoiseSpec]:
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind in ("capacity", "depolarizing"):
        if not rest:
            raise CliError(f"--noise {kind} needs ':<p>[,<p>...]'")
        return [sim.NoiseSpec(kind, float(p)) for p in rest.split(",")]
    if kind == "dem":
        return [sim.NoiseSpec(sim.DEM, float(rest) if rest else None)]
    raise CliError(f"unknown noise {text!r}")


def _parse_stop(text: str, max_shots: int) -> sim.Stop:
    kind, _, n = text.partition(":")
    if kind == "shots":
        return sim.Stop(shots=int(n))
    if kind == "errors":
        return sim.Stop(errors=int(n), max_shots=max_shots)
    raise CliError(f"bad --stop {text!r}; use shots:N or errors:N")


def _snapshot(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "config")}


def cmd_simulate(args, argv: list[str] | None = None) -> int:
    if args.seed is None:
        raise CliError("--seed is required for simulate")
    target, ident = _load_target(args)
    dcfg = _decoder_config(args)
    noises = _parse_noise(args.noise)
    is_dem = isinstance(target, dem.DetectorModel)
    if is_dem != (noises[0].kind == sim.DEM):
        raise CliError("DEM targets need --noise dem; codes need capacity or depolarizing noise")
    stop = _parse_stop(args.stop, args.max_shots)
    reports = []
    for noise in noises:
        rep = sim.run_sim(target, dcfg, noise, stop, args.seed, threads=args.threads, rounds=args.rounds)
        reports.append(rep)
        rpr = "" if rep.ler_per_round is None else f" ler/round={rep.ler_per_round:.4g}"
        print(
            f"{dcfg.label()} {rep.noise} shots={rep.shots} errors={rep.logical_errors} "
            f"ler={rep.ler:.4g}{rpr} mean_iters={rep.mean_iterations:.3f}"
        )
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.csv").write_text(sim.reports_to_csv(reports))
    Path(f"{prefix}.json").write_text(json.dumps({"reports": [r.to_dict() for r in reports]}, indent=2) + "\n")
    manifest = {
        "argv": argv if argv is not None else sys.argv[1:],
        "config": _snapshot(args),
        "seed": args.seed,
        "target": ident,
        "version": __version__,
        "backend": bp.BACKEND,
    }
    Path(f"{prefix}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    cfg = dict(manifest["config"])
    if args.out:
        cfg["out"] = args.out
    return cmd_simulate(argparse.Namespace(**cfg), argv=manifest.get("argv"))


# parser -------------------------------------------------------------------


def _read_config(path: str) -> dict:
    """``key = value`` lines; keys use option names with dashes or underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CliError(f"{path}:{lineno}: expected key = value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specbp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"specbp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("code", help="construct a code and report its parameters")
    _add_target(p, allow_dem=False)
    p.add_argument("--export", help="write H_X, H_Z, L_X, L_Z as 0/1 text files with this prefix")
    p.add_argument("--distance-budget", type=int, default=0, help="random information sets for a distance upper bound")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("decode", help="decode a single syndrome")
    _add_target(p)
    p.add_argument("--sector", choices=["x", "z"], default="z", help="z: Z errors vs H_X; x: X errors vs H_Z")
    p.add_argument("--p", type=float, default=0.01, help="prior for code-capacity decoding")
    p.add_argument("--error", help="comma-separated error positions to synthesize a syndrome")
    p.add_argument("--syndrome", help="file of 0/1 syndrome bits, or 'zeros'")
    p.add_argument("--seed", type=int, default=0)
    _add_decoder(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", help="Monte Carlo logical error rate estimation")
    _add_target(p)
    p.add_argument("--noise", required=False, help="capacity:<p>[,<p>...] | depolarizing:<p>,... | dem[:<label p>]")
    p.add_argument("--stop", default="errors:100", help="shots:N or errors:N")
    p.add_argument("--max-shots", type=int, default=10_000_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--rounds", type=int, default=None, help="syndrome rounds d for LER per round")
    p.add_argument("--out", default="specbp_run", help="output prefix for .csv/.json/.manifest.json")
    p.add_argument("--config", help="key = value file of option defaults")
    _add_decoder(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="rerun a simulation from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="override the output prefix")
    p.set_defaults(func=cmd_replay)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    path = getattr(args, "config", None)
    if not path:
        return args
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in _read_config(path).items():
        if key not in known:
            raise CliError(f"{path}: unknown option {key!r}")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = action.type(value) if action.type else value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.command == "simulate":
            if not args.noise:
                if not args.dem:
                    raise CliError("--noise is required for code targets")
                args.noise = "dem"
            return cmd_simulate(args, argv)
        return args.func(args)
    except (CliError, codes.CodeSpecError, dem.DemParseError, ValueError) as exc:
        print(f"specbp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
