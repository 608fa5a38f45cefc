"""Compare the compiled and numpy min-sum kernels on the same syndromes.

    python benchmarks/bench_bp.py [--code cbb154] [--p 0.05] [--shots 300]
"""

import argparse
import time

import numpy as np

from specbp import bp, codes


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--code", default="cbb154")
    ap.add_argument("--p", type=float, default=0.05)
    ap.add_argument("--shots", type=int, default=300)
    ap.add_argument("--max-iters", type=int, default=50)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    code = codes.builtin_code(args.code)
    problem = bp.DecodingProblem(code.hx, args.p)
    cfg = bp.BpConfig(max_iters=args.max_iters)
    rng = np.random.default_rng(args.seed)
    syndromes = [problem.syndrome((rng.random(code.n) < args.p).astype(np.uint8)) for _ in range(args.shots)]

    timings = {}
    outcomes = {}
    for name in bp.KERNELS:
        t0 = time.perf_counter()
        outcomes[name] = [bp.decode(problem, s, cfg, backend=name) for s in syndromes]
        timings[name] = time.perf_counter() - t0
        iters = sum(o.iterations for o in outcomes[name])
        print(f"{name:8s} {timings[name]:8.3f}s  {1e6 * timings[name] / iters:8.2f} us/iteration  ({iters} iterations)")

    if len(outcomes) == 2:
        same = all(
            a.iterations == b.iterations and np.array_equal(a.e_hat, b.e_hat) and np.array_equal(a.llr_out, b.llr_out)
            for a, b in zip(outcomes["cython"], outcomes["python"])
        )
        print(f"speedup  {timings['python'] / timings['cython']:.1f}x   identical outcomes: {same}")
    else:
        print("compiled kernel not built; only the numpy fallback ran")


if __name__ == "__main__":
    main()
