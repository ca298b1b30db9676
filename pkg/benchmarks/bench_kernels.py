"""Compare the compiled and pure-Python shadow kernels.

Two levels: single kernels on random arrays, and whole shadow ticks on an
engine that has read the fixture autobiography and the LRRH opening.

    python3 benchmarks/bench_kernels.py [--rows 200] [--cols 400] [--repeat 5]
"""

from __future__ import annotations

import argparse
import sys
import time
import timeit
from pathlib import Path

import numpy as np

from shadowstory import kernels
from shadowstory.domain import load_domain
from shadowstory.engine import Engine

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
AUTOBIOGRAPHY = [
    "carnivores.xapi", "carnivores2.xapi", "carnivores3.xapi", "carnivores4.xapi",
    "conversation1.xapi", "conversation2.xapi", "sneeze.xapi", "vase.xapi", "glass.xapi",
]


def random_state(rows: int, cols: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    W = rng.uniform(0.0, 1.0, (rows, cols)) * (rng.random((rows, cols)) < 0.3)
    W /= np.maximum(W.sum(axis=1, keepdims=True), 1.0) * 1.25
    pool = 1.0 - W.sum(axis=1)
    R = rng.uniform(0.0, 0.05, (rows, cols))
    pairs = rng.integers(0, cols, (max(cols // 4, 1), 2)).astype(np.int64)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]].copy()
    return W, pool, R, pairs


def kernel_cases(k, rows: int, cols: int):
    W, pool, R, pairs = random_state(rows, cols)
    return {
        "decay_fund": lambda: k.decay_fund(W.copy(), pool.copy(), R, rows, cols, 0.1, 0.05, 1.0),
        "sharpen": lambda: k.sharpen(W.copy(), rows, cols, 0.05, True),
        "non_identity": lambda: k.non_identity(W.copy(), pairs, rows, len(pairs), 0.05, True),
    }


def best_of(fn, repeat: int, number: int = 3) -> float:
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def story_engine() -> Engine:
    lib = load_domain((FIXTURES / "domain.xd").read_text(encoding="utf-8"))
    engine = Engine(lib)
    for name in AUTOBIOGRAPHY:
        engine.execute((FIXTURES / name).read_text(encoding="utf-8"))
        engine.flush()
    story = (FIXTURES / "lrrh.xapi").read_text(encoding="utf-8")
    engine.execute(story.split("The wolf / eats")[0])
    return engine


def tick_time(k, dt: float, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        engine = story_engine()
        engine.shadows.k = k
        t0 = time.perf_counter()
        engine.shadows.tick(dt)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=200)
    ap.add_argument("--cols", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--dt", type=float, default=10.0, help="engine tick length")
    args = ap.parse_args(argv)

    backends = {"python": kernels.python_kernels}
    if kernels.compiled_kernels is not None:
        backends["cython"] = kernels.compiled_kernels
    else:
        print("compiled kernels not built; timing the Python backend only", file=sys.stderr)

    print(f"kernels on a {args.rows}x{args.cols} field (ms per call)")
    times: dict[str, dict[str, float]] = {}
    for name, k in backends.items():
        times[name] = {case: best_of(fn, args.repeat) * 1e3
                       for case, fn in kernel_cases(k, args.rows, args.cols).items()}
    for name, k in backends.items():
        times[name][f"engine tick({args.dt:g})"] = tick_time(k, args.dt, args.repeat) * 1e3

    header = f"{'case':<20}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for case in times["python"]:
        row = f"{case:<20}" + "".join(f"{times[b][case]:>12.3f}" for b in backends)
        if len(backends) == 2:
            row += f"{times['python'][case] / times['cython'][case]:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
