"""Benchmark the edit-distance kernels against each other.

Runs the same random workload through every available kernel (numba JIT
and the pure-numpy fallback), checks they agree, and prints throughput.
The numbers answer the only question that matters here: is the JIT worth
keeping for realistic sentence lengths?

Usage: python3 benchmarks/bench_editdist.py [--pairs 20000] [--max-len 80]
The kernel used by the library at runtime follows MACROFORGE_EDIT_KERNEL.
"""

import argparse
import random
import statistics
import time

from macroforge.editdist import active_kernel, available_kernels, levenshtein, use_kernel

GLYPHS = "abcdefgh матч осмотр 中文 "


def make_pairs(n: int, min_len: int, max_len: int, seed: int) -> list:
    rng = random.Random(seed)

    def text() -> str:
        return "".join(rng.choice(GLYPHS) for _ in range(rng.randint(min_len, max_len)))

    return [(text(), text()) for _ in range(n)]


def run(kernel: str, pairs: list, repeats: int) -> dict:
    use_kernel(kernel)
    levenshtein("warm", "up")  # trigger JIT compilation outside the timed region
    times = []
    checksum = 0
    for _ in range(repeats):
        started = time.perf_counter()
        checksum = sum(levenshtein(a, b) for a, b in pairs)
        times.append(time.perf_counter() - started)
    return {"kernel": kernel, "best": min(times), "mean": statistics.mean(times),
            "checksum": checksum}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=20_000)
    parser.add_argument("--min-len", type=int, default=5)
    parser.add_argument("--max-len", type=int, default=80)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    pairs = make_pairs(args.pairs, args.min_len, args.max_len, args.seed)
    previous = active_kernel()
    kernels = available_kernels()
    print(f"kernels: {', '.join(kernels)}")
    print(f"workload: {args.pairs} pairs, lengths {args.min_len}-{args.max_len}, "
          f"best of {args.repeats}")

    results = []
    try:
        for kernel in kernels:
            r = run(kernel, pairs, args.repeats)
            results.append(r)
            print(f"  {kernel:>6}: {r['best'] * 1e3:8.1f} ms  "
                  f"({args.pairs / r['best']:,.0f} pairs/s)")
    finally:
        use_kernel(previous)

    checksums = {r["checksum"] for r in results}
    if len(checksums) != 1:
        print("MISMATCH: kernels disagree on the workload")
        return 1
    if len(results) == 2:
        slow = max(r["best"] for r in results)
        fast = min(r["best"] for r in results)
        print(f"speedup: {slow / fast:.1f}x "
              f"({min(results, key=lambda r: r['best'])['kernel']} faster)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
