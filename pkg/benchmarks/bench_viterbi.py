"""Compare the compiled and NumPy Viterbi kernels on one batch of coded blocks.

Usage: python benchmarks/bench_viterbi.py [--blocks 64] [--block-bits 2048] [--repeat 3]
"""

import argparse
import time

import numpy as np

from polmod import fec, kernels


def best_time(fn, grid, sign, memory, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(grid, sign, memory)
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--blocks", type=int, default=64)
    ap.add_argument("--block-bits", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cfg = fec.CodeConfig(block_bits=args.block_bits)
    rng = np.random.default_rng(0)
    info = rng.integers(0, 2, (args.blocks, cfg.block_bits), dtype=np.uint8)
    llr = 2.0 * (1 - 2.0 * fec.encode_batch(info, cfg)) + 1.5 * rng.standard_normal((args.blocks, cfg.coded_bits))
    grid = np.ascontiguousarray(fec.depuncture(llr, cfg))
    sign = fec.branch_signs(cfg.generators, cfg.memory)

    print(f"{args.blocks} blocks x {cfg.n_steps} trellis steps, {1 << cfg.memory} states")
    t_py, u_py = best_time(kernels.viterbi_batch_python, grid, sign, cfg.memory, args.repeat)
    print(f"python   {t_py * 1e3:9.1f} ms  {t_py / args.blocks * 1e3:7.2f} ms/block")
    if kernels.viterbi_batch_compiled is None:
        print("compiled kernel not built; install with a C compiler and Cython to compare")
        return
    t_c, u_c = best_time(kernels.viterbi_batch_compiled, grid, sign, cfg.memory, args.repeat)
    print(f"compiled {t_c * 1e3:9.1f} ms  {t_c / args.blocks * 1e3:7.2f} ms/block")
    print(f"speed-up {t_py / t_c:.1f}x, identical output: {np.array_equal(u_py, u_c)}")


if __name__ == "__main__":
    main()
