"""Timing comparison of the planar-navigation rollout backends.

Runs the batched crash-latch rollout kernel on a benchmark-sized workload
with both the compiled and the pure-numpy implementation (when both are
available) and prints the per-call time and speedup.

Usage: python3 benchmarks/bench_rollout.py [--batch 256] [--horizon 64]
"""

import argparse
import timeit

import numpy as np

from steinmpc.envs import PlanarNavEnv
from steinmpc.rollout_backend import available_backends


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=256, help="rollouts per call")
    parser.add_argument("--horizon", type=int, default=64, help="steps per rollout")
    parser.add_argument("--repeat", type=int, default=20, help="timed calls per backend")
    args = parser.parse_args()

    env = PlanarNavEnv()
    rng = np.random.default_rng(0)
    controls = rng.uniform(-50.0, 50.0, size=(args.batch, args.horizon, 2))
    noise = rng.standard_normal(controls.shape)
    call_args = (
        env.start.copy(),
        controls,
        noise,
        env.obstacles,
        env.dt,
        env.sigma_dyn,
        env.goal,
        env.cost_coeffs,
    )

    backends = available_backends()
    print(f"workload: batch={args.batch}, horizon={args.horizon}, obstacles={len(env.obstacles)}")
    times = {}
    for name, fn in backends.items():
        fn(*call_args)  # warm up
        total = timeit.timeit(lambda: fn(*call_args), number=args.repeat)
        times[name] = total / args.repeat
        print(f"{name:>8}: {times[name] * 1e3:8.3f} ms/call")

    if "cython" in times and "python" in times:
        print(f"speedup: {times['python'] / times['cython']:.1f}x (compiled over pure numpy)")
        s_py, c_py, h_py = backends["python"](*call_args)
        s_cy, c_cy, h_cy = backends["cython"](*call_args)
        identical = (
            np.array_equal(s_py, s_cy)
            and np.array_equal(c_py, c_cy)
            and np.array_equal(h_py, h_cy)
        )
        print(f"outputs bit-identical: {identical}")


if __name__ == "__main__":
    main()
