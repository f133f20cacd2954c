"""Benchmark the numba and numpy geometry kernel backends.

Times the two hot kernels (point-to-polygon distance, point-in-polygon) on a
synthetic workload shaped like a real evaluation: many homes against many
small plots. Run:

    python benchmarks/bench_kernels.py [--agents 20000] [--plots 64] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from agora import geometry


def make_workload(n_agents: int, n_plots: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    homes = rng.uniform(0, 2500, size=(n_agents, 2))
    polys = []
    for _ in range(n_plots):
        cx, cy = rng.uniform(200, 2300, size=2)
        w, h = rng.uniform(60, 220, size=2)
        polys.append(
            geometry.as_polygon_array(
                [(cx - w, cy - h), (cx + w, cy - h), (cx + w, cy + h), (cx - w, cy + h)]
            )
        )
    return homes, polys


def bench(backend: str, homes, polys, repeat: int) -> tuple[float, float]:
    geometry.set_backend(backend)
    # warm-up (JIT compile / cache load)
    geometry.dists_to_polygon(homes[:8], polys[0])
    geometry.points_in_polygon(homes[:8], polys[0])

    best_dist = min(
        _time(lambda: [geometry.dists_to_polygon(homes, p) for p in polys])
        for _ in range(repeat)
    )
    best_pip = min(
        _time(lambda: [geometry.points_in_polygon(homes, p) for p in polys])
        for _ in range(repeat)
    )
    return best_dist, best_pip


def _time(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--agents", type=int, default=20000)
    parser.add_argument("--plots", type=int, default=64)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    homes, polys = make_workload(args.agents, args.plots)
    print(f"workload: {args.agents} agents x {args.plots} plots, best of {args.repeat}")

    results = {}
    for backend in geometry.available_backends():
        dist_s, pip_s = bench(backend, homes, polys, args.repeat)
        results[backend] = (dist_s, pip_s)
        print(f"{backend:>6}: dists_to_polygon {dist_s * 1e3:8.2f} ms   "
              f"points_in_polygon {pip_s * 1e3:8.2f} ms")

    if "numba" in results and "numpy" in results:
        d_speedup = results["numpy"][0] / results["numba"][0]
        p_speedup = results["numpy"][1] / results["numba"][1]
        print(f"numba speedup: {d_speedup:.2f}x (dist), {p_speedup:.2f}x (pip)")

    # sanity: both backends agree bit for bit
    geometry.set_backend("numpy")
    ref = geometry.dists_to_polygon(homes, polys[0])
    if "numba" in results:
        geometry.set_backend("numba")
        alt = geometry.dists_to_polygon(homes, polys[0])
        assert (ref == alt).all(), "backends disagree"
        print("bit-identical outputs: yes")


if __name__ == "__main__":
    main()
