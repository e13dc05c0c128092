#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Runs each hot kernel on representative workloads (folded event batches of
the sizes the sliding-window scans produce) and prints per-call timings for
every importable backend plus end-to-end timings for a full day scan.

Usage: python benchmarks/bench_kernels.py [--repeat 2000]
"""

import argparse
import time

import numpy as np

from spatfcd import kernels, preprocess
from spatfcd.config import Settings
from spatfcd.oracle import SimConfig, constant_plan, fitted_calibration, simulate
from spatfcd.tod import build_schedule


def time_call(fn, *args, repeat: int) -> float:
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_kernels(repeat: int) -> None:
    rng = np.random.default_rng(0)
    backends = kernels.backends()
    print(f"backends: {', '.join(backends)} (active: {kernels.BACKEND})")
    print(f"{'kernel':<22}{'n':>8}" + "".join(f"{name:>14}" for name in backends)
          + f"{'speedup':>10}")
    for n in (100, 600, 3000):
        t = rng.uniform(0, 3600, n)
        mapped = np.ascontiguousarray(np.sort(rng.uniform(-45, 45, n)))
        rows = {
            "map_to_cycle": [(impl.map_to_cycle, t, 90.0) for impl in backends.values()],
            "ks_uniform": [(impl.ks_uniform, mapped, 90.0) for impl in backends.values()],
            "modal_dispersion": [(impl.modal_dispersion, mapped, 90.0)
                                 for impl in backends.values()],
        }
        for name, calls in rows.items():
            times = [time_call(fn, *args, repeat=repeat) for fn, *args in calls]
            cells = "".join(f"{t_ * 1e6:>12.1f}us" for t_ in times)
            speedup = times[0] / times[-1] if len(times) > 1 else 1.0
            print(f"{name:<22}{n:>8}{cells}{speedup:>9.1f}x")


def bench_pipeline() -> None:
    settings = Settings()
    cfg = SimConfig(plan=constant_plan("X1", 90.0, 50), days=10,
                    penetration=0.1, seed=0)
    records, _ = simulate(cfg)
    kept, _ = preprocess.clean(records, settings.clean)
    events = [e for e in preprocess.calibrate(kept, fitted_calibration(cfg))
              if e.day_class == "weekday"]
    t0 = time.perf_counter()
    build_schedule(events, settings)
    print(f"\nfull-day schedule scan ({len(events)} events, "
          f"{kernels.BACKEND} backend): {time.perf_counter() - t0:.3f}s")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=2000)
    args = parser.parse_args()
    bench_kernels(args.repeat)
    bench_pipeline()


if __name__ == "__main__":
    main()
