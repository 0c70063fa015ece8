"""Compiled vs pure-Python crop kernel.

Usage: python benchmarks/bench_kernels.py [--seasons N] [--repeat R]

Three workloads, each on both backends:
  day     one advance_day call through the public wrapper
  season  one open-loop season through run_season
  episode one season stepped through CropEnv.step (the DQN/BC path)
"""

import argparse
import statistics
import time

import numpy as np

from agpolicy import kernels
from agpolicy.actions import ActionAmounts, action_table
from agpolicy.crop_env import CropEnv, SimConfig
from agpolicy.harness import season_weather
from agpolicy import _layout as L


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def bench_day(backend, n_days, repeat):
    _, advance = kernels.get_backend(backend)
    env = CropEnv(SimConfig(), season_weather(0, SimConfig()), backend=backend)
    env.reset()
    s0 = env._state.copy()
    p = env._params
    f = np.zeros(L.FLUX_SIZE)

    def run():
        s = s0.copy()
        for _ in range(n_days):
            advance(s, p, 20.0, 30.0, 18.0, 2.0, 40.0, 6.0, f)
            s[L.ISTAGE] = 1.0  # hold the crop in one stage so every call does the same work

    best, med = _best(run, repeat)
    return best / n_days, med / n_days


def bench_season(backend, seasons, repeat):
    cfg = SimConfig()
    table = action_table()
    rng = np.random.default_rng(0)
    envs = [CropEnv(cfg, season_weather(k, cfg), backend=backend) for k in range(seasons)]
    plans = [table[rng.integers(25, size=cfg.max_season_days)] for _ in range(seasons)]

    def run():
        for env, plan in zip(envs, plans):
            env.reset()
            env.run_open_loop(plan)

    best, med = _best(run, repeat)
    return best / seasons, med / seasons


def bench_episode(backend, seasons, repeat):
    cfg = SimConfig()
    table = action_table()
    envs = [CropEnv(cfg, season_weather(k, cfg), backend=backend) for k in range(seasons)]
    acts = [ActionAmounts(*row) for row in table]

    def run():
        rng = np.random.default_rng(1)
        for env in envs:
            env.reset()
            while not env.done:
                env.step(acts[rng.integers(25)])

    best, med = _best(run, repeat)
    return best / seasons, med / seasons


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seasons", type=int, default=50)
    ap.add_argument("--days", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = ["python"]
    if kernels.compiled_available():
        backends.insert(0, "cython")
    else:
        print("compiled kernel not built; timing the Python backend only")

    rows = []
    for name, fn, n, unit in (
        ("day", bench_day, args.days, "us"),
        ("season", bench_season, args.seasons, "ms"),
        ("episode", bench_episode, args.seasons, "ms"),
    ):
        scale = 1e6 if unit == "us" else 1e3
        results = {b: fn(b, n, args.repeat) for b in backends}
        for b, (best, med) in results.items():
            rows.append((name, b, best * scale, med * scale, unit))
        if len(results) == 2:
            speedup = results["python"][0] / results["cython"][0]
            rows.append((name, "speedup", speedup, None, "x"))

    print(f"{'workload':<9} {'backend':<8} {'best':>10} {'median':>10}")
    for name, b, best, med, unit in rows:
        if med is None:
            print(f"{name:<9} {b:<8} {best:>9.1f}{unit}")
        else:
            print(f"{name:<9} {b:<8} {best:>8.2f}{unit} {med:>8.2f}{unit}")


if __name__ == "__main__":
    main()
