"""Time the numba kernels against the numpy fallbacks on representative inputs.

Run with ``python benchmarks/bench_accel.py [--repeat N]``. Results of both
backends are also compared so a speedup never hides a wrong answer.
"""

import argparse
import time

import numpy as np

from zimsvfd import _accel


def _inputs(rng):
    two_n = 128
    delta_f = 20e6 / 1024
    freqs = 4 * two_n * delta_f + np.arange(-two_n // 2 + 1, two_n // 2 + 1) * delta_f
    times = np.sort(rng.uniform(0, 1 / delta_f, two_n))
    sym = (rng.choice([-1, 1], (3, two_n)) + 1j * rng.choice([-1, 1], (3, two_n))) / np.sqrt(2)
    t_d = 1 / delta_f
    t_z, dl = 0.5 * t_d, 1.9e-6
    t_s = t_d + 2 * dl + t_z
    grid = np.linspace(0.9 * t_s, 2.1 * t_s, 20000)
    wave = np.exp(2j * np.pi * 3.3 * np.arange(20000) / 20000)
    query = np.sort(rng.uniform(grid[100], grid[-100], 2000))
    ext = np.sort(rng.uniform(0, 100e-9, (200000, 8)), axis=1)[:, ::-1].copy()
    z = rng.standard_normal(200000) + 1j * rng.standard_normal(200000)
    pts = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)
    return {
        "phase_matrix": (times, freqs),
        "zims_waveform": (grid, sym, freqs, t_s, t_z, t_d, dl, 2, 0),
        "kaiser_sinc_interp": (wave, grid[0], grid[1] - grid[0], query, 32, 10.0),
        "candidate_lengths": (ext, t_s, t_z, t_d, dl, 0.0),
        "nearest_index": (z, pts),
    }


def _best(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is available")
        return 1
    rng = np.random.default_rng(0)
    inputs = _inputs(rng)
    print(f"{'kernel':<20s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fargs in inputs.items():
        _accel.numba_impl[name](*fargs)  # compile outside the timing
        t_np, out_np = _best(_accel.numpy_impl[name], fargs, args.repeat)
        t_nb, out_nb = _best(_accel.numba_impl[name], fargs, args.repeat)
        diff = float(np.max(np.abs(np.asarray(out_np) - np.asarray(out_nb))))
        print(f"{name:<20s} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:8.1f} {diff:11.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
