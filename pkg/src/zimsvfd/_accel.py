"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``ZIMSVFD_DISABLE_NUMBA=1`` before import to force the numpy path.
Both implementations are always importable under ``numpy_impl`` and
``numba_impl`` so they can be benchmarked side by side.
"""

import math
import os

import numpy as np

_DISABLED = os.environ.get("ZIMSVFD_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba ships with the dev environment
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _np_phase_matrix(times, freqs):
    # exp(j 2 pi f t) for every (t, f) pair; rows follow times
    return np.exp(1j * TWO_PI * np.outer(times, freqs))


def _np_nearest_index(z, points):
    d = np.abs(z[:, None] - points[None, :]) ** 2
    # argmin keeps the lowest index on ties
    return np.argmin(d, axis=1).astype(np.int64)


def _np_candidate_lengths(ext, t_s, t_z, t_d, delta, m):
    """Candidate-interval lengths for a batch of delay profiles.

    ``ext`` has one row per profile with columns
    (t11max, t11min, t22max, t22min, t12max, t12min, t21max, t21min).
    Returns an (n, 2) array of lengths for user 1 and user 2.
    """
    t11max, t11min, t22max, t22min, t12max, t12min, t21max, t21min = ext.T
    up1 = np.minimum((m + 1) * t_s + t11min - delta, (m + 1) * t_s - delta + t21max)
    lo1 = np.maximum((m + 1) * t_s - t_z + t11max + delta, m * t_s + t_z + delta + t21min)
    up2 = np.minimum(m * t_s + t_z + t22min - delta, m * t_s + delta + t_d + t12max)
    lo2 = np.maximum(m * t_s + t22max + delta, m * t_s + delta + t12min)
    return np.stack([up1 - lo1, up2 - lo2], axis=1)


def _np_kaiser_sinc_interp(samples, t0, dt, query, half_width, beta):
    n = samples.shape[0]
    out = np.zeros(query.shape[0], dtype=np.complex128)
    i0 = np.i0(beta)
    for j, tq in enumerate(query):
        x = (tq - t0) / dt
        centre = int(math.floor(x))
        k = np.arange(max(centre - half_width + 1, 0), min(centre + half_width + 1, n))
        u = x - k
        w = np.i0(beta * np.sqrt(np.clip(1.0 - (u / half_width) ** 2, 0.0, None))) / i0
        out[j] = np.sum(samples[k] * np.sinc(u) * w)
    return out


def _np_zims_waveform(t, symbols, freqs, t_s, t_z, t_d, delta, user, ramp):
    """Evaluate one antenna's transmit waveform at arbitrary times.

    ``symbols`` is (M, 2N); periods outside 0..M-1 are silent. ``ramp`` is
    0 for linear and 1 for raised-cosine transitions.
    """
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros(t.shape, dtype=np.complex128)
    n_sym = symbols.shape[0]
    m = np.floor(t / t_s).astype(np.int64)
    valid = (m >= 0) & (m < n_sym)
    if not np.any(valid):
        return out
    tv = t[valid]
    mv = m[valid]
    s = tv - mv * t_s
    data = np.sum(symbols[mv] * np.exp(1j * TWO_PI * np.outer(tv, freqs)), axis=1)
    if user == 1:
        rise_start, data_start = 0.0, delta
        fall_start, off_start = delta + t_d, t_s - t_z
    else:
        rise_start, data_start = t_z, t_z + delta
        fall_start, off_start = t_s - delta, t_s
    env = np.zeros_like(s)
    rising = (s >= rise_start) & (s < data_start)
    on = (s >= data_start) & (s < fall_start)
    falling = (s >= fall_start) & (s < off_start)
    env[on] = 1.0
    env[rising] = _np_ramp((s[rising] - rise_start) / delta, ramp)
    env[falling] = 1.0 - _np_ramp((s[falling] - fall_start) / delta, ramp)
    out[valid] = env * data
    return out


def _np_ramp(u, ramp):
    if ramp == 0:
        return u
    return 0.5 * (1.0 - np.cos(np.pi * u))


numpy_impl = {
    "phase_matrix": _np_phase_matrix,
    "nearest_index": _np_nearest_index,
    "candidate_lengths": _np_candidate_lengths,
    "kaiser_sinc_interp": _np_kaiser_sinc_interp,
    "zims_waveform": _np_zims_waveform,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

numba_impl = {}

if HAVE_NUMBA:
    njit = numba.njit(cache=True)

    @njit
    def _nb_phase_matrix(times, freqs):
        g = times.shape[0]
        n = freqs.shape[0]
        out = np.empty((g, n), dtype=np.complex128)
        for v in range(g):
            for k in range(n):
                ph = TWO_PI * times[v] * freqs[k]
                out[v, k] = complex(math.cos(ph), math.sin(ph))
        return out

    @njit
    def _nb_nearest_index(z, points):
        out = np.empty(z.shape[0], dtype=np.int64)
        for i in range(z.shape[0]):
            best = 0
            best_d = np.inf
            for k in range(points.shape[0]):
                d = abs(z[i] - points[k]) ** 2
                if d < best_d:
                    best_d = d
                    best = k
            out[i] = best
        return out

    @njit
    def _nb_candidate_lengths(ext, t_s, t_z, t_d, delta, m):
        n = ext.shape[0]
        out = np.empty((n, 2))
        for r in range(n):
            t11max, t11min, t22max, t22min = ext[r, 0], ext[r, 1], ext[r, 2], ext[r, 3]
            t12max, t12min, t21max, t21min = ext[r, 4], ext[r, 5], ext[r, 6], ext[r, 7]
            up1 = min((m + 1) * t_s + t11min - delta, (m + 1) * t_s - delta + t21max)
            lo1 = max((m + 1) * t_s - t_z + t11max + delta, m * t_s + t_z + delta + t21min)
            up2 = min(m * t_s + t_z + t22min - delta, m * t_s + delta + t_d + t12max)
            lo2 = max(m * t_s + t22max + delta, m * t_s + delta + t12min)
            out[r, 0] = up1 - lo1
            out[r, 1] = up2 - lo2
        return out

    @njit
    def _bessel_i0(x):
        # power series; converges quickly for the window arguments used here
        total = 1.0
        term = 1.0
        k = 1
        half = 0.5 * x
        while True:
            term *= (half / k) ** 2
            total += term
            if term < 1e-17 * total:
                break
            k += 1
        return total

    @njit
    def _nb_kaiser_sinc_interp(samples, t0, dt, query, half_width, beta):
        n = samples.shape[0]
        out = np.zeros(query.shape[0], dtype=np.complex128)
        i0 = _bessel_i0(beta)
        for j in range(query.shape[0]):
            x = (query[j] - t0) / dt
            centre = int(math.floor(x))
            acc = 0j
            for k in range(max(centre - half_width + 1, 0), min(centre + half_width + 1, n)):
                u = x - k
                r = 1.0 - (u / half_width) ** 2
                if r <= 0.0:
                    continue
                w = _bessel_i0(beta * math.sqrt(r)) / i0
                sc = 1.0 if u == 0.0 else math.sin(math.pi * u) / (math.pi * u)
                acc += samples[k] * sc * w
            out[j] = acc
        return out

    @njit
    def _nb_ramp(u, ramp):
        if ramp == 0:
            return u
        return 0.5 * (1.0 - math.cos(math.pi * u))

    @njit
    def _nb_zims_waveform(t, symbols, freqs, t_s, t_z, t_d, delta, user, ramp):
        out = np.zeros(t.shape[0], dtype=np.complex128)
        n_sym = symbols.shape[0]
        if user == 1:
            rise_start, data_start = 0.0, delta
            fall_start, off_start = delta + t_d, t_s - t_z
        else:
            rise_start, data_start = t_z, t_z + delta
            fall_start, off_start = t_s - delta, t_s
        for i in range(t.shape[0]):
            m = int(math.floor(t[i] / t_s))
            if m < 0 or m >= n_sym:
                continue
            s = t[i] - m * t_s
            if s >= data_start and s < fall_start:
                env = 1.0
            elif s >= rise_start and s < data_start:
                env = _nb_ramp((s - rise_start) / delta, ramp)
            elif s >= fall_start and s < off_start:
                env = 1.0 - _nb_ramp((s - fall_start) / delta, ramp)
            else:
                continue
            acc = 0j
            for k in range(freqs.shape[0]):
                ph = TWO_PI * freqs[k] * t[i]
                acc += symbols[m, k] * complex(math.cos(ph), math.sin(ph))
            out[i] = env * acc
        return out

    numba_impl = {
        "phase_matrix": _nb_phase_matrix,
        "nearest_index": _nb_nearest_index,
        "candidate_lengths": _nb_candidate_lengths,
        "kaiser_sinc_interp": _nb_kaiser_sinc_interp,
        "zims_waveform": _nb_zims_waveform,
    }

_active = numba_impl if USE_NUMBA else numpy_impl

phase_matrix = _active["phase_matrix"]
nearest_index = _active["nearest_index"]
candidate_lengths = _active["candidate_lengths"]
kaiser_sinc_interp = _active["kaiser_sinc_interp"]
zims_waveform = _active["zims_waveform"]


def backend():
    return "numba" if USE_NUMBA else "numpy"
