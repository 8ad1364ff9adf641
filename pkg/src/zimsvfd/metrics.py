"""Capacities, SINR gains and the overhead-ratio search.

Power conventions: ``powers`` are per-input (per subcarrier and transmit
antenna) average powers in watts and the equivalent channels carry the
sampling gain, so a full-period uniform sampling of 2N points sees each
subcarrier with gain ``2N |H_n|^2``. The OFDM baselines use the same
convention through an explicit FFT gain of 2N.
"""

from __future__ import annotations

import math

import numpy as np

from .frame_timing import FrameTiming, TimingError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=np.float64) - 30.0) / 10.0)


def watt_to_dbm(watt):
    return 10.0 * np.log10(np.asarray(watt, dtype=np.float64)) + 30.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=np.float64) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=np.float64))


def noise_power(n0_dbm_hz, bandwidth):
    """Noise power ``N0 * B`` in watts."""
    return float(dbm_to_watt(n0_dbm_hz) * bandwidth)


def _check_noise(noise_var):
    if not noise_var > 0:
        raise ValueError("noise variance must be positive")


def log2det_eye_plus(A, noise_var):
    """``log2 det(I + A A^H / noise_var)`` through the singular values of A."""
    _check_noise(noise_var)
    s = np.linalg.svd(np.asarray(A), compute_uv=False)
    return float(np.sum(np.log2(1.0 + s * s / noise_var)))


def _powers_for(eq, powers):
    p = np.asarray(powers, dtype=np.float64)
    if np.any(p < 0):
        raise ValueError("powers must be non-negative")
    return np.broadcast_to(p, (eq.n_inputs,))


def log2det_equivalent(eq, powers, noise_var):
    """``log2 det(I + (VH) R (VH)^H / noise_var)`` with ``R = diag(powers)``."""
    _check_noise(noise_var)
    p = _powers_for(eq, powers)
    if np.all(p == p[0]):
        # R = p I: reuse the stored singular values
        return float(np.sum(np.log2(1.0 + p[0] * eq.eigenvalues / noise_var)))
    return log2det_eye_plus(eq.product * np.sqrt(p)[None, :], noise_var)


def capacity_zims(eqs_1, eqs_2, powers_1, powers_2, noise_var, timing: FrameTiming):
    """Sum capacity in bit/s of a block of M symbol periods.

    ``eqs_1`` are the equivalent channels seen by user 1 (carrying user 2's
    symbols) for m = 0..M-1, ``eqs_2`` those seen by user 2. ``powers_i`` is
    the transmit power per input of user i.
    """
    _check_noise(noise_var)
    eqs_1, eqs_2 = list(eqs_1), list(eqs_2)
    if len(eqs_1) != len(eqs_2) or not eqs_1:
        raise ValueError("need the same non-zero number of periods for both directions")
    total = 0.0
    for e1, e2 in zip(eqs_1, eqs_2):
        total += log2det_equivalent(e1, powers_2, noise_var)
        total += log2det_equivalent(e2, powers_1, noise_var)
    return timing.delta_f / ((1.0 + timing.alpha) * len(eqs_1)) * total


# the SISO and MIMO forms share one implementation; the equivalent channel
# already holds either V H or blockdiag(V) H_mimo
capacity_zims_siso = capacity_zims
capacity_zims_mimo = capacity_zims


def ofdm_log_sum(gains, power, noise_var, interference=0.0, fft_gain=None):
    """``sum_n log2 det(I + g p H_n H_n^H / (noise + interference))``.

    ``gains`` has shape (2N, K_R, K_T); ``g`` defaults to the FFT size 2N.
    """
    _check_noise(noise_var)
    h = np.asarray(gains)
    g = h.shape[0] if fft_gain is None else fft_gain
    eig = np.linalg.svd(h, compute_uv=False) ** 2
    return float(np.sum(np.log2(1.0 + g * power * eig / (noise_var + interference))))


def capacity_ofdm_hd(gains_12, gains_21, power_1, power_2, noise_var, timing: FrameTiming,
                     cp_length):
    """Half-duplex OFDM: each direction gets half the time and pays a CP.

    ``power_i`` is the per-subcarrier, per-antenna power of user i.
    """
    eff = timing.t_data / (timing.t_data + cp_length)
    r12 = ofdm_log_sum(gains_12, power_1, noise_var)
    r21 = ofdm_log_sum(gains_21, power_2, noise_var)
    return 0.5 * timing.delta_f * eff * (r12 + r21)


def capacity_fd_sic(gains_12, gains_21, power_1, power_2, noise_var, timing: FrameTiming,
                    xi=0.0, si_power_1=0.0, si_power_2=0.0, cp_length=0.0):
    """Full duplex with residual self-interference ``xi * si_power`` per receive sample.

    ``si_power_i`` is the total SI power reaching a receive antenna of user i
    before cancellation (transmit power times SI channel gain).
    """
    if not 0.0 <= xi <= 1.0:
        raise ValueError("xi must lie in [0, 1]")
    eff = timing.t_data / (timing.t_data + cp_length)
    r12 = ofdm_log_sum(gains_12, power_1, noise_var, xi * si_power_2)
    r21 = ofdm_log_sum(gains_21, power_2, noise_var, xi * si_power_1)
    return timing.delta_f * eff * (r12 + r21)


def capacity_fd_perfect(gains_12, gains_21, power_1, power_2, noise_var, timing: FrameTiming):
    return capacity_fd_sic(gains_12, gains_21, power_1, power_2, noise_var, timing)


def capacity_rodd(fd_perfect_capacity, duty_cycle=0.5, code_rate=0.5):
    """RODD as a duty-cycle and code-rate fraction of SI-free full duplex."""
    if not (0 < duty_cycle <= 1 and 0 < code_rate <= 1):
        raise ValueError("duty cycle and code rate must lie in (0, 1]")
    return duty_cycle * code_rate * fd_perfect_capacity


def sinr_zims(eigenvalues, powers, noise_var):
    """Average SINR ``sum P lam / (n sigma^2)`` over the n subchannels."""
    _check_noise(noise_var)
    lam = np.asarray(eigenvalues, dtype=np.float64)
    p = np.broadcast_to(np.asarray(powers, dtype=np.float64), lam.shape)
    return float(np.sum(p * lam) / (lam.size * noise_var))


def sinr_fd_sic(h_tilde, powers, xi, noise_var, si_power):
    """Average SINR of SIC-based full duplex.

    Residual SI is Gaussian and white with power ``xi * si_power`` per
    receive sample, so every subchannel sees it on top of the noise:
    ``sum P H / (n sigma^2 + n xi si_power)``. ``h_tilde`` must carry the
    same sampling gain as the ZIMS subchannel gains (see :func:`h_tilde`).
    """
    _check_noise(noise_var)
    if not 0.0 <= xi <= 1.0:
        raise ValueError("xi must lie in [0, 1]")
    if si_power < 0:
        raise ValueError("SI power must be non-negative")
    h = np.asarray(h_tilde, dtype=np.float64)
    p = np.broadcast_to(np.asarray(powers, dtype=np.float64), h.shape)
    return float(np.sum(p * h) / (h.size * (noise_var + xi * si_power)))


def sinr_gain_db(gamma_z, gamma_c):
    if gamma_z <= 0 or gamma_c <= 0:
        raise ValueError("SINR values must be positive")
    return 10.0 * math.log10(gamma_z) - 10.0 * math.log10(gamma_c)


def h_tilde(gains, fft_gain=None):
    """Subchannel power gains of conventional MIMO-OFDM.

    Eigenvalues of ``H_n^H H_n`` for every subcarrier, times the FFT gain
    (2N by default) so they compare directly with ZIMS subchannel gains.
    """
    h = np.asarray(gains)
    g = h.shape[0] if fft_gain is None else fft_gain
    return g * (np.linalg.svd(h, compute_uv=False) ** 2).ravel()


def optimize_alpha(objective, lo, hi, tol=1e-3, feasible=None, max_iter=200):
    """Golden-section maximisation of ``objective(alpha)`` on ``[lo, hi]``.

    ``feasible`` is an optional ``(a_min, a_max)`` range intersected with the
    request; the open lower bound is nudged inward by ``tol / 10``.
    Returns ``(alpha_best, value_best)``.
    """
    if feasible is not None:
        f_lo, f_hi = feasible
        lo = max(lo, f_lo + tol / 10)
        hi = min(hi, f_hi)
    if not hi > lo:
        raise TimingError(f"empty feasible alpha range [{lo}, {hi}]")
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = objective(c), objective(d)
    seen = {c: fc, d: fd}
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = objective(c)
            seen[c] = fc
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = objective(d)
            seen[d] = fd
    # the bracket ends themselves are candidates (monotone objectives)
    for x in (lo, hi):
        seen[x] = objective(x)
    best = max(seen, key=lambda x: (seen[x], -x))
    return best, seen[best]
