"""Sampling matrices, equivalent channels and block simulation.

The matrix-domain model is ``Y = V H X + Z``; :func:`time_domain_oracle`
rebuilds the same samples from the continuous-time waveforms so the two can
be checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .channel import ChannelSet, mimo_channel_matrix, subcarrier_gains
from .frame_timing import (FrameTiming, TimingError, candidate_interval, sampling_times,
                           validate_timing)

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class SamplingMatrix:
    matrix: np.ndarray
    times: np.ndarray
    user: int | None = None
    m: int | None = None

    @property
    def shape(self):
        return self.matrix.shape


def sampling_matrix(timing: FrameTiming, times, f_c: float, user=None, m=None,
                    strict=True) -> SamplingMatrix:
    """G x 2N matrix with entry (v, n) = exp(j 2 pi f_n t_v).

    The carrier phase is applied as a per-row factor, which keeps the
    baseband Vandermonde part accurate at a 2.4 GHz carrier.
    """
    times = np.asarray(times, dtype=np.float64)
    if strict:
        if times.size < timing.two_n:
            raise ValueError(f"need at least 2N={timing.two_n} sampling times")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sampling times must be strictly increasing (no duplicates)")
    base = _accel.phase_matrix(times, timing.subcarrier_indices() * timing.delta_f)
    carrier = np.exp(2j * np.pi * np.mod(f_c * times, 1.0))
    return SamplingMatrix(carrier[:, None] * base, times, user, m)


def numerical_rank(singular_values, rtol=RANK_RTOL):
    s = np.asarray(singular_values)
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


@dataclass(frozen=True)
class EquivalentChannel:
    """Product of a sampling matrix and a (block) channel matrix, with its SVD.

    ``singular_values`` are the square roots of the subchannel gains
    ``eigenvalues``; ``u`` is the full left factor and ``vh`` the right one.
    """

    V: SamplingMatrix
    H: np.ndarray
    product: np.ndarray
    singular_values: np.ndarray
    u: np.ndarray | None = None
    vh: np.ndarray | None = None

    @property
    def eigenvalues(self):
        return self.singular_values ** 2

    @property
    def n_inputs(self):
        return self.product.shape[1]

    def rank(self, rtol=RANK_RTOL):
        return numerical_rank(self.singular_values, rtol)

    def reconstruction_error(self):
        """Relative Frobenius error of ``U S V^H`` against the product."""
        if self.u is None:
            raise ValueError("singular vectors were not computed")
        k = self.singular_values.size
        rebuilt = (self.u[:, :k] * self.singular_values) @ self.vh[:k]
        return np.linalg.norm(rebuilt - self.product) / np.linalg.norm(self.product)


def _decompose(V, H, product, compute_uv):
    if compute_uv:
        u, s, vh = np.linalg.svd(product, full_matrices=True)
        return EquivalentChannel(V, H, product, s, u, vh)
    s = np.linalg.svd(product, compute_uv=False)
    return EquivalentChannel(V, H, product, s)


def equivalent_channel_siso(V: SamplingMatrix, H, compute_uv=True) -> EquivalentChannel:
    """``V @ H`` for a diagonal H given as a matrix or as its diagonal."""
    H = np.asarray(H)
    gains = np.diag(H) if H.ndim == 2 else H
    if gains.size != V.shape[1]:
        raise ValueError(f"channel has {gains.size} subcarriers, V has {V.shape[1]} columns")
    return _decompose(V, H, V.matrix * gains[None, :], compute_uv)


def equivalent_channel_mimo(V: SamplingMatrix, Hm, k_rx: int, compute_uv=True) -> EquivalentChannel:
    """``blockdiag(V, ..., V) @ H_mimo`` with one V block per receive antenna."""
    Hm = np.asarray(Hm)
    g, two_n = V.shape
    if Hm.shape[0] != two_n * k_rx or Hm.shape[1] % two_n:
        raise ValueError(f"MIMO channel shape {Hm.shape} incompatible with V {V.shape} and K_R={k_rx}")
    product = np.empty((g * k_rx, Hm.shape[1]), dtype=np.complex128)
    for q in range(k_rx):
        rows = Hm[q * two_n:(q + 1) * two_n]
        product[q * g:(q + 1) * g] = V.matrix @ rows
    return _decompose(V, Hm, product, compute_uv)


def receiver_channels(timing: FrameTiming, cs: ChannelSet, user: int, f_c: float,
                      compute_uv=True, extrema=None, bounds="exact"):
    """Equivalent channels seen by ``user`` for every symbol period of the block."""
    ext = cs.delay_extrema() if extrema is None else extrema
    Hm = mimo_channel_matrix(cs, 3 - user, user, timing, f_c)
    k_rx = cs.n_rx[user - 1]
    out = []
    for m in range(timing.m_blocks):
        ci = candidate_interval(timing, ext, user, m, bounds)
        V = sampling_matrix(timing, sampling_times(timing, ci), f_c, user, m)
        out.append(equivalent_channel_mimo(V, Hm, k_rx, compute_uv))
    return out


@dataclass(frozen=True)
class SymbolBlock:
    """Transmit symbols of one user, shape (M, K_T, 2N)."""

    symbols: np.ndarray
    indices: np.ndarray | None = None
    constellation: str = "qpsk"

    def __post_init__(self):
        x = np.asarray(self.symbols, dtype=np.complex128)
        if x.ndim == 1:
            x = x[None, None, :]
        elif x.ndim == 2:
            x = x[:, None, :]
        if not np.all(np.isfinite(x)):
            raise ValueError("symbols must be finite")
        object.__setattr__(self, "symbols", x)

    @property
    def m_blocks(self):
        return self.symbols.shape[0]

    def vector(self, m):
        """Antenna-stacked vector ``[X_1; ...; X_KT]`` of period ``m``."""
        return self.symbols[m].reshape(-1)


@dataclass(frozen=True)
class SampleBlock:
    """Received samples, shape (M, K_R, G)."""

    samples: np.ndarray
    noise_var: float

    def vector(self, m):
        return self.samples[m].reshape(-1)


def simulate_block(eq, X: SymbolBlock, noise_var: float, rng=None) -> SampleBlock:
    """Draw ``Y_m = (V H)_m X_m + Z_m`` for every period of the block.

    ``eq`` is one :class:`EquivalentChannel` (reused for all periods) or a
    sequence with one entry per period.
    """
    if noise_var < 0:
        raise ValueError("noise variance must be non-negative")
    eqs = [eq] * X.m_blocks if isinstance(eq, EquivalentChannel) else list(eq)
    if len(eqs) != X.m_blocks:
        raise ValueError(f"{len(eqs)} channels for {X.m_blocks} symbol periods")
    k_rx = eqs[0].H.shape[0] // eqs[0].V.shape[1] if eqs[0].H.ndim == 2 else 1
    rows = eqs[0].product.shape[0]
    y = np.empty((X.m_blocks, rows), dtype=np.complex128)
    for m, e in enumerate(eqs):
        x = X.vector(m)
        if x.size != e.n_inputs:
            raise ValueError(f"symbol vector length {x.size} != channel inputs {e.n_inputs}")
        y[m] = e.product @ x
    if noise_var > 0:
        if rng is None:
            raise ValueError("an rng is required when noise_var > 0")
        z = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        y += np.sqrt(noise_var / 2) * z
    return SampleBlock(y.reshape(X.m_blocks, k_rx, -1), float(noise_var))


TRANSITIONS = {"linear": 0, "raised_cosine": 1}


def oracle_carrier(timing: FrameTiming, factor=64):
    """Scaled-down carrier ``factor * N * delta_f`` for the time-domain oracle.

    A linear ramp has a slope discontinuity that can sit exactly on the last
    candidate instant; band-limited interpolation errs there by O(grid step),
    so the carrier (which sets the grid step at fixed oversampling) is kept
    high enough for that error to stay well under 1e-3.
    """
    return factor * timing.n_half * timing.delta_f


def time_domain_oracle(timing: FrameTiming, cs: ChannelSet, symbols, user: int, m: int,
                       f_c: float, transition="linear", oversample=32, rx=0,
                       half_width=32, beta=10.0, bounds="exact"):
    """Sample the continuous-time received signal at the candidate instants.

    Both users' waveforms are synthesised piecewise (data, zero interval and
    rise/fall ramps), every path of every link into antenna ``rx`` of ``user``
    is applied, self-interference included, and the sum is evaluated on a
    uniform grid at ``oversample`` times the Nyquist rate of the highest tone.
    The candidate instants are then read off with Kaiser-windowed sinc
    interpolation. Noise is not added.

    ``symbols`` maps user -> (M, K_T, 2N) array or :class:`SymbolBlock`.
    Returns ``(instants, samples)``.
    """
    if not validate_timing(timing, cs.delay_extrema()).ok:
        raise TimingError("oracle requires a timing that passes validation")
    if oversample < 8:
        raise ValueError("oversample must be at least 8x Nyquist")
    ramp = TRANSITIONS[transition]
    ext = cs.delay_extrema()
    ci = candidate_interval(timing, ext, user, m, bounds)
    instants = sampling_times(timing, ci)
    freqs = timing.subcarrier_freqs(f_c)
    fs = oversample * 2.0 * np.max(np.abs(freqs))
    h = 1.0 / fs
    t0 = instants[0] - (half_width + 2) * h
    n_grid = int(np.ceil((instants[-1] - t0) / h)) + half_width + 3
    grid = t0 + h * np.arange(n_grid)
    span_hi = timing.m_blocks * timing.t_symbol + ext.tau_spread + ext.as_array().max()
    if grid[0] < -timing.t_symbol or grid[-1] > span_hi + timing.t_symbol:
        raise TimingError("sampling instants fall outside the simulated span")

    y = np.zeros(n_grid, dtype=np.complex128)
    for src in (1, 2):
        block = symbols[src]
        sym = np.asarray(getattr(block, "symbols", block), dtype=np.complex128)
        # only periods m-1..m+1 can reach the candidate interval
        local = np.zeros_like(sym)
        lo, hi = max(m - 1, 0), min(m + 2, sym.shape[0])
        local[lo:hi] = sym[lo:hi]
        for p in range(cs.n_tx[src - 1]):
            ch = cs[(src, user, p, rx)]
            tx = np.ascontiguousarray(local[:, p, :])
            for a, tau in zip(ch.amps, ch.delays):
                y += a * _accel.zims_waveform(grid - tau, tx, freqs, timing.t_symbol,
                                              timing.t_zero, timing.t_data, timing.t_trans,
                                              src, ramp)
    samples = _accel.kaiser_sinc_interp(y, t0, h, instants, half_width, beta)
    return instants, samples


def matrix_domain_samples(timing: FrameTiming, cs: ChannelSet, symbols, user: int, m: int,
                          f_c: float, rx=0, bounds="exact"):
    """Noiseless ``sum_p V H^{p,rx} X_p`` for one receive antenna."""
    ci = candidate_interval(timing, cs.delay_extrema(), user, m, bounds)
    V = sampling_matrix(timing, sampling_times(timing, ci), f_c, user, m)
    gains = subcarrier_gains(cs, 3 - user, user, timing, f_c)
    block = symbols[3 - user]
    sym = np.asarray(getattr(block, "symbols", block))
    x = np.sum(gains[:, rx, :].T * sym[m], axis=0)
    return V.times, V.matrix @ x
