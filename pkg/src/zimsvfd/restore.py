"""Symbol restoration: SVD precoding/decoding, MIMO detectors and QPSK BER.

Subchannel gains ``lam`` are eigenvalues of ``(VH)^H (VH)``, so the decoded
subchannel ``k`` reads ``sqrt(lam_k) * X_k + noise``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from . import _accel
from .linksim import EquivalentChannel, SymbolBlock

# subchannels weaker than this fraction of the strongest are not used
UNUSABLE_RTOL = 1e-12


@dataclass(frozen=True)
class Constellation:
    """Unit average power constellation with integer labels.

    ``bits_per_symbol`` bits map to the label; for QPSK and 16QAM the
    mapping is Gray so neighbouring points differ in one bit.
    """

    name: str
    points: np.ndarray
    bits_per_symbol: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        if pts.size != 2 ** self.bits_per_symbol:
            raise ValueError("constellation size must be 2**bits_per_symbol")
        if np.unique(np.round(pts, 12)).size != pts.size:
            raise ValueError("constellation points must be distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self):
        return self.points.size

    def modulate(self, indices):
        return self.points[np.asarray(indices)]

    def demodulate(self, z):
        """Nearest point labels; ties go to the lowest label."""
        z = np.asarray(z, dtype=np.complex128)
        flat = _accel.nearest_index(np.ascontiguousarray(z.ravel()), self.points)
        return flat.reshape(z.shape)

    def bits(self, indices):
        """Label bits, most significant first, shape ``indices.shape + (b,)``."""
        idx = np.asarray(indices)[..., None]
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        return (idx >> shifts) & 1


def _qpsk():
    # label = 2*b0 + b1, b0 on I and b1 on Q
    labels = np.arange(4)
    b0, b1 = labels >> 1, labels & 1
    return Constellation("qpsk", ((1 - 2 * b0) + 1j * (1 - 2 * b1)) / np.sqrt(2), 2)


def _qam16():
    # 2-bit Gray label per axis: 00 -> 3, 01 -> 1, 11 -> -1, 10 -> -3
    g2a = {0: 3, 1: 1, 3: -1, 2: -3}
    pts = [g2a[label >> 2] + 1j * g2a[label & 3] for label in range(16)]
    return Constellation("16qam", np.array(pts) / np.sqrt(10), 4)


CONSTELLATIONS = {"qpsk": _qpsk(), "16qam": _qam16()}


def get_constellation(name="qpsk") -> Constellation:
    try:
        return CONSTELLATIONS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown constellation {name!r}; choose from {sorted(CONSTELLATIONS)}") from None


def draw_symbol_block(m_blocks, k_tx, two_n, rng, power=1.0, constellation="qpsk") -> SymbolBlock:
    """Random symbols scaled so each subcarrier carries average power ``power``."""
    const = get_constellation(constellation)
    idx = rng.integers(0, const.size, size=(m_blocks, k_tx, two_n))
    return SymbolBlock(np.sqrt(power) * const.modulate(idx), idx, const.name)


@dataclass(frozen=True)
class ParallelChannels:
    """Decoupled subchannels after SVD processing."""

    eigenvalues: np.ndarray
    powers: np.ndarray
    noise_var: float

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=np.float64)
        p = np.broadcast_to(np.asarray(self.powers, dtype=np.float64), lam.shape).copy()
        if np.any(lam < 0):
            raise ValueError("subchannel gains must be non-negative")
        if np.any(p < 0):
            raise ValueError("powers must be non-negative")
        if np.any(np.diff(lam) > 0):
            raise ValueError("subchannel gains must be sorted in descending order")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "powers", p)

    @property
    def total_power(self):
        return float(self.powers.sum())

    def usable(self, rtol=UNUSABLE_RTOL):
        lam = self.eigenvalues
        if lam.size == 0 or lam[0] <= 0:
            return np.zeros(lam.shape, dtype=bool)
        return lam > rtol * lam[0]


def svd_precode(eq: EquivalentChannel, x_tilde):
    """``X = V_hat @ X_tilde`` where ``V_hat`` is the right singular factor."""
    if eq.vh is None:
        raise ValueError("equivalent channel has no singular vectors")
    x_tilde = np.asarray(x_tilde)
    if x_tilde.shape[0] != eq.vh.shape[0]:
        raise ValueError(f"coded vector length {x_tilde.shape[0]} != {eq.vh.shape[0]}")
    return eq.vh.conj().T @ x_tilde


def svd_decode(eq: EquivalentChannel, y):
    """``Y_tilde = U^H @ Y``; the first ``n_inputs`` entries carry data."""
    if eq.u is None:
        raise ValueError("equivalent channel has no singular vectors")
    y = np.asarray(y)
    if y.shape[0] != eq.u.shape[0]:
        raise ValueError(f"sample vector length {y.shape[0]} != {eq.u.shape[0]}")
    return eq.u.conj().T @ y


def parallel_channels(eq: EquivalentChannel, powers, noise_var) -> ParallelChannels:
    lam = np.zeros(eq.n_inputs)
    lam[:eq.singular_values.size] = eq.eigenvalues
    return ParallelChannels(lam, powers, noise_var)


def detect_nearest(y_tilde, eigenvalues, constellation="qpsk", power=1.0):
    """Per-subchannel nearest-point detection on ``y / sqrt(lam * power)``.

    Returns labels; unusable subchannels (zero or negligible gain) get -1.
    """
    const = get_constellation(constellation) if isinstance(constellation, str) else constellation
    y = np.asarray(y_tilde, dtype=np.complex128)
    lam = np.asarray(eigenvalues, dtype=np.float64)
    lam_max = lam.max() if lam.size else 0.0
    ok = lam > UNUSABLE_RTOL * lam_max if lam_max > 0 else np.zeros(lam.shape, dtype=bool)
    out = np.full(y.shape, -1, dtype=np.int64)
    if np.any(ok):
        scale = np.sqrt(lam[ok] * power)
        out[ok] = const.demodulate(y[ok] / scale)
    return out


def zf_detect(eq: EquivalentChannel, y, constellation="qpsk", power=1.0, rtol=1e-10):
    """Zero-forcing estimate and labels; needs full column rank."""
    if eq.rank(rtol) < eq.n_inputs:
        raise np.linalg.LinAlgError(
            f"zero forcing needs full column rank, rank {eq.rank(rtol)} < {eq.n_inputs}")
    est = np.linalg.lstsq(eq.product, np.asarray(y), rcond=None)[0]
    const = get_constellation(constellation)
    return est, const.demodulate(est / np.sqrt(power))


def mmse_detect(eq: EquivalentChannel, y, noise_var, powers, constellation="qpsk"):
    """Linear MMSE estimate with prior covariance ``diag(powers)``, and labels."""
    A = eq.product
    p = np.broadcast_to(np.asarray(powers, dtype=np.float64), (A.shape[1],))
    ap = A * p[None, :]
    cov = ap @ A.conj().T + noise_var * np.eye(A.shape[0])
    est = ap.conj().T @ np.linalg.solve(cov, np.asarray(y))
    const = get_constellation(constellation)
    pc = p.reshape((-1,) + (1,) * (est.ndim - 1))
    norm = np.where(pc > 0, est / np.sqrt(np.where(pc > 0, pc, 1.0)), 0.0)
    return est, const.demodulate(norm)


def mmse_sic_detect(eq: EquivalentChannel, y, noise_var, powers, constellation="qpsk"):
    """MMSE with successive cancellation, strongest post-detection SINR first.

    Extension beyond the linear detectors: each stage detects one stream,
    subtracts it and recomputes the MMSE filter on the remaining columns.
    """
    A = np.array(eq.product)
    p = np.broadcast_to(np.asarray(powers, dtype=np.float64), (A.shape[1],)).copy()
    const = get_constellation(constellation)
    r = np.array(y, dtype=np.complex128)
    remaining = list(range(A.shape[1]))
    labels = np.empty(A.shape[1], dtype=np.int64)
    est = np.empty(A.shape[1], dtype=np.complex128)
    while remaining:
        cols = A[:, remaining]
        pr = p[remaining]
        cov = (cols * pr) @ cols.conj().T + noise_var * np.eye(A.shape[0])
        w = np.linalg.solve(cov, cols)  # columns are unnormalised MMSE filters
        gain = np.real(np.sum(cols.conj() * w, axis=0))
        sinr = pr * gain / np.maximum(1.0 - pr * gain, 1e-300)
        j = int(np.argmax(sinr))
        k = remaining[j]
        e = pr[j] * (w[:, j].conj() @ r)
        est[k] = e
        labels[k] = const.demodulate(np.array([e / np.sqrt(p[k]) if p[k] > 0 else 0.0]))[0]
        r = r - A[:, k] * np.sqrt(p[k]) * const.points[labels[k]]
        remaining.pop(j)
    return est, labels


def snr_per_subchannel(pc: ParallelChannels):
    if pc.noise_var <= 0:
        raise ValueError("noise variance must be positive")
    return pc.powers * pc.eigenvalues / pc.noise_var


def qfunc(x):
    return 0.5 * erfc(np.asarray(x, dtype=np.float64) / np.sqrt(2.0))


def qpsk_ber(gamma):
    """Gray QPSK bit error rate ``Q(sqrt(gamma))``."""
    g = np.asarray(gamma, dtype=np.float64)
    if np.any(g < 0) or np.any(np.isnan(g)):
        raise ValueError("SNR must be non-negative")
    out = 0.5 * erfc(np.sqrt(g / 2.0))
    return float(out) if out.ndim == 0 else out


def qpsk_ser(gamma):
    """Symbol error rate of Gray QPSK, ``1 - (1 - Q(sqrt(gamma)))**2``."""
    q = np.asarray(qpsk_ber(gamma))
    return 2 * q - q * q


def count_bit_errors(tx_labels, rx_labels, constellation="qpsk"):
    """Bit errors and bits compared, skipping labels marked unusable (-1)."""
    const = get_constellation(constellation)
    tx = np.asarray(tx_labels)
    rx = np.asarray(rx_labels)
    keep = rx >= 0
    diff = const.bits(tx[keep]) != const.bits(rx[keep])
    return int(diff.sum()), int(keep.sum()) * const.bits_per_symbol
