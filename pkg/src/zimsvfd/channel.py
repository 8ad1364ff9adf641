"""Block-fading multipath channels for the four link directions."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .frame_timing import DelayExtrema, FrameTiming

LINKS = ((1, 1), (1, 2), (2, 1), (2, 2))


@dataclass(frozen=True)
class MultipathChannel:
    """Tapped delay line ``sum_l a_l delta(t - tau_l)`` of one antenna pair.

    Users are numbered 1 and 2, antennas from 0.
    """

    amps: np.ndarray
    delays: np.ndarray
    from_user: int = 1
    to_user: int = 2
    tx: int = 0
    rx: int = 0

    def __post_init__(self):
        amps = np.atleast_1d(np.asarray(self.amps, dtype=np.complex128))
        delays = np.atleast_1d(np.asarray(self.delays, dtype=np.float64))
        if amps.size < 1 or amps.shape != delays.shape:
            raise ValueError("need at least one path and matching amp/delay lengths")
        if not np.all(np.isfinite(delays)) or np.any(delays < 0):
            raise ValueError("path delays must be finite and non-negative")
        amps.setflags(write=False)
        delays.setflags(write=False)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "delays", delays)

    @property
    def n_paths(self):
        return self.amps.size


def freq_gain(ch: MultipathChannel, f_n):
    """Frequency response ``sum_l a_l exp(-j 2 pi f tau_l)`` at ``f_n`` (scalar or array)."""
    f = np.asarray(f_n, dtype=np.float64)
    phase = np.exp(-2j * np.pi * np.multiply.outer(f, ch.delays))
    return phase @ ch.amps


def freq_channel_matrix(ch: MultipathChannel, timing: FrameTiming, f_c: float) -> np.ndarray:
    """Diagonal 2N x 2N frequency-domain matrix ordered n = -N+1..N."""
    return np.diag(freq_gain(ch, timing.subcarrier_freqs(f_c)))


@dataclass(frozen=True)
class ChannelSpec:
    """Statistics used to draw a :class:`ChannelSet`.

    ``n_tx``/``n_rx`` give the antenna counts of (user 1, user 2).
    """

    var_si: float = 1.0
    var_desired: float = 1e-10
    n_paths: int = 4
    tau_max: float = 100e-9
    n_tx: tuple = (1, 1)
    n_rx: tuple = (1, 1)

    def variance(self, i, k):
        return self.var_si if i == k else self.var_desired


class ChannelSet:
    """Channels for every (from_user, to_user, tx, rx) combination."""

    def __init__(self, channels, n_tx, n_rx):
        self.n_tx = tuple(int(x) for x in n_tx)
        self.n_rx = tuple(int(x) for x in n_rx)
        self._channels = dict(channels)
        missing = [key for key in self.keys() if key not in self._channels]
        if missing:
            raise ValueError(f"channel set incomplete, missing {missing[:4]}")

    def keys(self):
        for i, k in LINKS:
            for p in range(self.n_tx[i - 1]):
                for q in range(self.n_rx[k - 1]):
                    yield (i, k, p, q)

    def __getitem__(self, key):
        return self._channels[tuple(key)]

    def __iter__(self):
        return (self._channels[key] for key in self.keys())

    def link_delays(self, i, k):
        return np.concatenate([self[(i, k, p, q)].delays
                               for p in range(self.n_tx[i - 1])
                               for q in range(self.n_rx[k - 1])])

    def delay_extrema(self) -> DelayExtrema:
        """Extrema over all paths and antenna pairs of each link direction."""
        return DelayExtrema.from_links(self.link_delays(1, 1), self.link_delays(2, 2),
                                       self.link_delays(1, 2), self.link_delays(2, 1))

    def scaled(self, factor):
        """Copy with every path amplitude multiplied by ``factor``."""
        chans = {key: MultipathChannel(ch.amps * factor, ch.delays, *key)
                 for key, ch in self._channels.items()}
        return ChannelSet(chans, self.n_tx, self.n_rx)

    def to_dict(self):
        links = []
        for key in self.keys():
            ch = self[key]
            links.append({
                "from_user": key[0], "to_user": key[1], "tx": key[2], "rx": key[3],
                "amps": [[float(a.real), float(a.imag)] for a in ch.amps],
                "delays": [float(x) for x in ch.delays],
            })
        return {"n_tx": list(self.n_tx), "n_rx": list(self.n_rx), "links": links}

    @classmethod
    def from_dict(cls, data):
        chans = {}
        for rec in data["links"]:
            key = (rec["from_user"], rec["to_user"], rec["tx"], rec["rx"])
            amps = np.array([complex(re, im) for re, im in rec["amps"]])
            chans[key] = MultipathChannel(amps, np.array(rec["delays"]), *key)
        return cls(chans, data["n_tx"], data["n_rx"])

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))


def draw_channel_set(spec: ChannelSpec, rng: np.random.Generator) -> ChannelSet:
    """Draw Rayleigh multipath channels for every link and antenna pair.

    Path amplitudes are CN(0, var/L), so the per-subcarrier gain of a link is
    CN(0, var). Delays are uniform on ``[0, tau_max]``.
    """
    if spec.n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if spec.var_si <= 0 or spec.var_desired <= 0:
        raise ValueError("channel variances must be positive")
    if spec.tau_max < 0:
        raise ValueError("tau_max must be non-negative")
    L = spec.n_paths
    chans = {}
    for i, k in LINKS:
        scale = np.sqrt(spec.variance(i, k) / (2 * L))
        for p in range(spec.n_tx[i - 1]):
            for q in range(spec.n_rx[k - 1]):
                amps = scale * (rng.standard_normal(L) + 1j * rng.standard_normal(L))
                delays = rng.uniform(0.0, spec.tau_max, L)
                chans[(i, k, p, q)] = MultipathChannel(amps, delays, i, k, p, q)
    return ChannelSet(chans, spec.n_tx, spec.n_rx)


def subcarrier_gains(cs: ChannelSet, from_user, to_user, timing: FrameTiming, f_c):
    """Per-subcarrier MIMO gains as an array of shape (2N, K_R, K_T)."""
    freqs = timing.subcarrier_freqs(f_c)
    kt, kr = cs.n_tx[from_user - 1], cs.n_rx[to_user - 1]
    out = np.empty((freqs.size, kr, kt), dtype=np.complex128)
    for p in range(kt):
        for q in range(kr):
            out[:, q, p] = freq_gain(cs[(from_user, to_user, p, q)], freqs)
    return out


def mimo_channel_matrix(cs: ChannelSet, from_user, to_user, timing: FrameTiming, f_c) -> np.ndarray:
    """Block matrix of per-antenna diagonal channels; block (q, p) holds tx p -> rx q."""
    gains = subcarrier_gains(cs, from_user, to_user, timing, f_c)
    two_n, kr, kt = gains.shape
    out = np.zeros((two_n * kr, two_n * kt), dtype=np.complex128)
    idx = np.arange(two_n)
    for q in range(kr):
        for p in range(kt):
            out[q * two_n + idx, p * two_n + idx] = gains[:, q, p]
    return out
