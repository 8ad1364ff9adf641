"""Frame structure, SI-free/candidate intervals and sampling instants.

Symbol periods are indexed from 0; period ``m`` spans ``[m*T_S, (m+1)*T_S)``.
User 1 transmits data first and goes silent at the end of each period, user 2
is silent first and transmits data afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel

# relative slack when checking the non-strict upper bound T_Z <= T_D - 2*delta
_EDGE_RTOL = 1e-12


class TimingError(ValueError):
    """Raised when a frame timing cannot be used for the requested operation."""


class NonFiniteTimingError(TimingError):
    pass


@dataclass(frozen=True)
class FrameTiming:
    """All timing scalars of one ZIMS frame.

    Parameters
    ----------
    delta_f : float
        Subcarrier spacing in Hz; the data interval is ``1/delta_f``.
    n_half : int
        Half the number of subcarriers (``2*n_half`` tones in total).
    t_zero : float
        Zero-interval length in seconds.
    t_trans : float
        Upper bound of a rise or fall transition (used for both).
    m_blocks : int
        Symbol periods per fading block.
    g_samples : int, optional
        Samples per candidate interval; defaults to ``2*n_half``.
    """

    delta_f: float
    n_half: int
    t_zero: float
    t_trans: float
    m_blocks: int = 1
    g_samples: int | None = None
    t_data: float = field(init=False)
    t_symbol: float = field(init=False)
    alpha: float = field(init=False)

    def __post_init__(self):
        scalars = (self.delta_f, self.t_zero, self.t_trans)
        if not all(math.isfinite(x) for x in scalars):
            raise NonFiniteTimingError(f"non-finite timing value in {scalars}")
        if self.delta_f <= 0 or self.t_zero <= 0 or self.t_trans <= 0:
            raise TimingError("delta_f, t_zero and t_trans must be strictly positive")
        if self.n_half < 1:
            raise TimingError("n_half must be >= 1")
        if self.m_blocks < 1:
            raise TimingError("m_blocks must be >= 1")
        g = 2 * self.n_half if self.g_samples is None else int(self.g_samples)
        if g < 2 * self.n_half:
            raise TimingError(f"g_samples={g} must be >= 2N={2 * self.n_half}")
        t_data = 1.0 / self.delta_f
        object.__setattr__(self, "g_samples", g)
        object.__setattr__(self, "t_data", t_data)
        object.__setattr__(self, "t_symbol", t_data + 2.0 * self.t_trans + self.t_zero)
        object.__setattr__(self, "alpha", (self.t_zero + 2.0 * self.t_trans) / t_data)

    @classmethod
    def from_alpha(cls, alpha, delta_f, n_half, t_trans, m_blocks=1, g_samples=None):
        """Build a timing whose zero interval realises the overhead ratio ``alpha``."""
        t_zero = alpha / delta_f - 2.0 * t_trans
        return cls(delta_f, n_half, t_zero, t_trans, m_blocks, g_samples)

    @property
    def two_n(self):
        return 2 * self.n_half

    def subcarrier_indices(self):
        return np.arange(-self.n_half + 1, self.n_half + 1)

    def subcarrier_freqs(self, f_c):
        return f_c + self.subcarrier_indices() * self.delta_f


@dataclass(frozen=True)
class DelayExtrema:
    """Per-link path-delay extrema plus the global delay spread.

    ``si_1``/``si_2`` are the self-interference links of user 1 and 2,
    ``fwd`` is user 1 -> user 2 and ``bwd`` is user 2 -> user 1.
    """

    tau_max_si_1: float
    tau_min_si_1: float
    tau_max_si_2: float
    tau_min_si_2: float
    tau_max_fwd: float
    tau_min_fwd: float
    tau_max_bwd: float
    tau_min_bwd: float
    tau_spread: float

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)) or not math.isfinite(self.tau_spread):
            raise NonFiniteTimingError("non-finite delay extrema")
        if np.any(vals < 0) or self.tau_spread < 0:
            raise ValueError("delays must be non-negative")
        pairs = vals.reshape(4, 2)
        if np.any(pairs[:, 0] < pairs[:, 1]):
            raise ValueError("each link maximum must be >= its minimum")
        if np.any(pairs[:, 0] - pairs[:, 1] > self.tau_spread * (1 + 1e-12)):
            raise ValueError("tau_spread must bound every per-link spread")

    @classmethod
    def from_links(cls, si_1, si_2, fwd, bwd):
        """Build extrema from the raw delay arrays of the four link directions."""
        links = [np.asarray(d, dtype=float).ravel() for d in (si_1, si_2, fwd, bwd)]
        every = np.concatenate(links)
        vals = []
        for d in links:
            vals += [float(d.max()), float(d.min())]
        return cls(*vals, float(every.max() - every.min()))

    @classmethod
    def zero(cls):
        return cls(*([0.0] * 9))

    @classmethod
    def worst_case(cls, tau_max):
        """Profile-free bound: every link may span the full ``[0, tau_max]``."""
        return cls(*([tau_max, 0.0] * 4), tau_max)

    def as_array(self):
        return np.array([
            self.tau_max_si_1, self.tau_min_si_1, self.tau_max_si_2, self.tau_min_si_2,
            self.tau_max_fwd, self.tau_min_fwd, self.tau_max_bwd, self.tau_min_bwd,
        ])


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @property
    def length(self):
        return self.hi - self.lo

    @property
    def empty(self):
        return not self.hi > self.lo

    def contains(self, t):
        return self.lo <= t < self.hi

    def __contains__(self, t):
        return self.contains(t)


@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    margin: float
    text: str


@dataclass(frozen=True)
class ValidationReport:
    conditions: tuple

    @property
    def ok(self):
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name):
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def format(self):
        lines = []
        for c in self.conditions:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"[{mark}] {c.name:<20s} {c.text:<38s} margin={c.margin:+.4e} s")
        lines.append("overall: " + ("PASS" if self.ok else "FAIL"))
        return "\n".join(lines)


def validate_timing(t: FrameTiming, d: DelayExtrema) -> ValidationReport:
    """Check every timing condition and report pass/fail with margins."""
    td, tz, dl, tau = t.t_data, t.t_zero, t.t_trans, d.tau_spread
    for x in (td, tz, dl, tau):
        if not math.isfinite(x):
            raise NonFiniteTimingError("non-finite timing input")
    upper = td - tz - 2 * dl
    # upper bound is met with equality at alpha = 1
    upper_ok = upper >= -_EDGE_RTOL * td
    lower = tz - 2 * dl - tau
    conds = (
        Condition("symbol_rate", upper_ok, upper, "T_D >= T_Z + 2*delta"),
        Condition("si_free", tz > tau, tz - tau, "T_Z > tau_max"),
        Condition("flat_subchannel", td > tau, td - tau, "T_D > tau_max"),
        Condition("candidate_nonempty", lower > 0, lower, "T_Z > 2*delta + tau_max"),
        Condition("combined", lower > 0 and upper_ok, min(lower, upper),
                  "tau_max + 2*delta < T_Z <= T_D - 2*delta"),
    )
    return ValidationReport(conds)


def feasible_alpha_range(t_data, t_trans, tau_max):
    """Open lower / closed upper bounds on alpha implied by the timing conditions."""
    return (tau_max + 4 * t_trans) / t_data, 1.0


def _check_user_m(t, user, m):
    if user not in (1, 2):
        raise ValueError(f"user must be 1 or 2, got {user}")
    if not 0 <= m < t.m_blocks:
        raise IndexError(f"symbol period {m} outside 0..{t.m_blocks - 1}")


def si_free_interval(t: FrameTiming, d: DelayExtrema, user: int, m: int) -> Interval:
    report = validate_timing(t, d)
    if not report.ok:
        raise TimingError("timing fails validation:\n" + report.format())
    _check_user_m(t, user, m)
    ts, tz = t.t_symbol, t.t_zero
    if user == 1:
        return Interval((m + 1) * ts - tz + d.tau_max_si_1, (m + 1) * ts + d.tau_min_si_1)
    return Interval(m * ts + d.tau_max_si_2, m * ts + tz + d.tau_min_si_2)


BOUNDS = ("exact", "union")


def _desired_extrema(d: DelayExtrema, user, bounds):
    """(early, late) delays that bound the desired data window of ``user``.

    ``exact`` keeps only instants where every desired path is inside its data
    interval, which is what the matrix model needs. ``union`` is the looser
    form that lets the earliest path start, and the latest path finish, the
    window; its edge samples can then fall on a transition of another path.
    """
    if bounds not in BOUNDS:
        raise ValueError(f"bounds must be one of {BOUNDS}, got {bounds!r}")
    hi, lo = (d.tau_max_bwd, d.tau_min_bwd) if user == 1 else (d.tau_max_fwd, d.tau_min_fwd)
    return (lo, hi) if bounds == "union" else (hi, lo)


def data_interval(t: FrameTiming, d: DelayExtrema, user: int, m: int, bounds="exact") -> Interval:
    """Window in which the desired signal seen by ``user`` is inside its data interval."""
    _check_user_m(t, user, m)
    start, end = _desired_extrema(d, user, bounds)
    ts, tz, dl = t.t_symbol, t.t_zero, t.t_trans
    if user == 1:
        return Interval(m * ts + tz + dl + start, (m + 1) * ts - dl + end)
    return Interval(m * ts + dl + start, m * ts + dl + t.t_data + end)


def candidate_interval(t: FrameTiming, d: DelayExtrema, user: int, m: int,
                       bounds="exact") -> Interval:
    """Candidate interval of ``user`` in period ``m``.

    Intersection of the transition-padded SI-free interval with
    :func:`data_interval`. No validation is required: when the timing
    conditions fail the result may be empty (``hi <= lo``), which is returned
    rather than raised.
    """
    _check_user_m(t, user, m)
    start, end = _desired_extrema(d, user, bounds)
    ts, tz, dl = t.t_symbol, t.t_zero, t.t_trans
    if user == 1:
        hi = min((m + 1) * ts + d.tau_min_si_1 - dl, (m + 1) * ts - dl + end)
        lo = max((m + 1) * ts - tz + d.tau_max_si_1 + dl, m * ts + tz + dl + start)
    else:
        hi = min(m * ts + tz + d.tau_min_si_2 - dl, m * ts + dl + t.t_data + end)
        lo = max(m * ts + d.tau_max_si_2 + dl, m * ts + dl + start)
    return Interval(lo, hi)


def candidate_lengths(t: FrameTiming, extrema, m=0, bounds="exact"):
    """Vectorised candidate lengths for many profiles.

    ``extrema`` is an (n, 8) array in :meth:`DelayExtrema.as_array` column
    order. Returns an (n, 2) array: column 0 is user 1, column 1 is user 2.
    """
    if bounds not in BOUNDS:
        raise ValueError(f"bounds must be one of {BOUNDS}, got {bounds!r}")
    ext = np.asarray(extrema, dtype=np.float64)
    if ext.ndim != 2 or ext.shape[1] != 8:
        raise ValueError("extrema must have shape (n, 8)")
    if bounds == "exact":
        # the kernel evaluates the union form; swapping the desired-link
        # max/min columns turns it into the exact form
        ext = ext[:, [0, 1, 2, 3, 5, 4, 7, 6]]
    ext = np.ascontiguousarray(ext)
    return _accel.candidate_lengths(ext, t.t_symbol, t.t_zero, t.t_data, t.t_trans, float(m))


def sampling_times(t: FrameTiming, ci: Interval) -> np.ndarray:
    """G equally spaced instants on ``(lo, hi]`` of a candidate interval."""
    if ci.empty:
        raise TimingError(f"cannot sample an empty candidate interval {ci}")
    g = t.g_samples
    v = np.arange(1, g + 1)
    return ci.lo + ci.length * v / g
