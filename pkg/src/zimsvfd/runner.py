"""Experiment configuration, Monte-Carlo sweeps and CSV results.

Every trial draws its own channels from a stream derived from the master
seed and the trial index, so the per-trial numbers do not depend on how the
trials are spread over worker processes. Aggregation is done in trial order.

Scale convention: the subcarrier spacing is fixed by a reference subcarrier
count (``delta_f = B / two_n_ref``) so that the frame timing, and hence the
feasible overhead range, matches the full-size system. Only ``two_n``
subcarriers are simulated; the total power is spread over them and the noise
stays ``N0 * B``, which keeps the per-sample SNR of the full-size system.
Capacities are scaled by ``two_n_ref / two_n`` to the full band.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import multiprocessing
import secrets
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import metrics as mt
from . import restore as rs
from .channel import ChannelSpec, draw_channel_set, subcarrier_gains
from .frame_timing import (DelayExtrema, FrameTiming, TimingError, feasible_alpha_range,
                           validate_timing)
from .linksim import receiver_channels

CSV_COLUMNS = ("experiment", "alpha", "p_bar_dbm", "two_n", "kt", "kr", "xi_db",
               "metric", "value", "stderr", "trials", "seed")

# sweep axes each per-trial metric depends on, besides (two_n_ref, antennas)
METRIC_AXES = {
    "capacity_zims": ("alpha", "p"),
    "capacity_hd": ("p",),
    "capacity_fd_perfect": ("p",),
    "capacity_rodd": ("p",),
    "capacity_fd_sic": ("p", "xi"),
    "sinr_gain_db": ("alpha", "p", "xi"),
    "ordering_ok": ("alpha", "p"),
    "ber_svd": ("alpha", "p"),
    "ber_svd_analytic": ("alpha", "p"),
    "ber_mmse": ("alpha", "p"),
}

# ratio-of-means metrics built at aggregation time
RATIO_METRICS = {
    "gain_hd": ("capacity_zims", "capacity_hd"),
    "gain_fd_sic": ("capacity_zims", "capacity_fd_sic"),
}

ALL_METRICS = tuple(METRIC_AXES) + tuple(RATIO_METRICS)

BER_METRICS = ("ber_svd", "ber_svd_analytic", "ber_mmse")

_A1 = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)

PRESETS = {
    "fig2": dict(metrics=("capacity_zims",), two_n_ref=(2048,), antennas=(1,),
                 alpha=_A1, p_bar_dbm=(37.0, 39.0, 41.0, 43.0, 45.0),
                 optimize="capacity_zims"),
    "fig3": dict(metrics=("capacity_zims", "capacity_hd", "gain_hd"), two_n_ref=(2048,),
                 antennas=(1,), alpha=_A1, p_bar_dbm=(37.0, 39.0, 41.0, 43.0, 45.0),
                 optimize="gain_hd"),
    # 2N = 256 has T_D = 12.8 us, so alpha must exceed (tau + 4 delta) / T_D = 0.602
    "fig4": dict(metrics=("capacity_zims", "capacity_hd", "gain_hd"),
                 two_n_ref=(256, 512, 1024, 2048), antennas=(1,),
                 alpha=(0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0), p_bar_dbm=(40.0,)),
    # T_D = 51.2 us puts the lower alpha bound at 0.15
    "fig5": dict(metrics=("capacity_zims",), two_n_ref=(1024,), antennas=(1, 2, 3, 4, 5),
                 alpha=(0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0), p_bar_dbm=(40.0,)),
    "fig6": dict(metrics=BER_METRICS, two_n_ref=(1024,), antennas=(2,),
                 alpha=(0.4, 0.6, 0.8, 1.0), snr_db=(20.0, 25.0, 30.0, 35.0, 40.0),
                 var_desired=1.0),
    "fig7": dict(metrics=("sinr_gain_db",), two_n_ref=(1024,), antennas=(2,), alpha=(1.0,),
                 p_bar_dbm=(30.0, 35.0, 40.0, 45.0, 50.0),
                 xi_db=(-140.0, -130.0, -120.0, -110.0, -100.0, -90.0)),
    "fig8": dict(metrics=("capacity_zims", "capacity_fd_sic", "gain_fd_sic"), two_n_ref=(1024,),
                 antennas=(2,), alpha=(0.5, 1.0), p_bar_dbm=(30.0, 35.0, 40.0, 45.0, 50.0),
                 xi_db=(-140.0, -130.0, -120.0, -110.0, -100.0, -90.0)),
    "fig9": dict(metrics=("capacity_zims", "capacity_fd_perfect", "capacity_rodd", "ordering_ok"),
                 two_n_ref=(1024,), antennas=(2,), alpha=(0.2, 0.5, 1.0),
                 p_bar_dbm=(30.0, 40.0, 50.0)),
}

EXPERIMENTS = tuple(PRESETS) + ("custom",)


class ConfigError(ValueError):
    pass


def _tuple(x, cast=float):
    if isinstance(x, str):
        parts = [p.strip() for p in x.replace(";", ",").split(",")]
        return tuple(cast(p) for p in parts if p)
    if np.isscalar(x):
        return (cast(x),)
    return tuple(cast(v) for v in x)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to run one sweep. See ``README.md`` for the file schema."""

    experiment: str = "custom"
    metrics: tuple = ("capacity_zims",)
    trials: int = 200
    seed: int | None = None
    workers: int = 1
    # system
    bandwidth: float = 20e6
    n0_dbm_hz: float = -150.0
    carrier: float = 2.4e9
    t_trans: float = 1.9e-6
    two_n: int | None = 128
    two_n_ref: tuple = (2048,)
    m_blocks: int = 1
    g_samples: int | None = None
    # channel
    var_si: float = 1.0
    var_desired: float = 1e-10
    n_paths: int = 4
    tau_max: float = 100e-9
    # sweep
    antennas: tuple = (1,)
    alpha: tuple = (1.0,)
    p_bar_dbm: tuple = ()
    snr_db: tuple = ()
    xi_db: tuple = ()
    # baselines and detection
    cp_factor: float = 2.0
    rodd_duty: float = 0.5
    rodd_code_rate: float = 0.5
    ber_symbols: int = 8
    constellation: str = "qpsk"
    # alpha search
    optimize: str | None = None
    optimize_tol: float = 1e-2
    search_trials: int = 20
    # output
    output: str | None = None
    fmt: str = "csv"
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def noise_var(self):
        return mt.noise_power(self.n0_dbm_hz, self.bandwidth)

    @property
    def p_bar_grid(self):
        """Power grid in dBm; an SNR grid is turned into powers ``SNR * N0 B``."""
        if self.snr_db:
            ref = float(mt.watt_to_dbm(self.noise_var))
            return tuple(s + ref for s in self.snr_db)
        return tuple(self.p_bar_dbm)

    def sim_two_n(self, ref):
        return ref if self.two_n is None else min(int(self.two_n), int(ref))

    def timing(self, ref, alpha, m_blocks=None):
        g = self.g_samples
        sim = self.sim_two_n(ref)
        return FrameTiming.from_alpha(alpha, self.bandwidth / ref, sim // 2, self.t_trans,
                                      self.m_blocks if m_blocks is None else m_blocks,
                                      None if g is None else max(int(g), sim))

    def channel_spec(self, k):
        return ChannelSpec(self.var_si, self.var_desired, self.n_paths, self.tau_max,
                           (k, k), (k, k))

    def validate(self):
        """Raise :class:`ConfigError` or :class:`TimingError` on an unusable config."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        unknown = [m for m in self.metrics if m not in ALL_METRICS]
        if unknown or not self.metrics:
            raise ConfigError(f"unknown or missing metrics {unknown}; choose from {ALL_METRICS}")
        if self.fmt != "csv":
            raise ConfigError(f"unsupported output format {self.fmt!r}")
        if not self.two_n_ref or not self.antennas or not self.alpha:
            raise ConfigError("two_n_ref, antennas and alpha grids must be non-empty")
        if any(r < 2 or r % 2 for r in self.two_n_ref):
            raise ConfigError("reference subcarrier counts must be even and >= 2")
        if self.two_n is not None and (self.two_n < 2 or self.two_n % 2):
            raise ConfigError("two_n must be even and >= 2")
        if any(k < 1 for k in self.antennas):
            raise ConfigError("antenna counts must be >= 1")
        if not self.p_bar_grid:
            raise ConfigError("p_bar_dbm (or snr_db) grid must be non-empty")
        if any("xi" in METRIC_AXES[m] for m in self._base_metrics()) and not self.xi_db:
            raise ConfigError("xi_db grid must be non-empty for the requested metrics")
        if any(x > 0 for x in self.xi_db):
            raise ConfigError("xi_db must be <= 0 (xi in [0, 1])")
        if self.optimize is not None:
            if self.optimize not in ("capacity_zims", "gain_hd"):
                raise ConfigError("optimize must be capacity_zims or gain_hd")
            if self.search_trials < 1 or self.optimize_tol <= 0:
                raise ConfigError("search_trials must be >= 1 and optimize_tol > 0")
        worst = DelayExtrema.worst_case(self.tau_max)
        for ref in self.two_n_ref:
            for a in self.alpha:
                rep = validate_timing(self.timing(ref, a), worst)
                if not rep.ok:
                    raise TimingError(f"infeasible timing at 2N_ref={ref}, alpha={a}:\n"
                                      + rep.format())
        return self

    def _base_metrics(self):
        base = []
        for m in self.metrics:
            for b in RATIO_METRICS.get(m, (m,)):
                if b not in base:
                    base.append(b)
        return tuple(base)


def preset_config(name, **overrides) -> ExperimentConfig:
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
    base = dict(PRESETS.get(name, {}))
    base.update(overrides)
    return ExperimentConfig(experiment=name, **base)


# config file schema: section -> {key: (field, caster)}
_SCHEMA = {
    "experiment": {"id": ("experiment", str), "metrics": ("metrics", lambda s: _tuple(s, str)),
                   "trials": ("trials", int), "seed": ("seed", int), "workers": ("workers", int),
                   "optimize": ("optimize", str), "optimize_tol": ("optimize_tol", float),
                   "search_trials": ("search_trials", int)},
    "system": {"bandwidth_hz": ("bandwidth", float), "n0_dbm_hz": ("n0_dbm_hz", float),
               "carrier_hz": ("carrier", float), "t_trans": ("t_trans", float),
               "two_n": ("two_n", int), "two_n_ref": ("two_n_ref", lambda s: _tuple(s, int)),
               "m_blocks": ("m_blocks", int), "g_samples": ("g_samples", int),
               "t_zero": ("t_zero", float), "t_data": ("t_data", float)},
    "channel": {"var_si": ("var_si", float), "var_desired": ("var_desired", float),
                "n_paths": ("n_paths", int), "tau_max": ("tau_max", float)},
    "sweep": {"alpha": ("alpha", _tuple), "p_bar_dbm": ("p_bar_dbm", _tuple),
              "snr_db": ("snr_db", _tuple), "xi_db": ("xi_db", _tuple),
              "antennas": ("antennas", lambda s: _tuple(s, int)),
              "two_n_ref": ("two_n_ref", lambda s: _tuple(s, int))},
    "baseline": {"cp_factor": ("cp_factor", float), "rodd_duty": ("rodd_duty", float),
                 "rodd_code_rate": ("rodd_code_rate", float),
                 "ber_symbols": ("ber_symbols", int), "constellation": ("constellation", str)},
    "output": {"path": ("output", str), "format": ("fmt", str)},
}

# validate-only keys that are not ExperimentConfig fields
_EXTRA_KEYS = {"t_zero", "t_data"}


def parse_config(text) -> ExperimentConfig:
    """Build a config from INI text; unset keys fall back to the experiment preset."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values, extra = {}, {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            name, cast = _SCHEMA[section][key]
            raw = raw.strip()
            if name in ("two_n", "seed", "optimize", "g_samples") and raw.lower() in ("none", ""):
                value = None
            else:
                try:
                    value = cast(raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {section}.{key}: {raw!r} ({exc})") from None
            (extra if name in _EXTRA_KEYS else values)[name] = value
    name = values.pop("experiment", "custom")
    cfg = preset_config(name, **values)
    return replace(cfg, extra=extra)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


# ---------------------------------------------------------------------------
# per-trial evaluation
# ---------------------------------------------------------------------------

def trial_rng(seed, trial, *key):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,) + key))


def _ber_for(eq, powers_rx, noise_var, z_std, x_idx, const, want):
    """BER of SVD and MMSE restoration on one equivalent channel.

    ``z_std`` holds unit-variance complex noise, ``x_idx`` symbol labels,
    both of shape (n_inputs_or_rows, n_symbols).
    """
    out = {}
    p = powers_rx
    sigma = math.sqrt(noise_var)
    x = np.sqrt(p) * const.points[x_idx]
    n_rows = eq.product.shape[0]
    noise = sigma * z_std[:n_rows]
    if "ber_svd" in want or "ber_svd_analytic" in want:
        lam = np.zeros(eq.n_inputs)
        lam[:eq.singular_values.size] = eq.eigenvalues
        usable = lam > rs.UNUSABLE_RTOL * lam[0]
        if "ber_svd" in want:
            y = eq.product @ rs.svd_precode(eq, x) + noise
            yt = rs.svd_decode(eq, y)[:eq.n_inputs]
            labels = rs.detect_nearest(yt, lam[:, None] * np.ones((1, x.shape[1])), const, p)
            err, bits = rs.count_bit_errors(x_idx, labels, const.name)
            out["ber_svd"] = err / bits
        if "ber_svd_analytic" in want:
            out["ber_svd_analytic"] = float(np.mean(rs.qpsk_ber(p * lam[usable] / noise_var)))
    if "ber_mmse" in want:
        y = eq.product @ x + noise
        _, labels = rs.mmse_detect(eq, y, noise_var, p, const.name)
        err, bits = rs.count_bit_errors(x_idx, labels, const.name)
        out["ber_mmse"] = err / bits
    return out


def evaluate_trial(cfg: ExperimentConfig, trial: int, seed: int, alphas=None):
    """All base metrics of one trial as ``{metric: array}``.

    Arrays have shape (n_ref, n_antennas, n_alpha, n_p, n_xi) with size-1
    axes where the metric does not depend on the sweep variable.
    """
    alphas = tuple(cfg.alpha if alphas is None else alphas)
    base = cfg._base_metrics()
    p_grid = cfg.p_bar_grid
    xis = cfg.xi_db or (0.0,)
    shape = (len(cfg.two_n_ref), len(cfg.antennas), len(alphas), len(p_grid), len(xis))
    out = {}
    for mname in base:
        axes = METRIC_AXES[mname]
        out[mname] = np.full((shape[0], shape[1],
                              shape[2] if "alpha" in axes else 1,
                              shape[3] if "p" in axes else 1,
                              shape[4] if "xi" in axes else 1), np.nan)
    noise_var = cfg.noise_var
    p_watts = np.atleast_1d(mt.dbm_to_watt(np.asarray(p_grid)))
    xi_lin = np.atleast_1d(mt.db_to_linear(np.asarray(xis)))
    need_zims = any(m in base for m in ("capacity_zims", "sinr_gain_db", "ordering_ok")
                    + BER_METRICS)
    need_ber = [m for m in base if m in BER_METRICS]
    const = rs.get_constellation(cfg.constellation)

    for gi, ref in enumerate(cfg.two_n_ref):
        for ki, k in enumerate(cfg.antennas):
            rng = trial_rng(seed, trial, gi, ki)
            cs = draw_channel_set(cfg.channel_spec(k), rng)
            t0 = cfg.timing(ref, alphas[0])
            sim = t0.two_n
            band = ref / sim
            per_input = p_watts / (k * sim)
            g12 = subcarrier_gains(cs, 1, 2, t0, cfg.carrier)
            g21 = subcarrier_gains(cs, 2, 1, t0, cfg.carrier)
            cp = cfg.cp_factor * cfg.tau_max
            hd = fd = None
            if any(m in base for m in ("capacity_hd", "gain_hd")):
                hd = np.array([mt.capacity_ofdm_hd(g12, g21, p, p, noise_var, t0, cp)
                               for p in per_input]) * band
                out["capacity_hd"][gi, ki, 0, :, 0] = hd
            if any(m in base for m in ("capacity_fd_perfect", "capacity_rodd", "ordering_ok")):
                fd = np.array([mt.capacity_fd_perfect(g12, g21, p, p, noise_var, t0)
                               for p in per_input]) * band
                if "capacity_fd_perfect" in out:
                    out["capacity_fd_perfect"][gi, ki, 0, :, 0] = fd
                if "capacity_rodd" in out:
                    out["capacity_rodd"][gi, ki, 0, :, 0] = mt.capacity_rodd(
                        fd, cfg.rodd_duty, cfg.rodd_code_rate)
            if "capacity_fd_sic" in out:
                for pi, (p, pw) in enumerate(zip(per_input, p_watts)):
                    si = pw * cfg.var_si
                    for xi_i, xi in enumerate(xi_lin):
                        out["capacity_fd_sic"][gi, ki, 0, pi, xi_i] = band * mt.capacity_fd_sic(
                            g12, g21, p, p, noise_var, t0, xi, si, si)
            if not need_zims:
                continue
            h21 = mt.h_tilde(g21) if "sinr_gain_db" in out else None
            if need_ber:
                brng = trial_rng(seed, trial, gi, ki, 1)
                n_sym = cfg.ber_symbols
                rows = k * (t0.g_samples)
                z_std = (brng.standard_normal((rows, n_sym))
                         + 1j * brng.standard_normal((rows, n_sym))) / math.sqrt(2.0)
                x_idx = brng.integers(0, const.size, size=(k * sim, n_sym))
            for ai, a in enumerate(alphas):
                t = cfg.timing(ref, a)
                uv = bool(need_ber) and ("ber_svd" in need_ber)
                eqs1 = receiver_channels(t, cs, 1, cfg.carrier, compute_uv=uv)
                eqs2 = receiver_channels(t, cs, 2, cfg.carrier, compute_uv=uv)
                for pi, p in enumerate(per_input):
                    if "capacity_zims" in out or "ordering_ok" in out:
                        cz = band * mt.capacity_zims(eqs1, eqs2, p, p, noise_var, t)
                        if "capacity_zims" in out:
                            out["capacity_zims"][gi, ki, ai, pi, 0] = cz
                        if "ordering_ok" in out:
                            rodd = mt.capacity_rodd(fd[pi], cfg.rodd_duty, cfg.rodd_code_rate)
                            out["ordering_ok"][gi, ki, ai, pi, 0] = float(rodd < cz < fd[pi])
                    if "sinr_gain_db" in out:
                        lam = np.zeros(eqs1[0].n_inputs)
                        lam[:eqs1[0].singular_values.size] = eqs1[0].eigenvalues
                        gz = mt.sinr_zims(lam, p, noise_var)
                        si = p_watts[pi] * cfg.var_si
                        for xi_i, xi in enumerate(xi_lin):
                            gc = mt.sinr_fd_sic(h21, p, xi, noise_var, si)
                            out["sinr_gain_db"][gi, ki, ai, pi, xi_i] = mt.sinr_gain_db(gz, gc)
                    if need_ber:
                        res = _ber_for(eqs1[0], p, noise_var, z_std, x_idx, const, need_ber)
                        for mname, v in res.items():
                            out[mname][gi, ki, ai, pi, 0] = v
    return out


def _trial_job(args):
    cfg, trial, seed, alphas = args
    return evaluate_trial(cfg, trial, seed, alphas)


def collect_trials(cfg: ExperimentConfig, seed: int, trials=None, alphas=None, workers=None):
    """Per-trial results in trial order, as a list of metric dicts."""
    n = cfg.trials if trials is None else trials
    if n < 1:
        raise ConfigError("trials must be >= 1")
    w = cfg.workers if workers is None else workers
    jobs = [(cfg, i, seed, alphas) for i in range(n)]
    if w <= 1:
        return [_trial_job(j) for j in jobs]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=w, mp_context=ctx) as pool:
        return list(pool.map(_trial_job, jobs, chunksize=max(1, n // (4 * w))))


def _stack(results, name):
    return np.stack([r[name] for r in results])


def _mean_stderr(x):
    n = x.shape[0]
    mean = x.mean(axis=0)
    if n < 2:
        return mean, np.full(mean.shape, np.nan)
    return mean, x.std(axis=0, ddof=1) / math.sqrt(n)


def _ratio_of_means(num, den):
    """Ratio of means with a first-order (delta method) standard error."""
    n = num.shape[0]
    mn, md = num.mean(axis=0), den.mean(axis=0)
    r = mn / md
    if n < 2:
        return r, np.full(r.shape, np.nan)
    vn, vd = num.var(axis=0, ddof=1), den.var(axis=0, ddof=1)
    # covariance elementwise over broadcast shapes
    nb, db = np.broadcast_arrays(num, den)
    cov = np.sum((nb - nb.mean(axis=0)) * (db - db.mean(axis=0)), axis=0) / (n - 1)
    var = (vn / md ** 2 + mn ** 2 * vd / md ** 4 - 2 * mn * cov / md ** 3) / n
    return r, np.sqrt(np.maximum(var, 0.0))


def aggregate(cfg: ExperimentConfig, results):
    """``{metric: (mean, stderr)}`` for every requested metric."""
    agg = {}
    for mname in cfg.metrics:
        if mname in RATIO_METRICS:
            a, b = RATIO_METRICS[mname]
            agg[mname] = _ratio_of_means(_stack(results, a), _stack(results, b))
        else:
            agg[mname] = _mean_stderr(_stack(results, mname))
    return agg


@dataclass
class ResultRow:
    experiment: str
    alpha: float | None
    p_bar_dbm: float | None
    two_n: int
    kt: int
    kr: int
    xi_db: float | None
    metric: str
    value: float
    stderr: float
    trials: int
    seed: int


@dataclass
class ResultTable:
    rows: list
    seed: int
    header: dict = field(default_factory=dict)

    def select(self, metric, **where):
        out = []
        for r in self.rows:
            if r.metric != metric:
                continue
            if all(getattr(r, k) == v for k, v in where.items()):
                out.append(r)
        return out

    def to_csv(self):
        buf = io.StringIO()
        meta = " ".join(f"{k}={v}" for k, v in self.header.items())
        buf.write(f"# seed={self.seed} {meta}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
        return buf.getvalue()

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _alpha_search(cfg, seed, gi, ki, pi):
    """Golden-section search of the configured objective at one sweep point."""
    n = min(cfg.search_trials, cfg.trials)
    sub = replace(cfg, two_n_ref=(cfg.two_n_ref[gi],), antennas=(cfg.antennas[ki],),
                  p_bar_dbm=(cfg.p_bar_grid[pi],), snr_db=(), xi_db=(),
                  metrics=(cfg.optimize,))
    cache = {}

    def objective(a):
        if a not in cache:
            res = collect_trials(sub, seed, n, alphas=(a,), workers=1)
            mean, _ = aggregate(sub, res)[cfg.optimize]
            cache[a] = float(mean.ravel()[0])
        return cache[a]

    ref = cfg.two_n_ref[gi]
    t = cfg.timing(ref, 1.0)
    feas = feasible_alpha_range(t.t_data, cfg.t_trans, cfg.tau_max)
    return mt.optimize_alpha(objective, min(cfg.alpha), max(cfg.alpha), cfg.optimize_tol, feas)


def run_experiment(cfg: ExperimentConfig, seed=None, progress=None) -> ResultTable:
    """Validate, run every trial and aggregate into a :class:`ResultTable`."""
    cfg.validate()
    if seed is None:
        seed = cfg.seed
    if seed is None:
        seed = secrets.randbits(63)
    if progress:
        progress(f"running {cfg.experiment}: {cfg.trials} trials, seed {seed}")
    results = collect_trials(cfg, seed)
    agg = aggregate(cfg, results)
    xis = cfg.xi_db or (None,)
    p_grid = cfg.p_bar_grid
    rows = []
    for gi, ref in enumerate(cfg.two_n_ref):
        for ki, k in enumerate(cfg.antennas):
            for mname in cfg.metrics:
                mean, se = agg[mname]
                axes = set()
                for b in RATIO_METRICS.get(mname, (mname,)):
                    axes |= set(METRIC_AXES[b])
                for ai in range(mean.shape[2]):
                    for pi in range(mean.shape[3]):
                        for xi_i in range(mean.shape[4]):
                            rows.append(ResultRow(
                                cfg.experiment,
                                float(cfg.alpha[ai]) if "alpha" in axes else None,
                                float(p_grid[pi]) if "p" in axes else None,
                                int(ref), int(k), int(k),
                                float(xis[xi_i]) if "xi" in axes else None,
                                mname, float(mean[gi, ki, ai, pi, xi_i]),
                                float(se[gi, ki, ai, pi, xi_i]), cfg.trials, int(seed)))
            if cfg.optimize:
                for pi in range(len(p_grid)):
                    if progress:
                        progress(f"alpha search 2N_ref={ref} K={k} P={p_grid[pi]} dBm")
                    a_opt, v_opt = _alpha_search(cfg, seed, gi, ki, pi)
                    n = min(cfg.search_trials, cfg.trials)
                    for mname, v in (("alpha_opt", a_opt), (f"{cfg.optimize}_opt", v_opt)):
                        rows.append(ResultRow(cfg.experiment, None, float(p_grid[pi]), int(ref),
                                              int(k), int(k), None, mname, float(v),
                                              float("nan"), n, int(seed)))
    sims = sorted({cfg.sim_two_n(r) for r in cfg.two_n_ref})
    header = {"experiment": cfg.experiment, "simulated_two_n": "/".join(map(str, sims)),
              "noise_w": repr(cfg.noise_var)}
    return ResultTable(rows, int(seed), header)


def full_scale_warning(cfg: ExperimentConfig):
    warnings.warn(f"full-scale run of {cfg.experiment} simulates up to {max(cfg.two_n_ref)} "
                  "subcarriers per trial and can take hours", RuntimeWarning, stacklevel=2)
    print(f"warning: full-scale run ({max(cfg.two_n_ref)} subcarriers) can take hours",
          file=sys.stderr)


def config_summary(cfg: ExperimentConfig):
    d = asdict(cfg)
    d.pop("extra", None)
    return d
