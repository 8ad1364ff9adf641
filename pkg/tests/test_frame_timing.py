import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zimsvfd.frame_timing import (DelayExtrema, FrameTiming, Interval, NonFiniteTimingError,
                                  TimingError, candidate_interval, candidate_lengths,
                                  data_interval, feasible_alpha_range, sampling_times,
                                  si_free_interval, validate_timing)

from conftest import DELTA, T_D, TAU, make_timing


def test_derived_fields_exact():
    t = FrameTiming(1 / 51.2e-6, 8, 10e-6, 1.9e-6)
    assert t.t_data == 1 / t.delta_f
    assert t.t_symbol == t.t_data + 2 * t.t_trans + t.t_zero
    assert t.alpha == (t.t_zero + 2 * t.t_trans) / t.t_data
    assert t.g_samples == 16


@pytest.mark.parametrize("kw", [dict(t_zero=0.0), dict(t_trans=-1e-6), dict(n_half=0),
                                dict(m_blocks=0), dict(g_samples=3)])
def test_timing_rejects_bad_fields(kw):
    base = dict(delta_f=1 / 51.2e-6, n_half=2, t_zero=10e-6, t_trans=1.9e-6)
    base.update(kw)
    with pytest.raises(TimingError):
        FrameTiming(**base)


def test_non_finite_is_distinct_error():
    with pytest.raises(NonFiniteTimingError):
        FrameTiming(1 / 51.2e-6, 2, float("nan"), 1.9e-6)


def test_from_alpha_round_trip():
    t = FrameTiming.from_alpha(0.37, 1 / 51.2e-6, 4, 1.9e-6)
    assert t.alpha == pytest.approx(0.37, rel=1e-12)


def test_subcarrier_ordering():
    t = make_timing(n_half=3)
    assert list(t.subcarrier_indices()) == [-2, -1, 0, 1, 2, 3]
    np.testing.assert_allclose(t.subcarrier_freqs(100.0), 100.0 + t.delta_f * np.arange(-2, 4))


def test_validate_reference_case_passes():
    rep = validate_timing(make_timing(10e-6), DelayExtrema.worst_case(TAU))
    assert rep.ok
    assert all(c.passed for c in rep.conditions)
    assert "overall: PASS" in rep.format()


def test_validate_short_zero_interval_fails():
    rep = validate_timing(make_timing(3e-6), DelayExtrema.worst_case(TAU))
    assert not rep.ok
    assert not rep["candidate_nonempty"].passed
    assert rep["candidate_nonempty"].margin == pytest.approx(3e-6 - 3.9e-6)


def test_validate_boundary_is_strict():
    rep = validate_timing(make_timing(2 * DELTA + TAU), DelayExtrema.worst_case(TAU))
    assert not rep["combined"].passed


def test_alpha_one_is_accepted():
    t = FrameTiming.from_alpha(1.0, 1 / T_D, 4, DELTA)
    rep = validate_timing(t, DelayExtrema.worst_case(TAU))
    assert rep.ok
    assert abs(rep["symbol_rate"].margin) < 1e-15


def test_validate_long_zero_interval_fails_symbol_rate():
    rep = validate_timing(make_timing(T_D - 2 * DELTA + 1e-7), DelayExtrema.worst_case(TAU))
    assert not rep["symbol_rate"].passed
    assert not rep.ok


def test_delay_extrema_checks():
    with pytest.raises(ValueError):
        DelayExtrema(1e-9, 2e-9, 0, 0, 0, 0, 0, 0, 1e-9)  # max < min
    with pytest.raises(ValueError):
        DelayExtrema(5e-9, 0, 0, 0, 0, 0, 0, 0, 1e-9)  # spread too small
    with pytest.raises(NonFiniteTimingError):
        DelayExtrema(math.inf, 0, 0, 0, 0, 0, 0, 0, 1e-9)


def test_delay_extrema_from_links():
    d = DelayExtrema.from_links([1e-9, 5e-9], [2e-9], [3e-9, 9e-9], [0.0])
    assert d.tau_max_si_1 == 5e-9 and d.tau_min_si_1 == 1e-9
    assert d.tau_max_fwd == 9e-9 and d.tau_min_bwd == 0.0
    assert d.tau_spread == 9e-9


def test_si_free_zero_delays():
    t = make_timing()
    z = DelayExtrema.zero()
    assert si_free_interval(t, z, 2, 0) == Interval(0.0, t.t_zero)
    i1 = si_free_interval(t, z, 1, 0)
    assert i1.lo == pytest.approx(t.t_symbol - t.t_zero) and i1.hi == t.t_symbol


def test_si_free_user2_example():
    t = make_timing(m_blocks=2)
    d = DelayExtrema(0, 0, 100e-9, 20e-9, 0, 0, 0, 0, 100e-9)
    iv = si_free_interval(t, d, 2, 1)
    assert iv.lo == pytest.approx(t.t_symbol + 100e-9)
    assert iv.hi == pytest.approx(t.t_symbol + t.t_zero + 20e-9)


def test_si_free_errors():
    t = make_timing()
    with pytest.raises(IndexError):
        si_free_interval(t, DelayExtrema.zero(), 1, 1)
    with pytest.raises(TimingError):
        si_free_interval(make_timing(3e-6), DelayExtrema.worst_case(TAU), 1, 0)


@pytest.mark.parametrize("bounds", ["exact", "union"])
@pytest.mark.parametrize("user", [1, 2])
def test_candidate_zero_delays(user, bounds):
    t = make_timing()
    ci = candidate_interval(t, DelayExtrema.zero(), user, 0, bounds)
    assert ci.length == pytest.approx(t.t_zero - 2 * t.t_trans)


def test_candidate_empty_when_zero_interval_short():
    t = make_timing(t_zero=2 * DELTA)
    assert candidate_interval(t, DelayExtrema.zero(), 1, 0).empty
    assert candidate_interval(make_timing(t_zero=DELTA), DelayExtrema.zero(), 2, 0).empty


def test_candidate_bad_bounds_name():
    with pytest.raises(ValueError):
        candidate_interval(make_timing(), DelayExtrema.zero(), 1, 0, "loose")


def test_union_bounds_contain_exact_bounds(rng):
    t = make_timing(m_blocks=3)
    for _ in range(200):
        d = _random_extrema(rng)
        for user in (1, 2):
            for m in range(3):
                ex = candidate_interval(t, d, user, m, "exact")
                pa = candidate_interval(t, d, user, m, "union")
                assert pa.lo <= ex.lo and ex.hi <= pa.hi


def test_union_form_formula():
    t = make_timing(m_blocks=2)
    d = DelayExtrema(80e-9, 10e-9, 70e-9, 30e-9, 60e-9, 5e-9, 90e-9, 1e-9, 90e-9)
    ts, tz, dl, m = t.t_symbol, t.t_zero, t.t_trans, 1
    ci = candidate_interval(t, d, 1, m, "union")
    assert ci.hi == min((m + 1) * ts + 10e-9 - dl, (m + 1) * ts - dl + 90e-9)
    assert ci.lo == max((m + 1) * ts - tz + 80e-9 + dl, m * ts + tz + dl + 1e-9)
    ci = candidate_interval(t, d, 2, m, "union")
    assert ci.hi == min(m * ts + tz + 30e-9 - dl, m * ts + dl + t.t_data + 60e-9)
    assert ci.lo == max(m * ts + 70e-9 + dl, m * ts + dl + 5e-9)


def _random_extrema(rng, tau=TAU):
    links = [rng.uniform(0, tau, rng.integers(1, 6)) for _ in range(4)]
    return DelayExtrema.from_links(*links)


def test_candidate_within_si_free_and_data(rng):
    t = make_timing(t_zero=20e-6, m_blocks=2)
    for _ in range(200):
        d = _random_extrema(rng)
        for user in (1, 2):
            for m in range(2):
                for bounds in ("exact", "union"):
                    ci = candidate_interval(t, d, user, m, bounds)
                    sf = si_free_interval(t, d, user, m)
                    di = data_interval(t, d, user, m, bounds)
                    assert sf.lo + DELTA <= ci.lo + 1e-18 and ci.hi <= sf.hi - DELTA + 1e-18
                    assert di.lo <= ci.lo and ci.hi <= di.hi


def test_all_min_max_branches_positive():
    """Each min/max branch of the user-1 length is positive under the condition."""
    t = make_timing(t_zero=2 * DELTA + TAU + 1e-9)
    cases = [
        # si bound binds on both ends
        DelayExtrema(TAU, 0, 0, 0, 0, 0, TAU, 0, TAU),
        # desired bound binds on the top
        DelayExtrema(TAU, TAU, 0, 0, 0, 0, 0, 0, TAU),
        # desired bound binds on the bottom (long zero interval)
        DelayExtrema(0, 0, 0, 0, 0, 0, TAU, TAU, TAU),
        DelayExtrema(TAU, TAU, 0, 0, 0, 0, TAU, TAU, 0),
    ]
    for d in cases:
        for tz in (2 * DELTA + TAU + 1e-9, T_D - 2 * DELTA):
            t = make_timing(t_zero=tz)
            for user in (1, 2):
                for bounds in ("exact", "union"):
                    assert candidate_interval(t, d, user, 0, bounds).length > 0


@settings(max_examples=300, deadline=None)
@given(frac=st.floats(1e-6, 1.0), shift=st.floats(0, 1e-6),
       delays=st.lists(st.floats(0, TAU), min_size=8, max_size=8))
def test_translation_invariance_of_lengths(frac, shift, delays):
    lo, hi = TAU + 2 * DELTA, T_D - 2 * DELTA
    t = make_timing(t_zero=lo + frac * (hi - lo), m_blocks=2)
    a = np.array(delays).reshape(4, 2)
    d = DelayExtrema.from_links(*a)
    d2 = DelayExtrema.from_links(*(a + shift))
    for user in (1, 2):
        for m in (0, 1):
            l1 = candidate_interval(t, d, user, m).length
            l2 = candidate_interval(t, d2, user, m).length
            assert l2 == pytest.approx(l1, abs=1e-15)


@settings(max_examples=500, deadline=None)
@given(frac=st.floats(1e-9, 1.0), m=st.integers(0, 4),
       delays=st.lists(st.floats(0, TAU), min_size=4, max_size=16))
def test_feasible_timing_gives_nonempty_candidates(frac, m, delays):
    lo, hi = TAU + 2 * DELTA, T_D - 2 * DELTA
    tz = lo + frac * (hi - lo)
    if tz <= lo:
        return
    t = make_timing(t_zero=tz, m_blocks=5)
    parts = np.array_split(np.array(delays), 4)
    d = DelayExtrema.from_links(*[p if p.size else np.zeros(1) for p in parts])
    for user in (1, 2):
        for bounds in ("exact", "union"):
            assert not candidate_interval(t, d, user, m, bounds).empty


def test_candidate_lengths_batch_matches_scalar(rng):
    t = make_timing(t_zero=15e-6, m_blocks=3)
    ds = [_random_extrema(rng) for _ in range(50)]
    ext = np.array([d.as_array() for d in ds])
    for bounds in ("exact", "union"):
        got = candidate_lengths(t, ext, 2, bounds)
        for r, d in enumerate(ds):
            assert got[r, 0] == pytest.approx(candidate_interval(t, d, 1, 2, bounds).length, abs=1e-18)
            assert got[r, 1] == pytest.approx(candidate_interval(t, d, 2, 2, bounds).length, abs=1e-18)


def test_sampling_times_formula():
    t = FrameTiming(1.0, 2, 0.5, 0.1)
    np.testing.assert_allclose(sampling_times(t, Interval(0.0, 1.0)), [0.25, 0.5, 0.75, 1.0])


def test_sampling_times_g_denominator():
    t = FrameTiming(1.0, 2, 0.5, 0.1, g_samples=8)
    s = sampling_times(t, Interval(2.0, 3.0))
    assert s.size == 8 and s[-1] == pytest.approx(3.0) and s[0] > 2.0
    assert np.all(np.diff(s) > 0)


def test_sampling_times_empty_raises():
    with pytest.raises(TimingError):
        sampling_times(make_timing(), Interval(1.0, 1.0))


def test_feasible_alpha_range():
    lo, hi = feasible_alpha_range(T_D, DELTA, TAU)
    assert lo == pytest.approx((TAU + 4 * DELTA) / T_D) and hi == 1.0
    just_in = FrameTiming.from_alpha(lo * 1.001, 1 / T_D, 4, DELTA)
    assert validate_timing(just_in, DelayExtrema.worst_case(TAU)).ok
    just_out = FrameTiming.from_alpha(lo * 0.999, 1 / T_D, 4, DELTA)
    assert not validate_timing(just_out, DelayExtrema.worst_case(TAU)).ok
