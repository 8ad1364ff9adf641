import numpy as np
import pytest

from zimsvfd import _accel
from zimsvfd.channel import ChannelSet, ChannelSpec, MultipathChannel, draw_channel_set, mimo_channel_matrix
from zimsvfd.frame_timing import FrameTiming, Interval, sampling_times
from zimsvfd.linksim import (SymbolBlock, equivalent_channel_mimo, equivalent_channel_siso,
                             matrix_domain_samples, oracle_carrier, receiver_channels,
                             sampling_matrix, simulate_block, time_domain_oracle)

from conftest import make_timing, random_feasible_timing

F_C = 2.4e9


def full_period_times(t, start=0.0):
    return start + t.t_data / t.two_n * np.arange(1, t.two_n + 1)


def test_full_period_sampling_is_orthogonal():
    t = make_timing(n_half=8)
    V = sampling_matrix(t, full_period_times(t, 3.7e-6), F_C).matrix
    np.testing.assert_allclose(V.conj().T @ V, t.two_n * np.eye(t.two_n), atol=1e-9)


def test_entries_have_unit_modulus(rng):
    t = make_timing(n_half=16)
    times = np.sort(rng.uniform(0, 1e-4, 40))
    V = sampling_matrix(t, times, F_C).matrix
    np.testing.assert_allclose(np.abs(V), 1.0, atol=1e-13)


def test_factorization_matches_direct_exponential(rng):
    # low carrier so the direct exponent is exact enough for a 1e-12 comparison
    t = make_timing(n_half=8)
    f_c = 1e5
    times = np.sort(rng.uniform(0, 2e-5, 16))
    V = sampling_matrix(t, times, f_c).matrix
    direct = np.exp(2j * np.pi * np.outer(times, t.subcarrier_freqs(f_c)))
    np.testing.assert_allclose(V, direct, atol=1e-12)
    # carrier row factor times the baseband Vandermonde part
    base = np.exp(2j * np.pi * np.outer(times, t.subcarrier_indices() * t.delta_f))
    np.testing.assert_allclose(V, np.exp(2j * np.pi * f_c * times)[:, None] * base, atol=1e-12)


def test_duplicate_times_rejected_or_rank_deficient():
    t = make_timing(n_half=4)
    times = full_period_times(t)
    times[3] = times[2]
    with pytest.raises(ValueError):
        sampling_matrix(t, times, F_C)
    V = sampling_matrix(t, times, F_C, strict=False)
    eq = equivalent_channel_siso(V, np.ones(t.two_n))
    assert eq.rank() == t.two_n - 1


def test_too_few_times_rejected():
    t = make_timing(n_half=4)
    with pytest.raises(ValueError):
        sampling_matrix(t, np.arange(5) * 1e-6, F_C)


def test_identity_channel_singular_values(rng):
    t = make_timing(n_half=8)
    V = sampling_matrix(t, full_period_times(t), F_C)
    eq = equivalent_channel_siso(V, np.eye(t.two_n))
    np.testing.assert_allclose(eq.singular_values, np.sqrt(t.two_n), rtol=1e-10)


def test_siso_diagonal_forms_agree(rng):
    t = make_timing(n_half=4)
    V = sampling_matrix(t, np.sort(rng.uniform(0, 5e-6, 8)), F_C)
    d = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    a = equivalent_channel_siso(V, d)
    b = equivalent_channel_siso(V, np.diag(d))
    np.testing.assert_allclose(a.product, V.matrix @ np.diag(d))
    np.testing.assert_allclose(a.singular_values, b.singular_values)
    with pytest.raises(ValueError):
        equivalent_channel_siso(V, d[:4])


def test_svd_reconstruction(rng):
    t = random_feasible_timing(rng, n_half=8)
    cs = draw_channel_set(ChannelSpec(n_tx=(2, 2), n_rx=(2, 2)), rng)
    for eq in receiver_channels(t, cs, 1, F_C) + receiver_channels(t, cs, 2, F_C):
        assert eq.reconstruction_error() < 1e-10


def test_mimo_product_is_block_diagonal_v_times_h(rng):
    t = make_timing(n_half=4)
    cs = draw_channel_set(ChannelSpec(n_tx=(2, 3), n_rx=(3, 2)), rng)
    V = sampling_matrix(t, np.sort(rng.uniform(0, 8e-6, 8)), F_C)
    Hm = mimo_channel_matrix(cs, 1, 2, t, F_C)
    eq = equivalent_channel_mimo(V, Hm, 2)
    bd = np.kron(np.eye(2), V.matrix)
    np.testing.assert_allclose(eq.product, bd @ Hm, atol=1e-12)
    assert eq.product.shape == (2 * 8, 2 * 8)


def test_mimo_rank_equals_dense_rank(rng):
    t = make_timing(t_zero=20e-6, n_half=4)
    cs = draw_channel_set(ChannelSpec(n_tx=(2, 2), n_rx=(2, 2)), rng)
    for eq in receiver_channels(t, cs, 2, F_C):
        s = np.linalg.svd(eq.product, compute_uv=False)
        assert eq.rank() == int(np.sum(s > 1e-10 * s[0]))


def test_mimo_duplicated_receive_antenna_rank(rng):
    """Two identical receive antennas add no rank over one."""
    t = make_timing(t_zero=20e-6, n_half=4)
    base = draw_channel_set(ChannelSpec(n_tx=(2, 2), n_rx=(1, 1)), rng)
    chans = {}
    for key in base.keys():
        i, k, p, _ = key
        for q in range(2):
            ch = base[key]
            chans[(i, k, p, q)] = MultipathChannel(ch.amps, ch.delays, i, k, p, q)
    dup = ChannelSet(chans, (2, 2), (2, 2))
    one = receiver_channels(t, base, 2, F_C)[0]
    two = receiver_channels(t, dup, 2, F_C)[0]
    s = np.linalg.svd(two.product, compute_uv=False)
    assert two.rank(1e-8) == one.rank(1e-8) == int(np.sum(s > 1e-8 * s[0]))


def test_simulate_zero_input_gives_zero():
    t = make_timing(n_half=4, m_blocks=2)
    V = sampling_matrix(t, full_period_times(t), F_C)
    eq = equivalent_channel_siso(V, np.ones(8))
    out = simulate_block(eq, SymbolBlock(np.zeros((2, 8))), 0.0)
    assert out.samples.shape == (2, 1, 8)
    assert np.all(out.samples == 0)


def test_simulate_noise_moments():
    r = np.random.default_rng(3)
    t = make_timing(n_half=4, m_blocks=1)
    V = sampling_matrix(t, full_period_times(t), F_C)
    eq = equivalent_channel_siso(V, np.ones(8))
    z = np.concatenate([simulate_block(eq, SymbolBlock(np.zeros((1, 8))), 0.3, r).samples.ravel()
                        for _ in range(3000)])
    assert abs(z.mean()) < 0.02
    assert np.mean(np.abs(z) ** 2) == pytest.approx(0.3, rel=0.03)
    assert np.mean(z.real ** 2) == pytest.approx(0.15, rel=0.04)
    assert abs(np.mean(z * z)) < 0.01  # circular


def test_simulate_requires_rng_and_matching_lengths():
    t = make_timing(n_half=4)
    eq = equivalent_channel_siso(sampling_matrix(t, full_period_times(t), F_C), np.ones(8))
    with pytest.raises(ValueError):
        simulate_block(eq, SymbolBlock(np.ones((1, 8))), 0.1)
    with pytest.raises(ValueError):
        simulate_block(eq, SymbolBlock(np.ones((1, 4))), 0.0)
    with pytest.raises(ValueError):
        simulate_block(eq, SymbolBlock(np.ones((1, 8))), -1.0)


def test_symbol_block_rejects_non_finite():
    with pytest.raises(ValueError):
        SymbolBlock(np.array([1.0, np.nan]))


def test_conditioning_improves_with_alpha_on_average():
    r = np.random.default_rng(7)
    conds = []
    for alpha in (0.2, 0.5, 1.0):
        t = FrameTiming.from_alpha(alpha, 1 / 51.2e-6, 8, 1.9e-6)
        vals = []
        for _ in range(30):
            cs = draw_channel_set(ChannelSpec(), r)
            s = receiver_channels(t, cs, 1, F_C, compute_uv=False)[0].singular_values
            vals.append(np.log10(s[0] / s[-1]))
        conds.append(np.mean(vals))
    assert conds[0] > conds[1] > conds[2]


def _oracle_gap(t, cs, syms, user, m, f_c, transition):
    _, y_t = time_domain_oracle(t, cs, syms, user, m, f_c, transition)
    _, y_m = matrix_domain_samples(t, cs, syms, user, m, f_c)
    return np.max(np.abs(y_t - y_m)) / np.max(np.abs(y_m))


@pytest.mark.parametrize("transition", ["linear", "raised_cosine"])
def test_oracle_matches_matrix_model(transition):
    r = np.random.default_rng(11)
    t = random_feasible_timing(r, n_half=4, m_blocks=2)
    spec = ChannelSpec(var_si=1.0, var_desired=1.0)
    cs = draw_channel_set(spec, r)
    syms = {u: r.standard_normal((2, 1, 8)) + 1j * r.standard_normal((2, 1, 8)) for u in (1, 2)}
    f_c = oracle_carrier(t)
    for user in (1, 2):
        assert _oracle_gap(t, cs, syms, user, 1, f_c, transition) < 1e-3


def test_oracle_self_interference_is_excluded():
    """Changing the receiver's own symbols leaves the candidate samples unchanged."""
    r = np.random.default_rng(5)
    t = make_timing(t_zero=12e-6, n_half=4)
    cs = draw_channel_set(ChannelSpec(var_si=1.0, var_desired=1.0), r)
    f_c = oracle_carrier(t)
    x2 = r.standard_normal((1, 1, 8)) + 0j
    a = {1: np.ones((1, 1, 8), complex), 2: x2}
    b = {1: -3 * np.ones((1, 1, 8), complex), 2: x2}
    _, ya = time_domain_oracle(t, cs, a, 1, 0, f_c)
    _, yb = time_domain_oracle(t, cs, b, 1, 0, f_c)
    assert np.max(np.abs(ya - yb)) < 1e-3 * np.max(np.abs(ya))


def test_matrix_samples_carrier_invariance_of_magnitude(rng):
    t = make_timing(t_zero=15e-6, n_half=4)
    cs = draw_channel_set(ChannelSpec(), rng)
    syms = {u: np.exp(2j * np.pi * rng.uniform(size=(1, 1, 8))) for u in (1, 2)}
    e1 = receiver_channels(t, cs, 2, 2.4e9, compute_uv=False)[0]
    e2 = receiver_channels(t, cs, 2, 5.0e9, compute_uv=False)[0]
    # a different carrier changes the channel phases, not the sampling geometry
    assert e1.V.matrix.shape == e2.V.matrix.shape
    np.testing.assert_allclose(e1.V.times, e2.V.times)
    _, y = matrix_domain_samples(t, cs, syms, 2, 0, 2.4e9)
    assert y.shape == (8,)


def test_oracle_rejects_infeasible_timing(rng):
    t = make_timing(t_zero=3e-6, n_half=2)
    cs = draw_channel_set(ChannelSpec(), rng)
    syms = {u: np.ones((1, 1, 4), complex) for u in (1, 2)}
    with pytest.raises(Exception):
        time_domain_oracle(t, cs, syms, 1, 0, oracle_carrier(t))
