import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commgan.channel import (
    ChannelConfig,
    ChannelRealization,
    SimulatedChannel,
    apply_channel,
    awgn_sigma,
    draw_channel_realization,
    frac_delay,
    noiseless_response,
    saturate,
    to_complex,
    to_real,
)
from commgan.errors import ConfigError, DomainError
from commgan.rng import RngStream

IDENTITY = ChannelRealization(phase=0.0, gain=1.0, tau=0.0, a_sat=math.inf, smoothness=3.0, snr_db=math.inf)


def random_blocks(n, seed=0):
    return np.random.default_rng(seed).normal(scale=0.6, size=(n, 6))


def test_pinned_realization():
    cfg = ChannelConfig(phase_min=0.0, phase_max=0.0, tau_min=1.0, tau_max=1.0)
    r = draw_channel_realization(cfg, RngStream(3))
    assert r.tau == 1.0 and r.phase == 0.0


def test_default_tau_range():
    for seed in range(200):
        r = draw_channel_realization(ChannelConfig(), RngStream(seed))
        assert 0.5 <= r.tau <= 1.5
        assert 0.0 <= r.phase < 2 * math.pi


def test_seeds_differ():
    a = draw_channel_realization(ChannelConfig(), RngStream(1))
    b = draw_channel_realization(ChannelConfig(), RngStream(2))
    assert (a.phase, a.tau) != (b.phase, b.tau)
    assert a == draw_channel_realization(ChannelConfig(), RngStream(1))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(tau_min=-0.1),
        dict(tau_max=2.5),
        dict(tau_min=1.2, tau_max=1.0),
        dict(snr_db=math.nan),
        dict(gain=0.0),
        dict(a_sat=0.0),
        dict(smoothness=-1.0),
        dict(phase_min=1.0, phase_max=0.0),
    ],
)
def test_invalid_ranges(kwargs):
    with pytest.raises(ConfigError):
        draw_channel_realization(ChannelConfig(**kwargs), RngStream(0))


def test_saturate_small_signal():
    c = 0.25 * 1.5 * np.exp(0.3j)
    out = saturate(c, 1.5, 3.0)
    assert abs(out - c) / abs(c) < 0.01
    assert np.angle(out) == pytest.approx(0.3)


def test_saturate_hard_limit():
    out = saturate(15.0 + 0j, 1.5, 50.0)
    assert abs(out) == pytest.approx(1.5, rel=1e-3)
    assert abs(out) <= 1.5


def test_saturate_monotone_sweep():
    amps = np.linspace(0.0, 20.0, 20001)
    for p in (0.5, 1.0, 3.0, 10.0):
        out = np.abs(saturate(amps.astype(complex), 1.5, p))
        # strict in exact arithmetic; float64 flattens the top of the curve to a few ulp
        assert np.all(np.diff(out) >= -4 * np.finfo(float).eps * 1.5)
        assert np.all(out <= 1.5 * (1 + 4 * np.finfo(float).eps))
        assert np.all(out[amps <= 3.0] < 1.5)


def test_saturate_disabled():
    c = np.array([5 + 1j, -30j])
    np.testing.assert_array_equal(saturate(c, math.inf, 3.0), c)


def test_frac_delay_examples():
    block = np.array([1 + 1j, 3 - 1j, -2 + 0.5j])
    assert frac_delay(block, 0.0) == block[0]
    assert frac_delay(block, 0.5) == (block[0] + block[1]) / 2
    assert frac_delay(block, 2.0) == block[2]
    assert frac_delay(block, 1.25) == pytest.approx(0.75 * block[1] + 0.25 * block[2])


@pytest.mark.parametrize("tau", [-0.01, 2.01, math.nan])
def test_frac_delay_domain(tau):
    with pytest.raises(DomainError):
        frac_delay(np.zeros(3), tau)


def test_awgn_sigma_examples():
    assert awgn_sigma(0.0, 1.0) == pytest.approx(math.sqrt(0.5))
    assert awgn_sigma(10.0, 1.0) == pytest.approx(math.sqrt(0.05))
    with pytest.raises(DomainError):
        awgn_sigma(10.0, 0.0)


def test_awgn_monte_carlo_power():
    sigma = awgn_sigma(7.0, 2.0)
    noise = sigma * RngStream(4).generator().standard_normal((1_000_000, 2))
    measured = np.mean(np.sum(noise**2, axis=1))
    expected = 2.0 / 10 ** 0.7
    assert abs(measured - expected) / expected < 0.01


def test_identity_channel():
    x = random_blocks(10)
    y = apply_channel(x, IDENTITY, RngStream(0))
    np.testing.assert_array_equal(y, x[:, :2])


def test_phase_pi_negates():
    real = ChannelRealization(math.pi, 1.0, 0.0, math.inf, 3.0, math.inf)
    x = random_blocks(10)
    np.testing.assert_allclose(apply_channel(x, real, RngStream(0)), -x[:, :2], atol=1e-15)


def test_empirical_snr():
    real = ChannelRealization(1.1, 0.8, 0.7, 1.5, 3.0, 10.0)
    x = random_blocks(100_000, seed=5)
    y = apply_channel(x, real, RngStream(9))
    clean = noiseless_response(x, real)
    noise = (y[:, 0] + 1j * y[:, 1]) - clean
    snr = 10 * math.log10(np.mean(np.abs(clean) ** 2) / np.mean(np.abs(noise) ** 2))
    assert abs(snr - 10.0) < 0.2


def test_noiseless_deterministic():
    real = ChannelRealization(0.4, 1.3, 1.6, 1.5, 3.0, math.inf)
    x = random_blocks(50)
    a = apply_channel(x, real, RngStream(1))
    b = apply_channel(x, real, RngStream(2))
    np.testing.assert_array_equal(a, b)


def test_noise_reproducible_per_stream():
    real = ChannelRealization(0.4, 1.3, 1.6, 1.5, 3.0, 12.0)
    x = random_blocks(50)
    np.testing.assert_array_equal(apply_channel(x, real, RngStream(3)), apply_channel(x, real, RngStream(3)))
    assert not np.array_equal(apply_channel(x, real, RngStream(3)), apply_channel(x, real, RngStream(4)))


@given(
    theta=st.floats(-math.pi, math.pi),
    phase=st.floats(0, 2 * math.pi),
    tau=st.floats(0, 2),
    seed=st.integers(0, 1000),
)
@settings(max_examples=50, deadline=None)
def test_phase_covariance(theta, phase, tau, seed):
    real = ChannelRealization(phase, 0.9, tau, 1.2, 2.0, math.inf)
    x = random_blocks(8, seed)
    rotated = to_real(to_complex(x) * np.exp(1j * theta))
    y = noiseless_response(x, real)
    y_rot = noiseless_response(rotated, real)
    np.testing.assert_allclose(y_rot, y * np.exp(1j * theta), atol=1e-12)


def test_apply_rejects_bad_input():
    with pytest.raises(DomainError):
        apply_channel(np.zeros((3, 4)), IDENTITY, RngStream(0))
    bad = np.zeros((2, 6))
    bad[0, 0] = np.inf
    with pytest.raises(DomainError):
        apply_channel(bad, IDENTITY, RngStream(0))


def test_zero_input_no_nan():
    real = ChannelRealization(0.0, 1.0, 1.0, 1.5, 3.0, 10.0)
    y = apply_channel(np.zeros((4, 6)), real, RngStream(0))
    assert np.all(y == 0)


def test_simulated_channel_exposes_apply():
    ch = SimulatedChannel(IDENTITY)
    x = random_blocks(3)
    np.testing.assert_array_equal(ch.apply(x, RngStream(0)), x[:, :2])
    with pytest.raises(AttributeError):
        ch.extra = 1
