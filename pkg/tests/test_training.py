import math

import numpy as np
import pytest

from commgan.channel import ChannelRealization, SimulatedChannel
from commgan.errors import ConfigError
from commgan.nn import AdamState
from commgan.rng import RngStream
from commgan.training import (
    EpochMetrics,
    TrainConfig,
    TrainingError,
    autoencoder_step,
    channel_fit_step,
    stopping_check,
    train_commgan,
)
from commgan.transceiver import init_approximator, init_decoder, init_encoder

from conftest import digest

CLEAN_LINEAR = ChannelRealization(phase=0.7, gain=1.0, tau=1.0, a_sat=math.inf, smoothness=3.0, snr_db=math.inf)
IDENTITY = ChannelRealization(phase=0.0, gain=1.0, tau=0.0, a_sat=math.inf, smoothness=3.0, snr_db=math.inf)


class CountingChannel:
    """Black-box double: records every attribute touched, forwards only ``apply``."""

    def __init__(self, inner):
        object.__setattr__(self, "_inner", inner)
        object.__setattr__(self, "touched", [])
        object.__setattr__(self, "calls", 0)
        object.__setattr__(self, "last_output", None)

    def __getattribute__(self, name):
        if name in ("touched", "calls", "last_output", "_inner", "__class__", "__dict__"):
            return object.__getattribute__(self, name)
        object.__getattribute__(self, "touched").append(name)
        if name != "apply":
            raise AttributeError(name)
        inner = object.__getattribute__(self, "_inner")

        def apply(blocks, rng):
            object.__setattr__(self, "calls", object.__getattribute__(self, "calls") + 1)
            out = inner.apply(blocks, rng)
            object.__setattr__(self, "last_output", out)
            return out

        return apply


def nets(seed=0):
    root = RngStream(seed)
    return (
        init_encoder(root.substream(0)),
        init_decoder(root.substream(1)),
        init_approximator(root.substream(2)),
    )


def test_channel_fit_converges_on_identity():
    cfg = TrainConfig()
    f, _, h = nets(1)
    adam = AdamState.for_net(h, lr=cfg.lr_h)
    channel = SimulatedChannel(IDENTITY)
    for step in range(2000):
        l0 = channel_fit_step(f, h, channel, adam, cfg, RngStream(2).substream(step))
    assert l0 < 1e-3


def test_channel_fit_freezes_encoder_and_decoder():
    cfg = TrainConfig()
    f, g, h = nets(2)
    before_fg, before_h = digest(f, g), digest(h)
    channel_fit_step(f, h, SimulatedChannel(CLEAN_LINEAR), AdamState.for_net(h), cfg, RngStream(0))
    assert digest(f, g) == before_fg
    assert digest(h) != before_h


def test_first_l0_is_output_power_for_zero_predictor():
    cfg = TrainConfig()
    f, _, h = nets(3)
    h.layers[-1].W[:] = 0
    channel = CountingChannel(SimulatedChannel(ChannelRealization(1.0, 0.8, 0.6, 1.5, 3.0, 15.0)))
    l0 = channel_fit_step(f, h, channel, AdamState.for_net(h), cfg, RngStream(1))
    assert l0 == pytest.approx(np.mean(channel.last_output**2), rel=1e-12)


def test_autoencoder_step_freezes_approximator():
    cfg = TrainConfig()
    f, g, h = nets(4)
    before_f, before_g, before_h = digest(f), digest(g), digest(h)
    adam = (AdamState.for_net(f), AdamState.for_net(g))
    autoencoder_step(f, g, h, adam, cfg, RngStream(0), noise_sigma=0.1)
    assert digest(h) == before_h
    assert digest(f) != before_f and digest(g) != before_g


def test_untrained_l1_is_log16():
    cfg = TrainConfig()
    f, g, h = nets(5)
    g.layers[-1].W[:] = 0
    adam = (AdamState.for_net(f), AdamState.for_net(g))
    assert autoencoder_step(f, g, h, adam, cfg, RngStream(0)) == pytest.approx(math.log(16), abs=1e-12)
    f, g, h = nets(6)
    adam = (AdamState.for_net(f), AdamState.for_net(g))
    assert abs(autoencoder_step(f, g, h, adam, cfg, RngStream(0)) - math.log(16)) < 1.0


def test_training_touches_channel_only_through_apply():
    cfg = TrainConfig(epochs=2, steps0=5, steps1=5, eval_symbols=100)
    channel = CountingChannel(SimulatedChannel(ChannelRealization(1.0, 1.0, 0.8, 1.5, 3.0, 15.0)))
    train_commgan(cfg, channel)
    assert set(channel.touched) == {"apply"}
    # per epoch: steps0 measurements plus one SER evaluation batch
    assert channel.calls == 2 * (5 + 1)


def test_autoencoder_phase_never_calls_channel():
    cfg = TrainConfig()
    f, g, h = nets(7)
    adam = (AdamState.for_net(f), AdamState.for_net(g))
    channel = CountingChannel(SimulatedChannel(IDENTITY))
    for step in range(5):
        autoencoder_step(f, g, h, adam, cfg, RngStream(step))
    assert channel.calls == 0 and channel.touched == []


def test_train_deterministic():
    cfg = TrainConfig(epochs=3, steps0=20, steps1=20, eval_symbols=512, seed=9)
    channel = SimulatedChannel(ChannelRealization(2.0, 1.0, 1.2, 1.5, 3.0, 15.0))
    a = train_commgan(cfg, channel).metrics
    b = train_commgan(cfg, channel).metrics
    assert a == b
    assert [m.epoch for m in a] == [1, 2, 3]
    assert all(0.0 <= m.ser <= 1.0 for m in a)


def test_noiseless_pipeline_floor():
    cfg = TrainConfig(epochs=30, noise_insertion="off", seed=3, patience=math.inf)
    result = train_commgan(cfg, SimulatedChannel(CLEAN_LINEAR))
    assert result.metrics[-1].l1_mean < 1e-3


def test_default_channel_l1_below_tenth(default_system):
    _, _, result = default_system
    assert result.metrics[-1].l1_mean < 0.1


def test_on_epoch_callback_sees_every_epoch():
    seen = []
    cfg = TrainConfig(epochs=2, steps0=3, steps1=3, eval_symbols=64)
    result = train_commgan(cfg, SimulatedChannel(IDENTITY), on_epoch=seen.append)
    assert seen == result.metrics


def test_training_error_carries_history():
    class Exploding:
        def __init__(self):
            self.calls = 0

        def apply(self, blocks, rng):
            self.calls += 1
            out = blocks[:, :2].copy()
            if self.calls > 4:
                out[0, 0] = np.inf
            return out

    cfg = TrainConfig(epochs=5, steps0=2, steps1=2, eval_symbols=16)
    with pytest.raises(TrainingError) as info:
        train_commgan(cfg, Exploding())
    assert len(info.value.history) == 1
    assert "epoch 2" in str(info.value)


@pytest.mark.parametrize(
    "kwargs",
    [dict(steps0=0), dict(steps1=0), dict(epochs=0), dict(batch_size=0), dict(lr_h=0.0), dict(noise_insertion="loud")],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        TrainConfig(**kwargs).validate()


def history(sers):
    return [EpochMetrics(i + 1, 1.0, 1.0, s, 0.0) for i, s in enumerate(sers)]


def test_stopping_monotone_improvement():
    cfg = TrainConfig(epochs=10, patience=2)
    sers = [0.5 * 0.9**k for k in range(10)]
    assert not any(stopping_check(history(sers[:n]), cfg) for n in range(1, 10))
    assert stopping_check(history(sers), cfg)


def test_stopping_flat():
    cfg = TrainConfig(epochs=100, patience=3)
    assert not stopping_check(history([0.2, 0.2, 0.2]), cfg)
    assert stopping_check(history([0.2, 0.2, 0.2, 0.2]), cfg)
    # under 1% relative is not an improvement
    assert stopping_check(history([0.2, 0.1995, 0.199, 0.1985]), cfg)


def test_stopping_infinite_patience():
    cfg = TrainConfig(epochs=6, patience=math.inf)
    flat = [0.3] * 6
    assert not any(stopping_check(history(flat[:n]), cfg) for n in range(1, 6))
    assert stopping_check(history(flat), cfg)
