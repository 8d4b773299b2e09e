"""Simulated black-box channel.

Signals move through here as real arrays: a transmit batch is ``(B, 6)``
interleaved ``[I0, Q0, I1, Q1, I2, Q2]`` and a receive batch is ``(B, 2)``
``[I, Q]``. Internally the stages work on complex numbers.

The impairment chain is fixed: Rapp saturation on each transmit sample,
linear-interpolation fractional delay into a single receive sample, phase
rotation and gain, then additive white Gaussian noise scaled to the batch-mean
receive power.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import ConfigError, DomainError
from .rng import RngStream

SAMPLES_PER_SYMBOL = 3
TAU_MAX = float(SAMPLES_PER_SYMBOL - 1)


@dataclass(frozen=True)
class ChannelConfig:
    phase_min: float = 0.0
    phase_max: float = 2.0 * math.pi
    tau_min: float = 0.5
    tau_max: float = 1.5
    gain: float = 1.0
    a_sat: float = 1.5
    smoothness: float = 3.0
    snr_db: float = 15.0

    def validate(self) -> None:
        if not (0.0 <= self.tau_min <= self.tau_max <= TAU_MAX):
            raise ConfigError(
                f"need 0 <= tau_min <= tau_max <= {TAU_MAX:g}, "
                f"got [{self.tau_min:g}, {self.tau_max:g}]",
                key="tau_min",
            )
        if not (math.isfinite(self.phase_min) and math.isfinite(self.phase_max)):
            raise ConfigError("phase range must be finite", key="phase_min")
        if self.phase_min > self.phase_max:
            raise ConfigError("phase_min > phase_max", key="phase_min")
        if not (self.gain > 0.0 and math.isfinite(self.gain)):
            raise ConfigError("gain must be a positive finite number", key="gain")
        if not self.a_sat > 0.0:
            raise ConfigError("a_sat must be positive (inf disables saturation)", key="a_sat")
        if not (self.smoothness > 0.0 and math.isfinite(self.smoothness)):
            raise ConfigError("smoothness must be a positive finite number", key="smoothness")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ConfigError("snr_db must be a number or +inf", key="snr_db")


@dataclass(frozen=True)
class ChannelRealization:
    """Hidden state of one static channel; frozen for a whole run."""

    phase: float
    gain: float
    tau: float
    a_sat: float
    smoothness: float
    snr_db: float

    def with_snr(self, snr_db: float) -> ChannelRealization:
        return ChannelRealization(
            self.phase, self.gain, self.tau, self.a_sat, self.smoothness, float(snr_db)
        )


class BlackBoxChannel(Protocol):
    """Samples in, samples out. Nothing else is reachable."""

    def apply(self, blocks: np.ndarray, rng: RngStream) -> np.ndarray: ...


def draw_channel_realization(config: ChannelConfig, rng: RngStream) -> ChannelRealization:
    config.validate()
    gen = rng.generator()
    u_phase, u_tau = gen.random(2)
    if config.phase_max == config.phase_min:
        phase = config.phase_min
    else:
        phase = config.phase_min + u_phase * (config.phase_max - config.phase_min)
    tau = config.tau_min + u_tau * (config.tau_max - config.tau_min)
    return ChannelRealization(
        phase=float(phase),
        gain=float(config.gain),
        tau=float(tau),
        a_sat=float(config.a_sat),
        smoothness=float(config.smoothness),
        snr_db=float(config.snr_db),
    )


def saturate(c, a_sat: float, p: float):
    """Rapp AM/AM compression; phase is untouched."""
    if math.isinf(a_sat):
        return c
    r = np.abs(c) / a_sat
    return c / (1.0 + r ** (2.0 * p)) ** (1.0 / (2.0 * p))


def frac_delay(block: np.ndarray, tau: float):
    """Linearly interpolate the 3-sample window at position ``tau``.

    ``block`` holds the samples along its last axis.
    """
    if not (0.0 <= tau <= TAU_MAX):
        raise DomainError(f"tau must lie in [0, {TAU_MAX:g}], got {tau}")
    block = np.asarray(block)
    k = int(math.floor(tau))
    alpha = tau - k
    k_next = min(k + 1, SAMPLES_PER_SYMBOL - 1)
    return (1.0 - alpha) * block[..., k] + alpha * block[..., k_next]


def awgn_sigma(snr_db: float, signal_power: float) -> float:
    """Per-real-component noise standard deviation for the given Es/N0."""
    if not signal_power > 0.0:
        raise DomainError(f"signal power must be positive, got {signal_power}")
    noise_power = signal_power / 10.0 ** (snr_db / 10.0)
    return math.sqrt(noise_power / 2.0)


def to_complex(blocks: np.ndarray) -> np.ndarray:
    blocks = np.asarray(blocks, dtype=np.float64)
    return blocks[..., 0::2] + 1j * blocks[..., 1::2]


def to_real(c: np.ndarray) -> np.ndarray:
    out = np.empty(c.shape[:-1] + (2 * c.shape[-1],))
    out[..., 0::2] = c.real
    out[..., 1::2] = c.imag
    return out


def noiseless_response(blocks: np.ndarray, real: ChannelRealization) -> np.ndarray:
    """Complex receive samples before noise, shape ``(B,)``."""
    c = to_complex(blocks)
    c = saturate(c, real.a_sat, real.smoothness)
    y = frac_delay(c, real.tau)
    return real.gain * np.exp(1j * real.phase) * y


def apply_channel(blocks: np.ndarray, real: ChannelRealization, rng: RngStream) -> np.ndarray:
    blocks = np.asarray(blocks, dtype=np.float64)
    if blocks.ndim != 2 or blocks.shape[1] != 2 * SAMPLES_PER_SYMBOL:
        raise DomainError(f"transmit batch must have shape (B, 6), got {blocks.shape}")
    if not np.all(np.isfinite(blocks)):
        raise DomainError("non-finite transmit samples")
    y = noiseless_response(blocks, real)
    out = np.stack([y.real, y.imag], axis=1)
    power = float(np.mean(np.abs(y) ** 2))
    if real.snr_db == math.inf or power == 0.0:
        return out
    sigma = awgn_sigma(real.snr_db, power)
    return out + sigma * rng.generator().standard_normal(out.shape)


class SimulatedChannel:
    """A :class:`BlackBoxChannel` backed by a frozen realization.

    Training code only ever calls :meth:`apply`. The realization is kept so
    the CLI can write it into checkpoints.
    """

    __slots__ = ("_realization",)

    def __init__(self, realization: ChannelRealization):
        self._realization = realization

    def apply(self, blocks: np.ndarray, rng: RngStream) -> np.ndarray:
        return apply_channel(blocks, self._realization, rng)

    @property
    def realization(self) -> ChannelRealization:
        return self._realization
