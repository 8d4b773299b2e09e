"""Alternating training of the channel approximator and the autoencoder.

Each epoch first fits the approximator ``h`` to the black-box channel with an
MSE loss while the encoder stays frozen, then trains encoder and decoder
end-to-end through the frozen approximator with a cross-entropy loss. The
black-box channel is only ever asked for samples.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import BlackBoxChannel
from .errors import CommGanError, ConfigError
from .evaluation import measure_ser
from .nn import AdamState, Mlp, adam_step, mlp_backward, mse, softmax_ce
from .rng import RngStream
from .transceiver import (
    INPUT_WIDTHS,
    NUM_SYMBOLS,
    approx_channel,
    decode,
    encode,
    encode_backward,
    init_approximator,
    init_decoder,
    init_encoder,
)

log = logging.getLogger(__name__)

NOISE_MODES = ("off", "fixed", "residual")
MIN_NOISE_VAR = 1e-4
RESIDUAL_DECAY = 0.9
IMPROVEMENT = 0.01


@dataclass
class TrainConfig:
    epochs: int = 100
    steps0: int = 200
    steps1: int = 200
    batch_size: int = 256
    lr_h: float = 1e-3
    lr_fg: float = 1e-3
    noise_insertion: str = "residual"
    noise_sigma: float = 0.05
    eval_symbols: int = 4096
    patience: float = 20
    seed: int = 0
    enc_hidden: tuple[int, ...] = (64, 64)
    dec_hidden: tuple[int, ...] = (64, 64)
    chan_hidden: tuple[int, ...] = (64, 64)
    c_max: float | None = 2.0
    encoder_input: str = "onehot"

    def validate(self) -> None:
        for key in ("epochs", "steps0", "steps1", "batch_size", "eval_symbols"):
            if getattr(self, key) < 1:
                raise ConfigError("must be >= 1", key=key)
        if not self.patience >= 1:
            raise ConfigError("must be >= 1 (inf disables early stopping)", key="patience")
        for key in ("lr_h", "lr_fg"):
            value = getattr(self, key)
            if not (value > 0.0 and math.isfinite(value)):
                raise ConfigError("learning rate must be positive", key=key)
        if self.noise_insertion not in NOISE_MODES:
            raise ConfigError(f"must be one of {', '.join(NOISE_MODES)}", key="noise_insertion")
        if not (self.noise_sigma >= 0.0 and math.isfinite(self.noise_sigma)):
            raise ConfigError("must be a finite non-negative number", key="noise_sigma")
        for key in ("enc_hidden", "dec_hidden", "chan_hidden"):
            if any(w < 1 for w in getattr(self, key)):
                raise ConfigError("hidden widths must be positive", key=key)
        if self.c_max is not None and not self.c_max > 0.0:
            raise ConfigError("must be positive", key="c_max")
        if self.encoder_input not in INPUT_WIDTHS:
            raise ConfigError(f"must be one of {', '.join(INPUT_WIDTHS)}", key="encoder_input")


@dataclass
class EpochMetrics:
    epoch: int
    l0_mean: float
    l1_mean: float
    ser: float
    residual_mse: float


@dataclass
class TrainResult:
    encoder: Mlp
    decoder: Mlp
    approximator: Mlp
    metrics: list[EpochMetrics] = field(default_factory=list)


class TrainingError(CommGanError):
    """Training aborted; ``history`` holds the epochs completed before the failure."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


def draw_symbols(rng: RngStream, n: int) -> np.ndarray:
    return rng.generator().integers(0, NUM_SYMBOLS, size=n)


def channel_fit_step(
    f: Mlp,
    h: Mlp,
    channel: BlackBoxChannel,
    adam_h: AdamState,
    cfg: TrainConfig,
    rng: RngStream,
) -> float:
    """One MSE update of ``h`` against channel measurements; ``f`` is read only."""
    s0 = draw_symbols(rng.substream(0), cfg.batch_size)
    x, _ = encode(f, s0, cfg.c_max)
    y0 = channel.apply(x, rng.substream(1))
    y_hat, tape = approx_channel(h, x)
    l0, grad = mse(y_hat, y0)
    adam_step(adam_h, h, mlp_backward(h, tape, grad))
    return l0


def autoencoder_step(
    f: Mlp,
    g: Mlp,
    h: Mlp,
    adam_fg: tuple[AdamState, AdamState],
    cfg: TrainConfig,
    rng: RngStream,
    noise_sigma: float = 0.0,
) -> float:
    """One cross-entropy update of ``f`` and ``g`` through the frozen ``h``."""
    adam_f, adam_g = adam_fg
    s0 = draw_symbols(rng.substream(0), cfg.batch_size)
    x, enc_tape = encode(f, s0, cfg.c_max)
    y_hat, h_tape = approx_channel(h, x)
    if noise_sigma > 0.0:
        y_hat = y_hat + noise_sigma * rng.substream(1).generator().standard_normal(y_hat.shape)
    logits, g_tape = decode(g, y_hat)
    l1, grad_logits = softmax_ce(logits, s0)
    g_grads = mlp_backward(g, g_tape, grad_logits)
    # noise is additive, so the gradient reaches h's output unchanged
    h_grads = mlp_backward(h, h_tape, g_grads.input_grad)
    f_grads = encode_backward(f, enc_tape, h_grads.input_grad)
    adam_step(adam_f, f, f_grads)
    adam_step(adam_g, g, g_grads)
    return l1


def stopping_check(history: list[EpochMetrics], cfg: TrainConfig) -> bool:
    """True once the epoch cap is hit or SER has stalled for ``patience`` epochs."""
    if len(history) >= cfg.epochs:
        return True
    if math.isinf(cfg.patience):
        return False
    best = history[0].ser
    stale = 0
    for m in history[1:]:
        if m.ser < best and m.ser <= best * (1.0 - IMPROVEMENT):
            best = m.ser
            stale = 0
        else:
            stale += 1
    return stale >= cfg.patience


def insertion_sigma(cfg: TrainConfig, residual_mse: float) -> float:
    if cfg.noise_insertion == "off":
        return 0.0
    if cfg.noise_insertion == "fixed":
        return cfg.noise_sigma
    return math.sqrt(max(residual_mse / 2.0, MIN_NOISE_VAR))


def train_commgan(
    cfg: TrainConfig,
    channel: BlackBoxChannel,
    rng: RngStream | None = None,
    on_epoch=None,
) -> TrainResult:
    """Run the alternating schedule until the epoch cap or the stopping rule.

    ``on_epoch(metrics)`` is called after every epoch, e.g. to stream rows to
    disk.
    """
    cfg.validate()
    rng = RngStream(cfg.seed) if rng is None else rng
    f = init_encoder(rng.substream(0, 0), cfg.enc_hidden, cfg.encoder_input)
    g = init_decoder(rng.substream(0, 1), cfg.dec_hidden)
    h = init_approximator(rng.substream(0, 2), cfg.chan_hidden)
    adam_h = AdamState.for_net(h, lr=cfg.lr_h)
    adam_fg = (AdamState.for_net(f, lr=cfg.lr_fg), AdamState.for_net(g, lr=cfg.lr_fg))
    history: list[EpochMetrics] = []
    residual = None

    for epoch in range(1, cfg.epochs + 1):
        try:
            l0_sum = 0.0
            for step in range(cfg.steps0):
                l0 = channel_fit_step(f, h, channel, adam_h, cfg, rng.substream(1, epoch, step))
                l0_sum += l0
                # complex residual energy per symbol is twice the per-component MSE
                r = 2.0 * l0
                residual = r if residual is None else RESIDUAL_DECAY * residual + (1.0 - RESIDUAL_DECAY) * r
            sigma = insertion_sigma(cfg, residual)
            l1_sum = 0.0
            for step in range(cfg.steps1):
                l1_sum += autoencoder_step(
                    f, g, h, adam_fg, cfg, rng.substream(2, epoch, step), noise_sigma=sigma
                )
            report = measure_ser(
                f, g, channel, cfg.eval_symbols, rng.substream(3, epoch), c_max=cfg.c_max
            )
        except CommGanError as exc:
            raise TrainingError(f"epoch {epoch}: {exc}", history) from exc
        m = EpochMetrics(
            epoch=epoch,
            l0_mean=l0_sum / cfg.steps0,
            l1_mean=l1_sum / cfg.steps1,
            ser=report.ser,
            residual_mse=float(residual),
        )
        history.append(m)
        log.info(
            "epoch %d  l0=%.3e  l1=%.3e  ser=%.4f  residual=%.3e",
            m.epoch, m.l0_mean, m.l1_mean, m.ser, m.residual_mse,
        )
        if on_epoch is not None:
            on_epoch(m)
        if stopping_check(history, cfg):
            break

    return TrainResult(f, g, h, history)
