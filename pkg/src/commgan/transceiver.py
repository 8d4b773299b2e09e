"""Encoder, decoder and channel-approximator networks around the nn engine."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError, DomainError
from .nn import Mlp, Tape, init_mlp, mlp_backward, mlp_forward
from .rng import RngStream

NUM_SYMBOLS = 16
TX_WIDTH = 6
RX_WIDTH = 2
POWER_EPS = 1e-12
# encoder input representations; the mode is read back from the net's input width
INPUT_WIDTHS = {"onehot": NUM_SYMBOLS, "index": 1}


@dataclass
class EncodeTape:
    net_tape: Tape
    raw: np.ndarray
    scale: float


def _mlp_for(in_width: int, hidden: Sequence[int], out_width: int, rng: RngStream) -> Mlp:
    dims = [in_width, *hidden, out_width]
    return init_mlp(dims, ["relu"] * len(hidden) + ["linear"], rng)


def init_encoder(
    rng: RngStream, hidden: Sequence[int] = (64, 64), input_mode: str = "onehot"
) -> Mlp:
    if input_mode not in INPUT_WIDTHS:
        raise DomainError(f"unknown encoder input mode '{input_mode}'")
    return _mlp_for(INPUT_WIDTHS[input_mode], hidden, TX_WIDTH, rng)


def init_decoder(rng: RngStream, hidden: Sequence[int] = (64, 64)) -> Mlp:
    return _mlp_for(RX_WIDTH, hidden, NUM_SYMBOLS, rng)


def init_approximator(rng: RngStream, hidden: Sequence[int] = (64, 64)) -> Mlp:
    return _mlp_for(TX_WIDTH, hidden, RX_WIDTH, rng)


def one_hot(s: np.ndarray, k: int = NUM_SYMBOLS) -> np.ndarray:
    s = np.asarray(s)
    if s.ndim != 1:
        raise DomainError("symbol batch must be one-dimensional")
    if s.size and (s.min() < 0 or s.max() >= k):
        raise DomainError(f"symbol indices must lie in [0, {k})")
    out = np.zeros((s.size, k))
    out[np.arange(s.size), s] = 1.0
    return out


def index_input(s: np.ndarray, k: int = NUM_SYMBOLS) -> np.ndarray:
    """Symbol indices as a single feature spread evenly over [-1, 1]."""
    onehot = one_hot(s, k)  # validates the batch
    return (2.0 * (onehot @ np.arange(k)) / (k - 1) - 1.0)[:, None]


def power_normalize(blocks: np.ndarray) -> tuple[np.ndarray, float]:
    """Scale a batch to unit mean complex-sample power; returns the scale used.

    See ``encode_backward`` for how gradients treat the scale.
    """
    blocks = np.asarray(blocks, dtype=np.float64)
    # mean |c|^2 over all complex samples = 2 * mean of the squared reals
    power = 2.0 * float(np.mean(blocks * blocks))
    scale = 1.0 / np.sqrt(power + POWER_EPS)
    return blocks * scale, float(scale)


def clip_samples(blocks: np.ndarray, c_max: float) -> np.ndarray:
    """Limit each complex sample magnitude to ``c_max``; phase preserved."""
    if not c_max > 0.0:
        raise DomainError(f"c_max must be positive, got {c_max}")
    pairs = np.asarray(blocks, dtype=np.float64).reshape(blocks.shape[0], -1, 2)
    mag = np.sqrt((pairs * pairs).sum(axis=2, keepdims=True))
    factor = np.where(mag > c_max, c_max / np.maximum(mag, c_max), 1.0)
    return (pairs * factor).reshape(blocks.shape)


def encode(
    f: Mlp, s: np.ndarray, c_max: float | None = 2.0
) -> tuple[np.ndarray, EncodeTape]:
    if f.dims[0] not in INPUT_WIDTHS.values() or f.dims[-1] != TX_WIDTH:
        raise ContractError(
            f"encoder must map {NUM_SYMBOLS} (one-hot) or 1 (index) -> {TX_WIDTH}, got {f.dims}"
        )
    features = one_hot(s) if f.dims[0] == NUM_SYMBOLS else index_input(s)
    raw, tape = mlp_forward(f, features)
    x, scale = power_normalize(raw)
    if c_max is not None:
        x = clip_samples(x, c_max)
    return x, EncodeTape(tape, raw, scale)


def encode_backward(f: Mlp, tape: EncodeTape, grad_x: np.ndarray, through_scale: bool = True):
    """Gradients of the encoder weights; clipping passes gradients straight through.

    With ``through_scale`` the dependence of the normalization scale on the
    batch is differentiated too, otherwise the scale is held constant.
    """
    grad_raw = grad_x * tape.scale
    if through_scale:
        # scale = (2 mean(raw^2) + eps)^(-1/2)  =>  d scale / d raw = -2 scale^3 raw / n
        n = tape.raw.size
        grad_raw = grad_raw - (2.0 * tape.scale**3 / n) * float(np.sum(grad_x * tape.raw)) * tape.raw
    return mlp_backward(f, tape.net_tape, grad_raw)


def approx_channel(h: Mlp, blocks: np.ndarray) -> tuple[np.ndarray, Tape]:
    if h.dims[0] != TX_WIDTH or h.dims[-1] != RX_WIDTH:
        raise ContractError(f"channel approximator must map {TX_WIDTH} -> {RX_WIDTH}, got {h.dims}")
    return mlp_forward(h, blocks)


def decode(g: Mlp, y: np.ndarray) -> tuple[np.ndarray, Tape]:
    if g.dims[0] != RX_WIDTH or g.dims[-1] != NUM_SYMBOLS:
        raise ContractError(f"decoder must map {RX_WIDTH} -> {NUM_SYMBOLS}, got {g.dims}")
    return mlp_forward(g, y)


def hard_decision(logits: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum, which is the lowest-index tie rule
    return np.argmax(np.asarray(logits), axis=1)
