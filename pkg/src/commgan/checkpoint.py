"""Text checkpoints holding the three trained networks and their channel.

Layout::

    COMMGAN-CKPT v1
    seed <int>
    c_max <float | none>
    channel <phase> <gain> <tau> <a_sat> <smoothness> <snr_db>
    net encoder <dims comma-separated> <activations comma-separated>
    <one value per line: W0 row-major, b0, W1, b1, ...>
    net decoder ...
    net approximator ...

Floats are written with ``repr`` so that loading reproduces every bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import ChannelRealization
from .errors import CheckpointError, ConfigError
from .nn import ACTIVATIONS, DenseLayer, Mlp

MAGIC = "COMMGAN-CKPT"
VERSION = "v1"
NET_ORDER = ("encoder", "decoder", "approximator")


@dataclass
class Checkpoint:
    encoder: Mlp
    decoder: Mlp
    approximator: Mlp
    realization: ChannelRealization
    seed: int
    c_max: float | None = 2.0
    version: str = VERSION


def _fmt(x: float) -> str:
    return repr(float(x))


def dumps(ckpt: Checkpoint) -> str:
    r = ckpt.realization
    lines = [
        f"{MAGIC} {VERSION}",
        f"seed {ckpt.seed}",
        f"c_max {'none' if ckpt.c_max is None else _fmt(ckpt.c_max)}",
        "channel " + " ".join(_fmt(v) for v in (r.phase, r.gain, r.tau, r.a_sat, r.smoothness, r.snr_db)),
    ]
    for name in NET_ORDER:
        net = getattr(ckpt, name)
        lines.append(
            f"net {name} {','.join(map(str, net.dims))} {','.join(net.activations)}"
        )
        for p in net.parameters():
            lines.extend(_fmt(v) for v in p.reshape(-1))
    return "\n".join(lines) + "\n"


def save_checkpoint(ckpt: Checkpoint, path) -> Path:
    path = Path(path)
    path.write_text(dumps(ckpt))
    return path


class _Lines:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise CheckpointError(f"unexpected end of file while reading {what}")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def floats(self, n: int, what: str) -> np.ndarray:
        chunk = self.lines[self.pos : self.pos + n]
        if len(chunk) < n:
            raise CheckpointError(
                f"dimension mismatch in {what}: header declares {n} values, "
                f"file holds {len(chunk)}"
            )
        self.pos += n
        try:
            return np.array([float(v) for v in chunk])
        except ValueError as exc:
            raise CheckpointError(f"bad value in {what}: {exc}") from None


def _field(line: str, key: str) -> str:
    head, _, rest = line.partition(" ")
    if head != key or not rest:
        raise CheckpointError(f"expected '{key} ...', got '{line[:40]}'")
    return rest.strip()


def _read_net(src: _Lines, name: str) -> Mlp:
    header = src.next(f"{name} header").split()
    if len(header) != 4 or header[0] != "net" or header[1] != name:
        raise CheckpointError(f"expected 'net {name} <dims> <activations>'")
    try:
        dims = [int(d) for d in header[2].split(",")]
    except ValueError:
        raise CheckpointError(f"bad dimensions for {name}: '{header[2]}'") from None
    acts = header[3].split(",")
    if len(dims) < 2 or any(d < 1 for d in dims) or len(acts) != len(dims) - 1:
        raise CheckpointError(f"inconsistent dimension header for {name}")
    if any(a not in ACTIVATIONS for a in acts):
        raise CheckpointError(f"unknown activation in {name}")
    layers = []
    for k, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        W = src.floats(fan_in * fan_out, f"{name} layer {k} weights").reshape(fan_out, fan_in)
        b = src.floats(fan_out, f"{name} layer {k} biases")
        layers.append(DenseLayer(W, b))
    try:
        return Mlp(layers, acts)
    except ConfigError as exc:
        raise CheckpointError(f"{name}: {exc}") from None


def loads(text: str) -> Checkpoint:
    src = _Lines(text)
    magic = src.next("magic line").split()
    if len(magic) != 2 or magic[0] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic line)")
    if magic[1] != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {magic[1]}, expected {VERSION}")
    try:
        seed = int(_field(src.next("seed"), "seed"))
        c_text = _field(src.next("c_max"), "c_max")
        c_max = None if c_text == "none" else float(c_text)
        values = [float(v) for v in _field(src.next("channel"), "channel").split()]
    except ValueError as exc:
        raise CheckpointError(f"bad header value: {exc}") from None
    if len(values) != 6:
        raise CheckpointError(f"channel line needs 6 values, got {len(values)}")
    realization = ChannelRealization(*values)
    nets = {name: _read_net(src, name) for name in NET_ORDER}
    if src.pos != len(src.lines):
        raise CheckpointError(
            f"dimension mismatch: {len(src.lines) - src.pos} values beyond the declared dimensions"
        )
    return Checkpoint(
        nets["encoder"], nets["decoder"], nets["approximator"], realization, seed, c_max
    )


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CheckpointError(f"{path}: {exc.strerror}") from exc
    try:
        return loads(text)
    except CheckpointError as exc:
        raise CheckpointError(f"{path}: {exc}") from None
