"""Run configuration files: line-oriented ``key = value`` with ``#`` comments.

Every key has a default, so an empty file is a valid configuration. The
resolved configuration (defaults expanded) is written back in the same format.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .channel import ChannelConfig
from .errors import CommGanError, ConfigError
from .training import TrainConfig


@dataclass
class RunConfig:
    # training schedule
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
    # architecture
    enc_hidden: tuple[int, ...] = (64, 64)
    dec_hidden: tuple[int, ...] = (64, 64)
    chan_hidden: tuple[int, ...] = (64, 64)
    clip: bool = True
    c_max: float = 2.0
    encoder_input: str = "onehot"
    # channel
    phase_min: float = 0.0
    phase_max: float = 2.0 * math.pi
    tau_min: float = 0.5
    tau_max: float = 1.5
    gain: float = 1.0
    a_sat: float = 1.5
    smoothness: float = 3.0
    snr_db: float = 15.0
    # output
    out_dir: str = ""

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            steps0=self.steps0,
            steps1=self.steps1,
            batch_size=self.batch_size,
            lr_h=self.lr_h,
            lr_fg=self.lr_fg,
            noise_insertion=self.noise_insertion,
            noise_sigma=self.noise_sigma,
            eval_symbols=self.eval_symbols,
            patience=self.patience,
            seed=self.seed,
            enc_hidden=self.enc_hidden,
            dec_hidden=self.dec_hidden,
            chan_hidden=self.chan_hidden,
            c_max=self.c_max if self.clip else None,
            encoder_input=self.encoder_input,
        )

    def channel_config(self) -> ChannelConfig:
        return ChannelConfig(
            phase_min=self.phase_min,
            phase_max=self.phase_max,
            tau_min=self.tau_min,
            tau_max=self.tau_max,
            gain=self.gain,
            a_sat=self.a_sat,
            smoothness=self.smoothness,
            snr_db=self.snr_db,
        )

    def validate(self) -> None:
        self.train_config().validate()
        self.channel_config().validate()
        if not (self.c_max > 0.0 and math.isfinite(self.c_max)):
            raise ConfigError("must be a positive finite number", key="c_max")


_KINDS = {f.name: f.type for f in fields(RunConfig)}


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: '{text}'")


def _parse_widths(text: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("need at least one hidden width")
    return tuple(int(p) for p in parts)


def parse_value(key: str, text: str):
    kind = _KINDS[key]
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "bool":
        return _parse_bool(text)
    if kind == "tuple[int, ...]":
        return _parse_widths(text)
    return text


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config_text(text: str) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _KINDS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in values:
            raise ConfigError("duplicate key", key=key, line=lineno)
        try:
            values[key] = parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"cannot parse '{value}': {exc}", key=key, line=lineno) from None
        values[key] = (values[key], lineno)
    cfg = RunConfig(**{k: v for k, (v, _) in values.items()})
    try:
        cfg.validate()
    except ConfigError as exc:
        line = values[exc.key][1] if exc.key in values else None
        raise ConfigError(exc.detail, key=exc.key, line=line) from None
    return cfg


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CommGanError(f"{path}: {exc.strerror}") from exc
    return parse_config_text(text)


def format_config(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {format_value(getattr(cfg, f.name))}\n" for f in fields(RunConfig))
