"""Symbol error rate measurement, the square 16-QAM baseline and CSV exports."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import BlackBoxChannel, awgn_sigma
from .errors import DomainError
from .nn import Mlp
from .rng import RngStream
from .transceiver import NUM_SYMBOLS, decode, encode, hard_decision

Z95 = 1.959963984540054
CHUNK = 65536
METRICS_HEADER = ("epoch", "l0_mean", "l1_mean", "ser", "residual_mse")
CONSTELLATION_HEADER = ("role", "symbol", "i", "q")
ROLES = ("tx0", "tx1", "tx2", "rx_mean")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def wilson_interval(errors: int, n: int, z: float = Z95) -> tuple[float, float]:
    p = errors / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class SerReport:
    symbols_tested: int
    errors: int
    ser: float
    lo: float
    hi: float

    @classmethod
    def from_counts(cls, errors: int, n: int) -> SerReport:
        lo, hi = wilson_interval(errors, n)
        ser = errors / n
        return cls(n, errors, ser, min(lo, ser), max(hi, ser))

    def csv_row(self) -> str:
        return ",".join(
            [str(self.symbols_tested), str(self.errors), fmt(self.ser), fmt(self.lo), fmt(self.hi)]
        )


def measure_ser(
    f: Mlp,
    g: Mlp,
    channel: BlackBoxChannel,
    n: int,
    rng: RngStream,
    c_max: float | None = 2.0,
    chunk: int = CHUNK,
) -> SerReport:
    """Hard-decision SER of encoder/decoder over the black-box channel."""
    if n < 1:
        raise DomainError(f"need at least one test symbol, got {n}")
    symbols = rng.substream(0).generator().integers(0, NUM_SYMBOLS, size=n)
    errors = 0
    for i, start in enumerate(range(0, n, chunk)):
        s = symbols[start : start + chunk]
        x, _ = encode(f, s, c_max)
        y = channel.apply(x, rng.substream(1, i))
        logits, _ = decode(g, y)
        errors += int(np.count_nonzero(hard_decision(logits) != s))
    return SerReport.from_counts(errors, n)


def q_function(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def qam16_ser_theory(snr_db: float) -> float:
    """Exact SER of square 16-QAM over AWGN at the given Es/N0 in dB."""
    if snr_db == math.inf:
        return 0.0
    if snr_db == -math.inf:
        return 15.0 / 16.0
    p_axis = 1.5 * q_function(math.sqrt(0.2 * 10.0 ** (snr_db / 10.0)))
    # 1 - (1 - p)^2 without cancellation at high SNR
    return p_axis * (2.0 - p_axis)


def qam16_points() -> np.ndarray:
    """Unit average energy square 16-QAM grid as complex numbers."""
    levels = np.array([-3.0, -1.0, 1.0, 3.0])
    pts = (levels[:, None] + 1j * levels[None, :]).reshape(-1)
    return pts / math.sqrt(10.0)


def baseline_qam16_sim(snr_db: float, n: int, rng: RngStream, chunk: int = CHUNK) -> SerReport:
    """Monte-Carlo minimum-distance detection of 16-QAM over AWGN."""
    if n < 1:
        raise DomainError(f"need at least one test symbol, got {n}")
    pts = qam16_points()
    sigma = awgn_sigma(snr_db, 1.0)
    symbols = rng.substream(0).generator().integers(0, 16, size=n)
    errors = 0
    for i, start in enumerate(range(0, n, chunk)):
        s = symbols[start : start + chunk]
        noise = rng.substream(1, i).generator().standard_normal((s.size, 2))
        r = pts[s] + sigma * (noise[:, 0] + 1j * noise[:, 1])
        nearest = np.argmin(np.abs(r[:, None] - pts[None, :]), axis=1)
        errors += int(np.count_nonzero(nearest != s))
    return SerReport.from_counts(errors, n)


def constellation(
    f: Mlp,
    channel: BlackBoxChannel,
    rng: RngStream,
    c_max: float | None = 2.0,
    draws: int = 1000,
) -> tuple[np.ndarray, np.ndarray]:
    """Transmit samples ``(16, 3)`` and noise-averaged receive points ``(16,)``, complex."""
    s = np.tile(np.arange(NUM_SYMBOLS), draws)
    x, _ = encode(f, s, c_max)
    y = channel.apply(x, rng)
    tx = x[:NUM_SYMBOLS, 0::2] + 1j * x[:NUM_SYMBOLS, 1::2]
    rx = y.reshape(draws, NUM_SYMBOLS, 2).mean(axis=0)
    return tx, rx[:, 0] + 1j * rx[:, 1]


def export_constellation(
    f: Mlp,
    channel: BlackBoxChannel,
    path,
    rng: RngStream,
    c_max: float | None = 2.0,
    draws: int = 1000,
) -> Path:
    if draws < 1000:
        raise DomainError("rx_mean needs at least 1000 channel draws per symbol")
    tx, rx = constellation(f, channel, rng, c_max, draws)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONSTELLATION_HEADER)
        for j, role in enumerate(ROLES[:3]):
            for sym in range(NUM_SYMBOLS):
                w.writerow([role, sym, fmt(tx[sym, j].real), fmt(tx[sym, j].imag)])
        for sym in range(NUM_SYMBOLS):
            w.writerow(["rx_mean", sym, fmt(rx[sym].real), fmt(rx[sym].imag)])
    return path


def metrics_row(m) -> list[str]:
    return [str(m.epoch), fmt(m.l0_mean), fmt(m.l1_mean), fmt(m.ser), fmt(m.residual_mse)]


def export_metrics(history, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for m in history:
            w.writerow(metrics_row(m))
    return path
