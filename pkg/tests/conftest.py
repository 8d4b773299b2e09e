import hashlib
import math
import time

import numpy as np
import pytest

from commgan.channel import ChannelConfig, SimulatedChannel, draw_channel_realization
from commgan.rng import RngStream
from commgan.training import TrainConfig, train_commgan

ACCEPTANCE_LINES = []
# wall-clock training seconds per session system, keyed by fixture name
TRAIN_SECONDS = {}


def digest(*nets):
    h = hashlib.sha256()
    for net in nets:
        for p in net.parameters():
            h.update(np.ascontiguousarray(p).tobytes())
    return h.hexdigest()


def trained(channel_cfg, seed=0, name=None):
    start = time.perf_counter()
    realization = draw_channel_realization(channel_cfg, RngStream(seed).substream(100))
    channel = SimulatedChannel(realization)
    cfg = TrainConfig(seed=seed)
    result = train_commgan(cfg, channel)
    if name:
        TRAIN_SECONDS[name] = time.perf_counter() - start
    return cfg, channel, result


@pytest.fixture(scope="session")
def awgn15_system():
    """Defaults on an AWGN-only channel (no saturation) at 15 dB."""
    return trained(ChannelConfig(a_sat=math.inf, snr_db=15.0), name="awgn15_system")


@pytest.fixture(scope="session")
def full20_system():
    """Defaults with saturation, random delay and phase, 20 dB."""
    return trained(ChannelConfig(a_sat=1.5, snr_db=20.0), name="full20_system")


@pytest.fixture(scope="session")
def default_system():
    return trained(ChannelConfig())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    """Call as ``record_criterion(number, passed, detail)``; lines print in the summary."""

    def record(number, passed, detail):
        ACCEPTANCE_LINES.append(f"criterion {str(number):>3}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record
