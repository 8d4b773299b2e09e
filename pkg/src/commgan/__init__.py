"""Learn a modulation scheme over a gradient-opaque channel.

A channel-approximator network is fitted to samples from a black-box channel,
and the encoder/decoder pair is trained end-to-end through that approximator,
alternating between the two objectives.
"""

from .channel import ChannelConfig, ChannelRealization, SimulatedChannel, draw_channel_realization
from .errors import (
    CheckpointError,
    CommGanError,
    ConfigError,
    ContractError,
    DomainError,
    NumericError,
)
from .evaluation import SerReport, baseline_qam16_sim, measure_ser, qam16_ser_theory
from .rng import RngStream
from .training import EpochMetrics, TrainConfig, TrainingError, train_commgan

__version__ = "0.1.0"
