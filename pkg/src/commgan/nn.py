"""A small numpy multilayer perceptron engine with manual backpropagation.

Weights are stored as ``W`` with shape ``(out, in)`` so that a layer computes
``x @ W.T + b`` on a batch of row vectors. All arithmetic is float64.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, ContractError, DomainError, NumericError
from .rng import RngStream

ACTIVATIONS = ("relu", "linear")


@dataclass
class DenseLayer:
    W: np.ndarray
    b: np.ndarray

    @property
    def fan_in(self) -> int:
        return self.W.shape[1]

    @property
    def fan_out(self) -> int:
        return self.W.shape[0]


@dataclass
class Mlp:
    layers: list[DenseLayer]
    activations: list[str]

    def __post_init__(self):
        if len(self.layers) != len(self.activations):
            raise ConfigError(
                f"{len(self.layers)} layers but {len(self.activations)} activations"
            )
        for tag in self.activations:
            if tag not in ACTIVATIONS:
                raise ConfigError(f"unknown activation '{tag}'")
        if self.activations and self.activations[-1] != "linear":
            raise ConfigError("final layer activation must be 'linear'")
        for k in range(1, len(self.layers)):
            if self.layers[k].fan_in != self.layers[k - 1].fan_out:
                raise ConfigError(
                    f"layer {k} expects width {self.layers[k].fan_in}, "
                    f"previous layer produces {self.layers[k - 1].fan_out}"
                )

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].fan_in] + [layer.fan_out for layer in self.layers]

    def parameters(self) -> list[np.ndarray]:
        """Parameter arrays in declared order: W0, b0, W1, b1, ..."""
        out = []
        for layer in self.layers:
            out.extend((layer.W, layer.b))
        return out

    def copy(self) -> Mlp:
        return Mlp(
            [DenseLayer(layer.W.copy(), layer.b.copy()) for layer in self.layers],
            list(self.activations),
        )


@dataclass
class Tape:
    """Forward-pass cache: the input and pre-activation of every layer."""

    inputs: list[np.ndarray]
    preacts: list[np.ndarray]


@dataclass
class Gradients:
    dW: list[np.ndarray]
    db: list[np.ndarray]
    # gradient with respect to the network input, for chaining into upstream nets
    input_grad: np.ndarray | None = None

    def arrays(self) -> list[np.ndarray]:
        out = []
        for dW, db in zip(self.dW, self.db):
            out.extend((dW, db))
        return out


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_net(cls, net: Mlp, lr: float = 1e-3, **hyper) -> AdamState:
        params = net.parameters()
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            lr=lr,
            **hyper,
        )


def init_mlp(dims: Sequence[int], activations: Sequence[str], rng: RngStream) -> Mlp:
    """Random weights: He variance before ReLU, 1/fan_in before a linear output."""
    dims = [int(d) for d in dims]
    activations = list(activations)
    if len(dims) < 2:
        raise ConfigError("an MLP needs at least an input and an output width")
    if len(activations) != len(dims) - 1:
        raise ConfigError(
            f"{len(dims) - 1} layers need {len(dims) - 1} activations, got {len(activations)}"
        )
    if any(d < 1 for d in dims):
        raise ConfigError(f"layer widths must be positive, got {dims}")
    gen = rng.generator()
    layers = []
    for fan_in, fan_out, tag in zip(dims[:-1], dims[1:], activations):
        var = 2.0 / fan_in if tag == "relu" else 1.0 / fan_in
        W = gen.normal(0.0, math.sqrt(var), size=(fan_out, fan_in))
        layers.append(DenseLayer(W, np.zeros(fan_out)))
    return Mlp(layers, activations)


def mlp_forward(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, Tape]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.layers[0].fan_in:
        raise ContractError(
            f"input of shape {x.shape} does not fit first layer width {net.layers[0].fan_in}"
        )
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite network input")
    inputs, preacts = [], []
    h = x
    for k, (layer, tag) in enumerate(zip(net.layers, net.activations)):
        inputs.append(h)
        with np.errstate(over="ignore", invalid="ignore"):
            z = h @ layer.W.T + layer.b
        if not np.all(np.isfinite(z)):
            raise NumericError("non-finite pre-activation", layer=k)
        preacts.append(z)
        h = np.maximum(z, 0.0) if tag == "relu" else z
    return h, Tape(inputs, preacts)


def mlp_backward(net: Mlp, tape: Tape, output_grad: np.ndarray) -> Gradients:
    n = len(net.layers)
    if len(tape.inputs) != n or len(tape.preacts) != n:
        raise ContractError(f"tape records {len(tape.inputs)} layers, net has {n}")
    for k, layer in enumerate(net.layers):
        if tape.inputs[k].shape[1] != layer.fan_in or tape.preacts[k].shape[1] != layer.fan_out:
            raise ContractError(f"tape shapes do not match layer {k}")
    g = np.asarray(output_grad, dtype=np.float64)
    if g.shape != tape.preacts[-1].shape:
        raise ContractError(
            f"output gradient shape {g.shape} != output shape {tape.preacts[-1].shape}"
        )
    dW = [None] * n
    db = [None] * n
    for k in range(n - 1, -1, -1):
        if net.activations[k] == "relu":
            g = g * (tape.preacts[k] > 0.0)
        dW[k] = g.T @ tape.inputs[k]
        db[k] = g.sum(axis=0)
        g = g @ net.layers[k].W
    return Gradients(dW, db, input_grad=g)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_ce(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean sparse categorical cross-entropy of softmax(logits) and its gradient."""
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets)
    B, K = logits.shape
    if targets.shape != (B,):
        raise ContractError(f"{targets.shape[0] if targets.ndim else 0} targets for {B} rows")
    if targets.size and (targets.min() < 0 or targets.max() >= K):
        raise DomainError(f"targets must lie in [0, {K})")
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(B)
    loss = float(np.mean(log_norm - z[rows, targets]))
    grad = np.exp(z - log_norm[:, None])
    grad[rows, targets] -= 1.0
    return loss, grad / B


def mse(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ContractError(f"prediction shape {pred.shape} != target shape {target.shape}")
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(target))):
        raise NumericError("non-finite MSE operand")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def adam_step(state: AdamState, net: Mlp, grads: Gradients) -> None:
    """One bias-corrected Adam update, in place on ``net`` and ``state``."""
    params = net.parameters()
    garrs = grads.arrays()
    if len(garrs) != len(params) or len(state.m) != len(params):
        raise ContractError("gradients, optimizer state and net disagree in layer count")
    for p, g, m in zip(params, garrs, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ContractError(f"parameter shape {p.shape} vs gradient shape {g.shape}")
    if not all(np.all(np.isfinite(g)) for g in garrs):
        raise NumericError("non-finite gradient; update skipped")
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(params, garrs, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-10) -> np.ndarray:
    """Elementwise |a - b| / max(|a|, |b|, floor)."""
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def grad_check(
    net: Mlp,
    loss_probe: Callable[[Mlp], tuple[float, Gradients]],
    step: float = 1e-5,
    fd_loss: Callable[[Mlp], float] | None = None,
) -> float:
    """Worst relative error between analytic and central-difference gradients.

    ``loss_probe(net)`` must return ``(loss, Gradients)`` for the current
    weights. Every parameter is perturbed in turn; the net is restored after.
    ``fd_loss``, if given, replaces the probe's loss for the finite
    differences; it may return ``np.longdouble`` to push roundoff below
    float64 resolution.
    """
    _, analytic = loss_probe(net)
    if fd_loss is None:
        def fd_loss(n):
            return loss_probe(n)[0]
    worst = 0.0
    for p, g in zip(net.parameters(), analytic.arrays()):
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = flat[i]
            plus = fd_loss(net)
            flat[i] = orig - step
            lo = flat[i]
            minus = fd_loss(net)
            flat[i] = orig
            # divide by the step actually representable in float64
            numeric = (plus - minus) / (hi - lo)
            worst = max(worst, float(relative_error(gflat[i], numeric)))
    return worst
