"""Finite-difference gradient checks over randomly drawn small networks."""
from __future__ import annotations

import numpy as np

from .nn import Mlp, grad_check, init_mlp, mlp_backward, mlp_forward, mse, softmax_ce
from .rng import RngStream

KINK_MARGIN = 1e-3


def random_case(rng: RngStream, max_width: int = 32, max_batch: int = 8):
    """A random ReLU net and an input batch whose pre-activations avoid the kink."""
    gen = rng.generator()
    n_hidden = int(gen.integers(1, 3))
    dims = [int(w) for w in gen.integers(2, max_width + 1, size=n_hidden + 2)]
    net = init_mlp(dims, ["relu"] * n_hidden + ["linear"], rng.substream(0))
    for layer in net.layers:
        layer.b[:] = gen.normal(0.0, 0.1, size=layer.b.shape)
    batch = int(gen.integers(1, max_batch + 1))
    for _ in range(1000):
        x = gen.normal(size=(batch, dims[0]))
        _, tape = mlp_forward(net, x)
        if all(np.min(np.abs(z)) > KINK_MARGIN for z in tape.preacts[:-1]):
            break
    return net, x


def extended_forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Plain matrix evaluation of the net in extended precision."""
    h = np.asarray(x, dtype=np.longdouble)
    for layer, tag in zip(net.layers, net.activations):
        z = h @ layer.W.astype(np.longdouble).T + layer.b.astype(np.longdouble)
        h = np.maximum(z, 0) if tag == "relu" else z
    return h


def extended_mse(out: np.ndarray, target: np.ndarray):
    d = out - np.asarray(target, dtype=np.longdouble)
    return np.mean(d * d)


def extended_ce(logits: np.ndarray, targets: np.ndarray):
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return np.mean(log_norm - z[np.arange(len(targets)), targets])


def mse_probe(x: np.ndarray, target: np.ndarray):
    def probe(net: Mlp):
        out, tape = mlp_forward(net, x)
        loss, grad = mse(out, target)
        return loss, mlp_backward(net, tape, grad)

    return probe


def ce_probe(x: np.ndarray, targets: np.ndarray):
    def probe(net: Mlp):
        out, tape = mlp_forward(net, x)
        loss, grad = softmax_ce(out, targets)
        return loss, mlp_backward(net, tape, grad)

    return probe


def gradient_suite(n_nets: int = 20, seed: int = 0) -> list[tuple[float, float]]:
    """Worst relative error per net, as ``(mse_error, ce_error)`` pairs.

    Finite differences use an extended-precision re-evaluation of each loss
    that shares no code with the forward/backward path under test.
    """
    root = RngStream(seed, 0x6772616463686B)
    results = []
    for i in range(n_nets):
        rng = root.substream(i)
        net, x = random_case(rng)
        gen = rng.substream(1).generator()
        target = gen.normal(size=(x.shape[0], net.dims[-1]))
        labels = gen.integers(0, net.dims[-1], size=x.shape[0])
        err_mse = grad_check(
            net, mse_probe(x, target), fd_loss=lambda n: extended_mse(extended_forward(n, x), target)
        )
        err_ce = grad_check(
            net, ce_probe(x, labels), fd_loss=lambda n: extended_ce(extended_forward(n, x), labels)
        )
        results.append((err_mse, err_ce))
    return results
