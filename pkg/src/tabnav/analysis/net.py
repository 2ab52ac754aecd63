"""One-hidden-layer network that predicts the next state from the current one."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tabnav import kernels
from tabnav.env.graph import ContractError

INIT_SCALE = 0.1


class TrainingError(RuntimeError):
    pass


def logistic(z):
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class PredictiveNet:
    w1: np.ndarray  # (n_states, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, n_states)
    b2: np.ndarray  # (n_states,)

    @classmethod
    def init(cls, n_states: int, hidden_dim: int, rng: np.random.Generator,
             scale: float = INIT_SCALE) -> PredictiveNet:
        """Weights uniform in ``[-scale, scale]``, biases zero."""
        return cls(
            rng.uniform(-scale, scale, (n_states, hidden_dim)),
            np.zeros(hidden_dim),
            rng.uniform(-scale, scale, (hidden_dim, n_states)),
            np.zeros(n_states),
        )

    @classmethod
    def zeros(cls, n_states: int, hidden_dim: int) -> PredictiveNet:
        return cls(np.zeros((n_states, hidden_dim)), np.zeros(hidden_dim),
                   np.zeros((hidden_dim, n_states)), np.zeros(n_states))

    @property
    def n_states(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[1]

    def params(self) -> tuple[np.ndarray, ...]:
        return self.w1, self.b1, self.w2, self.b2

    def copy(self) -> PredictiveNet:
        return PredictiveNet(*(p.copy() for p in self.params()))

    def hidden(self, states=None) -> np.ndarray:
        """Hidden activations for each state (all states by default)."""
        idx = np.arange(self.n_states) if states is None else np.asarray(states)
        return logistic(self.w1[idx] + self.b1)


def _check_onehot(net: PredictiveNet, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.n_states,) or np.count_nonzero(x) != 1 or x.sum() != 1.0:
        raise ContractError(f"expected a one-hot vector of length {net.n_states}")
    return x


def net_forward(net: PredictiveNet, x) -> tuple[np.ndarray, np.ndarray]:
    """Next-state probabilities and hidden activations for one-hot ``x``."""
    x = _check_onehot(net, x)
    hid = logistic(x @ net.w1 + net.b1)
    z = hid @ net.w2 + net.b2
    p = np.exp(z - z.max())
    return p / p.sum(), hid


def loss_and_grads(net: PredictiveNet, x, target: int) -> tuple[float, tuple[np.ndarray, ...]]:
    """Cross-entropy ``-log p(target)`` and its gradient for every parameter."""
    p, hid = net_forward(net, x)
    with np.errstate(divide="ignore"):
        loss = -np.log(p[target])
    dz = p.copy()
    dz[target] -= 1.0
    dh = (net.w2 @ dz) * hid * (1.0 - hid)
    return float(loss), (np.outer(x, dh), dh, np.outer(hid, dz), dz)


def net_train_step(net: PredictiveNet, x, target: int, lr: float) -> float:
    """One gradient-descent step; returns the loss before the step."""
    loss, grads = loss_and_grads(net, x, target)
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite loss {loss}; the learning rate {lr} is probably too large")
    for param, g in zip(net.params(), grads):
        param -= lr * g
    return loss


def train_on_sequence(net: PredictiveNet, states, lr: float) -> np.ndarray:
    """Train on consecutive pairs of a state sequence, one step per pair.

    Equivalent to calling :func:`net_train_step` on each pair with one-hot
    inputs, run through the kernel. Returns the per-step losses.
    """
    states = np.ascontiguousarray(states, dtype=np.int64)
    losses = kernels.net_train(net.w1, net.b1, net.w2, net.b2,
                               states[:-1].copy(), states[1:].copy(), float(lr))
    if not np.all(np.isfinite(losses)) or not all(np.all(np.isfinite(p)) for p in net.params()):
        raise TrainingError(f"training diverged; the learning rate {lr} is probably too large")
    return np.asarray(losses)
