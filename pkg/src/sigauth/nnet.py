"""Feedforward scorer network with resilient-backpropagation training.

One tanh hidden layer feeding a single logistic output.  Training is
full-batch: the exact mean-squared-error gradient drives per-parameter
adaptive steps that grow (x1.2, capped at 50) while the gradient sign holds
and shrink (x0.5, floored at 1e-6) when it flips; a flip also zeroes the
stored gradient and skips that parameter's update for the step, so only the
gradient sign, never its magnitude, moves the weights.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatchError

PARAM_FIELDS = ("w1", "b1", "w2", "b2")


def _sigmoid(x):
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True, eq=False)
class Network:
    """Value-semantic (k -> H -> 1) network; never mutated after creation."""

    w1: np.ndarray  # (H, k)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H,)
    b2: np.ndarray  # (1,)

    @property
    def layout(self) -> tuple[int, int, int]:
        return (self.w1.shape[1], self.w1.shape[0], 1)

    def params(self) -> tuple[np.ndarray, ...]:
        return (self.w1, self.b1, self.w2, self.b2)


@dataclass(frozen=True, eq=False)
class Gradient:
    """Batch-error partial derivatives, same shapes as the network parameters."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def params(self) -> tuple[np.ndarray, ...]:
        return (self.w1, self.b1, self.w2, self.b2)


@dataclass(frozen=True)
class RpropConfig:
    eta_plus: float = 1.2
    eta_minus: float = 0.5
    delta_max: float = 50.0
    delta_min: float = 1e-6
    delta_init: float = 0.1


@dataclass(frozen=True, eq=False)
class RpropState:
    """Per-parameter step sizes and previously stored gradients."""

    steps: tuple[np.ndarray, ...]
    prev_grad: tuple[np.ndarray, ...]
    config: RpropConfig

    @classmethod
    def initial(cls, net: Network, config: RpropConfig = RpropConfig()) -> "RpropState":
        return cls(
            steps=tuple(np.full_like(p, config.delta_init) for p in net.params()),
            prev_grad=tuple(np.zeros_like(p) for p in net.params()),
            config=config,
        )


@dataclass(frozen=True)
class TrainStop:
    max_epochs: int = 200
    err_goal: float = 1e-3


def netcreate(layout, init_seed: int) -> Network:
    """Create a (k, H, 1) network with parameters uniform on [-0.5, 0.5]."""
    k, hidden, out = layout
    if k < 1 or hidden < 1 or out != 1:
        raise ValueError("layout must be (k >= 1, H >= 1, 1)")
    rng = np.random.default_rng(init_seed)
    return Network(
        w1=rng.uniform(-0.5, 0.5, (hidden, k)),
        b1=rng.uniform(-0.5, 0.5, hidden),
        w2=rng.uniform(-0.5, 0.5, hidden),
        b2=rng.uniform(-0.5, 0.5, 1),
    )


def _forward_batch(net: Network, z: np.ndarray):
    hidden = np.tanh(z @ net.w1.T + net.b1)
    scores = _sigmoid(hidden @ net.w2 + net.b2[0])
    return hidden, scores


def forward(net: Network, z) -> float:
    """Score one input vector; the result lies strictly inside (0, 1)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (net.layout[0],):
        raise DimensionMismatchError(
            "expected input of length %d, got %s" % (net.layout[0], z.shape)
        )
    _, scores = _forward_batch(net, z[None, :])
    # float64 sigmoid saturates for |x| > ~37; pin the open-interval contract
    return float(np.clip(scores[0], np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0)))


def _error_and_gradient(net: Network, z: np.ndarray, y: np.ndarray):
    n = z.shape[0]
    hidden, scores = _forward_batch(net, z)
    diff = scores - y
    err = 0.5 * np.mean(diff * diff)

    d_out = (diff / n) * scores * (1.0 - scores)       # (N,)
    grad_w2 = hidden.T @ d_out                         # (H,)
    grad_b2 = np.array([d_out.sum()])
    d_hidden = np.outer(d_out, net.w2) * (1.0 - hidden * hidden)  # (N, H)
    grad_w1 = d_hidden.T @ z                           # (H, k)
    grad_b1 = d_hidden.sum(axis=0)
    return Gradient(grad_w1, grad_b1, grad_w2, grad_b2), float(err)


def batch_error(net: Network, inputs: np.ndarray, targets: np.ndarray) -> float:
    """Mean over the batch of half the squared output error."""
    _, scores = _forward_batch(net, np.asarray(inputs, dtype=float))
    diff = scores - np.asarray(targets, dtype=float)
    return float(0.5 * np.mean(diff * diff))


def backprop_gradient(net: Network, batch) -> tuple[Gradient, float]:
    """Exact analytic gradient of the batch error for (input, target) pairs."""
    batch = list(batch)
    if not batch:
        raise ValueError("batch must be nonempty")
    z = np.array([np.asarray(p[0], dtype=float) for p in batch])
    y = np.array([float(p[1]) for p in batch])
    if z.shape[1] != net.layout[0]:
        raise DimensionMismatchError(
            "batch inputs have length %d, network expects %d"
            % (z.shape[1], net.layout[0])
        )
    return _error_and_gradient(net, z, y)


def rprop_step(net: Network, state: RpropState, grad: Gradient):
    """One resilient update; returns the new (net, state), inputs untouched.

    Per parameter, with g the current and g_prev the stored gradient:
      g*g_prev > 0: step <- min(step * eta_plus, delta_max); w -= sgn(g)*step
      g*g_prev < 0: step <- max(step * eta_minus, delta_min); stored gradient
                    is zeroed and the weight is left unchanged this step
      otherwise:    w -= sgn(g)*step (step unchanged)
    """
    cfg = state.config
    new_params, new_steps, new_prev = [], [], []
    for w, step, prev, g in zip(net.params(), state.steps, state.prev_grad, grad.params()):
        if w.shape != g.shape:
            raise DimensionMismatchError("gradient shape %s != parameter shape %s"
                                         % (g.shape, w.shape))
        product = g * prev
        grew = product > 0
        flipped = product < 0
        step_new = np.where(
            grew,
            np.minimum(step * cfg.eta_plus, cfg.delta_max),
            np.where(flipped, np.maximum(step * cfg.eta_minus, cfg.delta_min), step),
        )
        delta_w = np.where(flipped, 0.0, -np.sign(g) * step_new)
        new_params.append(w + delta_w)
        new_steps.append(step_new)
        new_prev.append(np.where(flipped, 0.0, g))
    return (
        Network(*new_params),
        replace(state, steps=tuple(new_steps), prev_grad=tuple(new_prev)),
    )


def sigtrain(
    net: Network,
    inputs,
    targets,
    stop: TrainStop = TrainStop(),
    rprop: RpropConfig = RpropConfig(),
) -> tuple[Network, float]:
    """Full-batch resilient training until the error goal or epoch cap.

    Returns the trained network and its final batch error.  A pure function
    of (net, data, config): identical inputs give identical outputs.
    """
    z = np.asarray(inputs, dtype=float)
    y = np.asarray(targets, dtype=float)
    if z.ndim != 2 or z.shape[0] < 1 or z.shape[0] != y.shape[0]:
        raise ValueError("need matching nonempty input and target matrices")

    state = RpropState.initial(net, rprop)
    grad, err = _error_and_gradient(net, z, y)
    epoch = 0
    while epoch < stop.max_epochs and err > stop.err_goal:
        net, state = rprop_step(net, state, grad)
        epoch += 1
        grad, err = _error_and_gradient(net, z, y)
    return net, err


def net_to_dict(net: Network) -> dict:
    return {
        "layout": list(net.layout),
        "w1": net.w1.reshape(-1).tolist(),
        "b1": net.b1.tolist(),
        "w2": net.w2.tolist(),
        "b2": net.b2.tolist(),
    }


def net_from_dict(d: dict) -> Network:
    k, hidden, _ = d["layout"]
    return Network(
        w1=np.asarray(d["w1"], dtype=float).reshape(hidden, k),
        b1=np.asarray(d["b1"], dtype=float),
        w2=np.asarray(d["w2"], dtype=float),
        b2=np.asarray(d["b2"], dtype=float),
    )
