"""Minimal dense neural engine with hand-written reverse-mode gradients.

Everything the actor-critic agents need and nothing more: fully connected
layers with ReLU hidden activations, optional per-sample layer
normalization before each hidden activation, a linear or tanh output, Adam
with bias correction, and a tanh-squashed diagonal-Gaussian policy head.
All arithmetic is float64 so finite-difference gradient checks have
headroom. Inputs are batches of shape (batch, features).

Backward passes return, besides the parameter gradients, the gradient of
the loss with respect to the network input; the deterministic-policy
agents need that to push value gradients through a critic into an actor.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
LAYER_NORM_EPS = 1e-5
SQUASH_EPS = 1e-6
_LOG_2PI = float(np.log(2.0 * np.pi))


class Adam:
    """Adaptive-moment estimation over a list of parameter arrays."""

    def __init__(self, params: list[np.ndarray]):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray], lr: float,
             beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        """Bias-corrected update, applied to ``params`` in place."""
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ValueError("parameter/gradient structure does not match state")
        self.t += 1
        c1 = 1.0 - beta1**self.t
        c2 = 1.0 - beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


class Mlp:
    """Feed-forward network: affine -> (layer norm) -> ReLU hidden stack.

    ``output`` selects the final activation, "linear" or "tanh". Weights
    start from N(0, std^2) and biases from zero. Each instance owns its
    Adam accumulators, so two networks never share optimizer state.
    """

    def __init__(self, rng: np.random.Generator, layer_sizes, std: float = 0.1,
                 layer_norm: bool = False, output: str = "linear"):
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if output not in ("linear", "tanh"):
            raise ValueError("output must be 'linear' or 'tanh'")
        self.sizes = sizes
        self.std = float(std)
        self.layer_norm = bool(layer_norm)
        self.output = output
        self.weights = [rng.normal(0.0, std, (sizes[i], sizes[i + 1]))
                        for i in range(len(sizes) - 1)]
        self.biases = [np.zeros(sizes[i + 1]) for i in range(len(sizes) - 1)]
        if self.layer_norm:
            self.ln_gain = [np.ones(sizes[i + 1]) for i in range(len(sizes) - 2)]
            self.ln_offset = [np.zeros(sizes[i + 1]) for i in range(len(sizes) - 2)]
        else:
            self.ln_gain = []
            self.ln_offset = []
        self.adam = Adam(self.parameters())

    @property
    def n_hidden(self) -> int:
        return len(self.sizes) - 2

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list in a fixed order (weights, biases, LN pairs)."""
        params = []
        for i in range(len(self.weights)):
            params.append(self.weights[i])
            params.append(self.biases[i])
            if self.layer_norm and i < self.n_hidden:
                params.append(self.ln_gain[i])
                params.append(self.ln_offset[i])
        return params

    def forward(self, x: np.ndarray, train: bool = False):
        """Run the network; with ``train`` also return the activation cache.

        The cache holds every intermediate needed by :meth:`backward` and is
        only valid for the parameter values it was computed with.
        """
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.sizes[0]:
            raise ValueError(f"input width {x.shape[1]} != expected {self.sizes[0]}")
        cache = [] if train else None
        h = x
        for i in range(self.n_hidden):
            z = h @ self.weights[i] + self.biases[i]
            if self.layer_norm:
                mean = z.mean(axis=1, keepdims=True)
                centered = z - mean
                var = (centered**2).mean(axis=1, keepdims=True)
                inv_std = 1.0 / np.sqrt(var + LAYER_NORM_EPS)
                normed = centered * inv_std
                pre = self.ln_gain[i] * normed + self.ln_offset[i]
            else:
                normed = inv_std = None
                pre = z
            out = np.maximum(pre, 0.0)
            if train:
                cache.append({"x": h, "pre": pre, "normed": normed, "inv_std": inv_std})
            h = out
        z = h @ self.weights[-1] + self.biases[-1]
        y = np.tanh(z) if self.output == "tanh" else z
        if train:
            cache.append({"x": h, "y": y})
            return (y[0] if squeeze else y), cache
        return y[0] if squeeze else y

    def backward(self, cache, grad_output: np.ndarray):
        """Exact gradients for the loss whose output gradient is supplied.

        Returns (parameter gradients aligned with :meth:`parameters`,
        gradient with respect to the network input).
        """
        if cache is None or len(cache) != self.n_hidden + 1:
            raise ValueError("cache does not match this network")
        grad_output = np.asarray(grad_output, dtype=float)
        if grad_output.ndim == 1:
            grad_output = grad_output[None, :]

        top = cache[-1]
        dz = grad_output * (1.0 - top["y"] ** 2) if self.output == "tanh" else grad_output
        grads_w = [top["x"].T @ dz]
        grads_b = [dz.sum(axis=0)]
        grads_g: list[np.ndarray] = []
        grads_o: list[np.ndarray] = []
        dx = dz @ self.weights[-1].T

        for i in range(self.n_hidden - 1, -1, -1):
            layer = cache[i]
            dpre = dx * (layer["pre"] > 0)
            if self.layer_norm:
                normed, inv_std = layer["normed"], layer["inv_std"]
                grads_g.insert(0, (dpre * normed).sum(axis=0))
                grads_o.insert(0, dpre.sum(axis=0))
                dnormed = dpre * self.ln_gain[i]
                dz = inv_std * (dnormed
                                - dnormed.mean(axis=1, keepdims=True)
                                - normed * (dnormed * normed).mean(axis=1, keepdims=True))
            else:
                dz = dpre
            grads_w.insert(0, layer["x"].T @ dz)
            grads_b.insert(0, dz.sum(axis=0))
            dx = dz @ self.weights[i].T

        grads = []
        for i in range(len(self.weights)):
            grads.append(grads_w[i])
            grads.append(grads_b[i])
            if self.layer_norm and i < self.n_hidden:
                grads.append(grads_g[i])
                grads.append(grads_o[i])
        return grads, dx

    def adam_step(self, grads: list[np.ndarray], lr: float, beta1: float = 0.9,
                  beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.adam.step(self.parameters(), grads, lr, beta1, beta2, eps)

    def copy(self) -> "Mlp":
        """Independent deep copy of parameters and optimizer state."""
        twin = Mlp.__new__(Mlp)
        twin.sizes = list(self.sizes)
        twin.std = self.std
        twin.layer_norm = self.layer_norm
        twin.output = self.output
        twin.weights = [w.copy() for w in self.weights]
        twin.biases = [b.copy() for b in self.biases]
        twin.ln_gain = [g.copy() for g in self.ln_gain]
        twin.ln_offset = [o.copy() for o in self.ln_offset]
        twin.adam = Adam(twin.parameters())
        twin.adam.m = [m.copy() for m in self.adam.m]
        twin.adam.v = [v.copy() for v in self.adam.v]
        twin.adam.t = self.adam.t
        return twin

    # -- serialization: one JSON header line, then raw little-endian float64 --

    def save_bytes(self) -> bytes:
        """Snapshot: header line, then parameters and Adam moments flattened."""
        header = {
            "sizes": self.sizes,
            "std": self.std,
            "layer_norm": self.layer_norm,
            "output": self.output,
            "adam_t": self.adam.t,
        }
        buf = io.BytesIO()
        buf.write(json.dumps(header).encode() + b"\n")
        for arr in (*self.parameters(), *self.adam.m, *self.adam.v):
            buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.save_bytes())

    @classmethod
    def load_bytes(cls, blob: bytes) -> "Mlp":
        newline = blob.index(b"\n")
        header = json.loads(blob[:newline].decode())
        net = cls(np.random.default_rng(0), header["sizes"], std=header["std"],
                  layer_norm=header["layer_norm"], output=header["output"])
        flat = np.frombuffer(blob[newline + 1:], dtype="<f8")
        pos = 0
        for arr in (*net.parameters(), *net.adam.m, *net.adam.v):
            n = arr.size
            arr[...] = flat[pos:pos + n].reshape(arr.shape)
            pos += n
        if pos != flat.size:
            raise ValueError("snapshot payload size does not match the header")
        net.adam.t = header["adam_t"]
        return net

    @classmethod
    def load(cls, path) -> "Mlp":
        with open(path, "rb") as fh:
            return cls.load_bytes(fh.read())


def split_policy_head(out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a policy network output into mean and clamped log-std halves."""
    out = np.asarray(out, dtype=float)
    if out.shape[-1] % 2 != 0:
        raise ValueError("policy head output width must be even")
    half = out.shape[-1] // 2
    mean = out[..., :half]
    log_std = np.clip(out[..., half:], LOG_STD_MIN, LOG_STD_MAX)
    return mean, log_std


@dataclass
class SquashedSample:
    """A reparameterized draw from a tanh-squashed diagonal Gaussian."""

    action: np.ndarray
    log_prob: np.ndarray
    noise: np.ndarray  # the standard-normal draw, kept for pathwise gradients


def squashed_gaussian_sample(mean: np.ndarray, log_std: np.ndarray,
                             rng: np.random.Generator) -> SquashedSample:
    """Draw action = tanh(mean + std * noise) with its exact log-density.

    The log-density applies the change of variables through tanh, with a
    small epsilon inside the log for numerical safety near saturation.
    """
    mean = np.atleast_2d(np.asarray(mean, dtype=float))
    log_std = np.atleast_2d(np.asarray(log_std, dtype=float))
    noise = rng.standard_normal(mean.shape)
    pre = mean + np.exp(log_std) * noise
    action = np.tanh(pre)
    log_prob = np.sum(-0.5 * _LOG_2PI - log_std - 0.5 * noise**2, axis=-1)
    log_prob -= np.sum(np.log(1.0 - action**2 + SQUASH_EPS), axis=-1)
    return SquashedSample(action=action, log_prob=log_prob, noise=noise)


def gaussian_policy_sample(mean: np.ndarray, log_std: np.ndarray,
                           rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sample (action, log_prob); flat inputs give flat outputs."""
    flat = np.asarray(mean).ndim == 1
    s = squashed_gaussian_sample(mean, log_std, rng)
    if flat:
        return s.action[0], float(s.log_prob[0])
    return s.action, s.log_prob


def squashed_gaussian_backward(mean: np.ndarray, log_std: np.ndarray,
                               noise: np.ndarray, grad_action: np.ndarray,
                               grad_log_prob: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pathwise gradients of a loss through a squashed-Gaussian draw.

    Given upstream gradients with respect to the sampled action (batch x
    dim) and to its log-probability (batch,), returns gradients with
    respect to the head mean and log-std, holding the standard-normal draw
    fixed (the reparameterization trick).
    """
    std = np.exp(log_std)
    pre = mean + std * noise
    action = np.tanh(pre)
    one_m_a2 = 1.0 - action**2
    # d(-log(1 - a^2 + eps))/d(pre)
    dlogp_dpre = 2.0 * action * one_m_a2 / (one_m_a2 + SQUASH_EPS)
    glp = np.asarray(grad_log_prob, dtype=float)[:, None]
    dpre = grad_action * one_m_a2 + glp * dlogp_dpre
    dmean = dpre
    dlog_std = dpre * std * noise - glp
    return dmean, dlog_std
