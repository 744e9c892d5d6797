"""Minimal dense-network substrate shared by the base tagger and the Q-network.

Everything is float64 and single-threaded: with the small networks used
here that keeps gradient checks tight and runs bit-reproducible for a fixed
seed and data order.  Only what the package needs is implemented: dense
layers with tanh/relu hidden activations and a linear output, softmax and
cross-entropy helpers, SGD and Adam, and a central-difference gradient
checker.
"""

from __future__ import annotations

import numpy as np

_ACTIVATIONS = ("tanh", "relu")


class DenseNet:
    """Fully-connected network: linear output, tanh or relu hidden layers.

    Parameters are Xavier-scaled normal draws from ``rng_seed``; biases start
    at zero.  ``weights[k]`` has shape ``(sizes[k], sizes[k+1])``.
    """

    def __init__(self, sizes: list[int], activation: str = "tanh", rng_seed: int = 0):
        if len(sizes) < 2:
            raise ValueError("need at least an input and an output size")
        if any(s <= 0 for s in sizes):
            raise ValueError(f"layer sizes must be positive: {sizes}")
        if activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}, got {activation!r}")
        self.sizes = list(sizes)
        self.activation = activation
        self.rng_seed = rng_seed
        rng = np.random.default_rng(rng_seed)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            scale = np.sqrt(2.0 / (fan_in + fan_out))
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list, weights then bias per layer (update in place)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def _act(self, z: np.ndarray) -> np.ndarray:
        if self.activation == "tanh":
            return np.tanh(z)
        return np.maximum(z, 0.0)

    def _act_grad(self, z: np.ndarray, a: np.ndarray) -> np.ndarray:
        if self.activation == "tanh":
            return 1.0 - a * a
        return (z > 0.0).astype(z.dtype)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Batched forward pass; accepts shape (d,) or (batch, d)."""
        out, _ = self.forward_cached(np.asarray(x, dtype=np.float64))
        return out

    def forward_cached(self, x: np.ndarray):
        """Forward pass that also returns the per-layer cache for backward."""
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        h = x[None, :] if squeeze else x
        if h.shape[1] != self.in_dim:
            raise ValueError(f"input width {h.shape[1]} does not match net input {self.in_dim}")
        pre, post = [], [h]
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = post[-1] @ w + b
            pre.append(z)
            post.append(self._act(z) if k < last else z)
        out = post[-1]
        cache = (pre, post)
        return (out[0] if squeeze else out), cache

    def backward(self, cache, out_grad: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss w.r.t. every parameter.

        ``out_grad`` is dLoss/dOutput with the same shape the forward pass
        produced (any 1/batch factor is the caller's business).  Returns
        gradients aligned with :meth:`parameters`.
        """
        return self.backprop(cache, out_grad)[0]

    def backprop(self, cache, out_grad: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Like :meth:`backward` but also returns dLoss/dInput."""
        pre, post = cache
        g = np.asarray(out_grad, dtype=np.float64)
        if g.ndim == 1:
            g = g[None, :]
        grads: list[np.ndarray] = []
        last = len(self.weights) - 1
        for k in range(last, -1, -1):
            if k < last:
                g = g * self._act_grad(pre[k], post[k + 1])
            grads.append(g.sum(axis=0))          # bias
            grads.append(post[k].T @ g)          # weights
            g = g @ self.weights[k].T
        grads.reverse()
        return grads, g

    def check_finite(self) -> None:
        for p in self.parameters():
            if not np.all(np.isfinite(p)):
                raise FloatingPointError("non-finite value in network parameters")


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shifted for stability; rows sum to 1."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z - z.max()
        e = np.exp(z)
        return e / e.sum()
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs: np.ndarray, labels: np.ndarray, eps: float = 1e-12) -> float:
    """Mean negative log-likelihood of integer ``labels`` under ``probs``."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.clip(picked, eps, None))))


def softmax_xent_grad(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Loss and dLoss/dlogits for softmax + mean cross-entropy in one step."""
    probs = softmax(logits)
    labels = np.asarray(labels, dtype=np.intp)
    loss = cross_entropy(probs, labels)
    grad = probs.copy()
    grad[np.arange(len(labels)), labels] -= 1.0
    grad /= len(labels)
    return loss, grad


class Sgd:
    """Plain gradient descent: p <- p - lr * g."""

    def __init__(self, learning_rate: float):
        if learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {learning_rate}")
        self.learning_rate = learning_rate

    def update(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        _check_grads(params, grads)
        for p, g in zip(params, grads):
            p -= self.learning_rate * g


class Adam:
    """Adam with bias correction; moment buffers keyed by parameter slot."""

    def __init__(self, learning_rate: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        if learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {learning_rate}")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: list[np.ndarray] | None = None
        self._v: list[np.ndarray] | None = None

    def update(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        _check_grads(params, grads)
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        if len(self._m) != len(params):
            raise ValueError("optimizer bound to a different parameter set")
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.learning_rate * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def make_optimizer(kind: str, learning_rate: float):
    if kind == "sgd":
        return Sgd(learning_rate)
    if kind == "adam":
        return Adam(learning_rate)
    raise ValueError(f"unknown optimizer kind {kind!r}")


def _check_grads(params: list[np.ndarray], grads: list[np.ndarray]) -> None:
    if len(params) != len(grads):
        raise ValueError("parameter/gradient count mismatch")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient; training aborted")


def step(net: DenseNet, grads: list[np.ndarray], optimizer) -> DenseNet:
    """Apply one optimizer update to the net's parameters in place."""
    optimizer.update(net.parameters(), grads)
    net.check_finite()
    return net


def gradient_check(loss_fn, params: list[np.ndarray], analytic: list[np.ndarray],
                   h: float = 1e-6) -> float:
    """Worst relative error between analytic and central-difference gradients.

    ``loss_fn`` recomputes the scalar loss from the current parameter values;
    every entry of every array in ``params`` is perturbed by +-h.  Relative
    error uses ``|a - n| / max(|a| + |n|, 1e-8)`` per entry.
    """
    worst = 0.0
    for p, a in zip(params, analytic):
        flat_p = p.reshape(-1)
        flat_a = a.reshape(-1)
        for idx in range(flat_p.size):
            old = flat_p[idx]
            flat_p[idx] = old + h
            up = loss_fn()
            flat_p[idx] = old - h
            down = loss_fn()
            flat_p[idx] = old
            numeric = (up - down) / (2.0 * h)
            denom = max(abs(flat_a[idx]) + abs(numeric), 1e-8)
            worst = max(worst, abs(flat_a[idx] - numeric) / denom)
    return worst
