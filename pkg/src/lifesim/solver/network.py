"""Feed-forward policy/value network with hand-written backprop.

Shared leaky-ReLU trunk with a masked-logits policy head and a scalar value
head.  Biases are folded into the weight matrices via an augmented input
column, which keeps the backward pass and the Kronecker factors simple.
Everything is float64 numpy for determinism and finite-difference checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEAKY_SLOPE = 0.01
MASK_FILL = -1e9


def _aug(x: np.ndarray) -> np.ndarray:
    ones = np.ones((x.shape[0], 1), dtype=x.dtype)
    return np.concatenate([x, ones], axis=1)


@dataclass
class ForwardCache:
    inputs: list[np.ndarray] = field(default_factory=list)   # augmented layer inputs
    preacts: list[np.ndarray] = field(default_factory=list)  # trunk pre-activations
    trunk_out: np.ndarray | None = None


class PolicyValueNet:
    """MLP trunk + policy/value heads over a fixed discrete action catalogue."""

    def __init__(self, obs_dim: int, n_actions: int, hidden: tuple[int, ...] = (256, 256, 128),
                 seed: int = 0) -> None:
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.hidden = tuple(hidden)
        rng = np.random.default_rng(seed)
        sizes = [obs_dim, *hidden]
        self.trunk: list[np.ndarray] = []
        for n_in, n_out in zip(sizes, sizes[1:]):
            w = rng.standard_normal((n_in + 1, n_out)) * np.sqrt(2.0 / n_in)
            w[-1, :] = 0.0
            self.trunk.append(w)
        last = sizes[-1]
        self.w_policy = rng.standard_normal((last + 1, n_actions)) * 0.01
        self.w_policy[-1, :] = 0.0
        self.w_value = rng.standard_normal((last + 1, 1)) * 0.01
        self.w_value[-1, :] = 0.0

    # -- parameter plumbing -------------------------------------------------

    def parameters(self) -> list[np.ndarray]:
        return [*self.trunk, self.w_policy, self.w_value]

    def set_parameters(self, params: list[np.ndarray]) -> None:
        n = len(self.trunk)
        self.trunk = [p.copy() for p in params[:n]]
        self.w_policy = params[n].copy()
        self.w_value = params[n + 1].copy()

    def flat_parameters(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def set_flat_parameters(self, flat: np.ndarray) -> None:
        out = []
        i = 0
        for p in self.parameters():
            out.append(flat[i: i + p.size].reshape(p.shape).copy())
            i += p.size
        self.set_parameters(out)

    def clone(self) -> "PolicyValueNet":
        twin = PolicyValueNet(self.obs_dim, self.n_actions, self.hidden, seed=0)
        twin.set_parameters(self.parameters())
        return twin

    # -- forward / backward -------------------------------------------------

    def forward(self, obs: np.ndarray, cache: ForwardCache | None = None
                ) -> tuple[np.ndarray, np.ndarray]:
        h = np.asarray(obs, dtype=np.float64)
        if h.ndim == 1:
            h = h[None, :]
        for w in self.trunk:
            x = _aug(h)
            if cache is not None:
                cache.inputs.append(x)
            z = x @ w
            if cache is not None:
                cache.preacts.append(z)
            h = np.where(z > 0.0, z, LEAKY_SLOPE * z)
        x = _aug(h)
        if cache is not None:
            cache.trunk_out = x
        logits = x @ self.w_policy
        values = (x @ self.w_value)[:, 0]
        return logits, values

    def backward(self, cache: ForwardCache, d_logits: np.ndarray, d_values: np.ndarray,
                 stats: dict | None = None) -> list[np.ndarray]:
        """Gradients for every parameter given head-output gradients.

        When ``stats`` is given it is filled with the per-layer augmented
        inputs and output gradients (trunk layers then heads), which is what
        the Kronecker-factored preconditioner consumes.
        """
        x_out = cache.trunk_out
        g_policy = x_out.T @ d_logits
        g_value = x_out.T @ d_values[:, None]
        d_h = d_logits @ self.w_policy[:-1].T + d_values[:, None] @ self.w_value[:-1].T

        grads_trunk: list[np.ndarray] = [None] * len(self.trunk)  # type: ignore[list-item]
        d_zs: list[np.ndarray] = [None] * len(self.trunk)  # type: ignore[list-item]
        for i in range(len(self.trunk) - 1, -1, -1):
            z = cache.preacts[i]
            d_z = d_h * np.where(z > 0.0, 1.0, LEAKY_SLOPE)
            grads_trunk[i] = cache.inputs[i].T @ d_z
            d_zs[i] = d_z
            if i > 0:
                d_h = d_z @ self.trunk[i][:-1].T
        if stats is not None:
            stats["inputs"] = [*cache.inputs, x_out, x_out]
            stats["grad_outputs"] = [*d_zs, d_logits, d_values[:, None]]
        return [*grads_trunk, g_policy, g_value]

    # -- inference helpers --------------------------------------------------

    def masked_logits(self, obs: np.ndarray, masks: np.ndarray) -> np.ndarray:
        logits, _ = self.forward(obs)
        return np.where(masks, logits, MASK_FILL)

    def value(self, obs: np.ndarray) -> np.ndarray:
        _, v = self.forward(obs)
        return v


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def masked_distribution(logits: np.ndarray, masks: np.ndarray) -> np.ndarray:
    masked = np.where(masks, logits, MASK_FILL)
    p = np.exp(log_softmax(masked))
    p = np.where(masks, p, 0.0)
    return p / p.sum(axis=1, keepdims=True)


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float = 7e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray], lr: float | None = None) -> None:
        self.t += 1
        lr = self.lr if lr is None else lr
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def clip_grads(grads: list[np.ndarray], max_norm: float) -> float:
    total = float(np.sqrt(sum(float((g * g).sum()) for g in grads)))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for g in grads:
            g *= scale
    return total
