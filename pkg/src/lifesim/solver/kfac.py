"""Kronecker-factored natural-gradient preconditioning.

Per layer, the Fisher is approximated as A (x) G with A the second moment of
the augmented layer inputs and G the second moment of the pre-activation
gradients.  The preconditioned update is A^-1 grad G^-1 with Tikhonov
damping split across the two factors.  Factors track exponential moving
averages and are re-inverted on a fixed cadence.
"""

from __future__ import annotations

import numpy as np


class KfacPreconditioner:
    def __init__(self, params: list[np.ndarray], damping: float = 1e-2,
                 ema: float = 0.95, update_inverse_every: int = 20) -> None:
        self.damping = damping
        self.ema = ema
        self.update_inverse_every = update_inverse_every
        self.a_factors = [np.eye(p.shape[0]) for p in params]
        self.g_factors = [np.eye(p.shape[1]) for p in params]
        self.a_inv: list[np.ndarray | None] = [None] * len(params)
        self.g_inv: list[np.ndarray | None] = [None] * len(params)
        self.n_updates = 0

    def update_factors(self, layer_inputs: list[np.ndarray], grad_outputs: list[np.ndarray]) -> None:
        """Accumulate factor statistics from one batch.

        ``layer_inputs[i]`` is the augmented input of layer i (batch x in+1);
        ``grad_outputs[i]`` the gradient at its output (batch x out).
        """
        n = layer_inputs[0].shape[0]
        for i, (x, g) in enumerate(zip(layer_inputs, grad_outputs)):
            a_new = x.T @ x / n
            g_new = g.T @ g / n
            self.a_factors[i] = self.ema * self.a_factors[i] + (1.0 - self.ema) * a_new
            self.g_factors[i] = self.ema * self.g_factors[i] + (1.0 - self.ema) * g_new
        self.n_updates += 1
        if self.n_updates % self.update_inverse_every == 1:
            self._refresh_inverses()

    def _refresh_inverses(self) -> None:
        pi = np.sqrt(self.damping)
        for i, (a, g) in enumerate(zip(self.a_factors, self.g_factors)):
            self.a_inv[i] = np.linalg.inv(a + pi * np.eye(a.shape[0]))
            self.g_inv[i] = np.linalg.inv(g + pi * np.eye(g.shape[0]))

    def precondition(self, grads: list[np.ndarray]) -> list[np.ndarray]:
        if self.a_inv[0] is None:
            self._refresh_inverses()
        return [ai @ g @ gi for ai, g, gi in zip(self.a_inv, grads, self.g_inv)]
