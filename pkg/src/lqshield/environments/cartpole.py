"""Cart-pole balancing about the upright equilibrium.

State is (y, y_dot, theta, theta_dot); the input is a horizontal force
on the cart.  The true plant integrates the frictionless nonlinear
equations with an explicit Euler step, and the crude model is the
small-angle linearization built from (possibly wrong) mass estimates --
both on the same step size, so their difference isolates model error
rather than integrator mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..linalg_control import LinearModel
from ..plant import ResidualModel, estimate_lipschitz

__all__ = [
    "CartPoleParams",
    "cartpole_true_step",
    "cartpole_linearization",
    "cartpole_residual",
]


@dataclass(frozen=True)
class CartPoleParams:
    """Physical parameters plus the mass estimates used for synthesis.

    Defaults are the benchmark values: the true plant carries pole mass
    0.1 and cart mass 1.0, while the model (used for the LQR) assumes
    0.2 and 2.0 -- a deliberate 2x error.
    """

    g: float = 9.8
    m: float = 0.1
    M: float = 1.0
    l: float = 2.0
    tau: float = 0.02
    F_mag: float = 10.0
    model_m: float = 0.2
    model_M: float = 2.0

    def __post_init__(self):
        for name in ("g", "m", "M", "l", "tau", "F_mag", "model_m", "model_M"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.eta(self.m, self.M) <= 0 or self.eta(self.model_m, self.model_M) <= 0:
            raise ValueError("effective length (4/3) l - m l / (m + M) must be positive")

    def eta(self, m: float, M: float) -> float:
        return (4.0 / 3.0) * self.l - m * self.l / (m + M)

    def with_true_masses_as_model(self) -> "CartPoleParams":
        return replace(self, model_m=self.m, model_M=self.M)


def _accelerations(p: CartPoleParams, state, u: float) -> tuple[float, float]:
    _, _, th, thd = state
    sin, cos = np.sin(th), np.cos(th)
    total = p.m + p.M
    th_acc = (p.g * sin + cos * ((-u - p.m * p.l * thd**2 * sin) / total)) / (
        p.l * (4.0 / 3.0 - p.m * cos**2 / total)
    )
    y_acc = (u + p.m * p.l * (thd**2 * sin - th_acc * cos)) / total
    return th_acc, y_acc


def cartpole_true_step(params: CartPoleParams, state, u) -> np.ndarray:
    """One explicit-Euler step of the frictionless nonlinear plant."""
    state = np.asarray(state, dtype=float).reshape(4)
    u = float(np.asarray(u, dtype=float).reshape(-1)[0])
    th_acc, y_acc = _accelerations(params, state, u)
    y, yd, th, thd = state
    tau = params.tau
    return np.array([y + tau * yd, yd + tau * y_acc, th + tau * thd, thd + tau * th_acc])


def cartpole_linearization(params: CartPoleParams) -> LinearModel:
    """Small-angle discrete model built from the model masses.

    With eta = (4/3) l - m l / (m + M):

        A = [[1, tau, 0, 0],
             [0, 1, -m l g tau / (eta (m + M)), 0],
             [0, 0, 1, tau],
             [0, 0, g tau / eta, 1]]
        B = [0, ((m + M) eta + m l) tau / ((m + M)^2 eta), 0,
             -tau / ((m + M) eta)]

    Cost weights: Q = I, R = [1e-4].
    """
    m, M, l, g, tau = params.model_m, params.model_M, params.l, params.g, params.tau
    eta = params.eta(m, M)
    total = m + M
    A = np.array(
        [
            [1.0, tau, 0.0, 0.0],
            [0.0, 1.0, -m * l * g * tau / (eta * total), 0.0],
            [0.0, 0.0, 1.0, tau],
            [0.0, 0.0, g * tau / eta, 1.0],
        ]
    )
    B = np.array(
        [
            [0.0],
            [(total * eta + m * l) * tau / (total**2 * eta)],
            [0.0],
            [-tau / (total * eta)],
        ]
    )
    return LinearModel(A=A, B=B, Q=np.eye(4), R=np.array([[1e-4]]))


def cartpole_residual(
    params_true: CartPoleParams,
    params_model: CartPoleParams,
    lipschitz_samples: int = 2000,
    lipschitz_seed: int = 0,
) -> ResidualModel:
    """Model error f(t, x, u) = true_step(x, u) - (A x + B u).

    The declared Lipschitz constant is a sampled estimate over the
    operating box ||(x, u)|| <= 1.
    """
    model = cartpole_linearization(params_model)
    A, B = model.A, model.B

    def f(t, x, u):
        x = np.asarray(x, dtype=float).reshape(4)
        uv = np.asarray(u, dtype=float).reshape(-1)
        return cartpole_true_step(params_true, x, uv) - (A @ x + B @ uv)

    probe = ResidualModel(eval=f, lipschitz=0.0, kind="state_action", label="probe")
    c_hat = estimate_lipschitz(
        probe, samples=lipschitz_samples, radius=1.0, rng_seed=lipschitz_seed, n=4, m=1
    )
    return ResidualModel(
        eval=f, lipschitz=float(c_hat), kind="state_action", label="cartpole-model-error"
    )
