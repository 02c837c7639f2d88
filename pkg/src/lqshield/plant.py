"""Rollouts of x_{t+1} = A x_t + B u_t + f_t(x_t, u_t) with quadratic cost.

The residual f_t is a pluggable callable carrying a declared Lipschitz
constant.  Simulation is deterministic, records everything needed to
replay the recursion exactly, and flags blow-ups instead of raising
(instability is a measured outcome in several experiments).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .linalg_control import LinearModel

__all__ = [
    "ResidualModel",
    "Trajectory",
    "simulate",
    "cost_of",
    "estimate_lipschitz",
    "zero_residual",
    "disturbance_residual",
    "lipschitz_residual",
    "write_trajectory_csv",
]


@dataclass(frozen=True)
class ResidualModel:
    """The unknown nonlinearity, evaluated as f(t, x, u) -> state vector.

    ``kind`` is "time_only" for pure disturbance sequences w_t (exempt
    from the f(t,0,0)=0 requirement) and "state_action" otherwise.
    ``lipschitz`` is the declared constant; it is model knowledge, not
    derived -- :func:`estimate_lipschitz` cross-checks it by sampling.
    """

    eval: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    lipschitz: float
    kind: str = "state_action"
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("time_only", "state_action"):
            raise ValueError(f"unknown residual kind {self.kind!r}")
        if self.lipschitz < 0:
            raise ValueError("Lipschitz constant must be nonnegative")

    def __call__(self, t: int, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.eval(t, x, u)


def zero_residual(n: int) -> ResidualModel:
    z = np.zeros(n)

    def f(t, x, u):
        return z

    return ResidualModel(eval=f, lipschitz=0.0, kind="time_only", label="zero")


def disturbance_residual(w: Sequence[np.ndarray]) -> ResidualModel:
    """Time-only residual returning w_t while t < len(w) and 0 after."""
    w = [np.asarray(v, dtype=float) for v in w]
    n = w[0].shape[0] if w else 0
    z = np.zeros(n)

    def f(t, x, u):
        return w[t] if 0 <= t < len(w) else z

    return ResidualModel(eval=f, lipschitz=0.0, kind="time_only", label="disturbance")


def lipschitz_residual(
    n: int,
    m: int,
    constant: float,
    seed: int = 0,
    saturation: float = 1.0,
) -> ResidualModel:
    """Smooth synthetic state-action residual with a known Lipschitz bound.

    f(x, u) = constant * G tanh(J [x; u] / saturation) * saturation with
    ||G||_2 = ||J||_2 = 1, so the Jacobian norm never exceeds ``constant``
    and f(0, 0) = 0.
    """
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    G /= np.linalg.norm(G, 2)
    J = rng.standard_normal((n, n + m))
    J /= np.linalg.norm(J, 2)

    def f(t, x, u):
        z = np.concatenate([np.asarray(x, float), np.asarray(u, float)])
        return constant * saturation * (G @ np.tanh((J @ z) / saturation))

    return ResidualModel(
        eval=f, lipschitz=constant, kind="state_action", label=f"tanh({constant})"
    )


@dataclass
class Trajectory:
    """Recorded rollout: states x_0..x_T, actions u_0..u_{T-1}, realized
    residuals, per-step quadratic costs and their sum.

    ``diverged`` marks a rollout that exceeded the blow-up bound; the
    recorded prefix is still valid and replayable.
    """

    states: np.ndarray
    actions: np.ndarray
    residuals: np.ndarray
    step_costs: np.ndarray
    total_cost: float
    diverged: bool = False
    diverged_at: Optional[int] = None
    policy_label: str = ""

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    def state_norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def replay_errors(self, model: LinearModel) -> np.ndarray:
        """Max-norm defect of x_{t+1} = A x_t + B u_t + f_t per step.

        Recomputed with the same per-step expression the simulator uses,
        so an untampered trajectory replays exactly.
        """
        out = np.empty(self.horizon)
        for t in range(self.horizon):
            pred = model.A @ self.states[t] + model.B @ self.actions[t] + self.residuals[t]
            out[t] = np.max(np.abs(pred - self.states[t + 1]))
        return out


def cost_of(traj: Trajectory, Q: np.ndarray, R: np.ndarray) -> float:
    """Sum of x'Qx + u'Ru over the recorded steps (terminal state uncosted)."""
    xs = traj.states[:-1]
    us = traj.actions
    return float(np.einsum("ti,ij,tj->", xs, Q, xs) + np.einsum("ti,ij,tj->", us, R, us))


def simulate(
    model: LinearModel,
    residual: Optional[ResidualModel],
    policy,
    x0,
    T: int,
    blowup: float = 1e9,
) -> Trajectory:
    """Roll the plant forward T steps under ``policy``.

    The policy is queried exactly once per step in time order.  If some
    ||x_t|| exceeds ``blowup`` (or goes non-finite) the rollout stops and
    the partial trajectory is returned with ``diverged`` set.
    """
    if T < 1:
        raise ValueError("horizon T must be >= 1")
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape[0] != model.n:
        raise ValueError(f"x0 has dimension {x.shape[0]}, expected {model.n}")
    A, B, Q, R = model.A, model.B, model.Q, model.R
    states = [x.copy()]
    actions: list[np.ndarray] = []
    residuals: list[np.ndarray] = []
    step_costs: list[float] = []
    diverged = False
    diverged_at: Optional[int] = None
    for t in range(T):
        u = np.asarray(policy.act(t, x), dtype=float).reshape(-1)
        if u.shape[0] != model.m:
            raise ValueError(f"policy returned dimension {u.shape[0]}, expected {model.m}")
        if residual is not None:
            f = np.asarray(residual.eval(t, x, u), dtype=float).reshape(-1)
        else:
            f = np.zeros(model.n)
        x_next = A @ x + B @ u + f
        actions.append(u)
        residuals.append(f)
        step_costs.append(float(x @ Q @ x + u @ R @ u))
        states.append(x_next.copy())
        x = x_next
        nx = np.linalg.norm(x)
        if not np.isfinite(nx) or nx > blowup:
            diverged = True
            diverged_at = t + 1
            break
    return Trajectory(
        states=np.asarray(states),
        actions=np.asarray(actions),
        residuals=np.asarray(residuals),
        step_costs=np.asarray(step_costs),
        total_cost=float(np.sum(step_costs)),
        diverged=diverged,
        diverged_at=diverged_at,
        policy_label=getattr(policy, "descriptor", ""),
    )


def estimate_lipschitz(
    residual: ResidualModel,
    samples: int,
    radius: float,
    rng_seed: int,
    n: int = None,
    m: int = None,
    t: int = 0,
) -> float:
    """Sampled lower bound of the Lipschitz constant of f(t, ., .).

    Draws ``samples`` pairs (z1, z2) of joint (x, u) points inside the
    ball of the given radius and returns the largest difference ratio.
    Deterministic given the seed.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if n is None or m is None:
        raise ValueError("state and action dimensions are required")
    rng = np.random.default_rng(rng_seed)
    best = 0.0
    for k in range(samples):
        z1 = rng.uniform(-radius, radius, size=n + m)
        if k % 2 == 0:
            z2 = rng.uniform(-radius, radius, size=n + m)
        else:
            # coordinate-aligned probe: exact difference ratios for maps
            # that depend on a subset of coordinates
            z2 = z1.copy()
            j = int(rng.integers(0, n + m))
            z2[j] += rng.uniform(1e-4, 1e-2) * radius
        dz = np.linalg.norm(z1 - z2)
        if dz < 1e-12:
            continue
        f1 = residual.eval(t, z1[:n], z1[n:])
        f2 = residual.eval(t, z2[:n], z2[n:])
        ratio = np.linalg.norm(np.asarray(f1) - np.asarray(f2)) / dz
        if ratio > best:
            best = float(ratio)
    return best


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write a trajectory as CSV: t, x_0..x_{n-1}, u_0..u_{m-1}, step_cost.

    One row per step; the final row carries the terminal state with
    empty action and cost fields.
    """
    n = traj.states.shape[1]
    m = traj.actions.shape[1] if traj.actions.size else 0
    header = (
        ["t"]
        + [f"x_{i}" for i in range(n)]
        + [f"u_{j}" for j in range(m)]
        + ["step_cost"]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(traj.horizon):
            row = (
                [t]
                + [repr(float(v)) for v in traj.states[t]]
                + [repr(float(v)) for v in traj.actions[t]]
                + [repr(float(traj.step_costs[t]))]
            )
            writer.writerow(row)
        writer.writerow(
            [traj.horizon]
            + [repr(float(v)) for v in traj.states[-1]]
            + [""] * m
            + [""]
        )
