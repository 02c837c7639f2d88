"""Concrete controllers: LQR advice, synthetic black boxes, and blends.

A policy is anything with ``act(t, x) -> u``.  Stateless policies are
plain closures wrapped in :class:`Policy`; the stateful adaptive policy
lives in :mod:`lqshield.adaptive`.

The synthetic black-box families stand in for pre-trained agents:

- consistency-bounded perturbations of a reference policy (the error
  never exceeds ``epsilon * ||x||`` by construction),
- linearly parameterized feedforward policies built from residual
  estimates,
- plain (possibly destabilizing) state-feedback gains.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .linalg_control import Synthesis

__all__ = [
    "Policy",
    "EpsilonReport",
    "lqr_policy",
    "gain_policy",
    "auxiliary_optimal_policy",
    "parameterized_blackbox",
    "epsilon_consistent_blackbox",
    "naive_convex_policy",
    "measure_epsilon",
    "saturated",
    "nonnegative",
    "gaussian_state_sampler",
]


@dataclass
class Policy:
    act: Callable[[int, np.ndarray], np.ndarray]
    descriptor: str = ""
    stateful: bool = False


@dataclass(frozen=True)
class EpsilonReport:
    """Empirical consistency error: sup over sampled states of
    ||blackbox(x) - reference(x)|| / ||x||."""

    epsilon_hat: float
    samples: int
    states_tested: str


def lqr_policy(syn: Synthesis) -> Policy:
    """The model-based advice u = -K x."""
    K = syn.K

    def act(t, x):
        return -K @ x

    return Policy(act=act, descriptor="lqr")


def gain_policy(K: np.ndarray, descriptor: str = "gain") -> Policy:
    """Plain state feedback u = -K x for an arbitrary gain."""
    K = np.asarray(K, dtype=float)

    def act(t, x):
        return -K @ x

    return Policy(act=act, descriptor=descriptor)


def _feedforward_terms(syn: Synthesis, seq: Sequence[np.ndarray]) -> list[np.ndarray]:
    """g_t = -H^-1 B' sum_{tau=t} (F')^(tau-t) P seq_tau, computed backward."""
    P, F, B, H = syn.P, syn.F, syn.model.B, syn.H
    L = len(seq)
    g: list[np.ndarray] = [np.zeros(syn.m)] * L
    eta = np.zeros(syn.n)
    for t in range(L - 1, -1, -1):
        eta = P @ np.asarray(seq[t], dtype=float) + F.T @ eta
        g[t] = -np.linalg.solve(H, B.T @ eta)
    return g


def parameterized_blackbox(
    syn: Synthesis, f_hat: Sequence[np.ndarray], descriptor: str = "parameterized"
) -> Policy:
    """Linearly parameterized policy from residual estimates f_hat.

    u_t = -K x - H^-1 B' sum_{tau>=t} (F')^(tau-t) P f_hat_tau, with the
    estimate sequence treated as zero past its end.  With estimates equal
    to the realized time-only disturbances this is the exact offline
    optimum (see :func:`auxiliary_optimal_policy`).
    """
    K = syn.K
    g = _feedforward_terms(syn, f_hat)
    L = len(g)
    zero = np.zeros(syn.m)

    def act(t, x):
        ff = g[t] if 0 <= t < L else zero
        return -K @ x + ff

    return Policy(act=act, descriptor=descriptor)


def auxiliary_optimal_policy(syn: Synthesis, disturbances: Sequence[np.ndarray]) -> Policy:
    """Exact optimal policy for the plant with known additive disturbances.

    u_t = -H^-1 B' (P A x_t + sum_{tau=t}^{T} (F')^(tau-t) P w_tau); the
    tail past the sequence end is treated as zero.
    """
    pol = parameterized_blackbox(syn, disturbances, descriptor="auxiliary-optimal")
    return pol


def naive_convex_policy(black: Policy, advice: Policy, lambda_fixed: float) -> Policy:
    """Pointwise convex combination lambda * black + (1 - lambda) * advice."""
    if not 0.0 <= lambda_fixed <= 1.0:
        raise ValueError("lambda_fixed must lie in [0, 1]")
    lam = float(lambda_fixed)

    def act(t, x):
        return lam * np.asarray(black.act(t, x), float) + (1.0 - lam) * np.asarray(
            advice.act(t, x), float
        )

    return Policy(
        act=act,
        descriptor=f"naive({lam:g};{black.descriptor}|{advice.descriptor})",
    )


def _hashed_unit_vector(seed: int, x: np.ndarray, m: int) -> np.ndarray:
    """Deterministic unit vector from a seeded hash of quantized coordinates.

    Same (seed, x-up-to-1e-9) always yields the same direction, so the
    perturbed policy is a function of the state, not a random process.
    """
    q = np.round(np.asarray(x, float) * 1e9).astype(np.int64)
    digest = hashlib.blake2b(
        q.tobytes() + int(seed).to_bytes(8, "little", signed=True), digest_size=16
    ).digest()
    sub = np.random.default_rng(int.from_bytes(digest, "little"))
    d = sub.standard_normal(m)
    norm = np.linalg.norm(d)
    if norm < 1e-12:
        d = np.zeros(m)
        d[0] = 1.0
        return d
    return d / norm


def epsilon_consistent_blackbox(
    optimal: Policy,
    epsilon: float,
    bias_mode: str = "rotation",
    rng_seed: int = 0,
) -> Policy:
    """A black box within consistency error ``epsilon`` of ``optimal``.

    Returns x -> optimal(x) + e(x) with ||e(x)|| <= epsilon * ||x||:

    - "rotation": e points along a state-dependent hashed unit vector,
    - "scaling": e stretches or shrinks the reference action along itself,
    - "offset_gain": e = epsilon * D x for a fixed random ||D|| = 1 gain.

    Deterministic given the seed; the perturbation vanishes at x = 0.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if bias_mode not in ("rotation", "scaling", "offset_gain"):
        raise ValueError(f"unknown bias_mode {bias_mode!r}")
    eps = float(epsilon)
    state: dict = {}

    def act(t, x):
        x = np.asarray(x, dtype=float)
        base = np.asarray(optimal.act(t, x), dtype=float)
        if eps == 0.0:
            return base
        nx = np.linalg.norm(x)
        if nx == 0.0:
            return base
        if bias_mode == "rotation":
            e = eps * nx * _hashed_unit_vector(rng_seed, x, base.shape[0])
        elif bias_mode == "scaling":
            if "sign" not in state:
                state["sign"] = 1.0 if (rng_seed % 2 == 0) else -1.0
            nb = np.linalg.norm(base)
            e = (
                state["sign"] * eps * nx * base / nb
                if nb > 1e-12
                else np.zeros_like(base)
            )
        else:  # offset_gain
            if "D" not in state:
                rng = np.random.default_rng(rng_seed)
                D = rng.standard_normal((base.shape[0], x.shape[0]))
                state["D"] = D / np.linalg.norm(D, 2)
            e = eps * state["D"] @ x
        return base + e

    return Policy(
        act=act,
        descriptor=f"eps-consistent({eps:g},{bias_mode};{optimal.descriptor})",
    )


def gaussian_state_sampler(n: int, radius: float = 1.0):
    """Sampler drawing states from radius * N(0, I_n)."""

    def sample(rng: np.random.Generator) -> np.ndarray:
        return radius * rng.standard_normal(n)

    return sample


def measure_epsilon(
    blackbox: Policy,
    optimal: Policy,
    sampler,
    samples: int,
    rng_seed: int,
    times: Sequence[int] = (0,),
) -> EpsilonReport:
    """Empirical sup of ||blackbox(x) - optimal(x)|| / ||x|| over samples.

    The reference should be the best available stand-in for the
    hindsight-optimal policy: :func:`auxiliary_optimal_policy` is exact
    for disturbance-only plants; for state/action-dependent residuals
    only approximate references exist (e.g. built from trajectory
    optimization), so treat the resulting estimate accordingly.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(rng_seed)
    worst = 0.0
    for _ in range(samples):
        x = np.asarray(sampler(rng), dtype=float)
        nx = np.linalg.norm(x)
        if nx < 1e-12:
            continue
        for t in times:
            diff = np.asarray(blackbox.act(t, x), float) - np.asarray(
                optimal.act(t, x), float
            )
            ratio = np.linalg.norm(diff) / nx
            if ratio > worst:
                worst = float(ratio)
    return EpsilonReport(
        epsilon_hat=worst,
        samples=samples,
        states_tested=f"{samples} sampled states, times {tuple(times)}",
    )


def saturated(policy: Policy, limit: float) -> Policy:
    """Clamp every action component to [-limit, limit]."""

    def act(t, x):
        return np.clip(np.asarray(policy.act(t, x), float), -limit, limit)

    return Policy(
        act=act,
        descriptor=f"sat({limit:g};{policy.descriptor})",
        stateful=policy.stateful,
    )


def nonnegative(policy: Policy) -> Policy:
    """Project every action component onto u >= 0 (charging allocations)."""

    def act(t, x):
        return np.maximum(np.asarray(policy.act(t, x), float), 0.0)

    return Policy(
        act=act,
        descriptor=f"nonneg({policy.descriptor})",
        stateful=policy.stateful,
    )
