"""The adaptive confidence-weighted blend of a black box with LQR advice.

At every step the policy emits u_t = lambda_t * blackbox(x_t) +
(1 - lambda_t) * advice(x_t) with a confidence weight lambda_t that
starts at 1, never increases, and drops to 0 once the learned (or
externally supplied) coefficient stops supporting the black box.

The learned coefficient is a ratio of inner products between the
residual series observed on the crude model and the black box's offset
from the LQR action; :func:`learn_lambda_prime` is the reference
implementation on a log, and :class:`AdaptivePolicy` maintains the same
quantities incrementally in O(n^2) per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import InsufficientHistory, NotRun
from .linalg_control import Synthesis, matrix_power_series, pseudo_inverse
from .policies import Policy

__all__ = [
    "ConfidenceState",
    "ObservationLog",
    "learn_lambda_prime",
    "optimal_lambda",
    "AdaptivePolicy",
    "adaptive_policy",
    "confidence_trace",
    "write_confidence_csv",
]

_DENOM_FLOOR = 1e-12


@dataclass
class ObservationLog:
    """States, applied actions, and the black box's suggestions so far.

    ``states`` is one longer than the action lists: x_0..x_t alongside
    u_0..u_{t-1} and the suggestions made at each visited state.
    """

    states: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    blackbox_actions: list = field(default_factory=list)

    def append_state(self, x) -> None:
        self.states.append(np.asarray(x, dtype=float).copy())

    def append_step(self, u, u_hat) -> None:
        self.actions.append(np.asarray(u, dtype=float).copy())
        self.blackbox_actions.append(np.asarray(u_hat, dtype=float).copy())

    @property
    def t(self) -> int:
        return len(self.actions)

    def check(self) -> None:
        if len(self.states) != len(self.actions) + 1:
            raise ValueError("log must hold one more state than actions")
        if len(self.blackbox_actions) != len(self.actions):
            raise ValueError("log must hold one black-box action per step")


@dataclass(frozen=True)
class ConfidenceState:
    """Recorded lambda trajectory of one adaptive-policy run."""

    lambdas: tuple
    alpha: float
    t0: Optional[int]
    lambda_limit: float
    lambda_prime_raw: tuple = ()
    branches: tuple = ()


def learn_lambda_prime(
    syn: Synthesis, log: ObservationLog, numerator_start: int = 1
) -> float:
    """Confidence coefficient learned from the crude model and the log.

    numerator:   sum_{s=ns}^{t-1} (sum_{tau=s}^{t-1} (F')^(tau-s)
                 P (A x_tau + B u_tau - x_{tau+1}))' B (uhat_s + K x_s)
    denominator: sum_{s=0}^{t-1} (uhat_s + K x_s)' (B H^-1)^+ B
                 (uhat_s + K x_s)

    Returns numerator / denominator, or 0 when the denominator is
    numerically zero (the black box agrees with the LQR everywhere, so
    there is no signal).  The value is returned raw; the adaptive policy
    clamps it to [0, 1] before use.

    The asymmetric index start (numerator from s=1, denominator from
    s=0) is deliberate; pass numerator_start=0 to study the symmetric
    variant.
    """
    log.check()
    t = log.t
    if t < 2:
        raise InsufficientHistory(f"need at least 2 recorded steps, have {t}")
    A, B = syn.model.A, syn.model.B
    P, K, F, H = syn.P, syn.K, syn.F, syn.H
    M = pseudo_inverse(B @ np.linalg.inv(H)) @ B
    resid = [
        A @ log.states[tau] + B @ log.actions[tau] - log.states[tau + 1]
        for tau in range(t)
    ]
    num = 0.0
    for s in range(numerator_start, t):
        eta = matrix_power_series(F, P, resid, s, t - 1)
        v = log.blackbox_actions[s] + K @ log.states[s]
        num += float(eta @ (B @ v))
    den = 0.0
    for s in range(t):
        v = log.blackbox_actions[s] + K @ log.states[s]
        den += float(v @ (M @ v))
    if abs(den) < _DENOM_FLOOR:
        return 0.0
    return num / den


def optimal_lambda(
    syn: Synthesis,
    f_star: Sequence[np.ndarray],
    f_hat: Sequence[np.ndarray],
    t: int,
) -> float:
    """Hindsight-optimal confidence weight from known residual sequences.

    With eta(f; s, t) = sum_{tau=s}^{t} (F')^(tau-s) P f_tau:

        sum_s eta(f*; s, t)' H eta(fhat; s, t)
        --------------------------------------
        sum_s eta(fhat; s, t)' H eta(fhat; s, t)

    Returns 0 when the denominator is numerically zero.
    """
    if len(f_star) < t + 1 or len(f_hat) < t + 1:
        raise ValueError("residual sequences must cover indices 0..t")
    F, P, H = syn.F, syn.P, syn.H
    num = 0.0
    den = 0.0
    for s in range(t + 1):
        eta_star = matrix_power_series(F, P, f_star, s, t)
        eta_hat = matrix_power_series(F, P, f_hat, s, t)
        num += float(eta_star @ (H @ eta_hat))
        den += float(eta_hat @ (H @ eta_hat))
    if abs(den) < _DENOM_FLOOR:
        return 0.0
    return num / den


class AdaptivePolicy:
    """Stateful policy implementing the confidence-decay rule.

    lambda_0 = 1.  At t >= 1, when ||x_t|| is zero (within ``zero_tol``)
    the previous weight is kept; otherwise a coefficient lambda' is
    obtained (learned from the log, or read from an external sequence),
    clamped to [0, 1], and

        lambda_t = min(lambda', lambda_{t-1} - alpha)   if lambda' > 0
                                                        and lambda_{t-1} > alpha
        lambda_t = 0                                    otherwise.

    ``decrease_cap`` optionally bounds the per-step decrease (off by
    default); in learned mode the first update is held until the log has
    two steps.  One instance drives one simulation.
    """

    stateful = True

    def __init__(
        self,
        syn: Synthesis,
        blackbox: Policy,
        advice: Policy,
        alpha: float,
        lambda_source: Union[str, Sequence[float], Callable[[int], float]] = "learned",
        numerator_start: int = 1,
        zero_tol: float = 0.0,
        decrease_cap: Optional[float] = None,
    ):
        if alpha <= 0:
            raise ValueError("step size alpha must be positive")
        self.syn = syn
        self.blackbox = blackbox
        self.advice = advice
        self.alpha = float(alpha)
        self.zero_tol = float(zero_tol)
        self.decrease_cap = decrease_cap
        self.numerator_start = numerator_start
        if isinstance(lambda_source, str):
            if lambda_source != "learned":
                raise ValueError("lambda_source must be 'learned', a sequence, or a callable")
            self._external = None
        elif callable(lambda_source):
            self._external = lambda_source
        else:
            seq = [float(v) for v in lambda_source]
            self._external = lambda t: seq[min(t, len(seq) - 1)]
        self.descriptor = f"adaptive({'learned' if self._external is None else 'external'},a={alpha:g})"
        self.log = ObservationLog()
        self._lambdas: list[float] = []
        self._raw: list[float] = []
        self._branches: list[str] = []
        self._t0: Optional[int] = None
        # incremental learned-rule state
        self._M = pseudo_inverse(syn.model.B @ np.linalg.inv(syn.H)) @ syn.model.B
        self._c = np.zeros(syn.n)
        self._num = 0.0
        self._den = 0.0
        self._prev_b: Optional[np.ndarray] = None

    def _learned_raw(self, t: int, x: np.ndarray) -> Optional[float]:
        """Advance the incremental sums with the newly observed x_t and
        return the current coefficient (None while history is too short)."""
        A, B = self.syn.model.A, self.syn.model.B
        P, F = self.syn.P, self.syn.F
        r_prev = A @ self.log.states[t - 1] + B @ self.log.actions[t - 1] - x
        include = (t - 1) >= self.numerator_start
        self._c = F @ self._c + (self._prev_b if include else 0.0)
        self._num += float(r_prev @ (P @ self._c))
        v = self.log.blackbox_actions[t - 1] + self.syn.K @ self.log.states[t - 1]
        self._den += float(v @ (self._M @ v))
        if t < 2:
            return None
        if abs(self._den) < _DENOM_FLOOR:
            return 0.0
        return self._num / self._den

    def act(self, t: int, x) -> np.ndarray:
        if t != self.log.t:
            raise ValueError(
                f"adaptive policy must be stepped in order; expected t={self.log.t}, got {t}"
            )
        x = np.asarray(x, dtype=float).reshape(-1)
        self.log.append_state(x)
        raw = float("nan")
        if t == 0:
            lam = 1.0
            branch = "init"
        elif np.linalg.norm(x) <= self.zero_tol:
            lam = self._lambdas[-1]
            branch = "zero_state"
            # still advance the incremental sums so later updates see all data
            if self._external is None:
                raw_opt = self._learned_raw(t, x)
                raw = float("nan") if raw_opt is None else raw_opt
        else:
            prev = self._lambdas[-1]
            if self._external is None:
                raw_opt = self._learned_raw(t, x)
            else:
                raw_opt = float(self._external(t))
            if raw_opt is None:
                lam = prev
                branch = "hold"
            else:
                raw = float(raw_opt)
                clipped = min(max(raw, 0.0), 1.0)
                if clipped > 0.0 and prev > self.alpha:
                    lam = min(clipped, prev - self.alpha)
                    branch = "decrease"
                else:
                    lam = 0.0
                    branch = "cutoff"
                if self.decrease_cap is not None:
                    lam = max(lam, prev - self.decrease_cap)
        self._lambdas.append(lam)
        self._raw.append(raw)
        self._branches.append(branch)
        if self._t0 is None and (lam == 0.0 or np.linalg.norm(x) <= self.zero_tol):
            self._t0 = t
        u_hat = np.asarray(self.blackbox.act(t, x), dtype=float).reshape(-1)
        u_bar = np.asarray(self.advice.act(t, x), dtype=float).reshape(-1)
        u = lam * u_hat + (1.0 - lam) * u_bar
        self.log.append_step(u, u_hat)
        self._prev_b = self.syn.model.B @ (u_hat + self.syn.K @ x)
        return u

    @property
    def lambdas(self) -> list[float]:
        return list(self._lambdas)

    def trace(self) -> ConfidenceState:
        if not self._lambdas:
            raise NotRun("adaptive policy has not been stepped yet")
        return ConfidenceState(
            lambdas=tuple(self._lambdas),
            alpha=self.alpha,
            t0=self._t0,
            lambda_limit=self._lambdas[-1],
            lambda_prime_raw=tuple(self._raw),
            branches=tuple(self._branches),
        )


def adaptive_policy(
    syn: Synthesis,
    blackbox: Policy,
    advice: Policy,
    alpha: float,
    lambda_source: Union[str, Sequence[float], Callable[[int], float]] = "learned",
    **kwargs,
) -> AdaptivePolicy:
    """Construct an :class:`AdaptivePolicy` (one instance per simulation)."""
    return AdaptivePolicy(syn, blackbox, advice, alpha, lambda_source, **kwargs)


def confidence_trace(policy: AdaptivePolicy) -> ConfidenceState:
    """The recorded lambda sequence; raises :class:`NotRun` before any step."""
    return policy.trace()


def write_confidence_csv(policy: AdaptivePolicy, path) -> None:
    """Columns: t, lambda_t, lambda_prime_raw, branch_taken."""
    import csv

    state = policy.trace()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "lambda_t", "lambda_prime_raw", "branch_taken"])
        for t, (lam, raw, br) in enumerate(
            zip(state.lambdas, state.lambda_prime_raw, state.branches)
        ):
            writer.writerow([t, repr(float(lam)), "" if np.isnan(raw) else repr(float(raw)), br])
