"""Synthetic EV-charging fleet with session arrivals and a line limit.

The state holds the remaining energy demand (kWh) per charger; an
allocation u (kW) reduces it at rate tau * u per step.  Session
arrivals inject demand, departures and full batteries zero their
coordinate, and allocations beyond the line limit are projected back
onto it.  All of that enters through the residual, so the crude linear
model the controller sees is just x_{t+1} = x_t - tau u_t.

The reward per step is

    phi1 tau ||u||_2 - phi2 ||x||_2 - phi3 p_t ||u||_1
    - phi4 sum_i 1(departure at i) x_i / e_j

evaluated on the commanded allocation.  Note the residual here does not
vanish at the origin on arrival steps, so this environment exercises
empirical robustness, not the stability hypotheses.

Sessions use integer step indices and 1-based station numbers; prices
are a per-step series in units chosen so that charging against the
electricity price roughly balances the delivery reward (idle charging
is mildly net-negative).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import SessionConflict, SessionParseError, ValidationError
from ..linalg_control import LinearModel
from ..plant import ResidualModel, Trajectory
from ..policies import Policy

__all__ = [
    "ChargingSession",
    "ChargingConfig",
    "EvEnvironment",
    "ev_environment",
    "default_prices",
    "load_prices_csv",
    "load_sessions_csv",
    "write_sessions_csv",
    "generate_sessions",
    "line_limited",
]


@dataclass(frozen=True)
class ChargingSession:
    """One charging visit: arrival/departure step, battery capacity
    (kWh) and the 1-based station index."""

    arrival: int
    departure: int
    energy: float
    station: int

    def __post_init__(self):
        if self.arrival >= self.departure:
            raise ValidationError(
                f"session arrival {self.arrival} must precede departure {self.departure}"
            )
        if self.energy <= 0:
            raise ValidationError(f"session energy must be positive, got {self.energy}")
        if self.station < 1:
            raise ValidationError(f"station index must be >= 1, got {self.station}")


@dataclass(frozen=True)
class ChargingConfig:
    """Fleet geometry, step duration, prices, and reward coefficients."""

    n_chargers: int = 5
    line_limit: float = 6.6
    tau: float = 5.0 / 60.0
    prices: np.ndarray = field(default_factory=lambda: default_prices(288))
    phi: tuple = (50.0, 0.01, 10.0, 100.0)

    def __post_init__(self):
        if self.n_chargers < 1:
            raise ValueError("need at least one charger")
        if self.line_limit <= 0:
            raise ValueError("line limit must be positive")
        if self.tau <= 0:
            raise ValueError("step duration must be positive")
        prices = np.asarray(self.prices, dtype=float)
        if np.any(prices < 0):
            raise ValueError("prices must be nonnegative")
        object.__setattr__(self, "prices", prices)

    @property
    def horizon(self) -> int:
        return self.prices.shape[0]


def default_prices(steps: int, base: float = 0.52, swing: float = 0.10) -> np.ndarray:
    """Smooth daily price curve with a morning dip and an evening peak."""
    t = np.arange(steps) / steps
    return base + swing * np.sin(2.0 * np.pi * (t - 0.35)) + 0.03 * np.sin(
        4.0 * np.pi * t
    )


def load_prices_csv(path) -> np.ndarray:
    """Read a per-step price series from a CSV with a ``price`` column."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "price" not in reader.fieldnames:
            raise SessionParseError(1, "price CSV must have a 'price' column")
        values = []
        for lineno, row in enumerate(reader, start=2):
            try:
                values.append(float(row["price"]))
            except (TypeError, ValueError) as exc:
                raise SessionParseError(lineno, f"bad price value {row.get('price')!r}") from exc
    return np.asarray(values)


@dataclass
class EvEnvironment:
    """Linear model + residual + reward for one day of sessions.

    Iterating yields (model, residual, reward) for tuple unpacking.
    """

    model: LinearModel
    residual: ResidualModel
    reward: Callable[[int, np.ndarray, np.ndarray], float]
    config: ChargingConfig
    sessions: list

    def __iter__(self):
        return iter((self.model, self.residual, self.reward))

    def rewards_for_trajectory(self, traj: Trajectory) -> np.ndarray:
        """Recompute the per-step rewards of a recorded rollout."""
        return np.array(
            [
                self.reward(t, traj.states[t], traj.actions[t])
                for t in range(traj.horizon)
            ]
        )


def _sessions_by_step(sessions: Sequence[ChargingSession], n: int):
    arrivals: dict[int, list] = {}
    departures: dict[int, list] = {}
    per_station: dict[int, list] = {}
    for s in sessions:
        if s.station > n:
            raise ValidationError(
                f"station {s.station} outside the fleet of {n} chargers"
            )
        per_station.setdefault(s.station, []).append(s)
    for station, group in per_station.items():
        group.sort(key=lambda s: s.arrival)
        for a, b in zip(group, group[1:]):
            if b.arrival <= a.departure:
                raise SessionConflict(
                    f"sessions overlap on station {station}: "
                    f"[{a.arrival}, {a.departure}] and [{b.arrival}, {b.departure}]"
                )
        for s in group:
            arrivals.setdefault(s.arrival, []).append((s.station - 1, s.energy))
            departures.setdefault(s.departure, []).append((s.station - 1, s.energy))
    return arrivals, departures


def ev_environment(
    config: ChargingConfig, sessions: Sequence[ChargingSession]
) -> EvEnvironment:
    """Build the charging plant for one day of (non-overlapping) sessions.

    The linear part is A = I, B = -tau I on the demand coordinates; the
    residual implements, per station and in this order of precedence:

    - session arrival: add the session's battery capacity,
    - departure or battery full (x - tau u < 0): zero the coordinate,
    - line limit exceeded (||u||_1 > limit): scale the delivered energy
      back so the step's total delivery is exactly tau * limit,
    - otherwise zero.
    """
    n = config.n_chargers
    sessions = sorted(sessions, key=lambda s: (s.arrival, s.station))
    arrivals, departures = _sessions_by_step(sessions, n)
    tau, gamma = config.tau, config.line_limit
    model = LinearModel(
        A=np.eye(n), B=-tau * np.eye(n), Q=np.eye(n), R=1e-4 * np.eye(n)
    )

    def residual_eval(t, x, u):
        x = np.asarray(x, dtype=float).reshape(n)
        u = np.asarray(u, dtype=float).reshape(n)
        f = np.zeros(n)
        arr = dict(arrivals.get(t, ()))
        dep = dict(departures.get(t, ()))
        total = float(np.sum(np.abs(u)))
        over_limit = total > gamma
        # effective allocation after the line projection; the full-battery
        # check uses it so total delivery never exceeds gamma * tau
        u_eff = u * (gamma / total) if over_limit else u
        for i in range(n):
            if i in arr:
                f[i] = arr[i]
            elif i in dep or x[i] - tau * u_eff[i] < 0:
                f[i] = tau * u[i] - x[i]
            elif over_limit:
                f[i] = tau * (u[i] - u_eff[i])
        return f

    residual = ResidualModel(
        eval=residual_eval,
        lipschitz=1.0 + tau,
        kind="state_action",
        label="ev-charging",
    )
    phi1, phi2, phi3, phi4 = config.phi
    prices = config.prices

    def reward(t, x, u) -> float:
        x = np.asarray(x, dtype=float).reshape(n)
        u = np.asarray(u, dtype=float).reshape(n)
        p_t = float(prices[t]) if t < prices.shape[0] else float(prices[-1])
        r = (
            phi1 * tau * float(np.linalg.norm(u))
            - phi2 * float(np.linalg.norm(x))
            - phi3 * p_t * float(np.sum(np.abs(u)))
        )
        for i, energy in departures.get(t, ()):
            r -= phi4 * x[i] / energy
        return r

    return EvEnvironment(
        model=model,
        residual=residual,
        reward=reward,
        config=config,
        sessions=list(sessions),
    )


def fit_demand_schedule(
    session_sets: Sequence[Sequence[ChargingSession]],
    steps: int,
    n_chargers: int,
) -> list[np.ndarray]:
    """Mean demand-injection profile of the given (training) days.

    Averages the arrival-energy schedule across days and lags it one
    step: an arrival at step t injects demand that a controller first
    sees in x_{t+1}, so a residual-estimate sequence fitted to history
    carries the injection at t+1.  The result feeds
    :func:`lqshield.policies.parameterized_blackbox`.
    """
    sched = np.zeros((steps, n_chargers))
    for sessions in session_sets:
        for s in sessions:
            if s.arrival + 1 < steps:
                sched[s.arrival + 1, s.station - 1] += s.energy
    if session_sets:
        sched /= len(session_sets)
    return list(sched)


def line_limited(policy: Policy, gamma: float) -> Policy:
    """Project actions onto the feasible set {u >= 0, sum(u) <= gamma}."""

    def act(t, x):
        u = np.maximum(np.asarray(policy.act(t, x), dtype=float), 0.0)
        total = float(np.sum(u))
        if total > gamma:
            u = u * (gamma / total)
        return u

    return Policy(
        act=act,
        descriptor=f"limited({gamma:g};{policy.descriptor})",
        stateful=policy.stateful,
    )


_SESSION_COLUMNS = ("arrival", "departure", "energy_kwh", "station")


def load_sessions_csv(path) -> list[ChargingSession]:
    """Read sessions from CSV columns arrival,departure,energy_kwh,station."""
    out: list[ChargingSession] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != _SESSION_COLUMNS:
            raise SessionParseError(
                1, f"expected header {','.join(_SESSION_COLUMNS)}, got {reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                arrival = int(row["arrival"])
                departure = int(row["departure"])
                energy = float(row["energy_kwh"])
                station = int(row["station"])
            except (TypeError, ValueError) as exc:
                raise SessionParseError(lineno, f"unparsable row {row!r}") from exc
            out.append(
                ChargingSession(
                    arrival=arrival, departure=departure, energy=energy, station=station
                )
            )
    return out


def write_sessions_csv(sessions: Sequence[ChargingSession], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SESSION_COLUMNS)
        for s in sessions:
            writer.writerow([s.arrival, s.departure, repr(s.energy), s.station])


def generate_sessions(
    seed: int,
    day_profile: str,
    n_chargers: int = 5,
    steps: int = 288,
    sessions_per_station: int = 2,
) -> list[ChargingSession]:
    """Synthetic one-day session sets with two arrival regimes.

    Each station has fixed commute slots (a morning and an early-
    afternoon visit with station-specific offsets).  "pre_covid" jitters
    arrivals tightly around those slots, giving a concentrated morning
    peak that a schedule fitted on such days anticipates well;
    "post_covid" redraws the arrival times uniformly over the working
    day (flattened peak, lower peak-to-mean ratio) while keeping the
    energy/duration structure.  Sessions on one station never overlap.
    """
    if day_profile not in ("pre_covid", "post_covid"):
        raise ValueError(f"unknown day profile {day_profile!r}")
    rng = np.random.default_rng(seed)
    steps_per_hour = steps / 24.0
    out: list[ChargingSession] = []
    for station in range(1, n_chargers + 1):
        slots = [7.2 + 0.45 * station, 13.0 + 0.5 * station][:sessions_per_station]
        while len(slots) < sessions_per_station:
            slots.append(slots[-1] + 4.0)
        cursor = 0
        for slot_hour in slots:
            if day_profile == "pre_covid":
                arrival = int(round(slot_hour * steps_per_hour)) + int(
                    rng.choice([-1, 0, 1], p=[0.15, 0.7, 0.15])
                )
            else:
                arrival = int(round(rng.uniform(6.0, 18.0) * steps_per_hour))
            arrival = int(np.clip(arrival, 0, steps - 12))
            if arrival <= cursor:
                arrival = cursor + 1
            duration = int(
                np.clip(round((3.0 + rng.uniform(0.0, 1.5)) * steps_per_hour), 6, steps)
            )
            departure = min(arrival + duration, steps - 1)
            if departure <= arrival:
                continue
            energy = float(4.5 + 0.5 * station + rng.uniform(-0.4, 0.4))
            out.append(
                ChargingSession(
                    arrival=arrival, departure=departure, energy=energy, station=station
                )
            )
            cursor = departure + 1
    out.sort(key=lambda s: (s.arrival, s.station))
    return out
