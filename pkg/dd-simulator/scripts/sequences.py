"""
sequences.py - Pulse schedules for CPMG, UDD, CDD and RUDD.

Every generator returns an immutable Schedule of fully resolved PulseEvents
(start, stop, stretched shape). Times are in units of 1/lambda.

RUDD keeps the UDD centers but lets the i-th pi pulse run from
t_i^- = T sin^2(pi i / (2(N+1)) - theta_p / 2) for

    tau^(i) = T sin(pi i / (N+1)) sin(theta_p),

with theta_p fixed so that the first (shortest) pulse lasts tau*.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

import config
from errors import ContractError, ScheduleError, ThetaDomainError, ThetaRangeError
from pulses import PulseShape, rescale, shape_from_record, shape_to_record, stretch

log = logging.getLogger("sequences")


class SequenceKind(str, Enum):
    CPMG = "cpmg"
    UDD = "udd"
    CDD = "cdd"
    RUDD = "rudd"
    RUDD_NO_BOUNDARY = "rudd_noboundary"

    @property
    def is_rudd(self) -> bool:
        return self in (SequenceKind.RUDD, SequenceKind.RUDD_NO_BOUNDARY)


class EventKind(str, Enum):
    PI = "pi"
    TWO_PI = "twopi"


@dataclass(frozen=True)
class PulseEvent:
    index: int
    t_start: float
    t_stop: float
    shape: PulseShape
    kind: EventKind = EventKind.PI

    @property
    def duration(self) -> float:
        return self.shape.tau

    @property
    def center(self) -> float:
        return 0.5 * (self.t_start + self.t_stop)


@dataclass(frozen=True)
class Schedule:
    kind: SequenceKind
    n: int
    T: float
    events: tuple[PulseEvent, ...]
    tau_star: float
    theta_p: float | None = None
    # Boundary 2pi pulses squeezed above their amplitude cap: (event index, peak, cap)
    cap_violations: tuple[tuple[int, float, float], ...] = field(default=())

    def __post_init__(self):
        if self.T <= 0:
            raise ScheduleError(f"total duration must be positive, got {self.T}")
        slack = config.OVERLAP_TOL * self.T
        prev_stop = 0.0
        for e in self.events:
            if e.t_stop - e.t_start <= 0:
                raise ScheduleError(f"event {e.index} has non-positive duration")
            if e.t_start < -slack or e.t_stop > self.T + slack:
                raise ScheduleError(
                    f"event {e.index} [{e.t_start:.6g}, {e.t_stop:.6g}] outside [0, {self.T:.6g}]"
                )
            if e.t_start < prev_stop - slack:
                raise ScheduleError(
                    f"event {e.index} starts at {e.t_start:.6g} before the previous pulse ends at {prev_stop:.6g}"
                )
            prev_stop = e.t_stop
        if len(self.pi_events) != self.n:
            raise ScheduleError(f"{self.kind.value}: {len(self.pi_events)} pi events for N={self.n}")
        if self.total_pulse_time > self.T * (1 + config.OVERLAP_TOL):
            raise ScheduleError(f"pulses need {self.total_pulse_time:.6g} > T={self.T:.6g}")

    @property
    def pi_events(self) -> tuple[PulseEvent, ...]:
        return tuple(e for e in self.events if e.kind is EventKind.PI)

    @property
    def centers(self) -> np.ndarray:
        return np.array([e.center for e in self.pi_events])

    @property
    def total_pulse_time(self) -> float:
        return float(sum(e.duration for e in self.pi_events))

    def to_record(self) -> dict:
        record = {
            "kind": self.kind.value,
            "N": self.n,
            "T": f"{self.T:.17g}",
            "tau_star": f"{self.tau_star:.17g}",
            "events": [
                {
                    "index": e.index,
                    "kind": e.kind.value,
                    "t_start": f"{e.t_start:.17g}",
                    "t_stop": f"{e.t_stop:.17g}",
                    "shape": shape_to_record(e.shape),
                }
                for e in self.events
            ],
        }
        if self.theta_p is not None:
            record["theta_p"] = f"{self.theta_p:.17g}"
        return record


def schedule_from_record(record: dict) -> Schedule:
    events = tuple(
        PulseEvent(
            index=int(e["index"]),
            t_start=float(e["t_start"]),
            t_stop=float(e["t_stop"]),
            shape=shape_from_record(e["shape"]),
            kind=EventKind(e["kind"]),
        )
        for e in record["events"]
    )
    theta_p = record.get("theta_p")
    return Schedule(
        kind=SequenceKind(record["kind"]),
        n=int(record["N"]),
        T=float(record["T"]),
        events=events,
        tau_star=float(record["tau_star"]),
        theta_p=None if theta_p is None else float(theta_p),
    )


# ---------------------------------------------------------------------------
# Ideal instants
# ---------------------------------------------------------------------------
def cpmg_instants(n: int, T: float) -> np.ndarray:
    i = np.arange(1, n + 1)
    return T * (2 * i - 1) / (2 * n)


def udd_instants(n: int, T: float) -> np.ndarray:
    i = np.arange(1, n + 1)
    return T * np.sin(np.pi * i / (2 * (n + 1))) ** 2


def cdd_instants(level: int, T: float) -> np.ndarray:
    """Pi-pulse instants of the pure-dephasing CDD recursion.

    CDD_0 is free evolution; CDD_k is two half-length copies of CDD_(k-1),
    with a pi pulse between them when k-1 is even.
    """
    if level < 0:
        raise ContractError(f"CDD level must be >= 0, got {level}")

    def expand(k, t0, length):
        if k == 0:
            return []
        half = 0.5 * length
        middle = [t0 + half] if (k - 1) % 2 == 0 else []
        return expand(k - 1, t0, half) + middle + expand(k - 1, t0 + half, half)

    instants = np.array(expand(level, 0.0, T))
    if instants.size and (instants.min() <= 0 or instants.max() >= T):
        raise ScheduleError(f"CDD level {level} places a pulse on the sequence boundary")
    return instants


def ideal_instants(kind: SequenceKind | str, n: int, T: float) -> np.ndarray:
    """Ideal pulse instants; n is the pulse count, or the level for CDD."""
    kind = SequenceKind(kind)
    if kind is SequenceKind.CPMG:
        return cpmg_instants(n, T)
    if kind is SequenceKind.UDD:
        return udd_instants(n, T)
    if kind is SequenceKind.CDD:
        return cdd_instants(n, T)
    raise ContractError(f"{kind.value} has no ideal-pulse limit of its own (use udd)")


def cdd_pulse_count(level: int) -> int:
    return len(cdd_instants(level, 1.0))


# ---------------------------------------------------------------------------
# Fixed-width schedules
# ---------------------------------------------------------------------------
def _centered_schedule(kind: SequenceKind, centers: np.ndarray, T: float, shape: PulseShape) -> Schedule:
    n = len(centers)
    tau = shape.tau
    if n and T < n * tau:
        raise ScheduleError(f"{kind.value}: T={T:.6g} shorter than {n} pulses of {tau:.6g}")
    half = 0.5 * tau
    events = tuple(
        PulseEvent(index=i + 1, t_start=float(c) - half, t_stop=float(c) + half, shape=shape)
        for i, c in enumerate(centers)
    )
    return Schedule(kind=kind, n=n, T=T, events=events, tau_star=tau)


def cpmg_schedule(n: int, T: float, shape: PulseShape) -> Schedule:
    if n < 1:
        raise ContractError(f"CPMG needs N >= 1, got {n}")
    return _centered_schedule(SequenceKind.CPMG, cpmg_instants(n, T), T, shape)


def udd_schedule(n: int, T: float, shape: PulseShape) -> Schedule:
    if n < 1:
        raise ContractError(f"UDD needs N >= 1, got {n}")
    return _centered_schedule(SequenceKind.UDD, udd_instants(n, T), T, shape)


def cdd_schedule(level: int, T: float, shape: PulseShape) -> Schedule:
    if level < 1:
        raise ContractError(f"CDD needs level >= 1, got {level}")
    return _centered_schedule(SequenceKind.CDD, cdd_instants(level, T), T, shape)


# ---------------------------------------------------------------------------
# RUDD
# ---------------------------------------------------------------------------
def min_rudd_duration(n: int, tau_star: float) -> float:
    """Smallest T for which theta_p exists (back-to-back pulses)."""
    return tau_star / (math.sin(math.pi / (n + 1)) * math.sin(math.pi / (2 * (n + 1))))


def solve_theta_p(n: int, T: float, tau_star: float) -> float:
    """theta_p such that the first RUDD pulse lasts exactly tau*."""
    if n < 1:
        raise ContractError(f"RUDD needs N >= 1, got {n}")
    if T <= 0 or tau_star <= 0:
        raise ContractError(f"T and tau* must be positive, got T={T}, tau*={tau_star}")
    arg = tau_star / (T * math.sin(math.pi / (n + 1)))
    if arg > 1.0:
        raise ThetaDomainError(f"arcsin argument {arg:.6g} > 1 (T={T:.6g}, tau*={tau_star:.6g})")
    limit = math.sin(math.pi / (2 * (n + 1)))
    if arg > limit * (1 + config.OVERLAP_TOL):
        raise ThetaRangeError(
            f"T={T:.6g} below the back-to-back limit {min_rudd_duration(n, tau_star):.6g} for N={n}"
        )
    return math.asin(min(arg, limit))


def rudd_durations(n: int, T: float, theta_p: float) -> np.ndarray:
    i = np.arange(1, n + 1)
    return T * np.sin(np.pi * i / (n + 1)) * math.sin(theta_p)


def rudd_schedule(
    n: int,
    T: float,
    tau_star: float,
    pi_shape: PulseShape,
    twopi_shape: PulseShape,
    with_boundary: bool = True,
) -> Schedule:
    """RUDD schedule with pulses stretched to tau^(i) and optional boundary 2pi pulses.

    The boundary windows T sin^2(theta_p / 2) are usually shorter than tau*,
    so the 2pi shape is squeezed past its cap; that is recorded on the
    schedule and logged, not raised.
    """
    theta_p = solve_theta_p(n, T, tau_star)
    base = pi_shape if math.isclose(pi_shape.tau, tau_star, rel_tol=1e-12) else rescale(pi_shape, tau_star)
    durations = rudd_durations(n, T, theta_p)

    events = []
    for i, tau_i in enumerate(durations, start=1):
        t_minus = T * math.sin(math.pi * i / (2 * (n + 1)) - 0.5 * theta_p) ** 2
        shape = stretch(base, float(tau_i))
        events.append(PulseEvent(index=i, t_start=t_minus, t_stop=t_minus + float(tau_i), shape=shape))

    violations = []
    if with_boundary:
        window = T * math.sin(0.5 * theta_p) ** 2
        boundary = stretch(twopi_shape, window, enforce_cap=False)
        if boundary.a_max > twopi_shape.a_max:
            log.warning(
                "boundary 2pi pulses need amplitude %.4g over a window of %.4g (cap %.4g)",
                boundary.max_amplitude,
                window,
                twopi_shape.a_max,
            )
            violations = [(0, boundary.max_amplitude, twopi_shape.a_max), (n + 1, boundary.max_amplitude, twopi_shape.a_max)]
        events.insert(0, PulseEvent(index=0, t_start=0.0, t_stop=window, shape=boundary, kind=EventKind.TWO_PI))
        events.append(PulseEvent(index=n + 1, t_start=T - window, t_stop=T, shape=boundary, kind=EventKind.TWO_PI))

    kind = SequenceKind.RUDD if with_boundary else SequenceKind.RUDD_NO_BOUNDARY
    return Schedule(
        kind=kind,
        n=n,
        T=T,
        events=tuple(events),
        tau_star=tau_star,
        theta_p=theta_p,
        cap_violations=tuple(violations),
    )


def build_schedule(
    kind: SequenceKind | str,
    n: int,
    T: float,
    pi_shape: PulseShape,
    twopi_shape: PulseShape | None = None,
) -> Schedule:
    """Dispatch on kind; n is the level for CDD. pi_shape must already last tau*."""
    kind = SequenceKind(kind)
    if kind is SequenceKind.CPMG:
        return cpmg_schedule(n, T, pi_shape)
    if kind is SequenceKind.UDD:
        return udd_schedule(n, T, pi_shape)
    if kind is SequenceKind.CDD:
        return cdd_schedule(n, T, pi_shape)
    if kind is SequenceKind.RUDD and twopi_shape is None:
        raise ContractError("RUDD with boundary pulses needs a 2pi shape")
    return rudd_schedule(n, T, pi_shape.tau, pi_shape, twopi_shape, with_boundary=kind is SequenceKind.RUDD)


# ---------------------------------------------------------------------------
# Cost laws
# ---------------------------------------------------------------------------
def total_pulse_time(s: Schedule) -> float:
    return s.total_pulse_time


def total_energy(s: Schedule, A: float = config.ENERGY_CONSTANT) -> float:
    """E_p = sum over pi pulses of A / tau^(i)."""
    if A <= 0:
        raise ContractError(f"energy constant A must be positive, got {A}")
    return float(sum(A / e.duration for e in s.pi_events))


def rudd_pulse_time_closed(n: int, tau_star: float) -> float:
    return tau_star / math.tan(math.pi / (2 * (n + 1))) / math.sin(math.pi / (n + 1))


def rudd_pulse_time_asymptote(n: int, tau_star: float) -> float:
    return tau_star * 2 * (n + 1) ** 2 / math.pi**2


def rudd_energy_sum(n: int, tau_star: float, A: float = config.ENERGY_CONSTANT) -> float:
    j = np.arange(1, n + 1)
    return float(A * math.sin(math.pi / (n + 1)) / tau_star * np.sum(1.0 / np.sin(np.pi * j / (n + 1))))


def rudd_energy_asymptote(
    n: int, tau_star: float, A: float = config.ENERGY_CONSTANT, with_constant: bool = False
) -> float:
    """(2A / tau*) ln(2(N+1) / pi); with_constant adds the Euler-gamma term the leading log misses."""
    log_term = math.log(2 * (n + 1) / math.pi) + (np.euler_gamma if with_constant else 0.0)
    return 2 * A / tau_star * log_term


def cost_table(n_max: int, tau_star: float, A: float = config.ENERGY_CONSTANT) -> list[dict]:
    """T_p and E_p against N for fixed-width sequences and for RUDD (exact sums and asymptotes)."""
    if n_max < 1 or tau_star <= 0 or A <= 0:
        raise ContractError(f"need n_max >= 1, tau* > 0 and A > 0, got {n_max}, {tau_star}, {A}")
    rows = []
    for n in range(1, n_max + 1):
        # tau^(i) / tau* = sin(pi i / (N+1)) / sin(pi / (N+1)), independent of T
        rudd_tau = tau_star * np.sin(np.pi * np.arange(1, n + 1) / (n + 1)) / math.sin(math.pi / (n + 1))
        rows.append(
            {
                "N": n,
                "udd_T_p": n * tau_star,
                "udd_E_p": A * n / tau_star,
                "rudd_T_p": float(np.sum(rudd_tau)),
                "rudd_T_p_closed": rudd_pulse_time_closed(n, tau_star),
                "rudd_T_p_asymptote": rudd_pulse_time_asymptote(n, tau_star),
                "rudd_E_p": float(np.sum(A / rudd_tau)),
                "rudd_E_p_closed": rudd_energy_sum(n, tau_star, A),
                "rudd_E_p_asymptote": rudd_energy_asymptote(n, tau_star, A),
            }
        )
    return rows
