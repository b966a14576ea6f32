"""
evolve.py - Time-ordered propagation of qubit + bath and the distance Delta_pF.

A schedule is compiled into a flat list of piecewise-constant segments, each
evolving under H + a * sigma_x^(0) (a = 0 between pulses). The propagator
R = U_K ... U_2 U_1 is then compared with the evolution under ideal pulses:

    Delta_pF^2 = 1/3 sum_gamma || tr_B[rho_id - R rho_0 R^dagger] ||_F^2,
    rho_0 = |gamma><gamma| (x) 1_B / 2^M,   rho_id = X^N rho_0 X^N.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from errors import AccuracyError, ContractError
from linalg import (
    SIGMA_0,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    CMatrix,
    ControlledEigCache,
    frobenius_sq,
    kron,
    partial_trace_bath,
    unitarity_error,
)
from sequences import Schedule, SequenceKind, ideal_instants
from spinbath import HamiltonianPair

log = logging.getLogger("evolve")

UNITARITY_TOL = 1e-10
AXES = ("x", "y", "z")
_PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


@dataclass(frozen=True)
class Segment:
    amplitude: float
    duration: float

    def generator(self, model: HamiltonianPair) -> CMatrix:
        return model.h + self.amplitude * model.qubit_x if self.amplitude else model.h


@dataclass(frozen=True)
class SegmentList:
    segments: tuple[Segment, ...]
    T: float
    n_pi: int

    def __post_init__(self):
        if any(s.duration < 0 for s in self.segments):
            raise ContractError("segment durations must be >= 0")
        if abs(self.total_duration - self.T) > 1e-12 * max(self.T, 1.0):
            raise ContractError(f"segments cover {self.total_duration!r}, not T={self.T!r}")

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    @property
    def total_duration(self) -> float:
        return math.fsum(s.duration for s in self.segments)


@dataclass(frozen=True)
class DistanceResult:
    delta_pF: float
    # gamma -> (rho_q^(gamma), tr[rho_q^(gamma) ^ 2])
    per_axis: dict
    unitarity_error: float = 0.0


def compile_schedule(s: Schedule, model: HamiltonianPair) -> SegmentList:
    """Free gaps and pulse segments in time order, covering [0, T].

    Gaps between pulses are always emitted (clamped at 0 for touching pulses);
    leading and trailing gaps only when non-empty.
    """
    if not isinstance(model, HamiltonianPair):
        raise ContractError(f"expected a HamiltonianPair, got {type(model).__name__}")
    if model.dim != 2 * model.bath_dim or model.h.shape != (model.dim, model.dim):
        raise ContractError("model Hamiltonian does not act on qubit (x) bath")

    segments = []
    prev_stop = 0.0
    for k, e in enumerate(s.events):
        gap = e.t_start - prev_stop
        if k > 0:
            segments.append(Segment(0.0, max(gap, 0.0)))
        elif gap > 0:
            segments.append(Segment(0.0, gap))
        segments.extend(Segment(a, d) for a, d in zip(e.shape.amplitudes, e.shape.durations))
        prev_stop = e.t_stop
    tail = s.T - prev_stop
    if tail > 0 or not segments:
        segments.append(Segment(0.0, max(tail, 0.0)))
    return SegmentList(segments=tuple(segments), T=s.T, n_pi=len(s.pi_events))


def propagate(segs: SegmentList, model: HamiltonianPair, cache: ControlledEigCache | None = None) -> CMatrix:
    """R = prod_k exp(-i gen_k dur_k), earliest segment rightmost."""
    if cache is None:
        cache = ControlledEigCache(model.h, model.qubit_x)
    r = np.eye(model.dim, dtype=np.complex128)
    for seg in segs:
        if seg.duration == 0.0:
            continue
        r = cache.expm(seg.amplitude, seg.duration) @ r
    return r


def initial_state(axis: str, bath_dim: int) -> CMatrix:
    """|gamma><gamma| (x) 1_B / 2^M."""
    projector = 0.5 * (SIGMA_0 + _PAULI[axis])
    return kron(projector, np.eye(bath_dim, dtype=np.complex128) / bath_dim)


def distance_from_propagator(r: CMatrix, n_pi: int, bath_dim: int) -> DistanceResult:
    """Delta_pF of a given propagator against N ideal pi pulses; blind to a global phase of r."""
    flip = kron(SIGMA_X, np.eye(bath_dim, dtype=np.complex128)) if n_pi % 2 else None
    r_dag = r.conj().T
    per_axis = {}
    for axis in AXES:
        rho0 = initial_state(axis, bath_dim)
        rho_qb = r @ rho0 @ r_dag
        rho_id = flip @ rho0 @ flip if flip is not None else rho0
        rho_q = partial_trace_bath(rho_id - rho_qb, bath_dim)
        per_axis[axis] = (rho_q, frobenius_sq(rho_q))
    delta_sq = sum(c for _, c in per_axis.values()) / 3.0
    return DistanceResult(
        delta_pF=math.sqrt(max(delta_sq, 0.0)),
        per_axis=per_axis,
        unitarity_error=unitarity_error(r),
    )


def _checked(result: DistanceResult) -> DistanceResult:
    if result.unitarity_error > UNITARITY_TOL:
        raise AccuracyError(f"propagator unitarity error {result.unitarity_error:.3g} > {UNITARITY_TOL}")
    return result


def distance(s: Schedule, model: HamiltonianPair, cache: ControlledEigCache | None = None) -> DistanceResult:
    segs = compile_schedule(s, model)
    r = propagate(segs, model, cache)
    result = _checked(distance_from_propagator(r, segs.n_pi, model.bath_dim))
    log.debug("%s N=%d T=%.6g: Delta_pF=%.6e", s.kind.value, s.n, s.T, result.delta_pF)
    return result


def ideal_propagator(instants, T: float, model: HamiltonianPair, cache: ControlledEigCache | None = None) -> CMatrix:
    """Free evolution interrupted by instantaneous sigma_x^(0) pulses at the given instants."""
    if cache is None:
        cache = ControlledEigCache(model.h, model.qubit_x)
    free = cache.eig(0.0)
    x0 = model.qubit_x
    r = np.eye(model.dim, dtype=np.complex128)
    prev = 0.0
    for t in instants:
        r = x0 @ (free.expm(t - prev) @ r)
        prev = t
    return free.expm(T - prev) @ r


def ideal_schedule_distance(
    kind: SequenceKind | str,
    n: int,
    T: float,
    model: HamiltonianPair,
    cache: ControlledEigCache | None = None,
) -> DistanceResult:
    """Delta_pF with ideal instantaneous pulses; n is the level for CDD, 0 means free evolution."""
    kind = SequenceKind(kind)
    if kind.is_rudd:
        raise ContractError("RUDD has no ideal-pulse form of its own; its ideal limit is udd")
    if T <= 0:
        raise ContractError(f"T must be positive, got {T}")
    instants = ideal_instants(kind, n, T) if n > 0 else np.array([])
    r = ideal_propagator(instants, T, model, cache)
    return _checked(distance_from_propagator(r, len(instants), model.bath_dim))
