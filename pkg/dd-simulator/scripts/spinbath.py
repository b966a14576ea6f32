"""
spinbath.py - Pure-dephasing qubit + spin-bath Hamiltonians.

    H = omega_b B0 + sigma_z^(0) * sum_i lambda_i sigma_z^(i),   omega_b = alpha * lambda

Two bath topologies:
  - Chain:        B0 = sum_i  s_i . s_(i+1)   (periodic by default), qubit on one site
  - CentralSpin:  B0 = sum_{j<i} (3 sz_i sz_j - s_i . s_j), qubit coupled to every spin

Spin 0 is the qubit and is always the first tensor factor. Pauli matrices have
eigenvalues +-1; lambda carries the energy scale (lambda = 1 internally).
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

import config
from errors import ModelError
from linalg import SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z, CMatrix, kron_all


class Topology(str, Enum):
    CHAIN = "chain"
    CENTRAL_SPIN = "central_spin"


@dataclass(frozen=True)
class BathSpec:
    topology: Topology
    m: int
    lam: float = 1.0
    alpha: float = 10.0
    # Chain only: periodic closure s_(M+1) := s_1, and the bath site the qubit couples to
    periodic: bool = True
    qubit_site: int = 1

    @property
    def omega_b(self) -> float:
        return self.alpha * self.lam

    @property
    def couplings(self) -> tuple[float, ...]:
        """lambda_i for i = 1..N_s."""
        if self.topology is Topology.CHAIN:
            return (self.lam,)
        if self.m < 2:
            raise ModelError("central spin model needs M >= 2 (lambda_i divides by M-1)")
        return tuple(self.lam * (2 * i - self.m - 1) / (self.m - 1) for i in range(1, self.m + 1))


@dataclass(frozen=True)
class HamiltonianPair:
    spec: BathSpec
    b0_full: CMatrix
    bz_full: CMatrix
    h: CMatrix = field(repr=False)

    @property
    def dim(self) -> int:
        return self.h.shape[0]

    @property
    def bath_dim(self) -> int:
        return self.dim // 2

    @property
    def qubit_x(self) -> CMatrix:
        """sigma_x^(0) (x) 1_B - the control operator."""
        return site_op(SIGMA_X, 0, self.spec.m + 1)


def site_op(op: CMatrix, site: int, n_spins: int) -> CMatrix:
    """Embed a single-spin operator on `site` of an n-spin register (site 0 = qubit)."""
    factors = [SIGMA_0] * n_spins
    factors[site] = op
    return kron_all(*factors)


def heisenberg_bond(i: int, j: int, n_spins: int) -> CMatrix:
    """s_i . s_j."""
    return sum(site_op(p, i, n_spins) @ site_op(p, j, n_spins) for p in (SIGMA_X, SIGMA_Y, SIGMA_Z))


def dipolar_bond(i: int, j: int, n_spins: int) -> CMatrix:
    """3 sz_i sz_j - s_i . s_j."""
    zz = site_op(SIGMA_Z, i, n_spins) @ site_op(SIGMA_Z, j, n_spins)
    return 3 * zz - heisenberg_bond(i, j, n_spins)


def global_flip(n_spins: int) -> CMatrix:
    """X_all: sigma_x on every spin, qubit included."""
    return kron_all(*([SIGMA_X] * n_spins))


def _assemble(spec: BathSpec, b0_bath: CMatrix, coupled_sites: list[int]) -> HamiltonianPair:
    n_spins = spec.m + 1
    bz_bath = sum(lam * site_op(SIGMA_Z, site, n_spins) for lam, site in zip(spec.couplings, coupled_sites))
    bz_full = site_op(SIGMA_Z, 0, n_spins) @ bz_bath
    b0_full = spec.omega_b * b0_bath
    return HamiltonianPair(spec=spec, b0_full=b0_full, bz_full=bz_full, h=b0_full + bz_full)


def build_chain(spec: BathSpec) -> HamiltonianPair:
    if spec.topology is not Topology.CHAIN:
        raise ModelError(f"build_chain called with topology {spec.topology.value}")
    if spec.m < 2:
        raise ModelError("spin chain needs at least 2 bath spins")
    if not 1 <= spec.qubit_site <= spec.m:
        raise ModelError(f"qubit_site {spec.qubit_site} outside 1..{spec.m}")

    n_spins = spec.m + 1
    # Bath spins live on sites 1..M; with periodic closure bond M connects M and 1
    bonds = [(i, i + 1) for i in range(1, spec.m)]
    if spec.periodic:
        bonds.append((spec.m, 1))
    b0 = sum(heisenberg_bond(i, j, n_spins) for i, j in bonds)
    return _assemble(spec, b0, [spec.qubit_site])


def build_central_spin(spec: BathSpec) -> HamiltonianPair:
    if spec.topology is not Topology.CENTRAL_SPIN:
        raise ModelError(f"build_central_spin called with topology {spec.topology.value}")
    if spec.m < 2:
        raise ModelError("central spin model needs at least 2 bath spins")

    n_spins = spec.m + 1
    b0 = sum(dipolar_bond(i, j, n_spins) for i in range(2, spec.m + 1) for j in range(1, i))
    return _assemble(spec, b0, list(range(1, spec.m + 1)))


def build_model(spec: BathSpec) -> HamiltonianPair:
    if spec.topology is Topology.CHAIN:
        return build_chain(spec)
    return build_central_spin(spec)


def verification_bath() -> HamiltonianPair:
    """The small chain used to certify pulse orders (M=3, alpha=10)."""
    return build_chain(BathSpec(Topology.CHAIN, m=config.VERIFY_BATH_M, alpha=config.VERIFY_BATH_ALPHA))


def zero_coupling(pair: HamiltonianPair) -> HamiltonianPair:
    """Same bath with every lambda_i switched off."""
    zeros = np.zeros_like(pair.bz_full)
    return HamiltonianPair(spec=pair.spec, b0_full=pair.b0_full, bz_full=zeros, h=pair.b0_full.copy())
