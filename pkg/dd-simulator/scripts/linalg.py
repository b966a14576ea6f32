"""
linalg.py - Dense complex-matrix kernel.

Kronecker products, Hermitian eigendecompositions, unitary exponentials,
the partial trace over the bath and the Frobenius norm. Every operator in
the simulator is a complex128 numpy array; all functions here are pure.
"""
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy import linalg as sla

import config
from errors import ContractError, DimensionError

CMatrix = npt.NDArray[np.complex128]

SIGMA_0 = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def as_cmatrix(a) -> CMatrix:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2D matrix, got shape {m.shape}")
    return m


def is_hermitian(a: CMatrix, tol: float = config.HERMITIAN_TOL) -> bool:
    return a.shape[0] == a.shape[1] and float(np.max(np.abs(a - a.conj().T))) < tol


def kron(a: CMatrix, b: CMatrix, dim_cap: int | None = None) -> CMatrix:
    """Kronecker product, refusing results larger than the dimension cap."""
    a, b = as_cmatrix(a), as_cmatrix(b)
    cap = config.DIM_CAP if dim_cap is None else dim_cap
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > cap:
        raise DimensionError(f"kron result {rows}x{cols} exceeds dimension cap {cap}")
    return np.kron(a, b)


def kron_all(*factors: CMatrix, dim_cap: int | None = None) -> CMatrix:
    out = as_cmatrix(factors[0])
    for f in factors[1:]:
        out = kron(out, f, dim_cap=dim_cap)
    return out


@dataclass(frozen=True)
class HermitianEig:
    """Eigendecomposition h = V diag(w) V^dagger, reusable for many times t."""

    w: npt.NDArray[np.float64]
    v: CMatrix

    def expm(self, t: float) -> CMatrix:
        """exp(-i t h)."""
        phases = np.exp(-1j * t * self.w)
        return (self.v * phases) @ self.v.conj().T


def eig_hermitian(h: CMatrix) -> HermitianEig:
    h = as_cmatrix(h)
    if not is_hermitian(h):
        raise ContractError("generator is not Hermitian")
    w, v = sla.eigh(h)
    return HermitianEig(w=w, v=v)


def expm_hermitian(h: CMatrix, t: float) -> CMatrix:
    """exp(-i t h) for Hermitian h via eigendecomposition; the result is unitary."""
    return eig_hermitian(h).expm(t)


def partial_trace_bath(rho: CMatrix, bath_dim: int) -> CMatrix:
    """Trace out the bath; the qubit is the first tensor factor."""
    rho = as_cmatrix(rho)
    if rho.shape != (2 * bath_dim, 2 * bath_dim):
        raise DimensionError(f"rho has shape {rho.shape}, expected {(2 * bath_dim,) * 2}")
    return np.einsum("ajbj->ab", rho.reshape(2, bath_dim, 2, bath_dim))


def frobenius_sq(a: CMatrix) -> float:
    """tr(a^dagger a) = sum |a_ij|^2."""
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"frobenius_sq needs a square matrix, got {a.shape}")
    return float(np.vdot(a, a).real)


def unitarity_error(u: CMatrix) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


class ControlledEigCache:
    """Eigendecompositions of h + a * x, keyed by the control amplitude a.

    Sweeps reuse a handful of generators (the free Hamiltonian and one per
    distinct pulse-segment amplitude), so each is diagonalized only once.
    The free Hamiltonian (a = 0) is pinned; pulse amplitudes are evicted
    least-recently-used beyond ``max_entries``. A cache belongs to one worker; it is
    not shared across threads.
    """

    def __init__(self, h: CMatrix, x: CMatrix, max_entries: int | None = None):
        self.h = as_cmatrix(h)
        self.x = as_cmatrix(x)
        self.max_entries = config.EIG_CACHE_SIZE if max_entries is None else max_entries
        if self.max_entries < 1:
            raise ContractError(f"cache needs room for at least one pulse amplitude, got {self.max_entries}")
        self._free: HermitianEig | None = None
        self._eigs: OrderedDict[float, HermitianEig] = OrderedDict()

    def __len__(self):
        return len(self._eigs) + (self._free is not None)

    def __contains__(self, amplitude) -> bool:
        key = float(amplitude)
        return self._free is not None if key == 0.0 else key in self._eigs

    def eig(self, amplitude: float) -> HermitianEig:
        key = float(amplitude)
        if key == 0.0:
            if self._free is None:
                self._free = eig_hermitian(self.h)
            return self._free
        if key in self._eigs:
            self._eigs.move_to_end(key)
            return self._eigs[key]
        decomposition = eig_hermitian(self.h + key * self.x)
        self._eigs[key] = decomposition
        while len(self._eigs) > self.max_entries:
            self._eigs.popitem(last=False)
        return decomposition

    def expm(self, amplitude: float, t: float) -> CMatrix:
        """exp(-i t (h + amplitude * x))."""
        return self.eig(amplitude).expm(t)
