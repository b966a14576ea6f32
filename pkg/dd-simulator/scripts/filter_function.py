"""
filter_function.py - Filter functions F(z) and the decay integral chi(T).

For classical Gaussian dephasing noise of spectral density S(omega) the
coherence decays as s(T) = exp(-2 chi(T)) with

    chi(T) = int_0^inf S(omega) / omega^2 * F(omega T) d omega,
    F(z)   = |1 + (-1)^(N+1) e^{-iz} + 2 sum_j (-1)^j e^{-i z delta_j} cos(z w_j / 2)|^2,

pulses centered at delta_j T with widths w_j T. The closed form is exact when
the coupling is switched off during each pulse (the "gated" switching
function); filter_oracle() integrates that switching function directly.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import integrate

import config
from errors import AccuracyError, ConfigError, ContractError, IntegrabilityError
from sequences import Schedule, SequenceKind, ideal_instants

log = logging.getLogger("filter")


@dataclass(frozen=True)
class FilterSpec:
    deltas: tuple[float, ...]
    widths: tuple[float, ...] = ()

    def __post_init__(self):
        widths = self.widths or (0.0,) * len(self.deltas)
        object.__setattr__(self, "widths", tuple(float(w) for w in widths))
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if len(self.widths) != len(self.deltas):
            raise ContractError(f"{len(self.deltas)} pulse centers but {len(self.widths)} widths")
        if any(not 0.0 < d < 1.0 for d in self.deltas):
            raise ContractError("pulse centers must lie in (0, 1)")
        if any(b <= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ContractError("pulse centers must be strictly increasing")
        if any(w < 0 for w in self.widths):
            raise ContractError("pulse widths must be >= 0")
        edges = self.windows
        if edges and (edges[0][0] < -1e-12 or edges[-1][1] > 1 + 1e-12):
            raise ContractError("pulse windows must lie inside [0, 1]")

    @property
    def n(self) -> int:
        return len(self.deltas)

    @property
    def windows(self) -> list[tuple[float, float]]:
        return [(d - 0.5 * w, d + 0.5 * w) for d, w in zip(self.deltas, self.widths)]


def ideal_filter_spec(kind: SequenceKind | str, n: int) -> FilterSpec:
    """Zero-width spec; n is the level for CDD."""
    return FilterSpec(tuple(ideal_instants(kind, n, 1.0)) if n > 0 else ())


def filter_spec_from_schedule(s: Schedule) -> FilterSpec:
    return FilterSpec(
        deltas=tuple(e.center / s.T for e in s.pi_events),
        widths=tuple(e.duration / s.T for e in s.pi_events),
    )


# ---------------------------------------------------------------------------
# Filter function
# ---------------------------------------------------------------------------
def filter_closed_form(spec: FilterSpec, z, unsigned: bool = False):
    """F(z) for scalar or array z.

    unsigned=True evaluates the variant with e^{+i z delta_j} and no
    alternating sign, which does not refocus static noise for even N.
    """
    z = np.asarray(z, dtype=float)
    n = spec.n
    total = 1.0 + (-1.0) ** (n + 1) * np.exp(-1j * z)
    for j, (delta, width) in enumerate(zip(spec.deltas, spec.widths), start=1):
        envelope = 2.0 * np.cos(0.5 * z * width)
        if unsigned:
            total = total + envelope * np.exp(1j * z * delta)
        else:
            total = total + (-1.0) ** j * envelope * np.exp(-1j * z * delta)
    f = np.abs(total) ** 2
    return float(f) if f.ndim == 0 else f


def _switching_pieces(spec: FilterSpec, traversal: str):
    """(start, stop, value_at_start, value_at_stop) pieces of the switching function on [0, 1]."""
    pieces = []
    sign = 1.0
    prev = 0.0
    for a, b in spec.windows:
        if a > prev:
            pieces.append((prev, a, sign, sign))
        if b > a and traversal == "ramp":
            pieces.append((a, b, sign, -sign))
        sign = -sign
        prev = b
    if prev < 1.0:
        pieces.append((prev, 1.0, sign, sign))
    return pieces


def filter_oracle(spec: FilterSpec, z: float, traversal: str = "gated") -> float:
    """F(z) = |z int_0^1 f(u) e^{-izu} du|^2 by adaptive quadrature of the switching function f.

    traversal="gated" sets f = 0 inside each pulse window; "ramp" sweeps f
    linearly from one sign to the other.
    """
    if traversal not in ("gated", "ramp"):
        raise ContractError(f"unknown traversal model '{traversal}'")
    if z == 0.0:
        return 0.0
    re = im = 0.0
    err = 0.0
    for a, b, fa, fb in _switching_pieces(spec, traversal):
        slope = (fb - fa) / (b - a)

        def f(u, a=a, fa=fa, slope=slope):
            return fa + slope * (u - a)

        c, ec = integrate.quad(f, a, b, weight="cos", wvar=z, epsabs=1e-15, epsrel=1e-13, limit=200)
        s, es = integrate.quad(f, a, b, weight="sin", wvar=z, epsabs=1e-15, epsrel=1e-13, limit=200)
        re += c
        im -= s
        err += ec + es
    value = z * z * (re * re + im * im)
    bound = 2.0 * z * z * math.hypot(re, im) * err
    if bound > config.ORACLE_ABS_TOL:
        raise AccuracyError(f"switching-function quadrature error {bound:.3g} at z={z}")
    return value


def switching_moments(spec: FilterSpec, count: int) -> np.ndarray:
    """int_0^1 f(u) u^k du for k < count, with f gated inside pulse windows."""
    k = np.arange(count)
    moments = np.zeros(count)
    for a, b, sign, _ in _switching_pieces(spec, "gated"):
        moments += sign * (b ** (k + 1) - a ** (k + 1)) / (k + 1)
    return moments


def small_z_exponent(spec: FilterSpec, tol: float = 1e-10, max_order: int = 24) -> int:
    """p with F(z) ~ z^p as z -> 0: 2(k+1) for the first non-vanishing moment k."""
    moments = switching_moments(spec, max_order)
    for k, m in enumerate(moments):
        if abs(m) > tol:
            return 2 * (k + 1)
    return 2 * (max_order + 1)


# ---------------------------------------------------------------------------
# Spectral densities and chi(T)
# ---------------------------------------------------------------------------
class SpectrumKind(str, Enum):
    OHMIC = "ohmic"
    ONE_OVER_F = "one_over_f"
    LORENTZIAN = "lorentzian"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class SpectralDensity:
    """S(omega) on omega > 0.

    ohmic       amplitude * omega / cutoff, hard cutoff or exp(-omega / cutoff)
    one_over_f  amplitude / omega on [infrared, cutoff]
    lorentzian  amplitude * cutoff / (omega^2 + cutoff^2)
    tabulated   two-column (omega, S) file, linear in between, zero outside
    """

    kind: SpectrumKind
    amplitude: float = 1.0
    cutoff: float = 1.0
    soft_cutoff: bool = False
    infrared: float = 0.0
    table: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.amplitude < 0:
            raise ContractError("spectral density amplitude must be >= 0")
        if self.kind is not SpectrumKind.TABULATED and self.cutoff <= 0:
            raise ContractError("cutoff must be positive")
        if self.kind is SpectrumKind.TABULATED and len(self.table) < 2:
            raise ContractError("tabulated spectrum needs at least two rows")

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        if self.kind is SpectrumKind.OHMIC:
            shape = w / self.cutoff
            s = shape * (np.exp(-shape) if self.soft_cutoff else (w <= self.cutoff))
        elif self.kind is SpectrumKind.ONE_OVER_F:
            with np.errstate(divide="ignore"):
                s = np.where((w >= self.infrared) & (w <= self.cutoff) & (w > 0), 1.0 / w, 0.0)
        elif self.kind is SpectrumKind.LORENTZIAN:
            s = self.cutoff / (w**2 + self.cutoff**2)
        else:
            grid = np.array(self.table)
            s = np.interp(w, grid[:, 0], grid[:, 1], left=0.0, right=0.0)
        out = self.amplitude * s
        return float(out) if out.ndim == 0 else out

    @property
    def is_zero(self) -> bool:
        if self.kind is SpectrumKind.TABULATED:
            return self.amplitude == 0 or all(v == 0 for _, v in self.table)
        return self.amplitude == 0

    @property
    def small_omega_exponent(self) -> float:
        """s with S(omega) ~ omega^s near 0 (inf when S vanishes on a neighbourhood of 0)."""
        if self.kind is SpectrumKind.OHMIC:
            return 1.0
        if self.kind is SpectrumKind.ONE_OVER_F:
            return math.inf if self.infrared > 0 else -1.0
        if self.kind is SpectrumKind.LORENTZIAN:
            return 0.0
        return math.inf if self.table[0][0] > 0 or self.table[0][1] == 0 else 0.0

    @property
    def support_end(self) -> float:
        """Upper frequency where S drops to zero (inf for unbounded tails)."""
        if self.kind is SpectrumKind.OHMIC and not self.soft_cutoff:
            return self.cutoff
        if self.kind is SpectrumKind.ONE_OVER_F:
            return self.cutoff
        if self.kind is SpectrumKind.TABULATED:
            return self.table[-1][0]
        return math.inf

    @property
    def support_start(self) -> float:
        if self.kind is SpectrumKind.ONE_OVER_F:
            return self.infrared
        if self.kind is SpectrumKind.TABULATED:
            return max(self.table[0][0], 0.0)
        return 0.0


def load_tabulated(path: Path, amplitude: float = 1.0) -> SpectralDensity:
    try:
        data = np.loadtxt(path, ndmin=2)
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read spectrum table {path}: {e}") from e
    if data.shape[1] != 2:
        raise ConfigError(f"spectrum table {path} must have two columns, found {data.shape[1]}")
    order = np.argsort(data[:, 0])
    rows = tuple((float(w), float(s)) for w, s in data[order])
    if any(s < 0 for _, s in rows):
        raise ConfigError(f"spectrum table {path} has negative entries")
    return SpectralDensity(SpectrumKind.TABULATED, amplitude=amplitude, table=rows)


@dataclass(frozen=True)
class ChiResult:
    chi: float
    coherence: float  # s(T) = exp(-2 chi)


def chi(spec: FilterSpec, density: SpectralDensity, T: float, unsigned: bool = False) -> ChiResult:
    """chi(T) by panel-wise adaptive quadrature at the oscillation scale 2 pi / T."""
    if T <= 0:
        raise ContractError(f"T must be positive, got {T}")
    if density.is_zero:
        return ChiResult(chi=0.0, coherence=1.0)

    p = small_z_exponent(spec) if not unsigned else 0
    order = density.small_omega_exponent + p - 2
    if density.support_start == 0.0 and not order > -1:
        raise IntegrabilityError(
            f"integrand ~ omega^{order:g} at small omega (S ~ omega^{density.small_omega_exponent:g}, "
            f"F ~ z^{p}); needs exponent > -1",
            deficit=-1 - order,
        )

    def integrand(w):
        if w == 0.0:
            return 0.0
        return density(w) / (w * w) * filter_closed_form(spec, w * T, unsigned=unsigned)

    start = density.support_start
    end = density.support_end
    panel = 2 * math.pi / T
    finite_end = end if math.isfinite(end) else start + max(50 * density.cutoff, 50 * panel)
    n_panels = max(1, min(4000, math.ceil((finite_end - start) / panel)))
    edges = np.linspace(start, finite_end, n_panels + 1)

    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        value, _ = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=config.QUAD_REL_TOL, limit=200)
        total += value
    if not math.isfinite(end):
        tail, _ = integrate.quad(integrand, finite_end, np.inf, epsabs=0.0, epsrel=config.QUAD_REL_TOL, limit=500)
        total += tail
    log.debug("chi(T=%.6g) = %.6e over %d panels", T, total, n_panels)
    return ChiResult(chi=total, coherence=math.exp(-2.0 * total))
