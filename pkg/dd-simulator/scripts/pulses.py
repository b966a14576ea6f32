"""
pulses.py - Piecewise-constant control pulses.

A pulse drives the qubit with H_c(t) = sigma_x^(0) v(t). A constant amplitude v
held for a time t rotates the qubit by 2 v t, so a shape with segments
(amplitude a_k, fraction f_k) and duration tau realizes the angle
2 * sum_k a_k f_k tau. Angles are compared mod 4*pi (the spinor period);
shapes store the unwrapped target.

The order j of a pulse is defined by its propagator:

    U_p(tau) = exp(-i tau omega_b B0) Pi_phi + O(tau^(j+1))

and is certified numerically by order_verify() on a small test bath.
"""
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import optimize

import config
from errors import AccuracyError, AmplitudeError, ConfigError, DesignFailure, PulseArgumentError
from linalg import SIGMA_X, CMatrix, HermitianEig, eig_hermitian, expm_hermitian, kron
from spinbath import HamiltonianPair

log = logging.getLogger("pulses")

FOUR_PI = 4 * math.pi


def angle_mismatch(realized: float, target: float) -> float:
    """Distance between two rotation angles on the 4*pi circle."""
    d = math.fmod(realized - target, FOUR_PI)
    if d < 0:
        d += FOUR_PI
    return min(d, FOUR_PI - d)


@dataclass(frozen=True)
class PulseShape:
    name: str
    segments: tuple[tuple[float, float], ...]
    tau: float
    target_angle: float
    order: int
    a_max: float
    provenance: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not self.segments:
            raise PulseArgumentError(f"{self.name}: a pulse needs at least one segment")
        if self.tau <= 0:
            raise PulseArgumentError(f"{self.name}: duration must be positive, got {self.tau}")
        fractions = [f for _, f in self.segments]
        if min(fractions) <= 0:
            raise PulseArgumentError(f"{self.name}: segment fractions must be positive")
        if abs(sum(fractions) - 1.0) > config.FRACTION_SUM_TOL:
            raise PulseArgumentError(f"{self.name}: fractions sum to {sum(fractions)!r}, not 1")
        if angle_mismatch(self.realized_angle, self.target_angle) > config.ANGLE_TOL:
            raise PulseArgumentError(
                f"{self.name}: realized angle {self.realized_angle} does not match {self.target_angle} mod 4pi"
            )
        if self.max_amplitude > self.a_max * (1 + 1e-12):
            raise AmplitudeError(f"{self.name}: amplitude {self.max_amplitude} exceeds a_max {self.a_max}")

    @property
    def amplitudes(self) -> tuple[float, ...]:
        return tuple(a for a, _ in self.segments)

    @property
    def fractions(self) -> tuple[float, ...]:
        return tuple(f for _, f in self.segments)

    @property
    def durations(self) -> tuple[float, ...]:
        return tuple(f * self.tau for _, f in self.segments)

    @property
    def max_amplitude(self) -> float:
        return max(abs(a) for a, _ in self.segments)

    @property
    def realized_angle(self) -> float:
        return 2.0 * sum(a * f for a, f in self.segments) * self.tau


@dataclass(frozen=True)
class OrderReport:
    fitted_exponent: float
    residuals: tuple[tuple[float, float], ...]
    verdict: int
    intercept: float = 0.0


# ---------------------------------------------------------------------------
# Shape constructors
# ---------------------------------------------------------------------------
def _from_angles(name, angles, durations, tau, target, order, a_max, provenance=None) -> PulseShape:
    """Build a shape from per-segment rotation angles and (unnormalized) durations."""
    total = float(sum(durations))
    fractions = [d / total for d in durations]
    segments = tuple((theta / (2.0 * f * tau), f) for theta, f in zip(angles, fractions))
    peak = max(abs(a) for a, _ in segments)
    if a_max is None:
        a_max = peak
    elif peak > a_max * (1 + 1e-12):
        raise AmplitudeError(f"{name}: needs amplitude {peak:.6g} at tau={tau:.6g}, cap is {a_max:.6g}")
    return PulseShape(
        name=name,
        segments=segments,
        tau=tau,
        target_angle=target,
        order=order,
        a_max=a_max,
        provenance=provenance or {"method": "analytic"},
    )


def rect_pulse(angle: float, tau: float, a_max: float | None = None, name: str | None = None) -> PulseShape:
    """Single rectangular segment of amplitude angle / (2 tau); order 0."""
    if tau <= 0:
        raise PulseArgumentError(f"tau must be positive, got {tau}")
    label = name or ("rect_pi" if math.isclose(angle, math.pi) else f"rect_{angle / math.pi:g}pi")
    return _from_angles(label, [angle], [1.0], tau, angle, 0, a_max)


def rect_pi(tau: float, a_max: float | None = None) -> PulseShape:
    return rect_pulse(math.pi, tau, a_max, name="rect_pi")


def scorpse_pi(tau: float, a_max: float | None = None) -> PulseShape:
    """SCORPSE pi pulse: constant |v| = 7 pi / (6 tau), angles (-pi/3, 5pi/3, -pi/3); order 1."""
    if tau <= 0:
        raise PulseArgumentError(f"tau must be positive, got {tau}")
    angles = [-math.pi / 3, 5 * math.pi / 3, -math.pi / 3]
    return _from_angles("scorpse_pi", angles, [abs(a) for a in angles], tau, math.pi, 1, a_max)


@dataclass(frozen=True)
class TogglingMoments:
    """Error terms of a pulse in the frame rotating with the control.

    sigma_z turns into cos(phi) sigma_z + sin(phi) sigma_y while the pulse runs.
    Read as a unit-speed plane curve with heading phi(t):
      closure  - end point of the curve          (first order, coupling alone)
      moment   - time integral of the position   (second order, bath x coupling)
      area     - signed area swept by the curve  (second order, coupling squared)
    All three vanish for a second-order pulse.
    """

    closure: tuple[float, float]
    moment: tuple[float, float]
    area: float

    @property
    def first_order_error(self) -> float:
        return math.hypot(*self.closure)

    @property
    def second_order_error(self) -> float:
        return max(math.hypot(*self.moment), abs(self.area))


def _curve_moments(angles, curvatures) -> TogglingMoments:
    """Closed-form moments of a chain of circular arcs (curvature 0 = straight)."""
    px = py = heading = 0.0
    mx = my = area = 0.0
    for theta, k in zip(angles, curvatures):
        if k == 0.0:
            length = theta
            cx, cy = math.cos(heading), math.sin(heading)
            mx += px * length + 0.5 * length**2 * cx
            my += py * length + 0.5 * length**2 * cy
            area += length * (px * cy - py * cx)
            px, py = px + length * cx, py + length * cy
            continue
        length = theta / k
        end = heading + theta
        s0, c0, s1, c1 = math.sin(heading), math.cos(heading), math.sin(end), math.cos(end)
        mx += px * length + ((c0 - c1) / k - length * s0) / k
        my += py * length + (-(s1 - s0) / k + length * c0) / k
        area += px * (c0 - c1) / k - py * (s1 - s0) / k + (length - math.sin(theta) / k) / k
        px, py, heading = px + (s1 - s0) / k, py + (c0 - c1) / k, end
    return TogglingMoments(closure=(px, py), moment=(mx, my), area=area)


def toggling_moments(shape: PulseShape) -> TogglingMoments:
    """First- and second-order error terms of a pulse under pure-dephasing coupling."""
    angles = [2.0 * a * d for a, d in zip(shape.amplitudes, shape.durations)]
    curvatures = [2.0 * a for a in shape.amplitudes]
    return _curve_moments(angles, curvatures)


# Half-profile (theta_1, theta_2, middle curvature) of the five-segment second-order pi pulse
_PI_2ND_SEED = (-0.49944496136, 5.529017203652, -0.70276636924)


def _second_order_pi_half() -> tuple[float, float, float, float]:
    """Solve the three second-order conditions on half of a symmetric pi pulse.

    The half curve starts at the origin heading along x and ends on the x-axis
    heading along y; its mean x position and its area against the x-axis vanish.
    Outer segments run at unit curvature.
    """

    def conditions(x):
        theta1, theta2, k3 = x
        theta3 = math.pi / 2 - theta1 - theta2
        m = _curve_moments([theta1, theta2, theta3], [math.copysign(1.0, theta1), math.copysign(1.0, theta2), k3])
        return [m.closure[1], m.moment[0], m.area]

    sol = optimize.root(conditions, _PI_2ND_SEED, method="hybr", options={"xtol": 1e-13})
    # hybr may report slow progress once the residual is already at roundoff
    if max(abs(v) for v in conditions(sol.x)) > 1e-12:
        raise AccuracyError(f"second-order pi conditions did not converge: {sol.message}")
    theta1, theta2, k3 = (float(v) for v in sol.x)
    return theta1, theta2, math.pi / 2 - theta1 - theta2, k3


def second_order_pi(tau: float, a_max: float | None = None) -> PulseShape:
    """Symmetric five-segment pi pulse of order 2 for pure-dephasing baths.

    Segment angles (t1, t2, 2 t3, t2, t1) sum to pi; the outer four share one
    amplitude magnitude and the middle one runs at |k3| of it, with the signs
    of the angles.
    """
    if tau <= 0:
        raise PulseArgumentError(f"tau must be positive, got {tau}")
    theta1, theta2, theta3, k3 = _second_order_pi_half()
    angles = [theta1, theta2, 2 * theta3, theta2, theta1]
    durations = [abs(theta1), abs(theta2), 2 * theta3 / k3, abs(theta2), abs(theta1)]
    return _from_angles("pi_2nd", angles, durations, tau, math.pi, 2, a_max)


def second_order_2pi(tau: float, a_max: float | None = None) -> PulseShape:
    """Symmetric three-segment 2pi pulse of order 2: angles (-2pi, 2pi, -2pi), net -2pi (= 2pi mod 4pi).

    The middle segment turns the other way at 1/sqrt(2) of the outer amplitude:
    two unit circles and one circle of radius sqrt(2), whose centers and areas
    balance exactly.
    """
    if tau <= 0:
        raise PulseArgumentError(f"tau must be positive, got {tau}")
    two_pi = 2 * math.pi
    angles = [-two_pi, two_pi, -two_pi]
    return _from_angles("twopi_2nd", angles, [two_pi, two_pi * math.sqrt(2.0), two_pi], tau, two_pi, 2, a_max)


# Default pi / 2pi shapes per pulse order j
ORDER_SHAPES = {
    0: ("rect_pi", "rect_2pi"),
    1: ("scorpse_pi", "twopi_2nd"),
    2: ("pi_2nd", "twopi_2nd"),
}


# ---------------------------------------------------------------------------
# Changing durations
# ---------------------------------------------------------------------------
def rescale(shape: PulseShape, new_tau: float) -> PulseShape:
    """Same shape played over new_tau; amplitudes and the cap scale by tau / new_tau."""
    if new_tau <= 0:
        raise PulseArgumentError(f"new_tau must be positive, got {new_tau}")
    k = shape.tau / new_tau
    return replace(
        shape,
        segments=tuple((a * k, f) for a, f in shape.segments),
        tau=new_tau,
        a_max=shape.a_max * k,
    )


def stretch(shape: PulseShape, new_tau: float, enforce_cap: bool = True) -> PulseShape:
    """Lengthen a pulse keeping every segment angle; a_max is kept.

    Shortening would raise the amplitude above a_max: AmplitudeError, unless
    enforce_cap is off, in which case the cap is raised to the new peak.
    """
    if new_tau <= 0:
        raise PulseArgumentError(f"new_tau must be positive, got {new_tau}")
    k = shape.tau / new_tau
    segments = tuple((a * k, f) for a, f in shape.segments)
    peak = shape.max_amplitude * k
    a_max = shape.a_max
    if peak > a_max * (1 + 1e-12):
        if enforce_cap:
            raise AmplitudeError(
                f"{shape.name}: stretching to {new_tau:.6g} < tau_nom {shape.tau:.6g} exceeds a_max"
            )
        a_max = peak
    return replace(shape, segments=segments, tau=new_tau, a_max=a_max)


# ---------------------------------------------------------------------------
# Propagators
# ---------------------------------------------------------------------------
def ideal_pulse(angle: float, bath_dim: int) -> CMatrix:
    """Pi_phi (x) 1_B with Pi_phi = exp(-i phi sigma_x / 2)."""
    pi_phi = math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * SIGMA_X
    return kron(pi_phi, np.eye(bath_dim, dtype=np.complex128))


def pulse_propagator(shape: PulseShape, model: HamiltonianPair, cache=None) -> CMatrix:
    """Time-ordered U_p = prod_k exp(-i (H + a_k sigma_x^(0)) f_k tau), latest segment on the left."""
    x0 = model.qubit_x
    u = np.eye(model.dim, dtype=np.complex128)
    for amplitude, duration in zip(shape.amplitudes, shape.durations):
        step = cache.expm(amplitude, duration) if cache is not None else expm_hermitian(model.h + amplitude * x0, duration)
        u = step @ u
    return u


def pulse_residual(shape: PulseShape, model: HamiltonianPair, b0_eig: HermitianEig | None = None) -> float:
    """|| U_p(tau) - exp(-i tau omega_b B0) Pi_phi ||_F at the shape's own duration."""
    b0_eig = b0_eig or eig_hermitian(model.b0_full)
    target = b0_eig.expm(shape.tau) @ ideal_pulse(shape.target_angle, model.bath_dim)
    return float(np.linalg.norm(pulse_propagator(shape, model) - target))


def certified_order(exponent: float, tolerance: float = config.ORDER_TOLERANCE) -> int:
    return max(0, math.floor(exponent + tolerance) - 1)


def order_verify(shape: PulseShape, test_bath: HamiltonianPair, ladder_size: int = config.VERIFY_LADDER_SIZE) -> OrderReport:
    """Fit log r(tau_k) against log tau_k on tau_k = tau_nom 2^-k."""
    if ladder_size < 4:
        raise PulseArgumentError(f"ladder_size must be >= 4, got {ladder_size}")

    b0_eig = eig_hermitian(test_bath.b0_full)
    ladder = []
    for k in range(ladder_size):
        tau_k = shape.tau * 2.0**-k
        ladder.append((tau_k, pulse_residual(rescale(shape, tau_k), test_bath, b0_eig)))

    kept = [(t, r) for t, r in ladder if r >= config.RESIDUAL_FLOOR]
    if len(kept) < len(ladder):
        log.warning(
            "%s: %d ladder point(s) at the roundoff floor dropped", shape.name, len(ladder) - len(kept)
        )
    if len(kept) < 3:
        raise AccuracyError(f"{shape.name}: fewer than 3 residuals above the roundoff floor")

    log_tau = np.log([t for t, _ in kept])
    log_r = np.log([r for _, r in kept])
    slope, intercept = np.polyfit(log_tau, log_r, 1)
    report = OrderReport(
        fitted_exponent=float(slope),
        residuals=tuple(kept),
        verdict=certified_order(float(slope)),
        intercept=float(intercept),
    )
    log.info("%s: fitted exponent %.3f -> order %d", shape.name, report.fitted_exponent, report.verdict)
    return report


# ---------------------------------------------------------------------------
# Numerical pulse design
# ---------------------------------------------------------------------------
def _mirror(half: np.ndarray, n_segments: int) -> np.ndarray:
    tail = half[:-1] if n_segments % 2 else half
    return np.concatenate([half, tail[::-1]])


def _equivalent_target(realized: float, target: float) -> float:
    """target + 4 pi k closest to realized (never zero)."""
    k = round((realized - target) / FOUR_PI)
    candidate = target + FOUR_PI * k
    if abs(candidate) < 1e-12:
        candidate += FOUR_PI if realized >= 0 else -FOUR_PI
    return candidate


def _profile(params: np.ndarray, n_segments: int, tau: float, angle: float):
    """Half-profile parameters -> full symmetric (amplitudes, fractions) with the net angle restored."""
    m = (n_segments + 1) // 2
    amps = _mirror(np.asarray(params[:m], dtype=float), n_segments)
    logits = np.asarray(params[m : 2 * m], dtype=float)
    weights = _mirror(np.exp(logits - logits.max()), n_segments)
    fractions = weights / weights.sum()
    realized = 2.0 * float(np.dot(amps, fractions)) * tau
    if abs(realized) < 1e-9:
        return None
    amps = amps * (_equivalent_target(realized, angle) / realized)
    return amps, fractions


def _half_params(shape: PulseShape, n_segments: int) -> np.ndarray | None:
    """Embed a symmetric odd-length shape into n_segments by splitting its middle segment."""
    s = len(shape.segments)
    if s % 2 == 0 or n_segments < s or (n_segments - s) % 2:
        return None
    mid = s // 2
    a_mid, f_mid = shape.segments[mid]
    pieces = n_segments - s + 1
    full = list(shape.segments[:mid]) + [(a_mid, f_mid / pieces)] * pieces + list(shape.segments[mid + 1 :])
    half = full[: (n_segments + 1) // 2]
    return np.concatenate([[a for a, _ in half], np.log([f for _, f in half])])


def _analytic_seed(order_target: int, angle: float, tau: float) -> PulseShape | None:
    if math.isclose(angle, math.pi):
        return scorpse_pi(tau) if order_target <= 1 else second_order_pi(tau)
    if math.isclose(angle, 2 * math.pi):
        return second_order_2pi(tau)
    return None


def _design_objective(params, n_segments, tau, angle, a_max, order_target, model, b0_eig) -> float:
    profile = _profile(params, n_segments, tau, angle)
    if profile is None:
        return math.inf
    amps, fractions = profile
    power = order_target + 1
    total = 0.0
    for k in range(5):
        tau_k = tau * 2.0**-k
        u = np.eye(model.dim, dtype=np.complex128)
        for a, f in zip(amps, fractions):
            u = expm_hermitian(model.h + (a * tau / tau_k) * model.qubit_x, f * tau_k) @ u
        target = b0_eig.expm(tau_k) @ ideal_pulse(angle, model.bath_dim)
        total += (np.linalg.norm(u - target) / (tau_k / tau) ** power) ** 2
    excess = max(0.0, float(np.max(np.abs(amps))) - a_max)
    return math.log(total + 1e-300) + config.DESIGN_CAP_PENALTY * (excess / a_max) ** 2


def design_pulse(
    order_target: int,
    angle: float,
    n_segments: int,
    tau: float,
    a_max: float,
    test_bath: HamiltonianPair,
    starts: int = config.DESIGN_STARTS,
    max_evals: int = config.DESIGN_MAX_EVALS,
    seed: int = config.DESIGN_SEED,
    workers: int = config.WORKERS,
) -> PulseShape:
    """Multistart Nelder-Mead search over symmetric piecewise-constant profiles.

    Start 0 is the semi-analytic shape for (order_target, angle) when one
    exists; the remaining starts are random with seeds seed+1, seed+2, ...
    Results are merged by objective, ties going to the lowest start index.
    """
    if order_target == 0:
        return rect_pulse(angle, tau, a_max)
    if order_target not in (1, 2):
        raise PulseArgumentError(f"order_target must be 0, 1 or 2, got {order_target}")
    if n_segments < 2 * order_target + 1:
        raise PulseArgumentError(f"order {order_target} needs at least {2 * order_target + 1} segments")
    if not (math.isclose(angle, math.pi) or math.isclose(angle, 2 * math.pi)):
        raise PulseArgumentError(f"angle must be pi or 2pi, got {angle}")

    m = (n_segments + 1) // 2
    b0_eig = eig_hermitian(test_bath.b0_full)
    scale = angle / (2 * tau)

    initial = []
    seed_shape = _analytic_seed(order_target, angle, tau)
    embedded = _half_params(seed_shape, n_segments) if seed_shape is not None else None
    for i in range(starts):
        if i == 0 and embedded is not None:
            initial.append(embedded)
            continue
        rng = np.random.default_rng(seed + i)
        amps = rng.uniform(-3.0, 3.0, size=m) * scale
        initial.append(np.concatenate([amps, rng.normal(0.0, 0.5, size=m)]))

    def run(i):
        x0 = initial[i]
        args = (n_segments, tau, angle, a_max, order_target, test_bath, b0_eig)
        res = optimize.minimize(
            _design_objective,
            x0,
            args=args,
            method="Nelder-Mead",
            options={"maxfev": max_evals, "xatol": 1e-12, "fatol": 1e-12, "adaptive": True},
        )
        # Keep the starting point if the search wandered off
        start_value = _design_objective(x0, *args)
        if start_value <= res.fun:
            return start_value, i, x0
        return float(res.fun), i, res.x

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run, range(starts)))
    best_value, best_index, best_x = min(results, key=lambda r: (r[0], r[1]))
    log.info("design: best objective %.4g from start %d", best_value, best_index)

    profile = _profile(best_x, n_segments, tau, angle)
    if profile is None:
        raise DesignFailure(f"design collapsed to a zero net rotation (objective {best_value:.4g})")
    amps, fractions = profile
    digest = config_hash(
        {"order": order_target, "angle": angle, "n_segments": n_segments, "tau": tau, "a_max": a_max, "starts": starts}
    )
    name = f"{'pi' if math.isclose(angle, math.pi) else 'twopi'}_{order_target}_designed"
    peak = float(np.max(np.abs(amps)))
    shape = PulseShape(
        name=name,
        segments=tuple((float(a), float(f)) for a, f in zip(amps, fractions)),
        tau=tau,
        target_angle=angle,
        order=order_target,
        a_max=max(a_max, peak),
        provenance={"method": "nelder-mead", "config_hash": digest, "seed": seed + best_index},
    )
    report = order_verify(shape, test_bath)
    if peak > a_max * (1 + 1e-9) or report.fitted_exponent < order_target + 1 - config.ORDER_TOLERANCE:
        raise DesignFailure(
            f"design reached exponent {report.fitted_exponent:.3f} (needed {order_target + 1 - config.ORDER_TOLERANCE:.1f})"
            f", peak amplitude {peak:.4g} vs cap {a_max:.4g}",
            report=report,
            shape=shape,
        )
    return shape


# ---------------------------------------------------------------------------
# Shapes catalog
# ---------------------------------------------------------------------------
def config_hash(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def shape_to_record(shape: PulseShape) -> dict:
    return {
        "name": shape.name,
        "order": shape.order,
        "angle": _fmt(shape.target_angle),
        "tau": _fmt(shape.tau),
        "a_max": _fmt(shape.a_max),
        "segments": [[_fmt(a), _fmt(f)] for a, f in shape.segments],
        "provenance": shape.provenance,
    }


def shape_from_record(record: dict) -> PulseShape:
    try:
        return PulseShape(
            name=record["name"],
            segments=tuple((float(a), float(f)) for a, f in record["segments"]),
            tau=float(record["tau"]),
            target_angle=float(record["angle"]),
            order=int(record["order"]),
            a_max=float(record["a_max"]),
            provenance=dict(record.get("provenance", {})),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"malformed shape record: {e}") from e


def _catalog_provenance(name: str, seed=None) -> dict:
    payload = {"shape": name, "tau": 1.0, "version": config.SHAPES_CATALOG_VERSION}
    return {
        "method": "analytic" if seed is None else "root",
        "shape": name,
        "config_hash": config_hash(payload),
        "seed": None if seed is None else list(seed),
    }


def build_catalog() -> dict[str, PulseShape]:
    """Reference shapes at tau = 1, each capped at its own peak amplitude.

    The shipped catalog holds exactly these shapes; rebuild it with
    write_catalog(build_catalog(), path) when a constructor changes.
    """
    shapes = [
        rect_pi(1.0),
        rect_pulse(2 * math.pi, 1.0, name="rect_2pi"),
        scorpse_pi(1.0),
        second_order_pi(1.0),
        second_order_2pi(1.0),
    ]
    seeds = {"pi_2nd": _PI_2ND_SEED}
    return {s.name: replace(s, provenance=_catalog_provenance(s.name, seeds.get(s.name))) for s in shapes}


def write_catalog(shapes: dict[str, PulseShape], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = [shape_to_record(shapes[name]) for name in sorted(shapes)]
    path.write_text(json.dumps({"version": config.SHAPES_CATALOG_VERSION, "shapes": records}, indent=2) + "\n")
    log.info("wrote %d shape(s) to %s", len(records), path)


def load_catalog(path: Path | None = None) -> dict[str, PulseShape]:
    """Read a shapes catalog; the shipped, version-pinned one by default. Never writes."""
    path = Path(path or config.SHAPES_CATALOG)
    if not path.exists():
        raise ConfigError(f"no shapes catalog at {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"shapes catalog {path} is not valid JSON: {e}") from e
    version = data.get("version")
    if version != config.SHAPES_CATALOG_VERSION:
        raise ConfigError(f"shapes catalog {path} has version {version!r}, expected {config.SHAPES_CATALOG_VERSION}")
    return {rec["name"]: shape_from_record(rec) for rec in data.get("shapes", [])}


def get_shape(name: str, catalog: dict[str, PulseShape] | None = None) -> PulseShape:
    catalog = catalog if catalog is not None else load_catalog()
    if name not in catalog:
        raise ConfigError(f"shape '{name}' not in catalog (have: {', '.join(sorted(catalog))})")
    return catalog[name]
