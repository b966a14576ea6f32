"""
harness.py - Config-driven sweeps, CSV tables, power-law fits and T-shift estimates.

A sweep evaluates Delta_pF for several sequence kinds over a geometric grid
of either the total duration T or the minimum pulse width tau*. Points whose
schedule cannot be built (T < T_p, theta_p out of range, amplitude cap) are
dropped with a reason; everything else lands in one deterministic table.
"""
import configparser
import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

import config
from errors import AmplitudeError, ConfigError, EmptyResultError, EstimationError, FitFailure, ScheduleError
from evolve import distance, ideal_schedule_distance
from linalg import ControlledEigCache
from pulses import ORDER_SHAPES, PulseShape, config_hash, get_shape, load_catalog, rescale
from sequences import SequenceKind, build_schedule, total_energy
from spinbath import BathSpec, Topology, build_model

log = logging.getLogger("harness")

IDEAL_PREFIX = "ideal_"
FINITE_KINDS = tuple(k.value for k in SequenceKind)
IDEAL_KINDS = tuple(IDEAL_PREFIX + k for k in ("cpmg", "udd", "cdd"))
CSV_COLUMNS = ("sweep_value", "kind", "delta_pF", "T_p", "E_p", "theta_p")


# ---------------------------------------------------------------------------
# Sweep configuration
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SweepConfig:
    model: BathSpec
    kinds: tuple[str, ...]
    n: int
    cdd_level: int
    pulse_order: int
    pi_shape: str
    twopi_shape: str
    variable: str  # "T" or "tau_star"
    grid_min: float
    grid_max: float
    points: int
    T: float | None = None
    tau_star: float | None = None
    energy_constant: float = config.ENERGY_CONSTANT
    output: Path | None = None
    catalog: Path | None = None
    echo: dict = field(default_factory=dict, compare=False)

    @property
    def grid(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.grid_min])
        return np.geomspace(self.grid_min, self.grid_max, self.points)

    def count_for(self, kind: str) -> int:
        """N for the schedule builders (the level for CDD)."""
        return self.cdd_level if kind.removeprefix(IDEAL_PREFIX) == "cdd" else self.n


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: '{value}'")


def apply_overrides(parser: configparser.ConfigParser, overrides) -> None:
    """Apply 'section.key=value' overrides on top of a parsed config."""
    for item in overrides or ():
        target, sep, value = item.partition("=")
        section, dot, key = target.strip().partition(".")
        if not sep or not dot or not section or not key:
            raise ConfigError(f"override must look like section.key=value, got '{item}'")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value.strip())


def load_sweep_config(path: Path | str | None = None, overrides=None, text: str | None = None) -> SweepConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if text is not None:
        parser.read_string(text)
    else:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path)
        except configparser.Error as e:
            raise ConfigError(f"cannot parse {path}: {e}") from e
    apply_overrides(parser, overrides)

    try:
        return _build_config(parser)
    except (configparser.Error, KeyError, ValueError) as e:
        raise ConfigError(f"invalid sweep config: {e}") from e


def _require(section, key: str) -> str:
    value = section.get(key)
    if value is None or not str(value).strip():
        raise ConfigError(f"[{section.name}] missing required key '{key}'")
    return value


def _build_config(parser: configparser.ConfigParser) -> SweepConfig:
    m = parser["model"]
    topology = Topology(m.get("topology", "chain"))
    spec = BathSpec(
        topology=topology,
        m=int(_require(m, "m")),
        lam=m.getfloat("lambda", 1.0),
        alpha=m.getfloat("alpha", 10.0),
        periodic=_parse_bool(m.get("periodic", "true")),
        qubit_site=m.getint("qubit_site", 1),
    )
    if spec.m < 2:
        raise ConfigError(f"[model] m must be >= 2, got {spec.m}")

    s = parser["sequences"]
    kinds = tuple(k.strip().lower() for k in _require(s, "kinds").split(",") if k.strip())
    unknown = [k for k in kinds if k not in FINITE_KINDS + IDEAL_KINDS]
    if not kinds or unknown:
        raise ConfigError(f"unknown sequence kind(s) {unknown or kinds}; choose from {FINITE_KINDS + IDEAL_KINDS}")
    n = s.getint("n", 0)
    cdd_level = s.getint("cdd_level", 0)
    if any(k.removeprefix(IDEAL_PREFIX) != "cdd" for k in kinds) and n < 1:
        raise ConfigError("[sequences] n must be >= 1")
    if any(k.removeprefix(IDEAL_PREFIX) == "cdd" for k in kinds) and cdd_level < 1:
        raise ConfigError("[sequences] cdd_level must be >= 1 for cdd kinds")

    p = parser["pulses"] if parser.has_section("pulses") else {}
    order = int(p.get("order", 2))
    if order not in ORDER_SHAPES:
        raise ConfigError(f"[pulses] order must be one of {sorted(ORDER_SHAPES)}, got {order}")
    pi_default, twopi_default = ORDER_SHAPES[order]
    energy_constant = float(p.get("energy_constant", config.ENERGY_CONSTANT))
    if energy_constant <= 0:
        raise ConfigError("[pulses] energy_constant must be positive")

    w = parser["sweep"]
    variable = w.get("variable", "T")
    if variable not in ("T", "tau_star"):
        raise ConfigError(f"[sweep] variable must be T or tau_star, got '{variable}'")
    grid_min = float(_require(w, "min"))
    grid_max, points = w.getfloat("max", grid_min), w.getint("points", 2)
    if points < 1 or grid_min <= 0:
        raise ConfigError("[sweep] needs min > 0 and points >= 1")
    if points > 1 and not grid_min < grid_max:
        raise ConfigError(f"[sweep] needs min < max, got {grid_min} >= {grid_max}")
    fixed_T = w.getfloat("T", None)
    tau_star = w.getfloat("tau_star", None)
    needs_tau = any(k in FINITE_KINDS for k in kinds)
    if variable == "T" and needs_tau and not tau_star:
        raise ConfigError("[sweep] T sweeps with finite pulses need tau_star")
    if variable == "tau_star" and not fixed_T:
        raise ConfigError("[sweep] tau_star sweeps need a fixed T")

    out = parser["output"] if parser.has_section("output") else {}
    output = Path(out["path"]) if out.get("path") else None
    catalog = Path(out["catalog"]) if out.get("catalog") else None

    echo = {f"{sec}.{key}": val for sec in sorted(parser.sections()) for key, val in sorted(parser[sec].items())}
    return SweepConfig(
        model=spec,
        kinds=kinds,
        n=n,
        cdd_level=cdd_level,
        pulse_order=order,
        pi_shape=p.get("pi_shape", pi_default),
        twopi_shape=p.get("twopi_shape", twopi_default),
        variable=variable,
        grid_min=grid_min,
        grid_max=grid_max,
        points=points,
        T=fixed_T,
        tau_star=tau_star,
        energy_constant=energy_constant,
        output=output,
        catalog=catalog,
        echo=echo,
    )


# ---------------------------------------------------------------------------
# Sweep table
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SweepRow:
    sweep_value: float
    kind: str
    delta_pF: float
    T_p: float = 0.0
    E_p: float = math.nan
    theta_p: float = math.nan


@dataclass(frozen=True)
class DroppedPoint:
    sweep_value: float
    kind: str
    reason: str


@dataclass
class SweepTable:
    rows: list[SweepRow]
    dropped: list[DroppedPoint] = field(default_factory=list)
    header: dict = field(default_factory=dict)

    @property
    def kinds(self) -> list[str]:
        return sorted({r.kind for r in self.rows})

    @property
    def attempted(self) -> int:
        return len(self.rows) + len(self.dropped)

    def curve(self, kind: str) -> tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.rows if r.kind == kind]
        if not rows:
            raise EmptyResultError(f"no rows for kind '{kind}' (have: {', '.join(self.kinds)})")
        return np.array([r.sweep_value for r in rows]), np.array([r.delta_pF for r in rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.header.items():
            buf.write(f"# {key}={value}\n")
        for d in self.dropped:
            buf.write(f"# dropped kind={d.kind} sweep_value={config.CSV_FORMAT.format(d.sweep_value)} reason={d.reason}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        fmt = config.CSV_FORMAT.format
        for r in self.rows:
            writer.writerow([fmt(r.sweep_value), r.kind, fmt(r.delta_pF), fmt(r.T_p), fmt(r.E_p), fmt(r.theta_p)])
        return buf.getvalue()

    def write(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        log.info("wrote %d row(s) to %s", len(self.rows), path)


def read_sweep_csv(path: Path) -> SweepTable:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"CSV not found: {path}")
    header, data_lines = {}, []
    for line in path.read_text().splitlines():
        if line.startswith("# dropped "):
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            header[key] = value
        elif line.strip():
            data_lines.append(line)
    reader = csv.DictReader(data_lines)
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
        raise ConfigError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
    rows = [
        SweepRow(
            sweep_value=float(r["sweep_value"]),
            kind=r["kind"],
            delta_pF=float(r["delta_pF"]),
            T_p=float(r["T_p"]),
            E_p=float(r["E_p"]),
            theta_p=float(r["theta_p"]),
        )
        for r in reader
    ]
    return SweepTable(rows=rows, header=header)


# ---------------------------------------------------------------------------
# Sweep engine
# ---------------------------------------------------------------------------
# Per-process state, set up once by _init_worker
_WORKER = {}


def _init_worker(spec: BathSpec, pi_shape: PulseShape, twopi_shape: PulseShape) -> None:
    model = build_model(spec)
    _WORKER.update(
        model=model,
        cache=ControlledEigCache(model.h, model.qubit_x),
        pi_shape=pi_shape,
        twopi_shape=twopi_shape,
    )


def _evaluate_point(job: tuple) -> SweepRow | DroppedPoint:
    value, kind, count, T, tau_star, energy_constant = job
    model, cache = _WORKER["model"], _WORKER["cache"]
    try:
        if kind.startswith(IDEAL_PREFIX):
            result = ideal_schedule_distance(kind.removeprefix(IDEAL_PREFIX), count, T, model, cache)
            return SweepRow(sweep_value=value, kind=kind, delta_pF=result.delta_pF)
        pi_shape = rescale(_WORKER["pi_shape"], tau_star)
        twopi_shape = rescale(_WORKER["twopi_shape"], tau_star)
        schedule = build_schedule(kind, count, T, pi_shape, twopi_shape)
    except (ScheduleError, AmplitudeError) as e:
        return DroppedPoint(sweep_value=value, kind=kind, reason=str(e).replace("\n", " "))
    result = distance(schedule, model, cache)
    return SweepRow(
        sweep_value=value,
        kind=kind,
        delta_pF=result.delta_pF,
        T_p=schedule.total_pulse_time,
        E_p=total_energy(schedule, energy_constant),
        theta_p=math.nan if schedule.theta_p is None else schedule.theta_p,
    )


def _jobs(cfg: SweepConfig) -> list[tuple]:
    jobs = []
    for kind in cfg.kinds:
        for value in cfg.grid:
            value = float(value)
            T = value if cfg.variable == "T" else cfg.T
            tau_star = value if cfg.variable == "tau_star" else cfg.tau_star
            jobs.append((value, kind, cfg.count_for(kind), T, tau_star, cfg.energy_constant))
    return jobs


def run_sweep(cfg: SweepConfig, catalog: dict | None = None, workers: int | None = None) -> SweepTable:
    """Evaluate every (kind, grid value) point; rows sorted by (kind, sweep value)."""
    if catalog is None:
        catalog = load_catalog(cfg.catalog)
    pi_shape = get_shape(cfg.pi_shape, catalog)
    twopi_shape = get_shape(cfg.twopi_shape, catalog)
    jobs = _jobs(cfg)
    workers = config.WORKERS if workers is None else workers
    log.info("sweep: %d point(s) over %s, %d worker(s)", len(jobs), ", ".join(cfg.kinds), workers)

    init_args = (cfg.model, pi_shape, twopi_shape)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=init_args) as pool:
            results = list(pool.map(_evaluate_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        _init_worker(*init_args)
        results = [_evaluate_point(job) for job in jobs]

    rows = sorted((r for r in results if isinstance(r, SweepRow)), key=lambda r: (r.kind, r.sweep_value))
    dropped = sorted((r for r in results if isinstance(r, DroppedPoint)), key=lambda r: (r.kind, r.sweep_value))
    for d in dropped:
        log.warning("dropped %s at %s=%.6g: %s", d.kind, cfg.variable, d.sweep_value, d.reason)
    log.info("sweep: %d attempted, %d emitted, %d dropped", len(jobs), len(rows), len(dropped))
    if not rows:
        raise EmptyResultError("no valid grid points in the sweep")

    header = dict(cfg.echo)
    header["config_hash"] = config_hash(cfg.echo)
    header["attempted"] = str(len(jobs))
    header["emitted"] = str(len(rows))
    header["dropped"] = str(len(dropped))
    return SweepTable(rows=rows, dropped=dropped, header=header)


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class WindowPolicy:
    max_rms: float = config.FIT_MAX_RMS
    min_points: int = config.FIT_MIN_POINTS
    floor: float = config.FIT_FLOOR


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float  # log10 of the prefactor
    window: tuple[int, int]  # [start, stop) into the sorted, floor-filtered points
    rms: float  # log10 units
    kappa: float | None = None


def _line_fit(lx: np.ndarray, ly: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(lx, ly, 1)
    rms = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return float(slope), float(intercept), rms


def fit_arrays(x, y, policy: WindowPolicy = WindowPolicy()) -> FitResult:
    """Power-law fit y = c x^p over the largest window grown from the small-x end."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    order = np.argsort(x)
    x, y = x[order], y[order]
    keep = np.isfinite(y) & (y > policy.floor) & (x > 0)
    if np.count_nonzero(keep) < len(y):
        log.debug("fit: %d point(s) at or below the floor %.1e excluded", len(y) - np.count_nonzero(keep), policy.floor)
    lx, ly = np.log10(x[keep]), np.log10(y[keep])
    n = len(lx)
    if n < policy.min_points:
        raise FitFailure(f"only {n} usable point(s), need {policy.min_points}")

    best = None
    for start in range(n - policy.min_points + 1):
        stop = start + policy.min_points
        slope, intercept, rms = _line_fit(lx[start:stop], ly[start:stop])
        attempt = FitResult(slope, intercept, (start, stop), rms)
        if rms >= policy.max_rms:
            if best is None or rms < best.rms:
                best = attempt
            continue
        result = attempt
        while stop < n:
            slope, intercept, rms = _line_fit(lx[start : stop + 1], ly[start : stop + 1])
            if rms >= policy.max_rms:
                break
            stop += 1
            result = FitResult(slope, intercept, (start, stop), rms)
        return result
    raise FitFailure(f"no window of {policy.min_points}+ points has rms < {policy.max_rms}", best=best)


def fit_power_law(table: SweepTable, kind: str, policy: WindowPolicy = WindowPolicy()) -> FitResult:
    x, y = table.curve(kind)
    result = fit_arrays(x, y, policy)
    log.info("fit %s: exponent %.4f over points %d..%d (rms %.3g)", kind, result.exponent, *result.window, result.rms)
    return result


def estimate_kappa(curve_a, curve_b, min_overlap: int = 6) -> FitResult:
    """Factor kappa such that Delta_a(T) = Delta_b(T / kappa), by interpolation on the log-log grid."""
    (ta, da), (tb, db) = (tuple(np.asarray(v, dtype=float) for v in c) for c in (curve_a, curve_b))
    if len(ta) < min_overlap or len(tb) < min_overlap:
        raise EstimationError(f"both curves need at least {min_overlap} points")
    if np.any(da <= 0) or np.any(db <= 0):
        raise EstimationError("Delta values must be positive")
    oa, ob = np.argsort(ta), np.argsort(tb)
    la, ya = np.log(ta[oa]), np.log(da[oa])
    lb, yb = np.log(tb[ob]), np.log(db[ob])

    def overlap(shift):
        return (la - shift >= lb[0]) & (la - shift <= lb[-1])

    def objective(shift):
        mask = overlap(shift)
        if np.count_nonzero(mask) < min_overlap:
            return math.inf
        resid = ya[mask] - np.interp(la[mask] - shift, lb, yb)
        return float(np.mean(resid**2))

    lo, hi = la[0] - lb[-1], la[-1] - lb[0]
    coarse = np.linspace(lo, hi, 801)
    values = np.array([objective(s) for s in coarse])
    if not np.any(np.isfinite(values)):
        raise EstimationError(f"curves never overlap in {min_overlap}+ points")
    i = int(np.argmin(values))
    step = coarse[1] - coarse[0]
    res = optimize.minimize_scalar(
        objective,
        bounds=(coarse[max(i - 1, 0)], coarse[min(i + 1, len(coarse) - 1)]),
        method="bounded",
        options={"xatol": 1e-12},
    )
    shift = float(res.x) if res.fun <= values[i] else float(coarse[i])
    if not math.isfinite(objective(shift)):
        raise EstimationError("refined shift lost the overlap")
    kappa = math.exp(shift)
    mask = overlap(shift)
    log.info("kappa = %.6g over %d overlapping point(s) (grid step %.2g in log T)", kappa, np.count_nonzero(mask), step)
    return FitResult(
        exponent=math.nan,
        intercept=math.nan,
        window=(int(np.argmax(mask)), int(np.argmax(mask)) + int(np.count_nonzero(mask))),
        rms=math.sqrt(objective(shift)) / math.log(10),
        kappa=kappa,
    )


def sweep_to_file(cfg: SweepConfig, output: Path | None = None, workers: int | None = None) -> SweepTable:
    table = run_sweep(cfg, workers=workers)
    target = output or cfg.output
    if target is None:
        raise ConfigError("no output path: set [output] path or pass --out")
    table.write(target)
    return table
