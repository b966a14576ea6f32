"""
dd_cli.py - Command-line entry point of the DD simulator.

    python dd-simulator/scripts/dd_cli.py sweep dd-simulator/configs/chain_t_sweep_order2.cfg
    python dd-simulator/scripts/dd_cli.py verify-pulse --shape scorpse
    python dd-simulator/scripts/dd_cli.py energy --n-max 1000 --tau-star 1e-3

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
"""
import argparse
import csv
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

import config
from errors import ConfigError, DDError, DesignFailure
from filter_function import (
    FilterSpec,
    SpectralDensity,
    SpectrumKind,
    chi,
    filter_closed_form,
    filter_oracle,
    ideal_filter_spec,
    load_tabulated,
)
from harness import estimate_kappa, fit_power_law, load_sweep_config, read_sweep_csv, sweep_to_file
from pulses import design_pulse, get_shape, load_catalog, order_verify, rescale, write_catalog
from sequences import cost_table
from spinbath import verification_bath

log = logging.getLogger("cli")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

# Short names accepted by --shape
SHAPE_ALIASES = {"scorpse": "scorpse_pi", "rect": "rect_pi", "pi2": "pi_2nd", "twopi2": "twopi_2nd"}


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this CLI reserves 2 for numerical failures."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _write_rows(rows: list[dict], out: Path | None) -> None:
    if not rows:
        return
    stream = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.DictWriter(stream, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (config.CSV_FORMAT.format(v) if isinstance(v, float) else v) for k, v in row.items()})
    finally:
        if out:
            stream.close()
            log.info("wrote %d row(s) to %s", len(rows), out)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------
def cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config, overrides=args.set)
    table = sweep_to_file(cfg, output=args.out, workers=args.workers)
    print(f"{len(table.rows)} row(s) written, {len(table.dropped)} point(s) dropped")
    return EXIT_OK


def cmd_design_pulse(args) -> int:
    angle = {"pi": math.pi, "2pi": 2 * math.pi}[args.angle]
    target = Path(args.catalog)
    # a new target starts from the shipped shapes
    catalog = load_catalog(target if target.exists() else None)
    try:
        shape = design_pulse(
            order_target=args.order,
            angle=angle,
            n_segments=args.segments,
            tau=args.tau,
            a_max=args.a_max / args.tau,
            test_bath=verification_bath(),
            starts=args.starts,
            seed=args.seed,
        )
    except DesignFailure as e:
        if e.report is not None:
            print(f"best attempt: exponent {e.report.fitted_exponent:.3f}, order {e.report.verdict}")
        raise
    name = args.name or shape.name
    # Catalog shapes live at tau = 1
    catalog[name] = replace(rescale(shape, 1.0), name=name)
    write_catalog(catalog, target)
    print(f"{name}: {len(shape.segments)} segments, order {shape.order}, peak amplitude {shape.max_amplitude * shape.tau:.6g}/tau")
    return EXIT_OK


def cmd_verify_pulse(args) -> int:
    name = SHAPE_ALIASES.get(args.shape, args.shape)
    shape = rescale(get_shape(name, load_catalog(args.catalog)), args.tau)
    report = order_verify(shape, verification_bath(), ladder_size=args.ladder)
    for tau_k, r in report.residuals:
        print(f"tau={tau_k:.6e}  residual={r:.6e}")
    print(f"{name}: fitted exponent {report.fitted_exponent:.3f}, certified order {report.verdict}")
    return EXIT_OK


def _spectrum(args) -> SpectralDensity:
    if args.spectrum == "tabulated":
        if not args.table:
            raise ConfigError("--spectrum tabulated needs --table FILE")
        return load_tabulated(Path(args.table), amplitude=args.amplitude)
    return SpectralDensity(
        SpectrumKind(args.spectrum),
        amplitude=args.amplitude,
        cutoff=args.cutoff,
        soft_cutoff=args.soft_cutoff,
        infrared=args.infrared,
    )


def cmd_filter(args) -> int:
    if args.oracle and args.unsigned:
        raise UsageError("--oracle integrates the signed switching function; drop --unsigned")
    if args.n == 0:
        spec = FilterSpec(())
    else:
        ideal = ideal_filter_spec(args.kind, args.n)
        spec = FilterSpec(ideal.deltas, (args.width,) * ideal.n)
    if args.t_points:
        density = _spectrum(args)
        rows = []
        for T in np.geomspace(args.t_min, args.t_max, args.t_points):
            result = chi(spec, density, float(T), unsigned=args.unsigned)
            rows.append({"T": float(T), "chi": result.chi, "coherence": result.coherence})
    else:
        rows = []
        for z in np.linspace(0.0, args.z_max, args.z_points):
            row = {"z": float(z), "F": float(filter_closed_form(spec, z, unsigned=args.unsigned))}
            if args.oracle:
                row["F_oracle"] = filter_oracle(spec, float(z))
            rows.append(row)
    _write_rows(rows, args.out)
    return EXIT_OK


def cmd_energy(args) -> int:
    _write_rows(cost_table(args.n_max, args.tau_star, args.energy_constant), args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    table = read_sweep_csv(Path(args.csv))
    if args.kappa_file:
        other = read_sweep_csv(Path(args.kappa_file))
        result = estimate_kappa(table.curve(args.kind), other.curve(args.kind_b or args.kind))
        print(f"kappa={result.kappa:.6g} rms={result.rms:.3g}")
        return EXIT_OK
    for kind in [args.kind] if args.kind else table.kinds:
        result = fit_power_law(table, kind)
        start, stop = result.window
        print(f"{kind}: exponent={result.exponent:.4f} intercept={result.intercept:.4f} window={start}:{stop} rms={result.rms:.3g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dd_cli", description="Finite-width dynamical decoupling simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every sweep point")
    parser.add_argument("--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR"), default=config.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="run a sweep config and write its CSV")
    p.add_argument("config")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("--out", type=Path)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("design-pulse", help="optimize a pulse shape and store it in the catalog")
    p.add_argument("--order", type=int, required=True, choices=(0, 1, 2))
    p.add_argument("--angle", choices=("pi", "2pi"), default="pi")
    p.add_argument("--segments", type=int, default=5)
    p.add_argument("--tau", type=float, default=config.VERIFY_TAU)
    p.add_argument("--a-max", type=float, default=12.0, help="amplitude cap in units of 1/tau")
    p.add_argument("--starts", type=int, default=config.DESIGN_STARTS)
    p.add_argument("--seed", type=int, default=config.DESIGN_SEED)
    p.add_argument("--name")
    p.add_argument("--catalog", type=Path, required=True, help="catalog to store the shape in (the shipped one is read-only)")
    p.set_defaults(func=cmd_design_pulse)

    p = sub.add_parser("verify-pulse", help="certify the order of a catalog shape")
    p.add_argument("--shape", required=True)
    p.add_argument("--tau", type=float, default=config.VERIFY_TAU)
    p.add_argument("--ladder", type=int, default=config.VERIFY_LADDER_SIZE)
    p.add_argument("--catalog", type=Path)
    p.set_defaults(func=cmd_verify_pulse)

    p = sub.add_parser("filter", help="filter function F(z) or decay integral chi(T) tables")
    p.add_argument("--kind", choices=("cpmg", "udd", "cdd"), default="udd")
    p.add_argument("--n", type=int, default=4, help="pulse count (level for cdd); 0 = free induction")
    p.add_argument("--width", type=float, default=0.0, help="pulse width over T")
    p.add_argument("--z-max", type=float, default=50.0)
    p.add_argument("--z-points", type=int, default=201)
    p.add_argument("--oracle", action="store_true", help="add the switching-function quadrature column")
    p.add_argument("--unsigned", action="store_true", help="drop the alternating sign (does not refocus static noise)")
    p.add_argument("--spectrum", choices=[k.value for k in SpectrumKind], default="ohmic")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--cutoff", type=float, default=10.0)
    p.add_argument("--soft-cutoff", action="store_true")
    p.add_argument("--infrared", type=float, default=0.0)
    p.add_argument("--table")
    p.add_argument("--t-min", type=float, default=0.01)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--t-points", type=int, default=0, help="> 0 switches to a chi(T) table")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("energy", help="T_p and E_p against N for UDD and RUDD")
    p.add_argument("--n-max", type=int, default=100)
    p.add_argument("--tau-star", type=float, required=True)
    p.add_argument("--energy-constant", type=float, default=config.ENERGY_CONSTANT)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("fit", help="power-law exponents (or kappa) from a sweep CSV")
    p.add_argument("csv")
    p.add_argument("--kind")
    p.add_argument("--kappa-file", help="second CSV; estimates the T shift between the two curves")
    p.add_argument("--kind-b")
    p.set_defaults(func=cmd_fit)
    return parser


def cli_main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_CONFIG

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else args.log_level,
        format="[%(name)s] %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as e:
        log.error("%s", e)
        return EXIT_CONFIG
    except DDError as e:
        log.error("%s: %s", type(e).__name__, e)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(cli_main())
