"""
config.py - Runtime configuration for the DD simulator.

The sweep worker count is the only value read from the environment; the
shapes catalog and the log level are chosen per run with CLI flags or sweep
config keys. Everything else is a fixed numerical constant of the simulator.

    export DD_WORKERS=4                                   # sweep worker processes
"""
import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

# Number of worker processes used by sweeps (1 = run in-process)
WORKERS = int(os.environ.get("DD_WORKERS", "1"))

# Largest Hilbert-space dimension any operator may have (4096 = qubit + 11 bath spins)
DIM_CAP = 4096

# Version-pinned shapes catalog shipped with the simulator (read-only)
SHAPES_CATALOG = BASE_DIR / "shapes" / "catalog.json"
SHAPES_CATALOG_VERSION = 1

# Default CLI log level (--log-level or -v override it)
LOG_LEVEL = "INFO"

# Pulse-amplitude eigendecompositions kept per cache (the free Hamiltonian is always kept)
EIG_CACHE_SIZE = 64

# ---------------------------------------------------------------------------
# Numerical tolerances (absolute, on matrix entries of order 1)
# ---------------------------------------------------------------------------
HERMITIAN_TOL = 1e-12
FRACTION_SUM_TOL = 1e-12
ANGLE_TOL = 1e-10
# Relative slack (in units of T) for touching / overlapping pulse windows
OVERLAP_TOL = 1e-12

# ---------------------------------------------------------------------------
# Pulse order verification and design
# ---------------------------------------------------------------------------
# Test bath used to certify pulse orders: chain, M=3, alpha=10, lambda=1
VERIFY_BATH_M = 3
VERIFY_BATH_ALPHA = 10.0
# Pulse duration at the top of the verification ladder (units of 1/lambda)
VERIFY_TAU = 1e-3
VERIFY_LADDER_SIZE = 5
# Residuals below this are at the roundoff floor and are dropped from the ladder
RESIDUAL_FLOOR = 1e-13
# Slack when turning a fitted exponent into a certified order
ORDER_TOLERANCE = 0.3

# Multistart Nelder-Mead budget for design_pulse
DESIGN_STARTS = 4
DESIGN_MAX_EVALS = 1500
DESIGN_SEED = 20100517
# Penalty weight for amplitudes above a_max
DESIGN_CAP_PENALTY = 1e6

# ---------------------------------------------------------------------------
# Sequences, filter functions, harness
# ---------------------------------------------------------------------------
# Shape constant A in E_p = A / tau (never fixed by the physics; only ratios matter)
ENERGY_CONSTANT = 1.0

# Target relative accuracy of the filter-function quadratures
QUAD_REL_TOL = 1e-9
# Absolute accuracy the switching-function oracle must reach
ORACLE_ABS_TOL = 1e-10

# Power-law fit window: residual bound in log10 units, minimum points, roundoff floor
FIT_MAX_RMS = 0.05
FIT_MIN_POINTS = 4
FIT_FLOOR = 1e-12

# CSV formatting - 12 significant digits keeps sweeps byte-identical across runs
CSV_FORMAT = "{:.11e}"
