"""Tests for sweep configs, the sweep engine, CSV tables and the fits."""
import math
from pathlib import Path

import numpy as np
import pytest

import harness
from errors import ConfigError, EmptyResultError, EstimationError, FitFailure
from harness import (
    SweepRow,
    SweepTable,
    WindowPolicy,
    estimate_kappa,
    fit_arrays,
    fit_power_law,
    load_sweep_config,
    read_sweep_csv,
    run_sweep,
    sweep_to_file,
)
from spinbath import Topology

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

SMALL_SWEEP = """
[model]
topology = chain
m = 2
alpha = 10

[sequences]
kinds = cpmg, ideal_udd
n = 2

[pulses]
order = 1

[sweep]
variable = T
min = 0.001
max = 0.05
points = 4
tau_star = 1e-3
"""


@pytest.fixture
def small_cfg():
    return load_sweep_config(text=SMALL_SWEEP)


@pytest.fixture
def small_table(small_cfg, reference_shapes):
    return run_sweep(small_cfg, catalog=reference_shapes, workers=1)


# --------------------------------------------------------------------------
# Config
# --------------------------------------------------------------------------
class TestSweepConfig:
    def test_parsed(self, small_cfg):
        assert small_cfg.model.topology is Topology.CHAIN
        assert small_cfg.model.m == 2
        assert small_cfg.kinds == ("cpmg", "ideal_udd")
        assert small_cfg.pi_shape == "scorpse_pi"
        assert small_cfg.twopi_shape == "twopi_2nd"
        assert small_cfg.tau_star == 1e-3
        assert small_cfg.output is None

    def test_grid(self, small_cfg):
        assert len(small_cfg.grid) == 4
        assert small_cfg.grid[0] == pytest.approx(0.001)
        assert small_cfg.grid[-1] == pytest.approx(0.05)

    def test_single_point_grid(self):
        cfg = load_sweep_config(text=SMALL_SWEEP, overrides=["sweep.points=1"])
        assert list(cfg.grid) == [0.001]

    def test_override_adds_section(self):
        cfg = load_sweep_config(text=SMALL_SWEEP, overrides=["output.path=results/x.csv", "model.m=3"])
        assert cfg.output == Path("results/x.csv")
        assert cfg.model.m == 3

    def test_echo_reflects_overrides(self):
        cfg = load_sweep_config(text=SMALL_SWEEP, overrides=["sequences.n=3"])
        assert cfg.echo["sequences.n"] == "3"

    def test_cdd_uses_level(self):
        text = SMALL_SWEEP.replace("n = 2", "n = 2\ncdd_level = 3").replace("cpmg, ideal_udd", "cdd, ideal_cdd, udd")
        cfg = load_sweep_config(text=text)
        assert cfg.count_for("cdd") == 3
        assert cfg.count_for("ideal_cdd") == 3
        assert cfg.count_for("udd") == 2

    def test_ideal_kinds_need_no_tau_star(self):
        text = SMALL_SWEEP.replace("tau_star = 1e-3\n", "").replace("cpmg, ideal_udd", "ideal_udd")
        assert load_sweep_config(text=text).tau_star is None

    @pytest.mark.parametrize(
        "override",
        [
            "model.m=1",
            "model.topology=ring",
            "sequences.kinds=cpmg, hahn",
            "sequences.n=0",
            "sequences.kinds=cdd",
            "pulses.order=3",
            "pulses.energy_constant=-1",
            "sweep.variable=omega",
            "sweep.min=0",
            "sweep.max=0.0001",
            "sweep.tau_star=",
            "sweep.variable=tau_star",
        ],
    )
    def test_invalid(self, override):
        with pytest.raises(ConfigError):
            load_sweep_config(text=SMALL_SWEEP, overrides=[override])

    @pytest.mark.parametrize("override", ["sweep.points", "points=3", ".points=3"])
    def test_malformed_override(self, override):
        with pytest.raises(ConfigError):
            load_sweep_config(text=SMALL_SWEEP, overrides=[override])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_sweep_config(tmp_path / "absent.cfg")

    def test_missing_section(self):
        with pytest.raises(ConfigError):
            load_sweep_config(text="[model]\nm = 3\n")

    @pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.cfg")), ids=lambda p: p.stem)
    def test_shipped_configs_parse(self, path):
        cfg = load_sweep_config(path)
        assert cfg.output is not None
        assert len(cfg.grid) == cfg.points


# --------------------------------------------------------------------------
# Sweep engine
# --------------------------------------------------------------------------
class TestRunSweep:
    def test_counts(self, small_table):
        assert small_table.attempted == 8
        assert len(small_table.rows) == 7
        assert len(small_table.dropped) == 1
        assert small_table.header["attempted"] == "8"
        assert small_table.header["emitted"] == "7"
        assert small_table.header["dropped"] == "1"

    def test_too_short_point_dropped(self, small_table):
        dropped = small_table.dropped[0]
        assert dropped.kind == "cpmg"
        assert dropped.sweep_value == pytest.approx(0.001)

    def test_rows_sorted(self, small_table):
        keys = [(r.kind, r.sweep_value) for r in small_table.rows]
        assert keys == sorted(keys)
        assert small_table.kinds == ["cpmg", "ideal_udd"]

    def test_costs(self, small_table):
        for r in small_table.rows:
            if r.kind == "cpmg":
                assert r.T_p == pytest.approx(2e-3)
                assert r.E_p == pytest.approx(2e3)
                assert math.isnan(r.theta_p)
            else:
                assert r.T_p == 0.0
                assert math.isnan(r.E_p)

    def test_distances_positive(self, small_table):
        assert all(0 < r.delta_pF < math.sqrt(2) for r in small_table.rows)

    def test_deterministic(self, small_cfg, reference_shapes, small_table):
        again = run_sweep(small_cfg, catalog=reference_shapes, workers=1)
        assert again.to_csv() == small_table.to_csv()

    def test_header_carries_config_hash(self, small_cfg, small_table):
        other = load_sweep_config(text=SMALL_SWEEP, overrides=["sequences.n=3"])
        assert len(small_table.header["config_hash"]) == 16
        assert small_table.header["model.m"] == "2"
        assert other.echo != small_cfg.echo

    def test_rudd_rows_carry_theta(self, reference_shapes):
        text = SMALL_SWEEP.replace("cpmg, ideal_udd", "rudd").replace("min = 0.001", "min = 0.01")
        table = run_sweep(load_sweep_config(text=text), catalog=reference_shapes, workers=1)
        assert all(0 < r.theta_p <= math.pi / 6 for r in table.rows)

    def test_tau_star_sweep(self, reference_shapes):
        text = SMALL_SWEEP.replace("variable = T", "variable = tau_star\nT = 0.01")
        text = text.replace("min = 0.001", "min = 1e-5").replace("max = 0.05", "max = 1e-4")
        table = run_sweep(load_sweep_config(text=text), catalog=reference_shapes, workers=1)
        x, _ = table.curve("cpmg")
        assert x == pytest.approx(np.geomspace(1e-5, 1e-4, 4))
        assert [r.T_p for r in table.rows if r.kind == "cpmg"] == pytest.approx(2 * x)

    def test_nothing_valid(self, reference_shapes):
        text = SMALL_SWEEP.replace("cpmg, ideal_udd", "cpmg").replace("n = 2", "n = 10")
        text = text.replace("max = 0.05", "max = 0.002")
        with pytest.raises(EmptyResultError):
            run_sweep(load_sweep_config(text=text), catalog=reference_shapes, workers=1)

    def test_unknown_shape(self, reference_shapes):
        cfg = load_sweep_config(text=SMALL_SWEEP, overrides=["pulses.pi_shape=gaussian_pi"])
        with pytest.raises(ConfigError):
            run_sweep(cfg, catalog=reference_shapes, workers=1)

    def test_default_catalog(self, small_cfg):
        table = run_sweep(small_cfg, workers=1)
        assert len(table.rows) == 7

    def test_in_process_points_share_one_cache(self, small_cfg, reference_shapes):
        run_sweep(small_cfg, catalog=reference_shapes, workers=1)
        cache = harness._WORKER["cache"]
        # free evolution plus the two SCORPSE amplitudes at the one tau*
        assert len(cache) == 3
        assert 0.0 in cache


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------
class TestSweepCsv:
    def test_read_back(self, small_table, tmp_path):
        path = tmp_path / "out" / "sweep.csv"
        small_table.write(path)
        back = read_sweep_csv(path)
        assert [r.kind for r in back.rows] == [r.kind for r in small_table.rows]
        for a, b in zip(back.rows, small_table.rows):
            assert a.delta_pF == pytest.approx(b.delta_pF, rel=1e-10)
            assert a.sweep_value == pytest.approx(b.sweep_value, rel=1e-10)
        assert back.header["config_hash"] == small_table.header["config_hash"]

    def test_dropped_points_are_comments(self, small_table):
        lines = small_table.to_csv().splitlines()
        assert sum(line.startswith("# dropped kind=cpmg") for line in lines) == 1
        assert "sweep_value,kind,delta_pF,T_p,E_p,theta_p" in lines

    def test_bad_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("T,delta\n1,2\n")
        with pytest.raises(ConfigError):
            read_sweep_csv(path)

    def test_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            read_sweep_csv(tmp_path / "absent.csv")

    def test_empty_curve(self):
        table = SweepTable(rows=[SweepRow(0.1, "udd", 1e-3)])
        with pytest.raises(EmptyResultError):
            table.curve("rudd")

    def test_sweep_to_file(self, small_cfg, catalog_path, tmp_path):
        path = tmp_path / "sweep.csv"
        sweep_to_file(small_cfg, output=path, workers=1)
        assert len(read_sweep_csv(path).rows) == 7

    def test_sweep_to_file_needs_output(self, small_cfg, catalog_path):
        with pytest.raises(ConfigError):
            sweep_to_file(small_cfg, workers=1)


# --------------------------------------------------------------------------
# Fits
# --------------------------------------------------------------------------
class TestPowerLawFit:
    def test_exact_power_law(self):
        x = np.geomspace(1e-3, 1.0, 20)
        result = fit_arrays(x, 3.0 * x**2.5)
        assert result.exponent == pytest.approx(2.5, abs=1e-10)
        assert result.intercept == pytest.approx(math.log10(3.0), abs=1e-10)
        assert result.window == (0, 20)

    def test_shift_equivariant(self):
        x = np.geomspace(1e-3, 1.0, 12)
        y = 0.2 * x**3 * (1 + 0.01 * np.sin(7 * np.log(x)))
        plain, scaled = fit_arrays(x, y), fit_arrays(x, 40.0 * y)
        assert scaled.exponent == pytest.approx(plain.exponent, abs=1e-12)
        assert scaled.intercept - plain.intercept == pytest.approx(math.log10(40.0), abs=1e-12)

    def test_window_stops_at_a_kink(self):
        x = np.geomspace(1e-4, 1.0, 25)
        result = fit_arrays(x, np.minimum(x, 1e-2) ** 2)
        assert result.window == (0, 13)
        assert result.exponent == pytest.approx(2.0, abs=1e-9)

    def test_unsorted_input(self):
        x = np.geomspace(1e-3, 1.0, 10)
        order = np.random.default_rng(1).permutation(10)
        assert fit_arrays(x[order], (x**4)[order]).exponent == pytest.approx(4.0, abs=1e-10)

    def test_floor_excluded(self):
        x = np.geomspace(1e-3, 1.0, 10)
        y = x**2
        y[:3] = 0.0
        result = fit_arrays(x, y)
        assert result.exponent == pytest.approx(2.0, abs=1e-10)
        assert result.window == (0, 7)

    def test_too_few_points(self):
        with pytest.raises(FitFailure):
            fit_arrays([1e-3, 1e-2, 1e-1], [1.0, 2.0, 3.0])

    def test_noise_reports_best_attempt(self):
        x = np.geomspace(1e-3, 1.0, 10)
        y = x * 10 ** np.random.default_rng(3).normal(0.0, 1.0, 10)
        with pytest.raises(FitFailure) as err:
            fit_arrays(x, y, WindowPolicy(max_rms=1e-3))
        assert err.value.best is not None

    def test_from_table(self):
        rows = [SweepRow(t, "udd", 5.0 * t**4) for t in np.geomspace(0.01, 0.1, 8)]
        result = fit_power_law(SweepTable(rows=rows), "udd")
        assert result.exponent == pytest.approx(4.0, abs=1e-10)


class TestKappa:
    T = np.geomspace(1e-3, 1e-1, 41)

    def test_identical_curves(self):
        curve = (self.T, self.T**4)
        assert estimate_kappa(curve, curve).kappa == pytest.approx(1.0, abs=1e-9)

    def test_known_shift(self):
        # Delta_a(T) = Delta_b(T / 2)
        result = estimate_kappa((self.T, (self.T / 2) ** 4), (self.T, self.T**4))
        assert result.kappa == pytest.approx(2.0, rel=1e-6)

    def test_known_shift_other_way(self):
        result = estimate_kappa((self.T, self.T**4), (self.T, (self.T / 2.3) ** 4))
        assert result.kappa == pytest.approx(1 / 2.3, rel=1e-6)

    def test_too_few_points(self):
        with pytest.raises(EstimationError):
            estimate_kappa((self.T[:5], self.T[:5]), (self.T, self.T))

    def test_nonpositive(self):
        with pytest.raises(EstimationError):
            estimate_kappa((self.T, np.zeros_like(self.T)), (self.T, self.T))
