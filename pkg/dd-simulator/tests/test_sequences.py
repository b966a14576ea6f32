"""Tests for CPMG, UDD, CDD and RUDD schedules and the pulse-cost laws."""
import json
import math

import numpy as np
import pytest

from errors import ContractError, ScheduleError, ThetaDomainError, ThetaRangeError
from pulses import rect_pi, rescale, scorpse_pi, second_order_2pi, second_order_pi
from sequences import (
    EventKind,
    SequenceKind,
    build_schedule,
    cdd_instants,
    cdd_pulse_count,
    cdd_schedule,
    cost_table,
    cpmg_instants,
    cpmg_schedule,
    ideal_instants,
    min_rudd_duration,
    rudd_durations,
    rudd_energy_asymptote,
    rudd_energy_sum,
    rudd_pulse_time_asymptote,
    rudd_pulse_time_closed,
    rudd_schedule,
    schedule_from_record,
    solve_theta_p,
    total_energy,
    total_pulse_time,
    udd_instants,
    udd_schedule,
)

TAU_STAR = 1.086e-3


@pytest.fixture
def pi_shape():
    return rescale(second_order_pi(1.0), TAU_STAR)


@pytest.fixture
def twopi_shape():
    return rescale(second_order_2pi(1.0), TAU_STAR)


EXTENDED_PRECISION = np.finfo(np.longdouble).eps < 1e-18


def rudd_geometry_cases():
    rng = np.random.default_rng(5)
    for n in range(1, 51):
        tau_star = 10 ** rng.uniform(-6, -3)
        T = min_rudd_duration(n, tau_star) * rng.uniform(1.0, 40.0)
        yield n, T, tau_star


# --------------------------------------------------------------------------
# Ideal instants
# --------------------------------------------------------------------------
class TestInstants:
    def test_cpmg(self):
        assert cpmg_instants(2, 1.0) == pytest.approx([0.25, 0.75])
        assert cpmg_instants(1, 3.0) == pytest.approx([1.5])

    def test_udd_hahn_echo(self):
        assert udd_instants(1, 2.0) == pytest.approx([1.0])

    def test_udd2_is_cpmg2(self):
        assert np.allclose(udd_instants(2, 1.0), cpmg_instants(2, 1.0), atol=1e-15)

    def test_udd3(self):
        expected = [math.sin(math.pi / 8) ** 2, 0.5, math.sin(3 * math.pi / 8) ** 2]
        assert udd_instants(3, 1.0) == pytest.approx(expected, abs=1e-15)
        assert udd_instants(3, 1.0) == pytest.approx([0.14645, 0.5, 0.85355], abs=1e-5)

    @pytest.mark.parametrize("n", range(1, 51))
    def test_udd_formula_exact(self, n):
        T = 0.37
        i = np.arange(1, n + 1)
        assert np.allclose(udd_instants(n, T), T * np.sin(np.pi * i / (2 * (n + 1))) ** 2, rtol=1e-12, atol=0)

    @pytest.mark.parametrize("kind, n", [("cpmg", 5), ("udd", 6), ("cdd", 4), ("cdd", 3)])
    def test_reflection_symmetry(self, kind, n):
        T = 0.7
        t = ideal_instants(kind, n, T)
        assert np.allclose(np.sort(T - t), t, atol=1e-12 * T)

    def test_rudd_has_no_ideal_limit(self):
        with pytest.raises(ContractError):
            ideal_instants("rudd", 3, 1.0)


class TestCddRecursion:
    def test_level_one(self):
        assert cdd_instants(1, 1.0) == pytest.approx([0.5])

    def test_level_two(self):
        assert cdd_instants(2, 1.0) == pytest.approx([0.25, 0.75])

    def test_level_three(self):
        assert cdd_instants(3, 1.0) == pytest.approx([1 / 8, 3 / 8, 1 / 2, 5 / 8, 7 / 8])

    def test_level_four_has_ten_pulses(self):
        assert cdd_pulse_count(4) == 10
        t = cdd_instants(4, 1.0)
        assert t[0] == pytest.approx(1 / 16)
        assert t[-1] == pytest.approx(15 / 16)

    def test_level_zero_is_free(self):
        assert cdd_pulse_count(0) == 0

    def test_negative_level(self):
        with pytest.raises(ContractError):
            cdd_instants(-1, 1.0)


# --------------------------------------------------------------------------
# Fixed-width schedules
# --------------------------------------------------------------------------
class TestFixedWidthSchedules:
    @pytest.mark.parametrize("build", [cpmg_schedule, udd_schedule])
    def test_ten_pulse_schedule(self, build, pi_shape):
        s = build(10, 0.09, pi_shape)
        assert s.n == 10
        assert all(e.duration == pytest.approx(TAU_STAR) for e in s.events)
        assert all(e.kind is EventKind.PI for e in s.events)

    def test_cdd_level_four(self, pi_shape):
        s = cdd_schedule(4, 0.09, pi_shape)
        assert s.n == 10
        assert s.centers == pytest.approx(cdd_instants(4, 0.09))

    def test_centers(self, pi_shape):
        s = cpmg_schedule(2, 0.09, pi_shape)
        assert s.centers == pytest.approx([0.0225, 0.0675])
        e = s.events[0]
        assert e.t_stop - e.t_start == pytest.approx(TAU_STAR)
        assert e.center == pytest.approx(0.5 * (e.t_start + e.t_stop))

    def test_too_short_total_duration(self, pi_shape):
        with pytest.raises(ScheduleError):
            cpmg_schedule(10, 0.005, pi_shape)

    def test_udd_edge_pulse_leaves_window(self):
        # the first UDD_10 center sits at 0.0203 T, less than tau / 2 from t = 0
        with pytest.raises(ScheduleError):
            udd_schedule(10, 0.011, rect_pi(1e-3))

    @pytest.mark.parametrize("build", [cpmg_schedule, udd_schedule, cdd_schedule])
    def test_needs_pulses(self, build, pi_shape):
        with pytest.raises(ContractError):
            build(0, 0.09, pi_shape)

    def test_total_costs(self, pi_shape):
        s = udd_schedule(10, 0.09, pi_shape)
        assert total_pulse_time(s) == pytest.approx(10 * TAU_STAR)
        assert total_energy(s, 2.0) == pytest.approx(20.0 / TAU_STAR)

    def test_energy_constant_positive(self, pi_shape):
        with pytest.raises(ContractError):
            total_energy(udd_schedule(2, 0.09, pi_shape), 0.0)


# --------------------------------------------------------------------------
# RUDD
# --------------------------------------------------------------------------
class TestThetaP:
    def test_first_pulse_lasts_tau_star(self):
        theta = solve_theta_p(10, 0.09, TAU_STAR)
        assert theta == pytest.approx(math.asin(TAU_STAR / (0.09 * math.sin(math.pi / 11))), rel=1e-15)
        assert 0.09 * math.sin(math.pi / 11) * math.sin(theta) == pytest.approx(TAU_STAR, rel=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 5, 10])
    def test_back_to_back_limit(self, n):
        T = 0.09
        tau_star = T * math.sin(math.pi / (n + 1)) * math.sin(math.pi / (2 * (n + 1)))
        assert solve_theta_p(n, T, tau_star) == pytest.approx(math.pi / (2 * (n + 1)), rel=1e-12)

    def test_range_error(self):
        with pytest.raises(ThetaRangeError):
            solve_theta_p(10, 0.5 * min_rudd_duration(10, TAU_STAR), TAU_STAR)

    def test_domain_error(self):
        with pytest.raises(ThetaDomainError):
            solve_theta_p(10, 0.01, 0.01)

    def test_range_error_is_schedule_error(self):
        assert issubclass(ThetaRangeError, ScheduleError)

    def test_bad_arguments(self):
        with pytest.raises(ContractError):
            solve_theta_p(0, 0.09, TAU_STAR)


class TestRuddGeometry:
    @pytest.mark.skipif(not EXTENDED_PRECISION, reason="window edges cancel in double precision")
    @pytest.mark.parametrize("n, T, tau_star", list(rudd_geometry_cases()))
    def test_duration_identity(self, n, T, tau_star):
        theta = solve_theta_p(n, T, tau_star)
        # t+ - t- loses log10(T / tau_i) digits; evaluate the edges in extended precision
        a = np.longdouble(math.pi) * np.arange(1, n + 1) / (2 * (n + 1))
        half, T_ext = np.longdouble(theta) / 2, np.longdouble(T)
        widths = T_ext * np.sin(a + half) ** 2 - T_ext * np.sin(a - half) ** 2
        assert np.max(np.abs(widths / rudd_durations(n, T, theta) - 1)) < 1e-12
        assert rudd_durations(n, T, theta)[0] == pytest.approx(tau_star, rel=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 4, 10, 30])
    def test_back_to_back_events_touch(self, n):
        tau_star = 1e-3
        T = min_rudd_duration(n, tau_star)
        s = rudd_schedule(n, T, tau_star, rect_pi(tau_star), second_order_2pi(tau_star))
        for a, b in zip(s.events, s.events[1:]):
            assert b.t_start - a.t_stop == pytest.approx(0.0, abs=1e-12 * T)

    def test_schedule_events(self, pi_shape, twopi_shape):
        s = rudd_schedule(10, 0.09, TAU_STAR, pi_shape, twopi_shape)
        assert s.kind is SequenceKind.RUDD
        assert len(s.events) == 12
        assert s.events[0].kind is EventKind.TWO_PI and s.events[-1].kind is EventKind.TWO_PI
        assert s.pi_events[0].duration == pytest.approx(TAU_STAR, rel=1e-12)
        theta = s.theta_p
        for e in s.pi_events:
            assert e.duration == pytest.approx(0.09 * math.sin(math.pi * e.index / 11) * math.sin(theta), rel=1e-12)
            assert e.shape.realized_angle == pytest.approx(math.pi, abs=1e-10)

    def test_boundary_windows(self, pi_shape, twopi_shape):
        s = rudd_schedule(10, 0.09, TAU_STAR, pi_shape, twopi_shape)
        window = 0.09 * math.sin(s.theta_p / 2) ** 2
        first, last = s.events[0], s.events[-1]
        assert (first.t_start, first.t_stop) == pytest.approx((0.0, window))
        assert (last.t_start, last.t_stop) == pytest.approx((0.09 * math.sin((math.pi - s.theta_p) / 2) ** 2, 0.09))

    def test_boundary_cap_violation_is_recorded(self, pi_shape, twopi_shape):
        s = rudd_schedule(10, 0.09, TAU_STAR, pi_shape, twopi_shape)
        assert [v[0] for v in s.cap_violations] == [0, 11]
        assert s.events[0].shape.max_amplitude > twopi_shape.a_max

    def test_without_boundary(self, pi_shape):
        s = rudd_schedule(10, 0.09, TAU_STAR, pi_shape, None, with_boundary=False)
        assert s.kind is SequenceKind.RUDD_NO_BOUNDARY
        assert len(s.events) == 10
        assert s.cap_violations == ()

    def test_central_spin_scale(self):
        tau_star = 0.0004828
        s = rudd_schedule(10, 0.04, tau_star, rescale(second_order_pi(1.0), tau_star), second_order_2pi(tau_star))
        assert s.n == 10

    def test_pulses_never_shorter_than_tau_star(self, pi_shape, twopi_shape):
        s = rudd_schedule(10, 0.5, TAU_STAR, pi_shape, twopi_shape)
        assert min(e.duration for e in s.pi_events) == pytest.approx(TAU_STAR, rel=1e-12)
        assert all(e.shape.max_amplitude <= pi_shape.a_max * (1 + 1e-12) for e in s.pi_events)

    def test_centers_approach_udd(self):
        T, n = 0.09, 10
        udd = udd_instants(n, T)

        def deviation(tau_star):
            s = rudd_schedule(n, T, tau_star, rect_pi(tau_star), None, with_boundary=False)
            return float(np.max(np.abs(s.centers - udd)))

        big, small = deviation(1e-4), deviation(1e-5)
        assert big > 0
        assert small < 0.2 * big

    def test_build_schedule_dispatch(self, pi_shape, twopi_shape):
        assert build_schedule("cdd", 2, 0.09, pi_shape).n == 2
        assert build_schedule("rudd_noboundary", 4, 0.09, pi_shape).kind is SequenceKind.RUDD_NO_BOUNDARY
        with pytest.raises(ContractError):
            build_schedule("rudd", 4, 0.09, pi_shape)

    def test_stretch_keeps_cap(self):
        # a reference shape of another duration is rescaled to tau* before stretching
        s = rudd_schedule(4, 0.09, TAU_STAR, scorpse_pi(2 * TAU_STAR), None, with_boundary=False)
        assert s.pi_events[0].shape.tau == pytest.approx(TAU_STAR)


class TestRecords:
    def test_schedule_record(self, pi_shape, twopi_shape):
        s = rudd_schedule(3, 0.09, TAU_STAR, pi_shape, twopi_shape)
        back = schedule_from_record(json.loads(json.dumps(s.to_record())))
        assert back.kind is s.kind
        assert back.theta_p == s.theta_p
        assert [(e.t_start, e.t_stop) for e in back.events] == [(e.t_start, e.t_stop) for e in s.events]


# --------------------------------------------------------------------------
# Cost laws
# --------------------------------------------------------------------------
class TestCostLaws:
    def test_rudd_single_pulse(self):
        assert rudd_pulse_time_closed(1, TAU_STAR) == pytest.approx(TAU_STAR, rel=1e-14)
        assert rudd_energy_sum(1, TAU_STAR) == pytest.approx(1 / TAU_STAR, rel=1e-14)

    def test_rudd_two_pulses(self):
        assert rudd_pulse_time_closed(2, TAU_STAR) == pytest.approx(2 * TAU_STAR, rel=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 3, 10, 100, 999, 2000])
    def test_direct_sum_matches_closed_form(self, n):
        T = 2 * min_rudd_duration(n, TAU_STAR)
        theta = solve_theta_p(n, T, TAU_STAR)
        direct = float(np.sum(rudd_durations(n, T, theta)))
        assert direct == pytest.approx(rudd_pulse_time_closed(n, TAU_STAR), rel=1e-10)

    def test_schedule_sum_matches_closed_form(self, pi_shape):
        s = rudd_schedule(10, 0.09, TAU_STAR, pi_shape, None, with_boundary=False)
        assert total_pulse_time(s) == pytest.approx(rudd_pulse_time_closed(10, TAU_STAR), rel=1e-10)
        assert total_energy(s) == pytest.approx(rudd_energy_sum(10, TAU_STAR), rel=1e-10)

    def test_pulse_time_asymptote(self):
        ratio = rudd_pulse_time_closed(1000, TAU_STAR) / rudd_pulse_time_asymptote(1000, TAU_STAR)
        assert ratio == pytest.approx(1.0, abs=0.01)

    def test_energy_exceeds_asymptote(self):
        ratios = [rudd_energy_sum(n, TAU_STAR) / rudd_energy_asymptote(n, TAU_STAR) for n in (1, 10, 100, 1000, 10000)]
        assert all(r >= 1 for r in ratios)
        assert all(b < a for a, b in zip(ratios, ratios[1:]))

    def test_energy_with_euler_constant(self):
        exact = rudd_energy_sum(1000, TAU_STAR)
        assert exact == pytest.approx(rudd_energy_asymptote(1000, TAU_STAR, with_constant=True), rel=1e-3)

    def test_cost_table(self):
        rows = cost_table(50, TAU_STAR, 2.0)
        assert [r["N"] for r in rows] == list(range(1, 51))
        row = rows[9]
        assert row["udd_E_p"] == pytest.approx(2.0 * 10 / TAU_STAR)
        assert row["udd_T_p"] == pytest.approx(10 * TAU_STAR)
        assert row["rudd_T_p"] == pytest.approx(row["rudd_T_p_closed"], rel=1e-12)
        assert row["rudd_E_p"] == pytest.approx(row["rudd_E_p_closed"], rel=1e-12)
        assert all(r["rudd_E_p"] < r["udd_E_p"] * (1 + 1e-12) for r in rows)

    def test_cost_table_arguments(self):
        with pytest.raises(ContractError):
            cost_table(0, TAU_STAR)
