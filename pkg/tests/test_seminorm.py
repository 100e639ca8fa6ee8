import numpy as np
import pandas as pd
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oscholder.data.generators import disconnected_input, lattice_input, random_input
from oscholder.errors import EmptySweepError, OutsideHypothesisError
from oscholder.grid.grid_function import from_samples
from oscholder.morphology.operators import oscillation
from oscholder.seminorm.checks import (
    default_intervals,
    lemma_constant,
    open_closed_agreement,
    pushforward_density_check,
    continuity_modulus_check,
    sandwich_check,
    theorem_rhs,
    thm1_check,
)
from oscholder.seminorm.sweep import (
    SweepGrid,
    gen_holder_seminorm,
    osc_integral_sweep,
    save_sweep_csv,
)
from strategies import random_grid, seeds, shapes_2d

R_SMALL = 1.0 / 16
H_SMALL = 1.0 / 256


@pytest.fixture
def lattice_subject(lattice_small):
    return oscillation(lattice_small, R_SMALL, "open")


@pytest.fixture
def fine_ramp():
    return from_samples(np.linspace(0.0, 1.0, 101), 0.01)


class TestSweepGrid:
    def test_geometric(self):
        assert SweepGrid.geometric(1.0, 8.0, 2.0).deltas == (1.0, 2.0, 4.0, 8.0)

    def test_geometric_includes_endpoint_despite_rounding(self):
        grid = SweepGrid.geometric(0.1, 0.1 * 2 ** 2.5, 2 ** 0.25)
        assert len(grid) == 11

    def test_empty_range(self):
        with pytest.raises(EmptySweepError):
            SweepGrid.geometric(2.0, 1.0)

    def test_empty_values(self):
        with pytest.raises(EmptySweepError):
            SweepGrid.from_values([])

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            SweepGrid.from_values([1.0, 1.0])

    def test_from_values_sorts(self):
        assert SweepGrid.from_values([3.0, 1.0, 2.0]).deltas == (1.0, 2.0, 3.0)

    def test_tie_free_moves_only_ties(self):
        grid = SweepGrid.from_values([1.0, 1.5, 2.0]).tie_free(1.0)
        assert grid.deltas[0] > 1.0
        assert grid.deltas[1] == 1.5
        assert grid.deltas[2] > 2.0
        assert grid.deltas[2] == pytest.approx(2.0, rel=1e-7)

    def test_default_for(self, ramp_1d):
        grid = SweepGrid.default_for(ramp_1d)
        assert grid.deltas[0] == pytest.approx(0.2, rel=1e-7)
        assert grid.delta_max == pytest.approx(1.0)
        assert grid.deltas[-1] <= 1.0 * (1 + 1e-7)

    def test_validation_warnings(self, ramp_1d):
        grid = SweepGrid.from_values([0.05, 5.0])
        warnings = grid.validation_warnings(ramp_1d)
        assert len(warnings) == 2


class TestSweep:
    def test_lattice_curve(self, lattice_subject):
        report = osc_integral_sweep(lattice_subject, "open", alpha=1.0)
        assert report.is_monotone()
        for delta, integral in zip(report.deltas, report.integrals):
            if delta >= 8 * H_SMALL:
                expected = min(1.0, delta / R_SMALL)
                assert integral == pytest.approx(expected, rel=0.1)

    def test_lattice_seminorm_and_argmax(self, lattice_subject):
        report = osc_integral_sweep(lattice_subject, "open", alpha=1.0)
        assert report.estimate == pytest.approx(1.0 / R_SMALL, rel=0.15)
        assert R_SMALL / 2 <= report.argmax_delta <= 2 * R_SMALL

    @pytest.mark.parametrize("N", [4.0, 8.0])
    def test_disconnected_seminorm(self, N):
        # r = N: the estimate stays near μ(D) = 4 however far apart the pieces are
        g = oscillation(disconnected_input(N, 1.0 / 16), N, "open")
        for alpha in (0.5, 1.0):
            assert gen_holder_seminorm(g, alpha=alpha) == pytest.approx(4.0, rel=0.15)

    @pytest.mark.parametrize("alpha", [0.5, 1.0])
    def test_disconnected_seminorm_does_not_grow_with_N(self, alpha):
        near, far = (
            gen_holder_seminorm(oscillation(disconnected_input(N, 1.0 / 16), N, "open"), alpha=alpha)
            for N in (4.0, 8.0)
        )
        assert far == pytest.approx(near, rel=0.02)

    def test_constant_function(self, square_2d):
        report = osc_integral_sweep(square_2d)
        assert report.estimate == 0.0
        assert np.all(report.integrals == 0.0)

    @pytest.mark.parametrize("alpha", [0.0, -0.5, 1.5])
    def test_alpha_range(self, ramp_1d, alpha):
        with pytest.raises(ValueError):
            osc_integral_sweep(ramp_1d, alpha=alpha)

    def test_threads_do_not_change_result(self, lattice_subject):
        one = osc_integral_sweep(lattice_subject, threads=1)
        four = osc_integral_sweep(lattice_subject, threads=4)
        np.testing.assert_array_equal(one.integrals, four.integrals)

    def test_measure_constant_scales_integrals(self, ramp_1d):
        base = osc_integral_sweep(ramp_1d, c=1.0)
        scaled = osc_integral_sweep(ramp_1d, c=2.5)
        np.testing.assert_allclose(scaled.integrals, 2.5 * base.integrals)

    def test_csv_and_dict(self, lattice_subject, tmp_path):
        report = osc_integral_sweep(lattice_subject)
        path = save_sweep_csv(report, tmp_path / "sweep.csv")
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["delta", "I", "I_over_delta_alpha"]
        np.testing.assert_array_equal(frame["I"].to_numpy(), report.integrals)
        payload = report.to_dict()
        assert payload["estimate"] == report.estimate
        assert len(payload["records"]) == len(report.records)


class TestThm1:
    def test_theorem_rhs(self):
        assert theorem_rhs(1.0, 1.0, 1, 1.0 / 64, 1.0) == pytest.approx(384.0)

    def test_lattice(self, lattice_small):
        report = thm1_check(lattice_small, R_SMALL, alpha=1.0)
        assert report.verdict, report.errors
        assert report.lhs <= report.rhs
        assert report.details["split_ok"]
        assert report.details["trivial_branch_ok"]
        assert report.M == 1.0
        assert report.hull_volume == pytest.approx(1.0)

    def test_disconnected(self, disconnected_small):
        report = thm1_check(disconnected_small, 4.0, alpha=1.0)
        assert report.verdict, report.errors
        assert report.rhs == pytest.approx(2 * 1 * 10 * 3 / 4)

    def test_constant(self, square_2d):
        report = thm1_check(square_2d, 1.5, alpha=0.5)
        assert report.verdict
        assert report.lhs == 0.0

    def test_degenerate_hull_warns(self):
        mask = np.zeros((6, 6), dtype=bool)
        mask[:, 2] = True
        values = np.zeros((6, 6))
        values[3, 2] = 1.0
        g = from_samples(values, 1.0, mask=mask)
        report = thm1_check(g, 2.0)
        assert any("Degenerate" in w for w in report.warnings)
        assert report.hull_volume == 0.0

    def test_hull_override(self, lattice_small):
        report = thm1_check(lattice_small, R_SMALL, hull_volume=2.0)
        assert report.rhs == pytest.approx(2 * 2.0 * 3 / R_SMALL)


class TestSandwich:
    def test_lattice(self, lattice_small):
        report = sandwich_check(lattice_small, R_SMALL, R_SMALL / 4)
        assert report.verdict
        assert report.details["violations"] == 0
        assert report.measured <= 0.0

    @pytest.mark.parametrize("delta", [0.0, R_SMALL, 2 * R_SMALL])
    def test_hypothesis(self, lattice_small, delta):
        with pytest.raises(OutsideHypothesisError):
            sandwich_check(lattice_small, R_SMALL, delta)

    @given(seeds, shapes_2d, st.floats(1.0, 5.0), st.floats(0.05, 0.95), st.sampled_from(["open", "closed"]))
    @settings(max_examples=60, deadline=None)
    def test_random_grids(self, seed, shape, r, fraction, mode):
        delta = fraction * r
        assume(0 < delta < r)
        g = random_grid(seed, shape, mask_fraction=0.3)
        report = sandwich_check(g, r, delta, mode)
        assert report.details["violations"] == 0


class TestDensity:
    def test_lemma_constant(self):
        assert lemma_constant(1.0, 0.05, 2) == pytest.approx(1.0 / 0.7894736842105263)

    def test_default_intervals(self):
        intervals = default_intervals(0.0, 1.0, 10, 5, seed=3)
        assert len(intervals) == 15
        assert intervals[0] == (0.0, 0.1)
        assert all(0.0 <= lo <= hi <= 1.0 for lo, hi in intervals)
        assert intervals == default_intervals(0.0, 1.0, 10, 5, seed=3)

    def test_ramp(self, fine_ramp):
        report = pushforward_density_check(fine_ramp, 0.2, 0.04)
        assert report.verdict, report.errors
        assert report.C == pytest.approx(2.0)
        assert list(report.table.columns) == ["lo", "hi", "mu1", "mu2", "violation"]
        assert len(report.table) == 100

    def test_explicit_intervals(self, fine_ramp):
        report = pushforward_density_check(fine_ramp, 0.2, 0.04, intervals=[(0.5, 0.6)])
        row = report.table.iloc[0]
        # h₁ and h₂ are shifts of the ramp: both hit about ten cells
        assert row["mu1"] == pytest.approx(0.1, abs=0.011)
        assert row["mu2"] == pytest.approx(0.1, abs=0.011)

    def test_outside_hypothesis(self, fine_ramp):
        with pytest.raises(OutsideHypothesisError, match="outside lemma hypothesis"):
            pushforward_density_check(fine_ramp, 0.3, 0.1)


class TestContinuity:
    def test_ramp(self, fine_ramp):
        report = continuity_modulus_check(fine_ramp, 0.2, 0.04)
        assert report.verdict, report.errors
        # the open balls of radius 0.24 and 0.16 stop one cell short of the sphere
        assert report.details["G1_difference"] == pytest.approx(0.0652, abs=1e-6)
        assert report.details["I_difference"] <= report.details["I_bound"]

    def test_outside_hypothesis(self, fine_ramp):
        with pytest.raises(OutsideHypothesisError):
            continuity_modulus_check(fine_ramp, 0.2, 0.1)


class TestOpenClosed:
    def test_lattice_refinement(self, lattice_subject):
        refined = oscillation(lattice_input(1.0, R_SMALL, H_SMALL / 2), R_SMALL, "open")
        report = open_closed_agreement(
            lattice_subject, R_SMALL, refined=refined, halving_rtol=0.25
        )
        assert report.verdict, report.errors
        assert report.details["differing_cells"] == 13
        assert report.details["refined_differing_cells"] == 13
        assert report.details["refinement_ratio"] == pytest.approx(257 / 513)
        assert report.details["seminorm_open"] == report.details["seminorm_closed"]

    def test_smooth_function_agrees(self, fine_ramp):
        report = open_closed_agreement(fine_ramp, 0.05)
        assert report.verdict
        assert report.measured == 0.0


# ---------------------------------------------------------------------------
# Seeded batteries: every seed fixes d, r and α so the 50 inputs cover all
# twelve combinations of d ∈ {1, 2}, r ∈ {8h, 16h, 32h}, α ∈ {0.5, 1}.
# ---------------------------------------------------------------------------

BATTERY_H = 1.0 / 64


def battery_case(seed):
    d = 1 + seed % 2
    r = (8, 16, 32)[(seed // 2) % 3] * BATTERY_H
    alpha = (0.5, 1.0)[(seed // 6) % 2]
    return d, r, alpha


def battery_input(seed, d, smooth):
    n = 256 if d == 1 else 64
    domain = "disk" if d == 2 and seed % 4 == 1 else "full"
    return random_input(n, BATTERY_H, d=d, seed=seed, smooth=smooth, domain=domain)


def lemma_delta(r, d):
    return r / (2 * (2 * d + 1))


@pytest.mark.slow
class TestSeededBattery:
    @pytest.mark.parametrize("seed", range(50))
    def test_thm1(self, seed):
        d, r, alpha = battery_case(seed)
        g = battery_input(seed, d, smooth=2.0 if seed % 3 == 0 else 0.0)
        report = thm1_check(g, r, alpha=alpha)
        assert report.verdict, (seed, report.errors)

    @pytest.mark.parametrize("seed", range(50))
    def test_continuity(self, seed):
        d, r, _ = battery_case(seed)
        g = battery_input(seed, d, smooth=2.0 if seed % 3 == 0 else 0.0)
        report = continuity_modulus_check(g, r, lemma_delta(r, d))
        assert report.verdict, (seed, report.errors)

    @pytest.mark.parametrize("seed", range(20))
    def test_density(self, seed):
        d, r, _ = battery_case(seed)
        g = battery_input(seed, d, smooth=3.0)
        report = pushforward_density_check(g, r, lemma_delta(r, d), seed=seed)
        assert report.verdict, (seed, report.errors)
        assert len(report.table) == 100
        assert report.details["violations"] == 0
