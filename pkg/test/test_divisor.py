import numpy as np
import pytest

from ptbloch.divisor import (DivisorTrajectory, ScalingRow, default_grid, dirichlet_eigenvalue, divisor_window,
                             fit_ellipse, fit_ellipse_points, pair_distance, scaling_slope, shooting_residual,
                             trace_divisor, verify_divisor)
from ptbloch.errors import ContinuationBreak, DegenerateFit, InsufficientSamples, OutOfWindow
from ptbloch.perturbation import EllipsePrediction
from ptbloch.roots import Window
from ptbloch.rules import CheckState


class TestDirichletEigenvalue:

    def test_free_operator(self, free_spec):
        assert abs(shooting_residual(free_spec, 0.0, 0.25)) < 1e-10
        assert dirichlet_eigenvalue(free_spec, 0.0, 0.26) == pytest.approx(0.25, abs=1e-10)
        assert dirichlet_eigenvalue(free_spec, 1.3, 0.9) == pytest.approx(1.0, abs=1e-10)

    def test_pt_potential_at_symmetry_point(self, pt_spec):
        gamma = dirichlet_eigenvalue(pt_spec, 0.0, 0.175)
        assert abs(gamma.imag) < 1e-8
        # Second-order terms move gamma(0) about 0.03 above the closed form 0.175 at this size
        assert abs(gamma - 0.2077) < 1e-3

    def test_symmetry_point_approaches_the_closed_form(self, pt_spec):
        prediction = EllipsePrediction(n=1, c_n=0.05, c_minus_n=-0.0125)
        gamma = dirichlet_eigenvalue(pt_spec.scaled(0.25), 0.0, prediction.gamma(0.0))
        assert abs(gamma.imag) < 1e-8
        assert abs(gamma - prediction.gamma(0.0)) < 5e-3

    def test_leaving_window(self, free_spec):
        with pytest.raises(OutOfWindow):
            dirichlet_eigenvalue(free_spec, 0.0, 0.3, Window(0.28, 0.32, -0.01, 0.01))

    def test_window_scales_with_coefficients(self):
        assert divisor_window(1).as_list() == [-0.125, 0.625, -0.375, 0.375]
        assert divisor_window(1, 0.5, -0.5).re_max == pytest.approx(2.25)


class TestTraceDivisor:

    def test_default_grid_spans_one_period(self):
        grid = default_grid(2, samples=8)
        assert grid.size == 9
        assert grid[-1] == pytest.approx(np.pi)

    def test_follows_the_closed_form(self, pt_spec):
        trajectory = trace_divisor(pt_spec.scaled(0.25), 1, samples=32)
        prediction = EllipsePrediction(n=1, c_n=0.05, c_minus_n=-0.0125)
        assert len(trajectory) == 33
        assert trajectory.closure_defect < 1e-8
        assert trajectory.max_deviation(prediction) < 5e-3
        rows = trajectory.to_rows()
        assert set(rows[0]) == {"x", "re_gamma", "im_gamma"}
        assert pair_distance(fit_ellipse(trajectory).foci, prediction.foci) < 5e-3

    def test_full_size_deviation_is_second_order(self, pt_spec):
        prediction = EllipsePrediction(n=1, c_n=0.2, c_minus_n=-0.05)
        full = trace_divisor(pt_spec, 1, samples=32).max_deviation(prediction)
        quarter = trace_divisor(pt_spec.scaled(0.25), 1, samples=32).max_deviation(
            EllipsePrediction(n=1, c_n=0.05, c_minus_n=-0.0125))
        assert 8.0 < full / quarter < 32.0

    def test_unsorted_grid(self, pt_spec):
        with pytest.raises(ValueError):
            trace_divisor(pt_spec, 1, x_grid=[0.0, 0.2, 0.1])

    def test_break_keeps_partial_trajectory(self, pt_spec):
        # A window too small for the curve stops the continuation
        window = Window(0.16, 0.19, -0.01, 0.01)
        with pytest.raises(ContinuationBreak) as info:
            trace_divisor(pt_spec, 1, samples=16, window=window)
        assert isinstance(info.value.trajectory, DivisorTrajectory)
        assert info.value.last_good_x is None or info.value.last_good_x >= 0.0


class TestEllipseFit:

    def test_exact_ellipse(self):
        _, gammas = EllipsePrediction(n=1, c_n=0.2, c_minus_n=-0.05).sample(64)
        fit = fit_ellipse_points(gammas)
        assert fit.center == pytest.approx(0.25, abs=1e-10)
        assert fit.semi_axes == pytest.approx((0.125, 0.075), abs=1e-10)
        assert fit.foci[0] == pytest.approx(0.25 - 0.1j, abs=1e-9)
        assert fit.foci[1] == pytest.approx(0.25 + 0.1j, abs=1e-9)
        assert fit.rms_residual < 1e-9

    def test_rotated_ellipse(self):
        t = np.linspace(0, 2 * np.pi, 50, endpoint=False)
        rotation = np.exp(0.4j)
        points = 1.0 + 0.5j + rotation * (0.3 * np.cos(t) + 0.1j * np.sin(t))
        fit = fit_ellipse_points(points)
        assert fit.semi_axes == pytest.approx((0.3, 0.1), abs=1e-9)
        focal = np.sqrt(0.3 ** 2 - 0.1 ** 2)
        expected = (1.0 + 0.5j + focal * rotation, 1.0 + 0.5j - focal * rotation)
        assert pair_distance(fit.foci, expected) < 1e-9

    def test_circle_has_coincident_foci(self):
        _, gammas = EllipsePrediction(n=1, c_n=0.1, c_minus_n=0.0).sample(64)
        fit = fit_ellipse_points(gammas)
        assert fit.semi_axes == pytest.approx((0.05, 0.05), abs=1e-9)
        assert abs(fit.foci[0] - 0.25) < 1e-5 and abs(fit.foci[1] - 0.25) < 1e-5

    def test_collinear_points(self):
        t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        with pytest.raises(DegenerateFit) as info:
            fit_ellipse_points(0.25 + 0.05 * np.cos(t))
        first, second = info.value.endpoints
        assert first == pytest.approx(0.2, abs=1e-12)
        assert second == pytest.approx(0.3, abs=1e-12)

    def test_too_few_points(self):
        with pytest.raises(InsufficientSamples):
            fit_ellipse_points([0, 1, 1j])

    def test_pair_distance_matches_either_order(self):
        assert pair_distance((0, 1), (1, 0)) == 0
        assert pair_distance((0, 1), (0.1, 1)) == pytest.approx(0.1)


class TestScalingSlope:

    def test_quadratic_deviation(self):
        rows = [ScalingRow(scale=s, samples=64, max_deviation=0.3 * s ** 2, focal_mismatch=None)
                for s in (1.0, 0.5, 0.25)]
        assert scaling_slope(rows) == pytest.approx(2.0)

    def test_needs_two_scales(self):
        assert scaling_slope([ScalingRow(scale=1.0, samples=64, max_deviation=0.1, focal_mismatch=None)]) is None


class TestVerifyDivisor:

    def test_unperturbed_resonance(self, cos_spec):
        report = verify_divisor(cos_spec, 2, samples=8, scalings=[])
        assert report.unperturbed
        assert report.fit is None and report.segment is None
        assert abs(report.gamma0 - 1.0) < 1e-2
        assert report.gamma0_imag < 1e-12
        assert all(issue.validation == CheckState.PASSED for issue in report.issues)

    def test_real_potential_gives_segment(self, cos_spec):
        report = verify_divisor(cos_spec, 1, samples=64, scalings=[])
        assert report.fit is None
        low, high = sorted(report.segment, key=lambda z: z.real)
        assert abs(low - 0.2) < 1e-2 and abs(high - 0.3) < 1e-2
        assert report.gamma0_imag < 1e-8
        assert report.focal_mismatch < 1e-2

    @pytest.mark.slow
    def test_foci_sit_on_branch_points(self, pt_spec):
        report = verify_divisor(pt_spec, 1, samples=256, scalings=[1.0, 0.5, 0.25], scaling_samples=64)
        assert report.fit is not None
        assert report.gamma0_imag < 1e-6
        assert report.closure_defect < 1e-8
        assert len(report.scaling_table) == 3
        assert [row.scale for row in report.scaling_table] == [1.0, 0.5, 0.25]
        assert 1.7 <= report.scaling_slope <= 2.3
        # Foci and ellipse shape converge as the coefficients shrink
        mismatches = [row.focal_mismatch for row in report.scaling_table]
        residuals = [row.rms_residual for row in report.scaling_table]
        assert mismatches[0] > mismatches[1] > mismatches[2]
        assert residuals[0] > residuals[1] > residuals[2]
        assert mismatches[2] < 5e-3
        smallest = next(issue for issue in report.issues if issue.parameter == "focal_mismatch@0.25")
        assert smallest.validation == CheckState.PASSED
        data = report.to_dict()
        assert data["fit"]["foci"] and data["scaling_slope"] == report.scaling_slope
