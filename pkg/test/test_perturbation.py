import numpy as np
import pytest

from ptbloch.config import Degeneracy, Verdict
from ptbloch.errors import DegenerateDivisor, DegenerateVector, QRNoConvergence
from ptbloch.perturbation import (EllipsePrediction, block_eigenvalues, bloch_vector, ellipse_prediction,
                                  first_order_branch_points, first_order_verdict, hill_eigenvalues,
                                  hill_eigenvalues_near, hill_matrix, resonance_window_radius, resonant_block,
                                  resonant_energy)
from ptbloch.potential import PotentialSpec


class TestFirstOrder:

    def test_resonant_energy(self):
        assert [resonant_energy(n) for n in (1, 2, 3)] == [0.25, 1.0, 2.25]

    def test_gap_branch_points(self):
        first, second = first_order_branch_points(1, 0.05, 0.05)
        assert first == pytest.approx(0.3)
        assert second == pytest.approx(0.2)

    def test_transversal_branch_points(self):
        first, second = first_order_branch_points(1, 0.2, -0.05)
        assert first == pytest.approx(0.25 + 0.1j)
        assert second == pytest.approx(0.25 - 0.1j)

    def test_one_sided_branch_points_coincide(self):
        assert first_order_branch_points(2, 0.3, 0.0) == (1.0, 1.0)

    @pytest.mark.parametrize("product, verdict", [
        (0.0025, Verdict.GAP),
        (-0.01, Verdict.TRANSVERSAL_BAND),
        (0.0, Verdict.DOUBLE_POINT_AT_FIRST_ORDER),
    ])
    def test_verdict_from_sign(self, product, verdict):
        assert first_order_verdict(product) == verdict

    def test_window_radius(self):
        assert resonance_window_radius(1, 0.0025) == pytest.approx(0.375)
        assert resonance_window_radius(1, -1.0) == pytest.approx(2.0)


class TestResonantBlock:

    def test_block_eigenvalues_match_numpy(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(1, 4))
            c_n, c_minus_n = rng.uniform(-0.5, 0.5, size=2)
            delta = complex(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3))
            spec = PotentialSpec.from_coefficients({n: c_n, -n: c_minus_n})
            expected = np.linalg.eigvals(resonant_block(spec, n, delta))
            found = np.array(block_eigenvalues(n, delta, c_n, c_minus_n))
            if abs(expected[0] - expected[1]) < 1e-6:
                continue
            for value in found:
                assert np.min(np.abs(expected - value)) < 1e-11 * (1 + abs(value))

    def test_invalid_index(self, pt_spec):
        with pytest.raises(ValueError):
            resonant_block(pt_spec, 0, 0.1)


class TestHillMatrix:

    def test_free_eigenvalues(self, free_spec):
        matrix = hill_matrix(free_spec, 0.5, half_size=3)
        np.testing.assert_allclose(np.sort(np.diag(matrix).real), np.sort((np.arange(-3, 4) + 0.5) ** 2))
        assert np.count_nonzero(matrix - np.diag(np.diag(matrix))) == 0

    def test_coefficients_on_off_diagonals(self, pt_spec):
        matrix = hill_matrix(pt_spec, 0.0, half_size=2)
        # H[m, k] = c_{m-k}
        assert matrix[3, 2] == pytest.approx(0.2)
        assert matrix[2, 3] == pytest.approx(-0.05)

    def test_eigenvalues_are_sorted(self):
        matrix = np.array([[2.0, 1.0, 0.0], [0.0, 1.0 + 1j, 0.0], [0.0, 0.0, 1.0 - 1j]])
        np.testing.assert_allclose(hill_eigenvalues(matrix), [1 - 1j, 1 + 1j, 2], atol=1e-14)

    def test_non_finite_matrix(self):
        with pytest.raises(QRNoConvergence):
            hill_eigenvalues(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_gap_edges_from_antiperiodic_spectrum(self, cos_spec):
        spectrum = hill_eigenvalues_near(cos_spec, 0.5, 0.25, 0.2)
        assert spectrum.values.size == 2
        assert spectrum.doubling_shift < 1e-10
        np.testing.assert_allclose(np.sort(spectrum.values.real), [0.2, 0.3], atol=5e-3)
        assert np.max(np.abs(spectrum.values.imag)) < 1e-10

    def test_transversal_pair(self, pt_spec):
        spectrum = hill_eigenvalues_near(pt_spec, 0.5, 0.25, 0.2)
        values = spectrum.values[np.argsort(spectrum.values.imag)]
        assert values.size == 2
        assert abs(values[0] - values[1].conjugate()) < 1e-9
        assert abs(values[1] - (0.25 + 0.1j)) < 1e-2


class TestBlochVector:

    def test_vanishes_at_the_divisor_point(self, pt_spec):
        prediction = ellipse_prediction(pt_spec, 1)
        for x in (0.0, 0.7, 2.0, 4.4):
            vector = prediction.vector_at(x)
            assert abs(vector.lam - (prediction.gamma(x) - prediction.center)) < 1e-12
            scale = abs(vector.a_plus) + abs(vector.a_minus)
            assert abs(vector(x)) < 1e-12 * scale

    def test_zeros_are_zeros(self):
        vector = bloch_vector(2, 0.03 + 0.01j, 0.1, -0.04)
        zeros = vector.zeros(3)
        assert zeros.size == 3
        np.testing.assert_allclose(np.abs(vector(zeros)), 0.0, atol=1e-12)

    def test_eigenvector_of_block(self, pt_spec):
        delta = 0.05 - 0.02j
        vector = bloch_vector(1, delta, 0.2, -0.05, branch=-1)
        block = resonant_block(pt_spec, 1, delta)
        amplitudes = np.array([vector.a_plus, vector.a_minus])
        np.testing.assert_allclose(block @ amplitudes, vector.energy * amplitudes, atol=1e-13)

    def test_unsplit_resonance(self):
        with pytest.raises(DegenerateVector):
            bloch_vector(1, 0.0, 0.0, 0.0)

    def test_invalid_branch(self):
        with pytest.raises(ValueError):
            bloch_vector(1, 0.1, 0.1, 0.1, branch=0)


class TestEllipsePrediction:

    def test_transversal_ellipse(self, pt_spec):
        prediction = ellipse_prediction(pt_spec, 1)
        assert prediction.center == 0.25
        assert prediction.semi_axis_real == pytest.approx(0.075)
        assert prediction.semi_axis_imag == pytest.approx(0.125)
        assert prediction.degeneracy == Degeneracy.NONE
        assert prediction.segment_endpoints is None
        xs, gammas = prediction.sample(64)
        offsets = gammas - prediction.center
        np.testing.assert_allclose((offsets.real / 0.075) ** 2 + (offsets.imag / 0.125) ** 2, 1.0, atol=1e-12)

    def test_foci_are_first_order_branch_points(self, pt_spec):
        prediction = ellipse_prediction(pt_spec, 1)
        major, minor = prediction.semi_axis_imag, prediction.semi_axis_real
        focal = np.sqrt(major ** 2 - minor ** 2)
        assert sorted(prediction.foci, key=lambda z: z.imag) == [pytest.approx(0.25 - focal * 1j),
                                                                 pytest.approx(0.25 + focal * 1j)]

    def test_real_potential_gives_real_segment(self, cos_spec):
        prediction = ellipse_prediction(cos_spec, 1)
        assert prediction.degeneracy == Degeneracy.REAL_SEGMENT
        first, second = prediction.segment_endpoints
        assert first == pytest.approx(0.2)
        assert second == pytest.approx(0.3)
        assert np.max(np.abs(prediction.sample(32)[1].imag)) < 1e-14

    def test_odd_potential_gives_imaginary_segment(self):
        prediction = EllipsePrediction(n=1, c_n=0.1, c_minus_n=-0.1)
        assert prediction.degeneracy == Degeneracy.IMAG_SEGMENT
        assert prediction.segment_endpoints == (pytest.approx(0.25 - 0.1j), pytest.approx(0.25 + 0.1j))

    def test_period(self):
        assert EllipsePrediction(n=3, c_n=0.1, c_minus_n=0.2).period == pytest.approx(2 * np.pi / 3)

    def test_unperturbed_resonance(self, cos_spec):
        with pytest.raises(DegenerateDivisor):
            ellipse_prediction(cos_spec, 2)
