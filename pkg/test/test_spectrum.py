import numpy as np
import pytest

from ptbloch.config import EndpointKind, Multiplicity, Verdict
from ptbloch.errors import LocusStartError
from ptbloch.monodromy import discriminant
from ptbloch.perturbation import hill_eigenvalues_near
from ptbloch.potential import PotentialSpec
from ptbloch.roots import Window
from ptbloch.rules import CheckState
from ptbloch.spectrum import (LocusArc, SpectralLocus, classify_resonance, default_window, expand_seeds,
                              find_branch_points, nearest_resonance, project_onto_locus, trace_locus)


class TestSeeds:

    def test_nearest_resonance(self):
        assert nearest_resonance(0.26 + 0.1j) == 1
        assert nearest_resonance(0.9) == 2
        assert nearest_resonance(2.3) == 3

    def test_expanded_seeds_hold_both_predictions(self, pt_spec):
        seeds = expand_seeds(pt_spec, [0.3 + 0.1j, 0.3 + 0.1j])
        assert seeds == pytest.approx([0.3 + 0.1j, 0.25 + 0.1j, 0.25 - 0.1j])

    def test_far_seed_is_not_expanded(self, pt_spec):
        assert expand_seeds(pt_spec, [0.55]) == [0.55]

    def test_default_window_holds_the_first_resonances(self):
        window = default_window(3)
        for n in (1, 2, 3):
            assert window.contains(complex(n * n / 4))


class TestBranchPoints:

    def test_free_double_points(self, free_spec):
        found = find_branch_points(free_spec, Window(0.1, 1.2, -0.1, 0.1), seeds=[0.26, 0.98], expand=False)
        assert len(found) == 2
        # Newton converges linearly onto a double root, so only to about sqrt(ftol)
        energies = np.sort(found.energies.real)
        np.testing.assert_allclose(energies, [0.25, 1.0], atol=1e-5)
        assert all(point.multiplicity == Multiplicity.DOUBLE for point in found)
        assert sorted(point.resonance_index for point in found) == [1, 2]
        assert [p["resonance_index"] for p in found.to_dict()["points"]] == [p.resonance_index for p in found]
        assert "resonance_index" not in found.to_dict()

    def test_pt_branch_points_are_conjugation_closed(self, pt_spec):
        found = find_branch_points(pt_spec, seeds=[0.26 + 0.09j])
        assert len(found) == 2
        assert found.is_conjugation_closed()
        for point in found:
            assert abs(point.discriminant ** 2 - 4) < 1e-8

    def test_failed_seeds_are_recorded(self, cos_spec):
        found = find_branch_points(cos_spec, Window(0.0, 0.5, -0.2, 0.2), seeds=[3.0], expand=False)
        assert len(found) == 0
        assert found.failures and found.failures[0][0] == 3.0


class TestClassifyResonance:

    def test_gap(self, cos_spec):
        report = classify_resonance(cos_spec, 1)
        assert report.verdict == Verdict.GAP
        assert report.numeric_verdict == Verdict.GAP
        assert not report.inconclusive
        lower, upper = sorted(report.numeric_branch_points, key=lambda z: z.real)
        assert abs(lower.imag) < 1e-8 and abs(upper.imag) < 1e-8
        assert lower.real < 0.25 < upper.real
        assert report.mismatch < 5e-3
        for point in report.numeric_branch_points:
            assert discriminant(cos_spec, point).real == pytest.approx(-2.0, abs=1e-6)

    def test_gap_agrees_with_hill_matrix(self, cos_spec):
        report = classify_resonance(cos_spec, 1)
        hill = hill_eigenvalues_near(cos_spec, 0.5, 0.25, 0.2).values
        for point in report.numeric_branch_points:
            assert np.min(np.abs(hill - point)) < 1e-6

    def test_transversal_band(self, pt_spec):
        report = classify_resonance(pt_spec, 1)
        assert report.verdict == Verdict.TRANSVERSAL_BAND
        assert report.numeric_verdict == Verdict.TRANSVERSAL_BAND
        first, second = report.numeric_branch_points
        assert abs(first - second.conjugate()) < 1e-8
        assert abs(first.imag) > 0.05
        symmetry = next(issue for issue in report.issues if issue.parameter == "conjugation_defect")
        assert symmetry.validation == CheckState.PASSED
        # The second-order shift is about -c_1 c_-1 / 2 = 0.005 at this size
        assert report.mismatch < 1e-2

    def test_transversal_band_at_half_size(self, pt_spec):
        report = classify_resonance(pt_spec.scaled(0.5), 1)
        assert report.verdict == Verdict.TRANSVERSAL_BAND
        assert report.numeric_verdict == Verdict.TRANSVERSAL_BAND
        assert report.mismatch < 5e-3

    def test_one_sided_double_point(self, one_sided_spec):
        report = classify_resonance(one_sided_spec, 1)
        assert report.verdict == Verdict.DOUBLE_POINT_AT_FIRST_ORDER
        assert report.inconclusive
        assert report.multiplicity == Multiplicity.DOUBLE
        first, second = report.numeric_branch_points
        assert abs(first - 0.25) < 1e-6 and abs(second - 0.25) < 1e-6

    def test_report_to_dict(self, pt_spec):
        data = classify_resonance(pt_spec, 1).to_dict()
        assert data["sign"] == -1
        assert data["verdict"] == "TransversalBand"
        assert len(data["numeric_branch_points"]) == 2

    def test_invalid_index(self, pt_spec):
        with pytest.raises(ValueError):
            classify_resonance(pt_spec, 0)

    @pytest.mark.slow
    def test_gap_mismatch_is_second_order(self):
        epsilons = [0.05, 0.025, 0.0125]
        mismatches = [classify_resonance(PotentialSpec.from_coefficients({1: eps, -1: eps}), 1).mismatch
                      for eps in epsilons]
        slope, _ = np.polyfit(np.log(epsilons), np.log(mismatches), 1)
        assert 1.7 <= slope <= 2.3
        assert mismatches[-1] < 1e-3


class TestSpectralLocus:

    def test_project_onto_locus(self, pt_spec):
        energy, value = project_onto_locus(pt_spec, 0.26 + 0.05j)
        assert abs(value.imag) < 1e-9
        assert abs(discriminant(pt_spec, energy).imag) < 1e-8

    def test_free_band_ends_at_zero(self, free_spec):
        window = Window(-1.0, 0.2, -0.1, 0.1)
        locus = trace_locus(free_spec, 0.1, window)
        assert len(locus.arcs) == 1
        arc = locus.arcs[0]
        assert {arc.start_kind, arc.end_kind} == {EndpointKind.BRANCH_POINT, EndpointKind.WINDOW_BOUNDARY}
        assert len(locus.branch_points) == 1
        assert abs(locus.branch_points[0]) < 1e-6
        assert np.max(np.abs(arc.points.imag)) < 1e-9
        assert np.all(np.abs(arc.discriminants.real) <= 2 + 1e-6)

    def test_combine_drops_repeated_arcs(self):
        def arc(points):
            return LocusArc(points=points, discriminants=np.zeros_like(points), start_kind=EndpointKind.BRANCH_POINT,
                            end_kind=EndpointKind.WINDOW_BOUNDARY)

        band = np.linspace(0.0, 0.6, 13) + 0j
        full = arc(band)
        part = arc(band[2:8])
        # The same band traced again from another start, in the other direction
        again = arc(band[::-1] + 1e-4)
        crossing = arc(0.26 + 1j * np.linspace(-0.1, 0.1, 9))
        locus = SpectralLocus.combine([SpectralLocus(arcs=[part]), SpectralLocus(arcs=[full, again]),
                                       SpectralLocus(arcs=[crossing])])
        assert len(locus.arcs) == 2
        assert locus.arcs[0] is full and locus.arcs[1] is crossing

    def test_start_in_gap(self, cos_spec):
        with pytest.raises(LocusStartError):
            trace_locus(cos_spec, 0.25, Window(0.0, 0.5, -0.2, 0.2))

    def test_start_outside_window(self, free_spec):
        with pytest.raises(LocusStartError):
            trace_locus(free_spec, 5.0, Window(0.0, 1.0, -0.1, 0.1))

    @pytest.mark.slow
    def test_transversal_arc_joins_the_branch_points(self, pt_spec):
        locus = trace_locus(pt_spec, 0.25 + 0.05j, Window(0.0, 0.6, -0.3, 0.3))
        arc = locus.arcs[0]
        assert arc.start_kind == EndpointKind.BRANCH_POINT and arc.end_kind == EndpointKind.BRANCH_POINT
        first, second = sorted(locus.branch_points, key=lambda z: z.imag)
        assert abs(first - second.conjugate()) < 1e-6
        assert abs(second - (0.25 + 0.1j)) < 1e-2
        crossings = arc.real_axis_crossings()
        assert crossings and abs(crossings[0] - 0.26) < 2e-2
