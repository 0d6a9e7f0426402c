import math

from ptbloch.config import EXIT_CODE, EXPERIMENT_TYPES, Verdict
from ptbloch.errors import NumericalError
from ptbloch.experiments.base import Experiment
from ptbloch.experiments.locus import trace_starts
from ptbloch.perturbation import resonance_window_radius
from ptbloch.plots import plot_spectrum
from ptbloch.roots import Window
from ptbloch.spectrum import SpectralLocus, classify_resonance


def resonance_starts(report, radius):
    """
    Points on the spectrum near the resonance: the real band on either side, plus a point half way up the
    transversal arc when the branch points are a conjugate pair.
    """
    starts = [complex(report.E0 - 0.5 * radius), complex(report.E0 + 0.5 * radius)]
    if report.verdict == Verdict.TRANSVERSAL_BAND:
        starts.append(complex(report.E0, 0.5 * math.sqrt(abs(report.product))))
    return starts


class ResonanceExperiment(Experiment):

    EXPERIMENT_TYPE = EXPERIMENT_TYPES.resonance

    def _run(self):
        reports = []
        if not self.config.resonances:
            self.logger.status('No resonances listed; nothing to do')

        for n in self.config.resonances:
            self.logger.status(f'Resonance n={n}')
            try:
                report = classify_resonance(self.config.potential, n, tol=self.config.root_tol, jobs=self.config.jobs)
            except NumericalError as e:
                self.logger.warning(f'Resonance n={n}: {e}')
                reports.append(dict(n=n, error=f"{type(e).__name__}: {e}", warning=True))
                continue

            radius = resonance_window_radius(n, report.product)
            window = self.config.window or Window.around(report.E0, radius)
            starts = resonance_starts(report, radius) + list(self.config.locus_starts)
            starts = [s for s in starts if window.contains(s)]
            loci, errors = trace_starts(self.config, starts, window, self.logger)
            locus = SpectralLocus.combine(loci)

            self.write_csv(f"resonance_n{n}_locus.csv", locus.to_rows())
            numeric = list(report.numeric_branch_points) if report.numeric_branch_points else []
            self.add_output(plot_spectrum(self.output_path(f"resonance_n{n}.svg"), [locus], branch_points=numeric,
                                          predicted=report.first_order_branch_points,
                                          title=f"{self.config.name or 'resonance'} n={n}"))
            entry = report.to_dict()
            entry.update(window=window.as_list(), locus=locus.to_dict(),
                         crossings=[arc.real_axis_crossings() for arc in locus.arcs], locus_errors=errors)
            reports.append(entry)
            self.issues[f"n={n}"] = report.issues
            self.summary[f"n={n}"] = dict(verdict=report.verdict.value,
                                          numeric_verdict=report.numeric_verdict.value if report.numeric_verdict
                                          else None,
                                          first_order=report.first_order_branch_points,
                                          numeric=report.numeric_branch_points, mismatch=report.mismatch)

        self.write_json("resonance.json", reports)
        return EXIT_CODE.SUCCESS
