from functools import partial

from ptbloch.config import EXIT_CODE, EXPERIMENT_TYPES
from ptbloch.errors import ConfigError, NumericalError
from ptbloch.experiments.base import Experiment
from ptbloch.plots import plot_spectrum
from ptbloch.spectrum import SpectralLocus, default_window, trace_locus
from ptbloch.utils import parallel_map


def traced_or_error(start, spec, window, options):
    """(locus, None) or (None, message); lets one failing start be reported without losing the others."""
    try:
        return trace_locus(spec, start, window, **options), None
    except NumericalError as e:
        return None, f"{type(e).__name__}: {e}"


def trace_options(config):
    return dict(tol=config.root_tol, trace_tol=config.trace_tol, max_points=config.max_points)


def trace_starts(config, starts, window, logger):
    outcomes = parallel_map(partial(traced_or_error, spec=config.potential, window=window,
                                    options=trace_options(config)),
                            list(starts), config.jobs, logger=logger)
    loci, errors = [], []
    for start, (locus, error) in zip(starts, outcomes):
        if error:
            logger.warning(f'Locus from {start}: {error}')
            errors.append(dict(start=start, error=error))
        else:
            loci.append(locus)
    return loci, errors


class LocusExperiment(Experiment):

    EXPERIMENT_TYPE = EXPERIMENT_TYPES.locus

    def _run(self):
        if not self.config.locus_starts:
            raise ConfigError("at least one start point is needed", key="locus.starts")
        window = self.config.window or default_window()
        self.logger.status(f'Tracing {len(self.config.locus_starts)} arcs in window {window.as_list()}')
        loci, errors = trace_starts(self.config, self.config.locus_starts, window, self.logger)
        locus = SpectralLocus.combine(loci)

        self.write_csv("locus.csv", locus.to_rows())
        self.add_output(plot_spectrum(self.output_path("locus.svg"), [locus], branch_points=locus.branch_points,
                                      title=self.config.name))
        results = dict(window=window.as_list(), locus=locus.to_dict(), branch_points=locus.branch_points,
                       crossings=[arc.real_axis_crossings() for arc in locus.arcs], errors=errors)
        self.write_json("locus.json", results)

        self.summary = {"Locus": dict(arcs=len(locus.arcs), points=len(locus.points),
                                      branch_points=locus.branch_points, failed_starts=len(errors))}
        return EXIT_CODE.NUMERICAL_FAILURE if not loci else EXIT_CODE.SUCCESS
