from functools import partial

import numpy as np

from ptbloch.config import EXIT_CODE, EXPERIMENT_TYPES
from ptbloch.experiments.base import Experiment
from ptbloch.monodromy import free_discriminant, monodromy
from ptbloch.plots import plot_discriminant
from ptbloch.utils import parallel_map


def discriminant_row(energy, spec, tol):
    result = monodromy(spec, energy, tol=tol)
    return dict(re_E=energy.real, im_E=energy.imag, re_delta=result.discriminant.real,
                im_delta=result.discriminant.imag, det_defect=result.wronskian_defect)


class DiscriminantExperiment(Experiment):

    EXPERIMENT_TYPE = EXPERIMENT_TYPES.discriminant

    def _run(self):
        grid = self.config.grid
        energies = grid.energies()
        self.logger.status(f'Evaluating Delta at {energies.size} energies with up to {self.config.jobs} workers')
        rows = parallel_map(partial(discriminant_row, spec=self.config.potential, tol=self.config.tol),
                            list(energies), self.config.jobs, logger=self.logger)
        self.write_csv("discriminant.csv", rows)

        deltas = np.array([complex(r["re_delta"], r["im_delta"]) for r in rows])
        results = dict(points=len(rows), max_det_defect=max(r["det_defect"] for r in rows),
                       in_spectrum=int(np.sum((np.abs(deltas.imag) < self.config.trace_tol) &
                                              (np.abs(deltas.real) <= 2))))
        if self.config.potential.is_free:
            # Relative to max(1, |Delta|): the discriminant grows like exp(2 pi sqrt|E|) for E < 0
            oracle = np.array([free_discriminant(e) for e in energies])
            results["max_free_deviation"] = float(np.max(np.abs(deltas - oracle) / np.maximum(1, np.abs(oracle))))
        if grid.is_line:
            self.add_output(plot_discriminant(self.output_path("discriminant.svg"), energies, deltas,
                                              title=self.config.name))
        self.write_json("discriminant.json", results)

        self.summary = {"Discriminant": results}
        self.logger.result(f'Max |det M - 1| over the grid: {results["max_det_defect"]:.3e}')
        return EXIT_CODE.SUCCESS
