from ptbloch.config import EXIT_CODE, EXPERIMENT_TYPES
from ptbloch.divisor import verify_divisor
from ptbloch.errors import ContinuationBreak, NumericalError
from ptbloch.experiments.base import Experiment
from ptbloch.plots import plot_divisor


class DivisorExperiment(Experiment):

    EXPERIMENT_TYPE = EXPERIMENT_TYPES.divisor

    def _run(self):
        exit_code = EXIT_CODE.SUCCESS
        reports = []
        for n in self.config.resonances:
            self.logger.status(f'Divisor of resonance n={n}')
            try:
                report = verify_divisor(self.config.potential, n, samples=self.config.divisor_samples,
                                         scalings=self.config.scalings, scaling_samples=self.config.scaling_samples,
                                         tol=self.config.root_tol, jobs=self.config.jobs)
            except ContinuationBreak as e:
                self.logger.error(f'Resonance n={n}: {e}')
                if e.trajectory is not None and len(e.trajectory):
                    self.write_csv(f"divisor_n{n}_partial.csv", e.trajectory.to_rows())
                reports.append(dict(n=n, error=f"ContinuationBreak: {e}", last_good_x=e.last_good_x))
                exit_code = EXIT_CODE.NUMERICAL_FAILURE
                continue
            except NumericalError as e:
                self.logger.error(f'Resonance n={n}: {e}')
                reports.append(dict(n=n, error=f"{type(e).__name__}: {e}"))
                exit_code = EXIT_CODE.NUMERICAL_FAILURE
                continue

            self.write_csv(f"divisor_n{n}.csv", report.trajectory.to_rows())
            self.add_output(plot_divisor(self.output_path(f"divisor_n{n}.svg"), report,
                                         title=f"{self.config.name or 'divisor'} n={n}"))
            reports.append(report.to_dict())
            self.issues[f"n={n}"] = report.issues
            self.summary[f"n={n}"] = dict(unperturbed=report.unperturbed, focal_mismatch=report.focal_mismatch,
                                          gamma0=report.gamma0, max_deviation=report.max_deviation,
                                          scaling_slope=report.scaling_slope,
                                          rms_residual=report.fit.rms_residual if report.fit else None,
                                          segment=report.segment)

        self.write_json("divisor.json", reports)
        return exit_code
