from ptbloch.config import EXIT_CODE, EXPERIMENT_TYPES
from ptbloch.dubrovin import (DivisorState, HyperellipticData, integrate_flow, loop_closure,
                              reconstruct_potential, trace_formula_potential)
from ptbloch.errors import ConfigError
from ptbloch.experiments.base import Experiment
from ptbloch.plots import plot_dubrovin


class DubrovinExperiment(Experiment):

    EXPERIMENT_TYPE = EXPERIMENT_TYPES.dubrovin

    def _run(self):
        settings = self.config.dubrovin
        try:
            data = HyperellipticData(settings.branch_points)
            state0 = DivisorState.from_gammas(data, settings.gammas, settings.sheets)
        except ValueError as e:
            raise ConfigError(str(e), key="dubrovin")
        if len(settings.gammas) != data.genus:
            raise ConfigError(f"genus {data.genus} needs {data.genus} divisor points, got {len(settings.gammas)}",
                              key="dubrovin.gammas")

        tol = self.config.tol
        self.logger.status(f'Dubrovin flow of genus {data.genus} over x in {list(settings.x_span)}')
        path = integrate_flow(data, state0, settings.x_span, tol, samples=settings.samples)
        potential = trace_formula_potential(data, path)

        rows = path.to_rows()
        for row, u in zip(rows, potential):
            row.update(re_u=u.real, im_u=u.imag)
        self.write_csv("dubrovin.csv", rows)
        self.add_output(plot_dubrovin(self.output_path("dubrovin.svg"), data, path, title=self.config.name))

        results = dict(curve=data.to_dict(), initial_state=state0.to_dict(), final_state=path.final_state.to_dict(),
                       samples=len(path), max_sheet_defect=path.max_sheet_defect)
        if settings.reconstruct:
            reconstruction = reconstruct_potential(data, state0, settings.period_search, tol)
            results["reconstruction"] = reconstruction.to_dict()
            closure = loop_closure(data, state0, reconstruction, tol=tol)
            results["loop_closure"] = closure.to_dict()
            self.logger.result(f"Period {reconstruction.period:.10g}, loop closure defect {closure.defect:.3e} "
                               f"after {max(closure.iterations)} Newton iterations at most")
        self.write_json("dubrovin.json", results)

        self.summary = {"Dubrovin flow": dict(genus=data.genus, samples=len(path),
                                              max_sheet_defect=path.max_sheet_defect,
                                              final_gammas=list(path.final_state.gammas))}
        if settings.reconstruct:
            self.summary["Dubrovin flow"].update(period=reconstruction.period, loop_closure_defect=closure.defect)
        return EXIT_CODE.SUCCESS
