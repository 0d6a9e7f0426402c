import argparse
import copy
import math
import sys

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ptbloch import VERSION
from ptbloch.config import (DEFAULT_JOBS, DEFAULT_RESULTS_DIR, DEFAULT_TOL, DIVISOR_SAMPLES,
                            EPSILON_SCALINGS, EXPERIMENT_TYPES, EXIT_CODE, NEWTON_TOL, ROOT_TOL, SCALING_SAMPLES,
                            TRACE_MAX_POINTS, TRACE_TOL)
from ptbloch.errors import ConfigError, InvalidPotential
from ptbloch.potential import PotentialSpec
from ptbloch.roots import Window
from ptbloch.utils import complex_from_json, read_config_from_file, update_nested_dict

help_messages = dict(
    sub_commands="Select an experiment to run.",
    config="Path to a YAML (or JSON) experiment file. Names of the shipped files under configs/experiments "
           "(e.g. 'gap_resonance') are also accepted. A JSON output of an earlier run can be passed as well; its "
           "embedded 'config' entry is used.",
    out="Directory where results are written. Each experiment writes into <out>/<command>/.",
    jobs="Maximum number of worker processes for grid scans and independent root searches.",
    tol="Relative and absolute tolerance of the ODE integrator used for Delta and the monodromy. Overrides "
        "tolerances.tol from the config file.",
    discriminant="Evaluate the Floquet discriminant Delta(E) on a grid of energies and write it as CSV.",
    resonance="Classify each listed resonance from the sign of c_n c_-n, locate the numerical branch points and "
              "trace the spectrum near them.",
    divisor="Trace the divisor point gamma(x) of each listed resonance, fit an ellipse and compare its foci "
            "with the numerical branch points.",
    dubrovin="Integrate the Dubrovin flow of a divisor on a hyperelliptic spectral curve.",
    locus="Trace spectral arcs (Im Delta = 0, |Re Delta| <= 2) from the configured start points.",
    debug="Enable debug mode. Uncaught exceptions drop into the post-mortem debugger.",
    verbose="Enable verbose logging.",
    stream_log_level="Log level of the console output (DEBUG, VERBOSE, INFO, STATUS, WARNING, ...).",
)

prog_descriptions = dict(
    discriminant="Floquet discriminant scan",
    resonance="Gap / transversal band classification at the resonances n^2/4",
    divisor="Divisor trajectories and their ellipse fits",
    dubrovin="Dubrovin flow on a hyperelliptic curve",
    locus="Spectral arc tracing",
)

DEFAULT_CONFIG = dict(
    name=None,
    potential=dict(coefficients={}),
    window=None,
    resonances=[],
    tolerances=dict(tol=DEFAULT_TOL, root_tol=ROOT_TOL, newton_tol=NEWTON_TOL, trace_tol=TRACE_TOL),
    grid=dict(re=[0.0, 4.0], im=[0.0, 0.0], points=[401, 1]),
    locus=dict(starts=[], max_points=TRACE_MAX_POINTS),
    divisor=dict(samples=DIVISOR_SAMPLES, scalings=list(EPSILON_SCALINGS), scaling_samples=SCALING_SAMPLES),
    dubrovin=dict(branch_points=[], gammas=[], sheets=None, x_span=[0.0, 20.0], samples=400,
                  reconstruct=False, period_search=20.0),
    out=DEFAULT_RESULTS_DIR,
    jobs=DEFAULT_JOBS,
)


@dataclass(frozen=True)
class EnergyGrid:
    re: tuple
    im: tuple
    points: tuple

    @property
    def is_line(self) -> bool:
        return self.points[1] == 1

    def energies(self) -> np.ndarray:
        re = np.linspace(self.re[0], self.re[1], self.points[0])
        im = np.linspace(self.im[0], self.im[1], self.points[1]) if self.points[1] > 1 else np.array([self.im[0]])
        return (re[None, :] + 1j * im[:, None]).ravel()


@dataclass(frozen=True)
class DubrovinConfig:
    branch_points: tuple
    gammas: tuple
    sheets: Optional[tuple]
    x_span: tuple
    samples: int
    reconstruct: bool
    period_search: float


@dataclass
class ExperimentConfig:
    command: str
    potential: PotentialSpec
    resonances: List[int]
    tol: float
    root_tol: float
    newton_tol: float
    trace_tol: float
    out: str
    jobs: int
    name: Optional[str] = None
    window: Optional[Window] = None
    grid: Optional[EnergyGrid] = None
    locus_starts: List[complex] = field(default_factory=list)
    max_points: int = TRACE_MAX_POINTS
    divisor_samples: int = DIVISOR_SAMPLES
    scalings: List[float] = field(default_factory=lambda: list(EPSILON_SCALINGS))
    scaling_samples: int = SCALING_SAMPLES
    dubrovin: Optional[DubrovinConfig] = None
    raw: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        """The effective configuration; passing it back through --config rebuilds this object."""
        return copy.deepcopy(self.raw)


def _number(raw, key, positive=False, integer=False, minimum=None):
    if isinstance(raw, bool) or raw is None:
        raise ConfigError(f"expected a number, got {raw!r}", key=key)
    try:
        value = int(raw) if integer else float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {raw!r}", key=key)
    if integer and float(raw) != value:
        raise ConfigError(f"expected an integer, got {raw!r}", key=key)
    if not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {raw!r}", key=key)
    if positive and value <= 0:
        raise ConfigError(f"must be positive, got {raw!r}", key=key)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {raw!r}", key=key)
    return value


def _pair(raw, key):
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ConfigError(f"expected [low, high], got {raw!r}", key=key)
    return tuple(_number(v, f"{key}[{i}]") for i, v in enumerate(raw))


def _complex_list(raw, key) -> List[complex]:
    if not isinstance(raw, (list, tuple)):
        raise ConfigError(f"expected a list of complex numbers, got {raw!r}", key=key)
    values = []
    for i, item in enumerate(raw):
        try:
            value = complex_from_json(item)
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e), key=f"{key}[{i}]")
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise ConfigError(f"expected a finite number, got {item!r}", key=f"{key}[{i}]")
        values.append(value)
    return values


def _section(raw, key) -> Dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"expected a mapping, got {raw!r}", key=key)
    return raw


def _check_keys(section: Dict, defaults: Dict, prefix: str = ""):
    for key in section:
        if key not in defaults:
            raise ConfigError("unknown configuration key", key=f"{prefix}{key}")


def _grid(raw) -> EnergyGrid:
    raw = _section(raw, "grid")
    _check_keys(raw, DEFAULT_CONFIG["grid"], "grid.")
    re = _pair(raw["re"], "grid.re")
    im = _pair(raw["im"], "grid.im")
    points = raw["points"]
    points = [points, 1] if not isinstance(points, (list, tuple)) else list(points)
    if len(points) != 2:
        raise ConfigError(f"expected n or [n_re, n_im], got {raw['points']!r}", key="grid.points")
    points = tuple(_number(p, f"grid.points[{i}]", integer=True, minimum=1) for i, p in enumerate(points))
    if re[1] < re[0] or im[1] < im[0]:
        raise ConfigError("empty grid", key="grid")
    return EnergyGrid(re=re, im=im, points=points)


def _dubrovin(raw) -> DubrovinConfig:
    raw = _section(raw, "dubrovin")
    _check_keys(raw, DEFAULT_CONFIG["dubrovin"], "dubrovin.")
    sheets = raw.get("sheets")
    if sheets is not None:
        if not isinstance(sheets, (list, tuple)) or any(s not in (1, -1) for s in sheets):
            raise ConfigError(f"sheets must be a list of +1/-1, got {sheets!r}", key="dubrovin.sheets")
        sheets = tuple(int(s) for s in sheets)
    reconstruct = raw["reconstruct"]
    if not isinstance(reconstruct, bool):
        raise ConfigError(f"expected true or false, got {reconstruct!r}", key="dubrovin.reconstruct")
    return DubrovinConfig(
        branch_points=tuple(_complex_list(raw["branch_points"], "dubrovin.branch_points")),
        gammas=tuple(_complex_list(raw["gammas"], "dubrovin.gammas")),
        sheets=sheets,
        x_span=_pair(raw["x_span"], "dubrovin.x_span"),
        samples=_number(raw["samples"], "dubrovin.samples", integer=True, minimum=1),
        reconstruct=reconstruct,
        period_search=_number(raw["period_search"], "dubrovin.period_search", positive=True),
    )


def _unwrap_output(raw: Dict) -> Dict:
    # A JSON output of an earlier run carries its effective configuration under "config"
    if "results" in raw and isinstance(raw.get("config"), dict):
        return raw["config"]
    return raw


def build_experiment_config(command: str, file_config: Optional[Dict] = None, overrides: Optional[Dict] = None
                            ) -> ExperimentConfig:
    """
    Merge defaults, the file contents and CLI overrides (in that order) and validate the result. Every problem
    raises ConfigError naming the dotted key.
    """
    file_config = _unwrap_output(file_config or {})
    _check_keys(file_config, DEFAULT_CONFIG)
    for key in ("tolerances", "grid", "locus", "divisor", "dubrovin"):
        _section(file_config.get(key), key)
    raw = update_nested_dict(copy.deepcopy(DEFAULT_CONFIG), file_config)
    raw = update_nested_dict(raw, {k: v for k, v in (overrides or {}).items() if v is not None})

    try:
        potential = PotentialSpec.from_dict(raw["potential"])
    except InvalidPotential as e:
        raise ConfigError(str(e), key="potential")

    resonances = raw["resonances"]
    if not isinstance(resonances, (list, tuple)):
        raise ConfigError(f"expected a list of integers, got {resonances!r}", key="resonances")
    resonances = [_number(n, f"resonances[{i}]", integer=True, minimum=1) for i, n in enumerate(resonances)]

    tolerances = raw["tolerances"]
    _check_keys(tolerances, DEFAULT_CONFIG["tolerances"], "tolerances.")
    tol, root_tol, newton_tol, trace_tol = (_number(tolerances[k], f"tolerances.{k}", positive=True)
                                            for k in ("tol", "root_tol", "newton_tol", "trace_tol"))
    raw["tolerances"] = dict(tol=tol, root_tol=root_tol, newton_tol=newton_tol, trace_tol=trace_tol)

    window = None
    if raw["window"] is not None:
        if not isinstance(raw["window"], (list, tuple)):
            raise ConfigError(f"expected [re_min, re_max, im_min, im_max], got {raw['window']!r}", key="window")
        window = Window.from_sequence([_number(v, f"window[{i}]") for i, v in enumerate(raw["window"])])

    locus = raw["locus"]
    _check_keys(locus, DEFAULT_CONFIG["locus"], "locus.")
    divisor = raw["divisor"]
    _check_keys(divisor, DEFAULT_CONFIG["divisor"], "divisor.")
    scalings = divisor["scalings"] or []
    if not isinstance(scalings, (list, tuple)):
        raise ConfigError(f"expected a list of positive factors, got {scalings!r}", key="divisor.scalings")

    if not isinstance(raw["out"], str) or not raw["out"]:
        raise ConfigError(f"expected a directory path, got {raw['out']!r}", key="out")

    return ExperimentConfig(
        command=command,
        name=raw["name"],
        potential=potential,
        resonances=resonances,
        tol=tol, root_tol=root_tol, newton_tol=newton_tol, trace_tol=trace_tol,
        out=raw["out"],
        jobs=_number(raw["jobs"], "jobs", integer=True, minimum=1),
        window=window,
        grid=_grid(raw["grid"]),
        locus_starts=_complex_list(locus["starts"], "locus.starts"),
        max_points=_number(locus["max_points"], "locus.max_points", integer=True, minimum=2),
        divisor_samples=_number(divisor["samples"], "divisor.samples", integer=True, minimum=2),
        scalings=[_number(s, f"divisor.scalings[{i}]", positive=True) for i, s in enumerate(scalings)],
        scaling_samples=_number(divisor["scaling_samples"], "divisor.scaling_samples", integer=True, minimum=2),
        dubrovin=_dubrovin(raw["dubrovin"]),
        raw=raw,
    )


def add_universal_arguments(parser):
    standard_args = parser.add_argument_group("Standard Arguments")
    standard_args.add_argument('--config', '-c', type=str, help=help_messages['config'])
    standard_args.add_argument('--out', '-o', type=str, help=help_messages['out'])
    standard_args.add_argument('--jobs', '-j', type=int, help=help_messages['jobs'])
    standard_args.add_argument('--tol', type=float, help=help_messages['tol'])

    view_args = parser.add_argument_group("View Only")
    view_args.add_argument('--debug', action="store_true", help=help_messages['debug'])
    view_args.add_argument('--verbose', action="store_true", help=help_messages['verbose'])
    view_args.add_argument('--stream-log-level', type=str, help=help_messages['stream_log_level'])


def parse_arguments(argv=None):
    parser = argparse.ArgumentParser(description="Bloch spectral experiments for PT-symmetric periodic "
                                                 "Schroedinger operators")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub_programs = parser.add_subparsers(dest="program", required=True, help=help_messages['sub_commands'])

    for experiment in EXPERIMENT_TYPES:
        sub_parser = sub_programs.add_parser(experiment.value, description=prog_descriptions[experiment.value],
                                             help=help_messages[experiment.value])
        add_universal_arguments(sub_parser)

    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_help(sys.stderr)
        sys.exit(EXIT_CODE.CONFIG_ERROR)

    return parser.parse_args(argv)


def load_experiment_config(args) -> ExperimentConfig:
    file_config = read_config_from_file(args.config) if getattr(args, "config", None) else {}
    overrides = dict(out=getattr(args, "out", None), jobs=getattr(args, "jobs", None))
    if getattr(args, "tol", None) is not None:
        overrides["tolerances"] = dict(tol=args.tol)
    return build_experiment_config(args.program, file_config, overrides)


if __name__ == "__main__":
    args = parse_arguments()
    import pprint
    pprint.pprint(vars(args))
