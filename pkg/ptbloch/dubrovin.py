"""
Dubrovin flow of the divisor on the hyperelliptic curve w^2 = R(E) = prod_j (E - E_j), 2g+1 branch points.

    gamma_k' = -2i w_k / prod_{j != k} (gamma_k - gamma_j)

The square root w_k is carried in the state so the sheet is followed by continuity and never snapped to a
principal branch. Differentiating w_k^2 = R(gamma_k) along the flow gives w_k' = R'(gamma_k) gamma_k' / (2 w_k),
which after substituting gamma_k' is w_k' = -i R'(gamma_k) / prod_{j != k} (gamma_k - gamma_j). That form has no
1/w_k and passes the turning points (w_k = 0) without a singularity, so it is used everywhere.
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from ptbloch.config import (COLLISION_TOL, DEFAULT_TOL, MIN_BRANCH_SEPARATION, PERIOD, ROOT_TOL,
                            SHEET_TOL)
from ptbloch.divisor import solve_dirichlet
from ptbloch.errors import DivisorCollision, NoConvergence, StepFailure
from ptbloch.potential import PotentialSpec, sampled_potential
from ptbloch.ptb_logging import get_logger

logger = get_logger(__name__)

PERIOD_GRID_POINTS = 4000
RECONSTRUCTION_SAMPLES = 256
COEFFICIENT_CUTOFF = 1e-13
LOOP_SEED_OFFSET = 0.02


@dataclass(frozen=True)
class HyperellipticData:
    branch_points: Tuple[complex, ...]

    def __post_init__(self):
        points = tuple(complex(e) for e in self.branch_points)
        if len(points) < 3 or len(points) % 2 == 0:
            raise ValueError(f"need 2g+1 >= 3 branch points, got {len(points)}")
        for i, first in enumerate(points):
            for second in points[i + 1:]:
                if abs(first - second) <= MIN_BRANCH_SEPARATION:
                    raise ValueError(f"branch points {first} and {second} are not distinct")
        object.__setattr__(self, "branch_points", points)
        coefficients = np.poly(np.array(points))
        object.__setattr__(self, "_coefficients", coefficients)
        object.__setattr__(self, "_derivative", np.polyder(coefficients))

    @property
    def genus(self) -> int:
        return (len(self.branch_points) - 1) // 2

    @property
    def branch_sum(self) -> complex:
        return complex(sum(self.branch_points))

    def R(self, energy):
        return np.polyval(self._coefficients, energy)

    def R_prime(self, energy):
        return np.polyval(self._derivative, energy)

    def to_dict(self):
        return dict(branch_points=list(self.branch_points), genus=self.genus)


@dataclass(frozen=True)
class DivisorState:
    gammas: np.ndarray
    ws: np.ndarray

    def __post_init__(self):
        gammas = np.atleast_1d(np.asarray(self.gammas, dtype=complex))
        ws = np.atleast_1d(np.asarray(self.ws, dtype=complex))
        if gammas.shape != ws.shape:
            raise ValueError(f"{gammas.size} divisor points but {ws.size} sheet values")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "ws", ws)

    @classmethod
    def from_gammas(cls, data: HyperellipticData, gammas: Sequence[complex],
                    sheets: Optional[Sequence[int]] = None) -> 'DivisorState':
        """w_k = sheet_k * sqrt(R(gamma_k)) with the principal root; the caller picks the sheets."""
        gammas = np.asarray(gammas, dtype=complex)
        sheets = np.ones(gammas.size) if sheets is None else np.asarray(sheets, dtype=float)
        if sheets.shape != gammas.shape or not np.all(np.isin(sheets, (1, -1))):
            raise ValueError(f"sheets must be +1/-1, one per divisor point, got {list(sheets)}")
        return cls(gammas=gammas, ws=sheets * np.sqrt(data.R(gammas).astype(complex)))

    def sheet_defect(self, data: HyperellipticData) -> float:
        r = data.R(self.gammas)
        return float(np.max(np.abs(self.ws ** 2 - r) / (1 + np.abs(r))))

    def check(self, data: HyperellipticData, tol: float = SHEET_TOL):
        if self.gammas.size != data.genus:
            raise ValueError(f"genus {data.genus} needs {data.genus} divisor points, got {self.gammas.size}")
        defect = self.sheet_defect(data)
        if defect >= tol:
            raise ValueError(f"state is off the curve: |w^2 - R(gamma)| / (1 + |R|) = {defect:.3e}")
        _check_collisions(self.gammas, x=None)

    def to_dict(self):
        return dict(gammas=list(self.gammas), ws=list(self.ws))


def _check_collisions(gammas, x):
    for k in range(gammas.size):
        for j in range(k + 1, gammas.size):
            if abs(gammas[k] - gammas[j]) < COLLISION_TOL:
                raise DivisorCollision(f"divisor points {k} and {j} collide at {gammas[k]:.10g}"
                                       f"{'' if x is None else f' (x={x:.6g})'}", x=x, indices=(k, j))


def _denominators(gammas: np.ndarray) -> np.ndarray:
    differences = gammas[:, None] - gammas[None, :]
    np.fill_diagonal(differences, 1.0)
    return np.prod(differences, axis=1)


def dubrovin_rhs(data: HyperellipticData, state: DivisorState, x: Optional[float] = None) -> np.ndarray:
    """Velocities gamma_k' using the sheet-resolved w_k of the state."""
    _check_collisions(state.gammas, x)
    return -2j * state.ws / _denominators(state.gammas)


def _flow(data: HyperellipticData):
    genus = data.genus

    def rhs(x, y):
        gammas, ws = y[:genus], y[genus:]
        _check_collisions(gammas, x)
        denominators = _denominators(gammas)
        # w' = R' gamma' / (2w) with gamma' substituted; regular at w = 0
        return np.concatenate([-2j * ws / denominators, -1j * data.R_prime(gammas) / denominators])
    return rhs


def _solve(data, state0, x_span, tol, t_eval=None, dense=False):
    y0 = np.concatenate([state0.gammas, state0.ws]).astype(complex)
    result = solve_ivp(_flow(data), x_span, y0, method='DOP853', rtol=tol, atol=tol, t_eval=t_eval,
                       dense_output=dense)
    if result.status < 0:
        raise StepFailure(f"Dubrovin flow failed on {list(x_span)}: {result.message}")
    return result


@dataclass
class DivisorPath:
    xs: np.ndarray
    gammas: np.ndarray
    ws: np.ndarray
    max_sheet_defect: float = 0.0

    def __len__(self):
        return len(self.xs)

    @property
    def final_state(self) -> DivisorState:
        return DivisorState(gammas=self.gammas[-1], ws=self.ws[-1])

    def to_rows(self) -> List[Dict]:
        rows = []
        for x, gammas, ws in zip(self.xs, self.gammas, self.ws):
            row = dict(x=x)
            for k, (gamma, w) in enumerate(zip(gammas, ws), start=1):
                row.update({f"re_gamma_{k}": gamma.real, f"im_gamma_{k}": gamma.imag,
                            f"re_w_{k}": w.real, f"im_w_{k}": w.imag})
            rows.append(row)
        return rows


def _path_from(data, xs, ys) -> DivisorPath:
    genus = data.genus
    gammas = ys[:genus].T
    ws = ys[genus:].T
    r = data.R(gammas)
    defect = float(np.max(np.abs(ws ** 2 - r) / (1 + np.abs(r)))) if len(xs) else 0.0
    return DivisorPath(xs=np.asarray(xs, dtype=float), gammas=gammas, ws=ws, max_sheet_defect=defect)


def integrate_flow(data: HyperellipticData, state0: DivisorState, x_span: Tuple[float, float],
                   tol: float = DEFAULT_TOL, *, samples: Optional[int] = None, t_eval=None) -> DivisorPath:
    """
    Integrate the flow over x_span (either direction). With `samples` the path is reported on a uniform grid
    of samples+1 points, with `t_eval` on the given points, otherwise at the integrator's own steps.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    state0.check(data)
    x0, x1 = (float(v) for v in x_span)
    if x0 == x1:
        return DivisorPath(xs=np.array([x0]), gammas=state0.gammas[None, :].copy(), ws=state0.ws[None, :].copy(),
                           max_sheet_defect=state0.sheet_defect(data))
    if samples is not None and t_eval is None:
        t_eval = np.linspace(x0, x1, samples + 1)
    result = _solve(data, state0, (x0, x1), tol, t_eval=t_eval)
    path = _path_from(data, result.t, result.y)
    logger.verbose(f"Dubrovin flow over [{x0}, {x1}]: {len(path)} samples, {result.nfev} evaluations, sheet "
                   f"defect {path.max_sheet_defect:.2e}")
    return path


def trace_formula_potential(data: HyperellipticData, path: DivisorPath) -> np.ndarray:
    """u(x) = sum_j E_j - 2 sum_k gamma_k(x) at each sample of the path."""
    return data.branch_sum - 2 * np.sum(np.asarray(path.gammas, dtype=complex), axis=1)


def _crossings(func, xs, values, direction=0):
    found = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], values[:-1], values[1:]):
        if fa * fb < 0 or (fb == 0 and fa != 0):
            sense = 1 if fb > fa else -1
            if direction and sense != direction:
                continue
            root = b if fb == 0 else brentq(func, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps)
            found.append((root, sense))
    return found


def detect_period(data: HyperellipticData, state0: DivisorState, x_max: float, tol: float = DEFAULT_TOL, *,
                  grid_points: int = PERIOD_GRID_POINTS) -> float:
    """
    First return of Re gamma_1 to its starting value moving in the starting direction. A start at rest (a
    turning point) is timed between two like crossings of the mid level instead.
    """
    state0.check(data)
    result = _solve(data, state0, (0.0, float(x_max)), tol, dense=True)
    solution = result.sol

    def level_function(level):
        return lambda x: solution(x)[0].real - level

    xs = np.linspace(0.0, float(x_max), grid_points)
    re_gamma = solution(xs)[0].real
    velocity = dubrovin_rhs(data, state0)[0].real
    if abs(velocity) > math.sqrt(tol):
        level = state0.gammas[0].real
        crossings = _crossings(level_function(level), xs, re_gamma - level, direction=1 if velocity > 0 else -1)
        crossings = [(x, s) for x, s in crossings if x > xs[1]]
        if crossings:
            return float(crossings[0][0])
    else:
        level = (re_gamma.min() + re_gamma.max()) / 2
        crossings = _crossings(level_function(level), xs, re_gamma - level, direction=1)
        if len(crossings) >= 2:
            return float(crossings[1][0] - crossings[0][0])
    raise NoConvergence(f"no period of the divisor motion found within x <= {x_max}", seed=state0.gammas[0])


@dataclass(frozen=True)
class PeriodicReconstruction:
    """
    The trace-formula potential of a genus-1 real motion, rescaled to period 2*pi:
    u~(s) = kappa^2 (u(origin + kappa s) - mean(u)) with kappa = period / (2*pi), and energies E~ = kappa^2 E - mean.
    """
    spec: PotentialSpec
    mean: float
    scale: float
    origin: float
    period: float

    def to_scaled_energy(self, energy):
        return self.scale ** 2 * energy - self.mean

    def from_scaled_energy(self, energy):
        return (energy + self.mean) / self.scale ** 2

    def to_scaled_x(self, x):
        return (x - self.origin) / self.scale

    def to_dict(self):
        return dict(potential=self.spec.to_dict(), mean=self.mean, scale=self.scale, origin=self.origin,
                    period=self.period)


def reconstruct_potential(data: HyperellipticData, state0: DivisorState, x_max: float, tol: float = DEFAULT_TOL, *,
                          samples: int = RECONSTRUCTION_SAMPLES,
                          harmonics: Optional[int] = None) -> PeriodicReconstruction:
    """
    Genus-1 only. The samples start at a turning point (w = 0), about which the potential of a real motion is
    even, so its Fourier coefficients are real and the result is a PT potential.
    """
    if data.genus != 1:
        raise ValueError(f"reconstruction is implemented for genus 1, got genus {data.genus}")
    period = detect_period(data, state0, x_max, tol)
    result = _solve(data, state0, (0.0, 2 * period), tol, dense=True)
    solution = result.sol

    xs = np.linspace(0.0, period, PERIOD_GRID_POINTS)
    im_w = solution(xs)[1].imag
    turning = _crossings(lambda x: solution(x)[1].imag, xs, im_w)
    origin = float(turning[0][0]) if turning else 0.0
    if not turning and abs(state0.ws[0]) > math.sqrt(tol):
        raise NoConvergence("the motion has no turning point within one period; it is not a real oscillation")

    kappa = period / PERIOD
    points = origin + period * np.arange(samples) / samples
    gammas = solution(points)[0]
    values = (data.branch_sum - 2 * gammas) * kappa ** 2
    if np.max(np.abs(values.imag)) > 1e-6 * (1 + np.max(np.abs(values))):
        raise ValueError("trace-formula potential is not real along this motion")
    spec, mean = sampled_potential(values.real, harmonics or samples // 2 - 1)
    largest = max((abs(v) for _, v in spec.terms), default=0.0)
    spec = PotentialSpec.from_coefficients({index: value.real for index, value in spec.terms
                                            if abs(value) > COEFFICIENT_CUTOFF * largest})
    logger.verbose(f"Reconstructed genus-1 potential: period {period:.10g}, origin {origin:.10g}, "
                   f"{len(spec.terms)} harmonics")
    return PeriodicReconstruction(spec=spec, mean=float(mean), scale=kappa, origin=origin, period=period)


@dataclass(frozen=True)
class LoopClosure:
    xs: Tuple[float, ...]
    flow_gammas: Tuple[complex, ...]
    dirichlet_gammas: Tuple[complex, ...]
    iterations: Tuple[int, ...]

    @property
    def defect(self) -> float:
        return float(max(abs(a - b) for a, b in zip(self.flow_gammas, self.dirichlet_gammas)))

    def to_dict(self):
        return dict(xs=list(self.xs), flow_gammas=list(self.flow_gammas),
                    dirichlet_gammas=list(self.dirichlet_gammas), iterations=list(self.iterations),
                    defect=self.defect)


def loop_closure(data: HyperellipticData, state0: DivisorState, reconstruction: PeriodicReconstruction,
                 points: int = 5, tol: float = DEFAULT_TOL, seed_offset: float = LOOP_SEED_OFFSET) -> LoopClosure:
    """
    Compare the flow's gamma(x) with the Dirichlet eigenvalue of the reconstructed potential at `points`
    positions spread over one period. Each Newton solve starts `seed_offset` gap widths from the flow value,
    towards the middle of the gap, so it has to converge on its own.
    """
    low, high = sorted(e.real for e in data.branch_points)[1:3]
    middle, width = (low + high) / 2, high - low
    xs = reconstruction.origin + reconstruction.period * (np.arange(points) + 0.5) / points
    path = integrate_flow(data, state0, (0.0, float(xs[-1])), tol, t_eval=xs)
    found, iterations = [], []
    for x, gamma in zip(path.xs, path.gammas[:, 0]):
        seed = gamma + math.copysign(seed_offset * width, middle - gamma.real)
        scaled, _, steps = solve_dirichlet(reconstruction.spec, float(reconstruction.to_scaled_x(x)),
                                           reconstruction.to_scaled_energy(seed), tol=ROOT_TOL)
        found.append(complex(reconstruction.from_scaled_energy(scaled)))
        iterations.append(int(steps))
    closure = LoopClosure(xs=tuple(float(x) for x in path.xs), flow_gammas=tuple(complex(g) for g in path.gammas[:, 0]),
                          dirichlet_gammas=tuple(found), iterations=tuple(iterations))
    logger.verbose(f"Loop closure over {points} points: max |gamma_flow - gamma_dirichlet| = {closure.defect:.3e}, "
                   f"Newton iterations {list(iterations)}")
    return closure
