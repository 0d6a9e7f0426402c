"""
Monodromy of  -psi'' + u(x) psi = E psi  over one period.

The first-order system (psi, psi')' = (psi', (u - E) psi) is integrated with scipy's DOP853 (8th order
embedded Runge-Kutta) for complex E. Both columns of the fundamental system are carried in one state vector so
they share a step sequence: the one-step maps are then linear in the data and det M deviates from 1 only by
the accumulated local defects, even when the solutions grow like exp(2*pi*sqrt(-E)).
"""
import cmath
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.integrate import DOP853

from ptbloch.config import DEFAULT_TOL, MAX_STEPS, PERIOD
from ptbloch.errors import StepFailure
from ptbloch.potential import PotentialSpec
from ptbloch.ptb_logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class MonodromyResult:
    matrix: np.ndarray
    energy: complex
    base_point: float
    discriminant: complex
    multipliers: Tuple[complex, complex]
    steps: int = field(default=0, compare=False)

    @property
    def det(self) -> complex:
        m = self.matrix
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    @property
    def wronskian_defect(self) -> float:
        return abs(self.det - 1.0)

    def to_dict(self):
        return dict(energy=self.energy, base_point=self.base_point, discriminant=self.discriminant,
                    multipliers=list(self.multipliers), matrix=self.matrix.tolist(),
                    wronskian_defect=self.wronskian_defect, steps=self.steps)


def _schrodinger_rhs(spec: PotentialSpec, energy: complex):
    indices = spec.indices
    values = spec.values
    free = len(values) == 0

    def rhs(x, y):
        q = (-energy) if free else (np.exp(1j * indices * x) @ values - energy)
        dy = np.empty_like(y)
        dy[0::2] = y[1::2]
        dy[1::2] = q * y[0::2]
        return dy
    return rhs


def transport(spec: PotentialSpec, energy: complex, x0: float, initial, tol: float = DEFAULT_TOL,
              max_steps: int = MAX_STEPS, span: float = PERIOD):
    """
    Integrate the Cauchy problem(s) with data `initial` = (psi, psi', [psi, psi', ...]) at x0 up to x0+span.
    Returns (final state, number of accepted steps).
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    y0 = np.asarray(initial, dtype=complex)
    if span == 0:
        return y0.copy(), 0
    solver = DOP853(_schrodinger_rhs(spec, complex(energy)), x0, y0, x0 + span,
                    rtol=tol, atol=tol, first_step=min(abs(span), 0.1))
    steps = 0
    while solver.status == 'running':
        message = solver.step()
        steps += 1
        if solver.status == 'failed':
            raise StepFailure(f"integrator failed at x={solver.t:.6g} for E={energy}: {message}",
                              energy=energy, steps=steps)
        if steps > max_steps:
            raise StepFailure(f"step budget {max_steps} exhausted at x={solver.t:.6g} for E={energy}",
                              energy=energy, steps=steps)
    return solver.y, steps


def bloch_multipliers(discriminant: complex) -> Tuple[complex, complex]:
    """
    Roots of lambda^2 - Delta*lambda + 1 = 0. The larger one comes from the quadratic formula with the sign that
    avoids cancellation, the other is its reciprocal, so lambda_+ * lambda_- = 1 to rounding.
    """
    delta = complex(discriminant)
    root = cmath.sqrt(delta * delta - 4)
    if (delta.conjugate() * root).real < 0:
        root = -root
    larger = (delta + root) / 2
    return larger, 1 / larger


def monodromy(spec: PotentialSpec, energy: complex, x0: float = 0.0, tol: float = DEFAULT_TOL,
              max_steps: int = MAX_STEPS) -> MonodromyResult:
    """Monodromy matrix with columns the solutions with Cauchy data (1, 0) and (0, 1) at x0, read at x0 + 2*pi."""
    energy = complex(energy)
    final, steps = transport(spec, energy, x0, (1, 0, 0, 1), tol=tol, max_steps=max_steps)
    matrix = np.array([[final[0], final[2]],
                       [final[1], final[3]]], dtype=complex)
    trace = complex(matrix[0, 0] + matrix[1, 1])
    result = MonodromyResult(matrix=matrix, energy=energy, base_point=float(x0), discriminant=trace,
                             multipliers=bloch_multipliers(trace), steps=steps)
    logger.ridiculous(f"monodromy E={energy:.12g} x0={x0:.4g} Delta={trace:.14g} steps={steps}")
    return result


def discriminant(spec: PotentialSpec, energy: complex, x0: float = 0.0, tol: float = DEFAULT_TOL) -> complex:
    """Hill discriminant Delta(E) = trace of the monodromy; independent of x0 up to integration error."""
    return monodromy(spec, energy, x0=x0, tol=tol).discriminant


def free_discriminant(energy: complex) -> complex:
    """2 cos(2 pi sqrt(E)) with the principal root; the oracle for u = 0."""
    return 2 * cmath.cos(PERIOD * cmath.sqrt(complex(energy)))
