"""
Complex root finding shared by the spectrum and divisor modules.

All functions of interest here (Delta(E)^2 - 4, the Dirichlet shooting residual) are entire in E but only
available through an ODE integration, so derivatives are taken by finite differences and every Newton run is
confined to a rectangular window of the E-plane.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ptbloch.config import FD_REL_STEP, NEWTON_MAX_ITER, NEWTON_TOL
from ptbloch.errors import ConfigError, NoConvergence, OutOfWindow
from ptbloch.ptb_logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class Window:
    """Closed rectangle [re_min, re_max] x i[im_min, im_max] in the complex plane."""
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min <= self.im_max):
            raise ConfigError(f"empty window {self.as_list()}", key="window")

    @classmethod
    def around(cls, center: complex, radius: float) -> 'Window':
        center = complex(center)
        return cls(center.real - radius, center.real + radius, center.imag - radius, center.imag + radius)

    @classmethod
    def from_sequence(cls, values) -> 'Window':
        if len(values) != 4:
            raise ConfigError("expected [re_min, re_max, im_min, im_max]", key="window")
        return cls(*(float(v) for v in values))

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return (self.re_min - margin <= z.real <= self.re_max + margin and
                self.im_min - margin <= z.imag <= self.im_max + margin)

    def as_list(self):
        return [self.re_min, self.re_max, self.im_min, self.im_max]


def fd_step(z: complex, rel_step: float = FD_REL_STEP) -> float:
    return rel_step * (1.0 + abs(z))


def centered_difference(func: Callable[[complex], complex], z: complex, rel_step: float = FD_REL_STEP) -> complex:
    # Real step: for an analytic func the derivative is direction independent, and a real step keeps real
    # problems real.
    h = fd_step(z, rel_step)
    return (func(z + h) - func(z - h)) / (2 * h)


def forward_difference(func: Callable[[complex], complex], z: complex, fz: complex,
                       rel_step: float = FD_REL_STEP) -> complex:
    h = fd_step(z, rel_step)
    return (func(z + h) - fz) / h


def complex_newton(func: Callable[[complex], complex], seed: complex, *,
                   fprime: Optional[Callable[[complex], complex]] = None,
                   ftol: float = NEWTON_TOL,
                   xtol: float = 1e-13,
                   max_iter: int = NEWTON_MAX_ITER,
                   window: Optional[Window] = None,
                   rel_step: float = FD_REL_STEP,
                   centered: bool = True,
                   max_step: Optional[float] = None):
    """
    Newton iteration for a complex root of func.

    Returns (root, f(root), iterations). Converged means |f| < ftol. If the Newton step has shrunk below
    xtol*(1+|z|) without reaching ftol the iteration is declared stuck at the noise floor of func and
    NoConvergence is raised. Leaving `window` raises OutOfWindow.

    :param fprime: analytic derivative; finite differences (centered, or forward reusing f(z)) when None
    :param max_step: optional cap on |step|, damping the first iterations from a poor seed
    """
    z = complex(seed)
    if window is not None and not window.contains(z):
        raise OutOfWindow(f"seed {z:.6g} outside window {window.as_list()}", seed=seed, last=z, iterations=0)

    for iteration in range(max_iter + 1):
        fz = complex(func(z))
        logger.ridiculous(f"newton it={iteration} z={z:.14g} |f|={abs(fz):.3e}")
        if not np.isfinite(fz):
            raise NoConvergence(f"non-finite residual at {z:.6g}", seed=seed, last=z, iterations=iteration)
        if abs(fz) < ftol:
            return z, fz, iteration
        if iteration == max_iter:
            break

        if fprime is not None:
            dfz = complex(fprime(z))
        elif centered:
            dfz = centered_difference(func, z, rel_step)
        else:
            dfz = forward_difference(func, z, fz, rel_step)
        if dfz == 0 or not np.isfinite(dfz):
            raise NoConvergence(f"vanishing derivative at {z:.6g}", seed=seed, last=z, iterations=iteration)

        step = fz / dfz
        if max_step is not None and abs(step) > max_step:
            step *= max_step / abs(step)
        z = z - step

        if window is not None and not window.contains(z):
            raise OutOfWindow(f"iterate {z:.6g} left window {window.as_list()}", seed=seed, last=z,
                              iterations=iteration + 1)
        if abs(step) < xtol * (1.0 + abs(z)):
            fz = complex(func(z))
            if abs(fz) < ftol:
                return z, fz, iteration + 1
            raise NoConvergence(f"stalled at {z:.6g} with |f|={abs(fz):.3e} above {ftol:.1e}",
                                seed=seed, last=z, iterations=iteration + 1)

    raise NoConvergence(f"no convergence from {complex(seed):.6g} in {max_iter} iterations",
                        seed=seed, last=z, iterations=max_iter)
