"""
First-order perturbation theory of the zero potential near the resonant points E0 = n^2/4.

Near E0 the Bloch function with multiplier exp(i(n/2 + delta)x) lives, to first order, in the span of the two
free waves exp(i(+-n/2 + delta)x). Restricting the operator to that span gives the 2x2 block

    P_n = [[E0 + delta^2 + n delta, c_n], [c_{-n}, E0 + delta^2 - n delta]]

whose eigenvalues E0 + delta^2 +- sqrt(n^2 delta^2 + c_n c_{-n}) decide whether the double point opens into a
real gap (c_n c_{-n} > 0), stays closed at first order (= 0) or produces a complex arc of spectrum crossing the
real axis (< 0).
"""
import cmath
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from ptbloch.config import (Degeneracy, ELLIPSE_SAMPLES, HILL_HALF_SIZE, Multiplicity, PERIOD, Verdict)
from ptbloch.errors import DegenerateDivisor, DegenerateVector, QRNoConvergence
from ptbloch.potential import PotentialSpec
from ptbloch.ptb_logging import get_logger
from ptbloch.rules import CheckState

logger = get_logger(__name__)

# Relative size under which an axis, a product or a vector norm counts as zero.
ZERO_TOL = 1e-15


def resonant_energy(n: int) -> float:
    return n * n / 4.0


def first_order_branch_points(n: int, c_n: float, c_minus_n: float) -> Tuple[complex, complex]:
    """(E0 + s, E0 - s) with s = sqrt(c_n c_{-n}); s is imaginary when the product is negative."""
    root = cmath.sqrt(c_n * c_minus_n)
    e0 = resonant_energy(n)
    return complex(e0 + root), complex(e0 - root)


def first_order_verdict(product: float) -> Verdict:
    if product > 0:
        return Verdict.GAP
    if product < 0:
        return Verdict.TRANSVERSAL_BAND
    return Verdict.DOUBLE_POINT_AT_FIRST_ORDER


def resonance_window_radius(n: int, product: float) -> float:
    """
    Half width of the square searched around E0. Wide enough for twice the first-order splitting but never
    reaching the neighbouring resonances of the same parity.
    """
    return max(2.0 * math.sqrt(abs(product)), (2 * n + 1) / 8.0)


@dataclass
class ResonanceReport:
    REPORT_TYPE = "resonance"

    n: int
    E0: float
    c_n: float
    c_minus_n: float
    product: float
    first_order_branch_points: Tuple[complex, complex]
    verdict: Verdict
    numeric_branch_points: Optional[Tuple[complex, complex]] = None
    numeric_verdict: Optional[Verdict] = None
    multiplicity: Optional[Multiplicity] = None
    mismatch: Optional[float] = None
    failures: List[str] = field(default_factory=list)
    issues: List = field(default_factory=list)

    @property
    def inconclusive(self) -> bool:
        # A vanishing product says nothing beyond first order
        return self.verdict == Verdict.DOUBLE_POINT_AT_FIRST_ORDER

    @property
    def warning(self) -> bool:
        return any(issue.validation != CheckState.PASSED for issue in self.issues)

    def to_dict(self) -> Dict:
        return dict(
            n=self.n, E0=self.E0, c_n=self.c_n, c_minus_n=self.c_minus_n, product=self.product,
            sign=int(np.sign(self.product)),
            first_order_branch_points=list(self.first_order_branch_points),
            numeric_branch_points=list(self.numeric_branch_points) if self.numeric_branch_points else None,
            verdict=self.verdict.value, numeric_verdict=self.numeric_verdict.value if self.numeric_verdict else None,
            inconclusive=self.inconclusive,
            multiplicity=self.multiplicity.value if self.multiplicity else None,
            mismatch=self.mismatch, warning=self.warning, failures=list(self.failures),
            issues=[issue.to_dict() for issue in self.issues],
        )


def hill_matrix(spec: PotentialSpec, alpha: float, half_size: int = HILL_HALF_SIZE) -> np.ndarray:
    """
    Truncated Hill matrix in the basis exp(i(m + alpha)x), m = -N..N:
    H[m, k] = delta_{mk} (m + alpha)^2 + c_{m-k}.
    """
    if half_size < 1:
        raise ValueError(f"half_size must be at least 1, got {half_size}")
    modes = np.arange(-half_size, half_size + 1)
    matrix = np.diag((modes + alpha).astype(complex) ** 2)
    offsets = modes[:, None] - modes[None, :]
    for index, value in spec.terms:
        matrix[offsets == index] += value
    return matrix


def hill_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    """All eigenvalues of a dense non-Hermitian matrix, sorted by real part then imaginary part."""
    try:
        values = scipy.linalg.eigvals(matrix, overwrite_a=False, check_finite=True)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise QRNoConvergence(f"eigenvalue iteration failed for a {matrix.shape} matrix: {e}")
    values = np.asarray(values, dtype=complex)
    return values[np.lexsort((values.imag, values.real))]


@dataclass(frozen=True)
class HillSpectrum:
    values: np.ndarray
    half_size: int
    center: complex
    radius: float
    doubling_shift: float

    def to_dict(self):
        return dict(values=list(self.values), half_size=self.half_size, center=self.center, radius=self.radius,
                    doubling_shift=self.doubling_shift)


def hill_eigenvalues_near(spec: PotentialSpec, alpha: float, center: complex, radius: float,
                          half_size: int = HILL_HALF_SIZE) -> HillSpectrum:
    """
    Hill eigenvalues in the disc |E - center| <= radius at truncation N, with the convergence check against 2N:
    doubling_shift is the largest distance from a value at N to the nearest value at 2N.
    """
    def in_disc(values):
        return values[np.abs(values - center) <= radius]

    coarse = in_disc(hill_eigenvalues(hill_matrix(spec, alpha, half_size)))
    fine = in_disc(hill_eigenvalues(hill_matrix(spec, alpha, 2 * half_size)))
    if coarse.size and fine.size:
        shift = float(max(np.min(np.abs(fine - value)) for value in coarse))
    elif coarse.size == fine.size:
        shift = 0.0
    else:
        shift = math.inf
    logger.verbose(f"Hill eigenvalues near {center} (N={half_size}): {coarse}, doubling shift {shift:.3e}")
    return HillSpectrum(values=coarse, half_size=half_size, center=complex(center), radius=radius,
                        doubling_shift=shift)


def resonant_block(spec: PotentialSpec, n: int, delta) -> np.ndarray:
    if n < 1:
        raise ValueError(f"resonance index must be >= 1, got {n}")
    c_n, c_minus_n = spec.resonant_pair(n)
    diagonal = resonant_energy(n) + delta * delta
    return np.array([[diagonal + n * delta, c_n],
                     [c_minus_n, diagonal - n * delta]])


def block_eigenvalues(n: int, delta, c_n: float, c_minus_n: float) -> Tuple[complex, complex]:
    lam = cmath.sqrt(n * n * delta * delta + c_n * c_minus_n)
    base = resonant_energy(n) + delta * delta
    return complex(base + lam), complex(base - lam)


@dataclass(frozen=True)
class BlochVector:
    """
    Psi(x) = a_plus exp(i k_plus x) + a_minus exp(i k_minus x), k_+- = +-n/2 + delta, an eigenvector of the
    resonant block with eigenvalue energy = E0 + delta^2 + lam. Amplitudes are fixed only up to a multiple.
    """
    n: int
    delta: complex
    lam: complex
    a_plus: complex
    a_minus: complex

    @property
    def k_plus(self) -> complex:
        return self.n / 2 + self.delta

    @property
    def k_minus(self) -> complex:
        return -self.n / 2 + self.delta

    @property
    def energy(self) -> complex:
        return resonant_energy(self.n) + self.delta * self.delta + self.lam

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        return self.a_plus * np.exp(1j * self.k_plus * x) + self.a_minus * np.exp(1j * self.k_minus * x)

    def second_derivative(self, x):
        x = np.asarray(x, dtype=complex)
        return -(self.a_plus * self.k_plus ** 2 * np.exp(1j * self.k_plus * x) +
                 self.a_minus * self.k_minus ** 2 * np.exp(1j * self.k_minus * x))

    def residual(self, spec: PotentialSpec, x):
        """(-d^2/dx^2 + u - E) Psi at x; its size measures what the two-wave truncation leaves out."""
        return -self.second_derivative(x) + (spec.evaluate(x) - self.energy) * self(x)

    def zeros(self, count: int = 1) -> np.ndarray:
        """
        The zeros of Psi in x: exp(i n x) = -a_minus / a_plus, one per x-period 2*pi/n, starting with the
        principal logarithm.
        """
        if self.a_plus == 0 or self.a_minus == 0:
            return np.array([], dtype=complex)
        base = -1j * cmath.log(-self.a_minus / self.a_plus) / self.n
        return base + PERIOD / self.n * np.arange(count)


def bloch_vector(n: int, delta, c_n: float, c_minus_n: float, branch: int = 1) -> BlochVector:
    """
    Eigenvector of the resonant block for lam = branch * sqrt(n^2 delta^2 + c_n c_{-n}).

    Two forms come from the two rows of the block:
        first row:   a = (-c_n, n delta - lam)
        second row:  a = (n delta + lam, c_{-n})
    Each degenerates on its own (the first when c_n -> 0 and lam -> n delta); the one with the larger norm is used.
    """
    if branch not in (1, -1):
        raise ValueError(f"branch must be +1 or -1, got {branch}")
    lam = branch * cmath.sqrt(n * n * delta * delta + c_n * c_minus_n)
    first = (-c_n, n * delta - lam)
    second = (n * delta + lam, c_minus_n)
    first_norm = abs(first[0]) ** 2 + abs(first[1]) ** 2
    second_norm = abs(second[0]) ** 2 + abs(second[1]) ** 2
    scale = 1.0 + abs(n * delta) + abs(c_n) + abs(c_minus_n)
    if max(first_norm, second_norm) <= (ZERO_TOL * scale) ** 2:
        raise DegenerateVector(f"both eigenvector forms vanish for n={n}, delta={delta}: the resonant point is "
                               f"not split (c_n = c_-n = 0)")
    a_plus, a_minus = first if first_norm >= second_norm else second
    return BlochVector(n=n, delta=complex(delta), lam=complex(lam), a_plus=complex(a_plus), a_minus=complex(a_minus))


@dataclass(frozen=True)
class EllipsePrediction:
    """
    Closed-form divisor curve near resonance n:

        gamma(x) = E0 - (c_n e^{inx} + c_{-n} e^{-inx}) / 2,
        delta(x) = (c_n e^{inx} - c_{-n} e^{-inx}) / (2n).

    Re gamma swings by |c_n + c_{-n}|/2 and Im gamma by |c_n - c_{-n}|/2. The foci are E0 +- sqrt(c_n c_{-n}),
    the first-order branch points.
    """
    n: int
    c_n: float
    c_minus_n: float

    @property
    def center(self) -> float:
        return resonant_energy(self.n)

    @property
    def product(self) -> float:
        return self.c_n * self.c_minus_n

    @property
    def semi_axis_real(self) -> float:
        return abs(self.c_n + self.c_minus_n) / 2

    @property
    def semi_axis_imag(self) -> float:
        return abs(self.c_n - self.c_minus_n) / 2

    @property
    def foci(self) -> Tuple[complex, complex]:
        return first_order_branch_points(self.n, self.c_n, self.c_minus_n)

    @property
    def period(self) -> float:
        return PERIOD / self.n

    @property
    def degeneracy(self) -> Degeneracy:
        tol = ZERO_TOL * (abs(self.c_n) + abs(self.c_minus_n))
        if self.semi_axis_imag <= tol:
            return Degeneracy.REAL_SEGMENT
        if self.semi_axis_real <= tol:
            return Degeneracy.IMAG_SEGMENT
        return Degeneracy.NONE

    @property
    def segment_endpoints(self) -> Optional[Tuple[complex, complex]]:
        degeneracy = self.degeneracy
        if degeneracy == Degeneracy.REAL_SEGMENT:
            return complex(self.center - self.semi_axis_real), complex(self.center + self.semi_axis_real)
        if degeneracy == Degeneracy.IMAG_SEGMENT:
            return complex(self.center, -self.semi_axis_imag), complex(self.center, self.semi_axis_imag)
        return None

    def gamma(self, x):
        x = np.asarray(x)
        value = self.center - (self.c_n * np.exp(1j * self.n * x) + self.c_minus_n * np.exp(-1j * self.n * x)) / 2
        return complex(value) if np.ndim(value) == 0 else value

    def delta(self, x):
        x = np.asarray(x)
        value = (self.c_n * np.exp(1j * self.n * x) - self.c_minus_n * np.exp(-1j * self.n * x)) / (2 * self.n)
        return complex(value) if np.ndim(value) == 0 else value

    def __call__(self, x):
        return self.gamma(x)

    def vector_at(self, x: float) -> BlochVector:
        """The Bloch vector for delta(x) on the branch lam = gamma(x) - E0; it vanishes at x."""
        delta = self.delta(x)
        lam = self.gamma(x) - self.center
        plus = bloch_vector(self.n, delta, self.c_n, self.c_minus_n, branch=1)
        branch = 1 if abs(plus.lam - lam) <= abs(plus.lam + lam) else -1
        return plus if branch == 1 else bloch_vector(self.n, delta, self.c_n, self.c_minus_n, branch=-1)

    def sample(self, count: int = ELLIPSE_SAMPLES):
        xs = np.linspace(0.0, self.period, count, endpoint=False)
        return xs, self.gamma(xs)

    def to_dict(self, samples: int = ELLIPSE_SAMPLES) -> Dict:
        xs, gammas = self.sample(samples)
        return dict(n=self.n, c_n=self.c_n, c_minus_n=self.c_minus_n, center=self.center,
                    semi_axis_real=self.semi_axis_real, semi_axis_imag=self.semi_axis_imag, foci=list(self.foci),
                    degeneracy=self.degeneracy.value, segment_endpoints=self.segment_endpoints,
                    samples=[dict(x=x, gamma=g) for x, g in zip(xs, gammas)])


def ellipse_prediction(spec: PotentialSpec, n: int) -> EllipsePrediction:
    if n < 1:
        raise ValueError(f"resonance index must be >= 1, got {n}")
    c_n, c_minus_n = spec.resonant_pair(n)
    if c_n == 0 and c_minus_n == 0:
        raise DegenerateDivisor(f"c_{n} = c_-{n} = 0: the divisor does not move at first order")
    return EllipsePrediction(n=n, c_n=float(np.real(c_n)), c_minus_n=float(np.real(c_minus_n)))
