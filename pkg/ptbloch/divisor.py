"""
The divisor point gamma(x) near a resonance, computed as a Dirichlet eigenvalue of the operator on [x, x + 2*pi].

gamma(x) is a root in E of g(E) = phi_E(x + 2*pi), where phi_E solves the Cauchy problem phi(x) = 0, phi'(x) = 1;
g is the M12 entry of the monodromy based at x. Following gamma over one x-period traces a closed curve which,
at first order, is an ellipse whose foci are the branch points of the resonance.
"""
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from ptbloch.config import (DEGENERATE_PCA_RATIO, DIVISOR_SAMPLES, EPSILON_SCALINGS, MIN_FIT_SAMPLES,
                            NEWTON_MAX_ITER, NEWTON_TOL, PERIOD, ROOT_TOL, SCALING_SAMPLES)
from ptbloch.errors import (ContinuationBreak, DegenerateFit, InsufficientSamples, NoConvergence, NumericalError,
                            StepFailure)
from ptbloch.monodromy import transport
from ptbloch.perturbation import EllipsePrediction, ResonanceReport, ellipse_prediction, resonant_energy
from ptbloch.potential import PotentialSpec
from ptbloch.ptb_logging import get_logger
from ptbloch.roots import Window, complex_newton
from ptbloch.rules import ResultVerifier
from ptbloch.spectrum import classify_resonance
from ptbloch.utils import parallel_map

logger = get_logger(__name__)


def divisor_window(n: int, c_n: float = 0.0, c_minus_n: float = 0.0) -> Window:
    """Square around E0 that holds the divisor curve of resonance n but no other Dirichlet eigenvalue."""
    radius = max((2 * n + 1) / 8.0, 2.0 * (abs(c_n) + abs(c_minus_n)))
    return Window.around(resonant_energy(n), radius)


def shooting_residual(spec: PotentialSpec, x: float, energy: complex, tol: float = ROOT_TOL) -> complex:
    """phi(x + 2*pi) for phi(x) = 0, phi'(x) = 1."""
    final, _ = transport(spec, energy, x, (0.0, 1.0), tol=tol)
    return complex(final[0])


def solve_dirichlet(spec: PotentialSpec, x: float, seed: complex, window: Optional[Window] = None,
                    tol: float = ROOT_TOL, newton_tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER):
    """Newton on the shooting residual; returns (root, residual, iterations)."""
    return complex_newton(lambda energy: shooting_residual(spec, x, energy, tol), seed, ftol=newton_tol,
                          window=window, max_iter=max_iter, centered=False)


def dirichlet_eigenvalue(spec: PotentialSpec, x: float, seed: complex, window: Optional[Window] = None, *,
                         tol: float = ROOT_TOL, newton_tol: float = NEWTON_TOL,
                         max_iter: int = NEWTON_MAX_ITER) -> complex:
    """
    The Dirichlet eigenvalue on [x, x + 2*pi] reached by Newton from `seed`.

    Raises OutOfWindow if an iterate leaves `window`, which means the iteration is heading for another
    eigenvalue.
    """
    root, _, _ = solve_dirichlet(spec, x, seed, window, tol, newton_tol, max_iter)
    return root


@dataclass(frozen=True)
class DivisorSample:
    x: float
    gamma: complex
    iterations: int
    residual: float


@dataclass
class DivisorTrajectory:
    n: int
    samples: List[DivisorSample] = field(default_factory=list)

    @property
    def xs(self) -> np.ndarray:
        return np.array([s.x for s in self.samples])

    @property
    def gammas(self) -> np.ndarray:
        return np.array([s.gamma for s in self.samples], dtype=complex)

    def __len__(self):
        return len(self.samples)

    @property
    def closure_defect(self) -> float:
        """|gamma(first) - gamma(last)|; meaningful when the grid spans one x-period."""
        if len(self.samples) < 2:
            return 0.0
        return abs(self.samples[-1].gamma - self.samples[0].gamma)

    def max_deviation(self, prediction: EllipsePrediction) -> float:
        if not self.samples:
            return math.nan
        return float(np.max(np.abs(self.gammas - prediction.gamma(self.xs))))

    def to_rows(self) -> List[Dict]:
        return [dict(x=s.x, re_gamma=s.gamma.real, im_gamma=s.gamma.imag) for s in self.samples]


def default_grid(n: int, samples: int = DIVISOR_SAMPLES) -> np.ndarray:
    """One x-period [0, 2*pi/n], both ends included."""
    return np.linspace(0.0, PERIOD / n, samples + 1)


def trace_divisor(spec: PotentialSpec, n: int, x_grid: Optional[Sequence[float]] = None, *,
                  samples: int = DIVISOR_SAMPLES, window: Optional[Window] = None, tol: float = ROOT_TOL,
                  newton_tol: float = NEWTON_TOL) -> DivisorTrajectory:
    """
    Continuation of gamma over x_grid. The first sample is seeded from the closed-form curve, later ones by
    linear extrapolation of the last two samples.
    """
    if n < 1:
        raise ValueError(f"resonance index must be >= 1, got {n}")
    x_grid = default_grid(n, samples) if x_grid is None else np.asarray(x_grid, dtype=float)
    if x_grid.size == 0:
        raise ValueError("x_grid is empty")
    if np.any(np.diff(x_grid) <= 0):
        raise ValueError("x_grid must be strictly increasing")

    c_n, c_minus_n = (float(np.real(c)) for c in spec.resonant_pair(n))
    window = window or divisor_window(n, c_n, c_minus_n)
    prediction = EllipsePrediction(n=n, c_n=c_n, c_minus_n=c_minus_n)
    trajectory = DivisorTrajectory(n=n)

    for index, x in enumerate(x_grid):
        if index == 0:
            seed = prediction.gamma(x)
        elif index == 1:
            seed = trajectory.samples[-1].gamma
        else:
            seed = 2 * trajectory.samples[-1].gamma - trajectory.samples[-2].gamma
        try:
            gamma, residual, iterations = solve_dirichlet(spec, float(x), seed, window, tol, newton_tol)
        except (NoConvergence, StepFailure) as e:
            last_good = trajectory.samples[-1].x if trajectory.samples else None
            raise ContinuationBreak(f"divisor continuation failed at x={x:.6g} (last good x={last_good}): {e}",
                                    last_good_x=last_good, trajectory=trajectory)
        trajectory.samples.append(DivisorSample(x=float(x), gamma=gamma, iterations=iterations,
                                                residual=abs(residual)))
        logger.ridiculous(f"gamma({x:.6f}) = {gamma:.12g} after {iterations} iterations")

    logger.verbose(f"Traced divisor of resonance {n} over {len(trajectory)} samples, closure defect "
                   f"{trajectory.closure_defect:.3e}")
    return trajectory


@dataclass(frozen=True)
class EllipseFit:
    center: complex
    semi_axes: Tuple[float, float]
    rotation: float
    foci: Tuple[complex, complex]
    rms_residual: float
    samples: int

    def points(self, count: int = 256) -> np.ndarray:
        t = np.linspace(0.0, 2 * np.pi, count)
        a, b = self.semi_axes
        return self.center + np.exp(1j * self.rotation) * (a * np.cos(t) + 1j * b * np.sin(t))

    def to_dict(self):
        return dict(center=self.center, semi_axes=list(self.semi_axes), rotation=self.rotation,
                    foci=list(self.foci), rms_residual=self.rms_residual, samples=self.samples)


def _principal_axes(points: np.ndarray):
    centered = np.column_stack([points.real, points.imag]) - [points.real.mean(), points.imag.mean()]
    variances, vectors = np.linalg.eigh(centered.T @ centered / len(points))
    return variances, vectors


def fit_ellipse_points(points) -> EllipseFit:
    """
    Direct least-squares ellipse fit (Halir and Flusser's numerically stable form of Fitzgibbon's method) to
    complex samples. Data that is nearly one-dimensional is rejected as a segment before fitting.
    """
    points = np.asarray(points, dtype=complex).ravel()
    if points.size < MIN_FIT_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_FIT_SAMPLES} samples, got {points.size}")

    mean = complex(points.mean())
    variances, vectors = _principal_axes(points)
    ratio = math.sqrt(max(variances[0], 0.0) / variances[1]) if variances[1] > 0 else 0.0
    if ratio < DEGENERATE_PCA_RATIO:
        axis = complex(vectors[0, 1], vectors[1, 1])
        projections = ((points - mean) * axis.conjugate()).real
        endpoints = (mean + projections.min() * axis, mean + projections.max() * axis)
        if (endpoints[1] - endpoints[0]).real < 0 or (
                (endpoints[1] - endpoints[0]).real == 0 and (endpoints[1] - endpoints[0]).imag < 0):
            endpoints = endpoints[::-1]
        raise DegenerateFit(f"samples lie on a segment (principal axis ratio {ratio:.2e})",
                            endpoints=endpoints, center=mean, pca_ratio=ratio)

    # Isotropic normalisation keeps the scatter matrices well conditioned
    scale = math.sqrt(2.0 / np.mean(np.abs(points - mean) ** 2))
    z = (points - mean) * scale
    u, v = z.real, z.imag

    d1 = np.column_stack([u * u, u * v, v * v])
    d2 = np.column_stack([u, v, np.ones_like(u)])
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    t = -scipy.linalg.solve(s3, s2.T, assume_a='sym')
    reduced = s1 + s2 @ t
    # Inverse of the constraint matrix [[0, 0, 2], [0, -1, 0], [2, 0, 0]] applied on the left
    reduced = np.array([reduced[2] / 2, -reduced[1], reduced[0] / 2])
    _, eigenvectors = scipy.linalg.eig(reduced)
    eigenvectors = np.real(eigenvectors)
    condition = 4 * eigenvectors[0] * eigenvectors[2] - eigenvectors[1] ** 2
    admissible = np.flatnonzero(condition > 0)
    if admissible.size == 0:
        raise DegenerateFit("no ellipse among the conic solutions", center=mean, pca_ratio=ratio)
    a1 = eigenvectors[:, admissible[np.argmax(condition[admissible])]]
    if a1[0] + a1[2] < 0:
        a1 = -a1
    a, b, c = a1
    d, e, f = t @ a1

    center_uv = np.linalg.solve([[2 * a, b], [b, 2 * c]], [-d, -e])
    f0 = f + (d * center_uv[0] + e * center_uv[1]) / 2
    mu, axes = np.linalg.eigh([[a, b / 2], [b / 2, c]])
    radii = np.sqrt(-f0 / mu)
    if not np.all(np.isfinite(radii)):
        raise DegenerateFit("fitted conic is not a real ellipse", center=mean, pca_ratio=ratio)

    # eigh sorts mu ascending, so the first radius is the major one
    major, minor = float(radii[0]), float(radii[1])
    direction = complex(axes[0, 0], axes[1, 0])
    rotation = math.atan2(direction.imag, direction.real)
    center_z = complex(center_uv[0], center_uv[1])

    offsets = (z - center_z) * direction.conjugate()
    rho = np.sqrt((offsets.real / major) ** 2 + (offsets.imag / minor) ** 2)
    distances = np.abs(offsets) * np.abs(1 - 1 / rho)
    rms = float(np.sqrt(np.mean((distances / major) ** 2)))

    center = mean + center_z / scale
    focal = math.sqrt(max(major ** 2 - minor ** 2, 0.0)) / scale
    foci = tuple(sorted((center + focal * direction, center - focal * direction), key=lambda w: (w.imag, w.real)))
    return EllipseFit(center=center, semi_axes=(major / scale, minor / scale), rotation=rotation,
                      foci=foci, rms_residual=rms, samples=int(points.size))


def fit_ellipse(trajectory: DivisorTrajectory) -> EllipseFit:
    return fit_ellipse_points(trajectory.gammas)


def pair_distance(first: Sequence[complex], second: Sequence[complex]) -> float:
    """Largest distance between two point pairs under their best matching."""
    straight = max(abs(first[0] - second[0]), abs(first[1] - second[1]))
    swapped = max(abs(first[0] - second[1]), abs(first[1] - second[0]))
    return float(min(straight, swapped))


@dataclass(frozen=True)
class ScalingRow:
    scale: float
    samples: int
    max_deviation: float
    focal_mismatch: Optional[float]
    rms_residual: Optional[float] = None

    def to_dict(self):
        return dict(scale=self.scale, samples=self.samples, max_deviation=self.max_deviation,
                    focal_mismatch=self.focal_mismatch, rms_residual=self.rms_residual)


@dataclass
class DivisorReport:
    REPORT_TYPE = "divisor"

    n: int
    prediction: EllipsePrediction
    trajectory: DivisorTrajectory
    resonance: Optional[ResonanceReport] = None
    unperturbed: bool = False
    fit: Optional[EllipseFit] = None
    segment: Optional[Tuple[complex, complex]] = None
    focal_mismatch: Optional[float] = None
    gamma0: complex = 0j
    max_deviation: float = math.nan
    scaling_table: List[ScalingRow] = field(default_factory=list)
    scaling_slope: Optional[float] = None
    errors: List[str] = field(default_factory=list)
    issues: List = field(default_factory=list)

    @property
    def gamma0_imag(self) -> float:
        return abs(self.gamma0.imag)

    @property
    def closure_defect(self) -> float:
        return self.trajectory.closure_defect

    def to_dict(self) -> Dict:
        return dict(
            n=self.n, unperturbed=self.unperturbed,
            prediction=dict(center=self.prediction.center, semi_axis_real=self.prediction.semi_axis_real,
                            semi_axis_imag=self.prediction.semi_axis_imag, foci=list(self.prediction.foci),
                            degeneracy=self.prediction.degeneracy.value),
            numeric_branch_points=(list(self.resonance.numeric_branch_points)
                                   if self.resonance and self.resonance.numeric_branch_points else None),
            fit=self.fit.to_dict() if self.fit else None,
            segment=list(self.segment) if self.segment else None,
            focal_mismatch=self.focal_mismatch, gamma0=self.gamma0, gamma0_imag=self.gamma0_imag,
            max_deviation=self.max_deviation, closure_defect=self.closure_defect,
            scaling_table=[row.to_dict() for row in self.scaling_table], scaling_slope=self.scaling_slope,
            errors=list(self.errors), issues=[issue.to_dict() for issue in self.issues],
        )


def _fit_or_segment(points):
    try:
        fit = fit_ellipse_points(points)
        return fit, None, fit.foci
    except DegenerateFit as e:
        if e.endpoints is None:
            raise
        return None, e.endpoints, e.endpoints


def _scaling_row(scale: float, spec: PotentialSpec, n: int, samples: int, tol: float) -> ScalingRow:
    scaled = spec.scaled(scale)
    prediction = ellipse_prediction(scaled, n)
    trajectory = trace_divisor(scaled, n, samples=samples, tol=tol)
    focal_mismatch = rms_residual = None
    try:
        fit, _, foci = _fit_or_segment(trajectory.gammas)
        rms_residual = fit.rms_residual if fit else None
        numeric = classify_resonance(scaled, n, tol=tol).numeric_branch_points
        if numeric is not None:
            focal_mismatch = pair_distance(foci, numeric)
    except NumericalError as e:
        logger.warning(f"No focal comparison at scale {scale}: {e}")
    return ScalingRow(scale=scale, samples=len(trajectory), max_deviation=trajectory.max_deviation(prediction),
                      focal_mismatch=focal_mismatch, rms_residual=rms_residual)


def scaling_slope(rows: Sequence[ScalingRow]) -> Optional[float]:
    """Log-log slope of the deviation from the closed form against the coefficient scale."""
    usable = [row for row in rows if row.max_deviation > 0 and np.isfinite(row.max_deviation)]
    if len({row.scale for row in usable}) < 2:
        return None
    slope, _ = np.polyfit(np.log([row.scale for row in usable]), np.log([row.max_deviation for row in usable]), 1)
    return float(slope)


def verify_divisor(spec: PotentialSpec, n: int, *, samples: int = DIVISOR_SAMPLES,
                   scalings: Sequence[float] = EPSILON_SCALINGS, scaling_samples: int = SCALING_SAMPLES,
                   tol: float = ROOT_TOL, jobs: int = 1) -> DivisorReport:
    """
    Trace the divisor of resonance n, fit it, and compare the fitted foci (or segment ends) with the numerical
    branch points. The scaling table repeats the comparison with the coefficients multiplied by each factor in
    `scalings`.
    """
    c_n, c_minus_n = (float(np.real(c)) for c in spec.resonant_pair(n))
    prediction = EllipsePrediction(n=n, c_n=c_n, c_minus_n=c_minus_n)
    trajectory = trace_divisor(spec, n, samples=samples, tol=tol)
    report = DivisorReport(n=n, prediction=prediction, trajectory=trajectory, gamma0=trajectory.samples[0].gamma,
                           max_deviation=trajectory.max_deviation(prediction))

    if c_n == 0 and c_minus_n == 0:
        report.unperturbed = True
        logger.result(f"Resonance {n} is unperturbed: gamma stays at {report.gamma0:.10g}")
        ResultVerifier(report, logger).verify()
        return report

    try:
        report.fit, report.segment, foci = _fit_or_segment(trajectory.gammas)
    except NumericalError as e:
        report.errors.append(f"fit: {e}")
        foci = None

    try:
        report.resonance = classify_resonance(spec, n, tol=tol, jobs=jobs)
    except NumericalError as e:
        report.errors.append(f"branch points: {e}")

    if foci is not None and report.resonance is not None and report.resonance.numeric_branch_points:
        report.focal_mismatch = pair_distance(foci, report.resonance.numeric_branch_points)

    if scalings:
        rows = parallel_map(partial(_scaling_row, spec=spec, n=n, samples=scaling_samples, tol=tol),
                            list(scalings), jobs, logger=logger)
        report.scaling_table = sorted(rows, key=lambda row: -row.scale)
        report.scaling_slope = scaling_slope(report.scaling_table)

    ResultVerifier(report, logger).verify()
    logger.result(f"Resonance {n}: focal mismatch {report.focal_mismatch}, |Im gamma(0)| = {report.gamma0_imag:.2e}, "
                  f"scaling slope {report.scaling_slope}")
    return report

