"""
Branch points, resonance classification and the spectral locus.

The spectrum of a PT-symmetric periodic operator is the set {E : Delta(E) in [-2, 2]}. It is a union of analytic
arcs of the level set Im Delta = 0 ending where Delta = +-2, i.e. at the roots of Delta^2 - 4. Branch points are
found by Newton from first-order seeds; arcs are followed by predictor-corrector continuation.
"""
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ptbloch.config import (BRANCH_RESIDUAL_TOL, DEDUP_TOL, DEFAULT_N_MAX, DERIVATIVE_CUTOFF, DOUBLE_POINT_TOL,
                            EndpointKind, FD_REL_STEP, LOCUS_START_TOL, Multiplicity, NEWTON_MAX_ITER, ROOT_TOL,
                            TRACE_INITIAL_STEP, TRACE_MAX_POINTS, TRACE_MAX_STALLS, TRACE_MAX_STEP,
                            TRACE_MIN_STEP, TRACE_TOL, Verdict)
from ptbloch.errors import LocusStartError, NoConvergence, StallError, StepFailure
from ptbloch.monodromy import discriminant
from ptbloch.perturbation import (ResonanceReport, first_order_branch_points, first_order_verdict,
                                  resonance_window_radius, resonant_energy)
from ptbloch.potential import PotentialSpec
from ptbloch.ptb_logging import get_logger
from ptbloch.roots import Window, centered_difference, complex_newton
from ptbloch.rules import ResultVerifier
from ptbloch.utils import parallel_map

logger = get_logger(__name__)

SEED_MAX_STEP = 0.1
REALITY_TOL = 1e-8
CONJUGATE_PAIR_TOL = 1e-6
CORRECTOR_MAX_ITER = 6
MIN_ALIGNMENT = 0.5


def default_window(n_max: int = DEFAULT_N_MAX) -> Window:
    return Window(-1.0, n_max * n_max / 4.0 + 1.0, -1.0, 1.0)


def nearest_resonance(energy: complex) -> int:
    return int(round(2 * math.sqrt(max(complex(energy).real, 0.0))))


def _unique(values: Iterable[complex], tol: float = 1e-12) -> List[complex]:
    unique = []
    for value in values:
        value = complex(value)
        if all(abs(value - other) > tol for other in unique):
            unique.append(value)
    return unique


def resonance_seeds(spec: PotentialSpec, resonances: Iterable[int]) -> List[complex]:
    """First-order branch point predictions of each resonance; E0 itself once when they coincide."""
    seeds = []
    for n in resonances:
        seeds.extend(first_order_branch_points(n, *spec.resonant_pair(n)))
    return _unique(seeds)


def expand_seeds(spec: PotentialSpec, seeds: Iterable[complex]) -> List[complex]:
    """Add the predictions of the resonance a seed sits next to, so that both members of a pair are sought."""
    expanded = []
    for seed in seeds:
        expanded.append(complex(seed))
        n = nearest_resonance(seed)
        if n >= 1 and abs(seed - resonant_energy(n)) < (2 * n - 1) / 8.0:
            expanded.extend(first_order_branch_points(n, *spec.resonant_pair(n)))
    return _unique(expanded)


@dataclass(frozen=True)
class SeedOutcome:
    seed: complex
    root: Optional[complex] = None
    residual: float = math.nan
    discriminant: complex = complex(math.nan)
    derivative: complex = complex(math.nan)
    iterations: int = 0
    error: Optional[str] = None


def _refine_seed(seed: complex, spec: PotentialSpec, window: Window, tol: float, ftol: float) -> SeedOutcome:
    def delta(energy):
        return discriminant(spec, energy, tol=tol)

    def residual(energy):
        value = delta(energy)
        return value * value - 4

    try:
        root, value, iterations = complex_newton(residual, seed, ftol=ftol, window=window, max_step=SEED_MAX_STEP)
        derivative = centered_difference(delta, root, FD_REL_STEP)
    except (NoConvergence, StepFailure) as e:
        return SeedOutcome(seed=complex(seed), error=f"{type(e).__name__}: {e}")
    return SeedOutcome(seed=complex(seed), root=root, residual=abs(value), discriminant=delta(root),
                       derivative=derivative, iterations=iterations)


@dataclass(frozen=True)
class BranchPoint:
    energy: complex
    multiplicity: Multiplicity
    discriminant: complex
    derivative: complex
    residual: float
    resonance_index: int
    seeds: int = 1

    def to_dict(self):
        return dict(energy=self.energy, multiplicity=self.multiplicity.value, discriminant=self.discriminant,
                    derivative_abs=abs(self.derivative), residual=self.residual,
                    resonance_index=self.resonance_index, seeds=self.seeds)


@dataclass
class BranchPointSet:
    points: List[BranchPoint] = field(default_factory=list)
    failures: List[Tuple[complex, str]] = field(default_factory=list)
    window: Optional[Window] = None

    @property
    def energies(self) -> np.ndarray:
        return np.array([p.energy for p in self.points], dtype=complex)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def is_conjugation_closed(self, tol: float = REALITY_TOL) -> bool:
        energies = self.energies
        return all(np.min(np.abs(energies - np.conj(e))) < tol for e in energies)

    def to_dict(self) -> Dict:
        return dict(window=self.window.as_list() if self.window else None,
                    points=[p.to_dict() for p in self.points],
                    failures=[dict(seed=seed, error=error) for seed, error in self.failures])


def _merge_outcomes(outcomes: Sequence[SeedOutcome], dedup_tol: float, double_tol: float,
                    derivative_cutoff: float) -> List[BranchPoint]:
    # Deduplicate converged roots, then fuse clusters closer than the double point tolerance
    clusters: List[List[SeedOutcome]] = []
    for outcome in sorted((o for o in outcomes if o.root is not None), key=lambda o: (o.root.real, o.root.imag)):
        for cluster in clusters:
            if abs(cluster[0].root - outcome.root) <= dedup_tol:
                cluster.append(outcome)
                break
        else:
            clusters.append([outcome])

    fused: List[List[List[SeedOutcome]]] = []
    for cluster in clusters:
        for group in fused:
            if any(abs(member[0].root - cluster[0].root) < double_tol for member in group):
                group.append(cluster)
                break
        else:
            fused.append([cluster])

    points = []
    for group in fused:
        representatives = [cluster[0] for cluster in group]
        best = min(representatives, key=lambda o: o.residual)
        energy = complex(np.mean([o.root for o in representatives])) if len(group) > 1 else best.root
        is_double = len(group) > 1 or abs(best.derivative) < derivative_cutoff
        points.append(BranchPoint(
            energy=energy, multiplicity=Multiplicity.DOUBLE if is_double else Multiplicity.SIMPLE,
            discriminant=best.discriminant, derivative=best.derivative, residual=best.residual,
            resonance_index=nearest_resonance(energy), seeds=sum(len(cluster) for cluster in group)))
    return points


def find_branch_points(spec: PotentialSpec, window: Optional[Window] = None, seeds: Optional[Iterable[complex]] = None,
                       *, n_max: int = DEFAULT_N_MAX, expand: bool = True, tol: float = ROOT_TOL,
                       ftol: float = BRANCH_RESIDUAL_TOL, dedup_tol: float = DEDUP_TOL,
                       double_tol: float = DOUBLE_POINT_TOL, derivative_cutoff: float = DERIVATIVE_CUTOFF,
                       jobs: int = 1) -> BranchPointSet:
    """
    Roots of Delta(E)^2 - 4 reached by Newton from the seeds.

    Default seeds are the first-order predictions of resonances 1..n_max in the default window. Seeds that fail
    (no convergence, leaving the window, integrator failure) are recorded in `failures` and do not abort the
    search.
    """
    if window is None:
        window = default_window(n_max)
    if seeds is None:
        seeds = resonance_seeds(spec, range(1, n_max + 1))
    elif expand:
        seeds = expand_seeds(spec, seeds)
    else:
        seeds = _unique(seeds)

    failures = []
    inside = []
    for seed in seeds:
        if window.contains(seed):
            inside.append(seed)
        else:
            failures.append((seed, f"seed outside window {window.as_list()}"))

    logger.verbose(f"Refining {len(inside)} branch point seeds in window {window.as_list()}")
    outcomes = parallel_map(partial(_refine_seed, spec=spec, window=window, tol=tol, ftol=ftol), inside, jobs,
                            logger=logger)
    for outcome in outcomes:
        if outcome.error:
            logger.warning(f"Branch point seed {outcome.seed:.6g} failed: {outcome.error}")
            failures.append((outcome.seed, outcome.error))
        else:
            logger.ridiculous(f"Seed {outcome.seed:.6g} -> {outcome.root:.12g} in {outcome.iterations} iterations")

    points = _merge_outcomes(outcomes, dedup_tol, double_tol, derivative_cutoff)
    logger.verbose(f"Found {len(points)} branch points: {[f'{p.energy:.10g}' for p in points]}")
    return BranchPointSet(points=points, failures=failures, window=window)


def numeric_verdict(pair: Tuple[complex, complex], multiplicity: Multiplicity,
                    double_tol: float = DOUBLE_POINT_TOL) -> Optional[Verdict]:
    first, second = pair
    if multiplicity == Multiplicity.DOUBLE or abs(first - second) < double_tol:
        return Verdict.DOUBLE_POINT_AT_FIRST_ORDER
    if abs(first.imag) < REALITY_TOL * (1 + abs(first)) and abs(second.imag) < REALITY_TOL * (1 + abs(second)):
        return Verdict.GAP
    if abs(first - second.conjugate()) < CONJUGATE_PAIR_TOL:
        return Verdict.TRANSVERSAL_BAND
    return None


def _pair_with(predicted: Tuple[complex, complex], found: Tuple[complex, complex]) -> Tuple[complex, complex]:
    straight = abs(found[0] - predicted[0]) + abs(found[1] - predicted[1])
    swapped = abs(found[1] - predicted[0]) + abs(found[0] - predicted[1])
    return found if straight <= swapped else (found[1], found[0])


def classify_resonance(spec: PotentialSpec, n: int, *, tol: float = ROOT_TOL,
                       double_tol: float = DOUBLE_POINT_TOL, jobs: int = 1) -> ResonanceReport:
    """
    First-order verdict for resonance n from the sign of c_n c_{-n}, refined by the numerical branch points of
    matching parity (Delta = 2(-1)^n) closest to E0.
    """
    if n < 1:
        raise ValueError(f"resonance index must be >= 1, got {n}")
    c_n, c_minus_n = (float(np.real(c)) for c in spec.resonant_pair(n))
    product = c_n * c_minus_n
    e0 = resonant_energy(n)
    predicted = first_order_branch_points(n, c_n, c_minus_n)
    report = ResonanceReport(n=n, E0=e0, c_n=c_n, c_minus_n=c_minus_n, product=product,
                             first_order_branch_points=predicted, verdict=first_order_verdict(product))

    window = Window.around(e0, resonance_window_radius(n, product))
    parity = (-1) ** n

    def candidates(found: BranchPointSet) -> List[BranchPoint]:
        matching = [p for p in found.points if parity * p.discriminant.real > 0]
        return sorted(matching, key=lambda p: abs(p.energy - e0))[:2]

    found = find_branch_points(spec, window, seeds=predicted, expand=False, tol=tol, double_tol=double_tol,
                               jobs=jobs)
    nearest = candidates(found)
    if len(nearest) == 1 and nearest[0].multiplicity == Multiplicity.SIMPLE:
        # The partner is searched at the reflection through E0 and at the conjugate
        partner = nearest[0].energy
        retry = find_branch_points(spec, window, seeds=[partner, 2 * e0 - partner, partner.conjugate()],
                                   expand=False, tol=tol, double_tol=double_tol, jobs=jobs)
        found.failures.extend(retry.failures)
        nearest = candidates(retry)
    report.failures = [f"{seed}: {error}" for seed, error in found.failures]

    if len(nearest) == 2:
        pair = _pair_with(predicted, (nearest[0].energy, nearest[1].energy))
        report.multiplicity = Multiplicity.SIMPLE
    elif len(nearest) == 1 and nearest[0].multiplicity == Multiplicity.DOUBLE:
        pair = (nearest[0].energy, nearest[0].energy)
        report.multiplicity = Multiplicity.DOUBLE
    else:
        pair = None

    if pair is not None:
        report.numeric_branch_points = pair
        report.mismatch = max(abs(pair[0] - predicted[0]), abs(pair[1] - predicted[1]))
        report.numeric_verdict = numeric_verdict(pair, report.multiplicity, double_tol)

    ResultVerifier(report, logger).verify()
    logger.result(f"Resonance n={n}: product={product:.6g}, verdict {report.verdict.value}"
                  f"{' (inconclusive)' if report.inconclusive else ''}, numeric {pair}")
    return report


def project_onto_locus(spec: PotentialSpec, guess: complex, *, tol: float = ROOT_TOL, trace_tol: float = TRACE_TOL,
                       max_iter: int = NEWTON_MAX_ITER) -> Tuple[complex, complex]:
    """Newton on Im Delta = 0 along the gradient of Im Delta, which is i*conj(Delta') as a complex number."""
    energy = complex(guess)
    for _ in range(max_iter):
        value = discriminant(spec, energy, tol=tol)
        if abs(value.imag) < trace_tol:
            return energy, value
        derivative = centered_difference(lambda e: discriminant(spec, e, tol=tol), energy)
        if derivative == 0 or not np.isfinite(derivative):
            raise NoConvergence(f"Delta' vanishes at {energy:.6g}", seed=guess, last=energy)
        energy -= value.imag * 1j * derivative.conjugate() / abs(derivative) ** 2
    raise NoConvergence(f"projection onto Im Delta = 0 from {complex(guess):.6g} did not converge", seed=guess,
                        last=energy, iterations=max_iter)


@dataclass
class LocusArc:
    points: np.ndarray
    discriminants: np.ndarray
    start_kind: EndpointKind
    end_kind: EndpointKind
    branch_points: List[complex] = field(default_factory=list)

    @property
    def theta(self) -> np.ndarray:
        """Delta = 2 cos(theta)."""
        return np.arccos(np.clip(self.discriminants.real / 2, -1.0, 1.0))

    def real_axis_crossings(self) -> List[float]:
        crossings = []
        for a, b in zip(self.points[:-1], self.points[1:]):
            if a.imag == 0 and b.imag == 0:
                continue
            if a.imag * b.imag <= 0:
                t = a.imag / (a.imag - b.imag)
                crossings.append(float(a.real + t * (b.real - a.real)))
        return crossings

    def covers(self, other: 'LocusArc', tol: float) -> bool:
        """True when the ends and the middle point of `other` lie within tol of this arc's points."""
        samples = other.points[[0, len(other.points) // 2, -1]]
        return all(np.min(np.abs(self.points - p)) < tol for p in samples)

    def to_dict(self):
        return dict(start_kind=self.start_kind.value, end_kind=self.end_kind.value,
                    branch_points=list(self.branch_points), length=len(self.points))


@dataclass
class SpectralLocus:
    arcs: List[LocusArc] = field(default_factory=list)

    @property
    def branch_points(self) -> List[complex]:
        return [bp for arc in self.arcs for bp in arc.branch_points]

    @property
    def points(self) -> np.ndarray:
        if not self.arcs:
            return np.array([], dtype=complex)
        return np.concatenate([arc.points for arc in self.arcs])

    @classmethod
    def combine(cls, loci: Iterable['SpectralLocus'], tol: float = TRACE_MAX_STEP) -> 'SpectralLocus':
        """
        Arcs of several loci. Starts on the same arc trace it twice: an arc whose ends and middle lie on a kept
        arc is dropped, and kept arcs that a new arc covers are replaced by it.
        """
        arcs = []
        for arc in (arc for locus in loci for arc in locus.arcs):
            if any(kept.covers(arc, tol) for kept in arcs):
                logger.verbose(f"Dropped duplicate arc from {arc.points[0]:.6g} to {arc.points[-1]:.6g}")
                continue
            arcs = [kept for kept in arcs if not arc.covers(kept, tol)] + [arc]
        return cls(arcs=arcs)

    def to_rows(self) -> List[Dict]:
        rows = []
        for index, arc in enumerate(self.arcs):
            for point, value, theta in zip(arc.points, arc.discriminants, arc.theta):
                rows.append(dict(arc=index, re_E=point.real, im_E=point.imag, re_delta=value.real, theta=theta))
        return rows

    def to_dict(self):
        return dict(arcs=[arc.to_dict() for arc in self.arcs])


@dataclass
class _HalfArc:
    points: List[complex]
    values: List[complex]
    kind: EndpointKind
    branch_point: Optional[complex] = None


class _LocusTracer:
    """Follows Im Delta = 0 in one direction from a start already on the locus."""

    def __init__(self, spec, window, tol, trace_tol, initial_step, min_step, max_step, max_points, max_stalls):
        self.spec = spec
        self.window = window
        self.tol = tol
        self.trace_tol = trace_tol
        self.initial_step = initial_step
        self.min_step = min_step
        self.max_step = max_step
        self.max_points = max_points
        self.max_stalls = max_stalls

    def delta(self, energy):
        return discriminant(self.spec, energy, tol=self.tol)

    def tangent(self, energy):
        derivative = centered_difference(self.delta, energy)
        if derivative == 0 or not np.isfinite(derivative):
            raise NoConvergence(f"Delta' vanishes at {energy:.6g}", seed=energy, last=energy)
        return derivative.conjugate() / abs(derivative), abs(derivative)

    def correct(self, predictor):
        """Newton along the normal through the predictor; the tangent there orients the next step."""
        tangent, slope = self.tangent(predictor)
        normal = 1j * tangent
        sigma = 0.0
        energy = predictor
        value = self.delta(energy)
        for iteration in range(CORRECTOR_MAX_ITER + 1):
            if abs(value.imag) < self.trace_tol:
                return energy, value, tangent, iteration
            sigma -= value.imag / slope
            energy = predictor + sigma * normal
            value = self.delta(energy)
        raise NoConvergence(f"corrector failed at {predictor:.6g}", seed=predictor, last=energy,
                            iterations=CORRECTOR_MAX_ITER)

    def locate_branch_point(self, inside, inside_value, outside, outside_value):
        target = 2.0 if outside_value.real > 0 else -2.0
        span = outside_value.real - inside_value.real
        fraction = min(max((target - inside_value.real) / span, 0.0), 1.0) if span else 0.5
        guess = inside + fraction * (outside - inside)

        def residual(energy):
            value = self.delta(energy)
            return value * value - 4

        try:
            root, _, _ = complex_newton(residual, guess, ftol=BRANCH_RESIDUAL_TOL,
                                        max_step=max(abs(outside - inside), self.min_step))
            return root
        except NoConvergence as e:
            logger.warning(f"Branch point polish failed near {guess:.8g}, keeping the interpolated point: {e}")
            return guess

    def trace(self, start, start_value, orientation) -> _HalfArc:
        points = [start]
        values = [start_value]
        direction, _ = self.tangent(start)
        direction *= orientation
        step = self.initial_step
        stalls = 0
        travelled = 0.0

        while True:
            if len(points) >= self.max_points:
                return _HalfArc(points, values, EndpointKind.POINT_BUDGET)

            current = points[-1]
            predictor = current + step * direction
            accepted = False
            try:
                corrected, value, tangent, iterations = self.correct(predictor)
                if (tangent * direction.conjugate()).real < 0:
                    tangent = -tangent
                alignment = (tangent * direction.conjugate()).real
                progress = ((corrected - current) * direction.conjugate()).real
                accepted = (abs(corrected - predictor) <= 0.5 * step and alignment >= MIN_ALIGNMENT
                            and progress > 0)
            except (NoConvergence, StepFailure) as e:
                logger.ridiculous(f"locus step rejected at h={step:.3g}: {e}")

            if not accepted:
                if step <= self.min_step * (1 + 1e-12):
                    stalls += 1
                    if stalls >= self.max_stalls:
                        raise StallError(f"locus tracing stalled at {current:.10g} after {stalls} failures at the "
                                         f"minimum step {self.min_step}", last_point=current)
                step = max(step / 2, self.min_step)
                continue
            stalls = 0

            if not self.window.contains(corrected):
                return _HalfArc(points, values, EndpointKind.WINDOW_BOUNDARY)

            if abs(value.real) > 2 + self.trace_tol:
                branch_point = self.locate_branch_point(current, values[-1], corrected, value)
                points.append(branch_point)
                values.append(self.delta(branch_point))
                return _HalfArc(points, values, EndpointKind.BRANCH_POINT, branch_point=branch_point)

            travelled += abs(corrected - current)
            if travelled > 3 * step and abs(corrected - points[0]) < step:
                points.extend([corrected, points[0]])
                values.extend([value, values[0]])
                return _HalfArc(points, values, EndpointKind.CLOSED)

            points.append(corrected)
            values.append(value)
            direction = tangent
            if iterations <= 2:
                step = min(step * 1.5, self.max_step)


def trace_locus(spec: PotentialSpec, start: complex, window: Optional[Window] = None, *, tol: float = ROOT_TOL,
                trace_tol: float = TRACE_TOL, initial_step: float = TRACE_INITIAL_STEP,
                min_step: float = TRACE_MIN_STEP, max_step: float = TRACE_MAX_STEP,
                max_points: int = TRACE_MAX_POINTS, max_stalls: int = TRACE_MAX_STALLS) -> SpectralLocus:
    """
    Trace the spectral arc through `start` in both directions and join the halves into one polyline.

    A start with |Im Delta| >= 1e-8 is first projected onto Im Delta = 0; LocusStartError if that fails or
    lands in a gap (|Re Delta| > 2).
    """
    window = window or default_window()
    start = complex(start)
    if not window.contains(start):
        raise LocusStartError(f"start {start} outside window {window.as_list()}")

    tracer = _LocusTracer(spec, window, tol, trace_tol, initial_step, min_step, max_step, max_points, max_stalls)
    value = tracer.delta(start)
    if abs(value.imag) >= LOCUS_START_TOL:
        try:
            start, value = project_onto_locus(spec, start, tol=tol, trace_tol=trace_tol)
        except NoConvergence as e:
            raise LocusStartError(f"cannot project {start} onto the locus: {e}")
        logger.verbose(f"Locus start projected to {start:.10g}")
    if abs(value.real) > 2 + trace_tol:
        raise LocusStartError(f"start {start:.10g} lies in a gap: Delta = {value:.10g}")

    try:
        forward = tracer.trace(start, value, +1)
    except NoConvergence as e:
        raise LocusStartError(f"no tangent at {start:.10g}: {e}")
    if forward.kind == EndpointKind.CLOSED:
        arc = LocusArc(points=np.array(forward.points), discriminants=np.array(forward.values),
                       start_kind=EndpointKind.CLOSED, end_kind=EndpointKind.CLOSED)
    else:
        backward = tracer.trace(start, value, -1)
        points = backward.points[::-1] + forward.points[1:]
        values = backward.values[::-1] + forward.values[1:]
        branch_points = [bp for bp in (backward.branch_point, forward.branch_point) if bp is not None]
        arc = LocusArc(points=np.array(points, dtype=complex), discriminants=np.array(values, dtype=complex),
                       start_kind=backward.kind, end_kind=forward.kind, branch_points=branch_points)

    logger.verbose(f"Traced arc through {start:.8g}: {len(arc.points)} points, ends {arc.start_kind.value} / "
                   f"{arc.end_kind.value}")
    return SpectralLocus(arcs=[arc])
