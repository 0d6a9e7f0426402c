"""
SVG figures of the energy plane. Figures are built on matplotlib's object API (no pyplot state) so experiments
can render them from worker processes, and are saved without a date stamp so reruns produce identical files.
"""
import os

from typing import Iterable, Optional

import matplotlib
import numpy as np

from matplotlib.figure import Figure

from ptbloch.ptb_logging import get_logger

logger = get_logger(__name__)

matplotlib.rcParams['svg.hashsalt'] = 'ptbloch'
matplotlib.rcParams['legend.frameon'] = False
matplotlib.rcParams['font.size'] = 10

FIGURE_SIZE = (6.4, 4.8)


class ComplexPlaneFigure:
    """Curves and markers given as complex numbers, drawn with Re on the x axis and Im on the y axis."""

    def __init__(self, title: Optional[str] = None, xlabel: str = r"Re $E$", ylabel: str = r"Im $E$",
                 equal_aspect: bool = False):
        self.figure = Figure(figsize=FIGURE_SIZE)
        self.ax = self.figure.add_subplot(1, 1, 1)
        if title:
            self.ax.set_title(title)
        self.ax.set_xlabel(xlabel)
        self.ax.set_ylabel(ylabel)
        self.ax.axhline(0.0, color="0.8", linewidth=0.6, zorder=0)
        if equal_aspect:
            self.ax.set_aspect("equal", adjustable="datalim")
        self._labelled = False

    def add_curve(self, points: Iterable[complex], label: Optional[str] = None, **style):
        points = np.asarray(list(points), dtype=complex)
        if points.size == 0:
            return self
        style.setdefault("linewidth", 1.2)
        self.ax.plot(points.real, points.imag, label=label, **style)
        self._labelled |= label is not None
        return self

    def add_markers(self, points: Iterable[complex], label: Optional[str] = None, marker: str = "o", **style):
        points = np.asarray(list(points), dtype=complex)
        if points.size == 0:
            return self
        style.setdefault("s", 30)
        self.ax.scatter(points.real, points.imag, label=label, marker=marker, zorder=3, **style)
        self._labelled |= label is not None
        return self

    def add_xy(self, x, y, label: Optional[str] = None, **style):
        self.ax.plot(np.asarray(x, dtype=float), np.asarray(y, dtype=float), label=label, **style)
        self._labelled |= label is not None
        return self

    def save(self, path: str) -> str:
        if self._labelled:
            self.ax.legend(loc="best")
        self.figure.tight_layout()
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        self.figure.savefig(path, format="svg", metadata={"Date": None})
        logger.verbose(f"Saved figure {path}")
        return path


def plot_discriminant(path: str, energies, deltas, title: Optional[str] = None) -> str:
    """Re Delta and Im Delta along a real energy line, with the band edges |Delta| = 2 marked."""
    energies = np.asarray(energies, dtype=complex)
    deltas = np.asarray(deltas, dtype=complex)
    figure = ComplexPlaneFigure(title=title, xlabel=r"Re $E$", ylabel=r"$\Delta(E)$")
    figure.add_xy(energies.real, deltas.real, label=r"Re $\Delta$", color="C0")
    figure.add_xy(energies.real, deltas.imag, label=r"Im $\Delta$", color="C1", linestyle="--")
    for level in (-2.0, 2.0):
        figure.ax.axhline(level, color="0.5", linewidth=0.6, linestyle=":")
    return figure.save(path)


def plot_spectrum(path: str, loci, branch_points=(), predicted=(), title: Optional[str] = None) -> str:
    """Traced spectral arcs with numeric branch points and the first-order predictions overlaid."""
    figure = ComplexPlaneFigure(title=title)
    for i, locus in enumerate(loci):
        for j, arc in enumerate(locus.arcs):
            figure.add_curve(arc.points, label="spectrum" if i == 0 and j == 0 else None, color="C0")
    figure.add_markers(branch_points, label="branch points", marker="o", color="C3")
    figure.add_markers(predicted, label="first order", marker="x", color="k")
    return figure.save(path)


def plot_divisor(path: str, report, title: Optional[str] = None) -> str:
    """Sampled divisor trajectory with the fitted ellipse, its foci, the closed form and the branch points."""
    figure = ComplexPlaneFigure(title=title, equal_aspect=True)
    if report.trajectory is not None:
        figure.add_curve(report.trajectory.gammas, label=r"$\gamma(x)$", color="C0", marker=".", markersize=2,
                         linewidth=0.8)
    if report.prediction is not None and not report.unperturbed:
        figure.add_curve(report.prediction.sample(256)[1], label="closed form", color="0.4", linestyle="--")
    if report.fit is not None:
        figure.add_curve(report.fit.points(256), label="fitted ellipse", color="C2")
        figure.add_markers(report.fit.foci, label="foci", marker="+", color="C2", s=60)
    elif report.segment is not None:
        figure.add_curve(report.segment, label="segment", color="C2", linewidth=2.0)
    if report.resonance is not None and report.resonance.numeric_branch_points is not None:
        figure.add_markers(report.resonance.numeric_branch_points, label="branch points", color="C3")
    return figure.save(path)


def plot_dubrovin(path: str, data, divisor_path, title: Optional[str] = None) -> str:
    """Divisor points moving on the energy plane under the Dubrovin flow."""
    figure = ComplexPlaneFigure(title=title)
    gammas = np.asarray(divisor_path.gammas, dtype=complex)
    for k in range(gammas.shape[1]):
        figure.add_curve(gammas[:, k], label=rf"$\gamma_{k + 1}$", color=f"C{k}", marker=".", markersize=2,
                         linewidth=0.8)
        figure.add_markers(gammas[:1, k], color=f"C{k}", marker="s", s=20)
    figure.add_markers(data.branch_points, label="branch points", marker="x", color="k")
    return figure.save(path)
