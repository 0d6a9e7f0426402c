"""
Tolerance checks applied to finished reports.

Each checker collects Issues from its check_* methods the same way for every report type; the verifier picks
the checker from the report's REPORT_TYPE and turns the issues into an overall CheckState.
"""
import abc
import enum
import math

from dataclasses import dataclass
from typing import Any, List, Optional

# Acceptance bounds on the first-order predictions
FIRST_ORDER_TOL = 5e-3
FOCAL_TOL = 5e-3
GAMMA0_IMAG_TOL = 1e-6
RMS_TOL = 1e-3
SLOPE_RANGE = (1.7, 2.3)
CONJUGATION_TOL = 1e-8


class CheckState(enum.Enum):
    PASSED = "passed"
    WARNING = "warning"
    FAILED = "failed"


@dataclass
class Issue:
    validation: CheckState
    message: str
    parameter: Optional[str] = None
    expected: Optional[Any] = None
    actual: Optional[Any] = None
    severity: str = "info"

    def __str__(self):
        result = f"[{self.validation.value.upper()}] {self.message}"
        if self.parameter:
            result += f" (Parameter: {self.parameter}"
            if self.expected is not None and self.actual is not None:
                result += f", Expected: {self.expected}, Actual: {self.actual}"
            result += ")"
        return result

    def to_dict(self):
        return dict(validation=self.validation.value, message=self.message, parameter=self.parameter,
                    expected=self.expected, actual=self.actual, severity=self.severity)


def bound_issue(parameter, actual, bound, message, failing_state=CheckState.WARNING) -> Issue:
    """PASSED when actual <= bound, otherwise failing_state."""
    if actual is None or (isinstance(actual, float) and math.isnan(actual)):
        return Issue(validation=failing_state, message=f"{message}: not available", parameter=parameter,
                     expected=f"<= {bound}", actual=actual, severity="warning")
    if actual <= bound:
        return Issue(validation=CheckState.PASSED, message=message, parameter=parameter,
                     expected=f"<= {bound}", actual=actual)
    return Issue(validation=failing_state, message=message, parameter=parameter, expected=f"<= {bound}",
                 actual=actual, severity="warning" if failing_state == CheckState.WARNING else "error")


class ReportChecker(abc.ABC):
    """
    Base class for checkers that call every self.check_* method
    """
    def __init__(self, report, logger):
        self.report = report
        self.logger = logger
        self.issues = []

        self.check_methods = [getattr(self, method) for method in dir(self)
                              if callable(getattr(self, method)) and method.startswith('check_')]

    def run_checks(self) -> List[Issue]:
        """Run all check methods and return a list of issues"""
        self.issues = []
        for check_method in self.check_methods:
            try:
                self.logger.debug(f"Running check {check_method.__name__}")
                method_issues = check_method()
                if method_issues:
                    if isinstance(method_issues, list):
                        self.issues.extend(method_issues)
                    else:
                        self.issues.append(method_issues)
            except Exception as e:
                self.logger.error(f"Error running check {check_method.__name__}: {e}")
                self.issues.append(Issue(
                    validation=CheckState.FAILED,
                    message=f"Check {check_method.__name__} failed with error: {e}",
                    severity="error"
                ))

        return self.issues


class ResonanceChecker(ReportChecker):

    def check_numeric_points_found(self) -> Optional[Issue]:
        if self.report.numeric_branch_points is None:
            return Issue(validation=CheckState.WARNING,
                         message=f"No branch points found near E0={self.report.E0}", parameter="numeric_branch_points",
                         severity="warning")
        return None

    def check_first_order_agreement(self) -> Optional[Issue]:
        if self.report.numeric_branch_points is None:
            return None
        return bound_issue("mismatch", self.report.mismatch, FIRST_ORDER_TOL,
                           "First-order and numeric branch points agree")

    def check_conjugation_symmetry(self) -> Optional[Issue]:
        points = self.report.numeric_branch_points
        if points is None:
            return None
        defect = max(min(abs(p.conjugate() - q) for q in points) for p in points)
        return bound_issue("conjugation_defect", defect, CONJUGATION_TOL, "Branch points are closed under conjugation")

    def check_verdict(self) -> Optional[Issue]:
        if self.report.numeric_verdict is None:
            return None
        if self.report.numeric_verdict == self.report.verdict:
            return Issue(validation=CheckState.PASSED, message="Numeric branch points confirm the first-order verdict",
                         parameter="verdict", expected=self.report.verdict.value,
                         actual=self.report.numeric_verdict.value)
        # A closed first-order point may split at higher order
        state = CheckState.PASSED if self.report.inconclusive else CheckState.WARNING
        return Issue(validation=state, message="Numeric branch points disagree with the first-order verdict",
                     parameter="verdict", expected=self.report.verdict.value,
                     actual=self.report.numeric_verdict.value,
                     severity="info" if self.report.inconclusive else "warning")


class DivisorChecker(ReportChecker):

    def check_unperturbed(self) -> Optional[Issue]:
        if self.report.unperturbed:
            return Issue(validation=CheckState.PASSED, message="Unperturbed resonance: the divisor point is constant",
                         parameter="unperturbed", expected=True, actual=True)
        return None

    def check_focal_mismatch(self) -> Optional[Issue]:
        if self.report.unperturbed:
            return None
        return bound_issue("focal_mismatch", self.report.focal_mismatch, FOCAL_TOL,
                           "Fitted foci sit on the numeric branch points")

    def check_smallest_scale_focal_mismatch(self) -> Optional[Issue]:
        rows = [row for row in self.report.scaling_table if row.focal_mismatch is not None]
        if not rows:
            return None
        row = min(rows, key=lambda r: r.scale)
        return bound_issue(f"focal_mismatch@{row.scale:g}", row.focal_mismatch, FOCAL_TOL,
                           "Fitted foci sit on the numeric branch points at the smallest coefficient scale")

    def check_gamma0_reality(self) -> Optional[Issue]:
        return bound_issue("gamma0_imag", self.report.gamma0_imag, GAMMA0_IMAG_TOL, "gamma(0) is real")

    def check_fit_residual(self) -> Optional[Issue]:
        fit = self.report.fit
        if fit is None:
            return None
        return bound_issue("rms_residual", fit.rms_residual, RMS_TOL, "Trajectory is an ellipse")

    def check_scaling_slope(self) -> Optional[Issue]:
        slope = self.report.scaling_slope
        if slope is None:
            return None
        low, high = SLOPE_RANGE
        state = CheckState.PASSED if low <= slope <= high else CheckState.WARNING
        return Issue(validation=state, message="Deviation from the closed form is second order",
                     parameter="scaling_slope", expected=f"[{low}, {high}]", actual=slope,
                     severity="info" if state == CheckState.PASSED else "warning")


class ResultVerifier:

    checkers = {
        "resonance": ResonanceChecker,
        "divisor": DivisorChecker,
    }

    def __init__(self, report, logger):
        self.logger = logger
        self.report = report
        self.issues = []
        report_type = getattr(report, "REPORT_TYPE", None)
        if report_type not in self.checkers:
            raise ValueError(f"No checker for report type {report_type!r}")
        self.checker = self.checkers[report_type](report, logger)

    def verify(self) -> CheckState:
        self.issues = self.checker.run_checks()
        counts = {state: 0 for state in CheckState}
        for issue in self.issues:
            counts[issue.validation] += 1
            if issue.validation == CheckState.FAILED:
                self.logger.error(f"FAILED: {issue}")
            elif issue.validation == CheckState.WARNING:
                self.logger.warning(f"{issue}")
            else:
                self.logger.verbose(f"{issue}")

        if hasattr(self.report, "issues"):
            self.report.issues = list(self.issues)

        if counts[CheckState.FAILED]:
            return CheckState.FAILED
        if counts[CheckState.WARNING]:
            return CheckState.WARNING
        return CheckState.PASSED
