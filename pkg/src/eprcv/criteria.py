"""EPR and separability inequalities evaluated on two-mode states.

Every function returns a :class:`CriterionReport`. ``margin = bound - lhs``;
a positive margin is a violation of the separable (or local-realist with
uncertainty proviso) bound. Violation of ``reid_product`` demonstrates EPR
correlations, and since no separable state can produce it, entanglement.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .inference import (
    P_PAIR,
    P_PAIR_FLIPPED,
    X_PAIR,
    inference_variance_conditional,
    linear_residual_variance,
    optimal_gain,
    optimal_offset,
)
from .quadrature import DEFAULT_POINTS, DEFAULT_SIGMAS
from .states import UncertaintyBounds

VIOLATION_TOL = 1e-9
DEFAULT_GAINS = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)

CRITERIA = ("reid_product", "linear_product", "any_g_product", "two_mode_squeezing", "duan_sum")

EPR_NOTE = (
    "Reid EPR criterion violated: EPR correlations demonstrated; "
    "no separable state can do this, so the state is entangled"
)
ENTANGLEMENT_NOTE = "separability bound violated: state is entangled"

CSV_FIELDS = ["criterion", "lhs", "bound", "margin", "params", "method", "convergence_delta"]


def fmt(value):
    """Fixed 12-significant-digit formatting used by every CSV writer."""
    if value is None:
        return ""
    return f"{float(value):.12g}"


@dataclass(frozen=True)
class CriterionReport:
    name: str
    lhs: float
    bound: float
    violated: bool
    params: dict = field(default_factory=dict)
    method: str = "linear"
    convergence_delta: Optional[float] = None
    se: Optional[float] = None
    note: str = ""

    @property
    def margin(self):
        return self.bound - self.lhs

    def params_text(self):
        return ";".join(f"{k}={fmt(v)}" for k, v in self.params.items())

    def row(self, with_se=False):
        out = {
            "criterion": self.name,
            "lhs": fmt(self.lhs),
            "bound": fmt(self.bound),
            "margin": fmt(self.margin),
            "params": self.params_text(),
            "method": self.method,
            "convergence_delta": fmt(self.convergence_delta),
        }
        if with_se:
            out["se"] = fmt(self.se)
            out["violated"] = str(self.violated).lower()
        return out


def _exact_report(name, lhs, bound, params, method="linear", note=ENTANGLEMENT_NOTE):
    violated = bool(lhs < bound - VIOLATION_TOL)
    return CriterionReport(name, float(lhs), float(bound), violated, params, method, note=note if violated else "")


def _optimal_linear_variance(state, pair, g=None):
    if g is None:
        g = optimal_gain(state, pair)
    d = optimal_offset(state, pair, g)
    return max(linear_residual_variance(state, pair, g, d), 0.0), g, d


def conditional_convergence_delta(state, lhs, n_points=DEFAULT_POINTS, n_sigmas=DEFAULT_SIGMAS):
    """Discretization diagnostic for the conditional Reid product.

    Largest change in the product under (i) doubling the points on the same
    range and (ii) widening the range by two standard deviations at the same
    bin width. The first bounds the midpoint-rule error, the second the
    variance lost to the grid cutoff.
    """
    def product(points, sigmas):
        vx, vp = (
            inference_variance_conditional(state, pair, n_points=points, n_sigmas=sigmas).variance
            for pair in (X_PAIR, P_PAIR)
        )
        return np.sqrt(vx * vp)

    refined = product(2 * n_points, n_sigmas)
    wide_points = int(np.ceil(n_points * (n_sigmas + 2) / n_sigmas))
    widened = product(wide_points, n_sigmas + 2)
    return float(max(abs(refined - lhs), abs(widened - lhs)))


def reid_epr_criterion(
    state,
    method="conditional",
    gains=None,
    bounds=UncertaintyBounds(),
    *,
    n_points=DEFAULT_POINTS,
    n_sigmas=DEFAULT_SIGMAS,
):
    """``Delta_inf x * Delta_inf p < C`` (EPR correlations).

    ``method="conditional"`` uses the optimal conditional-mean inference on a
    grid and records :func:`conditional_convergence_delta` in ``convergence_delta``;
    a violation is flagged only when the margin exceeds that change.
    ``method="linear"`` uses linear estimates with gains ``(g, h)`` (optimal
    when ``gains`` is None) and exact moments. ``h`` multiplies ``p_B``.
    """
    c = bounds.c_bound
    if method == "conditional":
        vx, vp = (
            inference_variance_conditional(state, pair, n_points=n_points, n_sigmas=n_sigmas)
            for pair in (X_PAIR, P_PAIR)
        )
        lhs = np.sqrt(vx.variance * vp.variance)
        delta = conditional_convergence_delta(state, lhs, n_points, n_sigmas)
        margin = c - lhs
        violated = bool(margin > delta + VIOLATION_TOL)
        params = {"C": c, "var_x": vx.variance, "var_p": vp.variance, "grid_points": n_points}
        return CriterionReport(
            "reid_product", float(lhs), c, violated, params, "conditional", float(delta),
            note=EPR_NOTE if violated else "",
        )
    if method != "linear":
        raise ValueError(f"unknown method {method!r}")
    g, h = (None, None) if gains is None else gains
    vx, g, dx = _optimal_linear_variance(state, X_PAIR, g)
    vp, h, dp = _optimal_linear_variance(state, P_PAIR, h)
    lhs = np.sqrt(vx * vp)
    params = {"g": g, "h": h, "d_x": dx, "d_p": dp, "C": c}
    return _exact_report("reid_product", lhs, c, params, "linear", EPR_NOTE)


def linear_product_criterion(state, g, h, bounds=UncertaintyBounds()):
    """``Delta^2_L x * Delta^2_L p >= C^2 + g^2 h^2 D^2`` for separable states.

    ``g`` is the gain on ``x_B``; ``h`` the signed gain on ``p_B``. Offsets are optimal.
    """
    vx, _, dx = _optimal_linear_variance(state, X_PAIR, g)
    vp, _, dp = _optimal_linear_variance(state, P_PAIR, h)
    c, d = bounds.c_bound, bounds.d_bound
    bound = c * c + g * g * h * h * d * d
    params = {"g": g, "h": h, "d_x": dx, "d_p": dp, "C": c, "D": d}
    return _exact_report("linear_product", vx * vp, bound, params)


def any_g_product_criterion(state, g, bounds=UncertaintyBounds()):
    """Centered residual product at a common gain ``g`` against ``C^2 (1 + g^4)``.

    The partner for the p-inference is ``q = -p_B``.
    """
    vx, _, dx = _optimal_linear_variance(state, X_PAIR, g)
    vq, _, dq = _optimal_linear_variance(state, P_PAIR_FLIPPED, g)
    c = bounds.c_bound
    params = {"g": g, "d_x": dx, "d_p": dq, "C": c}
    return _exact_report("any_g_product", vx * vq, c * c * (1 + g**4), params)


def two_mode_squeezing_criterion(state, bounds=UncertaintyBounds()):
    """Unit-gain squeezing test: both ``Delta^2_L x`` and ``Delta^2_L p`` below ``2 C^2``.

    ``lhs`` is the larger of the two variances; the sign of ``h`` is chosen
    to minimize the p-variance.
    """
    vx, _, dx = _optimal_linear_variance(state, X_PAIR, 1.0)
    vp_plus, _, dp_plus = _optimal_linear_variance(state, P_PAIR, 1.0)
    vp_minus, _, dp_minus = _optimal_linear_variance(state, P_PAIR, -1.0)
    if vp_minus <= vp_plus:
        vp, h, dp = vp_minus, -1.0, dp_minus
    else:
        vp, h, dp = vp_plus, 1.0, dp_plus
    c = bounds.c_bound
    params = {"g": 1.0, "h": h, "d_x": dx, "d_p": dp, "var_x": vx, "var_p": vp, "C": c}
    report = _exact_report("two_mode_squeezing", max(vx, vp), 2 * c * c, params)
    if report.violated:
        report = CriterionReport(
            report.name, report.lhs, report.bound, True, params, "linear",
            note="both unit-gain variances below 2C^2, so Delta_L x Delta_L p < 2C^2: state is entangled",
        )
    return report


def duan_sum_criterion(state, bounds=UncertaintyBounds()):
    """Sum witness ``Var(x_A - x_B) + Var(p_A + p_B) >= 2 (C + D)``."""
    vx, _, _ = _optimal_linear_variance(state, X_PAIR, 1.0)
    vp, _, _ = _optimal_linear_variance(state, P_PAIR, -1.0)
    c, d = bounds.c_bound, bounds.d_bound
    params = {"C": c, "D": d}
    return _exact_report("duan_sum", vx + vp, 2 * (c + d), params)


def evaluate_all(
    state,
    gains=DEFAULT_GAINS,
    bounds=UncertaintyBounds(),
    *,
    n_points=DEFAULT_POINTS,
    n_sigmas=DEFAULT_SIGMAS,
    conditional=True,
):
    """Run every criterion over the gain sweep, sorted by margin (largest violation first).

    Includes the Reid product with both methods, the linear product at the
    optimal gains and at every ``(g, h)`` pair of the sweep, the common-gain
    product at every ``g``, the unit-gain squeezing test and the sum witness.
    """
    reports = []
    if conditional:
        reports.append(reid_epr_criterion(state, "conditional", bounds=bounds, n_points=n_points, n_sigmas=n_sigmas))
    reid_lin = reid_epr_criterion(state, "linear", bounds=bounds)
    reports.append(reid_lin)
    g_opt, h_opt = reid_lin.params["g"], reid_lin.params["h"]
    reports.append(linear_product_criterion(state, g_opt, h_opt, bounds))
    for g in gains:
        for h in gains:
            reports.append(linear_product_criterion(state, g, h, bounds))
    for g in gains:
        reports.append(any_g_product_criterion(state, g, bounds))
    reports.append(two_mode_squeezing_criterion(state, bounds))
    reports.append(duan_sum_criterion(state, bounds))
    return sorted(reports, key=lambda r: -r.margin)


def any_violation(reports):
    return any(r.violated for r in reports)


def summarize(reports):
    """One-paragraph classification of a report list."""
    violated = {r.name for r in reports if r.violated}
    if not violated:
        return "no criterion violated: the evaluated inequalities are consistent with a separable state"
    lines = [f"violated: {', '.join(n for n in CRITERIA if n in violated)}"]
    if "reid_product" in violated:
        lines.append(EPR_NOTE + "; with spacelike-separated measurements this is the original EPR scenario")
    else:
        lines.append(ENTANGLEMENT_NOTE)
    return "\n".join(lines)


def reports_to_csv(reports, fh=None, with_se=False):
    """Write reports as CSV; returns the text when ``fh`` is None."""
    out = fh if fh is not None else io.StringIO()
    fields = CSV_FIELDS + (["se", "violated"] if with_se else [])
    writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.row(with_se))
    return out.getvalue() if fh is None else None


def format_table(reports, with_se=False):
    """Fixed-width text table for terminal output."""
    header = f"{'criterion':<20}{'method':<13}{'lhs':>12}{'bound':>12}{'margin':>12}"
    if with_se:
        header += f"{'se':>12}"
    header += "  violated  params"
    lines = [header, "-" * len(header)]
    for r in reports:
        line = f"{r.name:<20}{r.method:<13}{r.lhs:>12.6f}{r.bound:>12.6f}{r.margin:>12.6f}"
        if with_se:
            line += f"{(r.se if r.se is not None else float('nan')):>12.6f}"
        line += f"  {'YES' if r.violated else 'no':<8}  {r.params_text()}"
        lines.append(line)
    return "\n".join(lines)
