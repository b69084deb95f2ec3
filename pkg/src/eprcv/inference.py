"""Inference variances for predicting a quadrature at A from one measured at B.

Two estimators:

* conditional: ``sum_i P(y_i) Var(x | y_i)`` from the binned joint distribution
  (the best any estimator can do);
* linear: ``<(x - g y - d)^2>`` for the estimate ``x_est = g y + d``, computed
  from exact operator moments. Because x and y live on different modes the
  moments are unambiguous.

A measurement pair is ``(theta_a, phi_b)``: the inferred quadrature
``x_theta`` at A and the measured ``x_phi`` at B.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateStateError
from .quadrature import DEFAULT_POINTS, DEFAULT_SIGMAS, conditional_profile, joint_distribution
from .states import moments, rotation_vector

X_PAIR = (0.0, 0.0)
P_PAIR = (np.pi / 2, np.pi / 2)
# partner q = -p_B, so a positive gain infers p_A from anticorrelated p_B
P_PAIR_FLIPPED = (np.pi / 2, -np.pi / 2)


@dataclass(frozen=True)
class LinearEstimator:
    g: float
    d: float

    def __post_init__(self):
        if not (np.isfinite(self.g) and np.isfinite(self.d)):
            raise ValueError("estimator gain and offset must be finite")


@dataclass(frozen=True)
class InferenceResult:
    variance: float
    method: str
    observable: float
    partner: float
    estimator: Optional[LinearEstimator] = None
    convergence_delta: Optional[float] = None

    @property
    def std(self):
        return float(np.sqrt(self.variance))


def _pair_vectors(pair):
    theta, phi = pair
    ua = np.concatenate([rotation_vector(theta), [0.0, 0.0]])
    ub = np.concatenate([[0.0, 0.0], rotation_vector(phi)])
    return ua, ub


def pair_moments(state, pair):
    """``(mean_x, mean_y, var_x, var_y, cov_xy)`` for the measurement pair."""
    mean, cov = moments(state)
    ua, ub = _pair_vectors(pair)
    return (
        float(ua @ mean),
        float(ub @ mean),
        float(ua @ cov @ ua),
        float(ub @ cov @ ub),
        float(ua @ cov @ ub),
    )


def optimal_offset(state, pair, g):
    """Offset making ``g y + d`` unbiased: ``d = <x> - g <y>``."""
    mx, my, *_ = pair_moments(state, pair)
    return mx - g * my


def optimal_gain(state, pair):
    """Regression gain ``Cov(x, y) / Var(y)`` minimizing the linear inference variance."""
    _, _, _, vy, cxy = pair_moments(state, pair)
    if vy <= 1e-12:
        raise DegenerateStateError(f"partner quadrature has variance {vy:.3e}; gain undefined")
    return cxy / vy


def linear_residual_variance(state, pair, g, d=None):
    """``<(x - g y - d)^2>``; ``d=None`` uses the optimal offset."""
    mx, my, vx, vy, cxy = pair_moments(state, pair)
    bias = 0.0 if d is None else (mx - g * my - d)
    return vx - 2 * g * cxy + g * g * vy + bias * bias


def inference_variance_linear(state, pair=X_PAIR, est=None):
    """Linear-estimate inference variance; ``est=None`` picks the optimal gain and offset."""
    if est is None:
        g = optimal_gain(state, pair)
        est = LinearEstimator(g, optimal_offset(state, pair, g))
    var = linear_residual_variance(state, pair, est.g, est.d)
    return InferenceResult(max(var, 0.0), "linear", pair[0], pair[1], est)


def inference_variance_conditional(
    state,
    pair=X_PAIR,
    grid_a=None,
    grid_b=None,
    *,
    n_points=DEFAULT_POINTS,
    n_sigmas=DEFAULT_SIGMAS,
    refine=False,
):
    """Average conditional variance ``sum_i P(y_i) Delta_i^2`` on a quadrature grid.

    With ``refine=True`` the computation is repeated at twice the resolution
    and ``convergence_delta`` records the absolute change.
    """
    joint = joint_distribution(state, pair[0], pair[1], grid_a, grid_b, n_points=n_points, n_sigmas=n_sigmas)
    var = conditional_profile(joint).average_variance
    delta = None
    if refine:
        fine = joint_distribution(state, pair[0], pair[1], joint.grid_a.refined(), joint.grid_b.refined())
        delta = abs(conditional_profile(fine).average_variance - var)
    return InferenceResult(var, "conditional", pair[0], pair[1], None, delta)
