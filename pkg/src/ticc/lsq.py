"""Weighted nonlinear least squares with Gauss-Newton covariance.

Thin wrapper over scipy's Levenberg-Marquardt-style solvers. With explicit
sigmas the covariance is the unscaled inverse information matrix (absolute
weights); without sigmas it is scaled by the residual variance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize


@dataclass(frozen=True)
class FitResult:
    params: np.ndarray
    covariance: np.ndarray
    converged: bool
    singular: bool
    cost: float
    message: str = ""

    @property
    def param_sigmas(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diagonal(self.covariance), 0.0, None))


def nonlinear_least_squares(model, params0, xs, ys, sigmas=None) -> FitResult:
    """Fit ys ~ model(xs, *params) by weighted least squares.

    ``model`` must be vectorized over xs. Returns best-fit parameters with a
    covariance from the inverse Gauss-Newton information matrix at the
    optimum; a singular information matrix is flagged and pseudo-inverted.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    params0 = np.atleast_1d(np.asarray(params0, dtype=float))
    if ys.size < params0.size:
        raise ValueError("need at least as many samples as parameters")
    if sigmas is not None:
        sigmas = np.asarray(sigmas, dtype=float)
        if np.any(sigmas <= 0):
            raise ValueError("sigmas must be positive")

    def residuals(p):
        r = model(xs, *p) - ys
        return r / sigmas if sigmas is not None else r

    result = scipy.optimize.least_squares(residuals, params0, method="lm",
                                          xtol=1e-14, ftol=1e-14, gtol=1e-14)
    jac = result.jac
    info = jac.T @ jac
    singular = False
    try:
        cov = np.linalg.inv(info)
        if not np.all(np.isfinite(cov)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(info)
        singular = True
    if sigmas is None:
        dof = max(xs.size - params0.size, 1)
        cov = cov * (2 * result.cost / dof)
    converged = bool(result.status > 0)
    return FitResult(result.x, cov, converged, singular, float(result.cost),
                     message=result.message)


def scaling_fit_model(x, c0, c1, c2, c3):
    """Depth model c0 * t^c1 * log(t/eps) + c2 * log(1/eps) + c3.

    ``x`` is a (2, m) array of rows (t, eps).
    """
    t, eps = x
    return c0 * np.power(t, c1) * np.log(t / eps) + c2 * np.log(1.0 / eps) + c3
