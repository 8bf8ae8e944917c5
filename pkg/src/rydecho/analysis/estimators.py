"""Least-squares regressors for echo curves, visibility decay and scaling laws.

All follow the scikit-learn estimator protocol (``fit`` returns ``self``,
fitted attributes end in ``_``, hyper-parameters are constructor arguments)
so they compose with pipelines, ``clone`` and model selection tools.
"""
import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted

from ..errors import DegenerateDataError, InvalidInputError
from ._validation import check_xy, column, covariance


class ParabolaRegressor(RegressorMixin, BaseEstimator):
    """Weighted least squares ``y = a (x - vertex)**2 + c``.

    With ``free_vertex=True`` a full quadratic ``a x**2 + b x + c`` is fitted
    instead and ``vertex_`` is derived from it.

    Parameters
    ----------
    vertex : float
        Abscissa of the pinned vertex.
    free_vertex : bool
        Fit the vertex position too.
    absolute_sigma : bool
        Treat ``sample_weight`` as ``1/stderr**2`` of the data, so the
        covariance is not rescaled by the residual variance.
    """

    def __init__(self, vertex=0.0, free_vertex=False, absolute_sigma=True):
        self.vertex = vertex
        self.free_vertex = free_vertex
        self.absolute_sigma = absolute_sigma

    def _design(self, x, scale=1.0):
        if self.free_vertex:
            u = x / scale
            return np.column_stack([u ** 2, u, np.ones_like(u)])
        u = (x - self.vertex) / scale
        return np.column_stack([u ** 2, np.ones_like(u)])

    def fit(self, X, y, sample_weight=None):
        x, y, w = check_xy(X, y, sample_weight)
        p = 3 if self.free_vertex else 2
        if len(np.unique(x)) < p:
            raise DegenerateDataError(
                f"need at least {p} distinct abscissae for a parabola, got {len(np.unique(x))}")
        # solve in rescaled coordinates; x may be ~1e-7 s
        scale = float(np.max(np.abs(x - (0.0 if self.free_vertex else self.vertex)))) or 1.0
        design = self._design(x, scale)
        sw = np.sqrt(w / np.max(w)) if np.max(w) > 0 else np.ones_like(w)
        a_w, y_w = design * sw[:, None], y * sw
        coef, _, rank, _ = np.linalg.lstsq(a_w, y_w, rcond=1e-13)
        if rank < p:
            raise DegenerateDataError("singular normal equations in parabola fit")
        resid = y_w - a_w @ coef
        units = scale ** -np.arange(p - 1, -1, -1.0) if self.free_vertex else np.array([scale ** -2, 1.0])
        abs_sigma = self.absolute_sigma and sample_weight is not None
        cov = covariance(a_w, resid, abs_sigma)
        if abs_sigma:
            cov = cov / np.max(w)
        self.coef_ = coef * units
        self.covariance_ = cov * np.outer(units, units)
        wn = np.sqrt(w)
        self.residual_norm_ = float(np.linalg.norm(wn * (y - design @ coef)))
        # initializer: flat line at the weighted mean
        self.initial_residual_norm_ = float(np.linalg.norm(wn * (y - np.average(y, weights=w))))
        if self.free_vertex:
            a, b, _ = self.coef_
            self.vertex_ = -b / (2 * a) if a != 0 else np.nan
        else:
            self.vertex_ = float(self.vertex)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self._design(column(X)) @ self.coef_


class ExponentialDecayRegressor(RegressorMixin, BaseEstimator):
    """``y = amplitude * exp(-x / decay)`` by damped Gauss-Newton.

    Starts from a log-linear regression on the positive ``y`` values. The
    rate ``1/decay`` is the internal parameter, so flat data converges to a
    zero rate (infinite ``decay_``) instead of diverging; such fits set
    ``identifiable_ = False``.
    """

    def __init__(self, max_iter=100, xtol=1e-12, absolute_sigma=False, min_rate=1e-8):
        self.max_iter = max_iter
        self.xtol = xtol
        self.absolute_sigma = absolute_sigma
        self.min_rate = min_rate

    @staticmethod
    def _initial(u, y, w):
        pos = y > 0
        if np.count_nonzero(pos) >= 2 and len(np.unique(u[pos])) >= 2:
            design = np.column_stack([np.ones(pos.sum()), -u[pos]])
            sw = np.sqrt(w[pos] * y[pos] ** 2)  # first-order weights for log(y)
            coef = np.linalg.lstsq(design * sw[:, None], np.log(y[pos]) * sw, rcond=None)[0]
            return np.array([np.exp(coef[0]), coef[1]])
        return np.array([float(np.mean(y)), 0.0])

    def fit(self, X, y, sample_weight=None):
        x, y, w = check_xy(X, y, sample_weight, min_samples=2)
        if np.any(x < 0):
            raise InvalidInputError("abscissae must be non-negative")
        if len(np.unique(x)) < 2:
            raise DegenerateDataError("need at least 2 distinct abscissae")
        scale = float(np.max(np.abs(x))) or 1.0
        u = x / scale
        sw = np.sqrt(w)

        def residual(p):
            return sw * (y - p[0] * np.exp(-p[1] * u))

        def jacobian(p):
            e = np.exp(-p[1] * u)
            # derivative of the model, weighted; residual = sw*(y - model)
            return np.column_stack([sw * e, -sw * p[0] * u * e])

        params = self._initial(u, y, w)
        r = residual(params)
        cost = float(r @ r)
        self.initial_residual_norm_ = np.sqrt(cost)
        converged = False
        for self.n_iter_ in range(1, self.max_iter + 1):
            jac = jacobian(params)
            step = np.linalg.lstsq(jac, r, rcond=None)[0]
            lam = 1.0
            improved = False
            while lam > 1e-10:
                trial = params + lam * step
                r_trial = residual(trial)
                c_trial = float(r_trial @ r_trial)
                if np.isfinite(c_trial) and c_trial <= cost:
                    improved = True
                    break
                lam *= 0.5
            if not improved:
                grad = jac.T @ r
                converged = bool(np.linalg.norm(grad) <= 1e-8 * (np.linalg.norm(jac) * np.sqrt(cost) + 1e-300))
                break
            delta = lam * step
            params, r, cost = trial, r_trial, c_trial
            if np.linalg.norm(delta) <= self.xtol * (np.linalg.norm(params) + self.xtol):
                converged = True
                break
        if not converged:
            warnings.warn(f"exponential fit did not converge in {self.max_iter} iterations",
                          ConvergenceWarning)

        cov_scaled = covariance(jacobian(params), r, self.absolute_sigma and sample_weight is not None)
        rate = params[1] / scale
        self.amplitude_ = float(params[0])
        self.rate_ = float(rate)
        self.identifiable_ = bool(abs(params[1]) > self.min_rate)
        self.decay_ = 1.0 / rate if self.identifiable_ else np.inf
        units = np.array([1.0, 1.0 / scale])
        self.covariance_ = cov_scaled * np.outer(units, units)  # (amplitude, rate)
        self.converged_ = converged
        self.residual_norm_ = float(np.sqrt(cost))
        self.n_features_in_ = 1
        return self

    @property
    def decay_stderr_(self):
        check_is_fitted(self, "rate_")
        if not self.identifiable_:
            return np.inf
        return float(np.sqrt(self.covariance_[1, 1]) / self.rate_ ** 2)

    def predict(self, X):
        check_is_fitted(self, "rate_")
        return self.amplitude_ * np.exp(-self.rate_ * column(X))


class PowerLawRegressor(RegressorMixin, BaseEstimator):
    """``y = prefactor * x**exponent`` by linear least squares in log-log space."""

    def fit(self, X, y, sample_weight=None):
        x, y, w = check_xy(X, y, sample_weight)
        if np.any(x <= 0) or np.any(y <= 0):
            raise InvalidInputError("power-law fit needs strictly positive data")
        if len(np.unique(x)) < 2:
            raise DegenerateDataError("need at least 2 distinct abscissae for a power law")
        lx, ly = np.log(x), np.log(y)
        design = np.column_stack([lx, np.ones_like(lx)])
        sw = np.sqrt(w)
        a_w, y_w = design * sw[:, None], ly * sw
        coef = np.linalg.lstsq(a_w, y_w, rcond=None)[0]
        resid = y_w - a_w @ coef
        self.exponent_ = float(coef[0])
        self.log_prefactor_ = float(coef[1])
        self.prefactor_ = float(np.exp(coef[1]))
        self.covariance_ = covariance(a_w, resid, False)
        self.residual_norm_ = float(np.linalg.norm(resid))
        # initializer: flat line through the mean log value
        self.initial_residual_norm_ = float(np.linalg.norm(sw * (ly - np.average(ly, weights=w))))
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        return self.prefactor_ * column(X) ** self.exponent_
