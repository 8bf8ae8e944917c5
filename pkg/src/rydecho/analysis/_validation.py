"""Input checks shared by the regressors."""
import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length

from ..errors import DegenerateDataError, InvalidInputError


def column(x, name="X"):
    """Accept ``(n,)`` or ``(n, 1)`` input and return a flat float array."""
    arr = check_array(np.asarray(x, dtype=float).reshape(len(x), -1), input_name=name)
    if arr.shape[1] != 1:
        raise InvalidInputError(f"{name} must have a single feature, got {arr.shape[1]}")
    return arr[:, 0]


def check_xy(X, y, sample_weight=None, min_samples=1):
    x = column(X)
    y = check_array(np.asarray(y, dtype=float), ensure_2d=False, input_name="y")
    check_consistent_length(x, y)
    if len(x) < min_samples:
        raise DegenerateDataError(f"need at least {min_samples} points, got {len(x)}")
    if sample_weight is None:
        w = np.ones_like(x)
    else:
        w = check_array(np.asarray(sample_weight, dtype=float), ensure_2d=False,
                        input_name="sample_weight")
        check_consistent_length(x, w)
        if np.any(w < 0):
            raise InvalidInputError("sample weights must be non-negative")
    return x, y, w


def weights_from_stderr(stderr):
    """``1/stderr**2`` when every stderr is positive and finite, else ``None`` (uniform)."""
    if stderr is None:
        return None
    s = np.asarray(stderr, dtype=float)
    if s.size == 0 or np.any(~np.isfinite(s)) or np.any(s <= 0):
        return None
    return 1.0 / s ** 2


def covariance(jac_w, resid_w, absolute_sigma):
    """Linearized parameter covariance from weighted Jacobian and residuals."""
    n, p = jac_w.shape
    jtj = jac_w.T @ jac_w
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        return np.full((p, p), np.inf)
    if not absolute_sigma:
        if n > p:
            cov = cov * float(resid_w @ resid_w) / (n - p)
        else:
            cov = np.full((p, p), np.inf)
    return cov
