"""Echo-scan containers, fit results and the visibility / decay / scaling analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateDataError, InvalidInputError, UndefinedVisibilityError
from ._validation import weights_from_stderr
from .estimators import ExponentialDecayRegressor, ParabolaRegressor, PowerLawRegressor

STDERR_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class EchoScan:
    """Rydberg number versus phase-flip time ``tau_p`` for one pulse length ``tau``."""

    tau: float
    tau_p: np.ndarray
    n_r_mean: np.ndarray
    n_r_stderr: np.ndarray | None = None

    def __post_init__(self):
        tp = np.asarray(self.tau_p, dtype=float)
        nr = np.asarray(self.n_r_mean, dtype=float)
        if tp.shape != nr.shape or tp.ndim != 1:
            raise InvalidInputError("tau_p and n_r_mean must be 1-D and equally long")
        slack = 1e-12 * max(self.tau, 1e-300)
        if np.any(tp < -slack) or np.any(tp > self.tau + slack):
            raise InvalidInputError("every tau_p must lie in [0, tau]")
        object.__setattr__(self, "tau_p", tp)
        object.__setattr__(self, "n_r_mean", nr)
        if self.n_r_stderr is not None:
            se = np.asarray(self.n_r_stderr, dtype=float)
            if se.shape != tp.shape:
                raise InvalidInputError("n_r_stderr must match tau_p")
            object.__setattr__(self, "n_r_stderr", se)

    @classmethod
    def from_points(cls, tau, points):
        pts = np.asarray(points, dtype=float)
        stderr = pts[:, 2] if pts.shape[1] > 2 else None
        return cls(tau, pts[:, 0], pts[:, 1], stderr)

    def scaled(self, factor: float) -> EchoScan:
        se = None if self.n_r_stderr is None else self.n_r_stderr * factor
        return EchoScan(self.tau, self.tau_p, self.n_r_mean * factor, se)

    def value_at(self, tau_p: float) -> float | None:
        hit = np.flatnonzero(np.abs(self.tau_p - tau_p) <= 1e-9 * max(self.tau, 1e-300))
        if hit.size == 0:
            return None
        return float(np.mean(self.n_r_mean[hit]))


@dataclass(frozen=True, eq=False)
class FitResult:
    model: str
    params: dict
    stderrs: dict
    residual_norm: float
    converged: bool = True
    covariance: np.ndarray | None = None
    initial_residual_norm: float | None = None
    flags: frozenset = frozenset()
    meta: dict = field(default_factory=dict)

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.model == "parabola":
            return p["a"] * (x - self.meta["vertex"]) ** 2 + p["c"]
        if self.model == "parabola-free":
            return p["a"] * x ** 2 + p["b"] * x + p["c"]
        if self.model == "exponential":
            return p["amplitude"] * np.exp(-x / p["decay"])
        if self.model == "power-law":
            return p["prefactor"] * x ** p["exponent"]
        raise ValueError(f"unknown model {self.model!r}")


@dataclass(frozen=True)
class VisibilityPoint:
    n_g: float
    tau: float
    visibility: float
    stderr: float


def _stderr(cov, i):
    v = cov[i, i]
    return float(math.sqrt(v)) if np.isfinite(v) and v >= 0 else math.inf


def fit_parabola(scan: EchoScan, free_vertex: bool = False) -> FitResult:
    """Parabola through an echo scan, vertex pinned at ``tau/2`` unless ``free_vertex``.

    Points are weighted by ``1/stderr**2`` when every stderr is positive;
    stderrs below ``STDERR_FLOOR * max|N_R|`` are raised to that floor.
    """
    stderr = scan.n_r_stderr
    if stderr is not None:
        # exact revivals can report stderr ~1e-20; keep the weights' dynamic range finite
        stderr = np.maximum(stderr, STDERR_FLOOR * float(np.max(np.abs(scan.n_r_mean))))
    weights = weights_from_stderr(stderr)
    reg = ParabolaRegressor(vertex=scan.tau / 2, free_vertex=free_vertex)
    reg.fit(scan.tau_p, scan.n_r_mean, sample_weight=weights)
    names = ("a", "b", "c") if free_vertex else ("a", "c")
    return FitResult(
        model="parabola-free" if free_vertex else "parabola",
        params=dict(zip(names, map(float, reg.coef_))),
        stderrs={n: _stderr(reg.covariance_, i) for i, n in enumerate(names)},
        residual_norm=reg.residual_norm_,
        covariance=reg.covariance_,
        initial_residual_norm=reg.initial_residual_norm_,
        meta={"tau": scan.tau, "vertex": float(reg.vertex_)},
    )


def _eq2(n0, nh):
    denom = n0 + nh
    if not denom > 0:
        raise UndefinedVisibilityError(f"N_R(0) + N_R(tau/2) = {denom} is not positive")
    return (n0 - nh) / denom


def visibility(source) -> float:
    """Echo contrast ``(N_R(0) - N_R(tau/2)) / (N_R(0) + N_R(tau/2))``.

    A :class:`FitResult` is evaluated on its fitted curve. An
    :class:`EchoScan` uses its measured points at ``tau_p = 0`` and
    ``tau/2`` when both are on the grid, and is fitted otherwise.
    """
    if isinstance(source, EchoScan):
        n0, nh = source.value_at(0.0), source.value_at(source.tau / 2)
        if n0 is None or nh is None:
            return visibility(fit_parabola(source))
        return _eq2(n0, nh)
    tau = source.meta["tau"]
    n0, nh = source.predict([0.0, tau / 2])
    return _eq2(float(n0), float(nh))


def visibility_with_error(fit: FitResult) -> tuple[float, float]:
    """Visibility of a fitted echo curve and its error propagated from the fit covariance."""
    tau = fit.meta["tau"]
    vis = visibility(fit)
    basis = np.array([0.0, tau / 2])
    if fit.model == "parabola":
        rows = np.column_stack([(basis - fit.meta["vertex"]) ** 2, np.ones(2)])
    elif fit.model == "parabola-free":
        rows = np.column_stack([basis ** 2, basis, np.ones(2)])
    else:
        raise ValueError("visibility errors need a parabola fit")
    n0, nh = fit.predict(basis)
    denom = (n0 + nh) ** 2
    grad_v = np.array([2 * nh / denom, -2 * n0 / denom])  # dV/dN0, dV/dNh
    g = grad_v @ rows
    var = float(g @ fit.covariance @ g)
    return vis, math.sqrt(var) if np.isfinite(var) and var >= 0 else math.inf


def _xy_stderr(points):
    pts = [tuple(p) for p in points]
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    se = None
    if pts and all(len(p) > 2 and p[2] is not None for p in pts):
        se = np.array([p[2] for p in pts], dtype=float)
    return x, y, se


def fit_exponential_decay(points, max_iter: int = 100, xtol: float = 1e-12) -> FitResult:
    """Fit ``y = A exp(-x / x0)`` to ``(x, y[, stderr])`` points.

    A run that hits ``max_iter`` returns ``converged=False`` and warns;
    flat data gives ``decay = inf`` and the ``non-identifiable`` flag.
    """
    x, y, se = _xy_stderr(points)
    if len(x) < 3:
        raise DegenerateDataError(f"need at least 3 points, got {len(x)}")
    weights = weights_from_stderr(se)
    reg = ExponentialDecayRegressor(max_iter=max_iter, xtol=xtol)
    reg.fit(x, y, sample_weight=weights)
    flags = set()
    if not reg.identifiable_:
        flags.add("non-identifiable")
    if not reg.converged_:
        flags.add("not-converged")
    return FitResult(
        model="exponential",
        params={"amplitude": reg.amplitude_, "decay": reg.decay_},
        stderrs={"amplitude": _stderr(reg.covariance_, 0), "decay": reg.decay_stderr_},
        residual_norm=reg.residual_norm_,
        converged=reg.converged_,
        covariance=reg.covariance_,
        initial_residual_norm=reg.initial_residual_norm_,
        flags=frozenset(flags),
        meta={"rate": reg.rate_, "n_iter": reg.n_iter_},
    )


def fit_power_law(points) -> FitResult:
    """Fit ``y = prefactor * x**exponent`` to ``(x, y)`` points in log-log space."""
    x, y, _ = _xy_stderr(points)
    reg = PowerLawRegressor().fit(x, y)
    prefactor_se = reg.prefactor_ * _stderr(reg.covariance_, 1)
    return FitResult(
        model="power-law",
        params={"exponent": reg.exponent_, "prefactor": reg.prefactor_},
        stderrs={"exponent": _stderr(reg.covariance_, 0), "prefactor": prefactor_se},
        residual_norm=reg.residual_norm_,
        covariance=reg.covariance_,
        initial_residual_norm=reg.initial_residual_norm_,
    )
