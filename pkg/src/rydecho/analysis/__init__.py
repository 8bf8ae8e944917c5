"""Echo-curve, visibility, dephasing and scaling analysis."""
from .estimators import ExponentialDecayRegressor, ParabolaRegressor, PowerLawRegressor
from .fitting import (EchoScan, FitResult, VisibilityPoint, fit_exponential_decay,
                      fit_parabola, fit_power_law, visibility, visibility_with_error)

__all__ = [
    "EchoScan", "FitResult", "VisibilityPoint", "ParabolaRegressor",
    "ExponentialDecayRegressor", "PowerLawRegressor", "fit_parabola", "fit_power_law",
    "fit_exponential_decay", "visibility", "visibility_with_error",
]
