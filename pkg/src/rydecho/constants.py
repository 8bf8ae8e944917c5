"""Physical constants and reference parameters of the 43S excitation experiment."""
import math

TWO_PI = 2.0 * math.pi

K_B = 1.380649e-23  # J/K
AMU = 1.66053906660e-27  # kg
M_RB87 = 86.909180527 * AMU

# Exact state-vector simulation holds 2**N amplitudes.
DEFAULT_CAP = 20
DENSE_CAP = 12

DEFAULT_R_MIN = 100e-9  # m

# Experimental reference values (angular frequencies in rad/s).
RABI_43S = TWO_PI * 90.5e3
TAU_REFERENCE = 478e-9
TAU_SERIES = (478e-9, 534e-9, 659e-9)
TEMPERATURE = 3.8e-6
PEAK_DENSITY_MAX = 5.2e19
N_GROUND_MAX = 1.1e7
SIGMA_SLOW = TWO_PI * 1.5e6
SIGMA_FAST = TWO_PI * 130e3
ECHO_STEPS = 10
