"""Regenerate the bundled echo-scan fixtures used by ``rydecho fit``.

The scans are synthetic: parabolic echo curves whose visibilities are the
published 47 %, 48 % and 29 % at N_g = 1.0e6, 3.3e6 and 1.0e7, with error
bars sized so that the fitted visibility uncertainty matches the published
one, plus seeded Gaussian scatter at the error-bar scale.
"""
import numpy as np

from rydecho.analysis import EchoScan, fit_parabola, visibility_with_error
from rydecho.cli.io import write_csv

TAU = 478e-9
CASES = [  # file, N_g, visibility, visibility error
    ("echo_ng_1.0e6.csv", 1.0e6, 0.47, 0.08),
    ("echo_ng_3.3e6.csv", 3.3e6, 0.48, 0.05),
    ("echo_ng_1.0e7.csv", 1.0e7, 0.29, 0.06),
]


def main(out="src/rydecho/data", seed=20080115):
    rng = np.random.default_rng(seed)
    tau_p = np.linspace(0.0, TAU, 11)
    for name, n_g, vis, vis_err in CASES:
        n0 = 3000.0 * (n_g / 1.1e7) ** 0.43
        c = n0 * (1 - vis) / (1 + vis)
        curve = (n0 - c) * ((tau_p - TAU / 2) / (TAU / 2)) ** 2 + c
        unit = np.ones_like(tau_p)
        _, err_unit = visibility_with_error(fit_parabola(EchoScan(TAU, tau_p, curve, unit)))
        sigma = vis_err / err_unit
        data = curve + rng.normal(0.0, sigma, size=curve.shape)
        rows = [(t * 1e9, y, sigma) for t, y in zip(tau_p, data)]
        write_csv(f"{out}/{name}", ["tau_p_ns", "n_r_mean", "n_r_stderr"], rows,
                  {"tau_ns": TAU * 1e9, "n_ground": n_g, "synthetic": "true"})


if __name__ == "__main__":
    main()
