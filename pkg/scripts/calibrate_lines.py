"""Fit the effective (``source: calibrated``) matrix elements of the bundled
constants file so that the sum over states reproduces the reference
polarizabilities at 759.35 nm, then print the values to paste into the file.

Targets: alpha_S(1S0) = alpha_S(3P0) = 186 a.u.; 3P1 F=3/2 alpha_S = 233 a.u.
and alpha_T = 87 a.u. The two 3P1 equations leave a two-parameter family of
even-parity remainder strengths; the remaining freedom is fixed by also asking
that the corrected polarizabilities cross the ground state near 778 nm and
converge near 796 nm, which are the reported features of the corrected curves.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.optimize import brentq, least_squares

from ybqnd.atomic.data import load_atomic_data
from ybqnd.atomic.polarizability import (
    MEASURED_DIFF_HALF, MEASURED_DIFF_THREEHALF, REFERENCE_WAVELENGTH, polarizability,
    solve_polarizability_correction, total_polarizability,
)
from ybqnd.constants import wavelength_to_omega

DATA = load_atomic_data()
W_REF = wavelength_to_omega(REFERENCE_WAVELENGTH)


def with_dipoles(lines, updates):
    out = []
    for ln in lines:
        key = (ln.lower.label, ln.upper.label)
        out.append(dataclasses.replace(ln, reduced_dipole_au=updates[key]) if key in updates else ln)
    return out


def fit_scalar(level, key, target):
    st = DATA.state(level, 0.5, 0.5)

    def f(d):
        lines = with_dipoles(DATA.lines_for(level), {key: d})
        return polarizability(st, lines, W_REF).alpha_scalar - target

    return brentq(f, 0.01, 10.0, xtol=1e-10)


def main() -> None:
    d_tail = fit_scalar("1S0", ("1S0", "odd-continuum"), 186.0)
    d_p0 = fit_scalar("3P0", ("3P0", "6p2-3P1"), 186.0)
    print(f"1S0 odd-continuum: {d_tail:.7f}")
    print(f"3P0 6p2-3P1:      {d_p0:.7f}")

    g = DATA.state("1S0", 0.5, 0.5)
    g_lines = with_dipoles(DATA.lines_for("1S0"), {("1S0", "odd-continuum"): d_tail})
    e = DATA.state("3P1", 1.5, 1.5)
    keys = [("3P1", "1D2"), ("3P1", "6p2-3P0"), ("3P1", "6p2-3P1"), ("3P1", "6p2-3P2")]
    a_t, d_s = solve_polarizability_correction(MEASURED_DIFF_HALF, MEASURED_DIFF_THREEHALF, 186.0)

    def ground(wl):
        return polarizability(g, g_lines, wavelength_to_omega(wl)).alpha_scalar

    def resid(x):
        lines = with_dipoles(DATA.lines_for("3P1"), dict(zip(keys, x)))
        p759 = polarizability(e, lines, W_REF)
        c_s, c_t = 186.0 + d_s - p759.alpha_scalar, a_t - p759.alpha_tensor
        p796 = polarizability(e, lines, wavelength_to_omega(796e-9))
        p778 = polarizability(e, lines, wavelength_to_omega(778e-9))
        a778 = total_polarizability(p778, 0.0, 1.5, 1.5) + c_s + c_t
        return np.array([
            100 * (p759.alpha_scalar - 233.0),
            100 * (p759.alpha_tensor - 87.0),
            p796.alpha_tensor + c_t,
            a778 - ground(778e-9),
        ])

    sol = least_squares(resid, [0.6, 2.0, 2.0, 2.5], bounds=(0, 20))
    for k, v in zip(keys, sol.x):
        print(f"{k[0]}-{k[1]}: {v:.7f}")
    print("residuals:", resid(sol.x))


if __name__ == "__main__":
    main()
