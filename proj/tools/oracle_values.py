#!/usr/bin/env python3
"""Independent reference values frozen into the unit and acceptance tests.

Uses only numpy/scipy and re-types the BBO coefficients by hand rather than
reading data/materials.db, so a transcription error in either place shows up
as a test failure.
"""
import math

import numpy as np
from scipy.special import erf


def bbo(l_nm, axis):
    l2 = (l_nm / 1000.0) ** 2
    if axis == "o":
        return math.sqrt(2.7359 + 0.01878 / (l2 - 0.01822) - 0.01354 * l2)
    return math.sqrt(2.3753 + 0.01224 / (l2 - 0.01667) - 0.01516 * l2)


def n_theta(no, ne, theta_deg):
    t = math.radians(theta_deg)
    return 1.0 / math.sqrt(math.cos(t) ** 2 / no**2 + math.sin(t) ** 2 / ne**2)


def walkoff_deg(no, ne, theta_deg):
    n = n_theta(no, ne, theta_deg)
    t = math.radians(theta_deg)
    return math.degrees(math.atan(n * n / 2 * (1 / ne**2 - 1 / no**2) * math.sin(2 * t)))


def idler(lp, ls):
    return 1.0 / (1.0 / lp - 1.0 / ls)


def pair_phase(length_mm, ls, li, theta=28.8):
    f = lambda l: (bbo(l, "o") - n_theta(bbo(l, "o"), bbo(l, "e"), theta)) / l
    return 2 * math.pi * length_mm * 1e6 * (f(ls) + f(li))


def psi_visibility(dl_um, fwhm=2.0, centre=792.0, lp=405.0, n=200001):
    sigma = fwhm / (2 * math.sqrt(2 * math.log(2)))
    ls = np.linspace(centre - 10 * sigma, centre + 10 * sigma, n)
    w = np.exp(-((ls - centre) ** 2) / (2 * sigma * sigma))
    li = 1 / (1 / lp - 1 / ls)
    phase = 2 * math.pi * dl_um * 1000 * (1 / ls - 1 / li)
    return abs(np.sum(w * np.exp(1j * phase)) / np.sum(w))


def main():
    print(f"bbo n_o(405)           {bbo(405, 'o'):.12g}")
    print(f"bbo n_e(405)           {bbo(405, 'e'):.12g}")
    print(f"n_theta(1.6614,1.5462,28.8) {n_theta(1.6614, 1.5462, 28.8):.12g}")
    for l in (792.0, 810.0, idler(405, 792)):
        rho = walkoff_deg(bbo(l, "o"), bbo(l, "e"), 28.8)
        print(f"walk-off {l:.4f} nm      {rho:.12g} deg  {4000 * math.tan(math.radians(rho)):.12g} um (4 mm)")
    print(f"idler(405, 792)        {idler(405, 792):.12g}")
    print(f"psi phase 20um 792/829 {2 * math.pi * 20000 * (1 / 792 - 1 / 829):.12g}")
    print(f"pair phase 4mm 792/829 {pair_phase(4, 792, 829):.12g}")
    ref = pair_phase(4, 792, idler(405, 792))
    print(f"pair phase 4mm 792/idler {ref:.12g}")
    for ls in range(787, 798):
        print(f"  relative phase ls={ls}  {pair_phase(4, ls, idler(405, ls)) - ref:.12g}")
    print(f"half-plane fraction at d = w/2  {0.5 * (1 + erf(math.sqrt(2) * 0.5)):.12g}")
    for d in (0, 10, 20, 50, 100):
        print(f"psi visibility {d:3d} um   {psi_visibility(d):.12g}")


if __name__ == "__main__":
    main()
