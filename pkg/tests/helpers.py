"""Shared independent oracles for the test suite."""

import math

import numpy as np
from scipy.integrate import quad


def levy_exponent_quadrature(s: float, kappa: float) -> complex:
    """Numerical quadrature of the compensated Levy exponent
    integral_0^inf (e^{isy} - 1 - isy*[1<kappa<2]) kappa y^{-kappa-1} dy,
    independent of any closed form used by the samplers."""
    dens = lambda y: kappa * y ** (-kappa - 1.0)
    compensate = 1.0 < kappa < 2.0
    re_inner = quad(lambda y: (math.cos(s * y) - 1.0) * dens(y), 0, 1,
                    limit=300)[0]
    re_tail = quad(dens, 1, np.inf, weight="cos", wvar=s)[0]
    re = re_inner + re_tail - 1.0       # integral_1^inf dens = 1
    if compensate:
        im_inner = quad(lambda y: (math.sin(s * y) - s * y) * dens(y), 0, 1,
                        limit=300)[0]
        drift = s * kappa / (kappa - 1.0)   # integral_1^inf y dens dy = k/(k-1)
    else:
        im_inner = quad(lambda y: math.sin(s * y) * dens(y), 0, 1,
                        limit=300)[0]
        drift = 0.0
    im_tail = quad(dens, 1, np.inf, weight="sin", wvar=s)[0]
    im = im_inner + im_tail - drift
    return complex(re, im)


def fd_gradient(f, theta, h=2e-6):
    """Central finite differences of a scalar function of two parameters."""
    g = np.zeros(2)
    for j in range(2):
        hp = h * max(1.0, abs(theta[j]))
        tp, tm = theta.copy(), theta.copy()
        tp[j] += hp
        tm[j] -= hp
        g[j] = (f(tp) - f(tm)) / (2.0 * hp)
    return g


def fd_jacobian(grad, theta, h=1e-6):
    """Central finite differences of a gradient, symmetrized."""
    hess = np.zeros((2, 2))
    for j in range(2):
        hp = h * max(1.0, abs(theta[j]))
        tp, tm = theta.copy(), theta.copy()
        tp[j] += hp
        tm[j] -= hp
        hess[j] = (grad(tp) - grad(tm)) / (2.0 * hp)
    return 0.5 * (hess + hess.T)
