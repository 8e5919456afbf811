"""Oracles shared by the unit and acceptance tests."""

import mpmath
import numpy as np
import scipy.linalg

from slagcount.harish_chandra import GroupElement, form_matrix


def xi12_exact(t):
    # for SO(1,2) the spherical function at rho is the Legendre function P_{-1/2}(cosh t)
    return float(mpmath.legenp(-0.5, 0, mpmath.cosh(t)))


def random_n(spec, rng):
    """exp of a random element of the nilradical: block strictly upper part of so(p, q)."""
    n, p = spec.n, spec.p
    j = form_matrix(spec, "hyperbolic")
    a = rng.standard_normal((n, n))
    y = np.linalg.solve(j, a - a.T)
    blocks = list(range(p)) + [p] * (n - 2 * p) + list(range(p + 1, 2 * p + 1))
    mask = np.array([[blocks[r] < blocks[c] for c in range(n)] for r in range(n)])
    x = np.where(mask, y, 0.0)
    assert np.allclose(x.T @ j + j @ x, 0, atol=1e-12)
    return GroupElement(scipy.linalg.expm(x), spec, "hyperbolic")


def random_k(spec, rng):
    k = np.zeros((spec.n, spec.n))
    for lo, size in ((0, spec.p), (spec.p, spec.q)):
        qm, r = np.linalg.qr(rng.standard_normal((size, size)))
        k[lo:lo + size, lo:lo + size] = qm * np.sign(np.diag(r))
    return GroupElement(k, spec)


def isotropic_uu(a, c, m):
    # x1 x2 + x3 x4 = a c m - c a m = 0
    return (a, c * m, c, -a * m)
