"""Independent reference values computed with scipy only (no fplap code)."""
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad as _quad
from scipy.special import beta as B, gamma as G, hyp2f1


def quad(*a, **kw):
    # roundoff warnings from the cancelling pair near the diagonal are expected
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return _quad(*a, **kw)


def _phi(z, p):
    return np.sign(z) * abs(z) ** (p - 1)


def power_action_1d(s, p, eps=1e-4):
    """PV integral of Phi(1 - |y|^-g) |1 - y|^-(1+sp) over the line, g = sp/(2-p).

    The pair y = 1 +- z is integrated numerically for z > eps; below eps it
    is replaced by its leading Taylor term
    -(p-1) g^(p-1) (g+1) z^(p-1-sp), whose next correction is O(eps^(p+1-sp)).
    """
    g = s * p / (2 - p)
    sp = s * p
    f = lambda y: 0.0 if y == 0 or y == 1 else _phi(1 - abs(y) ** -g, p) * abs(1 - y) ** (-1 - sp)
    pair = lambda z: f(1 + z) + f(1 - z)
    kw = dict(limit=500, epsabs=1e-13, epsrel=1e-12)
    parts = [quad(pair, eps, 0.5, **kw), quad(pair, 0.5, 1, **kw),
             quad(f, -1, 0, **kw), quad(f, -np.inf, -1, **kw), quad(f, 2, np.inf, **kw)]
    head = -(p - 1) * g ** (p - 1) * (g + 1) * eps ** (p - sp) / (p - sp)
    return head + sum(v for v, _ in parts)


def _radial_kernel(N, s, p, rho):
    # integral of |e1 - rho w|^-(N+sp) over the unit sphere
    nu = (N + s * p) / 2
    S = 2 * np.pi ** ((N - 1) / 2) / G((N - 1) / 2)
    return S * B((N - 1) / 2, 0.5) * (1 + rho) ** (-2 * nu) * hyp2f1(nu, (N - 1) / 2, N - 1, 4 * rho / (1 + rho) ** 2)


def power_action_radial(N, s, p):
    """Same quantity for N >= 2 by reduction to a radial integral."""
    g = s * p / (2 - p)

    def f(r):
        if r <= 0 or r == 1:
            return 0.0
        return r ** (N - 1) * _radial_kernel(N, s, p, r) * _phi(1 - r ** -g, p)

    def pair(z):
        # inf - inf at underflowing z: the pair is integrable there, drop the sample
        with np.errstate(invalid="ignore"):
            v = f(1 + z) + f(1 - z)
        return v if np.isfinite(v) else 0.0

    return quad(pair, 0, 1, limit=500, epsabs=1e-12)[0] + quad(f, 2, np.inf, limit=500)[0]


def discrete_operator_bruteforce(u, h, s, p):
    """Interior part of the scheme by an explicit double loop: only pairs
    inside the grid, cell weights integrated by quad."""
    n = len(u)
    sp = s * p
    w = [quad(lambda z: z ** (-1 - sp), (j - 0.5) * h, (j + 0.5) * h)[0] for j in range(1, n)]
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for k in range(n):
            if k != i:
                acc += _phi(u[i] - u[k], p) * w[abs(i - k) - 1]
        out[i] = acc
    return out
