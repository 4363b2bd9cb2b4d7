"""Principal-value quadrature of the operator on radial powers in R^N.

A(N,s,p) = L(r^-gamma) at |x| = 1.  In polar coordinates around the origin

    A = PV int_0^inf rho^(N-1) K(rho) Phi(1 - rho^-gamma) drho,
    K(rho) = int_{S^(N-1)} |e - rho w|^-(N+sp) dw,

where K has a non-integrable |1-rho|^-(1+sp) singularity.  The principal
value is taken by pairing rho = 1 +- z on z in (0,1); the paired integrand
behaves like z^(p-1-sp), which is integrable.  rho > 2 is mapped onto (0,1]
so that the integrand is bounded.  All pieces use composite Gauss-Legendre
on panels graded geometrically toward the singular ends; the error estimate
is the difference between two successive refinement levels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import bisect
from scipy.special import gammaln

from .errors import NumericalError, ValidationError
from .params import Params, derive_exponents, p_c_of


@dataclass(frozen=True)
class ConstantReport:
    N: int
    s: float
    p: float
    A: float
    k: float
    C_inf: Optional[float]
    error_estimate: float
    levels: int

    def as_dict(self):
        return asdict(self)


@lru_cache(maxsize=None)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def _panels(edges: np.ndarray, order: int):
    x, w = _leggauss(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * x
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def _geometric(lo: float, hi: float, ratio: float) -> np.ndarray:
    k = int(math.ceil(math.log(hi / lo) / math.log(ratio)))
    return lo * (hi / lo) ** (np.arange(k + 1) / k)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^d in R^(d+1)."""
    return float(2.0 * math.pi ** ((d + 1) / 2.0) / math.exp(gammaln((d + 1) / 2.0)))


class _Kernel:
    """K(rho) for a source point at distance r0 from the origin."""

    def __init__(self, N: int, nu2: float, r0: float, order: int, ratio: float):
        self.N = N
        self.nu2 = nu2  # N + sp
        self.r0 = r0
        self.order = order
        self.ratio = ratio
        if N >= 2:
            self.cst = sphere_area(N - 2)
            # angular panel edges in units of the near-singular width |r0-rho|
            self.scale = np.concatenate([[0.0], 2.0 ** np.arange(-3.0, 61.0)])

    def __call__(self, rho: np.ndarray, dist: np.ndarray) -> np.ndarray:
        """dist = |r0 - rho|, passed separately to keep it exact near rho=r0."""
        r0 = self.r0
        if self.N == 1:
            return dist ** (-self.nu2) + (r0 + rho) ** (-self.nu2)
        out = np.empty(rho.shape[0])
        for c in range(0, rho.shape[0], 256):
            out[c:c + 256] = self._angular(rho[c:c + 256], dist[c:c + 256])
        return out

    def _angular(self, rho, dist):
        eps = np.maximum(dist, 1e-300)[:, None]
        edges = np.minimum(eps * self.scale[None, :], math.pi)
        keep = np.flatnonzero(np.any(edges[:, 1:] > edges[:, :-1], axis=0))
        edges = edges[:, np.r_[keep, keep[-1] + 1]]
        x, w = _leggauss(self.order)
        a = edges[:, :-1, None]
        b = edges[:, 1:, None]
        th = 0.5 * (a + b) + 0.5 * (b - a) * x
        wt = 0.5 * (b - a) * w
        q = dist[:, None, None] ** 2 + 4.0 * self.r0 * rho[:, None, None] * np.sin(0.5 * th) ** 2
        f = q ** (-0.5 * self.nu2)
        if self.N > 2:
            f = f * np.sin(th) ** (self.N - 2)
        return self.cst * np.sum(f * wt, axis=(1, 2))


def _phi(z, p):
    return np.sign(z) * np.abs(z) ** (p - 1.0)


def _power_action(N: int, s: float, p: float, gamma: float, r0: float, level: int) -> float:
    sp = s * p
    order = 8 + 4 * level
    ratio = 2.0 ** (1.0 / (1 + level))
    K = _Kernel(N, N + sp, r0, order, ratio)
    z0 = r0 * 10.0 ** (-min(4 + level, 7))
    z1 = r0 * 10.0 ** (-(6 + 2 * level))
    c0 = r0 ** (-gamma)

    def g(rho, log_rho, dist):
        diff = c0 * (-np.expm1(gamma * (math.log(r0) - log_rho)))  # r0^-g - rho^-g
        return rho ** (N - 1) * K(rho, dist) * _phi(diff, p)

    def pair_z(z):
        up = g(r0 + z, np.log(r0) + np.log1p(z / r0), z)
        dn = g(r0 - z, np.log(r0) + np.log1p(-z / r0), z)
        return up + dn

    def pair_rho(rho):
        # same pairing written in rho = r0 - z, exact as rho -> 0
        d = r0 - rho
        return g(rho, np.log(rho), d) + g(r0 + d, np.log(r0 + d), d)

    # z in (z0, r0/2) and rho in (z1, r0/2), panels graded toward the ends
    zn, zw = _panels(_geometric(z0, 0.5 * r0, ratio), order)
    total = float(np.sum(pair_z(zn) * zw))
    rn, rw = _panels(_geometric(z1, 0.5 * r0, ratio), order)
    total += float(np.sum(pair_rho(rn) * rw))
    # (0, z0): pair ~ c1 z^e + c2 z^(e+1), e = p-1-sp, matched at z0 and z0/2
    e = p - 1.0 - sp
    f1, f2 = pair_z(np.array([z0, 0.5 * z0]))
    c2 = (f1 - f2 * 2.0**e) / (z0 ** (e + 1) * (1.0 - 2.0**-1.0))
    c1 = (f1 - c2 * z0 ** (e + 1)) / z0**e
    total += c1 * z0 ** (e + 1) / (e + 1) + c2 * z0 ** (e + 2) / (e + 2)
    # rho in (0, z1): partner branch is smooth, the other ~ c rho^(N-1-gamma(p-1))
    a = N - 1 - gamma * (p - 1.0)
    rho1 = np.array([z1])
    d1 = r0 - rho1
    total += z1 * float(g(r0 + d1, np.log(r0 + d1), d1)[0])
    total += z1 * float(g(rho1, np.log(rho1), d1)[0]) / (a + 1.0)
    # rho in (2 r0, inf): rho = 2 r0 v^(-1/sp), integrand bounded as v -> 0
    vmin = max(1e-12, (2.0 * r0 * 1e-200) ** sp)
    vedges = np.concatenate([[0.0], _geometric(vmin, 1.0, ratio)])
    vn, vw = _panels(vedges, order)
    rho = 2.0 * r0 * vn ** (-1.0 / sp)
    jac = (2.0 * r0 / sp) * vn ** (-1.0 / sp - 1.0)
    total += float(np.sum(g(rho, np.log(rho), rho - r0) * jac * vw))
    return total


def power_action(params: Params, r0: float = 1.0, tol: float = 1e-9, max_level: int = 6) -> Tuple[float, float, int]:
    """L(|x|^-gamma) at |x| = r0 with the refinement-difference error estimate."""
    ex = derive_exponents(params)
    if params.p >= ex.p_1:
        raise ValidationError(f"p={params.p} >= p_1={ex.p_1:.6f}: the integral diverges at the origin")
    if not (tol > 0):
        raise ValidationError("tol must be > 0")
    args = (params.N, params.s, params.p, ex.gamma, float(r0))
    prev = _power_action(*args, 0)
    for level in range(1, max_level + 1):
        cur = _power_action(*args, level)
        err = abs(cur - prev)
        if err <= tol * abs(cur) + tol:
            return cur, err, level
        prev = cur
    raise NumericalError(f"quadrature did not reach tol={tol} (last difference {err:.3e})")


def elliptic_power_action(params: Params, tol: float = 1e-9) -> ConstantReport:
    A, err, level = power_action(params, 1.0, tol)
    k = -A
    C = ((2.0 - params.p) * k) ** (1.0 / (2.0 - params.p)) if k > 0 else None
    return ConstantReport(params.N, params.s, params.p, A, k, C, err, level)


def vss_amplitude(params: Params, tol: float = 1e-9) -> float:
    """C_inf of the very singular solution in either fast range.

    Good range: C^(2-p) = (2-p) k with k = -A > 0.  Very fast range:
    C^(2-p) = (2-p) A with A > 0 (the solution then runs backward from T).
    """
    rep = elliptic_power_action(params, tol)
    val = rep.k if rep.k > 0 else rep.A
    if val <= 0:
        raise ValidationError("no very singular solution: A vanishes (p = p_c)")
    return ((2.0 - params.p) * val) ** (1.0 / (2.0 - params.p))


def find_pc_crossing(N: int, s: float, bracket: Tuple[float, float] = None, tol: float = 1e-9) -> float:
    """Zero of p -> A(N,s,p) by bisection to within 1e-4."""
    if bracket is None:
        pc = p_c_of(N, s)
        p1 = derive_exponents(Params(N, s, 1.5)).p_1
        bracket = (1.0 + 0.5 * (pc - 1.0), pc + 0.5 * (p1 - pc))
    lo, hi = bracket
    f = lambda p: elliptic_power_action(Params(N, s, p), tol).A
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise ValidationError(f"no sign change of A on [{lo}, {hi}] ({flo:.3e}, {fhi:.3e})")
    return float(bisect(f, lo, hi, xtol=1e-4))


def vf_eigen_amplitude(params: Params, lam: float, tol: float = 1e-9) -> float:
    """Amplitude a with a^(2-p) lam = A, so that a r^-gamma solves L F = lam F."""
    if not (lam > 0):
        raise ValidationError("lambda must be > 0")
    A = elliptic_power_action(params, tol).A
    if A <= 0:
        raise ValidationError(f"very fast eigenproblem needs A > 0, got {A:.3e}")
    return (A / lam) ** (1.0 / (2.0 - params.p))


def c_inf_local(N: int, p: float) -> float:
    """Closed-form C_inf of the local (s=1) p-Laplacian fast diffusion."""
    beta = 1.0 / (p - N * (2.0 - p))
    return ((p / (2.0 - p)) ** (p - 1.0) / beta) ** (1.0 / (2.0 - p))
