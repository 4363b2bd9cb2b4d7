"""O(n^2) kernels of the discrete operator.

Two interchangeable implementations: numba-compiled loops and a pure numpy
fallback.  Set FPLAP_DISABLE_NUMBA=1 to force the fallback (or call
``set_backend("numpy")``).  Both produce the same numbers up to rounding.

Conventions shared by all kernels:
  om[j-1]      weight of offset j (j >= 1)
  W[i, l]      weight of exterior cell l seen from node i (right side; the
               left side of a general field uses the mirrored row n-1-i)
  tw[i]        weight of everything beyond the last exterior edge
  vext[l]      closure value on exterior cell l, vfar beyond the last edge
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("FPLAP_DISABLE_NUMBA", "").strip().lower()
_WANT_NUMBA = _FLAG not in ("1", "true", "yes", "on")

try:  # pragma: no cover - exercised implicitly
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

_backend = "numba" if (HAVE_NUMBA and _WANT_NUMBA) else "numpy"
_threads = 1


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    _backend = name


def set_threads(k: int) -> None:
    """Worker threads for the parallel kernels (numba backend only)."""
    global _threads
    _threads = max(1, int(k))
    if HAVE_NUMBA:
        numba.set_num_threads(min(_threads, numba.config.NUMBA_NUM_THREADS))


def threads() -> int:
    return _threads


# ----------------------------------------------------------------- numpy ---

def _phi_np(z, e, delta):
    a = np.maximum(np.abs(z), delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a > 0.0, z * a**e, 0.0)


def general_apply_np(u, om, W, vR, vfarR, vL, vfarL, tw, p, delta):
    n = u.shape[0]
    e = p - 2.0
    out = np.zeros(n)
    for j in range(1, n):
        f = om[j - 1] * _phi_np(u[:-j] - u[j:], e, delta)
        out[:-j] += f
        out[j:] -= f
    WL = W[::-1]
    twL = tw[::-1]
    out += np.sum(W * _phi_np(u[:, None] - vR[None, :], e, delta), axis=1)
    out += np.sum(WL * _phi_np(u[:, None] - vL[None, :], e, delta), axis=1)
    out += tw * _phi_np(u - vfarR, e, delta) + twL * _phi_np(u - vfarL, e, delta)
    return out


def even_apply_np(uh, om, W, v, vfar, tw, p, delta):
    full = np.concatenate([uh[:0:-1], uh])
    m = uh.shape[0]
    n = full.shape[0]
    e = p - 2.0
    out = np.zeros(n)
    for j in range(1, n):
        f = om[j - 1] * _phi_np(full[:-j] - full[j:], e, delta)
        out[:-j] += f
        out[j:] -= f
    res = out[m - 1:]
    res += np.sum(W * _phi_np(uh[:, None] - v[None, :], e, delta), axis=1)
    res += tw * _phi_np(uh - vfar, e, delta)
    return res


def node_apply_np(u, i, om, wext, vext, tw, vfar, p, delta):
    """Operator at node i only; wext/tw are that node's exterior weights
    for both sides stacked, vext the matching closure values."""
    e = p - 2.0
    n = u.shape[0]
    acc = 0.0
    if i > 0:
        acc += np.sum(om[:i][::-1] * _phi_np(u[i] - u[:i], e, delta))
    if i < n - 1:
        acc += np.sum(om[: n - 1 - i] * _phi_np(u[i] - u[i + 1:], e, delta))
    acc += np.sum(wext * _phi_np(u[i] - vext, e, delta))
    acc += np.sum(tw * _phi_np(u[i] - vfar, e, delta))
    return float(acc)


def energy_np(u, om, p, h):
    n = u.shape[0]
    tot = 0.0
    for j in range(1, n):
        tot += om[j - 1] * np.sum(np.abs(u[:-j] - u[j:]) ** p)
    return h * tot / p


# ----------------------------------------------------------------- numba ---

# no nnan/ninf: non-finite results must survive to the caller
_FM = {"reassoc", "contract", "arcp"}

if HAVE_NUMBA:

    @njit(cache=True, fastmath=_FM)
    def _general_apply_nb(u, om, W, vR, vfarR, vL, vfarL, tw, p, delta):
        n = u.shape[0]
        e = p - 2.0
        out = np.zeros(n)
        for i in range(n):
            ui = u[i]
            acc = 0.0
            for k in range(i + 1, n):
                z = ui - u[k]
                a = max(abs(z), delta)
                if a > 0.0:
                    f = om[k - i - 1] * z * a**e
                    acc += f
                    out[k] -= f
            out[i] += acc
        L = vR.shape[0]
        for i in range(n):
            ui = u[i]
            acc = 0.0
            r = n - 1 - i
            for l in range(L):
                z = ui - vR[l]
                a = max(abs(z), delta)
                if a > 0.0:
                    acc += W[i, l] * z * a**e
                z = ui - vL[l]
                a = max(abs(z), delta)
                if a > 0.0:
                    acc += W[r, l] * z * a**e
            z = ui - vfarR
            a = max(abs(z), delta)
            if a > 0.0:
                acc += tw[i] * z * a**e
            z = ui - vfarL
            a = max(abs(z), delta)
            if a > 0.0:
                acc += tw[r] * z * a**e
            out[i] += acc
        return out

    @njit(cache=True, fastmath=_FM, parallel=True)
    def _general_apply_par(u, om, W, vR, vfarR, vL, vfarL, tw, p, delta):
        n = u.shape[0]
        e = p - 2.0
        L = vR.shape[0]
        out = np.zeros(n)
        for i in prange(n):
            ui = u[i]
            acc = 0.0
            for k in range(n):
                if k == i:
                    continue
                z = ui - u[k]
                a = max(abs(z), delta)
                if a > 0.0:
                    acc += om[abs(k - i) - 1] * z * a**e
            r = n - 1 - i
            for l in range(L):
                z = ui - vR[l]
                a = max(abs(z), delta)
                if a > 0.0:
                    acc += W[i, l] * z * a**e
                z = ui - vL[l]
                a = max(abs(z), delta)
                if a > 0.0:
                    acc += W[r, l] * z * a**e
            z = ui - vfarR
            a = max(abs(z), delta)
            if a > 0.0:
                acc += tw[i] * z * a**e
            z = ui - vfarL
            a = max(abs(z), delta)
            if a > 0.0:
                acc += tw[r] * z * a**e
            out[i] = acc
        return out

    @njit(cache=True, fastmath=_FM)
    def _even_apply_nb(uh, om, W, v, vfar, tw, p, delta):
        # Fold of the mirrored half: node k>0 stands for +-x_k.  For i,k > 0
        # the pair weight om[k-i] + om[k+i] is symmetric, so each Phi value
        # is used twice.  The origin pairs with +-x_k at weight 2 om[k] in
        # its own sum but only om[k] in the sum of node k.
        m = uh.shape[0]
        e = p - 2.0
        out = np.zeros(m)
        u0 = uh[0]
        acc0 = 0.0
        for k in range(1, m):
            z = u0 - uh[k]
            a = max(abs(z), delta)
            if a > 0.0:
                f = om[k - 1] * z * a**e
                acc0 += 2.0 * f
                out[k] -= f
        out[0] += acc0
        for i in range(1, m):
            ui = uh[i]
            acc = 0.0
            for k in range(i + 1, m):
                z = ui - uh[k]
                a = max(abs(z), delta)
                if a > 0.0:
                    f = (om[k - i - 1] + om[k + i - 1]) * z * a**e
                    acc += f
                    out[k] -= f
            out[i] += acc
        L = v.shape[0]
        for i in range(m):
            ui = uh[i]
            acc = 0.0
            for l in range(L):
                z = ui - v[l]
                a = max(abs(z), delta)
                if a > 0.0:
                    acc += W[i, l] * z * a**e
            z = ui - vfar
            a = max(abs(z), delta)
            if a > 0.0:
                acc += tw[i] * z * a**e
            out[i] += acc
        return out

    @njit(cache=True, fastmath=_FM, parallel=True)
    def _even_apply_par(uh, om, W, v, vfar, tw, p, delta):
        m = uh.shape[0]
        e = p - 2.0
        L = v.shape[0]
        out = np.zeros(m)
        for i in prange(m):
            ui = uh[i]
            acc = 0.0
            for k in range(m):
                if k == i:
                    continue
                z = ui - uh[k]
                a = max(abs(z), delta)
                if a > 0.0:
                    w = om[abs(k - i) - 1]
                    if k > 0:
                        w += om[k + i - 1]
                    acc += w * z * a**e
            for l in range(L):
                z = ui - v[l]
                a = max(abs(z), delta)
                if a > 0.0:
                    acc += W[i, l] * z * a**e
            z = ui - vfar
            a = max(abs(z), delta)
            if a > 0.0:
                acc += tw[i] * z * a**e
            out[i] = acc
        return out

    @njit(cache=True, fastmath=_FM)
    def _energy_nb(u, om, p, h):
        n = u.shape[0]
        tot = 0.0
        for i in range(n):
            ui = u[i]
            for k in range(i + 1, n):
                tot += om[k - i - 1] * abs(ui - u[k]) ** p
        return h * tot / p


def general_apply(u, om, W, vR, vfarR, vL, vfarL, tw, p, delta):
    if _backend == "numba":
        f = _general_apply_par if _threads > 1 else _general_apply_nb
        return f(u, om, W, vR, float(vfarR), vL, float(vfarL), tw, float(p), float(delta))
    return general_apply_np(u, om, W, vR, vfarR, vL, vfarL, tw, p, delta)


def even_apply(uh, om, W, v, vfar, tw, p, delta):
    if _backend == "numba":
        f = _even_apply_par if _threads > 1 else _even_apply_nb
        return f(uh, om, W, v, float(vfar), tw, float(p), float(delta))
    return even_apply_np(uh, om, W, v, vfar, tw, p, delta)


def energy(u, om, p, h):
    if _backend == "numba":
        return float(_energy_nb(u, om, float(p), float(h)))
    return float(energy_np(u, om, p, h))
