"""
Gauss-Hermite quadrature of the composition integrals that define the
brackets. This is the numerical oracle for the moment algebra in calculus.py.

The model Gaussians factor over coordinates, so after expanding both kernel
polynomials into monomials the defining integral is a sum of products of
one-coordinate integrals. Each of those is evaluated with a tensor
Gauss-Hermite rule in the two real directions, centred where the modulus of
the integrand peaks; the remaining factor is a polynomial times a
slowly oscillating phase. The triple composition behind K'' couples u and w
in each tangent coordinate and is done with a nested rule.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .polynomials import PolyKernel, ShapeError


@lru_cache(maxsize=None)
def _hermgauss(q: int):
    return np.polynomial.hermite.hermgauss(q)


def gauss_hermite_1d(q: int, scale: float = 1.0):
    """Nodes/weights on R for the weight exp(-scale*pi*x^2)."""
    t, w = _hermgauss(q)
    a = np.sqrt(scale * np.pi)
    return t / a, w / a


def gauss_hermite_plane(q: int, center: complex = 0.0, scale: float = 1.0):
    """Tensor rule on C for the weight exp(-scale*pi*|u - center|^2)."""
    x, w = gauss_hermite_1d(q, scale)
    u = (x[:, None] + 1j * x[None, :]).ravel() + center
    return u, np.outer(w, w).ravel()


# log of the one-coordinate factors of the model Gaussians
def _log_pair(z, u):
    """Factor of P_n(Z, U) in one coordinate."""
    return -0.5 * np.pi * (np.abs(z) ** 2 + np.abs(u) ** 2 - 2 * z * np.conj(u))


def _log_split(z, u):
    """Normal-coordinate factor of P_perp(Z, U)."""
    return -0.5 * np.pi * (np.abs(z) ** 2 + np.abs(u) ** 2)


def _log_fiber(z):
    """Normal-coordinate factor of E(Z, U_Y)."""
    return -0.5 * np.pi * np.abs(z) ** 2


# (left factor, right factor, target factor, real-part centre, curvature) per coordinate kind
def _single_rule(kind: str, z: complex, zp: complex):
    if kind == "pair":
        return (lambda u: _log_pair(z, u) + _log_pair(u, zp) - _log_pair(z, zp)), (z + zp) / 2, 1.0
    if kind == "split":
        return (lambda u: _log_split(z, u) + _log_split(u, zp) - _log_split(z, zp)), 0.0, 1.0
    if kind == "pair_split":
        return (lambda u: _log_pair(z, u) + _log_split(u, zp) - _log_split(z, zp)), z / 2, 1.0
    if kind == "split_fiber":
        return (lambda u: _log_split(z, u) + _log_fiber(u) - _log_fiber(z)), 0.0, 1.0
    raise ValueError(kind)


class _CoordinateIntegrals:
    """Cache of one-coordinate integrals at fixed external points."""

    def __init__(self, kind: str, z: complex, zp: complex, q: int):
        log_f, center, scale = _single_rule(kind, z, zp)
        u, w = gauss_hermite_plane(q, center, scale)
        self.u = u
        self.ub = np.conj(u)
        self.wf = w * np.exp(log_f(u) + scale * np.pi * np.abs(u - center) ** 2)
        self.cache = {}

    def __call__(self, a: int, b: int) -> complex:
        key = (a, b)
        if key not in self.cache:
            self.cache[key] = complex(np.sum(self.wf * self.u ** a * self.ub ** b))
        return self.cache[key]


class _TripleIntegrals:
    """Nested rule for the tangent factor of (P_perp) o E o (P_m):

        int int u^a ubar^b w^c wbar^d  P(z,u) P(u,w) P(w,z') / P(z,z')  du dw
    """

    def __init__(self, z: complex, zp: complex, q_outer: int, q_inner: int):
        c_out = (z + 2 * zp) / 3
        wn, ww = gauss_hermite_plane(q_outer, c_out, 0.75)
        un0, uw = gauss_hermite_plane(q_inner, 0.0, 1.0)
        centers = (z + wn) / 2
        U = centers[:, None] + un0[None, :]
        W = wn[:, None]
        expo = (_log_pair(z, U) + _log_pair(U, W) + _log_pair(W, zp) - _log_pair(z, zp)
                + np.pi * np.abs(U - centers[:, None]) ** 2
                + 0.75 * np.pi * np.abs(W - c_out) ** 2)
        self.F = uw[None, :] * np.exp(expo)
        self.U, self.Ub = U, np.conj(U)
        self.wn, self.ww = wn, ww
        self.inner = {}
        self.cache = {}

    def __call__(self, a: int, b: int, c: int, d: int) -> complex:
        key = (a, b, c, d)
        if key not in self.cache:
            if (a, b) not in self.inner:
                self.inner[(a, b)] = np.sum(self.F * self.U ** a * self.Ub ** b, axis=1)
            m = self.inner[(a, b)]
            self.cache[key] = complex(np.sum(self.ww * self.wn ** c * np.conj(self.wn) ** d * m))
        return self.cache[key]


def _monomial_value(pt, exps_hol, exps_anti) -> complex:
    pt = np.asarray(pt, complex)
    out = 1.0 + 0j
    for x, a, b in zip(pt, exps_hol, exps_anti):
        if a:
            out *= x ** a
        if b:
            out *= np.conj(x) ** b
    return out


def bracket_by_quadrature(kind: str, a1: PolyKernel, a2: PolyKernel, n: int, m: int,
                          Z, Zp, q: int = 24, q_inner: int = 32) -> np.ndarray:
    """Value at (Z, Z') of the bracket of a1 and a2, by quadrature.

    kind is one of 'core', 'K', 'Kprime', 'E', 'Kdoubleprime'.
    """
    Z = np.asarray(Z, complex).reshape(-1)
    Zp = np.asarray(Zp, complex).reshape(-1)
    v1, v2 = a1.vars, a2.vars
    if kind in ("core", "K", "Kprime"):
        mid, left_dim, right_dim = n, n, n
        kinds = {"core": ["pair"] * n,
                 "K": ["pair"] * m + ["split"] * (n - m),
                 "Kprime": ["pair"] * m + ["pair_split"] * (n - m)}[kind]
    elif kind == "E":
        mid, left_dim, right_dim = m, n, m
        kinds = ["pair"] * m
    elif kind == "Kdoubleprime":
        mid, left_dim, right_dim = n, n, m
        kinds = ["triple"] * m + ["split_fiber"] * (n - m)
    else:
        raise ValueError(kind)
    if v1.n != left_dim or v1.right_dim != mid:
        raise ShapeError("a1 dims do not match the bracket")
    a2_left = m if kind in ("E", "Kdoubleprime") else mid
    if v2.n != a2_left or v2.right_dim != right_dim:
        raise ShapeError("a2 dims do not match the bracket")
    if Z.shape[0] != left_dim or Zp.shape[0] != right_dim:
        raise ShapeError("point sizes do not match the bracket")

    coords = []
    for i, k in enumerate(kinds):
        if k == "triple":
            coords.append(_TripleIntegrals(Z[i], Zp[i], q, q_inner))
        else:
            # normal coordinates of K / K'' never reach the primed point
            zp_i = Zp[i] if i < right_dim else 0.0
            coords.append(_CoordinateIntegrals(k, Z[i], zp_i, q))

    total = np.zeros((a1.rank, a1.rank), complex)
    for k1, c1 in a1.items():
        ez1, ezb1, ezp1, ezbp1 = v1.split(k1)
        left_val = _monomial_value(Z, ez1, ezb1)
        for k2, c2 in a2.items():
            ez2, ezb2, ezp2, ezbp2 = v2.split(k2)
            val = left_val * _monomial_value(Zp, ezp2, ezbp2)
            for i, k in enumerate(kinds):
                if k == "triple":
                    val *= coords[i](ezp1[i], ezbp1[i], ez2[i], ezb2[i])
                elif kind == "Kdoubleprime":
                    val *= coords[i](ezp1[i], ezbp1[i])
                else:
                    val *= coords[i](ezp1[i] + ez2[i], ezbp1[i] + ezb2[i])
                if val == 0:
                    break
            total = total + val * (c1 @ c2)
    return total
