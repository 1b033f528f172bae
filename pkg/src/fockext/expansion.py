"""
Expansion coefficients of the orthogonal Bergman projector and of the
extension operator, computed from model geometric input with the kernel
calculus.

Conventions
-----------
* t = p^(-1/2); series terms are indexed by powers of t.
* The second fundamental form is stored as A[i, j, k] = A^{m+k}_{ij}
  (i, j tangent, k normal), symmetric in (i, j). The complex-bilinear metric
  pairing has g(dz_k, dzbar_l) = delta_kl / 2 and g(dz, dz) = 0, so
      g(z_N, A(wbar) wbar)  = 1/2 sum conj(A[i,j,k]) z_{m+k} wbar_i wbar_j
      g(zbar'_N, A(w) w)    = 1/2 sum A[i,j,k] zbar'_{m+k} w_i w_j.
* kappa holds the Taylor coefficients of kappa_N itself (homogeneous
  polynomials in Z_Y); its square root and inverse square root are derived.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, pi
from typing import Sequence

import numpy as np

from .calculus import (GaussianFamily, compose_core, compose_E, compose_K,
                       compose_Kdoubleprime, restrict_tangent)
from .polynomials import PolyKernel, ShapeError, VarSpec, poly_adjoint, poly_parity_degree, relabel


class DomainError(ValueError):
    """Input outside the domain an operation is defined on."""


class OrderError(ValueError):
    """Requested order exceeds the available input jets."""


# ---------------------------------------------------------------------------
# rational functions of lambda with poles at 0 and 1

def _gbinom(a: int, k: int) -> int:
    """Generalised binomial C(a, k) for integer a (possibly negative), k >= 0."""
    if k < 0:
        return 0
    if a >= 0:
        return comb(a, k)
    return (-1) ** k * comb(-a + k - 1, k)


def _basis_product(k1, k2) -> dict:
    """Product of two basis elements as a partial-fraction dict.

    Basis keys: ('pole0', j) = lambda^-j, ('pole1', j) = (lambda-1)^-j,
    ('poly', j) = lambda^j.
    """
    (t1, a), (t2, b) = sorted([k1, k2])
    if t1 == t2:
        return {(t1, a + b): 1}
    if (t1, t2) == ("pole0", "poly"):
        return {("poly", b - a): 1} if b >= a else {("pole0", a - b): 1}
    if (t1, t2) == ("pole1", "poly"):
        # lambda^b = sum_k C(b,k) (lambda-1)^k
        out: dict = {}
        for k in range(b + 1):
            c = comb(b, k)
            if k < a:
                out[("pole1", a - k)] = out.get(("pole1", a - k), 0) + c
            else:
                e = k - a
                for l in range(e + 1):
                    key = ("poly", l)
                    out[key] = out.get(key, 0) + c * comb(e, l) * (-1) ** (e - l)
        return out
    if (t1, t2) == ("pole0", "pole1"):
        # 1 / (lambda^a (lambda-1)^b)
        out = {}
        for j in range(1, b + 1):
            out[("pole1", j)] = _gbinom(-a, b - j)
        for i in range(1, a + 1):
            k = a - i
            out[("pole0", i)] = (-1) ** b * comb(b + k - 1, k)
        return out
    raise AssertionError((k1, k2))


class LambdaRational:
    """Rational function of lambda with poles only at 0 and 1, kept in the
    partial-fraction basis {lambda^-j, (lambda-1)^-j, lambda^j}."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict | None = None):
        self.coeffs = {k: complex(v) for k, v in (coeffs or {}).items() if v != 0}

    @classmethod
    def const(cls, c=1.0):
        return cls({("poly", 0): c})

    @classmethod
    def inv_lambda(cls, j: int = 1):
        return cls({("pole0", j): 1})

    @classmethod
    def inv_lambda_minus_one(cls, j: int = 1):
        return cls({("pole1", j): 1})

    @classmethod
    def from_factored(cls, coeff: complex, poles: dict) -> "LambdaRational":
        """coeff * prod (lambda - pole)^-order; poles must lie in {0, 1}."""
        out = cls.const(coeff)
        for pole, order in poles.items():
            if pole == 0:
                out = out * cls.inv_lambda(order)
            elif pole == 1:
                out = out * cls.inv_lambda_minus_one(order)
            else:
                raise DomainError(f"pole at {pole} is outside {{0, 1}}")
        return out

    def __add__(self, other):
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return LambdaRational(out)

    def __sub__(self, other):
        return self + other * (-1)

    def __mul__(self, other):
        if not isinstance(other, LambdaRational):
            return LambdaRational({k: v * other for k, v in self.coeffs.items()})
        out: dict = {}
        for k1, v1 in self.coeffs.items():
            for k2, v2 in other.coeffs.items():
                for k, c in _basis_product(k1, k2).items():
                    out[k] = out.get(k, 0) + c * v1 * v2
        return LambdaRational(out)

    __rmul__ = __mul__

    def __call__(self, lam: complex) -> complex:
        out = 0j
        for (t, j), c in self.coeffs.items():
            out += c * (lam ** -j if t == "pole0" else (lam - 1) ** -j if t == "pole1" else lam ** j)
        return out

    def __repr__(self):
        return f"LambdaRational({self.coeffs})"


def contour_integral(f: LambdaRational) -> complex:
    """(1/2 pi i) times the integral over a contour around 1 but not 0: the residue at 1."""
    return f.coeffs.get(("pole1", 1), 0j)


# resolvent of a projector C0: (lambda - C0)^-1 = a(lambda) Id + b(lambda) C0
RES_ID = LambdaRational.inv_lambda()
RES_PROJ = LambdaRational.inv_lambda_minus_one() - LambdaRational.inv_lambda()


# ---------------------------------------------------------------------------
# series and geometric input

@dataclass(frozen=True)
class KernelSeries:
    """Terms F_r (r = 0..k) of a Taylor-type expansion in t, tagged with the
    Gaussian family they multiply."""

    family: GaussianFamily
    terms: tuple

    def __len__(self):
        return len(self.terms)

    def __getitem__(self, r):
        return self.terms[r]

    @property
    def order(self) -> int:
        return len(self.terms) - 1

    def to_json(self) -> dict:
        return {"family": self.family.tag, "n": self.family.n, "m": self.family.m,
                "terms": [t.to_json() for t in self.terms]}

    @classmethod
    def from_json(cls, data: dict) -> "KernelSeries":
        fam = GaussianFamily(data["family"], data["n"], data["m"])
        v = fam.var_spec()
        return cls(fam, tuple(PolyKernel.from_json(t, v) if t else PolyKernel.zero(v) for t in data["terms"]))


def _identity(v: VarSpec, rank: int) -> PolyKernel:
    return PolyKernel.constant(v, np.eye(rank), rank)


def _graded_sqrt(series: Sequence[PolyKernel]) -> list[PolyKernel]:
    """Square root of sum t^r a_r with a_0 a positive constant (scalar ring)."""
    a0 = series[0].scalar_coeff((0,) * series[0].vars.nvars).real
    if a0 <= 0:
        raise DomainError("kappa_N at the base point must be positive")
    s0 = np.sqrt(a0)
    out = [series[0].scale(s0 / a0)]
    for r in range(1, len(series)):
        acc = series[r]
        for i in range(1, r):
            acc = acc - out[i] * out[r - i]
        out.append(acc.scale(1 / (2 * s0)))
    return out


def _graded_inverse(series: Sequence[PolyKernel]) -> list[PolyKernel]:
    """Reciprocal of sum t^r a_r with a_0 a nonzero constant."""
    a0 = series[0].scalar_coeff((0,) * series[0].vars.nvars)
    out = [series[0].scale(1 / a0 ** 2)]
    for r in range(1, len(series)):
        acc = PolyKernel.zero(series[0].vars, series[0].rank)
        for s in range(1, r + 1):
            acc = acc + series[s] * out[r - s]
        out.append(acc.scale(-1 / a0))
    return out


def second_fundamental_pairings(A: np.ndarray, n: int, m: int, vars: VarSpec | None = None,
                                rank: int = 1) -> tuple[PolyKernel, PolyKernel]:
    """(g(z_N, A(wbar) wbar), g(zbar'_N, A(w) w)) with w = z_Y - z'_Y, as polynomials."""
    v = VarSpec(n, m, n) if vars is None else vars
    z = lambda g, i: PolyKernel.variable(v, g, i, rank)
    w = [z("z", i) - z("zp", i) for i in range(m)]
    wb = [z("zb", i) - z("zbp", i) for i in range(m)]
    first = PolyKernel.zero(v, rank)
    second = PolyKernel.zero(v, rank)
    for i, j, k in itertools.product(range(m), range(m), range(n - m)):
        a = A[i, j, k]
        if a == 0:
            continue
        first = first + (z("z", m + k) * wb[i] * wb[j]).scale(0.5 * np.conj(a))
        if v.right_dim == n:
            second = second + (z("zbp", m + k) * w[i] * w[j]).scale(0.5 * a)
    return first, second


def bergman_first_order(A: np.ndarray, n: int, m: int, rank: int = 1) -> PolyKernel:
    """First Bergman coefficient in Fermi coordinates along a submanifold:
    pi [g(z_N, A(wbar) wbar) + g(zbar'_N, A(w) w)] Id."""
    first, second = second_fundamental_pairings(A, n, m, rank=rank)
    return (first + second).scale(pi)


@dataclass
class GeometryJet:
    """Model geometric input at the base point.

    Parameters
    ----------
    n, m : dimensions
    A : complex array (m, m, n - m), A[i, j, k] = A^{m+k}_{ij}
    kappa : Taylor coefficients of kappa_N, (m, m) polynomials in z_Y, zbar_Y
    bergman_ambient : J_r on C^n, (n, n) polynomials; default [Id, J_1(A)]
    bergman_sub : J'_{r,Y} on C^m, (m, m) polynomials; default [Id, 0]
    rank : twisting rank of the coefficients
    """

    n: int
    m: int
    A: np.ndarray | None = None
    kappa: list | None = None
    bergman_ambient: list | None = None
    bergman_sub: list | None = None
    rank: int = 1

    def __post_init__(self):
        n, m = self.n, self.m
        if not 0 <= m < n:
            raise ShapeError(f"need 0 <= m < n, got ({n}, {m})")
        self.A = np.zeros((m, m, n - m), complex) if self.A is None else np.asarray(self.A, complex)
        if self.A.shape != (m, m, n - m):
            raise ShapeError(f"A must have shape {(m, m, n - m)}")
        if not np.allclose(self.A, self.A.transpose(1, 0, 2), atol=1e-14):
            raise DomainError("A must be symmetric in its two tangent slots")
        vY = VarSpec(m, m, m)
        if self.kappa is None:
            self.kappa = [_identity(vY, self.rank)]
        if self.bergman_ambient is None:
            self.bergman_ambient = [_identity(self.ambient_vars, self.rank),
                                    bergman_first_order(self.A, n, m, self.rank)]
        if self.bergman_sub is None:
            self.bergman_sub = [_identity(vY, self.rank), PolyKernel.zero(vY, self.rank)]

    @property
    def ambient_vars(self) -> VarSpec:
        return VarSpec(self.n, self.m, self.n)

    def kappa_series(self, k: int, power: str) -> list[PolyKernel]:
        """Taylor coefficients of kappa_N^(1/2) ('half') or kappa_N^(-1/2) ('neg_half'), padded with zeros."""
        vY = VarSpec(self.m, self.m, self.m)
        ks = list(self.kappa) + [PolyKernel.zero(vY, self.rank)] * max(0, k + 1 - len(self.kappa))
        half = _graded_sqrt(ks[:k + 1])
        return half if power == "half" else _graded_inverse(half)

    def is_normalized(self) -> bool:
        ks = self.kappa
        one = _identity(VarSpec(self.m, self.m, self.m), self.rank)
        return ks[0].allclose(one, 1e-14) and all(c.is_zero() for c in ks[1:])


def _need(series: Sequence, k: int, name: str):
    if len(series) < k + 1:
        raise OrderError(f"order {k} needs {name} terms up to r={k}, only {len(series) - 1} supplied")


def _to_primed(poly_Y: PolyKernel, n: int, m: int) -> PolyKernel:
    """Move a polynomial in (z_Y, zbar_Y) into the primed slots of an (n, n) kernel."""
    v = VarSpec(n, m, n)

    def fn(k):
        ez, ezb, _, _ = poly_Y.vars.split(k)
        pad = (0,) * (n - m)
        return v.join((0,) * n, (0,) * n, tuple(ez) + pad, tuple(ezb) + pad)

    return poly_Y.map_keys(v, fn)


def _compositions(total: int, parts: int):
    """Ordered tuples of `parts` positive integers summing to total."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# the engine

def build_C_series(jet: GeometryJet, order: int) -> KernelSeries:
    """Coefficients of C_t = A_t^* A_t:  J'_r = sum K_{n,m}[adj(J_{r0,0}), J_{r-r0,0}],
    where J_{r,0}(Z, Z') = J_r(Z_Y, Z') (unprimed normal variables set to zero)."""
    _need(jet.bergman_ambient, order, "ambient Bergman")
    n, m = jet.n, jet.m
    J0 = [b.substitute_zero("z", range(m, n)).substitute_zero("zb", range(m, n))
          for b in jet.bergman_ambient[:order + 1]]
    adj = [poly_adjoint(j) for j in J0]
    terms = []
    for r in range(order + 1):
        acc = PolyKernel.zero(jet.ambient_vars, jet.rank)
        for r0 in range(r + 1):
            acc = acc + compose_K(adj[r0], J0[r - r0], n, m)
        terms.append(acc)
    return KernelSeries(GaussianFamily("P_perp", n, m), tuple(terms))


def perp_series(C_series: KernelSeries, order: int) -> KernelSeries:
    """Coefficients J_r^perp of the orthogonal Bergman projector.

    The projector is the contour integral of (lambda - C_t)^-1 around 1. With
    V = C_t - C_0 and R_0 = (lambda - C_0)^-1 = Id/lambda + C_0 (1/(lambda-1) - 1/lambda),
    the Neumann series R_0 sum_j (V R_0)^j is expanded slot by slot; every
    slot is either Id or the model projector C_0 (kernel 1 * P_perp).
    """
    fam = C_series.family
    if fam.tag != "P_perp":
        raise DomainError("C series must be tagged P_perp")
    _need(C_series.terms, order, "C-series")
    n, m = fam.n, fam.m
    v = fam.var_spec()
    rank = C_series[0].rank
    one = _identity(v, rank)
    if not C_series[0].allclose(one, 1e-12):
        raise DomainError("leading C-series term must be Id (model projector)")

    cache: dict = {}

    def chain(labels: tuple) -> PolyKernel:
        if labels in cache:
            return cache[labels]
        last = labels[-1]
        k_last = one if last == "C" else C_series[last]
        out = k_last if len(labels) == 1 else compose_K(chain(labels[:-1]), k_last, n, m)
        cache[labels] = out
        return out

    terms = [one]
    for r in range(1, order + 1):
        acc = PolyKernel.zero(v, rank)
        for j in range(1, r + 1):
            for parts in _compositions(r, j):
                for slots in itertools.product((False, True), repeat=j + 1):
                    lam = LambdaRational.const()
                    for s in slots:
                        lam = lam * (RES_PROJ if s else RES_ID)
                    c = contour_integral(lam)
                    if c == 0:
                        continue
                    labels = []
                    for i, s in enumerate(slots):
                        if s:
                            labels.append("C")
                        if i < j:
                            labels.append(parts[i])
                    acc = acc + chain(tuple(labels)).scale(c)
        terms.append(acc)
    return KernelSeries(fam, tuple(terms))


def iop_series(perp: KernelSeries, jet: GeometryJet, order: int) -> KernelSeries:
    """Coefficients of the model-extension composite I_p:
    J^E_{r,I} = sum K''[J^{perp,kappa}_{r0}, J'_{r-r0,Y}],
    J^{perp,kappa}_r = sum J^perp_{r0} kappa^{1/2}_{N,[r-r0]}(Z'_Y)."""
    _need(perp.terms, order, "perp")
    _need(jet.bergman_sub, order, "submanifold Bergman")
    n, m = jet.n, jet.m
    khalf = [_to_primed(c, n, m) for c in jet.kappa_series(order, "half")]
    pk = []
    for r in range(order + 1):
        acc = PolyKernel.zero(jet.ambient_vars, jet.rank)
        for r0 in range(r + 1):
            acc = acc + perp[r0] * khalf[r - r0]
        pk.append(acc)
    terms = []
    for r in range(order + 1):
        acc = PolyKernel.zero(VarSpec(n, m, m), jet.rank)
        for r0 in range(r + 1):
            acc = acc + compose_Kdoubleprime(pk[r0], jet.bergman_sub[r - r0], n, m)
        terms.append(acc)
    return KernelSeries(GaussianFamily("E", n, m), tuple(terms))


@dataclass(frozen=True)
class ExtensionParts:
    """Intermediate series of the extension assembly."""

    G: tuple   # J_{r,G}, (m, m) polynomials
    T: tuple   # J_{r,T}, coefficients of sum_{i>=1} (-1)^i G^i
    E: KernelSeries


def extension_parts(iop: KernelSeries, jet: GeometryJet, order: int) -> ExtensionParts:
    _need(iop.terms, order, "I-operator")
    _need(jet.bergman_sub, order, "submanifold Bergman")
    n, m = jet.n, jet.m
    vY = VarSpec(m, m, m)
    kneg = jet.kappa_series(order, "neg_half")
    G = []
    for r in range(order + 1):
        acc = -jet.bergman_sub[r]
        for r0 in range(r + 1):
            acc = acc + kneg[r0] * restrict_tangent(iop[r - r0], m)
        G.append(acc)
    if G[0].max_abs_diff(PolyKernel.zero(vY, jet.rank)) > 1e-10:
        raise DomainError("order-0 defect J_{0,G} does not vanish; inconsistent jet")

    comp_cache: dict = {}

    def gchain(parts: tuple) -> PolyKernel:
        if parts not in comp_cache:
            comp_cache[parts] = G[parts[0]] if len(parts) == 1 else compose_core(gchain(parts[:-1]), G[parts[-1]], m)
        return comp_cache[parts]

    T = [PolyKernel.zero(vY, jet.rank)]
    for r in range(1, order + 1):
        acc = PolyKernel.zero(vY, jet.rank)
        for i in range(1, r + 1):
            for parts in _compositions(r, i):
                acc = acc + gchain(parts).scale((-1) ** i)
        T.append(acc)

    terms = []
    for r in range(order + 1):
        acc = iop[r]
        for r1 in range(r):
            acc = acc + compose_E(iop[r1], T[r - r1], n, m)
        terms.append(acc)
    return ExtensionParts(tuple(G), tuple(T), KernelSeries(GaussianFamily("E", n, m), tuple(terms)))


def extension_series(iop: KernelSeries, jet: GeometryJet, order: int) -> KernelSeries:
    """Coefficients J_r^E of the extension operator: J^E_{r,I} corrected by the
    Neumann series of the restriction defect G."""
    return extension_parts(iop, jet, order).E


def expand(jet: GeometryJet, order: int) -> tuple[KernelSeries, KernelSeries]:
    """(J^perp, J^E) series to the given order."""
    C = build_C_series(jet, order)
    perp = perp_series(C, order)
    return perp, extension_series(iop_series(perp, jet, order), jet, order)


def closed_form_reference(which: str, jet: GeometryJet) -> PolyKernel:
    """Closed-form first-order coefficients (normalized volumes)."""
    n, m = jet.n, jet.m
    if which in ("J1_perp", "J1_bergman"):
        return bergman_first_order(jet.A, n, m, jet.rank)
    if which == "J1_E":
        first, _ = second_fundamental_pairings(jet.A, n, m, VarSpec(n, m, m), jet.rank)
        return first.scale(pi)
    raise ValueError(f"unknown closed form {which!r}")


def structural_report(series: KernelSeries, tol: float = 1e-12) -> list[dict]:
    """Degree and parity of each term after chopping numerical zeros."""
    out = []
    for r, term in enumerate(series.terms):
        deg, parity = poly_parity_degree(term.chop(tol))
        out.append({"r": r, "degree": deg, "parity": parity})
    return out


def random_jet(rng: np.random.Generator, n: int, m: int, order: int = 1, scale: float = 1.0,
               extra_terms: int = 4) -> GeometryJet:
    """Random jet with random symmetric A; higher ambient/submanifold/kappa
    terms are random polynomials of parity r and degree <= 3r (kappa: homogeneous of degree r)."""
    from .polynomials import random_poly

    A = scale * (rng.standard_normal((m, m, n - m)) + 1j * rng.standard_normal((m, m, n - m)))
    A = 0.5 * (A + A.transpose(1, 0, 2))
    jet = GeometryJet(n, m, A)
    vX, vY = jet.ambient_vars, VarSpec(m, m, m)
    for r in range(2, order + 1):
        par = "even" if r % 2 == 0 else "odd"
        jet.bergman_ambient.append(random_poly(rng, vX, 3 * r, extra_terms, par, scale=0.3))
        jet.bergman_sub.append(random_poly(rng, vY, 3 * r, extra_terms, par, scale=0.3))
    kappa = [PolyKernel.constant(vY, 1.0 + rng.uniform(0, 1))]
    for r in range(1, order + 1):
        kappa.append(_random_homogeneous(rng, vY, r, 3))
    jet.kappa = kappa
    return jet


def _random_homogeneous(rng, v: VarSpec, degree: int, nterms: int) -> PolyKernel:
    terms = {}
    cols = list(range(v.group_slice("z").start, v.group_slice("zb").stop))
    if not cols:
        return PolyKernel.zero(v)
    for _ in range(nterms):
        key = [0] * v.nvars
        for _ in range(degree):
            key[cols[int(rng.integers(len(cols)))]] += 1
        terms[tuple(key)] = 0.3 * (rng.standard_normal() + 1j * rng.standard_normal())
    return PolyKernel(v, terms)
