"""
The Fock-Bargmann model on C^n: kernel evaluation, orthonormal basis,
ladder operators, the model extension operator and the flat splitting of
dbar into normal and horizontal parts.

Sections are stored as a polynomial P(z, zbar) standing for the function
P * exp(-pi/2 |Z|^2) (full Gaussian), except in model_dbar_split where the
Gaussian only involves the normal block, as for extended sections.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, pi, sqrt
from typing import Sequence

import numpy as np

from .calculus import GaussianFamily
from .polynomials import PolyKernel, ShapeError, VarSpec


@dataclass(frozen=True)
class WeightedSection:
    """poly(z, zbar) * exp(-pi/2 |Z|^2); poly must not use primed variables."""

    poly: PolyKernel

    def __post_init__(self):
        v = self.poly.vars
        for g in ("zp", "zbp"):
            for i in range(v.right_dim):
                if self.poly.depends_on(g, i):
                    raise ShapeError("a section polynomial cannot depend on primed variables")

    @property
    def n(self) -> int:
        return self.poly.vars.n

    def __call__(self, Z) -> complex:
        Z = np.asarray(Z, complex)
        return complex(self.poly.evaluate(Z)[0, 0] * np.exp(-0.5 * pi * np.sum(np.abs(Z) ** 2)))


def eval_model_kernel(family: GaussianFamily, Z, Zp) -> complex:
    """Value of the model Gaussian of the family at (Z, Z')."""
    left, right = family.dims
    Z = np.asarray(Z, complex).reshape(-1)
    Zp = np.asarray(Zp, complex).reshape(-1)
    if Z.shape[0] != left or Zp.shape[0] != right:
        raise ShapeError(f"{family.tag} expects points of sizes ({left}, {right})")
    m = family.m
    a2, b2 = np.abs(Z) ** 2, np.abs(Zp) ** 2
    if family.tag in ("P_n", "P_m"):
        e = -0.5 * pi * np.sum(a2 + b2 - 2 * Z * np.conj(Zp))
    elif family.tag == "P_perp":
        e = -0.5 * pi * np.sum(a2 + b2) + pi * np.sum(Z[:m] * np.conj(Zp[:m]))
    else:
        e = (-0.5 * pi * np.sum(a2[:m] + b2 - 2 * Z[:m] * np.conj(Zp))
             - 0.5 * pi * np.sum(a2[m:]))
    return complex(np.exp(e))


def basis_section(beta: Sequence[int], n: int | None = None) -> WeightedSection:
    """Orthonormal basis element sqrt(pi^|beta| / beta!) z^beta exp(-pi/2 |Z|^2)."""
    beta = tuple(beta)
    n = len(beta) if n is None else n
    beta = beta + (0,) * (n - len(beta))
    norm = sqrt(pi ** sum(beta) / np.prod([factorial(b) for b in beta]))
    v = VarSpec(n, n, n)
    return WeightedSection(PolyKernel.monomial(v, ez=beta, coeff=norm))


def apply_ladder(which: str, i: int, s: WeightedSection) -> WeightedSection:
    """b_i = -2 d/dz_i + pi zbar_i  or  b_i^+ = 2 d/dzbar_i + pi z_i on P exp(-pi/2|Z|^2).

    The Gaussian's chain rule turns these into -2 dP/dz_i + 2 pi zbar_i P and
    2 dP/dzbar_i acting on P.
    """
    p = s.poly
    if not 0 <= i < p.vars.n:
        raise IndexError(f"ladder index {i} out of range for n={p.vars.n}")
    if which == "b":
        return WeightedSection(p.derivative("z", i).scale(-2) + PolyKernel.variable(p.vars, "zb", i, p.rank) * p.scale(2 * pi))
    if which in ("b+", "bplus", "b_plus"):
        return WeightedSection(p.derivative("zb", i).scale(2))
    raise ValueError(f"unknown ladder operator {which!r}")


def model_laplacian(s: WeightedSection) -> WeightedSection:
    """L = sum_i b_i b_i^+."""
    out = PolyKernel.zero(s.poly.vars, s.poly.rank)
    for i in range(s.n):
        out = out + apply_ladder("b", i, apply_ladder("b+", i, s)).poly
    return WeightedSection(out)


def project_holomorphic(g: PolyKernel, dims: Sequence[int] | None = None) -> PolyKernel:
    """Bergman projection of g exp(-pi/2 |z|^2) in the listed coordinates.

    Coordinate-wise, z^a zbar^b goes to C(a, b) b!/pi^b z^(a-b) (zero if b > a).
    """
    v = g.vars
    dims = range(v.n) if dims is None else dims
    out = {}
    for key, c in g.items():
        ez, ezb, ezp, ezbp = (list(e) for e in v.split(key))
        coef = 1.0
        for i in dims:
            a, b = ez[i], ezb[i]
            if b > a:
                coef = 0.0
                break
            coef *= factorial(a) / factorial(a - b) / pi ** b
            ez[i], ezb[i] = a - b, 0
        if coef:
            k = v.join(ez, ezb, ezp, ezbp)
            out[k] = out[k] + coef * c if k in out else coef * c
    return PolyKernel(v, out, g.rank)


def model_extend(g: PolyKernel, n: int | None = None) -> WeightedSection:
    """(E g)(Z_Y, Z_N) = (P_m g)(Z_Y) exp(-pi/2 |Z_N|^2) as a section on C^n.

    g may only use the first m = g.vars.m indices. The result is returned in
    the full-Gaussian convention, so the polynomial is P_m g itself.
    """
    v = g.vars
    m = v.m
    n = v.n if n is None else n
    for grp in ("z", "zb"):
        for i in range(m, v.n):
            if g.depends_on(grp, i):
                raise ShapeError("model_extend input must only use tangent variables")
    proj = project_holomorphic(g, range(m))
    target = VarSpec(n, m, n)
    fn = lambda k: target.join(*(tuple(e[:m]) + (0,) * (n - m) for e in v.split(k)[:2]), (0,) * n, (0,) * n)
    return WeightedSection(proj.map_keys(target, fn))


def model_dbar_split(poly: PolyKernel) -> tuple[list[PolyKernel], list[PolyKernel]]:
    """Flat-level normal and horizontal dbar of poly * exp(-pi/2 |Z_N|^2).

    Returns (normal, horizontal): normal[k - m] is the dzbar_k coefficient of
    L_N = sum_{k>m} dzbar_k (d/dzbar_k + pi z_k / 2), horizontal[i] the dzbar_i
    coefficient of dbar_H = sum_{i<=m} dzbar_i d/dzbar_i, each as a polynomial
    multiplying the same Gaussian exp(-pi/2 |Z_N|^2).
    """
    v = poly.vars
    m = v.m
    # (d/dzbar_k + pi z_k/2)(P e^{-pi/2|z_N|^2}) = (dP/dzbar_k) e^{...}
    normal = [poly.derivative("zb", k) for k in range(m, v.n)]
    horizontal = [poly.derivative("zb", i) for i in range(m)]
    return normal, horizontal
