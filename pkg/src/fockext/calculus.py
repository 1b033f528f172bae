"""
Gaussian moments and the composition brackets of the model kernel calculus.

Every bracket is one masked contraction over a middle variable u. After the
product of the two model Gaussians is divided by the target Gaussian, each
middle coordinate carries one of four weights:

    both   exp(-pi (u - z)(ubar - zbar'))   shift u -> v + z, ubar -> vbar + zbar'
    left   exp(-pi (u - z) ubar)            shift u -> v + z only
    right  exp(-pi u (ubar - zbar'))        shift ubar -> vbar + zbar' only
    none   exp(-pi |u|^2)                   plain moment

after which v^a vbar^b integrates to delta_ab a!/pi^a. The two shifts are
independent (analytic continuation of the real Gaussian).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial, pi
from typing import Sequence

import numpy as np

from .polynomials import PolyKernel, ShapeError, VarSpec, relabel

FAMILY_TAGS = ("P_n", "P_perp", "E", "P_m")


@dataclass(frozen=True)
class GaussianFamily:
    """Which model Gaussian multiplies a kernel polynomial.

    P_n and P_perp act on (n, n) kernels, E on (n, m), P_m on (m, m).
    """

    tag: str
    n: int
    m: int

    def __post_init__(self):
        if self.tag not in FAMILY_TAGS:
            raise ValueError(f"unknown family {self.tag!r}")
        if not 0 <= self.m <= self.n:
            raise ShapeError(f"need 0 <= m <= n, got ({self.n}, {self.m})")

    @property
    def dims(self) -> tuple[int, int]:
        return {"P_n": (self.n, self.n), "P_perp": (self.n, self.n),
                "E": (self.n, self.m), "P_m": (self.m, self.m)}[self.tag]

    def var_spec(self) -> VarSpec:
        left, right = self.dims
        return VarSpec(left, min(self.m, left), right)


def gaussian_moment(alpha: Sequence[int], beta: Sequence[int]) -> float:
    """Integral of z^alpha zbar^beta exp(-pi |z|^2) over C^k (Lebesgue measure)."""
    if len(alpha) != len(beta):
        raise ShapeError("moment exponents must have equal length")
    if tuple(alpha) != tuple(beta):
        return 0.0
    out = 1.0
    for a in alpha:
        out *= factorial(a) / pi ** a
    return out


@lru_cache(maxsize=None)
def _coordinate_rule(mode: str, a: int, b: int) -> tuple[tuple[int, int, float], ...]:
    """Integral of u^a ubar^b against one coordinate weight.

    Returns (power of the left target z, power of the right target zbar', coeff).
    """
    if mode == "both":
        return tuple((a - c, b - c, comb(a, c) * comb(b, c) * factorial(c) / pi ** c)
                     for c in range(min(a, b) + 1))
    if mode == "left":
        return ((a - b, 0, comb(a, b) * factorial(b) / pi ** b),) if a >= b else ()
    if mode == "right":
        return ((0, b - a, comb(b, a) * factorial(a) / pi ** a),) if b >= a else ()
    if mode == "none":
        return ((0, 0, factorial(a) / pi ** a),) if a == b else ()
    raise ValueError(mode)


def contract(a1: PolyKernel, a2: PolyKernel, modes: Sequence[str], out_vars: VarSpec) -> PolyKernel:
    """Masked contraction of a1(Z, U) a2(U, Z') over the middle variable U.

    modes[i] is the weight of middle coordinate i. A left shift lands on the
    result's unprimed z_i, a right shift on its primed zbar'_i. The unprimed
    group of a1 and the primed group of a2 are carried through unchanged.
    """
    v1, v2 = a1.vars, a2.vars
    mid = v1.right_dim
    if v2.n != mid or len(modes) != mid:
        raise ShapeError(f"middle dimensions disagree: {v1.right_dim}, {v2.n}, {len(modes)} modes")
    if out_vars.n != v1.n or out_vars.right_dim != v2.right_dim:
        raise ShapeError("output spec must have a1's left and a2's right dimensions")
    if a1.rank != a2.rank:
        raise ShapeError("coefficient rank mismatch")
    for i, mode in enumerate(modes):
        if mode in ("both", "left") and i >= out_vars.n:
            raise ShapeError(f"left shift of coordinate {i} has no target")
        if mode in ("both", "right") and i >= out_vars.right_dim:
            raise ShapeError(f"right shift of coordinate {i} has no target")

    n_out, r_out = out_vars.n, out_vars.right_dim
    split1 = [(v1.split(k), c) for k, c in a1.items()]
    split2 = [(v2.split(k), c) for k, c in a2.items()]
    out: dict = {}
    for (ez1, ezb1, ezp1, ezbp1), c1 in split1:
        for (ez2, ezb2, ezp2, ezbp2), c2 in split2:
            rules = []
            for i in range(mid):
                r = _coordinate_rule(modes[i], ezp1[i] + ez2[i], ezbp1[i] + ezb2[i])
                if not r:
                    break
                rules.append(r)
            else:
                c12 = c1 @ c2
                for choice in itertools.product(*rules):
                    z = list(ez1)
                    zbp = list(ezbp2)
                    coef = 1.0
                    for i, (dz, dzbp, w) in enumerate(choice):
                        if dz:
                            z[i] += dz
                        if dzbp:
                            zbp[i] += dzbp
                        coef *= w
                    key = tuple(z) + tuple(ezb1) + tuple(ezp2) + tuple(zbp)
                    val = coef * c12
                    out[key] = out[key] + val if key in out else val
    return PolyKernel(out_vars, out, a1.rank)


def _require(a: PolyKernel, left: int, right: int, name: str):
    if a.vars.n != left or a.vars.right_dim != right:
        raise ShapeError(f"{name} must have dims ({left}, {right}), got ({a.vars.n}, {a.vars.right_dim})")


def compose_core(a1: PolyKernel, a2: PolyKernel, n: int) -> PolyKernel:
    """Bracket for (a1 P_n) o (a2 P_n) = K[a1, a2] P_n."""
    _require(a1, n, n, "a1")
    _require(a2, n, n, "a2")
    return contract(a1, a2, ["both"] * n, VarSpec(n, a1.vars.m, n))


def compose_K(a1: PolyKernel, a2: PolyKernel, n: int, m: int) -> PolyKernel:
    """Bracket for (a1 P_perp) o (a2 P_perp) = K_{n,m}[a1, a2] P_perp."""
    _require(a1, n, n, "a1")
    _require(a2, n, n, "a2")
    return contract(a1, a2, ["both"] * m + ["none"] * (n - m), VarSpec(n, m, n))


def compose_Kprime(a1: PolyKernel, a2: PolyKernel, n: int, m: int) -> PolyKernel:
    """Bracket for (a1 P_n) o (a2 P_perp) = K'_{n,m}[a1, a2] P_perp."""
    _require(a1, n, n, "a1")
    _require(a2, n, n, "a2")
    return contract(a1, a2, ["both"] * m + ["left"] * (n - m), VarSpec(n, m, n))


def compose_E(a1: PolyKernel, a2: PolyKernel, n: int, m: int) -> PolyKernel:
    """Bracket for (a1 E) o (a2 P_m) = [a1, a2] E, with a1 of dims (n, m) and a2 of dims (m, m)."""
    _require(a1, n, m, "a1")
    _require(a2, m, m, "a2")
    return contract(a1, a2, ["both"] * m, VarSpec(n, m, m))


def lift_tangent(a: PolyKernel, n: int, right: int | None = None) -> PolyKernel:
    """View an (m, m) kernel as a kernel on C^n that ignores normal variables."""
    m = a.vars.n
    right = n if right is None else right
    return relabel(a, VarSpec(n, m, right))


def restrict_right(a: PolyKernel, m: int) -> PolyKernel:
    """Drop the primed normal variables (they must not occur)."""
    return relabel(a, VarSpec(a.vars.n, m, m))


def restrict_tangent(a: PolyKernel, m: int) -> PolyKernel:
    """Set the unprimed normal variables to zero and shrink the left group to m."""
    n = a.vars.n
    b = a.substitute_zero("z", range(m, n)).substitute_zero("zb", range(m, n))
    return relabel(b, VarSpec(m, m, m), left_map={i: i for i in range(m)},
                   right_map={i: i for i in range(m)})


def compose_Kdoubleprime(a1: PolyKernel, a2: PolyKernel, n: int, m: int) -> PolyKernel:
    """Bracket for (a1 P_perp) o E o (a2 P_m) = K''_{n,m}[a1, a2] E.

    Computed as K_{n,m}[a1, K_{m,m}[1, a2]] with the inner result lifted to C^n.
    """
    _require(a1, n, n, "a1")
    _require(a2, m, m, "a2")
    one = PolyKernel.constant(VarSpec(m, m, m), 1.0, a2.rank)
    inner = compose_core(one, a2, m)
    outer = compose_K(a1, lift_tangent(inner, n), n, m)
    return restrict_right(outer, m)
