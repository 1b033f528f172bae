"""
Verification suites for the bracket calculus: closed-form identities,
randomised agreement with the quadrature oracle, and the degree/parity laws.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from math import pi

import numpy as np

from .calculus import (compose_core, compose_E, compose_K, compose_Kdoubleprime,
                       compose_Kprime)
from .polynomials import (PolyKernel, VarSpec, poly_eval, poly_parity_degree, random_poly)
from .quadrature import bracket_by_quadrature

BRACKETS = {
    "core": lambda a1, a2, n, m: compose_core(a1, a2, n),
    "K": compose_K,
    "Kprime": compose_Kprime,
    "E": compose_E,
    "Kdoubleprime": compose_Kdoubleprime,
}


@dataclass
class CheckResult:
    name: str
    deviation: float
    tol: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _check(name: str, got: PolyKernel, want: PolyKernel, tol: float = 1e-12) -> CheckResult:
    dev = got.max_abs_diff(want)
    return CheckResult(name, dev, tol, dev < tol)


def identity_suite(n: int = 2, m: int = 1, seed: int = 0, tol: float = 1e-12) -> list[CheckResult]:
    """The closed-form bracket identities, for every admissible index choice."""
    rng = np.random.default_rng(seed)
    sq = VarSpec(n, m, n)
    one = PolyKernel.constant(sq, 1.0)
    z = lambda g, i: PolyKernel.variable(sq, g, i)
    K = lambda a1, a2: compose_K(a1, a2, n, m)
    out = []

    # transfer through the middle variable and transparency of the right variable
    for trial in range(3):
        a1 = random_poly(rng, sq, 2)
        a2 = random_poly(rng, sq, 2)
        pm = random_poly(rng, VarSpec(n, m, n), 2, groups=("z", "zb"))
        p_mid = PolyKernel(sq, {sq.join((0,) * n, (0,) * n, *sq.split(k)[:2]): c for k, c in pm.items()})
        out.append(_check(f"transfer[{trial}]", K(a1 * p_mid, a2), K(a1, pm * a2), tol))
        out.append(_check(f"transparency[{trial}]", K(a1, a2 * p_mid), K(a1, a2) * p_mid, tol))

    for i in range(m):
        for j in range(m):
            out.append(_check(f"K[1,z{i}z{j}]", K(one, z("z", i) * z("z", j)), z("z", i) * z("z", j), tol))
            want = z("z", i) * z("zbp", j) + (one.scale(1 / pi) if i == j else PolyKernel.zero(sq))
            out.append(_check(f"K[1,z{i}zb{j}]", K(one, z("z", i) * z("zb", j)), want, tol))
            out.append(_check(f"K[1,zb{i}zb{j}]", K(one, z("zb", i) * z("zb", j)), z("zbp", i) * z("zbp", j), tol))
        # factor rule: P independent of z_i, zbar_i
        P = PolyKernel.zero(sq)
        for _ in range(4):
            k = [0] * sq.nvars
            for g in ("z", "zb"):
                for j in range(n):
                    if j != i and rng.random() < 0.4:
                        k[sq.index(g, j)] += 1
            P = P + PolyKernel(sq, {tuple(k): complex(*rng.standard_normal(2))})
        out.append(_check(f"K[1,P z{i}]", K(one, P * z("z", i)), K(one, P) * z("z", i), tol))
        out.append(_check(f"K[1,P zb{i}]", K(one, P * z("zb", i)), K(one, P) * z("zbp", i), tol))

    # a linear real normal factor kills the bracket of tangent-only kernels
    def tangent_only(p: PolyKernel) -> PolyKernel:
        return PolyKernel(sq, {k_: c for k_, c in p.items()
                               if not any(any(e[m:]) for e in sq.split(k_))})

    for k in range(m, n):
        a1 = tangent_only(random_poly(rng, sq, 3, nterms=10))
        a2 = tangent_only(random_poly(rng, sq, 3, nterms=10))
        re_k = z("z", k) + z("zb", k)
        im_k = (z("z", k) - z("zb", k)).scale(-1j)
        zero = PolyKernel.zero(sq)
        out.append(_check(f"K[A1,Re z{k} A2]=0", K(a1, re_k * a2), zero, tol))
        out.append(_check(f"K[A1,Im z{k} A2]=0", K(a1, im_k * a2), zero, tol))

    # projector absorption
    out.append(_check("K[1,1]", K(one, one), one, tol))
    out.append(_check("K'[1,1]", compose_Kprime(one, one, n, m), one, tol))
    vY = VarSpec(m, m, m)
    out.append(_check("K''[1,1]", compose_Kdoubleprime(one, PolyKernel.constant(vY, 1.0), n, m),
                      PolyKernel.constant(VarSpec(n, m, m), 1.0), tol))
    for i in range(m):
        for j in range(m):
            a2 = PolyKernel.variable(vY, "z", i) * PolyKernel.variable(vY, "zb", j)
            vE = VarSpec(n, m, m)
            want = PolyKernel.variable(vE, "z", i) * PolyKernel.variable(vE, "zbp", j)
            if i == j:
                want = want + PolyKernel.constant(vE, 1 / pi)
            out.append(_check(f"K''[1,z{i}zb{j}]", compose_Kdoubleprime(one, a2, n, m), want, tol))
    for j in range(n):
        out.append(_check(f"K'[1,z{j}]", compose_Kprime(one, z("z", j), n, m), z("z", j), tol))

    # n = m: K_{n,n} is the core bracket
    full = VarSpec(n, n, n)
    a1, a2 = random_poly(rng, full, 3), random_poly(rng, full, 3)
    kn, core = compose_K(a1, a2, n, n), compose_core(a1, a2, n)
    out.append(CheckResult("K_nn==core", kn.max_abs_diff(core), 0.0, kn == core, "exact equality"))
    return out


def _bracket_inputs(rng, kind: str, n: int, m: int, degree: int, parities: tuple):
    if kind in ("core", "K", "Kprime"):
        v1 = v2 = VarSpec(n, m if kind != "core" else n, n)
    elif kind == "E":
        v1, v2 = VarSpec(n, m, m), VarSpec(m, m, m)
    else:
        v1, v2 = VarSpec(n, m, n), VarSpec(m, m, m)
    a1 = random_poly(rng, v1, degree, nterms=5, parity=parities[0])
    if v2.nvars == 0:
        a2 = PolyKernel.constant(v2, complex(*rng.standard_normal(2)))
        parities = (parities[0], "even")
    else:
        a2 = random_poly(rng, v2, degree, nterms=5, parity=parities[1])
    return a1, a2, parities


CONFIGS = {
    "core": [(1, 1), (2, 2)],
    "K": [(1, 0), (2, 0), (2, 1)],
    "Kprime": [(1, 0), (2, 0), (2, 1)],
    "E": [(1, 0), (2, 0), (2, 1)],
    "Kdoubleprime": [(1, 0), (2, 0), (2, 1)],
}


def random_bracket_cases(count: int = 200, seed: int = 1, degree: int = 3,
                         kinds=("K", "Kprime", "Kdoubleprime")):
    """Seeded list of (kind, n, m, a1, a2, parities, Z, Z')."""
    rng = np.random.default_rng(seed)
    cases = []
    for idx in range(count):
        kind = kinds[idx % len(kinds)]
        cfgs = CONFIGS[kind]
        n, m = cfgs[int(rng.integers(len(cfgs)))]
        par = (("even", "odd")[int(rng.integers(2))], ("even", "odd")[int(rng.integers(2))])
        a1, a2, par = _bracket_inputs(rng, kind, n, m, degree, par)
        right = m if kind in ("E", "Kdoubleprime") else n
        Z = 0.4 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        Zp = 0.4 * (rng.standard_normal(right) + 1j * rng.standard_normal(right))
        cases.append((kind, n, m, a1, a2, par, Z, Zp))
    return cases


def oracle_suite(count: int = 200, seed: int = 1, tol: float = 1e-8, q: int = 40,
                 q_inner: int = 40, kinds=("K", "Kprime", "Kdoubleprime")) -> tuple[list[CheckResult], list[CheckResult]]:
    """Oracle agreement and structural (degree/parity) checks on random brackets."""
    oracle, structure = [], []
    for idx, (kind, n, m, a1, a2, par, Z, Zp) in enumerate(random_bracket_cases(count, seed, kinds=kinds)):
        res = BRACKETS[kind](a1, a2, n, m)
        val = poly_eval(res, Z, Zp)
        ref = bracket_by_quadrature(kind, a1, a2, n, m, Z, Zp, q=q, q_inner=q_inner)
        dev = float(np.abs(val - ref).max() / max(1.0, float(np.abs(ref).max())))
        name = f"{idx}:{kind}(n={n},m={m})"
        oracle.append(CheckResult(name, dev, tol, dev < tol))
        deg, parity = poly_parity_degree(res)
        d1, _ = poly_parity_degree(a1)
        d2, _ = poly_parity_degree(a2)
        want = "even" if par[0] == par[1] else "odd"
        ok = deg <= d1 + d2 and (res.is_zero() or parity == want)
        structure.append(CheckResult(name, 0.0 if ok else 1.0, 0.5, ok,
                                     f"deg {deg} <= {d1}+{d2}, parity {parity} (expected {want})"))
    return oracle, structure
