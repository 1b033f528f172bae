"""
Discretised weighted Bergman spaces on C^n (n <= 2) with perturbed Gaussian
weights and graph submanifolds.

Everything is computed in rescaled coordinates zeta = sqrt(p) z, where the
weight becomes Phi_p(zeta) = pi |zeta|^2 + p phi_1(zeta / sqrt(p)) and the
submanifold becomes Y_p = {(omega, sqrt(p) f(omega / sqrt(p)))}. Kernels in
these coordinates are the p^-n (resp. p^-m) rescaled kernels of the original
problem; norms are converted back where reported.

Bases are monomials normalised by sqrt(pi^|a| / a!) (orthonormal for the flat
weight), ordered by total degree so Cholesky factors respect the degree flag.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import factorial, pi, sqrt
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize

from .model import eval_model_kernel
from .polynomials import PolyKernel, VarSpec, poly_eval_many
from .quadrature import gauss_hermite_1d

MAX_COND = 1e12


class SetupError(RuntimeError):
    """Numerical setup failure (indefinite or ill-conditioned Gram matrix)."""


def _rows(x, d: int) -> np.ndarray:
    """Coerce points to shape (N, d); d may be 0."""
    x = np.asarray(x, complex)
    if d == 0:
        return np.zeros((x.shape[0] if x.ndim == 2 else 1, 0), complex)
    return np.atleast_2d(x).reshape(-1, d)


def _poly_from_terms(n: int, terms: dict) -> PolyKernel:
    """{(alpha, beta): c} -> polynomial sum c z^alpha zbar^beta on C^n."""
    v = VarSpec(n, n, n)
    out = {}
    for (alpha, beta), c in terms.items():
        out[v.join(alpha, beta, (0,) * n, (0,) * n)] = c
    return PolyKernel(v, out)


@dataclass(frozen=True)
class WeightSpec:
    """Weight p * (pi |z|^2 + phi_1) with phi_1 a real polynomial.

    perturbation maps (alpha, beta) exponent pairs to coefficients of
    z^alpha zbar^beta; conjugate symmetry c[a,b] = conj(c[b,a]) is required,
    and constant, linear and pure (2,0)/(0,2) parts must vanish.
    """

    n: int
    perturbation: dict = field(default_factory=dict)

    def __post_init__(self):
        for (a, b), c in self.perturbation.items():
            if len(a) != self.n or len(b) != self.n:
                raise ValueError("perturbation exponents must have length n")
            da, db = sum(a), sum(b)
            if da + db <= 1 or (da + db == 2 and (da == 0 or db == 0)):
                raise ValueError(f"perturbation term {(a, b)} is not allowed")
            c2 = self.perturbation.get((b, a))
            if c2 is None or abs(c2 - np.conj(c)) > 1e-14:
                raise ValueError("perturbation must be real (conjugate-symmetric coefficients)")

    @property
    def flat(self) -> bool:
        return not self.perturbation

    @cached_property
    def phi1(self) -> PolyKernel:
        return _poly_from_terms(self.n, self.perturbation)

    def rescaled_phi1(self, p: float) -> PolyKernel:
        """p * phi_1(zeta / sqrt(p)) as a polynomial in zeta."""
        v = self.phi1.vars
        return PolyKernel(v, {k: c * p ** (1 - sum(k) / 2) for k, c in self.phi1.items()})

    def levi(self, Z: np.ndarray) -> np.ndarray:
        """Matrices d^2 phi / dz_i dzbar_j / pi at points Z (shape (N, n))."""
        Z = np.atleast_2d(np.asarray(Z, complex))
        out = np.zeros((Z.shape[0], self.n, self.n), complex)
        out[:] = np.eye(self.n)
        for i, j in itertools.product(range(self.n), repeat=2):
            d = self.phi1.derivative("z", i).derivative("zb", j)
            if not d.is_zero():
                out[:, i, j] += poly_eval_many(d, Z) / pi
        return out

    def check_positive(self, radius: float, npts: int = 400, seed: int = 0):
        rng = np.random.default_rng(seed)
        Z = radius * (rng.uniform(-1, 1, (npts, self.n)) + 1j * rng.uniform(-1, 1, (npts, self.n)))
        ev = np.linalg.eigvalsh(self.levi(Z))
        if ev.min() <= 0:
            raise SetupError("weight Hessian is not positive on the quadrature box")


@dataclass(frozen=True)
class EmbeddingSpec:
    """Graph Y = {(w, f(w))} of a holomorphic polynomial map f: C^m -> C^(n-m).

    f[k] maps exponent tuples (length m) to coefficients of the k-th component;
    f(0) = 0, df(0) = 0 and degree <= 4 are required.
    """

    n: int
    m: int
    f: tuple = ()

    def __post_init__(self):
        if not 0 <= self.m < self.n:
            raise ValueError("need 0 <= m < n")
        f = tuple(dict(c) for c in self.f) or tuple({} for _ in range(self.n - self.m))
        if len(f) != self.n - self.m:
            raise ValueError("f needs n - m components")
        for comp in f:
            for e in comp:
                if len(e) != self.m or sum(e) < 2 or sum(e) > 4:
                    raise ValueError(f"graph term {e} must have degree in [2, 4]")
        object.__setattr__(self, "f", f)

    @property
    def flat(self) -> bool:
        return all(not c for c in self.f)

    @property
    def degree(self) -> int:
        return max((sum(e) for c in self.f for e in c), default=1)

    def second_fundamental_form(self) -> np.ndarray:
        """A[i, j, k] = d^2 f_k / dw_i dw_j at 0 (flat metric at the base point)."""
        m = self.m
        A = np.zeros((m, m, self.n - m), complex)
        for k, comp in enumerate(self.f):
            for e, c in comp.items():
                if sum(e) != 2:
                    continue
                idx = [i for i in range(m) for _ in range(e[i])]
                i, j = idx
                A[i, j, k] += c * (2 if i == j else 1)
                if i != j:
                    A[j, i, k] += c
        return A

    def graph_rescaled(self, omega: np.ndarray, p: float) -> np.ndarray:
        """sqrt(p) f(omega / sqrt(p)) at points omega (shape (N, m))."""
        omega = _rows(omega, self.m)
        out = np.zeros((omega.shape[0], self.n - self.m), complex)
        for k, comp in enumerate(self.f):
            for e, c in comp.items():
                out[:, k] += c * p ** ((1 - sum(e)) / 2) * np.prod(omega ** np.asarray(e), axis=1)
        return out

    def jacobian_rescaled(self, omega: np.ndarray, p: float) -> np.ndarray:
        """df(omega / sqrt(p)), shape (N, n - m, m)."""
        omega = _rows(omega, self.m)
        out = np.zeros((omega.shape[0], self.n - self.m, self.m), complex)
        for k, comp in enumerate(self.f):
            for e, c in comp.items():
                for i in range(self.m):
                    if e[i]:
                        e2 = list(e)
                        e2[i] -= 1
                        out[:, k, i] += c * e[i] * p ** ((1 - sum(e)) / 2) * np.prod(omega ** np.asarray(e2), axis=1)
        return out

    def jacobian(self, w: np.ndarray) -> np.ndarray:
        return self.jacobian_rescaled(w, 1.0)

    def point(self, w: np.ndarray) -> np.ndarray:
        w = _rows(w, self.m)
        return np.concatenate([w, self.graph_rescaled(w, 1.0)], axis=1)


def graded_exponents(n: int, D: int) -> list[tuple]:
    """All exponents of total degree <= D, ordered by degree then lexicographically."""
    out = []
    for d in range(D + 1):
        out.extend(sorted((e for e in itertools.product(range(d + 1), repeat=n) if sum(e) == d), reverse=True))
    return out


def default_degree(p: float, radius: float) -> int:
    """Basis cutoff max(10, 3 sqrt(p) radius sqrt(pi) + 6), radius in original coordinates."""
    return int(max(10, np.ceil(3 * sqrt(p) * radius * sqrt(pi) + 6)))


def _norm_factors(D: int) -> np.ndarray:
    return np.array([sqrt(pi ** a / factorial(a)) for a in range(D + 1)])


def normalized_monomials(points: np.ndarray, exps: Sequence[tuple], D: int) -> np.ndarray:
    """Matrix (N_points, N_basis) of sqrt(pi^|a|/a!) zeta^a."""
    points = np.atleast_2d(np.asarray(points, complex))
    s = _norm_factors(D)
    e = np.asarray(exps, int).reshape(len(exps), -1)
    out = np.ones((points.shape[0], len(exps)), complex)
    for i in range(points.shape[1]):
        table = points[:, i:i + 1] ** np.arange(D + 1)[None, :] * s[None, :]
        out *= table[:, e[:, i]]
    return out


def _plane_rule(q: int):
    x, w = gauss_hermite_1d(q)
    u = (x[:, None] + 1j * x[None, :]).ravel()
    return u, np.outer(w, w).ravel()


def _weighted_gram(n: int, exps, D: int, q: int, extra_weight, block: int = 256) -> np.ndarray:
    """Gram of normalised monomials against exp(-pi |zeta|^2 - extra(zeta)), tensor Gauss-Hermite."""
    u, w = _plane_rule(q)
    s = _norm_factors(D)
    P = u[:, None] ** np.arange(D + 1)[None, :] * s[None, :]
    e = np.asarray(exps, int).reshape(len(exps), -1)
    if n == 0:
        return np.ones((1, 1), complex)
    if n == 1:
        wt = w * np.exp(-extra_weight(u[:, None]))
        M = (P.conj() * wt[:, None]).T @ P
        return M[np.ix_(e[:, 0], e[:, 0])]
    if n == 2:
        d1 = D + 1
        Y2 = (P.conj()[:, :, None] * P[:, None, :]).reshape(len(u), d1 * d1)
        X = np.empty((len(u), d1 * d1), complex)
        for start in range(0, len(u), block):
            rows = slice(start, start + block)
            pts = np.stack(np.broadcast_arrays(u[rows, None], u[None, :]), axis=-1).reshape(-1, 2)
            W = (w[rows, None] * w[None, :]) * np.exp(-extra_weight(pts)).reshape(-1, len(u))
            X[rows] = W @ Y2
        return (Y2.T @ X).reshape(d1, d1, d1, d1)[e[:, 0][:, None], e[:, 0][None, :], e[:, 1][:, None], e[:, 1][None, :]]
    raise NotImplementedError("the lab supports n <= 2 (m <= 1)")


def _cholesky_scaled(G: np.ndarray, what: str) -> tuple[np.ndarray, float]:
    G = 0.5 * (G + G.conj().T)
    d = np.sqrt(np.real(np.diag(G)))
    if np.any(d <= 0):
        raise SetupError(f"{what} Gram has non-positive diagonal")
    Gs = G / d[:, None] / d[None, :]
    ev = np.linalg.eigvalsh(Gs)
    if ev[0] <= 0:
        raise SetupError(f"{what} Gram is indefinite (quadrature too coarse?)")
    cond = float(ev[-1] / ev[0])
    if cond > MAX_COND:
        raise SetupError(f"{what} Gram condition number {cond:.3g} exceeds {MAX_COND:g}")
    L = np.linalg.cholesky(Gs)
    return d[:, None] * L, cond


def _compose_graph(emb: EmbeddingSpec, p: float, exps, D: int, yexps, DY: int) -> np.ndarray:
    """Exact coefficient matrix of f |-> f(omega, sqrt(p) f(omega/sqrt(p))) in normalised monomials."""
    m, nn = emb.m, emb.n - emb.m
    yindex = {e: i for i, e in enumerate(yexps)}
    sY = _norm_factors(DY)
    sX = _norm_factors(D)
    comps = []
    for comp in emb.f:
        comps.append({e: c * p ** ((1 - sum(e)) / 2) for e, c in comp.items()})

    def mul(a: dict, b: dict) -> dict:
        out: dict = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = out.get(e, 0) + ca * cb
        return out

    powers = [[{(0,) * m: 1.0}] for _ in range(nn)]
    C = np.zeros((len(yexps), len(exps)), complex)
    for col, a in enumerate(exps):
        aY, aN = a[:m], a[m:]
        poly = {tuple(aY): 1.0}
        for k in range(nn):
            while len(powers[k]) <= aN[k]:
                powers[k].append(mul(powers[k][-1], comps[k]))
            poly = mul(poly, powers[k][aN[k]])
        sa = np.prod([sX[x] for x in a])
        for e, c in poly.items():
            if c == 0:
                continue
            if e not in yindex:
                raise ValueError("Y basis too small for the restriction")
            C[yindex[e], col] += c * sa / np.prod([sY[x] for x in e])
    return C


@dataclass
class DiscreteModel:
    """One (p, weight, embedding) instance of the truncated model."""

    p: float
    D: int
    quad_order: int
    weight: WeightSpec
    embedding: EmbeddingSpec
    exps: list
    yexps: list
    D_Y: int
    gram: np.ndarray
    chol: np.ndarray
    cond: float
    gram_Y: np.ndarray
    chol_Y: np.ndarray
    cond_Y: float
    constraint: np.ndarray
    restriction: np.ndarray          # M = L_Y^H C L^-H, orthonormal coordinates
    n_g: int                         # Y directions of degree <= D (the extension domain)
    kernel_basis: np.ndarray         # coefficients spanning ker(Res) in H_D
    lift: np.ndarray                 # Y monomials of degree <= D -> functions of zeta_Y alone
    singular_values: np.ndarray
    phi1_p: PolyKernel

    @property
    def rank(self) -> int:
        return len(self.exps) - self.kernel_basis.shape[1]

    @property
    def n(self) -> int:
        return self.weight.n

    @property
    def m(self) -> int:
        return self.embedding.m

    # basis functions -----------------------------------------------------

    def frame_weight(self, zeta: np.ndarray) -> np.ndarray:
        """exp(-Phi_p(zeta) / 2)."""
        zeta = np.atleast_2d(zeta)
        phi = pi * np.sum(np.abs(zeta) ** 2, axis=1)
        if not self.phi1_p.is_zero():
            phi = phi + poly_eval_many(self.phi1_p, zeta).real
        return np.exp(-0.5 * phi)

    def orthonormal_functions(self, zeta: np.ndarray) -> np.ndarray:
        """phi_j(zeta), shape (N_points, N): f = sum u_j phi_j in orthonormal coordinates."""
        B = normalized_monomials(zeta, self.exps, self.D)
        return solve_triangular(self.chol, B.T.conj(), lower=True).conj().T

    def y_points(self, omega: np.ndarray) -> np.ndarray:
        omega = _rows(omega, self.m)
        return np.concatenate([omega, self.embedding.graph_rescaled(omega, self.p)], axis=1)

    def y_functions(self, omega: np.ndarray) -> np.ndarray:
        omega = _rows(omega, self.m)
        B = normalized_monomials(omega, self.yexps, self.D_Y)
        return solve_triangular(self.chol_Y, B.T.conj(), lower=True).conj().T

    # projectors in orthonormal coordinates ---------------------------------

    @cached_property
    def zero_projector(self) -> np.ndarray:
        """Projector onto ker(Res), from the explicit kernel basis."""
        N = len(self.exps)
        if self.kernel_basis.shape[1] == 0:
            return np.zeros((N, N), complex)
        Q, _ = np.linalg.qr(self.chol.conj().T @ self.kernel_basis)
        return Q @ Q.conj().T

    @cached_property
    def perp_projector(self) -> np.ndarray:
        """Projector onto the orthogonal complement of ker(Res)."""
        return np.eye(len(self.exps)) - self.zero_projector

    @cached_property
    def extension_matrix(self) -> np.ndarray:
        """Minimal-norm extension of the first n_g orthonormal Y directions (N x n_g).

        g(zeta_Y) extends g; projecting it off ker(Res) gives the minimal one.
        """
        k = self.n_g
        inv = solve_triangular(self.chol_Y.conj().T[:k, :k], np.eye(k), lower=False)
        return self.perp_projector @ (self.chol.conj().T @ (self.lift @ inv))

    def coefficient_projector(self, which: str) -> np.ndarray:
        """Projector acting on normalised-monomial coefficients c (u = L^H c)."""
        P = {"perp": self.perp_projector, "zero": self.zero_projector,
             "full": np.eye(len(self.exps))}[which]
        L = self.chol
        return solve_triangular(L.conj().T, P @ L.conj().T, lower=False)

    def kernel(self, which: str, zeta: np.ndarray, zeta_p: np.ndarray, unitary: bool = True) -> np.ndarray:
        """Rescaled projector kernel at paired points (elementwise), optionally in the unit frame."""
        P = {"perp": self.perp_projector, "zero": self.zero_projector,
             "full": np.eye(len(self.exps))}[which]
        A = self.orthonormal_functions(zeta)
        B = self.orthonormal_functions(zeta_p)
        K = np.einsum("ki,ij,kj->k", A, P, B.conj())
        if unitary:
            K = K * self.frame_weight(zeta) * self.frame_weight(zeta_p)
        return K

    def extension_kernel(self, zeta: np.ndarray, omega_p: np.ndarray, unitary: bool = True) -> np.ndarray:
        A = self.orthonormal_functions(zeta)
        Yf = self.y_functions(omega_p)[:, :self.n_g]
        K = np.einsum("ki,ij,kj->k", A, self.extension_matrix, Yf.conj())
        if unitary:
            K = K * self.frame_weight(zeta) * self.frame_weight(self.y_points(omega_p))
        return K

    # sections --------------------------------------------------------------

    def section_values(self, u: np.ndarray, zeta: np.ndarray, unitary: bool = True) -> np.ndarray:
        vals = self.orthonormal_functions(zeta) @ u
        return vals * self.frame_weight(zeta) if unitary else vals

    def y_section_values(self, v: np.ndarray, omega: np.ndarray, unitary: bool = True) -> np.ndarray:
        Yf = self.y_functions(omega)[:, :len(v)]
        vals = Yf @ v
        return vals * self.frame_weight(self.y_points(omega)) if unitary else vals

    def original_gram(self) -> np.ndarray:
        """Gram of the plain monomials z^a in L^2(exp(-p phi) dv) on the original chart."""
        s = _norm_factors(self.D)
        deg = np.array([sum(a) for a in self.exps])
        norm = np.array([np.prod([s[x] for x in a]) for a in self.exps])
        fac = self.p ** (-deg / 2) / norm
        return self.p ** (-self.n) * fac[:, None] * self.gram * fac[None, :]

    def norm_sq(self, u: np.ndarray) -> float:
        """Original-coordinate squared norm of the section with orthonormal coordinates u."""
        return float(self.p ** (-self.n) * np.vdot(u, u).real)

    def y_norm_sq(self, v: np.ndarray) -> float:
        return float(self.p ** (-self.m) * np.vdot(v, v).real)

    def kappa_N(self, w: np.ndarray) -> np.ndarray:
        """det(T^H L T) / det(L) at graph points (w, f(w)), original coordinates;
        L is the Levi matrix of phi / pi, T = [I; df(w)], dv_Y flat on C^m."""
        w = _rows(w, self.m)
        x = self.embedding.point(w)
        L = self.weight.levi(x)
        T = np.concatenate([np.broadcast_to(np.eye(self.m), (len(w), self.m, self.m)),
                            self.embedding.jacobian(w)], axis=1)
        num = np.linalg.det(np.conj(np.transpose(T, (0, 2, 1))) @ L @ T) if self.m else np.ones(len(w))
        return np.real(num / np.linalg.det(L))


def build_discrete_model(p: float, D: int, weight: WeightSpec, embedding: EmbeddingSpec,
                         quad_order: int | None = None) -> DiscreteModel:
    """Assemble Gram, restriction and derived data by tensor Gauss-Hermite quadrature."""
    if D < 2:
        raise ValueError("basis degree must be at least 2")
    n, m = weight.n, embedding.m
    if embedding.n != n:
        raise ValueError("weight and embedding dimensions differ")
    q = quad_order or D + 20
    phi1_p = weight.rescaled_phi1(p)
    if not weight.flat:
        x, _ = gauss_hermite_1d(q)
        weight.check_positive(np.abs(x).max() * sqrt(2) / sqrt(p))

    def extra_X(pts):
        pts = np.atleast_2d(pts)
        return np.zeros(len(pts)) if phi1_p.is_zero() else poly_eval_many(phi1_p, pts).real

    exps = graded_exponents(n, D)
    G = _weighted_gram(n, exps, D, q, extra_X)
    L, cond = _cholesky_scaled(G, "ambient")

    D_Y = D * embedding.degree
    yexps = graded_exponents(m, D_Y)

    def extra_Y(om):
        om = np.atleast_2d(om)
        pts = np.concatenate([om, embedding.graph_rescaled(om, p)], axis=1)
        return pi * np.sum(np.abs(pts[:, m:]) ** 2, axis=1) + extra_X(pts)

    # the graph pulls the weight back to a non-Gaussian one; the 1-d rule is cheap
    qY = max(2 * q, D_Y + 40)
    GY = _weighted_gram(m, yexps, D_Y, qY, extra_Y) if m else np.ones((1, 1), complex) * np.exp(-extra_X(np.zeros((1, n))))[0]
    LY, condY = _cholesky_scaled(GY, "submanifold")
    C = _compose_graph(embedding, p, exps, D, yexps, D_Y)
    M = LY.conj().T @ C @ solve_triangular(L.conj().T, np.eye(len(exps)), lower=False)
    s = np.linalg.svd(M, compute_uv=False)
    n_g = sum(1 for e in yexps if sum(e) <= D)
    index = {e: i for i, e in enumerate(exps)}
    lift = np.zeros((len(exps), n_g))
    for j, e in enumerate(yexps[:n_g]):
        lift[index[tuple(e) + (0,) * (n - m)], j] = 1.0
    return DiscreteModel(p=p, D=D, quad_order=q, weight=weight, embedding=embedding, exps=exps,
                         yexps=yexps, D_Y=D_Y, gram=G, chol=L, cond=cond, gram_Y=GY, chol_Y=LY,
                         cond_Y=condY, constraint=C, restriction=M, n_g=n_g,
                         kernel_basis=_kernel_basis(embedding, p, exps, D), lift=lift,
                         singular_values=s, phi1_p=phi1_p)


def _kernel_basis(emb: EmbeddingSpec, p: float, exps, D: int) -> np.ndarray:
    """Normalised coefficients of a basis of ker(Res) on polynomials of degree <= D.

    For a point (m = 0) these are the monomials of positive degree. For a
    hypersurface graph zeta_N = F(zeta_Y) of degree d they are
    zeta^b (zeta_N - F(zeta_Y)) with |b| <= D - d: division by the monic
    generator, with the top form of the generator ruling out degree drops.
    """
    n, m = emb.n, emb.m
    index = {e: i for i, e in enumerate(exps)}
    if m == 0:
        return np.eye(len(exps))[:, 1:].astype(complex)
    if n - m != 1:
        raise NotImplementedError("the lab supports hypersurfaces or points")
    s = _norm_factors(D)
    norm = lambda e: np.prod([s[x] for x in e])
    gen = {(0,) * m + (1,): 1.0}
    for e, c in emb.f[0].items():
        key = tuple(e) + (0,)
        gen[key] = gen.get(key, 0) - c * p ** ((1 - sum(e)) / 2)
    d = emb.degree
    cols = []
    for b in exps:
        if sum(b) > D - d:
            continue
        col = np.zeros(len(exps), complex)
        for e, c in gen.items():
            a = tuple(x + y for x, y in zip(b, e))
            col[index[a]] += c / norm(a)
        cols.append(col)
    return np.array(cols).T.reshape(len(exps), len(cols))


# ---------------------------------------------------------------------------
# operations

def orthogonal_projector_kernel(model: DiscreteModel, Z, Zp, which: str = "perp") -> np.ndarray:
    """p^-n B_p(Z, Z') in rescaled coordinates and the unit frame (elementwise over point rows)."""
    return model.kernel(which, np.atleast_2d(Z), np.atleast_2d(Zp))


def extend_minimal_norm(model: DiscreteModel, g: np.ndarray) -> np.ndarray:
    """Orthonormal-coordinate coefficients of the minimal-norm extension of g,
    g given in the orthonormal Y basis (first n_g directions)."""
    g = np.asarray(g, complex)
    if g.shape[0] > model.n_g:
        raise ValueError("g must lie in the degree <= D part of the Y basis")
    return model.extension_matrix[:, :g.shape[0]] @ g


def restrict(model: DiscreteModel, u: np.ndarray) -> np.ndarray:
    return model.restriction @ u


def operator_norms(model: DiscreteModel, linf_samples: int = 50, seed: int = 0,
                   grid: int = 41, fiber_grid: int = 7, box: float | None = None,
                   g_degree: int | None = None) -> dict:
    """res_norm, ext_norm (original coordinates) and the sup-norm ratio of E_p."""
    nm = model.n - model.m
    s = model.singular_values
    res_norm = model.p ** (nm / 2) * s[0]
    ext_norm = model.p ** (-nm / 2) * np.linalg.norm(model.extension_matrix, 2)
    return {"res_norm": float(res_norm), "ext_norm": float(ext_norm),
            "linf_ratio": linf_ratio(model, linf_samples, seed, grid, fiber_grid, box, g_degree)}


def linf_ratio(model: DiscreteModel, samples: int = 50, seed: int = 0, grid: int = 41,
               fiber_grid: int = 7, box: float | None = None, g_degree: int | None = None) -> float:
    """max over random g of sup|E g| / sup|g| (unit frame) on sample grids.

    g are random combinations of orthonormal Y functions of degree <= g_degree.
    The ambient grid is omega-grid x normal offsets around the graph.
    """
    rng = np.random.default_rng(seed)
    m = model.m
    g_degree = max(2, model.D // 3) if g_degree is None else g_degree
    ng = sum(1 for e in model.yexps if sum(e) <= g_degree)
    box = sqrt((g_degree + 4) / pi) + 1.0 if box is None else box
    ax = np.linspace(-box, box, grid)
    if m:
        om = (ax[:, None] + 1j * ax[None, :]).ravel()[:, None]
    else:
        om = np.zeros((1, 0), complex)
    fax = np.linspace(-1.2, 1.2, fiber_grid)
    fib = (fax[:, None] + 1j * fax[None, :]).ravel()
    ypts = model.y_points(om)
    nn = model.n - m
    offsets = np.array(list(itertools.product(fib, repeat=nn)))
    X = (ypts[:, None, :] + np.concatenate([np.zeros((len(offsets), m)), offsets], axis=1)[None, :, :]).reshape(-1, model.n)
    PhiX = model.orthonormal_functions(X) * model.frame_weight(X)[:, None]
    Yf = model.y_functions(om)[:, :ng] * model.frame_weight(ypts)[:, None]
    E = model.extension_matrix[:, :ng]
    worst = 0.0
    for _ in range(samples):
        g = rng.standard_normal(ng) + 1j * rng.standard_normal(ng)
        gy = np.abs(Yf @ g).max()
        ex = np.abs(PhiX @ (E @ g)).max()
        worst = max(worst, ex / gy)
    return float(worst)


# Fermi coordinates and frame phase ---------------------------------------------

def fermi_map(model: DiscreteModel, Z: np.ndarray) -> np.ndarray:
    """Second-order Fermi chart in rescaled coordinates:
    (Z_Y, Z_N) -> (Z_Y - df^H Z_N, sqrt(p) f(Z_Y / sqrt(p)) + Z_N)."""
    Z = np.atleast_2d(np.asarray(Z, complex))
    m, p = model.m, model.p
    ZY, ZN = Z[:, :m], Z[:, m:]
    emb = model.embedding
    J = emb.jacobian_rescaled(ZY, p)     # df at Z_Y / sqrt(p)
    JH = np.conj(np.transpose(J, (0, 2, 1)))
    zy = ZY - np.einsum("kij,kj->ki", JH, ZN)
    zn = emb.graph_rescaled(ZY, p) + ZN
    return np.concatenate([zy, zn], axis=1)


def _dPhi(model: DiscreteModel, zeta: np.ndarray) -> np.ndarray:
    """d Phi_p / d zeta_j at points, shape (N, n)."""
    out = pi * np.conj(zeta)
    if not model.phi1_p.is_zero():
        for j in range(model.n):
            d = model.phi1_p.derivative("z", j)
            if not d.is_zero():
                out[:, j] += poly_eval_many(d, zeta)
    return out


def frame_phase(model: DiscreteModel, Z: np.ndarray, nodes: int = 16) -> np.ndarray:
    """Phase theta of the parallel unit frame along s -> psi(s Z_Y, 0), then s -> psi(Z_Y, s Z_N):
    theta = int Im(sum_j dPhi/dzeta_j gamma_j') ds."""
    Z = np.atleast_2d(np.asarray(Z, complex))
    m = model.m
    s, w = np.polynomial.legendre.leggauss(nodes)
    s, w = 0.5 * (s + 1), 0.5 * w
    h = 1e-6
    theta = np.zeros(len(Z))
    for leg in (0, 1):
        for sk, wk in zip(s, w):
            def path(t):
                W = Z.copy()
                if leg == 0:
                    W[:, :m] *= t
                    W[:, m:] = 0
                else:
                    W[:, m:] *= t
                return fermi_map(model, W)
            g = path(sk)
            dg = (path(sk + h) - path(sk - h)) / (2 * h)
            theta += wk * np.imag(np.sum(_dPhi(model, g) * dg, axis=1))
    return theta


def lab_kernel_in_fermi(model: DiscreteModel, Z: np.ndarray, Zp: np.ndarray, which: str = "perp") -> np.ndarray:
    """p^-n B(psi(Z/sqrt p), psi(Z'/sqrt p)) in the parallel unit frame."""
    x, y = fermi_map(model, Z), fermi_map(model, Zp)
    K = model.kernel(which, x, y)
    return K * np.exp(-1j * (frame_phase(model, Z) - frame_phase(model, Zp)))


def lab_extension_kernel_in_fermi(model: DiscreteModel, Z: np.ndarray, ZYp: np.ndarray) -> np.ndarray:
    """p^-m E_p(psi(Z/sqrt p), psi(Z'_Y/sqrt p, 0)) in the parallel unit frames."""
    Z = np.atleast_2d(np.asarray(Z, complex))
    ZYp = _rows(ZYp, model.m)
    Zp = np.concatenate([ZYp, np.zeros((len(ZYp), model.n - model.m))], axis=1)
    K = model.extension_kernel(fermi_map(model, Z), ZYp)
    return K * np.exp(-1j * (frame_phase(model, Z) - frame_phase(model, Zp)))


def model_series_value(series, Z: np.ndarray, Zp: np.ndarray, p: float, order: int) -> np.ndarray:
    """sum_{r <= order} p^(-r/2) F_r(Z, Z') times the family's Gaussian."""
    fam = series.family
    Z, Zp = np.atleast_2d(Z), np.atleast_2d(Zp)
    poly = np.zeros(len(Z), complex)
    for r in range(order + 1):
        poly += p ** (-r / 2) * poly_eval_many(series[r], Z, Zp)
    gauss = np.array([eval_model_kernel(fam, a, b) for a, b in zip(Z, Zp)])
    return poly * gauss


def sample_ball(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    """Uniform samples in the complex ball of C^dim."""
    x = rng.standard_normal((count, 2 * dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    r = radius * rng.uniform(0, 1, count) ** (1 / (2 * dim))
    x *= r[:, None]
    return x[:, :dim] + 1j * x[:, dim:]


def rescaled_compare(model: DiscreteModel, series, radius: float = 1.0, samples: int = 200,
                     seed: int = 0, orders: Sequence[int] = (0, 1)) -> dict:
    """sup over sampled |Z|, |Z'| <= radius of |lab kernel - truncated series| for each order."""
    rng = np.random.default_rng(seed)
    n = model.n
    Z = sample_ball(rng, samples, n, radius)
    if series.family.tag == "E":
        Zp = sample_ball(rng, samples, model.m, radius)
        lab = lab_extension_kernel_in_fermi(model, Z, Zp)
    elif series.family.tag == "P_perp":
        Zp = sample_ball(rng, samples, n, radius)
        lab = lab_kernel_in_fermi(model, Z, Zp)
    else:
        Zp = sample_ball(rng, samples, n, radius)
        lab = lab_kernel_in_fermi(model, Z, Zp, which="full")
    out = {}
    for r in orders:
        if r <= series.order:
            out[r] = float(np.abs(lab - model_series_value(series, Z, Zp, model.p, r)).max())
    return out


# decay -----------------------------------------------------------------------

def distance_to_graph(model: DiscreteModel, zeta: np.ndarray) -> np.ndarray:
    """Euclidean distance (rescaled chart) from points to Y_p."""
    zeta = np.atleast_2d(np.asarray(zeta, complex))
    m = model.m
    if model.embedding.flat:
        return np.linalg.norm(zeta[:, m:], axis=1)
    out = np.empty(len(zeta))
    for k, x in enumerate(zeta):
        def obj(v):
            om = (v[:m] + 1j * v[m:])[None, :]
            return np.sum(np.abs(model.y_points(om)[0] - x) ** 2)
        v0 = np.concatenate([x[:m].real, x[:m].imag])
        out[k] = sqrt(minimize(obj, v0, method="BFGS", options={"gtol": 1e-12}).fun) if m else np.linalg.norm(x)
    return out


def decay_fit(model: DiscreteModel, base: np.ndarray, ray: np.ndarray, radii: Sequence[float],
              which: str = "perp", floor: float = 1e-14) -> dict:
    """Least-squares fit of -log|K(x, x0)| = c * dsum + b, with dsum = |x - x0| + d(x, Y) + d(x0, Y).

    All in rescaled coordinates, where |K| is p^-n |B_p| and dsum is sqrt(p) times
    the original distances. Samples with |K| below floor are dropped.
    """
    base = np.asarray(base, complex).reshape(1, -1)
    ray = np.asarray(ray, complex).reshape(1, -1)
    ray = ray / np.linalg.norm(ray)
    X = base + np.asarray(radii)[:, None] * ray
    K = np.abs(model.kernel(which, X, np.repeat(base, len(X), axis=0)))
    dsum = np.linalg.norm(X - base, axis=1) + distance_to_graph(model, X) + distance_to_graph(model, base)[0]
    keep = K > floor
    y = -np.log(K[keep])
    x = dsum[keep]
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return {"c": float(coef[0]), "intercept": float(coef[1]),
            "residual": float(np.sqrt(np.mean(resid ** 2))), "dropped": int((~keep).sum()),
            "kernel": K, "dsum": dsum}


# consistency checks -------------------------------------------------------------

def projector_checks(model: DiscreteModel, competitors: int = 100, seed: int = 0) -> dict:
    """Largest deviations in the projector algebra, extension exactness and minimality.

    Projectors are compared as operators on monomial coefficients, where
    Hermitian means G P = P^H G for the Gram matrix G.
    """
    rng = np.random.default_rng(seed)
    G = model.gram
    P0, Pp, PX = (model.coefficient_projector(w) for w in ("zero", "perp", "full"))
    scale = np.abs(G).max()
    out = {
        "sum": float(np.abs(P0 + Pp - PX).max()),
        "idempotent": float(max(np.abs(P @ P - P).max() for P in (P0, Pp, PX))),
        "hermitian": float(max(np.abs(G @ P - P.conj().T @ G).max() for P in (P0, Pp, PX)) / scale),
    }
    E = model.extension_matrix
    k = model.n_g
    out["extension_exact"] = float(np.abs(model.restriction @ E - np.eye(model.restriction.shape[0])[:, :k]).max())
    worst_gap, worst_res = 0.0, 0.0
    for _ in range(competitors):
        g = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        u = E @ g
        noise = rng.standard_normal(len(u)) + 1j * rng.standard_normal(len(u))
        f = u + model.zero_projector @ noise
        worst_res = max(worst_res, float(np.abs(model.restriction @ (f - u)).max()))
        worst_gap = max(worst_gap, float(np.linalg.norm(u) - np.linalg.norm(f)))
    out["minimality"] = max(worst_gap, 0.0)
    out["competitor_restriction"] = worst_res
    return out


def quadrature_stability(p: float, D: int, weight: WeightSpec, embedding: EmbeddingSpec,
                         quad_order: int | None = None, factor: int = 2) -> float:
    """Largest change of any (normalised) Gram entry when the quadrature order is multiplied."""
    q = quad_order or D + 20
    a = build_discrete_model(p, D, weight, embedding, q)
    b = build_discrete_model(p, D, weight, embedding, factor * q)
    return float(max(np.abs(a.gram - b.gram).max(), np.abs(a.gram_Y - b.gram_Y).max()))


def local_sup_kappa(model: DiscreteModel, radius: float | None = None, grid: int = 41) -> float:
    """sup of kappa_N over the chart disc |w| <= radius of Y (original coordinates).

    The default radius sqrt(D / (pi p)) is the part of Y resolved by the basis.
    """
    if model.m == 0:
        return float(model.kappa_N(np.zeros((1, 0)))[0])
    radius = sqrt(model.D / (pi * model.p)) if radius is None else radius
    ax = np.linspace(-radius, radius, grid)
    pts = (ax[:, None] + 1j * ax[None, :]).ravel()
    pts = pts[np.abs(pts) <= radius]
    if model.m == 1:
        w = pts[:, None]
    else:
        w = np.array(list(itertools.product(pts, repeat=model.m)))
        w = w[np.linalg.norm(w, axis=1) <= radius]
    return float(model.kappa_N(w).max())
