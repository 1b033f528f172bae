"""
Sparse polynomials in the four variable groups z, zbar, z', zbar' with
matrix-valued complex coefficients.

Exponents are stored as one flat tuple laid out as
``(e_z | e_zbar | e_z' | e_zbar')``; the group sizes come from the
``VarSpec``. The tangent/normal split (indices < m vs >= m) is only a query.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

GROUPS = ("z", "zb", "zp", "zbp")


class ShapeError(ValueError):
    """Raised on mismatched variable specs, matrix ranks or point sizes."""


@dataclass(frozen=True)
class VarSpec:
    """Dimensions of a kernel polynomial.

    n is the size of the unprimed group, right_dim the size of the primed
    group, m the tangent dimension (indices below m are tangent).
    """

    n: int
    m: int
    right_dim: int

    def __post_init__(self):
        if self.n < 0 or not (0 <= self.m <= self.n):
            raise ShapeError(f"need 0 <= m <= n, got n={self.n}, m={self.m}")
        if self.right_dim not in (self.m, self.n):
            raise ShapeError(f"right_dim must be m or n, got {self.right_dim}")

    @classmethod
    def square(cls, n: int, m: int | None = None) -> "VarSpec":
        return cls(n, n if m is None else m, n)

    @property
    def nvars(self) -> int:
        return 2 * self.n + 2 * self.right_dim

    def group_slice(self, group: str) -> slice:
        n, r = self.n, self.right_dim
        start = {"z": 0, "zb": n, "zp": 2 * n, "zbp": 2 * n + r}[group]
        size = n if group in ("z", "zb") else r
        return slice(start, start + size)

    def index(self, group: str, i: int) -> int:
        sl = self.group_slice(group)
        if not 0 <= i < sl.stop - sl.start:
            raise ShapeError(f"variable {group}[{i}] out of range")
        return sl.start + i

    def split(self, key: Sequence[int]) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(key[self.group_slice(g)]) for g in GROUPS)

    def join(self, ez, ezb, ezp, ezbp) -> tuple[int, ...]:
        parts = (tuple(ez), tuple(ezb), tuple(ezp), tuple(ezbp))
        sizes = (self.n, self.n, self.right_dim, self.right_dim)
        if tuple(len(p) for p in parts) != sizes:
            raise ShapeError(f"exponent tuple lengths {[len(p) for p in parts]} do not match {sizes}")
        return parts[0] + parts[1] + parts[2] + parts[3]


def _as_matrix(c, rank: int) -> np.ndarray:
    a = np.asarray(c, dtype=complex)
    if a.ndim == 0:
        a = a * np.eye(rank, dtype=complex)
    if a.shape != (rank, rank):
        raise ShapeError(f"coefficient shape {a.shape} != ({rank}, {rank})")
    return a


class PolyKernel:
    """Immutable sparse polynomial with (rank x rank) complex coefficients.

    Parameters
    ----------
    vars : VarSpec
    terms : mapping from flat exponent tuple to coefficient (scalar or matrix)
    rank : size of the coefficient matrices
    """

    __slots__ = ("vars", "rank", "_terms")

    def __init__(self, vars: VarSpec, terms: Mapping[tuple, object] | None = None, rank: int = 1):
        self.vars = vars
        self.rank = rank
        clean = {}
        for key, c in (terms or {}).items():
            key = tuple(int(k) for k in key)
            if len(key) != vars.nvars or min(key, default=0) < 0:
                raise ShapeError(f"bad exponent key {key} for {vars}")
            mat = _as_matrix(c, rank)
            if key in clean:
                mat = clean[key] + mat
            clean[key] = mat
        for key in [k for k, v in clean.items() if not v.any()]:
            del clean[key]
        for v in clean.values():
            v.setflags(write=False)
        self._terms = clean

    # constructors

    @classmethod
    def zero(cls, vars: VarSpec, rank: int = 1) -> "PolyKernel":
        return cls(vars, {}, rank)

    @classmethod
    def constant(cls, vars: VarSpec, c=1.0, rank: int = 1) -> "PolyKernel":
        return cls(vars, {(0,) * vars.nvars: c}, rank)

    @classmethod
    def variable(cls, vars: VarSpec, group: str, i: int, rank: int = 1) -> "PolyKernel":
        key = [0] * vars.nvars
        key[vars.index(group, i)] = 1
        return cls(vars, {tuple(key): 1.0}, rank)

    @classmethod
    def monomial(cls, vars: VarSpec, ez=None, ezb=None, ezp=None, ezbp=None, coeff=1.0, rank: int = 1):
        n, r = vars.n, vars.right_dim
        key = vars.join(ez or (0,) * n, ezb or (0,) * n, ezp or (0,) * r, ezbp or (0,) * r)
        return cls(vars, {key: coeff}, rank)

    # container protocol

    @property
    def terms(self) -> Mapping[tuple, np.ndarray]:
        return self._terms

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coeff(self, key) -> np.ndarray:
        return self._terms.get(tuple(key), np.zeros((self.rank, self.rank), complex))

    def scalar_coeff(self, key) -> complex:
        return complex(self.coeff(key)[0, 0])

    def __repr__(self):
        if not self._terms:
            return f"PolyKernel({self.vars}, 0)"
        parts = []
        for key, c in sorted(self._terms.items()):
            val = c[0, 0] if self.rank == 1 else c.tolist()
            parts.append(f"{val}*{self._key_str(key)}")
        return f"PolyKernel({self.vars}, " + " + ".join(parts) + ")"

    def _key_str(self, key) -> str:
        out = []
        for g, exps in zip(GROUPS, self.vars.split(key)):
            for i, e in enumerate(exps):
                if e:
                    out.append(f"{g}{i + 1}" + (f"^{e}" if e > 1 else ""))
        return "*".join(out) or "1"

    # arithmetic

    def _check_compatible(self, other: "PolyKernel"):
        if self.vars != other.vars:
            raise ShapeError(f"variable spec mismatch: {self.vars} vs {other.vars}")
        if self.rank != other.rank:
            raise ShapeError(f"coefficient rank mismatch: {self.rank} vs {other.rank}")

    def _coerce(self, other) -> "PolyKernel":
        if isinstance(other, PolyKernel):
            return other
        return PolyKernel.constant(self.vars, other, self.rank)

    def __add__(self, other):
        other = self._coerce(other)
        self._check_compatible(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out[k] + c if k in out else c
        return PolyKernel(self.vars, out, self.rank)

    __radd__ = __add__

    def __neg__(self):
        return PolyKernel(self.vars, {k: -c for k, c in self._terms.items()}, self.rank)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, s) -> "PolyKernel":
        s = complex(s)
        return PolyKernel(self.vars, {k: s * c for k, c in self._terms.items()}, self.rank)

    def __mul__(self, other):
        if isinstance(other, PolyKernel):
            return poly_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        out = PolyKernel.constant(self.vars, 1.0, self.rank)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, PolyKernel):
            return NotImplemented
        if self.vars != other.vars or self.rank != other.rank:
            return False
        if self._terms.keys() != other._terms.keys():
            return False
        return all(np.array_equal(c, other._terms[k]) for k, c in self._terms.items())

    __hash__ = None

    def max_abs_diff(self, other: "PolyKernel") -> float:
        """Largest coefficient-wise deviation (absolute)."""
        self._check_compatible(other)
        diff = self - other
        return max((float(np.abs(c).max()) for c in diff._terms.values()), default=0.0)

    def allclose(self, other: "PolyKernel", tol: float = 1e-12) -> bool:
        return self.max_abs_diff(other) <= tol

    def chop(self, tol: float = 1e-13) -> "PolyKernel":
        """Drop coefficients whose entries are all below tol."""
        return PolyKernel(self.vars, {k: c for k, c in self._terms.items() if np.abs(c).max() > tol}, self.rank)

    # structure

    def degree(self) -> float:
        return max((sum(k) for k in self._terms), default=float("-inf"))

    def conj_coeffs(self) -> "PolyKernel":
        return PolyKernel(self.vars, {k: c.conj() for k, c in self._terms.items()}, self.rank)

    def map_keys(self, vars: VarSpec, fn) -> "PolyKernel":
        """Re-index every monomial; fn maps old key to new key or None (drop)."""
        out = {}
        for k, c in self._terms.items():
            nk = fn(k)
            if nk is None:
                continue
            out[nk] = out[nk] + c if nk in out else c
        return PolyKernel(vars, out, self.rank)

    def depends_on(self, group: str, i: int) -> bool:
        j = self.vars.index(group, i)
        return any(k[j] for k in self._terms)

    def derivative(self, group: str, i: int) -> "PolyKernel":
        """Partial derivative in one variable, z and zbar treated as independent."""
        j = self.vars.index(group, i)
        out = {}
        for k, c in self._terms.items():
            if k[j]:
                nk = k[:j] + (k[j] - 1,) + k[j + 1:]
                out[nk] = k[j] * c
        return PolyKernel(self.vars, out, self.rank)

    def substitute_zero(self, group: str, indices: Iterable[int]) -> "PolyKernel":
        cols = [self.vars.index(group, i) for i in indices]
        return self.map_keys(self.vars, lambda k: None if any(k[j] for j in cols) else k)

    def evaluate(self, pt_left, pt_right=None) -> np.ndarray:
        return poly_eval(self, pt_left, pt_right)

    # serialization

    def to_json(self) -> list:
        out = []
        for k in sorted(self._terms):
            c = self._terms[k]
            out.append({
                "exponents": [list(e) for e in self.vars.split(k)],
                "re": c.real.tolist(),
                "im": c.imag.tolist(),
            })
        return out

    @classmethod
    def from_json(cls, data: list, vars: VarSpec | None = None, m: int | None = None) -> "PolyKernel":
        if vars is None:
            if not data:
                raise ShapeError("cannot infer variable spec from an empty term list")
            ez, _, ezp, _ = data[0]["exponents"]
            n, r = len(ez), len(ezp)
            vars = VarSpec(n, r if m is None and r < n else (n if m is None else m), r)
        terms = {}
        rank = 1
        for entry in data:
            key = vars.join(*entry["exponents"])
            c = np.asarray(entry["re"], float) + 1j * np.asarray(entry["im"], float)
            rank = c.shape[0]
            terms[key] = c
        return cls(vars, terms, rank)


def poly_mul(a: PolyKernel, b: PolyKernel) -> PolyKernel:
    """Exact product of two kernel polynomials (matrix product of coefficients)."""
    a._check_compatible(b)
    out: dict = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            c = ca @ cb
            out[k] = out[k] + c if k in out else c
    return PolyKernel(a.vars, out, a.rank)


def poly_adjoint(a: PolyKernel) -> PolyKernel:
    """Kernel adjoint K*(Z, Z') = conj(K(Z', Z))^T.

    A monomial z^a zbar^b z'^c zbar'^d goes to z^d zbar^c z'^b zbar'^a.
    """
    v = a.vars
    if v.right_dim != v.n:
        raise ShapeError("adjoint needs a square variable spec (right_dim == n)")
    out = {}
    for k, c in a.items():
        ez, ezb, ezp, ezbp = v.split(k)
        out[v.join(ezbp, ezp, ezb, ez)] = c.conj().T
    return PolyKernel(v, out, a.rank)


def poly_eval(a: PolyKernel, pt_left, pt_right=None) -> np.ndarray:
    """Value of the kernel at (Z, Z'); the conjugate slots get conjugated points."""
    v = a.vars
    zl = np.asarray(pt_left, dtype=complex).reshape(-1)
    zr = np.zeros(v.right_dim, complex) if pt_right is None else np.asarray(pt_right, dtype=complex).reshape(-1)
    if zl.shape[0] != v.n or zr.shape[0] != v.right_dim:
        raise ShapeError(f"point sizes ({zl.shape[0]}, {zr.shape[0]}) do not match {v}")
    vals = np.concatenate([zl, zl.conj(), zr, zr.conj()])
    out = np.zeros((a.rank, a.rank), complex)
    for k, c in a.items():
        out = out + np.prod(vals ** np.asarray(k)) * c
    return out


def poly_eval_many(a: PolyKernel, left: np.ndarray, right: np.ndarray | None = None) -> np.ndarray:
    """Vectorised scalar evaluation (rank 1) at arrays of points, shape (N, n) / (N, right_dim)."""
    v = a.vars
    left = np.atleast_2d(np.asarray(left, complex))
    npts = left.shape[0]
    right = np.zeros((npts, v.right_dim), complex) if right is None else np.atleast_2d(np.asarray(right, complex))
    vals = np.concatenate([left, left.conj(), right, right.conj()], axis=1)
    out = np.zeros(npts, complex)
    for k, c in a.items():
        term = np.full(npts, c[0, 0])
        for j, e in enumerate(k):
            if e:
                term = term * vals[:, j] ** e
        out += term
    return out


def poly_parity_degree(a: PolyKernel) -> tuple[float, str]:
    """(max total degree, parity) with parity in {'even', 'odd', 'mixed'}."""
    if a.is_zero():
        return float("-inf"), "even"
    degs = [sum(k) for k in a]
    parities = {d % 2 for d in degs}
    parity = "mixed" if len(parities) == 2 else ("even" if 0 in parities else "odd")
    return max(degs), parity


def relabel(a: PolyKernel, vars: VarSpec, left_map=None, right_map=None) -> PolyKernel:
    """Move a polynomial into a larger or smaller variable spec.

    left_map / right_map send old indices to new indices; variables whose old
    index is missing from the map must not appear (else the term is dropped
    only if its exponent there is zero, otherwise ShapeError).
    """
    ov = a.vars
    left_map = {i: i for i in range(min(ov.n, vars.n))} if left_map is None else left_map
    right_map = {i: i for i in range(min(ov.right_dim, vars.right_dim))} if right_map is None else right_map

    def move(exps, mapping, size):
        new = [0] * size
        for i, e in enumerate(exps):
            if not e:
                continue
            if i not in mapping:
                raise ShapeError(f"variable index {i} has no target in {vars}")
            new[mapping[i]] += e
        return new

    def fn(k):
        ez, ezb, ezp, ezbp = ov.split(k)
        return vars.join(move(ez, left_map, vars.n), move(ezb, left_map, vars.n),
                         move(ezp, right_map, vars.right_dim), move(ezbp, right_map, vars.right_dim))

    return a.map_keys(vars, fn)


def random_poly(rng: np.random.Generator, vars: VarSpec, degree: int, nterms: int = 6,
                parity: str | None = None, groups: Sequence[str] = GROUPS, rank: int = 1,
                scale: float = 1.0) -> PolyKernel:
    """Random sparse polynomial of total degree <= degree, used by suites and tests."""
    cols = [j for g in groups for j in range(vars.group_slice(g).start, vars.group_slice(g).stop)]
    terms = {}
    for _ in range(nterms):
        d = int(rng.integers(0, degree + 1))
        if parity == "even" and d % 2:
            d -= 1
        if parity == "odd" and d % 2 == 0:
            d = d + 1 if d + 1 <= degree else d - 1
        if d < 0:
            continue
        key = [0] * vars.nvars
        for _ in range(d):
            if not cols:
                break
            key[cols[int(rng.integers(len(cols)))]] += 1
        c = scale * (rng.standard_normal((rank, rank)) + 1j * rng.standard_normal((rank, rank)))
        terms[tuple(key)] = terms.get(tuple(key), 0) + c
    return PolyKernel(vars, terms, rank)
