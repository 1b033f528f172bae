"""
Independent reference values frozen into tests/test_calculus.py.

Everything here is plain numpy: the composition integrals are evaluated by
brute-force trapezoid sums (spectrally accurate for Gaussian integrands) and
the package is not imported.
"""

import numpy as np
from scipy import integrate

PI = np.pi


def gauss_moment(a, b):
    f = lambda y, x: ((x + 1j * y) ** a * (x - 1j * y) ** b * np.exp(-PI * (x * x + y * y))).real
    return integrate.dblquad(f, -7, 7, -7, 7, epsabs=1e-13, epsrel=1e-13)[0]


def grid(dim, L, N):
    x = np.linspace(-L, L, N)
    h = x[1] - x[0]
    return x, h ** dim


def kern(Z, U, hol):
    """exp(-pi/2 (|Z|^2 + |U|^2) + pi sum_{hol} z ubar); arrays (..., k)."""
    e = -0.5 * PI * (np.sum(np.abs(Z) ** 2, -1) + np.sum(np.abs(U) ** 2, -1))
    e = e + PI * np.sum(Z[..., :hol] * np.conj(U[..., :hol]), -1)
    return np.exp(e)


def plane(x):
    X, Y = np.meshgrid(x, x, indexing="ij")
    return (X + 1j * Y).ravel()


def core_n1():
    Z, Zp = np.array([0.3 + 0.2j]), np.array([-0.1 + 0.4j])
    x, w = grid(2, 6.0, 321)
    U = plane(x)[:, None]
    a1 = Z[0] * np.conj(U[:, 0]) ** 2
    a2 = U[:, 0] ** 2 * np.conj(Zp[0])
    val = np.sum(a1 * a2 * kern(Z, U, 1) * kern(U, Zp, 1)) * w
    return val / kern(Z, Zp, 1)


def four_dim(left_hol, right_hol, a1f, a2f, Z, Zp, L=5.5, N=45):
    x, w = grid(4, L, N)
    u = plane(x)
    total = 0j
    for u1 in u:
        U = np.stack([np.full_like(u, u1), u], -1)
        total += np.sum(a1f(Z, U) * a2f(U, Zp) * kern(Z, U, left_hol) * kern(U, Zp, right_hol))
    return total * w


def k_n2m1():
    Z = np.array([0.3 + 0.2j, -0.2 + 0.1j])
    Zp = np.array([-0.1 + 0.4j, 0.25 - 0.3j])
    a1 = lambda Z, U: Z[0] * np.conj(U[:, 1]) + np.conj(Z[1])
    a2 = lambda U, Zp: U[:, 1] * np.conj(Zp[0]) + U[:, 0] * np.conj(U[:, 0])
    return four_dim(1, 1, a1, a2, Z, Zp) / kern(Z, Zp, 1)


def kprime_n2m1():
    Z = np.array([0.3 + 0.2j, -0.2 + 0.1j])
    Zp = np.array([-0.1 + 0.4j, 0.25 - 0.3j])
    a1 = lambda Z, U: np.conj(U[:, 0]) * np.conj(U[:, 1]) * Z[1]
    a2 = lambda U, Zp: U[:, 1] * np.conj(Zp[1])
    return four_dim(2, 1, a1, a2, Z, Zp) / kern(Z, Zp, 1)


def kdoubleprime_n2m1(L=4.2, N=25):
    """(A1 P_perp) o E o (A2 P_m) over E(Z, Z'_Y); n = 2, m = 1."""
    Z = np.array([0.3 + 0.2j, -0.2 + 0.1j])
    ZpY = np.array([-0.1 + 0.4j])
    x, w4 = grid(4, L, N)
    _, w2 = grid(2, L, N)
    u = plane(x)
    W = u[:, None]
    a2 = W[:, 0] * np.conj(W[:, 0])
    pm = kern(W, ZpY, 1)
    total = 0j
    for u1 in u:
        U = np.stack([np.full_like(u, u1), u], -1)
        a1 = Z[1] * np.conj(U[:, 0]) + np.conj(U[:, 1]) ** 2
        left = a1 * kern(Z, U, 1)
        # E(U, W) = exp(-pi/2(|U_Y|^2 + |W|^2) + pi u_Y wbar - pi/2 |U_N|^2)
        E = np.exp(-0.5 * PI * (np.abs(U[:, :1]) ** 2 + np.abs(U[:, 1:]) ** 2).sum(-1)[:, None]
                   - 0.5 * PI * np.abs(W[:, 0])[None, :] ** 2
                   + PI * U[:, :1] * np.conj(W[:, 0])[None, :])
        total += np.sum(left[:, None] * E * (a2 * pm)[None, :])
    val = total * w4 * w2
    ez = np.exp(-0.5 * PI * (abs(Z[0]) ** 2 + abs(ZpY[0]) ** 2) + PI * Z[0] * np.conj(ZpY[0])
                - 0.5 * PI * abs(Z[1]) ** 2)
    return val / ez


if __name__ == "__main__":
    print("moment |z|^2", repr(gauss_moment(1, 1)))
    print("moment |z|^4", repr(gauss_moment(2, 2)))
    print("moment z zbar^0", repr(gauss_moment(1, 0)))
    print("core n=1", repr(complex(core_n1())))
    print("K n=2 m=1", repr(complex(k_n2m1())))
    print("K' n=2 m=1", repr(complex(kprime_n2m1())))
    print("K'' n=2 m=1", repr(complex(kdoubleprime_n2m1())))
