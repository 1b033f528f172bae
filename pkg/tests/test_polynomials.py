import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fockext.polynomials import (PolyKernel, ShapeError, VarSpec, poly_adjoint, poly_eval,
                                 poly_mul, poly_parity_degree, random_poly)

V2 = VarSpec(2, 2, 2)


def var(g, i, v=V2):
    return PolyKernel.variable(v, g, i)


seeds = st.integers(0, 2**32 - 1)


def rand(seed, v=V2, degree=3, nterms=6):
    return random_poly(np.random.default_rng(seed), v, degree, nterms)


class TestVarSpec:
    def test_rejects_bad_dims(self):
        with pytest.raises(ShapeError):
            VarSpec(2, 3, 2)
        with pytest.raises(ShapeError):
            VarSpec(2, 1, 3)

    def test_split_join_roundtrip(self):
        k = V2.join((1, 0), (0, 2), (3, 0), (0, 1))
        assert V2.split(k) == ((1, 0), (0, 2), (3, 0), (0, 1))


class TestMul:
    def test_monomial_product(self):
        got = var("z", 0) * var("zbp", 0)
        assert got == PolyKernel.monomial(V2, ez=(1, 0), ezbp=(1, 0))

    def test_difference_of_squares(self):
        one = PolyKernel.constant(V2, 1)
        assert (one + var("z", 0)) * (one - var("z", 0)) == one - var("z", 0) ** 2

    def test_matches_brute_force_convolution(self):
        a, b = rand(11), rand(12)
        want = {}
        for ka, ca in a.items():
            for kb, cb in b.items():
                k = tuple(x + y for x, y in zip(ka, kb))
                want[k] = want.get(k, 0) + ca[0, 0] * cb[0, 0]
        got = poly_mul(a, b)
        assert got.allclose(PolyKernel(V2, want))
        assert got.degree() <= a.degree() + b.degree()

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            poly_mul(var("z", 0), PolyKernel.variable(VarSpec(1, 1, 1), "z", 0))
        with pytest.raises(ShapeError):
            poly_mul(PolyKernel.constant(V2, 1, rank=2), PolyKernel.constant(V2, 1))

    @settings(max_examples=40, deadline=None)
    @given(seeds, seeds, seeds)
    def test_ring_axioms(self, s1, s2, s3):
        a, b, c = rand(s1, degree=2), rand(s2, degree=2), rand(s3, degree=2)
        assert ((a * b) * c).allclose(a * (b * c))
        assert (a * (b + c)).allclose(a * b + a * c)
        assert ((a + b) * c).allclose(a * c + b * c)

    @settings(max_examples=40, deadline=None)
    @given(seeds, seeds)
    def test_canonical_form(self, s1, s2):
        a, b = rand(s1), rand(s2)
        for r in (a * b, a + b, a - a, a - b):
            assert all(np.any(c != 0) for _, c in r.items())
        assert (a - a).is_zero()


class TestAdjoint:
    def test_monomial(self):
        assert poly_adjoint(var("z", 0)) == var("zbp", 0)

    def test_conjugate_and_swap(self):
        a = (var("z", 0) * var("zbp", 1)).scale(1j)
        assert poly_adjoint(a) == (var("z", 1) * var("zbp", 0)).scale(-1j)

    def test_rejects_non_square(self):
        with pytest.raises(ShapeError):
            poly_adjoint(PolyKernel.constant(VarSpec(2, 1, 1), 1))

    @settings(max_examples=40, deadline=None)
    @given(seeds)
    def test_involution(self, s):
        a = rand(s, degree=4)
        assert poly_adjoint(poly_adjoint(a)) == a

    @settings(max_examples=30, deadline=None)
    @given(seeds, seeds)
    def test_anti_homomorphism_matrix_valued(self, s1, s2):
        rng = np.random.default_rng(s1)
        a = random_poly(rng, V2, 2, 4, rank=2)
        b = random_poly(np.random.default_rng(s2), V2, 2, 4, rank=2)
        assert poly_adjoint(a * b).allclose(poly_adjoint(b) * poly_adjoint(a))

    def test_matrix_coefficients_transposed(self):
        c = np.array([[1, 2j], [3, 4]])
        a = PolyKernel(V2, {V2.join((1, 0), (0, 0), (0, 0), (0, 0)): c}, rank=2)
        adj = poly_adjoint(a)
        np.testing.assert_array_equal(adj.coeff(V2.join((0, 0), (0, 0), (0, 0), (1, 0))), c.conj().T)


class TestEval:
    def test_pairing(self):
        v = VarSpec(1, 1, 1)
        assert poly_eval(PolyKernel.variable(v, "z", 0) * PolyKernel.variable(v, "zbp", 0), [1], [2])[0, 0] == 2

    def test_modulus(self):
        v = VarSpec(1, 1, 1)
        p = PolyKernel.variable(v, "z", 0) * PolyKernel.variable(v, "zb", 0)
        assert poly_eval(p, [1 + 1j], [0])[0, 0] == pytest.approx(2)

    def test_matches_naive_sum(self):
        rng = np.random.default_rng(3)
        a = random_poly(rng, V2, 4, 10)
        Z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        Zp = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        vals = np.concatenate([Z, Z.conj(), Zp, Zp.conj()])
        want = sum(c[0, 0] * np.prod(vals ** np.array(k)) for k, c in a.items())
        assert abs(poly_eval(a, Z, Zp)[0, 0] - want) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            poly_eval(var("z", 0), [1, 2, 3], [1, 2])


class TestParityDegree:
    def test_examples(self):
        v = VarSpec(2, 2, 2)
        assert poly_parity_degree(var("z", 0) * var("zbp", 0)) == (2, "even")
        assert poly_parity_degree(var("z", 0) + var("z", 0) * var("z", 1) * var("zbp", 0)) == (3, "odd")
        assert poly_parity_degree(PolyKernel.constant(v, 1) + var("z", 0)) == (1, "mixed")

    def test_zero(self):
        deg, par = poly_parity_degree(PolyKernel.zero(V2))
        assert deg == -np.inf and par == "even"


class TestJson:
    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_bit_exact_roundtrip(self, s):
        a = rand(s, degree=4)
        data = json.loads(json.dumps(a.to_json()))
        b = PolyKernel.from_json(data, V2)
        assert b == a
        for k, c in a.items():
            assert np.array_equal(b.coeff(k), c)

    def test_layout(self):
        a = var("z", 0).scale(2 - 1j)
        (entry,) = a.to_json()
        assert entry["exponents"] == [[1, 0], [0, 0], [0, 0], [0, 0]]
        assert entry["re"] == [[2.0]] and entry["im"] == [[-1.0]]
