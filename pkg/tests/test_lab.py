from math import factorial, pi, sqrt

import numpy as np
import pytest

from fockext.expansion import GeometryJet, expand
from fockext.lab import (EmbeddingSpec, SetupError, WeightSpec, build_discrete_model, decay_fit,
                         default_degree, extend_minimal_norm, fermi_map, frame_phase, graded_exponents,
                         local_sup_kappa, operator_norms, orthogonal_projector_kernel, projector_checks,
                         quadrature_stability, rescaled_compare, restrict)

FLAT2 = WeightSpec(2)
QUARTIC = WeightSpec(2, {((1, 1), (1, 1)): 1.0})      # |z1|^2 |z2|^2
PARABOLA = EmbeddingSpec(2, 1, ({(2,): 0.5},))           # z2 = w^2 / 2


@pytest.fixture(scope="module")
def point_model():
    return build_discrete_model(4, 10, WeightSpec(1), EmbeddingSpec(1, 0))


@pytest.fixture(scope="module")
def flat_model():
    return build_discrete_model(4, 20, FLAT2, EmbeddingSpec(2, 1))


@pytest.fixture(scope="module")
def curved_model():
    return build_discrete_model(8, 12, QUARTIC, PARABOLA)


class TestSpecs:
    @pytest.mark.parametrize("terms", [
        {((1, 0), (0, 0)): 1.0, ((0, 0), (1, 0)): 1.0},     # linear
        {((2, 0), (0, 0)): 1.0, ((0, 0), (2, 0)): 1.0},     # pure (2,0)
        {((1, 1), (1, 0)): 1.0},                             # not real
    ])
    def test_weight_rejects(self, terms):
        with pytest.raises(ValueError):
            WeightSpec(2, terms)

    def test_embedding_rejects(self):
        with pytest.raises(ValueError):
            EmbeddingSpec(2, 1, ({(1,): 1.0},))
        with pytest.raises(ValueError):
            EmbeddingSpec(2, 1, ({(5,): 1.0},))
        with pytest.raises(ValueError):
            EmbeddingSpec(2, 2)

    def test_second_fundamental_form(self):
        A = PARABOLA.second_fundamental_form()
        assert A.shape == (1, 1, 1) and A[0, 0, 0] == pytest.approx(1.0)

    def test_graded_order(self):
        assert graded_exponents(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    def test_default_degree(self):
        assert default_degree(4, 0.1) == 10
        assert default_degree(16, 1.0) == int(np.ceil(12 * sqrt(pi) + 6))

    def test_build_errors(self):
        with pytest.raises(ValueError):
            build_discrete_model(4, 1, FLAT2, EmbeddingSpec(2, 1))
        with pytest.raises(ValueError):
            build_discrete_model(4, 4, WeightSpec(1), EmbeddingSpec(2, 1))

    def test_coarse_quadrature_rejected(self):
        with pytest.raises(SetupError):
            build_discrete_model(4, 12, WeightSpec(1), EmbeddingSpec(1, 0), quad_order=3)


class TestGram:
    def test_fock_moments(self):
        p, D = 4, 8
        model = build_discrete_model(p, D, WeightSpec(1), EmbeddingSpec(1, 0))
        G = model.original_gram()
        want = np.array([factorial(a) / (p ** (a + 1) * pi ** a) for a in range(D + 1)])
        assert np.abs(np.diag(G).real / want - 1).max() < 1e-10
        off = G - np.diag(np.diag(G))
        assert (np.abs(off) / np.sqrt(np.outer(want, want))).max() < 1e-10

    def test_flat_restriction_is_selection(self, flat_model):
        C = flat_model.constraint
        for col, a in enumerate(flat_model.exps):
            want = np.zeros(C.shape[0])
            if a[1] == 0:
                want[flat_model.yexps.index((a[0],))] = 1
            assert np.array_equal(C[:, col], want)

    @pytest.mark.parametrize("weight,emb", [(FLAT2, EmbeddingSpec(2, 1)), (QUARTIC, PARABOLA)])
    def test_quadrature_doubling(self, weight, emb):
        assert quadrature_stability(8, 10, weight, emb) <= 1e-12


class TestFlatKernels:
    def test_point_perp_kernel_is_rank_one(self, point_model):
        rng = np.random.default_rng(0)
        Z = rng.standard_normal((20, 1)) + 1j * rng.standard_normal((20, 1))
        Zp = rng.standard_normal((20, 1)) + 1j * rng.standard_normal((20, 1))
        got = orthogonal_projector_kernel(point_model, Z, Zp)
        want = np.exp(-0.5 * pi * (np.abs(Z[:, 0]) ** 2 + np.abs(Zp[:, 0]) ** 2))
        assert np.abs(got - want).max() < 1e-12

    def test_unit_extension(self, point_model):
        u = extend_minimal_norm(point_model, np.array([1.0]))
        assert point_model.norm_sq(u) == pytest.approx(1 / point_model.p, rel=1e-12)
        zeta = np.array([[0.3 + 0.1j], [1.2 - 0.4j]])
        vals = point_model.section_values(u, zeta)
        assert np.abs(vals - np.exp(-0.5 * pi * np.abs(zeta[:, 0]) ** 2)).max() < 1e-12

    def test_flat_norms(self, flat_model):
        norms = operator_norms(flat_model, linf_samples=5)
        p = flat_model.p
        assert abs(norms["res_norm"] / sqrt(p) - 1) < 1e-6
        assert abs(norms["ext_norm"] * sqrt(p) - 1) < 1e-6
        assert norms["res_norm"] * norms["ext_norm"] == pytest.approx(1, abs=1e-6)

    def test_flat_series_exact(self, flat_model):
        perp, ext = expand(GeometryJet(2, 1), 1)
        for series in (perp, ext):
            errs = rescaled_compare(flat_model, series, radius=1.0, samples=60, orders=(0, 1))
            assert max(errs.values()) < 1e-8

    def test_sup_of_unit_extension_on_y(self, flat_model):
        u = extend_minimal_norm(flat_model, np.array([1.0]))
        ax = np.linspace(-2, 2, 21)
        grid = (ax[:, None] + 1j * ax[None, :]).ravel()
        normal = np.concatenate([[0], grid[::7]])
        X = np.stack(np.meshgrid(grid, normal), -1).reshape(-1, 2)
        amb = np.abs(flat_model.section_values(u, X)).max()
        on_y = np.abs(flat_model.y_section_values(np.array([1.0]), grid[:, None])).max()
        assert amb / on_y == pytest.approx(1, abs=1e-12)

    def test_chart_is_identity(self, flat_model):
        Z = np.array([[0.4 - 0.3j, 0.2 + 0.9j]])
        assert np.array_equal(fermi_map(flat_model, Z), Z)
        assert abs(frame_phase(flat_model, Z)[0]) < 1e-9

    def test_flat_decay(self, point_model):
        radii = np.linspace(1.3, 2.6, 14)
        fit = decay_fit(point_model, np.zeros(1), np.ones(1), radii)
        assert fit["dropped"] == 0
        assert np.all(fit["kernel"] <= np.exp(-fit["dsum"]))
        assert fit["c"] > 0


class TestCurved:
    def test_hermitian_kernel(self, curved_model):
        rng = np.random.default_rng(1)
        Z = 0.8 * (rng.standard_normal((15, 2)) + 1j * rng.standard_normal((15, 2)))
        Zp = 0.8 * (rng.standard_normal((15, 2)) + 1j * rng.standard_normal((15, 2)))
        for which in ("perp", "zero", "full"):
            a = curved_model.kernel(which, Z, Zp)
            b = curved_model.kernel(which, Zp, Z)
            assert np.abs(a - b.conj()).max() < 1e-12

    def test_extension_exact_and_idempotent(self, curved_model):
        rng = np.random.default_rng(2)
        g = rng.standard_normal(curved_model.n_g) + 1j * rng.standard_normal(curved_model.n_g)
        u = extend_minimal_norm(curved_model, g)
        r = restrict(curved_model, u)
        assert np.abs(r[:curved_model.n_g] - g).max() < 1e-8
        assert np.abs(r[curved_model.n_g:]).max() < 1e-8
        assert np.abs(extend_minimal_norm(curved_model, r[:curved_model.n_g]) - u).max() < 1e-8

    def test_projector_algebra(self, curved_model):
        checks = projector_checks(curved_model, competitors=100)
        assert max(checks.values()) <= 1e-8

    def test_norm_product(self, curved_model):
        norms = operator_norms(curved_model, linf_samples=3)
        assert norms["res_norm"] * norms["ext_norm"] >= 1 - 1e-10


class TestKappa:
    def test_flat(self, flat_model):
        w = np.array([[0.0], [0.3 + 0.4j]])
        assert np.allclose(flat_model.kappa_N(w), 1)
        assert local_sup_kappa(flat_model) == pytest.approx(1)

    def test_perturbed_weight(self):
        eps = 0.7
        model = build_discrete_model(8, 6, WeightSpec(2, {((1, 1), (1, 1)): eps}), EmbeddingSpec(2, 1))
        w = np.array([[0.5 + 0.2j]])
        want = 1 / (1 + eps * abs(w[0, 0]) ** 2 / pi)
        assert model.kappa_N(w)[0] == pytest.approx(want, rel=1e-12)
        assert local_sup_kappa(model) == pytest.approx(1)

    def test_curved_graph(self):
        model = build_discrete_model(8, 6, FLAT2, PARABOLA)
        w = np.array([[0.5 + 0.2j]])
        assert model.kappa_N(w)[0] == pytest.approx(1 + abs(w[0, 0]) ** 2, rel=1e-12)
