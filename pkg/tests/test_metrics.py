import numpy as np
import pytest

from topkcca.core import SparsityPair, WeightVector, standardize
from topkcca.metrics import (
    CCAModel,
    SplitSpec,
    adjusted_cpev,
    canonical_correlation,
    cpev,
    cross_component_correlation,
    deflate,
    out_of_sample_components,
    out_of_sample_correlation,
)
from topkcca.simulate import PlantedComponent, SimulationDesign, generate
from topkcca.solver import CanonicalComponent, SolverConfig, fit


def _centered(rng, n, m):
    x = rng.standard_normal((n, m))
    return x - x.mean(axis=0)


def _fake_model(gammas, zetas, cpev1, cpev2):
    """Model with hand-built latents; only the fields the diagnostics read."""
    comps = []
    for g, z in zip(gammas, zetas):
        comps.append(CanonicalComponent(
            alpha=WeightVector.from_weights(np.array([1.0])),
            beta=WeightVector.from_weights(np.array([1.0])),
            gamma=g, zeta=z, gamma_scale=1.0, zeta_scale=1.0,
            rho_in=0.5, iterations=1, converged=True, sparsity=SparsityPair(1, 1),
        ))
    def corr_of(latents):
        k = len(latents)
        out = np.eye(k)
        for i in range(k):
            for j in range(i + 1, k):
                a = latents[i] - latents[i].mean()
                b = latents[j] - latents[j].mean()
                out[i, j] = out[j, i] = (a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
        return out
    corr_g, corr_z = corr_of(gammas), corr_of(zetas)
    k = len(comps)
    return CCAModel(
        components=tuple(comps),
        cpev_x1=tuple(cpev1), cpev_x2=tuple(cpev2),
        adj_cpev_x1=tuple(cpev1[i] * np.prod([1 - abs(corr_g[j, i]) for j in range(i)]) for i in range(k)),
        adj_cpev_x2=tuple(cpev2[i] * np.prod([1 - abs(corr_z[j, i]) for j in range(i)]) for i in range(k)),
        latent_gamma_correlations=corr_g,
        latent_zeta_correlations=corr_z,
        deflation_trail=(),
        requested_components=k,
    )


class TestCanonicalCorrelation:
    def test_identical_latents(self):
        rng = np.random.default_rng(0)
        x1 = _centered(rng, 10, 3)
        alpha = np.array([1.0, -2.0, 0.5])
        proj = x1 @ alpha
        x2 = proj[:, None]  # single column equal to the x1 projection
        assert abs(canonical_correlation(alpha, np.array([1.0]), x1, x2) - 1.0) < 1e-12

    def test_orthogonal_latents(self):
        rng = np.random.default_rng(1)
        x1 = _centered(rng, 12, 3)
        alpha = np.array([0.3, 1.0, -0.7])
        ga = x1 @ alpha
        other = _centered(rng, 12, 1)[:, 0]
        zb = other - (other @ ga) / (ga @ ga) * ga  # orthogonalized
        assert abs(canonical_correlation(alpha, np.array([1.0]), x1, zb[:, None])) < 1e-12

    def test_hand_matrices_match_pearson(self):
        x1 = np.array([[1.0, 2, 0], [3, 5, 1], [2, 1, 4], [0, 2, 2], [4, 0, 1], [2, 2, 1]])
        x2 = np.array([[2.0, 1], [4, 3], [1, 5], [1, 2], [3, 0], [2, 2]])
        x1c = x1 - x1.mean(axis=0)
        x2c = x2 - x2.mean(axis=0)
        a = np.array([1.0, -0.5, 0.25])
        b = np.array([0.75, 1.0])
        # independent oracle: direct Pearson correlation of the projections
        assert abs(canonical_correlation(a, b, x1c, x2c) - 0.010688682627033286) < 1e-12

    def test_weight_vector_inputs_and_scale_invariance(self):
        rng = np.random.default_rng(2)
        x1 = _centered(rng, 15, 4)
        x2 = _centered(rng, 15, 3)
        a = WeightVector.from_weights(np.array([1.0, 0.0, -1.0, 2.0]))
        b = WeightVector.from_weights(np.array([0.5, 1.0, 0.0]))
        r = canonical_correlation(a, b, x1, x2)
        assert -1.0 <= r <= 1.0
        r_scaled = canonical_correlation(a.weights * 7.0, b.weights * 0.01, x1, x2)
        assert abs(r - r_scaled) < 1e-12

    def test_zero_projection_errors(self):
        rng = np.random.default_rng(3)
        x1 = _centered(rng, 8, 2)
        with pytest.raises(ValueError, match="zero norm"):
            canonical_correlation(np.zeros(2), np.ones(2), x1, x1)


class TestDeflate:
    def test_orthogonal_gamma_leaves_matrix(self):
        rng = np.random.default_rng(4)
        x = _centered(rng, 10, 3)
        v = rng.standard_normal(10)
        # remove every column's part from v, leaving a direction orthogonal to X
        for j in range(3):
            col = x[:, j]
            v = v - (v @ col) / (col @ col) * col
        q, _ = np.linalg.qr(x)
        v = v - q @ (q.T @ v)
        v /= np.linalg.norm(v)
        np.testing.assert_allclose(deflate(x, v), x, atol=1e-12)

    def test_column_equal_to_gamma_zeroed(self):
        rng = np.random.default_rng(5)
        g = rng.standard_normal(9)
        g /= np.linalg.norm(g)
        out = deflate(g[:, None], g)
        np.testing.assert_allclose(out, 0.0, atol=1e-12)

    def test_projector_annihilates_gamma(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((8, 3))
        g = rng.standard_normal(8)
        g /= np.linalg.norm(g)
        out = deflate(x, g)
        assert np.abs(g @ out).max() < 1e-10

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((12, 5))
        g = rng.standard_normal(12)
        g /= np.linalg.norm(g)
        once = deflate(x, g)
        np.testing.assert_allclose(deflate(once, g), once, atol=1e-12)

    def test_zero_gamma_errors(self):
        with pytest.raises(ValueError, match="zero latent"):
            deflate(np.ones((4, 2)), np.zeros(4))

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="row count"):
            deflate(np.ones((4, 2)), np.ones(5))


class TestCpev:
    def test_empty_errors(self):
        with pytest.raises(ValueError, match="at least one"):
            cpev([], np.ones((3, 2)))

    def test_rank_one_full_capture(self):
        u = np.array([1.0, -2.0, 0.5, 3.0])
        v = np.array([2.0, 1.0, -1.0])
        x = np.outer(u, v)
        gamma = u * np.linalg.norm(v)  # matching scale: |gamma|^2 = tr(X'X)
        assert abs(cpev([gamma], x) - 1.0) < 1e-12

    def test_matches_entrywise_brute_force(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((7, 4))
        gammas = [rng.standard_normal(7) for _ in range(2)]
        denom = sum(x[i, j] ** 2 for i in range(7) for j in range(4))
        num = sum(g[i] ** 2 for g in gammas for i in range(7))
        assert abs(cpev(gammas, x) - num / denom) < 1e-12


class TestAdjustedCpev:
    def test_uncorrelated_latents_equal_plain(self):
        rng = np.random.default_rng(30)
        x = rng.standard_normal((12, 2))
        q, _ = np.linalg.qr(x - x.mean(axis=0))  # centered and orthogonal
        g1, g2 = q[:, 0], q[:, 1]
        model = _fake_model([g1, g2], [g1, g2], (0.2, 0.35), (0.1, 0.3))
        assert abs(adjusted_cpev(model, 2) - 0.35) < 1e-10

    def test_perfectly_correlated_gives_zero(self):
        rng = np.random.default_rng(9)
        g = rng.standard_normal(10)
        model = _fake_model([g, g.copy()], [g, g.copy()], (0.2, 0.4), (0.2, 0.4))
        assert adjusted_cpev(model, 2) == pytest.approx(0.0, abs=1e-12)

    def test_hand_set_correlations(self):
        # cor(g1,g3)=0.5, cor(g2,g3)=0.2 -> factor 0.5*0.8=0.4
        n = 20
        basis = np.linalg.qr(np.random.default_rng(10).standard_normal((n, 3)))[0]
        center = basis - basis.mean(axis=0)
        q, _ = np.linalg.qr(center)
        e1, e2, e3 = q[:, 0], q[:, 1], q[:, 2]
        g3 = 0.5 * e1 + 0.2 * e2 + np.sqrt(1 - 0.25 - 0.04) * e3
        # force exact zero means so dot products equal Pearson correlations
        for v in (e1, e2, g3):
            v -= v.mean()
        e1 /= np.linalg.norm(e1)
        e2 /= np.linalg.norm(e2)
        g3 /= np.linalg.norm(g3)
        model = _fake_model([e1, e2, g3], [e1, e2, g3], (0.1, 0.2, 0.5), (0.1, 0.2, 0.5))
        expected_factor = (1 - abs(model.latent_gamma_correlations[0, 2])) * (
            1 - abs(model.latent_gamma_correlations[1, 2]))
        assert adjusted_cpev(model, 3) == pytest.approx(0.5 * expected_factor, rel=1e-12)
        assert 0.3 < expected_factor < 0.5  # near the planned 0.4

    def test_k1_returns_plain_and_bounds(self):
        rng = np.random.default_rng(11)
        g = rng.standard_normal(8)
        model = _fake_model([g], [g], (0.3,), (0.2,))
        assert adjusted_cpev(model, 1) == 0.3
        assert adjusted_cpev(model, 1, side="x2") == 0.2
        with pytest.raises(ValueError):
            adjusted_cpev(model, 2)
        with pytest.raises(ValueError):
            adjusted_cpev(model, 1, side="y")


class TestCrossComponentCorrelation:
    def test_single_component(self):
        rng = np.random.default_rng(12)
        g = rng.standard_normal(9)
        model = _fake_model([g], [g], (0.1,), (0.1,))
        cg, cz = cross_component_correlation(model)
        np.testing.assert_array_equal(cg, [[1.0]])
        np.testing.assert_array_equal(cz, [[1.0]])

    def test_duplicated_latents(self):
        rng = np.random.default_rng(13)
        g = rng.standard_normal(9)
        model = _fake_model([g, g.copy()], [g, g.copy()], (0.1, 0.2), (0.1, 0.2))
        cg, _ = cross_component_correlation(model)
        assert cg[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_fitted_model_orthogonal_latents(self):
        rng = np.random.default_rng(14)
        x1 = standardize(rng.standard_normal((40, 12)))
        x2 = standardize(rng.standard_normal((40, 10)))
        model = fit(x1, x2, 3, SparsityPair(6, 5), SolverConfig(seed=3))
        cg, cz = cross_component_correlation(model)
        assert np.abs(cg - np.eye(3)).max() < 0.1
        assert np.abs(cz - np.eye(3)).max() < 0.1


class TestSplitSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            SplitSpec(holdout_fraction=0.0)
        with pytest.raises(ValueError):
            SplitSpec(holdout_fraction=1.0)
        with pytest.raises(ValueError):
            SplitSpec(repeats=0)

    def test_sizes(self):
        assert SplitSpec(holdout_fraction=0.2).sizes_for(100) == (80, 20)
        with pytest.raises(ValueError, match="too small"):
            SplitSpec(holdout_fraction=0.1).sizes_for(20)  # 2-row holdout


class TestOutOfSample:
    def test_planted_rank_one_high(self):
        design = SimulationDesign(
            n=90, p=15, q=12,
            components=(PlantedComponent(tuple(range(15)), tuple(range(12)), "constant", 10.0),),
            noise_sd=0.5, seed=21,
        )
        x1r, x2r, _ = generate(design)
        res = out_of_sample_correlation(
            standardize(x1r).values, standardize(x2r).values,
            SparsityPair(15, 12), SolverConfig(seed=1), SplitSpec(repeats=6, seed=5),
        )
        assert res.mean > 0.9
        assert len(res.per_repeat) == 6
        assert all(-1.0 <= v <= 1.0 for v in res.per_repeat)

    def test_independent_noise_near_zero(self):
        rng = np.random.default_rng(22)
        x1 = standardize(rng.standard_normal((100, 30)))
        x2 = standardize(rng.standard_normal((100, 25)))
        res = out_of_sample_correlation(
            x1.values, x2.values, SparsityPair(8, 6), SolverConfig(seed=2),
            SplitSpec(holdout_fraction=0.25, repeats=10, seed=3),
        )
        assert abs(res.mean) < 0.3

    def test_sweep_declines_past_true_size(self):
        design = SimulationDesign(
            n=120, p=30, q=20,
            components=(PlantedComponent(tuple(range(5)), tuple(range(5)), "constant", 10.0),),
            noise_sd=1.0, seed=23,
        )
        x1r, x2r, _ = generate(design)
        x1v, x2v = standardize(x1r).values, standardize(x2r).values
        means = []
        for k in (5, 15, 30):
            res = out_of_sample_correlation(
                x1v, x2v, SparsityPair(k, 5), SolverConfig(seed=4),
                SplitSpec(repeats=8, seed=6),
            )
            means.append(res.mean)
        assert means[0] > means[-1]
        assert means[1] >= means[2] - 0.02

    def test_deterministic(self):
        rng = np.random.default_rng(24)
        x1 = standardize(rng.standard_normal((50, 10))).values
        x2 = standardize(rng.standard_normal((50, 8))).values
        a = out_of_sample_correlation(x1, x2, SparsityPair(3, 3), SolverConfig(seed=1), SplitSpec(seed=9, repeats=4))
        b = out_of_sample_correlation(x1, x2, SparsityPair(3, 3), SolverConfig(seed=1), SplitSpec(seed=9, repeats=4))
        assert a.per_repeat == b.per_repeat

    def test_multi_component_profile(self):
        design = SimulationDesign(
            n=80, p=25, q=20,
            components=(
                PlantedComponent(tuple(range(5)), tuple(range(5)), "constant", 12.0),
                PlantedComponent(tuple(range(10, 15)), tuple(range(10, 15)), "constant", 8.0),
            ),
            noise_sd=1.0, seed=25,
        )
        x1r, x2r, _ = generate(design)
        profile = out_of_sample_components(
            standardize(x1r).values, standardize(x2r).values, 2,
            SparsityPair(5, 5), SolverConfig(seed=2), SplitSpec(repeats=5, seed=7),
        )
        assert len(profile.mean) == 2
        assert profile.per_repeat.shape == (5, 2)
        assert profile.mean[0] > 0.7 and profile.mean[1] > 0.5
