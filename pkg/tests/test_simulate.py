import numpy as np
import pytest

from topkcca.core import SparsityPair, WeightVector, standardize
from topkcca.metrics import CCAModel
from topkcca.permtest import permutation_test
from topkcca.simulate import (
    PlantedComponent,
    SimulationDesign,
    design_from_text,
    design_to_text,
    generate,
    parse_indices,
    pattern_weights,
    score_recovery,
)
from topkcca.solver import CanonicalComponent, SolverConfig, fit, fit_component


def _two_component_design(seed=0):
    return SimulationDesign(
        n=50, p=30, q=20,
        components=(
            PlantedComponent(tuple(range(5)), tuple(range(4)), "constant", 9.0),
            PlantedComponent(tuple(range(10, 14)), tuple(range(10, 13)), "alternating_sign", 6.0),
        ),
        noise_sd=1.0, seed=seed,
    )


class TestDesignValidation:
    def test_support_bounds(self):
        with pytest.raises(ValueError, match="outside"):
            SimulationDesign(n=10, p=5, q=5,
                             components=(PlantedComponent((0, 5), (0, 1), "constant", 1.0),))

    def test_overlap_rejected(self):
        with pytest.raises(ValueError, match="overlap"):
            SimulationDesign(n=10, p=8, q=8, components=(
                PlantedComponent((0, 1), (0, 1), "constant", 2.0),
                PlantedComponent((1, 2), (4, 5), "constant", 1.0),
            ))

    def test_strengths_must_decrease(self):
        with pytest.raises(ValueError, match="strictly decrease"):
            SimulationDesign(n=10, p=8, q=8, components=(
                PlantedComponent((0, 1), (0, 1), "constant", 1.0),
                PlantedComponent((2, 3), (2, 3), "constant", 1.0),
            ))

    def test_pattern_and_strength_checked(self):
        with pytest.raises(ValueError, match="weight_pattern"):
            PlantedComponent((0,), (0,), "spiky", 1.0)
        with pytest.raises(ValueError, match="positive"):
            PlantedComponent((0,), (0,), "constant", 0.0)

    def test_empty_support_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            PlantedComponent((), (0,), "constant", 1.0)


class TestPatterns:
    def test_unit_norm(self):
        for pat in ("constant", "alternating_sign", "decaying"):
            w = pattern_weights(7, pat)
            assert abs(np.linalg.norm(w) - 1.0) < 1e-12

    def test_shapes(self):
        np.testing.assert_allclose(pattern_weights(4, "constant"), 0.5)
        w = pattern_weights(4, "alternating_sign")
        assert (np.sign(w) == [1, -1, 1, -1]).all()
        w = pattern_weights(4, "decaying")
        assert (np.diff(np.abs(w)) < 0).all()


class TestGenerate:
    def test_deterministic(self):
        d = _two_component_design()
        a1, a2, _ = generate(d)
        b1, b2, _ = generate(d)
        np.testing.assert_array_equal(a1.values, b1.values)
        np.testing.assert_array_equal(a2.values, b2.values)

    def test_shapes_and_truth(self):
        d = _two_component_design()
        x1, x2, truth = generate(d)
        assert x1.values.shape == (50, 30) and x2.values.shape == (50, 20)
        assert truth.weights_x1.shape == (30, 2)
        assert truth.latents.shape == (50, 2)
        np.testing.assert_array_equal(np.flatnonzero(truth.weights_x1[:, 0]), range(5))
        # shared latent: both sides carry the same score vector per component
        assert truth.weights_x2[10, 1] != 0.0

    def test_zero_component_design_is_noise(self):
        d = SimulationDesign(n=30, p=10, q=8, noise_sd=1.0, seed=3)
        x1, x2, truth = generate(d)
        assert truth.latents.shape == (30, 0)
        assert x1.values.shape == (30, 10)

    def test_noiseless_limit_recovers_support(self):
        d = SimulationDesign(
            n=40, p=20, q=15,
            components=(PlantedComponent(tuple(range(4)), tuple(range(4)), "constant", 3.0),),
            noise_sd=1e-8, seed=4,
        )
        x1r, x2r, truth = generate(d)
        comp = fit_component(standardize(x1r), standardize(x2r), SparsityPair(4, 4), SolverConfig(seed=1))
        assert set(comp.alpha.support.tolist()) == set(truth.supports_x1[0])
        assert set(comp.beta.support.tolist()) == set(truth.supports_x2[0])
        assert comp.rho_in > 0.999

    def test_population_correlation_tracks_strength(self):
        # stronger planted latents give higher in-sample correlation
        rhos = []
        for strength in (2.0, 6.0, 18.0):
            d = SimulationDesign(
                n=400, p=12, q=12,
                components=(PlantedComponent(tuple(range(6)), tuple(range(6)), "constant", strength),),
                noise_sd=1.0, seed=11,
            )
            x1r, x2r, _ = generate(d)
            comp = fit_component(standardize(x1r), standardize(x2r), SparsityPair(6, 6), SolverConfig(seed=1))
            rhos.append(comp.rho_in)
        assert rhos[0] < rhos[1] < rhos[2]

    def test_pure_noise_rarely_significant(self):
        # zero-component designs should pass the permutation test as noise
        not_significant = 0
        seeds = range(50)
        for seed in seeds:
            d = SimulationDesign(n=40, p=20, q=15, noise_sd=1.0, seed=seed)
            x1r, x2r, _ = generate(d)
            rep = permutation_test(
                standardize(x1r).values, standardize(x2r).values, 1,
                SparsityPair(5, 5), SolverConfig(seed=seed), n_replicates=99,
                correction="none",
            )
            not_significant += rep.p_values[0] > 0.05
        assert not_significant >= 45  # >= 90% of 50 seeds


class TestScoreRecovery:
    def _model_with_supports(self, supports_x1, supports_x2, p, q, n=12):
        comps = []
        for s1, s2 in zip(supports_x1, supports_x2):
            a = np.zeros(p)
            a[list(s1)] = 1.0
            b = np.zeros(q)
            b[list(s2)] = 1.0
            g = np.zeros(n)
            g[0] = 1.0
            comps.append(CanonicalComponent(
                alpha=WeightVector.from_weights(a), beta=WeightVector.from_weights(b),
                gamma=g, zeta=g, gamma_scale=1.0, zeta_scale=1.0, rho_in=0.9,
                iterations=1, converged=True, sparsity=SparsityPair(max(len(s1), 1), max(len(s2), 1)),
            ))
        k = len(comps)
        return CCAModel(
            components=tuple(comps), cpev_x1=(0.1,) * k, cpev_x2=(0.1,) * k,
            adj_cpev_x1=(0.1,) * k, adj_cpev_x2=(0.1,) * k,
            latent_gamma_correlations=np.eye(k), latent_zeta_correlations=np.eye(k),
            deflation_trail=(), requested_components=k,
        )

    def test_exact_match_scores_one(self):
        d = _two_component_design()
        _, _, truth = generate(d)
        model = self._model_with_supports(truth.supports_x1, truth.supports_x2, 30, 20)
        score = score_recovery(model, truth)
        for r in score.per_component:
            assert r.matched and r.f1_x1 == 1.0 and r.f1_x2 == 1.0

    def test_disjoint_scores_zero(self):
        d = _two_component_design()
        _, _, truth = generate(d)
        model = self._model_with_supports([(20, 21), (25, 26)], [(15, 16), (17, 18)], 30, 20)
        score = score_recovery(model, truth)
        assert all(not r.matched for r in score.per_component)
        assert all(r.f1_x1 == 0.0 for r in score.per_component)

    def test_oversized_estimate_keeps_recall(self):
        # estimated support of 10 covering a planted support of 5: recall 1,
        # precision 0.5 on exact nonzeros
        d = SimulationDesign(
            n=20, p=30, q=20,
            components=(PlantedComponent(tuple(range(5)), tuple(range(5)), "constant", 2.0),),
            seed=7,
        )
        _, _, truth = generate(d)
        model = self._model_with_supports([tuple(range(10))], [tuple(range(10))], 30, 20, n=12)
        r = score_recovery(model, truth).per_component[0]
        assert r.recall_x1 == 1.0
        assert r.precision_x1 == 0.5
        assert r.weighted_precision_x1 == 0.5  # uniform fake weights

    def test_weighted_precision_reflects_mass(self):
        d = SimulationDesign(
            n=20, p=10, q=10,
            components=(PlantedComponent((0, 1), (0, 1), "constant", 2.0),),
            seed=8,
        )
        _, _, truth = generate(d)
        a = np.zeros(10)
        a[[0, 1]] = 10.0
        a[5] = 1.0  # small stray weight off support
        comp = CanonicalComponent(
            alpha=WeightVector.from_weights(a), beta=WeightVector.from_weights(a.copy()),
            gamma=np.eye(12)[0], zeta=np.eye(12)[0], gamma_scale=1.0, zeta_scale=1.0,
            rho_in=0.9, iterations=1, converged=True, sparsity=SparsityPair(3, 3),
        )
        model = CCAModel(
            components=(comp,), cpev_x1=(0.1,), cpev_x2=(0.1,),
            adj_cpev_x1=(0.1,), adj_cpev_x2=(0.1,),
            latent_gamma_correlations=np.eye(1), latent_zeta_correlations=np.eye(1),
            deflation_trail=(), requested_components=1,
        )
        r = score_recovery(model, truth).per_component[0]
        assert r.precision_x1 == pytest.approx(2.0 / 3.0)
        assert r.weighted_precision_x1 == pytest.approx(20.0 / 21.0)

    def test_matching_invariant_to_component_order(self):
        d = _two_component_design()
        _, _, truth = generate(d)
        fwd = self._model_with_supports(truth.supports_x1, truth.supports_x2, 30, 20)
        rev = self._model_with_supports(truth.supports_x1[::-1], truth.supports_x2[::-1], 30, 20)
        s_fwd = score_recovery(fwd, truth)
        s_rev = score_recovery(rev, truth)
        assert {r.planted_index for r in s_fwd.per_component} == {r.planted_index for r in s_rev.per_component}
        assert s_fwd.n_matched == s_rev.n_matched == 2

    def test_fitted_model_end_to_end(self):
        d = SimulationDesign(
            n=80, p=30, q=20,
            components=(
                PlantedComponent(tuple(range(5)), tuple(range(4)), "constant", 15.0),
                PlantedComponent(tuple(range(10, 15)), tuple(range(10, 14)), "constant", 10.0),
            ),
            noise_sd=1.0, seed=5,
        )
        x1r, x2r, truth = generate(d)
        model = fit(standardize(x1r), standardize(x2r), 2,
                    SparsityPair(5, 4), SolverConfig(seed=2))
        score = score_recovery(model, truth)
        assert score.n_matched == 2
        for r in score.per_component:
            assert r.recall_x1 >= 0.8 and r.recall_x2 >= 0.75


class TestDesignSerialization:
    def test_round_trip(self):
        d = _two_component_design(seed=9)
        text = design_to_text(d)
        back = design_from_text(text)
        assert back == d

    def test_parse_indices_forms(self):
        assert parse_indices("0-3") == (0, 1, 2, 3)
        assert parse_indices("5") == (5,)
        assert parse_indices("0-2,7,9-10") == (0, 1, 2, 7, 9, 10)
        with pytest.raises(ValueError):
            parse_indices("5-2")

    def test_missing_key_reported(self):
        with pytest.raises(ValueError, match="missing"):
            design_from_text("n = 10\np = 5\n")

    def test_unknown_key_reported(self):
        d = SimulationDesign(n=10, p=5, q=5)
        text = design_to_text(d) + "mystery = 1\n"
        with pytest.raises(ValueError, match="unknown design keys"):
            design_from_text(text)
