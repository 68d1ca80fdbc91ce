import numpy as np
import pytest

from topkcca.core import SparsityPair, standardize
from topkcca.metrics import SplitSpec
from topkcca.permtest import permutation_test
from topkcca.simulate import PlantedComponent, SimulationDesign, generate
from topkcca.solver import SolverConfig


def _planted(seed=1, strength=12.0):
    design = SimulationDesign(
        n=60, p=30, q=25,
        components=(PlantedComponent(tuple(range(6)), tuple(range(6)), "constant", strength),),
        noise_sd=1.0, seed=seed,
    )
    x1r, x2r, _ = generate(design)
    return standardize(x1r).values, standardize(x2r).values


def _noise(seed=2, n=40, p=15, q=12):
    rng = np.random.default_rng(seed)
    return (standardize(rng.standard_normal((n, p))).values,
            standardize(rng.standard_normal((n, q))).values)


class TestValidation:
    def test_b_floor(self):
        x1, x2 = _noise()
        with pytest.raises(ValueError, match="19"):
            permutation_test(x1, x2, 1, SparsityPair(3, 3), SolverConfig(), n_replicates=10)

    def test_alpha_range(self):
        x1, x2 = _noise()
        with pytest.raises(ValueError, match="alpha_level"):
            permutation_test(x1, x2, 1, SparsityPair(3, 3), SolverConfig(), n_replicates=19, alpha_level=1.5)

    def test_bad_choices(self):
        x1, x2 = _noise()
        with pytest.raises(ValueError, match="statistic"):
            permutation_test(x1, x2, 1, SparsityPair(3, 3), SolverConfig(), n_replicates=19, statistic="apparent")
        with pytest.raises(ValueError, match="correction"):
            permutation_test(x1, x2, 1, SparsityPair(3, 3), SolverConfig(), n_replicates=19, correction="fdr")
        with pytest.raises(ValueError, match="permute"):
            permutation_test(x1, x2, 1, SparsityPair(3, 3), SolverConfig(), n_replicates=19, permute="x3")


class TestPValues:
    def test_floor_when_observed_beats_all_nulls(self):
        x1, x2 = _planted()
        report = permutation_test(x1, x2, 1, SparsityPair(6, 6), SolverConfig(seed=3), n_replicates=19)
        assert report.p_values[0] == pytest.approx(1.0 / 20.0)
        assert report.decisions[0]
        assert report.null_statistics.shape == (19, 1)

    def test_p_value_matches_manual_count(self):
        x1, x2 = _noise(5)
        report = permutation_test(x1, x2, 1, SparsityPair(4, 4), SolverConfig(seed=1), n_replicates=29)
        manual = (1 + np.sum(report.null_statistics[:, 0] >= report.observed[0])) / 30.0
        assert report.p_values[0] == pytest.approx(manual)
        assert 1.0 / 30.0 <= report.p_values[0] <= 1.0

    def test_replicate_order_irrelevant_to_pvalue(self):
        x1, x2 = _noise(6)
        report = permutation_test(x1, x2, 1, SparsityPair(4, 4), SolverConfig(seed=2), n_replicates=25)
        shuffled = np.random.default_rng(0).permutation(report.null_statistics[:, 0])
        manual = (1 + np.sum(shuffled >= report.observed[0])) / 26.0
        assert report.p_values[0] == pytest.approx(manual)


class TestDeterminismAndConcurrency:
    def test_bitwise_deterministic(self):
        x1, x2 = _noise(7)
        a = permutation_test(x1, x2, 2, SparsityPair(4, 4), SolverConfig(seed=9), n_replicates=23)
        b = permutation_test(x1, x2, 2, SparsityPair(4, 4), SolverConfig(seed=9), n_replicates=23)
        np.testing.assert_array_equal(a.null_statistics, b.null_statistics)
        assert a.p_values == b.p_values and a.decisions == b.decisions

    def test_workers_do_not_change_report(self):
        x1, x2 = _noise(8)
        seq = permutation_test(x1, x2, 1, SparsityPair(4, 4), SolverConfig(seed=4), n_replicates=24, workers=1)
        par = permutation_test(x1, x2, 1, SparsityPair(4, 4), SolverConfig(seed=4), n_replicates=24, workers=3)
        np.testing.assert_array_equal(seq.null_statistics, par.null_statistics)
        assert seq.p_values == par.p_values


class TestCorrections:
    def test_bonferroni_vs_none(self):
        x1, x2 = _planted(3)
        none = permutation_test(x1, x2, 2, SparsityPair(6, 6), SolverConfig(seed=2),
                                n_replicates=39, correction="none")
        bonf = permutation_test(x1, x2, 2, SparsityPair(6, 6), SolverConfig(seed=2),
                                n_replicates=39, correction="bonferroni")
        np.testing.assert_array_equal(none.null_statistics, bonf.null_statistics)
        for p, d_none, d_bonf in zip(none.p_values, none.decisions, bonf.decisions):
            assert d_none == (p <= 0.05)
            assert d_bonf == (p <= 0.025)

    def test_max_statistic_uses_first_null(self):
        x1, x2 = _planted(4)
        rep = permutation_test(x1, x2, 2, SparsityPair(6, 6), SolverConfig(seed=5),
                               n_replicates=39, correction="max_statistic")
        first_null = rep.null_statistics[:, 0]
        for k in range(2):
            expected = (1 + np.sum(first_null >= rep.observed[k])) / 40.0 <= 0.05
            assert rep.decisions[k] == expected

    def test_planted_signal_second_component_not_significant(self):
        x1, x2 = _planted(5, strength=15.0)
        rep = permutation_test(x1, x2, 2, SparsityPair(6, 6), SolverConfig(seed=1),
                               n_replicates=49, correction="bonferroni")
        assert rep.decisions[0]
        assert not rep.decisions[1]


class TestStatistics:
    def test_out_of_sample_statistic_runs(self):
        x1, x2 = _planted(6)
        rep = permutation_test(
            x1, x2, 1, SparsityPair(6, 6), SolverConfig(seed=2), n_replicates=19,
            statistic="out_of_sample", split=SplitSpec(repeats=3, seed=4),
        )
        assert rep.statistic == "out_of_sample"
        assert rep.p_values[0] == pytest.approx(1.0 / 20.0)

    def test_permute_x1_side(self):
        x1, x2 = _noise(9)
        rep = permutation_test(x1, x2, 1, SparsityPair(4, 4), SolverConfig(seed=3),
                               n_replicates=19, permute="x1")
        assert rep.permuted_side == "x1"

    def test_degenerate_fit_recorded_as_zero_with_flag(self):
        # the x2 block has two mutually negated columns: every fit (observed
        # and permuted) collapses under k_beta=1
        rng = np.random.default_rng(10)
        z = standardize(rng.standard_normal((20, 1))).values[:, 0]
        x2 = np.column_stack([z, -z])
        x1, _ = _noise(10, n=20)
        with pytest.warns(RuntimeWarning):
            rep = permutation_test(x1, x2, 1, SparsityPair(4, 1), SolverConfig(seed=1),
                                   n_replicates=19)
        assert rep.observed[0] == 0.0
        assert (rep.null_statistics == 0.0).all()
        assert rep.p_values[0] == 1.0
        assert not rep.decisions[0]
        assert len(rep.degenerate_replicates) == 20  # every replicate plus the observed fit
