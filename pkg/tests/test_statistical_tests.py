import math

import numpy as np
import pytest

from src.analysis.spectral import chernoff_tail
from src.dynamics.interchange_sim import replica_rng
from src.experiments.statistical_tests import (
    CONFIG_STREAM,
    exclusion_duality_test,
    mean_cut_test,
    occupancy,
    rewiring_rate_test,
    uniformity_test,
)
from src.topology.pointer_graph import PointerColor, random_config


@pytest.fixture
def config10():
    return random_config(10, np.random.default_rng(17))


class TestUniformity:

    def test_long_phase_is_uniform(self):
        report = uniformity_test(3, 10.0, 3000, seed=1)
        assert report.dof == 5
        assert report.min_cell > 0
        assert report.passed

    @pytest.mark.parametrize("n, replicas", [(4, 4800), (5, 12000)])
    def test_larger_groups_are_uniform(self, n, replicas):
        report = uniformity_test(n, 20.0, replicas, seed=7)
        assert report.dof == math.factorial(n) - 1
        assert report.min_cell > 0
        assert report.p_value > 0.001
        assert report.passed

    def test_zero_time_is_a_point_mass(self):
        report = uniformity_test(3, 0.0, 120, seed=1)
        assert report.max_cell == 120
        assert not report.passed

    def test_insufficient_replicas(self):
        with pytest.raises(ValueError, match="insufficient replicas"):
            uniformity_test(4, 1.0, 100, seed=0)

    def test_size_limits(self):
        with pytest.raises(ValueError, match="limited to n <= 5"):
            uniformity_test(6, 1.0, 10 ** 6, seed=0)
        with pytest.raises(ValueError, match="n >= 3"):
            uniformity_test(2, 1.0, 100, seed=0)

    def test_default_config_comes_from_reserved_stream(self):
        explicit = random_config(3, replica_rng(4, CONFIG_STREAM))
        a = uniformity_test(3, 0.5, 200, seed=4)
        b = uniformity_test(3, 0.5, 200, seed=4, config=explicit)
        assert a.statistic == b.statistic


class TestDuality:

    def test_occupancy_counts_targets(self):
        finals = np.array([[2, 0, 1], [0, 1, 2]])
        occ = occupancy(finals, np.array([0, 1]))
        assert occ.tolist() == [[1, 0, 1], [1, 1, 0]]

    def test_zero_time_is_exact(self, config10):
        report = exclusion_duality_test(config10, [0, 3, 5], 0.0, 50, seed=0)
        assert report.max_deviation == 0.0
        assert report.passed
        assert report.analytic.sum() == pytest.approx(3.0)

    def test_tracks_heat_kernel(self, config10):
        report = exclusion_duality_test(config10, [1, 2, 7], 1.0, 4000, seed=2)
        assert report.empirical.sum() == pytest.approx(3.0)
        assert report.analytic.sum() == pytest.approx(3.0)
        assert report.max_deviation <= 5 * report.sigma_max

    def test_rejects_bad_sets(self, config10):
        with pytest.raises(ValueError, match="proper nonempty"):
            exclusion_duality_test(config10, [], 1.0, 10, seed=0)
        with pytest.raises(ValueError, match="outside"):
            exclusion_duality_test(config10, [10], 1.0, 10, seed=0)


class TestMeanCut:

    def test_zero_time_keeps_initial_cut(self, config10):
        report = mean_cut_test(config10, [0, 1, 2, 3], 0.0, 20, gamma=0.5, d=2, seed=0)
        assert report.mean_cut == report.initial_cut
        assert report.mean_outgoing == pytest.approx(report.analytic_outgoing)
        assert report.cut_bound == pytest.approx(min(0.5 * 4, 4) / 1.0)
        assert report.passed
        assert report.hypothesis_holds is True

    def test_mean_outgoing_matches_heat_kernel(self, config10):
        report = mean_cut_test(config10, [0, 4, 5], 2.0, 3000, gamma=0.5, d=2, seed=3)
        assert report.mean_outgoing == pytest.approx(report.analytic_outgoing, abs=0.1)
        assert len(report.tails) == 3
        assert report.cut_ratio == pytest.approx(report.mean_cut / report.cut_bound)


    def test_lower_tails_respect_chernoff_bound(self):
        config = random_config(16, np.random.default_rng(5))
        report = mean_cut_test(config, [0, 3, 6, 9], 2.0, 4000, gamma=0.5, d=2, seed=11)
        assert [t.r for t in report.tails] == [0.3, 0.5, 0.7]
        for tail in report.tails:
            assert tail.bound == pytest.approx(chernoff_tail(report.analytic_outgoing, tail.r))
            assert tail.threshold == pytest.approx(tail.r * report.analytic_outgoing)
            slack = 3 * math.sqrt(tail.bound * (1 - tail.bound) / 4000)
            assert tail.empirical <= tail.bound + slack
            assert tail.holds
        assert report.passed


class TestRewiringRate:

    def test_rate_and_tails(self):
        report = rewiring_rate_test(16, 2.0, 2000, seed=0)
        assert report.rate_ok
        assert report.expected == pytest.approx(4.0 * (32 - report.fixed_loops) / 16 * 2.0)
        assert set(report.tail_checks) == {"tau=1", "tau=5"}
        for check in report.tail_checks.values():
            assert check["slack"] == pytest.approx(3 * math.sqrt(check["bound"] * (1 - check["bound"]) / 2000))
            assert check["empirical"] <= check["bound"] + check["slack"]
        assert report.per_node_rate == pytest.approx(8 - 4 * report.fixed_loops / 16)
        assert report.rate_formula == "8 - 4L/N"
        assert report.passed

    def test_owner_mode_halves_rate(self):
        report = rewiring_rate_test(16, 2.0, 500, seed=0, taus=(), count_mode="owner")
        assert report.expected == pytest.approx(2.0 * (32 - report.fixed_loops) / 16 * 2.0)
        assert report.rate_formula == "4 - 2L/N"
        assert report.rate_ok
