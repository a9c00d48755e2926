import itertools
import math

import networkx as nx
import numpy as np
import pytest

from src.analysis.isoperimetry import (
    ExpansionHypothesis,
    IsoProfile,
    ProfileBudgetError,
    arc_set_count,
    check_hypothesis,
    counting_bound,
    enumerate_arc_sets,
    log_union_bound_pk,
    profile_exact,
    profile_gray_code,
    union_bound_pk,
    union_bound_terms,
)
from src.analysis.spectral import cramer_h
from src.orchestration.cache_manager import ProfileCache
from src.topology.pointer_graph import (
    PhaseGraph,
    PointerColor,
    build_phase_graph,
    count_arcs,
    edge_boundary,
    identity_config,
    random_config,
)


def cycle(n):
    return PhaseGraph.from_networkx(nx.cycle_graph(n))


class TestProfileExact:

    @pytest.mark.parametrize("n", [6, 9, 12])
    def test_pure_cycle(self, n):
        profile = profile_exact(cycle(n), n // 2)
        for k in range(1, n // 2 + 1):
            assert profile.phi_card[k] == 2
            assert profile.phi_ratio[k] == pytest.approx(2 / k)
        assert np.isnan(profile.phi_card[0])

    def test_complete_graph_k4(self):
        profile = profile_exact(PhaseGraph.from_networkx(nx.complete_graph(4)), 2)
        assert profile.phi_ratio[1] == 3
        assert profile.phi_ratio[2] == 2
        assert profile.phi_card[2] == 3

    def test_identity_config_matches_cycle(self):
        graph = build_phase_graph(identity_config(4), PointerColor.RED)
        ours, ring = profile_exact(graph, 2), profile_exact(cycle(4), 2)
        assert np.array_equal(ours.phi_card[1:], ring.phi_card[1:])
        assert np.allclose(ours.phi_ratio[1:], ring.phi_ratio[1:])

    def test_witnesses_realise_values(self):
        graph = build_phase_graph(random_config(10, np.random.default_rng(4)), PointerColor.RED)
        profile = profile_exact(graph, 5)
        for k in range(1, 6):
            card = profile.card_witnesses[k]
            ratio = profile.ratio_witnesses[k]
            assert 1 <= len(card) <= k
            assert edge_boundary(graph, card) == profile.phi_card[k]
            assert edge_boundary(graph, ratio) / len(ratio) == pytest.approx(profile.phi_ratio[k])
            assert len(profile.size_witnesses[k]) == k
            assert edge_boundary(graph, profile.size_witnesses[k]) == profile.min_boundary_by_size[k]

    def test_profile_invariants(self):
        for seed in range(5):
            graph = build_phase_graph(random_config(12, np.random.default_rng(seed)), PointerColor.BLUE)
            profile = profile_exact(graph, 6)
            card, ratio = profile.phi_card[1:], profile.phi_ratio[1:]
            assert (np.diff(card) <= 0).all()
            assert (np.diff(ratio) <= 1e-12).all()
            assert (ratio <= card + 1e-12).all()
            assert (card >= 2).all()

    def test_definitional_consistency_exhaustive(self):
        graph = build_phase_graph(random_config(10, np.random.default_rng(8)), PointerColor.RED)
        profile = profile_exact(graph, 5)
        for size in range(1, 6):
            for members in itertools.combinations(range(10), size):
                boundary = edge_boundary(graph, members)
                assert boundary >= profile.phi_card[size]
                assert boundary / size >= profile.phi_ratio[size] - 1e-12

    @pytest.mark.parametrize("seed", range(4))
    def test_agrees_with_gray_code(self, seed):
        n = 8 + 2 * seed
        graph = build_phase_graph(random_config(n, np.random.default_rng(seed)), PointerColor.RED)
        bitmask, gray = profile_exact(graph, n // 2), profile_gray_code(graph, n // 2)
        assert np.array_equal(bitmask.min_boundary_by_size, gray.min_boundary_by_size)
        assert np.array_equal(bitmask.phi_card[1:], gray.phi_card[1:])
        assert np.allclose(bitmask.phi_ratio[1:], gray.phi_ratio[1:])
        assert bitmask.size_witnesses == gray.size_witnesses

    def test_small_blocks_and_workers_agree(self, monkeypatch):
        from src.config import settings
        graph = build_phase_graph(random_config(12, np.random.default_rng(1)), PointerColor.RED)
        whole = profile_exact(graph, 6)
        monkeypatch.setitem(settings.PROFILE_SETTINGS, "chunk_bits", 5)
        split = profile_exact(graph, 6, workers=3)
        assert np.array_equal(whole.min_boundary_by_size, split.min_boundary_by_size)
        assert whole.size_witnesses == split.size_witnesses

    def test_budget_refusal(self):
        with pytest.raises(ProfileBudgetError, match="enumeration budget"):
            profile_exact(cycle(10), 3, budget=8)

    def test_kmax_range(self):
        with pytest.raises(ValueError, match="kmax"):
            profile_exact(cycle(8), 5)
        with pytest.raises(ValueError, match="kmax"):
            profile_exact(cycle(8), 0)

    def test_cache_round_trip(self, tmp_path):
        graph = build_phase_graph(random_config(10, np.random.default_rng(6)), PointerColor.RED)
        cache = ProfileCache(cache_dir=str(tmp_path), enabled=True)
        first = profile_exact(graph, 5, cache=cache)
        assert len(list(tmp_path.glob("*.json"))) == 1
        second = profile_exact(graph, 5, cache=cache)
        assert np.array_equal(first.phi_card, second.phi_card, equal_nan=True)
        assert first.card_witnesses == second.card_witnesses

    def test_to_dict_round_trip(self):
        profile = profile_exact(cycle(8), 4)
        again = IsoProfile.from_dict(profile.to_dict())
        assert np.allclose(again.phi_ratio[1:], profile.phi_ratio[1:])


class TestHypothesis:

    def test_d2_holds_on_every_phase_graph(self):
        for seed in range(10):
            n = 12
            graph = build_phase_graph(random_config(n, np.random.default_rng(seed)), PointerColor.RED)
            hyp = ExpansionHypothesis(gamma=4 / n, d=2)
            assert check_hypothesis(profile_exact(graph, n // 2), hyp).holds

    def test_cycle_fails_at_three(self):
        profile = profile_exact(cycle(10), 5)
        result = check_hypothesis(profile, ExpansionHypothesis(gamma=1.0, d=3))
        assert not result.holds
        assert result.first_violation == 3
        assert count_arcs(10, result.witness) == 1
        assert len(result.witness) == 3
        assert result.boundary == 2 and result.required == 3

    def test_cumulative_form(self):
        profile = profile_exact(cycle(10), 5)
        result = check_hypothesis(profile, ExpansionHypothesis(gamma=1.0, d=3), form="cumulative")
        assert result.first_violation == 3
        with pytest.raises(ValueError, match="form"):
            check_hypothesis(profile, ExpansionHypothesis(gamma=1.0, d=3), form="strict")

    def test_tiny_gamma_always_holds(self):
        profile = profile_exact(cycle(12), 6)
        assert check_hypothesis(profile, ExpansionHypothesis(gamma=1e-9, d=100)).holds

    def test_parameters_validated(self):
        with pytest.raises(ValueError, match="gamma"):
            ExpansionHypothesis(gamma=0.0, d=2)
        with pytest.raises(ValueError, match="d must be positive"):
            ExpansionHypothesis(gamma=0.5, d=0)
        with pytest.raises(ValueError, match="beta"):
            ExpansionHypothesis(gamma=0.5, d=2, beta=1.0)

    def test_from_beta(self):
        hyp = ExpansionHypothesis.from_beta(100, 2.0, 4)
        assert hyp.gamma == pytest.approx(math.log(100) ** -2)
        assert hyp.required(1) == pytest.approx(hyp.gamma)
        assert hyp.required(10 ** 6) == 4


class TestArcSets:

    def test_six_arcs(self):
        sets = list(enumerate_arc_sets(6, 3, 1))
        assert len(sets) == 6
        assert frozenset({5, 0, 1}) in sets

    def test_alternating_sets(self):
        assert set(enumerate_arc_sets(6, 3, 3)) == {frozenset({0, 2, 4}), frozenset({1, 3, 5})}

    def test_infeasible_is_empty(self):
        assert list(enumerate_arc_sets(6, 2, 3)) == []
        assert arc_set_count(6, 2, 3) == 0

    @pytest.mark.parametrize("n", [4, 7, 10, 12])
    def test_partition_and_closed_form(self, n):
        for k in range(1, n // 2 + 1):
            seen = []
            for ell in range(1, min(k, n - k) + 1):
                sets = list(enumerate_arc_sets(n, k, ell))
                assert len(sets) == len(set(sets)) == arc_set_count(n, k, ell)
                assert all(count_arcs(n, s) == ell and len(s) == k for s in sets)
                assert len(sets) <= counting_bound(n, ell)
                seen.extend(sets)
            assert len(seen) == math.comb(n, k)

    def test_closed_form_under_counting_bound(self):
        for n in range(4, 17):
            for k in range(1, n // 2 + 1):
                for ell in range(1, k + 1):
                    assert arc_set_count(n, k, ell) <= counting_bound(n, ell)

    def test_count_example(self):
        assert sum(1 for _ in enumerate_arc_sets(8, 3, 2)) <= 8 ** 4

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            list(enumerate_arc_sets(6, 0, 1))
        with pytest.raises(ValueError):
            list(enumerate_arc_sets(6, 2, 0))


class TestUnionBound:

    def test_zero_below_two_over_gamma(self):
        assert union_bound_pk(100, 3, 0.5, 4) == 0.0
        assert log_union_bound_pk(100, 3, 0.5, 4) == float("-inf")

    def test_degenerate_single_term(self):
        # min(gamma k, 2d) = 2: only ell = 1 with threshold 0
        terms = union_bound_terms(50, 4, 0.5, 1)
        assert len(terms) == 1
        mu = 2 / (2 * 0.5)
        assert union_bound_pk(50, 4, 0.5, 1) == pytest.approx(50 ** 2 * math.exp(-mu))

    def test_matches_direct_sum(self):
        n, gamma, d, k = 1000, 0.1, 8, 100
        scale = min(gamma * k, 2 * d)
        mu = scale / (2 * gamma)
        direct = 0.0
        ell = 1
        while scale - 2 * ell >= 0:
            r = (scale - 2 * ell) / mu
            direct += n ** (2 * ell) * math.exp(-mu * cramer_h(r))
            ell += 1
        value = union_bound_pk(n, k, gamma, d)
        assert math.isfinite(value)
        assert value == pytest.approx(direct, rel=1e-9)
        assert len(union_bound_terms(n, k, gamma, d)) <= d

    def test_lower_threshold_gives_smaller_bound(self):
        small = log_union_bound_pk(1000, 40, 0.1, 8)
        large = log_union_bound_pk(1000, 40, 0.05, 8)
        assert large < small
