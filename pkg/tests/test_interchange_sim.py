import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.dynamics.interchange_sim import (
    SimParams,
    apply_swap,
    phase_graph_for,
    poisson_rewiring_tail,
    replica_rng,
    run_protocol,
    simulate_phase,
    simulate_replica_blocks,
    simulate_replicas,
)
from src.topology.pointer_graph import (
    PointerColor,
    build_phase_graph,
    identity_config,
    random_config,
)


@pytest.fixture
def config16():
    return random_config(16, np.random.default_rng(2024))


def _is_permutation(row):
    return sorted(int(v) for v in row) == list(range(len(row)))


def test_replica_rng_is_reproducible_and_split():
    a = replica_rng(7, 0).random(5)
    b = replica_rng(7, 0).random(5)
    c = replica_rng(7, 1).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_apply_swap_exchanges_destinations():
    pointers = np.array([2, 0, 1, 3])
    owner = np.empty_like(pointers)
    owner[pointers] = np.arange(4)
    n, m = apply_swap(pointers, owner, 0, 3)
    assert (n, m) == (1, 3)
    assert pointers.tolist() == [2, 3, 1, 0]
    assert owner[pointers].tolist() == [0, 1, 2, 3]


@settings(max_examples=200)
@given(st.sampled_from([4, 8, 16]), st.data())
def test_fuzzed_events_preserve_bijection(n, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    config = random_config(n, rng)
    graph = phase_graph_for(config, PointerColor.BLUE)
    pointers = np.array(config.blue)
    owner = np.empty_like(pointers)
    owner[pointers] = np.arange(n)
    slots = data.draw(st.lists(st.integers(0, graph.num_edges - 1), max_size=50))
    for e in slots:
        apply_swap(pointers, owner, int(graph.edges[e, 0]), int(graph.edges[e, 1]))
        assert _is_permutation(pointers)
        assert (owner[pointers] == np.arange(n)).all()
    moved = config.with_pointers(PointerColor.BLUE, pointers)
    assert (build_phase_graph(moved, PointerColor.BLUE).degree == 4).all()


class TestSimulatePhase:

    def test_zero_time_is_identity(self, config16):
        final, stats = simulate_phase(config16, PointerColor.BLUE, 0.0, np.random.default_rng(0))
        assert final == config16
        assert stats.total_swaps == 0
        assert stats.max_modifications == 0

    def test_only_moving_color_changes(self, config16):
        final, stats = simulate_phase(config16, PointerColor.BLUE, 2.0, np.random.default_rng(1))
        assert np.array_equal(final.red, config16.red)
        assert _is_permutation(final.blue)
        assert stats.moving_color is PointerColor.BLUE
        assert stats.total_swaps > 0

    def test_red_phase_moves_red(self, config16):
        final, _ = simulate_phase(config16, PointerColor.RED, 2.0, np.random.default_rng(1))
        assert np.array_equal(final.blue, config16.blue)

    def test_deterministic_for_seed(self, config16):
        a = simulate_phase(config16, PointerColor.BLUE, 3.0, np.random.default_rng(5))
        b = simulate_phase(config16, PointerColor.BLUE, 3.0, np.random.default_rng(5))
        assert a[0] == b[0]
        assert np.array_equal(a[1].per_node_modifications, b[1].per_node_modifications)

    def test_modification_accounting(self, config16):
        _, stats = simulate_phase(config16, PointerColor.BLUE, 4.0, np.random.default_rng(3))
        total = int(stats.per_node_modifications.sum())
        assert total % 4 == 0
        assert total <= 4 * stats.total_swaps

        _, owner_stats = simulate_phase(config16, PointerColor.BLUE, 4.0, np.random.default_rng(3),
                                        count_mode="owner")
        assert int(owner_stats.per_node_modifications.sum()) * 2 == total

    def test_long_phase_spans_event_chunks(self):
        config = random_config(64, np.random.default_rng(0))
        _, stats = simulate_phase(config, PointerColor.BLUE, 50.0, np.random.default_rng(0))
        # about 2N T = 6400 events, more than one chunk
        assert 5000 < stats.total_swaps < 8000

    def test_rejects_bad_arguments(self, config16):
        with pytest.raises(ValueError, match="T must be >= 0"):
            simulate_phase(config16, PointerColor.BLUE, -1.0, np.random.default_rng(0))
        with pytest.raises(ValueError, match="count_mode"):
            simulate_phase(config16, PointerColor.BLUE, 1.0, np.random.default_rng(0), count_mode="all")


class TestBatchEngine:

    def test_zero_time_returns_start(self, config16):
        finals, mods = simulate_replicas(config16, PointerColor.BLUE, 0.0, 10, np.random.default_rng(0))
        assert finals.shape == (10, 16)
        assert (finals == config16.blue).all()
        assert mods is None

    def test_rows_are_permutations(self, config16):
        finals, mods = simulate_replicas(config16, PointerColor.BLUE, 1.5, 50, np.random.default_rng(0),
                                         track_modifications=True)
        assert all(_is_permutation(row) for row in finals)
        assert mods.shape == (50, 16)
        assert (mods.sum(axis=1) % 4 == 0).all()

    def test_mean_modifications_match_sequential_engine(self, config16):
        _, mods = simulate_replicas(config16, PointerColor.BLUE, 2.0, 400, np.random.default_rng(9),
                                    track_modifications=True)
        sequential = [
            simulate_phase(config16, PointerColor.BLUE, 2.0, replica_rng(9, r))[1].mean_modifications
            for r in range(100)
        ]
        assert abs(mods.mean() - np.mean(sequential)) < 0.1 * np.mean(sequential)

    def test_blocks_do_not_depend_on_threads(self, config16):
        one, _ = simulate_replica_blocks(config16, PointerColor.BLUE, 1.0, 70, seed=3, threads=1, block_size=16)
        many, _ = simulate_replica_blocks(config16, PointerColor.BLUE, 1.0, 70, seed=3, threads=4, block_size=16)
        assert np.array_equal(one, many)

    def test_rejects_zero_replicas(self, config16):
        with pytest.raises(ValueError, match="replicas must be >= 1"):
            simulate_replicas(config16, PointerColor.BLUE, 1.0, 0, np.random.default_rng(0))


class TestProtocol:

    def test_sim_params_derive_phase_length(self):
        params = SimParams(n=16, phase_length=None, a_exponent=2.0)
        assert params.T == pytest.approx(math.log(16) ** 2)
        assert SimParams(n=16, phase_length=5.0).T == 5.0

    def test_small_exponent_warns(self, caplog):
        SimParams(n=16, phase_length=None, a_exponent=2.0)
        assert "rewiring tail bound needs" in caplog.text
        caplog.clear()
        SimParams(n=16, phase_length=None, a_exponent=8.5)
        SimParams(n=16, phase_length=5.0, a_exponent=2.0)
        assert "rewiring tail bound needs" not in caplog.text

    @pytest.mark.parametrize("kwargs, message", [
        ({"n": 2}, "n must be >= 3"),
        ({"num_phases": 0}, "num_phases must be >= 1"),
        ({"phase_length": -1.0}, "phase_length must be > 0"),
        ({"count_mode": "both"}, "count_mode"),
        ({"initial": "sorted"}, "initial"),
    ])
    def test_sim_params_validation(self, kwargs, message):
        with pytest.raises(ValueError, match=message):
            SimParams(**kwargs)

    def test_initial_states(self):
        assert SimParams(n=5, initial="identity").initial_config(np.random.default_rng(0)) == identity_config(5)
        assert SimParams(n=5, initial="reverse").initial_config(np.random.default_rng(0)).red.tolist() == [4, 0, 1, 2, 3]

    def test_phases_alternate_starting_with_blue(self):
        params = SimParams(n=8, phase_length=1.0, num_phases=4, seed=1)
        result = run_protocol(params, replica_rng(1, 0))
        colors = [s.moving_color for s in result.phases]
        assert colors == [PointerColor.BLUE, PointerColor.RED, PointerColor.BLUE, PointerColor.RED]
        assert result.tau == pytest.approx(4.0)
        assert result.total_modifications.shape == (8,)
        assert result.rewiring_threshold() == pytest.approx(64.0)

    def test_protocol_is_deterministic(self):
        params = SimParams(n=12, phase_length=2.0, num_phases=3, seed=4)
        a = run_protocol(params, replica_rng(4, 0))
        b = run_protocol(params, replica_rng(4, 0))
        assert a.final_config == b.final_config

    def test_snapshot_profiles(self):
        params = SimParams(n=8, phase_length=1.0, num_phases=2, snapshot_profile=True)
        result = run_protocol(params, replica_rng(0, 0))
        assert len(result.profiles) == 2
        assert all(p is not None and p.kmax == 4 for p in result.profiles)

    def test_initial_size_mismatch(self):
        params = SimParams(n=8, phase_length=1.0)
        with pytest.raises(ValueError, match="initial config has N=6"):
            run_protocol(params, replica_rng(0, 0), initial=identity_config(6))


def test_poisson_rewiring_tail_value():
    h2 = 2 * math.log(2) - 1
    assert poisson_rewiring_tail(1.0) == pytest.approx(math.exp(-8 * h2))
    assert poisson_rewiring_tail(5.0) < poisson_rewiring_tail(1.0)
    with pytest.raises(ValueError, match="tau must be > 0"):
        poisson_rewiring_tail(0.0)


def test_phase_graph_for_uses_fixed_color(config16):
    graph = phase_graph_for(config16, PointerColor.BLUE)
    assert np.array_equal(graph.edges, build_phase_graph(config16, PointerColor.RED).edges)
