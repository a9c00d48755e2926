import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.topology.pointer_graph import (
    EDGE_CYCLE,
    EDGE_POINTER,
    PhaseGraph,
    PointerColor,
    PointerConfig,
    build_phase_graph,
    count_arcs,
    cut_of,
    edge_boundary,
    format_config,
    format_graph,
    identity_config,
    parse_config,
    random_config,
    read_config,
    read_graph,
    reverse_config,
    write_config,
)


@st.composite
def configs(draw, min_n=3, max_n=12):
    n = draw(st.integers(min_n, max_n))
    red = draw(st.permutations(range(n)))
    blue = draw(st.permutations(range(n)))
    return PointerConfig(n, red, blue)


def test_color_other():
    assert PointerColor.RED.other is PointerColor.BLUE
    assert PointerColor.BLUE.other is PointerColor.RED


def test_config_rejects_small_n():
    with pytest.raises(ValueError, match="N must be >= 3"):
        PointerConfig(2, [0, 1], [1, 0])


def test_config_rejects_non_permutation():
    with pytest.raises(ValueError, match="red is not a permutation"):
        PointerConfig(4, [0, 0, 1, 2], [0, 1, 2, 3])


def test_config_rejects_out_of_range():
    with pytest.raises(ValueError, match="outside"):
        PointerConfig(3, [0, 1, 2], [0, 1, 3])


def test_config_is_immutable_and_hashable():
    config = random_config(8, np.random.default_rng(1))
    with pytest.raises(ValueError):
        config.red[0] = 5
    same = PointerConfig(8, config.red.copy(), config.blue.copy())
    assert same == config
    assert hash(same) == hash(config)


def test_with_pointers_replaces_one_color():
    config = identity_config(5)
    moved = config.with_pointers(PointerColor.BLUE, [1, 0, 2, 3, 4])
    assert np.array_equal(moved.red, config.red)
    assert moved.blue.tolist() == [1, 0, 2, 3, 4]


@given(configs())
def test_phase_graph_is_four_regular(config):
    for color in PointerColor:
        graph = build_phase_graph(config, color)
        assert graph.num_edges == 2 * config.n
        assert (graph.degree == 4).all()
        assert (graph.kinds == EDGE_CYCLE).sum() == config.n
        assert (graph.kinds == EDGE_POINTER).sum() == config.n


def test_identity_config_pointer_edges_are_loops():
    graph = build_phase_graph(identity_config(6), PointerColor.RED)
    pointer_edges = graph.edges[graph.kinds == EDGE_POINTER]
    assert (pointer_edges[:, 0] == pointer_edges[:, 1]).all()
    assert (graph.degree == 4).all()


def test_reverse_config_doubles_ring():
    graph = build_phase_graph(reverse_config(5), PointerColor.BLUE)
    assert edge_boundary(graph, {0}) == 4


def test_phase_graph_half_edge_tables():
    config = random_config(7, np.random.default_rng(3))
    graph = build_phase_graph(config, PointerColor.RED)
    for v in range(graph.n):
        ids = graph.edge_ids[v, : graph.degree[v]]
        for e, w in zip(ids, graph.incident(v)):
            assert {int(graph.edges[e, 0]), int(graph.edges[e, 1])} == {v, int(w)}


def test_to_networkx_keeps_multiplicity():
    graph = build_phase_graph(reverse_config(4), PointerColor.RED)
    g = graph.to_networkx()
    assert isinstance(g, nx.MultiGraph)
    assert g.number_of_edges() == 8
    assert graph.is_connected


def test_from_edges_and_networkx():
    graph = PhaseGraph.from_networkx(nx.cycle_graph(5))
    assert graph.num_edges == 5
    assert graph.max_degree == 2
    assert edge_boundary(graph, {0, 1}) == 2
    disconnected = PhaseGraph.from_edges(4, [(0, 1), (2, 3)])
    assert not disconnected.is_connected


def test_from_edges_rejects_bad_endpoint():
    with pytest.raises(ValueError, match="outside"):
        PhaseGraph.from_edges(3, [(0, 3)])


class TestCuts:

    def test_cut_identity_exhaustive(self):
        for seed in range(3):
            config = random_config(10, np.random.default_rng(seed))
            graph = build_phase_graph(config, PointerColor.RED)
            for size in range(1, config.n):
                for members in itertools.combinations(range(config.n), size):
                    cut = cut_of(graph, members)
                    assert cut.boundary_total == cut.boundary_pointer + 2 * cut.arcs

    @given(configs(), st.data())
    def test_cut_identity_property(self, config, data):
        members = data.draw(st.sets(st.integers(0, config.n - 1), min_size=1, max_size=config.n - 1))
        graph = build_phase_graph(config, PointerColor.BLUE)
        cut = cut_of(graph, members)
        assert cut.boundary_total == cut.boundary_pointer + 2 * cut.arcs
        assert cut.boundary_total == edge_boundary(graph, members)
        assert cut.arcs == count_arcs(config.n, members)

    def test_arc_count_wraps(self):
        assert count_arcs(8, {7, 0, 1}) == 1
        assert count_arcs(8, {0, 2, 4}) == 3

    def test_cut_rejects_empty_and_full(self):
        graph = build_phase_graph(identity_config(4), PointerColor.RED)
        with pytest.raises(ValueError, match="proper nonempty"):
            cut_of(graph, set())
        with pytest.raises(ValueError, match="proper nonempty"):
            cut_of(graph, range(4))

    def test_cut_rejects_foreign_node(self):
        graph = build_phase_graph(identity_config(4), PointerColor.RED)
        with pytest.raises(ValueError, match="outside"):
            edge_boundary(graph, {5})


class TestTextFormat:

    def test_round_trip(self):
        config = random_config(9, np.random.default_rng(11))
        assert parse_config(format_config(config)) == config

    def test_format_is_one_based(self):
        text = format_config(identity_config(3))
        assert text.splitlines()[0] == "N 3"
        assert "red 1 1" in text and "blue 3 3" in text

    def test_missing_header(self):
        with pytest.raises(ValueError, match="missing 'N <n>' header"):
            parse_config("red 1 1\n")

    def test_missing_pointer(self):
        with pytest.raises(ValueError, match="red pointers must be given"):
            parse_config("N 3\nred 1 1\nred 2 2\nblue 1 1\nblue 2 2\nblue 3 3\n")

    def test_bad_line(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_config("N 3\nred one 1\n")

    def test_file_round_trip(self, tmp_path):
        config = random_config(6, np.random.default_rng(2))
        path = write_config(config, tmp_path / "cfg" / "net.txt")
        assert read_config(path) == config
        graph = read_graph(path, PointerColor.BLUE)
        assert np.array_equal(graph.edges, build_phase_graph(config, PointerColor.BLUE).edges)

    def test_raw_graph_file(self, tmp_path):
        graph = PhaseGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 0)])
        path = tmp_path / "raw.txt"
        path.write_text(format_graph(graph), encoding="utf-8")
        loaded = read_graph(path)
        assert loaded.num_edges == 5
        assert loaded.degree.tolist() == [4, 2, 2, 2]
