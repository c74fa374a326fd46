import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sliceplace.topology import (AllocationRecord, InsufficientCapacity, NetworkGraph, TopologyError,
                                 community_graph, format_topology, load_topology, parse_topology,
                                 randomize_capacities)


def rec(rid, node=None, link=None, arrival=1, expiry=5):
    node = {n: np.asarray(d, dtype=float) for n, d in (node or {}).items()}
    return AllocationRecord(rid, arrival, expiry, node, dict(link or {}))


class TestConstruction:
    def test_disconnected_rejected(self):
        with pytest.raises(TopologyError, match="disconnected"):
            NetworkGraph(4, [(0, 1), (2, 3)])

    @pytest.mark.parametrize("edges", [[(0, 0)], [(0, 1), (1, 0)], [(0, 5)]])
    def test_bad_edges(self, edges):
        with pytest.raises(TopologyError):
            NetworkGraph(2, edges)

    def test_negative_capacity(self):
        with pytest.raises(TopologyError):
            NetworkGraph(2, [(0, 1)], link_capacity=[-1.0])

    def test_link_ids_follow_edge_order(self, square):
        assert square.link_between(2, 0) == 4
        assert square.link_between(1, 0) == 0
        assert sorted(square.neighbors(0)) == [1, 2, 3]

    def test_to_networkx(self, square):
        g = square.to_networkx()
        assert g.number_of_nodes() == 4 and g.number_of_edges() == 5


class TestAllocation:
    def test_allocate_and_release_restore_exactly(self, path4):
        path4.allocate(rec(1, {0: [10, 20, 30, 40], 1: [1, 1, 1, 1]}, {0: 50.0}))
        assert path4.node_available[0].tolist() == [90, 80, 70, 60]
        assert path4.link_available[0] == 150
        path4.check_invariants()
        path4.release(1)
        assert np.array_equal(path4.node_available, path4.node_capacity)
        assert np.array_equal(path4.link_available, path4.link_capacity)

    def test_overflow_is_atomic(self, path4):
        before_n, before_l = path4.node_available.copy(), path4.link_available.copy()
        with pytest.raises(InsufficientCapacity) as info:
            path4.allocate(rec(1, {0: [10, 10, 10, 10], 2: [10, 10, 101, 10]}, {0: 5.0}))
        assert info.value.kind == "node" and info.value.index == 2 and info.value.resource == 2
        assert np.array_equal(path4.node_available, before_n)
        assert np.array_equal(path4.link_available, before_l)
        assert not path4.ledger

    def test_link_overflow(self, path4):
        with pytest.raises(InsufficientCapacity) as info:
            path4.allocate(rec(1, link={1: 200.5}))
        assert info.value.kind == "link" and info.value.index == 1

    def test_exact_fit_accepted(self, path4):
        path4.allocate(rec(1, {3: [100, 100, 100, 100]}, {2: 200.0}))
        assert path4.node_available[3].sum() == 0

    def test_duplicate_id(self, path4):
        path4.allocate(rec(1, {0: [1, 1, 1, 1]}))
        with pytest.raises(ValueError):
            path4.allocate(rec(1, {1: [1, 1, 1, 1]}))

    def test_release_expired_uses_expiry_slot(self, path4):
        path4.allocate(rec(1, {0: [1, 1, 1, 1]}, expiry=4))
        path4.allocate(rec(2, {0: [1, 1, 1, 1]}, expiry=6))
        assert path4.release_expired(3) == 0
        assert path4.release_expired(4) == 1
        assert list(path4.ledger) == [2]
        assert path4.release_expired(10) == 1

    def test_record_validation(self):
        with pytest.raises(ValueError):
            rec(1, {0: [1, 0, 1, 1]})
        with pytest.raises(ValueError):
            rec(1, link={0: 0.0})
        with pytest.raises(ValueError):
            rec(1, arrival=3, expiry=3)

    def test_utilization(self, path4):
        path4.allocate(rec(1, {0: [25, 50, 75, 100]}, {2: 100.0}))
        assert path4.node_utilization()[0].tolist() == [0.25, 0.5, 0.75, 1.0]
        assert path4.link_utilization().tolist() == [0, 0, 0.5]

    def test_invariant_check_detects_drift(self, path4):
        path4.allocate(rec(1, {0: [1, 1, 1, 1]}))
        path4.node_available[0, 0] += 0.5
        with pytest.raises(AssertionError, match="conservation"):
            path4.check_invariants()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.floats(0.5, 60), st.integers(0, 2), st.floats(1, 120),
                          st.integers(1, 6)), min_size=1, max_size=30))
def test_conservation_under_random_lease_sequences(ops):
    g = NetworkGraph(4, [(0, 1), (1, 2), (2, 3)], node_capacity=np.full((4, 4), 100.0),
                     link_capacity=np.full(3, 200.0))
    for t, (node, amount, link, bw, life) in enumerate(ops, start=1):
        g.release_expired(t)
        try:
            g.allocate(rec(t, {node: [amount] * 4}, {link: bw}, arrival=t, expiry=t + life))
        except InsufficientCapacity:
            pass
        g.check_invariants()
        assert np.all(g.node_available >= 0) and np.all(g.link_available >= 0)
    g.release_expired(len(ops) + 10)
    assert not g.ledger
    assert np.array_equal(g.node_available, g.node_capacity)
    assert np.array_equal(g.link_available, g.link_capacity)


class TestRandomize:
    def test_ranges_and_overrides(self):
        g = parse_topology("nodes 3\n0 1\n1 2\nnode 1 1 2 3 4\nlink 1 2 77\n")
        randomize_capacities(g, (5, 1000), (500, 5000), rng=3)
        mask = np.ones(3, bool)
        mask[1] = False
        assert np.all((g.node_capacity[mask] >= 5) & (g.node_capacity[mask] <= 1000))
        assert g.node_capacity[1].tolist() == [1, 2, 3, 4]
        assert g.link_capacity[g.link_between(1, 2)] == 77
        assert 500 <= g.link_capacity[0] <= 5000
        assert np.array_equal(g.node_available, g.node_capacity)

    def test_reproducible(self):
        a = randomize_capacities(load_topology("geant"), rng=11)
        b = randomize_capacities(load_topology("geant"), rng=11)
        assert np.array_equal(a.node_capacity, b.node_capacity)

    def test_invalid_range(self, path4):
        with pytest.raises(ValueError):
            randomize_capacities(path4, (10, 5))

    def test_refuses_with_live_allocations(self, path4):
        path4.allocate(rec(1, {0: [1, 1, 1, 1]}))
        with pytest.raises(ValueError):
            randomize_capacities(path4)


class TestParsing:
    def test_roundtrip_with_capacities(self):
        g = randomize_capacities(community_graph([4, 4], 12, 0.2, rng=1), rng=2)
        h = parse_topology(format_topology(g, with_capacities=True, comment="x\ny"))
        assert h.edges == g.edges
        assert np.array_equal(h.node_capacity, g.node_capacity)
        assert np.array_equal(h.link_capacity, g.link_capacity)

    @pytest.mark.parametrize("text, msg", [
        ("0 1\n", "header"),
        ("nodes 2\n0 x\n", "integer"),
        ("nodes 2\n0 1\nnode 0 1 2 3\n", "node <id>"),
        ("nodes 2\n0 1\nnode 0 1 2 3 -4\n", "non-negative"),
        ("nodes 3\n0 1\n1 2\nlink 0 2 5\n", "missing link"),
        ("nodes 2\n0 1 2\n", "cannot parse"),
        ("", "header"),
    ])
    def test_errors(self, text, msg):
        with pytest.raises(TopologyError, match=msg):
            parse_topology(text)

    def test_builtins(self):
        geant, dt2 = load_topology("geant"), load_topology("dt2")
        assert (geant.n_nodes, geant.n_links) == (22, 33)
        assert (dt2.n_nodes, dt2.n_links) == (68, 272)
        assert geant.name == "geant"

    def test_load_from_path(self, tmp_path):
        p = tmp_path / "tri.edges"
        p.write_text("nodes 3\n0 1\n1 2\n2 0\n")
        g = load_topology(str(p))
        assert g.name == "tri" and g.n_links == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_topology(str(tmp_path / "nope.edges"))


def test_community_graph_exact_link_count():
    g = community_graph([14, 14, 14, 13, 13], 272, 0.15, rng=0)
    assert g.n_nodes == 68 and g.n_links == 272 and g.is_connected()
    # the shipped DT2-like file is this exact draw
    assert load_topology("dt2").edges == g.edges
