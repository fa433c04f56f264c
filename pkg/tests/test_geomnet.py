import json

import numpy as np
import pytest

from adhocnet import (
    AdHocNetwork, LinkGraph, RadioParams, SpatialLayout, build_min_degree_network,
    generate_layout, is_strongly_connected, step_down, step_up,
)
from adhocnet.errors import InvalidParameterError

from oracles import forcing_fixed_point

# nodes on a line at x = 0, 1, 3, 7, 12 (scaled); no distance ties anywhere
LINE = SpatialLayout(np.array([[0.0, 0.5], [0.05, 0.5], [0.15, 0.5], [0.35, 0.5], [0.6, 0.5]]))


def adjacency(pairs, n=5):
    adj = np.zeros((n, n), bool)
    for a, b in pairs:
        adj[a, b] = True
    return adj


@pytest.fixture
def line_net():
    return build_min_degree_network(LINE, RadioParams(), k_min=1)


def test_generate_layout_basic():
    lay = generate_layout(2, 3)
    assert lay.positions.shape == (2, 2)
    assert np.all((lay.positions >= 0) & (lay.positions <= 1))
    np.testing.assert_array_equal(generate_layout(300, 5).positions, generate_layout(300, 5).positions)
    assert not np.array_equal(generate_layout(300, 5).positions, generate_layout(300, 6).positions)


@pytest.mark.parametrize("n", [0, 1, -3])
def test_generate_layout_rejects_small(n):
    with pytest.raises(InvalidParameterError):
        generate_layout(n, 0)


def test_two_node_network():
    lay = SpatialLayout(np.array([[0.1, 0.2], [0.4, 0.6]]))
    net = build_min_degree_network(lay, RadioParams(alpha=2.0, snr=1.0), k_min=1)
    r2 = 0.3 ** 2 + 0.4 ** 2
    assert net.powers == pytest.approx([r2, r2], rel=1e-15)
    assert net.bidirected_edges() == {(0, 1)}


@pytest.mark.parametrize("k", [0, 5, -1])
def test_k_min_out_of_range(k):
    with pytest.raises(InvalidParameterError):
        build_min_degree_network(LINE, k_min=k)


def test_line_fixture_by_hand(line_net):
    np.testing.assert_array_equal(line_net.rungs, [1, 2, 3, 2, 1])
    np.testing.assert_array_equal(line_net.floor_rungs, [1, 2, 3, 2, 1])
    expected = adjacency([(0, 1), (1, 0), (1, 2), (2, 1), (2, 0), (2, 3), (3, 2), (3, 4), (4, 3)])
    np.testing.assert_array_equal(line_net.adj, expected)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("k_min", [1, 2, 3])
def test_forcing_matches_fixed_point_oracle(seed, k_min):
    lay = generate_layout(5 + seed % 4, seed)
    net = build_min_degree_network(lay, k_min=k_min)
    P, adj, _ = forcing_fixed_point(lay.positions, k_min)
    np.testing.assert_array_equal(net.adj, adj)
    assert net.powers == pytest.approx(P, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_powers_are_minimal(seed):
    lay = generate_layout(8, 100 + seed)
    net = build_min_degree_network(lay, k_min=2)
    _, _, closest = forcing_fixed_point(lay.positions, 2)
    for i in range(net.n):
        low = net.copy()
        low.set_rung(i, int(net.rungs[i]) - 1)
        bid = low.bidirected
        broken = any(not bid[a, b] for a in range(net.n) for b in closest[a])
        assert broken or low.degree().min() < 2


def test_min_degree_and_links_from_powers():
    net = build_min_degree_network(generate_layout(200, 4), k_min=8)
    assert net.degree().min() >= 8
    p = net.powers
    expect = net.cost <= p[:, None]
    np.fill_diagonal(expect, False)
    np.testing.assert_array_equal(net.adj, expect)
    assert is_strongly_connected(net)


def test_some_links_are_one_directed():
    net = build_min_degree_network(generate_layout(300, 1), k_min=8)
    assert (net.adj & ~net.adj.T).any()


def test_determinism():
    a = build_min_degree_network(generate_layout(50, 9), k_min=4)
    b = build_min_degree_network(generate_layout(50, 9), k_min=4)
    assert a == b


def test_same_positions_across_k_min():
    a = build_min_degree_network(generate_layout(300, 1), k_min=8)
    b = build_min_degree_network(generate_layout(300, 1), k_min=12)
    np.testing.assert_array_equal(a.layout.positions, b.layout.positions)
    assert b.degree().mean() > a.degree().mean()
    assert np.all(b.rungs >= a.rungs)


def test_strong_connectivity_fixtures():
    assert is_strongly_connected(LinkGraph.complete(3))
    assert not is_strongly_connected(LinkGraph.from_edges(4, [(0, 1), (2, 3)]))
    assert not is_strongly_connected(LinkGraph.from_edges(2, [], directed=[(0, 1)]))


def test_step_up_without_side_effect(line_net):
    changed = step_up(line_net, 0)
    assert changed == {0}
    expected = adjacency([(0, 1), (0, 2), (1, 0), (1, 2), (2, 1), (2, 0), (2, 3), (3, 2), (3, 4), (4, 3)])
    np.testing.assert_array_equal(line_net.adj, expected)


def test_step_up_forces_new_neighbor(line_net):
    changed = step_up(line_net, 4)
    assert changed == {2, 4}
    np.testing.assert_array_equal(line_net.rungs, [1, 2, 4, 2, 2])
    expected = adjacency([(0, 1), (1, 0), (1, 2), (2, 0), (2, 1), (2, 3), (2, 4),
                          (3, 2), (3, 4), (4, 3), (4, 2)])
    np.testing.assert_array_equal(line_net.adj, expected)


def test_step_down_relaxes_lost_neighbor(line_net):
    start = line_net.copy()
    step_up(line_net, 4)
    changed = step_down(line_net, 4)
    assert changed == {2, 4}
    assert line_net == start


def test_step_down_at_floor_refused(line_net):
    before = line_net.copy()
    for i in range(5):
        assert step_down(line_net, i) == frozenset()
    assert line_net == before


def test_step_up_at_top_refused():
    net = build_min_degree_network(generate_layout(3, 2), k_min=2)
    assert step_up(net, 0) == frozenset()


def test_up_down_inverse_on_random_network():
    net = build_min_degree_network(generate_layout(60, 3), k_min=8)
    start = net.copy()
    checked = 0
    for i in range(60):
        if step_up(net, i) == {i}:
            step_down(net, i)
            assert net == start
            checked += 1
        else:
            net = start.copy()
    assert checked > 10


def test_random_moves_keep_invariants():
    net = build_min_degree_network(generate_layout(120, 8), k_min=8)
    rng = np.random.default_rng(0)
    for _ in range(300):
        i = int(rng.integers(net.n))
        (step_up if rng.random() < 0.5 else step_down)(net, i)
        assert np.all(net.rungs >= net.floor_rungs)
    fresh = AdHocNetwork(net.layout, net.params, net.k_min, net.rungs, net.floor_rungs)
    np.testing.assert_array_equal(fresh.adj, net.adj)
    assert is_strongly_connected(net)


def test_json_round_trip():
    net = build_min_degree_network(generate_layout(40, 12), k_min=5)
    step_up(net, 3)
    doc = json.loads(json.dumps(net.to_dict()))
    back = AdHocNetwork.from_dict(doc)
    assert back == net
    np.testing.assert_array_equal(back.adj, net.adj)
    assert set(doc) == {"n", "seed", "alpha", "snr", "k_min", "positions", "rungs", "floor_rungs"}
