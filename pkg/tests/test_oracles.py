import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from usflab.forest import Network
from usflab.lattice import Edge, Window
from usflab.oracles import (DenseNetwork, OracleSizeError, SequentialConditioner,
                            bareiss_determinant, conditional_edge_probability, determinant,
                            edge_in_ust_probability, effective_resistance_exact,
                            spanning_tree_count)
from usflab.verify import nash_williams_instance

C4 = DenseNetwork(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


def enumerate_trees(n, edges):
    """Spanning trees by brute force over edge subsets."""
    count = 0
    for sub in itertools.combinations(range(len(edges)), n - 1):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        ok = True
        for i in sub:
            a, b = find(edges[i][0]), find(edges[i][1])
            if a == b:
                ok = False
                break
            parent[a] = b
        count += ok
    return count


def grid_graph(a, b):
    idx = {(x, y): x * b + y for x in range(a) for y in range(b)}
    edges = [(idx[p], idx[(p[0] + dx, p[1] + dy)]) for p in idx for dx, dy in ((1, 0), (0, 1))
             if (p[0] + dx, p[1] + dy) in idx]
    return DenseNetwork(a * b, edges)


def test_tree_counts():
    assert spanning_tree_count(C4) == 4 == enumerate_trees(4, C4.edges)
    g = grid_graph(3, 3)
    assert spanning_tree_count(g) == 192 == enumerate_trees(9, g.edges)
    assert spanning_tree_count(DenseNetwork(4, [(0, 1), (1, 2), (1, 3)])) == 1
    assert spanning_tree_count(DenseNetwork(4, [(0, 1), (2, 3)])) == 0


@given(st.integers(0, 2**32))
def test_tree_count_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    m = int(rng.integers(n - 1, n + 4))
    edges = [tuple(int(x) for x in rng.choice(n, 2, replace=False)) for _ in range(m)]
    g = DenseNetwork(n, edges)
    assert spanning_tree_count(g) == enumerate_trees(n, edges)


def test_bareiss_matches_float_det():
    rng = np.random.default_rng(0)
    for n in range(1, 8):
        m = rng.integers(-9, 10, size=(n, n))
        assert bareiss_determinant(m.tolist()) == round(np.linalg.det(m)) == determinant(m)
    assert bareiss_determinant([[0, 1], [1, 0]]) == -1


def test_edge_probabilities():
    assert all(edge_in_ust_probability(C4, i) == Fraction(3, 4) for i in range(4))
    path = DenseNetwork(3, [(0, 1), (1, 2)], keys=["a", "b"])
    assert edge_in_ust_probability(path, "a") == 1
    par = DenseNetwork(2, [(0, 1), (0, 1)], keys=["x", "y"])
    assert edge_in_ust_probability(par, "x") == edge_in_ust_probability(par, "y") == Fraction(1, 2)
    with pytest.raises(KeyError):
        edge_in_ust_probability(C4, 9)


def test_probabilities_sum_to_n_minus_1():
    net = Network(Window.box(1, 2), wired=True)
    g = DenseNetwork.from_network(net)
    assert sum(edge_in_ust_probability(g, k) for k in g.keys) == g.num_vertices - 1


def test_conditional_examples():
    assert conditional_edge_probability(C4, 0) == edge_in_ust_probability(C4, 0)
    assert conditional_edge_probability(C4, 0, A=[2]) == Fraction(2, 3)
    with pytest.raises(ValueError):
        conditional_edge_probability(C4, 0, A=[0])
    with pytest.raises(KeyError):
        conditional_edge_probability(C4, 99)
    path = DenseNetwork(3, [(0, 1), (1, 2)])
    with pytest.raises(ValueError):
        conditional_edge_probability(path, 0, B=[1])


def test_resistance_examples():
    assert effective_resistance_exact(DenseNetwork(2, [(0, 1)]), 0, 1) == 1
    two_paths = DenseNetwork(4, [(0, 2), (2, 1), (0, 3), (3, 1)])
    assert effective_resistance_exact(two_paths, 0, 1) == 1
    assert effective_resistance_exact(C4, 0, 1) == Fraction(3, 4)
    assert effective_resistance_exact(DenseNetwork(3, [(0, 1)]), 0, 2) == math.inf
    with pytest.raises(ValueError):
        effective_resistance_exact(C4, 1, 1)


def test_kirchhoff_edge_probability_is_resistance():
    g = grid_graph(3, 3)
    for i, (a, b) in enumerate(g.edges):
        assert edge_in_ust_probability(g, i) == effective_resistance_exact(g, a, b)


@given(st.integers(0, 2**32))
def test_rayleigh_monotonicity(seed):
    rng = np.random.default_rng(seed)
    g = grid_graph(3, 3)
    i = int(rng.integers(len(g.edges)))
    a, b = 0, 8
    r = effective_resistance_exact(g, a, b)
    assert effective_resistance_exact(g.minor(delete=[i]), a, b) >= r
    h = g.minor(contract=[i])
    # map terminals through the contraction
    x, y = g.edges[i]
    lo, hi = min(x, y), max(x, y)
    new = lambda v: (lo if v == hi else v) - (v > hi)
    if new(a) != new(b):
        assert effective_resistance_exact(h, new(a), new(b)) <= r


def test_minor_keeps_parallel_edges():
    tri = DenseNetwork(3, [(0, 1), (1, 2), (2, 0)])
    h = tri.minor(contract=[0])
    assert h.num_vertices == 2 and len(h.edges) == 2
    assert edge_in_ust_probability(h, 1) == Fraction(1, 2)
    with pytest.raises(ValueError):
        C4.minor(contract=[0, 1, 2, 3])


def test_size_bound():
    with pytest.raises(OracleSizeError):
        DenseNetwork(10, [], max_vertices=5)


def test_sequential_conditioner_matches_direct():
    net = Network(Window.box(1, 2), wired=True)
    g = DenseNetwork.from_network(net)
    cond = SequentialConditioner(g)
    A, B = [], []
    rng = np.random.default_rng(2)
    for key in [Edge((0, 0), 0), Edge((-1, 0), 0), Edge((0, -1), 1), Edge((0, 0), 1)]:
        p = cond.probability(key)
        assert p == conditional_edge_probability(g, key, A, B)
        present = p == 1 or (p > 0 and rng.random() < 0.5)
        cond.reveal(key, present)
        (A if present else B).append(key)


def test_nash_williams_5x5():
    w = Window.box(2, 2)
    g = DenseNetwork.from_network(Network(w, wired=True))
    rng = np.random.default_rng(7)
    for _ in range(30):
        low, _ = nash_williams_instance(g, w, rng)
        assert low >= Fraction(1, 4)


def test_from_network_degrees_and_dump():
    g = DenseNetwork.from_network(Network(Window.box(1, 2), wired=True))
    deg = np.bincount(np.array(g.edges).ravel(), minlength=g.num_vertices)
    assert np.all(deg[:9] == 4) and g.wired_vertex == 9 and deg[9] == 12
    assert g.dump().startswith("# vertices 10 wired 9")
