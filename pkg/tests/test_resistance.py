import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from usflab.forest import sample_wusf
from usflab.lattice import Edge, Window
from usflab.oracles import DenseNetwork, effective_resistance_exact
from usflab.resistance import NonConvergenceError, pcg, reff_to_boundary
import scipy.sparse as sp


def exact_to_boundary(ids, window, n):
    """Exact resistance from the origin to the glued sphere of radius n."""
    box = Window.box(n, window.d)
    ids = window.translate_ids(ids, box)
    bnd = box.norms() == n
    glue = np.where(bnd, box.num_vertices, np.arange(box.num_vertices))
    u, v = box.endpoints(ids)
    keep = glue[u] != glue[v]
    gu, gv = glue[u[keep]], glue[v[keep]]
    nodes = sorted(set(gu.tolist()) | set(gv.tolist()) | {box.index((0,) * window.d), box.num_vertices})
    new = {x: i for i, x in enumerate(nodes)}
    g = DenseNetwork(len(nodes), [(new[a], new[b]) for a, b in zip(gu.tolist(), gv.tolist())])
    return effective_resistance_exact(g, new[box.index((0,) * window.d)], new[box.num_vertices])


def test_straight_path_is_n():
    n = 7
    w = Window.box(n, 2)
    path = w.edges_to_ids([Edge((x, 0), 0) for x in range(0, n)])
    r = reff_to_boundary(path, (0, 0), n, w)
    assert r.resistance == pytest.approx(n, rel=1e-8)


def test_full_box_radius_one():
    w = Window.box(1, 2)
    r = reff_to_boundary(w.edge_ids(), (0, 0), 1, w)
    assert r.resistance == pytest.approx(0.25, rel=1e-8)
    assert float(exact_to_boundary(w.edge_ids(), w, 1)) == pytest.approx(r.resistance, rel=1e-8)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_full_3d_box_matches_exact(n):
    w = Window.box(n, 3)
    r = reff_to_boundary(w.edge_ids(), (0, 0, 0), n, w)
    ex = float(exact_to_boundary(w.edge_ids(), w, n))
    assert abs(r.resistance - ex) <= 1e-8 * ex * 10


def test_3d_full_lattice_increments_shrink():
    w = Window.box(16, 3)
    R = [reff_to_boundary(w.edge_ids(), (0, 0, 0), n, w).resistance for n in (2, 4, 8, 16)]
    inc = np.diff(R)
    assert np.all(inc > 0) and np.all(np.diff(inc) < 0)


@given(st.integers(0, 2**32))
def test_oracle_agreement_random_subgraphs(seed):
    rng = np.random.default_rng(seed)
    w = Window.box(3, 2)
    ids = rng.choice(w.edge_ids(), size=int(rng.integers(10, w.num_edges())), replace=False)
    r = reff_to_boundary(ids, (0, 0), 3, w)
    ex = exact_to_boundary(ids, w, 3)
    if ex == math.inf:
        assert r.resistance == math.inf
    else:
        assert abs(r.resistance - float(ex)) <= 1e-7 * float(ex)


@given(st.integers(0, 2**32))
def test_rayleigh_under_insertion(seed):
    rng = np.random.default_rng(seed)
    w = Window.box(8, 3)
    f = sample_wusf(w, int(rng.integers(2**31)))
    r0 = reff_to_boundary(f.edge_ids, (0, 0, 0), 8, w).resistance
    extra = rng.choice(w.edge_ids(), 200, replace=False)
    r1 = reff_to_boundary(np.union1d(f.edge_ids, extra), (0, 0, 0), 8, w).resistance
    assert r1 <= r0 * (1 + 2e-8)


def test_disconnected_source_is_inf():
    w = Window.box(3, 2)
    r = reff_to_boundary(w.edges_to_ids([Edge((0, 0), 0)]), (0, 0), 3, w)
    assert r.resistance == math.inf


def test_iteration_cap_raises():
    n = 200
    A = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]).tocsr()
    b = np.ones(n)
    with pytest.raises(NonConvergenceError) as err:
        pcg(A, b, tol=1e-12, max_iter=3)
    assert err.value.residual > 0


def test_stats_attached():
    w = Window.box(6, 3)
    r = reff_to_boundary(w.edge_ids(), (0, 0, 0), 6, w)
    assert r.iterations > 0 and r.residual <= 1e-8
    assert r.unknowns == 11 ** 3  # interior of B_6
