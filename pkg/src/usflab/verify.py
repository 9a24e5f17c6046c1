"""Quick oracle and property checks behind ``usflab verify``.

Each check is a function returning a :class:`Check`.  The sizes here are
small so the whole table runs in well under a minute; the acceptance tests
call the same helpers at full size.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np
from scipy import stats

from .boxperc import CLIP, sample_box_percolation
from .forest import Network, order_forest_edges, sample_ust_many
from .lattice import Edge, Window, canonical_edge, cell_of_edge, cell_size, cell_edges, in_cell
from .oracles import (DenseNetwork, SequentialConditioner, bareiss_determinant, determinant,
                      edge_in_ust_probability, effective_resistance_exact)
from .resistance import reff_to_boundary


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


# -- helpers shared with the acceptance tests ----------------------------------------

def cell_partition_failures(d: int, k: int, radius: int) -> int:
    """Edges of B_radius not in exactly one cell, plus cells of the wrong size."""
    window = Window.box(radius, d)
    bad = 0
    offsets = list(product(*[range(-2 * k, 2 * k + 1, 2 * k)] * d))
    for e in window.edges():
        z = cell_of_edge(e, k)
        # brute force over every candidate centre near the edge
        near = [tuple(2 * k * round(b / (2 * k)) + o for b, o in zip(e.base, off)) for off in offsets]
        owners = {c for c in near if in_cell(e, c, k)}
        if owners != {z}:
            bad += 1
    for z in {cell_of_edge(e, k) for e in window.edges()}:
        es = cell_edges(z, k)
        if len(es) != cell_size(d, k) or len(set(es)) != len(es):
            bad += 1
    return bad


def random_cycle(rng: np.random.Generator, d: int) -> list[Edge]:
    """A simple lattice cycle: the loop closed by a random walk at its first self-intersection."""
    path = [(0,) * d]
    seen = {path[0]: 0}
    while True:
        a = int(rng.integers(d))
        s = 1 if rng.random() < 0.5 else -1
        nxt = list(path[-1])
        nxt[a] += s
        nxt = tuple(nxt)
        if len(path) >= 2 and nxt == path[-2]:
            continue  # immediate backtracks make 2-cycles, which are not simple
        if nxt in seen:
            loop = path[seen[nxt]:] + [nxt]
            return [canonical_edge(u, v) for u, v in zip(loop, loop[1:])]
        seen[nxt] = len(path)
        path.append(nxt)


def cycle_shares_cell(cycle: list[Edge], k: int) -> bool:
    cells = [cell_of_edge(e, k) for e in cycle]
    return len(set(cells)) < len(cells)


def tree_frequencies(net: Network, samples: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct sampled trees (rows of edge ids) and their counts."""
    trees = sample_ust_many(net, samples, seed)
    uniq, counts = np.unique(trees, axis=0, return_counts=True)
    return uniq, counts


def random_forest(window: Window, rng: np.random.Generator, keep: float = 0.5) -> list[Edge]:
    """Random acyclic edge set: scan edges in random order, keep each with prob ``keep`` if no cycle."""
    parent = list(range(window.num_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    ids = rng.permutation(window.edge_ids())
    u, v = window.endpoints(ids)
    out = []
    for i, a, b in zip(ids.tolist(), u.tolist(), v.tolist()):
        if rng.random() >= keep:
            continue
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            out.append(window.edge(i))
    return out


def nash_williams_instance(g: DenseNetwork, window: Window, rng: np.random.Generator) -> tuple[Fraction, int]:
    """Reveal a random forest in a random fresh-endpoint order with a random A/B split.

    Returns the smallest conditional probability seen and the number of steps.
    """
    H = random_forest(window, rng)
    order = order_forest_edges(H, rng)
    cond = SequentialConditioner(g)
    low = Fraction(1)
    for e in order:
        p = cond.probability(e)
        low = min(low, p)
        present = p == 1 or (p > 0 and rng.random() < 0.5)
        cond.reveal(e, present)
    return low, len(order)


# -- quick checks ------------------------------------------------------------------

def _timed(fn):
    def wrapper(*a, **kw):
        t = time.perf_counter()
        c = fn(*a, **kw)
        c.seconds = time.perf_counter() - t
        return c
    wrapper.__name__ = fn.__name__
    return wrapper


@_timed
def check_cells(seed: int) -> Check:
    bad = sum(cell_partition_failures(d, k, 2 * k + 1) for d in (2, 3) for k in (1, 2))
    rng = np.random.default_rng(seed)
    miss = sum(not cycle_shares_cell(random_cycle(rng, d), k)
               for d in (2, 3) for k in (1, 2, 3) for _ in range(300))
    return Check("cell partition and cycles", bad == 0 and miss == 0,
                 f"{bad} partition failures, {miss} cycles without a shared cell")


@_timed
def check_ust_small(seed: int) -> Check:
    net = Network(Window((0, 0), (1, 1)), wired=False)
    _, counts = tree_frequencies(net, 20000, seed)
    tv = 0.5 * np.abs(counts / counts.sum() - 0.25).sum()
    ok = len(counts) == 4 and tv < 0.02
    return Check("UST on 2x2 grid", ok, f"{len(counts)} trees, TV distance {tv:.4f}")


@_timed
def check_ust_marginals(seed: int) -> Check:
    net = Network(Window((0, 0), (2, 2)), wired=False)
    g = DenseNetwork.from_network(net)
    N = 50000
    trees = sample_ust_many(net, N, seed)
    worst = 0.0
    for eid in net.window.edge_ids():
        p = float(edge_in_ust_probability(g, net.window.edge(int(eid))))
        phat = np.count_nonzero(trees == eid) / N
        worst = max(worst, abs(phat - p) / np.sqrt(p * (1 - p) / N))
    return Check("UST marginals on 3x3 grid", worst < 4, f"max deviation {worst:.2f} sigma")


@_timed
def check_determinants(seed: int) -> Check:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(20):
        m = rng.integers(-5, 6, size=(6, 6))
        bad += determinant(m) != bareiss_determinant(m.tolist())
        bad += determinant(m) != round(np.linalg.det(m))
    return Check("exact determinants", bad == 0, f"{bad} mismatches in 20 random matrices")


@_timed
def check_nash_williams(seed: int) -> Check:
    rng = np.random.default_rng(seed)
    worst, steps = Fraction(1), 0
    for window in (Window.box(2, 2), Window((0, 0, 0), (1, 1, 1))):
        g = DenseNetwork.from_network(Network(window, wired=True))
        thr = Fraction(1, 2 * window.d)
        for _ in range(20):
            low, s = nash_williams_instance(g, window, rng)
            worst = min(worst, low / thr)
            steps += s
    return Check("conditional probability >= 1/2d", worst >= 1,
                 f"{steps} steps, min p * 2d = {float(worst):.4f}")


@_timed
def check_resistance(seed: int) -> Check:
    window = Window.box(3, 2)
    rng = np.random.default_rng(seed)
    ids = np.sort(rng.choice(window.edge_ids(), size=30, replace=False))
    ids = np.union1d(ids, window.edge_ids()[window.edge_ids() % 2 == 0])
    r = reff_to_boundary(ids, (0, 0), 3, window)
    # exact value: glue the boundary into one vertex
    bnd = window.norms() == 3
    glue = np.where(bnd, window.num_vertices, np.arange(window.num_vertices))
    u, v = window.endpoints(ids)
    keep = glue[u] != glue[v]
    nodes = np.unique(np.concatenate([glue[u[keep]], glue[v[keep]]]))
    new = {x: i for i, x in enumerate(nodes.tolist())}
    g = DenseNetwork(len(nodes), [(new[a], new[b]) for a, b in zip(glue[u[keep]].tolist(), glue[v[keep]].tolist())])
    exact = effective_resistance_exact(g, new[window.index((0, 0))], new[window.num_vertices])
    err = abs(r.resistance - float(exact)) / float(exact)
    return Check("CG resistance vs exact", err < 1e-6, f"relative error {err:.2e}")


@_timed
def check_box_percolation(seed: int) -> Check:
    window = Window.box(24, 2)
    k, eps = 1, 0.5
    N = 100
    ids = window.edge_ids()
    hits = np.zeros(ids.max() + 1)
    for t in range(N):
        s = sample_box_percolation(window, k, eps, seed + t, mode=CLIP)
        full = ~s.clipped & s.is_open
        hits[s.chosen[full]] += 1
    # edges whose cell lies fully inside the window
    from .lattice import cells_of_edges
    base, axis = window.edge_bases(ids)
    z = cells_of_edges(base, axis, k)
    inside = np.all((z - k >= -24) & (z + k <= 24), axis=1)
    p = eps / cell_size(2, k)
    phat = hits[ids[inside]].sum() / (N * inside.sum())
    sigma = np.sqrt(p * (1 - p) / (N * inside.sum()))
    z_ = abs(phat - p) / sigma
    return Check("box percolation marginal", z_ < 4, f"open rate {phat:.5f} vs {p:.5f} ({z_:.2f} sigma)")


CHECKS = (check_cells, check_ust_small, check_ust_marginals, check_determinants,
          check_nash_williams, check_resistance, check_box_percolation)


def run_checks(seed: int = 0) -> list[Check]:
    out = []
    for fn in CHECKS:
        try:
            out.append(fn(seed))
        except Exception as err:  # a crash is a failed check, not a crashed table
            out.append(Check(fn.__name__, False, f"{type(err).__name__}: {err}"))
    return out


def format_table(results: list[Check]) -> str:
    w = max(len(r.name) for r in results)
    lines = [f"{'check'.ljust(w)}  result  detail"]
    for r in results:
        lines.append(f"{r.name.ljust(w)}  {'PASS' if r.passed else 'FAIL'}    {r.detail}")
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return "\n".join(lines)
