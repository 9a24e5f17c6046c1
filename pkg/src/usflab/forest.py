"""Uniform spanning trees and wired spanning forests on lattice windows.

Sampling uses Wilson's algorithm.  Contracted edges are handled by merging
their endpoints into one node before the walk starts; deleted edges are
simply absent.  With wired boundary every lattice edge leaving the window
becomes an edge to a single extra root node, so each window vertex keeps
degree 2d.
"""
from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numba
import numpy as np

from . import seeding
from .connect import union_find_labels
from .lattice import Edge, Window, canonical_edge, format_edges, parse_edge_line


def _ids(edges, window: Window) -> frozenset[int]:
    out = set()
    for e in edges:
        out.add(window.edge_id(e) if isinstance(e, Edge) else int(e))
    return frozenset(out)


@dataclass(frozen=True)
class Network:
    """A lattice window with boundary condition and contraction/deletion constraints.

    ``contracted`` and ``deleted`` hold in-window edge ids.
    """

    window: Window
    wired: bool = True
    contracted: frozenset[int] = frozenset()
    deleted: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "contracted", _ids(self.contracted, self.window))
        object.__setattr__(self, "deleted", _ids(self.deleted, self.window))
        both = self.contracted & self.deleted
        if both:
            raise ValueError(f"edge {self.window.edge(min(both))} is both contracted and deleted")

    @classmethod
    def box(cls, n: int, d: int, wired: bool = True) -> "Network":
        return cls(Window.box(n, d), wired)

    def constrain(self, contracted=(), deleted=()) -> "Network":
        return Network(self.window, self.wired,
                       self.contracted | _ids(contracted, self.window),
                       self.deleted | _ids(deleted, self.window))

    @property
    def root(self) -> int:
        """Node index of the wired boundary vertex (``num_vertices``), or -1."""
        return self.window.num_vertices if self.wired else -1

    def edge_list(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Multigraph edges ``(u, v, key)`` before constraints are applied.

        In-window edges have ``key = edge id >= 0``; wired boundary edges get
        negative keys ``-(1 + 2 * (vertex * d + axis) + side)``.
        """
        W = self.window
        ids = W.edge_ids()
        u, v = W.endpoints(ids)
        us, vs, keys = [u], [v], [ids]
        if self.wired:
            idx = np.arange(W.num_vertices, dtype=np.int64)
            for a in range(W.d):
                c = W.axis_coordinate(a)
                for side, at in ((0, W.lo[a]), (1, W.hi[a])):
                    face = idx[c == at]
                    us.append(face)
                    vs.append(np.full(face.shape, W.num_vertices, dtype=np.int64))
                    keys.append(-(1 + 2 * (face * W.d + a) + side))
        return np.concatenate(us), np.concatenate(vs), np.concatenate(keys)

    def degree(self, v: Sequence[int]) -> int:
        """Degree of window vertex ``v`` in the constrained multigraph (self-loops dropped)."""
        g = _graph(self)
        node = g.node_of[self.window.index(v)]
        return int(g.indptr[node + 1] - g.indptr[node])


@dataclass(frozen=True, eq=False)
class _Graph:
    node_of: np.ndarray      # lattice vertex (or root) -> contracted node
    num_nodes: int
    root: int
    indptr: np.ndarray
    nbr: np.ndarray
    key: np.ndarray
    components: np.ndarray   # connectivity labels of nodes


@lru_cache(maxsize=8)
def _graph(net: Network) -> _Graph:
    W = net.window
    n_lat = W.num_vertices + (1 if net.wired else 0)
    u, v, key = net.edge_list()
    if net.contracted:
        a = np.array(sorted(net.contracted), dtype=np.int64)
        au, av = W.endpoints(a)
        # contracting a cycle would make the constraint infeasible
        parent = {}

        def find(x):
            while parent.get(x, x) != x:
                x = parent[x]
            return x

        for eid, x, y in zip(a, au, av):
            rx, ry = find(int(x)), find(int(y))
            if rx == ry:
                raise ValueError(f"contracted set contains a cycle through {W.edge(int(eid))}")
            parent[max(rx, ry)] = min(rx, ry)
        node_of = union_find_labels(n_lat, au, av)
    else:
        node_of = np.arange(n_lat, dtype=np.int64)
    keep = np.ones(len(key), dtype=bool)
    if net.deleted:
        keep &= ~np.isin(key, np.array(sorted(net.deleted), dtype=np.int64))
    nu, nv = node_of[u], node_of[v]
    keep &= nu != nv
    nu, nv, key = nu[keep], nv[keep], key[keep]
    num_nodes = int(node_of.max()) + 1
    src = np.concatenate([nu, nv])
    dst = np.concatenate([nv, nu])
    kk = np.concatenate([key, key])
    order = np.lexsort((kk, src))
    src, dst, kk = src[order], dst[order], kk[order]
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=num_nodes), out=indptr[1:])
    root = int(node_of[W.num_vertices]) if net.wired else int(node_of[0])
    comps = union_find_labels(num_nodes, nu, nv)
    return _Graph(node_of, num_nodes, root, indptr, dst, kk, comps)


def _check_connected(net: Network, g: _Graph) -> None:
    bad = np.flatnonzero(g.components != g.components[g.root])
    if bad.size:
        lat = np.flatnonzero(np.isin(g.node_of[: net.window.num_vertices], bad))
        v = net.window.coords(int(lat[0]))
        raise ValueError(f"network is disconnected: vertex {v} is separated from the root")


@numba.njit(cache=True)
def _wilson(indptr, nbr, key, root, rng, out_key):
    n = indptr.shape[0] - 1
    in_tree = np.zeros(n, dtype=np.bool_)
    in_tree[root] = True
    nxt = np.empty(n, dtype=np.int64)
    nxt_key = np.empty(n, dtype=np.int64)
    m = 0
    for start in range(n):
        x = start
        while not in_tree[x]:
            deg = indptr[x + 1] - indptr[x]
            j = indptr[x] + np.int64(rng.random() * deg)
            nxt[x] = nbr[j]
            nxt_key[x] = key[j]
            x = nbr[j]
        x = start
        while not in_tree[x]:
            in_tree[x] = True
            out_key[m] = nxt_key[x]
            m += 1
            x = nxt[x]
    return m


@numba.njit(cache=True)
def _wilson_many(indptr, nbr, key, root, rng, count, out):
    for s in range(count):
        _wilson(indptr, nbr, key, root, rng, out[s])


def _tree_ids(net: Network, keys: np.ndarray) -> np.ndarray:
    ids = keys[keys >= 0]
    if net.contracted:
        ids = np.concatenate([ids, np.array(sorted(net.contracted), dtype=np.int64)])
    return np.sort(ids)


@dataclass(frozen=True, eq=False)
class Forest:
    """An acyclic set of in-window edges (ids of ``window``)."""

    window: Window
    edge_ids: np.ndarray
    seed: int | None = None
    k: int = 0

    def __post_init__(self):
        ids = np.unique(np.asarray(self.edge_ids, dtype=np.int64))
        object.__setattr__(self, "edge_ids", ids)

    @classmethod
    def from_edges(cls, window: Window, edges: Iterable[Edge], **kw) -> "Forest":
        return cls(window, window.edges_to_ids(edges), **kw)

    def __len__(self) -> int:
        return len(self.edge_ids)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Forest) and self.window == other.window
                and np.array_equal(self.edge_ids, other.edge_ids))

    def __contains__(self, e: Edge) -> bool:
        try:
            eid = self.window.edge_id(e)
        except KeyError:
            return False
        i = np.searchsorted(self.edge_ids, eid)
        return bool(i < len(self.edge_ids) and self.edge_ids[i] == eid)

    @property
    def edges(self) -> list[Edge]:
        return self.window.ids_to_edges(self.edge_ids)

    @cached_property
    def component_ids(self) -> np.ndarray:
        u, v = self.window.endpoints(self.edge_ids)
        return union_find_labels(self.window.num_vertices, u, v)

    def is_acyclic(self) -> bool:
        n_comp = int(self.component_ids.max()) + 1
        return len(self) == self.window.num_vertices - n_comp

    def restrict(self, window: Window) -> "Forest":
        return Forest(window, self.window.translate_ids(self.edge_ids, window), self.seed, self.k)

    # snapshot format: "d k seed" header then one canonical edge per line
    def to_text(self) -> str:
        seed = "-" if self.seed is None else str(self.seed)
        lo = ",".join(map(str, self.window.lo))
        hi = ",".join(map(str, self.window.hi))
        lines = [f"{self.window.d} {self.k} {seed}", f"# window {lo} {hi}"]
        lines += format_edges(self.edges)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, window: Window | None = None) -> "Forest":
        lines = text.splitlines()
        d, k, seed = lines[0].split()
        edges = []
        for line in lines[1:]:
            if line.startswith("# window") and window is None:
                _, _, lo, hi = line.split()
                window = Window(tuple(map(int, lo.split(","))), tuple(map(int, hi.split(","))))
            elif line.strip() and not line.startswith("#"):
                edges.append(parse_edge_line(line))
        if window is None:
            raise ValueError("snapshot has no window line and none was given")
        if window.d != int(d):
            raise ValueError("snapshot dimension does not match window")
        return cls.from_edges(window, edges, seed=None if seed == "-" else int(seed), k=int(k))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path, window: Window | None = None) -> "Forest":
        return cls.from_text(Path(path).read_text(), window)


def sample_ust(net: Network, seed: int | np.random.Generator | None = None) -> Forest:
    """Uniform spanning tree of the constrained network, restricted to the window."""
    g = _graph(net)
    _check_connected(net, g)
    out = np.empty(g.num_nodes, dtype=np.int64)
    m = _wilson(g.indptr, g.nbr, g.key, g.root, seeding.rng(seed), out)
    return Forest(net.window, _tree_ids(net, out[:m]), seed if isinstance(seed, int) else None)


def sample_ust_many(net: Network, count: int, seed: int | None = None) -> np.ndarray:
    """``count`` independent trees as a (count, num_edges) array of sorted edge ids.

    Boundary edges of a wired network are reported as -1 and sorted first.
    """
    g = _graph(net)
    _check_connected(net, g)
    out = np.empty((count, g.num_nodes - 1), dtype=np.int64)
    _wilson_many(g.indptr, g.nbr, g.key, g.root, seeding.rng(seed), count, out)
    out[out < 0] = -1
    out.sort(axis=1)
    if net.contracted:
        a = np.array(sorted(net.contracted), dtype=np.int64)
        out = np.sort(np.concatenate([out, np.broadcast_to(a, (count, len(a)))], axis=1), axis=1)
    return out


def padded_window(window: Window, padding: int | None = None) -> Window:
    if padding is None:
        half = max(b - a for a, b in zip(window.lo, window.hi)) / 2
        padding = math.ceil(half / 2)
    return Window(tuple(a - padding for a in window.lo), tuple(b + padding for b in window.hi))


def sample_wusf(window: Window, seed: int | np.random.Generator | None = None,
                padding: int | None = None) -> Forest:
    """Approximate WUSF on Z^d seen through ``window``.

    Wired UST on the window padded by ``padding`` (default half the
    window's half-width) restricted back to the window.
    """
    big = padded_window(window, padding)
    f = sample_ust(Network(big, wired=True), seed)
    return Forest(window, big.translate_ids(f.edge_ids, window), f.seed)


def bernoulli_thin(f: Forest, eps: float, seed: int | np.random.Generator | None = None) -> Forest:
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    keep = seeding.rng(seed).random(len(f)) < eps
    return Forest(f.window, f.edge_ids[keep], f.seed, f.k)


def _endpoints(e) -> tuple:
    if isinstance(e, Edge):
        return e.endpoints
    u, v = e
    return tuple(u), tuple(v)


def order_forest_edges(H: Iterable, rng: np.random.Generator | None = None) -> list:
    """Order an acyclic edge set so every edge meets a not-yet-seen vertex.

    Trees are explored breadth-first from their lexicographically smallest
    vertex and concatenated in root order.  With ``rng`` the roots, the tree
    order and the exploration order are randomised instead.
    """
    edges = list(dict.fromkeys(H))
    adj = defaultdict(list)
    for e in edges:
        u, v = _endpoints(e)
        adj[u].append((v, e))
        adj[v].append((u, e))
    seen = set()
    used = set()
    trees = []
    for r in sorted(adj):
        if r in seen:
            continue
        comp = []
        stack = [r]
        seen.add(r)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y, e in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        trees.append(sorted(comp))
    if rng is not None:
        trees = [trees[i] for i in rng.permutation(len(trees))]
    out = []
    seen.clear()
    for comp in trees:
        root = comp[0] if rng is None else comp[int(rng.integers(len(comp)))]
        seen.add(root)
        queue = deque([root])
        while queue:
            x = queue.popleft()
            nbrs = sorted(adj[x]) if rng is None else [adj[x][i] for i in rng.permutation(len(adj[x]))]
            for y, e in nbrs:
                if e in used:
                    continue
                if y in seen:
                    raise ValueError(f"edge set contains a cycle through {e}")
                used.add(e)
                seen.add(y)
                out.append(e)
                queue.append(y)
    return out


def is_fresh_endpoint_order(order: Sequence) -> bool:
    """True iff each edge has an endpoint untouched by all earlier edges."""
    touched = set()
    for e in order:
        u, v = _endpoints(e)
        if u in touched and v in touched:
            return False
        touched.update((u, v))
    return True
