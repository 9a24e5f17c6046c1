"""Exact small-network ground truth via the matrix-tree theorem.

Everything here is exact: determinants are computed over the integers with
fraction-free (Bareiss) elimination, or by FLINT when python-flint is
importable, and probabilities are returned as :class:`fractions.Fraction`.
Networks above the size bound are refused rather than approximated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable

import numpy as np

from .lattice import Edge

try:
    import flint
except ImportError:  # pragma: no cover - exercised only without python-flint
    flint = None

DEFAULT_MAX_VERTICES = 4096


class OracleSizeError(ValueError):
    pass


def bareiss_determinant(rows: list[list[int]]) -> int:
    """Determinant of an integer matrix by fraction-free elimination."""
    m = [list(map(int, r)) for r in rows]
    n = len(m)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k]:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        pk, rk = m[k][k], m[k]
        for i in range(k + 1, n):
            ri = m[i]
            a = ri[k]
            ri[k + 1:] = [(pk * ri[j] - a * rk[j]) // prev for j in range(k + 1, n)]
        prev = pk
    return sign * m[-1][-1]


def determinant(mat: np.ndarray) -> int:
    mat = np.asarray(mat)
    n = mat.shape[0]
    if n == 0:
        return 1
    if flint is not None:
        return int(flint.fmpz_mat(n, n, [int(x) for x in mat.ravel()]).det())
    return bareiss_determinant(mat.tolist())


def _laplacian(n: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    L = np.zeros((n, n), dtype=np.int64)
    keep = u != v
    u, v = u[keep], v[keep]
    np.add.at(L, (u, v), -1)
    np.add.at(L, (v, u), -1)
    L[np.diag_indices(n)] = -L.sum(axis=1)
    return L


def _tree_count(n: int, u: np.ndarray, v: np.ndarray) -> int:
    if n <= 1:
        return 1
    return determinant(_laplacian(n, u, v)[1:, 1:])


@dataclass
class DenseNetwork:
    """Small multigraph with unit conductances.

    ``keys[i]`` labels edge ``edges[i]``; parallel edges are distinct keys.
    """

    num_vertices: int
    edges: list[tuple[int, int]]
    keys: list[Hashable] | None = None
    wired_vertex: int | None = None
    max_vertices: int = DEFAULT_MAX_VERTICES
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.num_vertices > self.max_vertices:
            raise OracleSizeError(
                f"{self.num_vertices} vertices exceeds the exact-oracle bound {self.max_vertices}")
        self.edges = [(int(a), int(b)) for a, b in self.edges]
        if self.keys is None:
            self.keys = list(range(len(self.edges)))
        if len(self.keys) != len(self.edges):
            raise ValueError("keys and edges differ in length")
        for a, b in self.edges:
            if not (0 <= a < self.num_vertices and 0 <= b < self.num_vertices):
                raise ValueError(f"edge ({a}, {b}) has an endpoint out of range")
        self._index = {k: i for i, k in enumerate(self.keys)}
        if len(self._index) != len(self.keys):
            raise ValueError("edge keys must be unique")

    @classmethod
    def from_network(cls, net, max_vertices: int = DEFAULT_MAX_VERTICES) -> "DenseNetwork":
        """Unconstrained multigraph of a lattice :class:`~usflab.forest.Network`.

        In-window edges are keyed by :class:`Edge`; wired boundary edges by
        their negative integer key.  Constraints of ``net`` are applied.
        """
        W = net.window
        n = W.num_vertices + (1 if net.wired else 0)
        u, v, key = net.edge_list()
        keys = [W.edge(int(k)) if k >= 0 else int(k) for k in key]
        g = cls(n, list(zip(u.tolist(), v.tolist())), keys,
                wired_vertex=W.num_vertices if net.wired else None, max_vertices=max_vertices)
        if net.contracted or net.deleted:
            g = g.minor(contract=[W.edge(i) for i in net.contracted],
                        delete=[W.edge(i) for i in net.deleted])
        return g

    def index(self, key: Hashable) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise KeyError(f"edge {key!r} is not in the network") from None

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.edges:
            z = np.zeros(0, dtype=np.int64)
            return z, z
        a = np.array(self.edges, dtype=np.int64)
        return a[:, 0], a[:, 1]

    def laplacian(self) -> np.ndarray:
        return _laplacian(self.num_vertices, *self.arrays())

    def minor(self, contract: Iterable[Hashable] = (), delete: Iterable[Hashable] = ()) -> "DenseNetwork":
        """``(self / contract) minus delete``; loops created by contraction are dropped.

        Raises ``ValueError`` when the contracted set contains a cycle.
        """
        contract, delete = list(contract), set(delete)
        if delete & set(contract):
            raise ValueError("an edge cannot be both contracted and deleted")
        parent = list(range(self.num_vertices))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for key in contract:
            a, b = self.edges[self.index(key)]
            ra, rb = find(a), find(b)
            if ra == rb:
                raise ValueError(f"contracted set contains a cycle through {key!r}")
            parent[max(ra, rb)] = min(ra, rb)
        roots = sorted({find(x) for x in range(self.num_vertices)})
        new = {r: i for i, r in enumerate(roots)}
        for key in delete:
            self.index(key)
        gone = set(contract) | delete
        edges, keys = [], []
        for (a, b), key in zip(self.edges, self.keys):
            if key in gone:
                continue
            a, b = new[find(a)], new[find(b)]
            if a != b:
                edges.append((a, b))
                keys.append(key)
        wired = None if self.wired_vertex is None else new[find(self.wired_vertex)]
        return DenseNetwork(len(roots), edges, keys, wired, self.max_vertices)

    def component_of(self, x: int) -> set[int]:
        adj = [[] for _ in range(self.num_vertices)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        seen, stack = {x}, [x]
        while stack:
            y = stack.pop()
            for z in adj[y]:
                if z not in seen:
                    seen.add(z)
                    stack.append(z)
        return seen

    def dump(self) -> str:
        """Edge-list debug dump: one ``a b key`` line per edge."""
        head = f"# vertices {self.num_vertices} wired {self.wired_vertex}"
        return "\n".join([head] + [f"{a} {b} {k}" for (a, b), k in zip(self.edges, self.keys)]) + "\n"


def spanning_tree_count(g: DenseNetwork) -> int:
    """Number of spanning trees (0 if ``g`` is disconnected)."""
    return _tree_count(g.num_vertices, *g.arrays())


def edge_in_ust_probability(g: DenseNetwork, e: Hashable) -> Fraction:
    """Exact ``P(e in UST)``; equals the effective resistance across ``e``."""
    i = g.index(e)
    total = spanning_tree_count(g)
    if total == 0:
        raise ValueError("network is disconnected")
    a, b = g.edges[i]
    if a == b:
        return Fraction(0)
    return Fraction(spanning_tree_count(g.minor(contract=[e])), total)


def conditional_edge_probability(g: DenseNetwork, e: Hashable, A: Iterable[Hashable] = (),
                                 B: Iterable[Hashable] = ()) -> Fraction:
    """Exact ``P(e in UST | A in UST, B disjoint from UST)``."""
    g.index(e)
    A, B = list(A), list(B)
    if e in A or e in B:
        raise ValueError(f"{e!r} is already conditioned on")
    h = g.minor(contract=A, delete=B)
    total = spanning_tree_count(h)
    if total == 0:
        raise ValueError("the conditioning disconnects the network")
    a, b = h.edges[h.index(e)] if e in h._index else (0, 0)
    if a == b:
        return Fraction(0)
    return Fraction(spanning_tree_count(h.minor(contract=[e])), total)


def effective_resistance_exact(g: DenseNetwork, a: int, b: int) -> Fraction | float:
    """Exact effective resistance between vertices ``a`` and ``b``.

    Returns ``math.inf`` when they lie in different components.
    """
    if a == b:
        raise ValueError("terminals must differ")
    comp = g.component_of(a)
    if b not in comp:
        return math.inf
    order = sorted(comp)
    new = {x: i for i, x in enumerate(order)}
    u, v = g.arrays()
    inside = np.isin(u, order)
    u = np.array([new[x] for x in u[inside].tolist()], dtype=np.int64)
    v = np.array([new[x] for x in v[inside].tolist()], dtype=np.int64)
    total = _tree_count(len(order), u, v)
    # glue b onto a and count again
    na, nb = new[a], new[b]
    remap = np.arange(len(order))
    remap[nb] = na
    remap[remap > nb] -= 1
    glued = _tree_count(len(order) - 1, remap[u], remap[v])
    return Fraction(glued, total)


class SequentialConditioner:
    """Reveal edges one at a time, keeping exact conditional probabilities.

    Each step costs one determinant: the tree count of the current network
    is carried forward (accepted edge: count of the contraction; rejected
    edge: current count minus that).
    """

    def __init__(self, g: DenseNetwork):
        self.g = g
        self.cls = np.arange(g.num_vertices, dtype=np.int64)
        self.alive = np.ones(len(g.edges), dtype=bool)
        self.u, self.v = g.arrays()
        self.total = spanning_tree_count(g)
        if self.total == 0:
            raise ValueError("network is disconnected")
        self._pending = None

    def _classes(self):
        uniq, inv = np.unique(self.cls, return_inverse=True)
        return len(uniq), inv.reshape(-1)

    def probability(self, e: Hashable) -> Fraction:
        i = self.g.index(e)
        if not self.alive[i]:
            raise ValueError(f"{e!r} was already revealed")
        n, inv = self._classes()
        cu, cv = inv[self.u], inv[self.v]
        if cu[i] == cv[i]:
            self._pending = (i, 0)
            return Fraction(0)
        # contract e: map class of v onto class of u
        remap = np.arange(n)
        hi, lo = max(cu[i], cv[i]), min(cu[i], cv[i])
        remap[hi] = lo
        remap[remap > hi] -= 1
        m = self.alive.copy()
        m[i] = False
        with_e = _tree_count(n - 1, remap[cu[m]], remap[cv[m]])
        self._pending = (i, with_e)
        return Fraction(with_e, self.total)

    def reveal(self, e: Hashable, present: bool) -> None:
        i = self.g.index(e)
        if self._pending is None or self._pending[0] != i:
            self.probability(e)
        with_e = self._pending[1]
        self._pending = None
        if present:
            if with_e == 0:
                raise ValueError(f"{e!r} cannot be in the tree under the current conditioning")
            a, b = self.cls[self.u[i]], self.cls[self.v[i]]
            self.cls[self.cls == max(a, b)] = min(a, b)
            self.total = with_e
        else:
            rest = self.total - with_e
            if rest == 0:
                raise ValueError(f"deleting {e!r} disconnects the network")
            self.total = rest
        self.alive[i] = False
