"""Component labelling, the shell counts U_{j,l} and the box connection event."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numba
import numpy as np

from .lattice import Edge, Window


@numba.njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@numba.njit(cache=True)
def _uf_labels(n, u, v):
    parent = np.arange(n)
    for i in range(u.shape[0]):
        a = _find(parent, u[i])
        b = _find(parent, v[i])
        if a != b:
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        labels[i] = _find(parent, i)
    # roots are component minima; renumber in order of first appearance
    remap = np.full(n, -1, dtype=np.int64)
    c = 0
    for i in range(n):
        r = labels[i]
        if remap[r] < 0:
            remap[r] = c
            c += 1
        labels[i] = remap[r]
    return labels


def union_find_labels(n: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Component label of each of ``n`` nodes; labels ordered by smallest member."""
    u = np.ascontiguousarray(u, dtype=np.int64)
    v = np.ascontiguousarray(v, dtype=np.int64)
    return _uf_labels(np.int64(n), u, v)


def merge_labels(labels: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Labels after additionally joining vertex pairs ``(u[i], v[i])``."""
    labels = np.asarray(labels, dtype=np.int64)
    n = int(labels.max()) + 1 if labels.size else 0
    classes = union_find_labels(n, labels[np.asarray(u, dtype=np.int64)],
                                labels[np.asarray(v, dtype=np.int64)])
    return classes[labels]


def vertex_labels(edge_ids: np.ndarray, window: Window) -> np.ndarray:
    """Labels of all window vertices (isolated vertices get singleton labels)."""
    u, v = window.endpoints(edge_ids)
    return union_find_labels(window.num_vertices, u, v)


@numba.njit(cache=True)
def _extrema(labels, norms, k):
    lo = np.full(k, np.iinfo(np.int64).max, dtype=np.int64)
    hi = np.full(k, -1, dtype=np.int64)
    for i in range(labels.shape[0]):
        c = labels[i]
        if c >= 0:
            if norms[i] < lo[c]:
                lo[c] = norms[i]
            if norms[i] > hi[c]:
                hi[c] = norms[i]
    return lo, hi


def _as_ids(edges, window: Window) -> np.ndarray:
    if isinstance(edges, np.ndarray):
        return edges.astype(np.int64, copy=False)
    return window.edges_to_ids(edges)


@dataclass(frozen=True, eq=False)
class ComponentLabeling:
    """Components of an edge set; isolated vertices carry label -1."""

    window: Window
    labels: np.ndarray
    count: int
    min_norm: np.ndarray
    max_norm: np.ndarray
    center: tuple[int, ...]

    @property
    def K(self) -> int:
        return self.count

    def component_of(self, v: Sequence[int]) -> int:
        return int(self.labels[self.window.index(v)])

    def members(self, c: int) -> list[tuple[int, ...]]:
        return [self.window.coords(int(i)) for i in np.flatnonzero(self.labels == c)]


def label_components(edges: np.ndarray | Iterable[Edge], window: Window,
                     center: Sequence[int] | None = None) -> ComponentLabeling:
    ids = _as_ids(edges, window)
    u, v = window.endpoints(ids)
    full = union_find_labels(window.num_vertices, u, v)
    touched = np.zeros(window.num_vertices, dtype=bool)
    touched[u] = True
    touched[v] = True
    # renumber non-isolated components 0..K-1 by smallest vertex
    first = np.full(window.num_vertices, -1, dtype=np.int64)
    comp_ids = np.unique(full[touched])
    first[comp_ids] = np.arange(len(comp_ids))
    labels = np.where(touched, first[full], -1)
    c = tuple(center) if center is not None else (0,) * window.d
    lo, hi = _extrema(labels, np.ascontiguousarray(window.norms(c)), len(comp_ids))
    return ComponentLabeling(window, labels, len(comp_ids), lo, hi, c)


def count_U(labeling: ComponentLabeling, j: float, l: float, strict_lower: bool = False) -> int:
    """Components with a vertex of norm <= l and every vertex of norm >= j.

    With ``strict_lower`` the lower condition becomes norm > j, which turns
    consecutive shells into a partition of the components.
    """
    if j > l:
        raise ValueError(f"need j <= l, got j={j}, l={l}")
    m = labeling.min_norm
    low = m > j if strict_lower else m >= j
    return int(np.count_nonzero(low & (m <= l)))


def all_joined(labels: np.ndarray, mask: np.ndarray) -> bool:
    sel = labels[mask]
    return bool(sel.size == 0 or np.all(sel == sel[0]))


def connection_event(edges: np.ndarray | Iterable[Edge], n: int, window: Window | None = None) -> bool:
    """Whether every vertex of ``B_n`` lies in one component of ``edges`` inside ``B_{2n}``.

    ``edges`` is either a collection of :class:`Edge` or an id array of
    ``window`` (which must then be given and contain ``B_{2n}``).
    """
    if window is None:
        edges = list(edges)
        if not edges:
            return n == 0
        window = Window.box(2 * n, len(edges[0].base))
        outside = [e for e in edges if not (window.contains(e.base) and window.contains(e.head))]
        if outside:
            raise ValueError(f"edge {outside[0]} leaves B_{2 * n}")
        ids = window.edges_to_ids(edges)
    else:
        ids = _as_ids(edges, window)
        big = Window.box(2 * n, window.d)
        if window != big:
            ids = window.translate_ids(ids, big)
            window = big
    labels = vertex_labels(ids, window)
    return all_joined(labels, window.norms() <= n)
