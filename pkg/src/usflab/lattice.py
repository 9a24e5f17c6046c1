"""Geometry of finite windows of Z^d and the box-percolation cell structure.

Edges are identified in two ways.  Small-scale code uses :class:`Edge`
(lexicographically smaller endpoint plus a 0-based axis).  Array code uses
integer edge ids relative to a :class:`Window`: ``id = flat(base) * d + axis``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

Vertex = tuple[int, ...]


class Edge(NamedTuple):
    base: Vertex
    axis: int

    @property
    def head(self) -> Vertex:
        return tuple(x + (i == self.axis) for i, x in enumerate(self.base))

    @property
    def endpoints(self) -> tuple[Vertex, Vertex]:
        return self.base, self.head


def canonical_edge(u: Sequence[int], v: Sequence[int]) -> Edge:
    """Return the canonical form of the nearest-neighbour edge ``{u, v}``."""
    u, v = tuple(int(x) for x in u), tuple(int(x) for x in v)
    if len(u) != len(v):
        raise ValueError(f"dimension mismatch: {u} vs {v}")
    diff = [i for i in range(len(u)) if u[i] != v[i]]
    if len(diff) != 1 or abs(u[diff[0]] - v[diff[0]]) != 1:
        raise ValueError(f"{u} and {v} are not lattice neighbours")
    return Edge(min(u, v), diff[0])


def sup_norm(v: Sequence[int], center: Sequence[int] | None = None) -> int:
    if center is None:
        return max(abs(int(x)) for x in v)
    return max(abs(int(x) - int(c)) for x, c in zip(v, center))


@dataclass(frozen=True)
class Window:
    """Axis-aligned box ``[lo, hi]`` of Z^d with row-major vertex indexing.

    Row-major order on in-window coordinates coincides with lexicographic
    order, so the canonical base of an edge is its smaller flat index.
    """

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(int(x) for x in self.lo)
        hi = tuple(int(x) for x in self.hi)
        if len(lo) != len(hi) or len(lo) < 1:
            raise ValueError("lo and hi must be non-empty and of equal length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"empty window: lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def box(cls, n: int, d: int, center: Sequence[int] | None = None) -> "Window":
        """The box ``B_n + center = [-n, n]^d + center``."""
        c = (0,) * d if center is None else tuple(int(x) for x in center)
        return cls(tuple(x - n for x in c), tuple(x + n for x in c))

    @property
    def d(self) -> int:
        return len(self.lo)

    @cached_property
    def shape(self) -> tuple[int, ...]:
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    @cached_property
    def num_vertices(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))

    @cached_property
    def strides(self) -> np.ndarray:
        s = np.ones(self.d, dtype=np.int64)
        for i in range(self.d - 2, -1, -1):
            s[i] = s[i + 1] * self.shape[i + 1]
        return s

    @property
    def num_edge_slots(self) -> int:
        return self.num_vertices * self.d

    def contains(self, v: Sequence[int]) -> bool:
        return len(v) == self.d and all(a <= x <= b for x, a, b in zip(v, self.lo, self.hi))

    def index(self, v: Sequence[int]) -> int:
        if not self.contains(v):
            raise KeyError(f"{tuple(v)} is outside the window")
        return int(sum((x - a) * s for x, a, s in zip(v, self.lo, self.strides)))

    def coords(self, i: int) -> Vertex:
        if not 0 <= i < self.num_vertices:
            raise IndexError(i)
        out = []
        for s, a in zip(self.strides, self.lo):
            q, i = divmod(i, int(s))
            out.append(q + a)
        return tuple(out)

    # -- array versions ---------------------------------------------------

    def coords_of(self, idx: np.ndarray) -> np.ndarray:
        """Coordinates (m, d) of flat vertex indices."""
        idx = np.asarray(idx, dtype=np.int64)
        out = np.empty(idx.shape + (self.d,), dtype=np.int64)
        rem = idx.copy()
        for i in range(self.d):
            out[..., i], rem = np.divmod(rem, self.strides[i])
            out[..., i] += self.lo[i]
        return out

    def contains_coords(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords)
        return np.all((coords >= np.array(self.lo)) & (coords <= np.array(self.hi)), axis=-1)

    def index_of(self, coords: np.ndarray) -> np.ndarray:
        """Flat index of in-window coordinates (no bounds check)."""
        coords = np.asarray(coords, dtype=np.int64)
        return (coords - np.array(self.lo)) @ self.strides

    def axis_coordinate(self, axis: int) -> np.ndarray:
        """Coordinate along ``axis`` of every vertex, shape (N,)."""
        shape = [1] * self.d
        shape[axis] = self.shape[axis]
        r = np.arange(self.lo[axis], self.hi[axis] + 1, dtype=np.int64).reshape(shape)
        return np.broadcast_to(r, self.shape).reshape(-1)

    def norms(self, center: Sequence[int] | None = None) -> np.ndarray:
        """Sup-norm distance from ``center`` (default origin) of every vertex."""
        c = (0,) * self.d if center is None else center
        out = None
        for i in range(self.d):
            shape = [1] * self.d
            shape[i] = self.shape[i]
            r = np.abs(np.arange(self.lo[i], self.hi[i] + 1, dtype=np.int64) - c[i]).reshape(shape)
            out = r if out is None else np.maximum(out, r)
        return np.broadcast_to(out, self.shape).reshape(-1)

    def on_boundary(self) -> np.ndarray:
        """Mask of vertices lying on a face of the window."""
        mask = np.zeros(self.shape, dtype=bool)
        for i in range(self.d):
            sl = [slice(None)] * self.d
            sl[i] = 0
            mask[tuple(sl)] = True
            sl[i] = -1
            mask[tuple(sl)] = True
        return mask.reshape(-1)

    def edge_ids(self) -> np.ndarray:
        """All in-window edge ids in increasing (canonical) order."""
        ids = []
        base = np.arange(self.num_vertices, dtype=np.int64)
        for a in range(self.d):
            ok = self.axis_coordinate(a) < self.hi[a]
            ids.append(base[ok] * self.d + a)
        return np.sort(np.concatenate(ids))

    def num_edges(self) -> int:
        total = 0
        for a in range(self.d):
            total += self.num_vertices // self.shape[a] * (self.shape[a] - 1)
        return total

    def endpoints(self, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ids = np.asarray(ids, dtype=np.int64)
        u = ids // self.d
        return u, u + self.strides[ids % self.d]

    def edge_id(self, e: Edge) -> int:
        if not (self.contains(e.base) and self.contains(e.head)):
            raise KeyError(f"{e} is not inside the window")
        return self.index(e.base) * self.d + e.axis

    def edge(self, eid: int) -> Edge:
        u, a = divmod(int(eid), self.d)
        return Edge(self.coords(u), a)

    def edges_to_ids(self, edges: Iterable[Edge]) -> np.ndarray:
        return np.array(sorted(self.edge_id(e) for e in edges), dtype=np.int64)

    def ids_to_edges(self, ids: Iterable[int]) -> list[Edge]:
        return [self.edge(i) for i in ids]

    def edges(self) -> list[Edge]:
        return self.ids_to_edges(self.edge_ids())

    def edge_bases(self, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(base coordinates (m, d), axis (m,)) of edge ids."""
        ids = np.asarray(ids, dtype=np.int64)
        return self.coords_of(ids // self.d), ids % self.d

    def ids_from_bases(self, base: np.ndarray, axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Edge ids of edges given by base coordinates, plus an in-window mask.

        Entries outside the window get id -1.
        """
        base = np.asarray(base, dtype=np.int64).reshape(-1, self.d)
        axis = np.asarray(axis, dtype=np.int64).reshape(-1)
        head = base.copy()
        head[np.arange(len(axis)), axis] += 1
        ok = self.contains_coords(base) & self.contains_coords(head)
        ids = np.full(len(axis), -1, dtype=np.int64)
        ids[ok] = self.index_of(base[ok]) * self.d + axis[ok]
        return ids, ok

    def translate_ids(self, ids: np.ndarray, other: "Window") -> np.ndarray:
        """Re-express edge ids of this window in ``other``; drops edges not inside it."""
        base, axis = self.edge_bases(ids)
        new, ok = other.ids_from_bases(base, axis)
        return new[ok]


@dataclass(frozen=True)
class Annulus:
    """``B_outer^center minus B_inner^center``; radii may be fractional."""

    inner: float
    outer: float
    center: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.inner > self.outer:
            raise ValueError("inner radius exceeds outer radius")

    def contains(self, v: Sequence[int]) -> bool:
        r = sup_norm(v, self.center)
        return self.inner < r <= self.outer

    def vertex_mask(self, window: Window) -> np.ndarray:
        r = window.norms(self.center)
        return (r > self.inner) & (r <= self.outer)


def vertex_region_mask(region: Annulus | Window, window: Window) -> np.ndarray:
    if isinstance(region, Annulus):
        return region.vertex_mask(window)
    lo, hi = np.array(region.lo), np.array(region.hi)
    mask = np.ones(window.num_vertices, dtype=bool)
    for i in range(window.d):
        c = window.axis_coordinate(i)
        mask &= (c >= lo[i]) & (c <= hi[i])
    return mask


def edges_in_region(ids: np.ndarray, window: Window, region: Annulus | Window) -> np.ndarray:
    """Edge ids (of ``window``) with both endpoints in ``region``."""
    mask = vertex_region_mask(region, window)
    u, v = window.endpoints(ids)
    return np.asarray(ids)[mask[u] & mask[v]]


# -- box-percolation cells ------------------------------------------------

def coordinate_rank(u: Sequence[int], k: int) -> int:
    """Number of coordinates of ``u`` lying in ``k + 2kZ``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return sum(1 for x in u if (x - k) % (2 * k) == 0)


def _cell_coordinate(x, k):
    # unique multiple z of 2k with x - z in (-k, k]
    return -((k - x) // (2 * k)) * 2 * k


def cell_of_edge(e: Edge | tuple[Sequence[int], Sequence[int]], k: int) -> Vertex:
    """Center ``z`` of the unique cell whose edge set contains ``e``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not isinstance(e, Edge):
        e = canonical_edge(*e)
    u, v = e.endpoints
    w = u if coordinate_rank(u, k) <= coordinate_rank(v, k) else v
    return tuple(int(_cell_coordinate(x, k)) for x in w)


def cells_of_edges(base: np.ndarray, axis: np.ndarray, k: int) -> np.ndarray:
    """Vectorised :func:`cell_of_edge` for edges given by base coordinates."""
    base = np.asarray(base, dtype=np.int64)
    z = _cell_coordinate(base, k)
    rows = np.arange(len(axis))
    ua = base[rows, axis]
    # base has the larger rank only when its axis coordinate is in k + 2kZ
    bump = (ua - k) % (2 * k) == 0
    z[rows[bump], axis[bump]] = _cell_coordinate(ua[bump] + 1, k)
    return z


def in_cell(e: Edge, z: Sequence[int], k: int) -> bool:
    """Direct membership test of ``e`` in the cell ``Q_k^z``."""
    u, v = e.endpoints
    if sup_norm(u, z) > k or sup_norm(v, z) > k:
        return False
    return not any(u[i] == v[i] == z[i] - k for i in range(len(z)))


def cell_edge_template(d: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Edges of ``Q_k^0`` in canonical order as (base offsets (m, d), axis (m,))."""
    bases, axes = [], []
    for off in itertools.product(range(-k, k + 1), repeat=d):
        for a in range(d):
            if off[a] == k:
                continue
            if any(off[i] == -k for i in range(d) if i != a):
                continue
            bases.append(off)
            axes.append(a)
    return np.array(bases, dtype=np.int64).reshape(-1, d), np.array(axes, dtype=np.int64)


def cell_edges(z: Sequence[int], k: int) -> list[Edge]:
    if any(int(x) % (2 * k) for x in z):
        raise ValueError(f"{tuple(z)} is not in (2kZ)^d for k={k}")
    base, axis = cell_edge_template(len(z), k)
    zz = np.array(z, dtype=np.int64)
    return [Edge(tuple(int(x) for x in b + zz), int(a)) for b, a in zip(base, axis)]


def cell_size(d: int, k: int) -> int:
    return d * (2 * k) ** d


@dataclass(frozen=True)
class Cell:
    k: int
    z: tuple[int, ...]

    @property
    def edges(self) -> list[Edge]:
        return cell_edges(self.z, self.k)


def cell_centers(window: Window, k: int) -> np.ndarray:
    """Centers of all cells whose box ``B_k^z`` meets the window, (M, d)."""
    ranges = []
    for a, b in zip(window.lo, window.hi):
        start = 2 * k * ((a - k) // (2 * k))
        ranges.append(np.arange(start, b + k + 1, 2 * k, dtype=np.int64))
    ranges = [r[(r + k >= a) & (r - k <= b)] for r, a, b in zip(ranges, window.lo, window.hi)]
    grids = np.meshgrid(*ranges, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def boundary_edges(W: Iterable[Sequence[int]], window: Window, wired: bool = False) -> set[Edge]:
    """Edges with exactly one endpoint in ``W``.

    With ``wired=True`` edges leaving the window count too (their exterior
    endpoint stands for the wired boundary vertex).
    """
    W = {tuple(v) for v in W}
    out = set()
    for v in W:
        if not window.contains(v):
            raise ValueError(f"{v} is outside the window")
        for a in range(window.d):
            for s in (-1, 1):
                w = tuple(x + s * (i == a) for i, x in enumerate(v))
                if w in W:
                    continue
                if window.contains(w) or wired:
                    out.add(canonical_edge(v, w))
    return out


# -- text format ----------------------------------------------------------

def format_vertex(v: Sequence[int]) -> str:
    return ",".join(str(int(x)) for x in v)


def parse_vertex(s: str) -> Vertex:
    return tuple(int(x) for x in s.strip().split(","))


def format_edges(edges: Iterable[Edge]) -> list[str]:
    return [f"{format_vertex(e.base)};{format_vertex(e.head)}" for e in sorted(edges)]


def parse_edge_line(line: str) -> Edge:
    u, v = line.split(";")
    return canonical_edge(parse_vertex(u), parse_vertex(v))


def write_edge_list(path: str | Path, edges: Iterable[Edge], header: str | None = None) -> None:
    lines = format_edges(edges)
    with open(path, "w", newline="\n") as fh:
        if header is not None:
            fh.write(header.rstrip("\n") + "\n")
        fh.write("".join(s + "\n" for s in lines))


def read_edge_list(path: str | Path, header: bool = False) -> tuple[str | None, list[Edge]]:
    """Read an edge-list file; blank lines and ``#`` comments are skipped."""
    head = None
    edges = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    if header and lines:
        head, lines = lines[0], lines[1:]
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        edges.append(parse_edge_line(line))
    return head, edges
