"""(k, eps)-box percolation: one uniform edge per cell, opened with probability eps."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lattice import (Annulus, Edge, Window, cell_centers, cell_edge_template, edges_in_region,
                      format_edges)
from .seeding import hashed_uniforms

CLIP = "clip"
EXACT = "exact"


@dataclass(frozen=True, eq=False)
class BoxPercolationSample:
    """Per-cell record of a box-percolation sample on a window.

    ``chosen[i]`` is the window edge id picked in the cell centred at
    ``centers[i]``, or -1 if (in ``exact`` mode) the pick fell outside the
    window.  ``open_uniform`` is the uniform compared against ``eps``; it is
    kept so the sample can be re-thresholded (monotone coupling in eps).
    """

    window: Window
    k: int
    eps: float
    seed: int
    mode: str
    centers: np.ndarray
    chosen: np.ndarray
    open_uniform: np.ndarray
    clipped: np.ndarray

    @property
    def is_open(self) -> np.ndarray:
        return (self.open_uniform < self.eps) & (self.chosen >= 0)

    @property
    def open_ids(self) -> np.ndarray:
        return np.sort(self.chosen[self.is_open])

    @property
    def open_edges(self) -> list[Edge]:
        return self.window.ids_to_edges(self.open_ids)

    @property
    def cells(self) -> dict[tuple[int, ...], tuple[Edge | None, bool]]:
        out = {}
        for z, c, o in zip(self.centers, self.chosen, self.is_open):
            out[tuple(int(x) for x in z)] = (self.window.edge(int(c)) if c >= 0 else None, bool(o))
        return out

    def with_eps(self, eps: float) -> "BoxPercolationSample":
        """Same cell choices and uniforms, thresholded at a different ``eps``."""
        return BoxPercolationSample(self.window, self.k, eps, self.seed, self.mode, self.centers,
                                    self.chosen, self.open_uniform, self.clipped)

    def to_text(self) -> str:
        head = f"{self.window.d} {self.k} {self.eps!r} {self.seed}"
        return "\n".join([head] + format_edges(self.open_edges)) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())


def sample_box_percolation(window: Window, k: int, eps: float, seed: int,
                           mode: str = CLIP) -> BoxPercolationSample:
    """Sample box percolation on every cell meeting ``window``.

    Randomness of the cell centred at ``z`` depends only on ``(seed, k, z)``,
    so samples on overlapping windows agree on fully contained cells.

    ``mode="clip"``: a cell cut by the window picks uniformly among its
    in-window edges (finite model; such cells are flagged ``clipped``).
    ``mode="exact"``: every cell picks among all its edges and picks outside
    the window are discarded, i.e. the Z^d sample restricted to the window.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    if mode not in (CLIP, EXACT):
        raise ValueError(f"unknown mode {mode!r}")
    d = window.d
    z = cell_centers(window, k)
    keys = np.concatenate([np.full((len(z), 1), k, dtype=np.int64), z // (2 * k)], axis=1)
    u_pick = hashed_uniforms(seed, keys, 1)
    u_open = hashed_uniforms(seed, keys, 2)
    tb, ta = cell_edge_template(d, k)
    size = len(ta)
    full = np.all((z - k >= np.array(window.lo)) & (z + k <= np.array(window.hi)), axis=1)
    chosen = np.full(len(z), -1, dtype=np.int64)

    pick = np.minimum((u_pick * size).astype(np.int64), size - 1)
    if mode == EXACT:
        ids, _ = window.ids_from_bases(z + tb[pick], ta[pick])
        chosen[:] = ids
        keep = np.ones(len(z), dtype=bool)
        # drop cells that cannot contribute any in-window edge
        cut = np.flatnonzero(~full)
        if cut.size:
            _, ok = window.ids_from_bases((z[cut, None, :] + tb[None]).reshape(-1, d),
                                          np.tile(ta, len(cut)))
            keep[cut] = ok.reshape(len(cut), size).any(axis=1)
    else:
        f = np.flatnonzero(full)
        ids, _ = window.ids_from_bases(z[f] + tb[pick[f]], ta[pick[f]])
        chosen[f] = ids
        cut = np.flatnonzero(~full)
        keep = full.copy()
        if cut.size:
            cand, ok = window.ids_from_bases((z[cut, None, :] + tb[None]).reshape(-1, d),
                                             np.tile(ta, len(cut)))
            cand, ok = cand.reshape(len(cut), size), ok.reshape(len(cut), size)
            counts = ok.sum(axis=1)
            has = counts > 0
            cut, cand, ok, counts = cut[has], cand[has], ok[has], counts[has]
            j = np.minimum((u_pick[cut] * counts).astype(np.int64), counts - 1)
            # position of the j-th in-window template edge of each cut cell
            rank = np.cumsum(ok, axis=1) - 1
            col = np.argmax(ok & (rank == j[:, None]), axis=1)
            chosen[cut] = cand[np.arange(len(cut)), col]
            keep[cut] = True
    return BoxPercolationSample(window, k, float(eps), int(seed), mode, z[keep], chosen[keep],
                                u_open[keep], ~full[keep])


def restrict(sample: BoxPercolationSample, region: Annulus | Window) -> np.ndarray:
    """Open edge ids (of ``sample.window``) with both endpoints in ``region``."""
    return edges_in_region(sample.open_ids, sample.window, region)
