"""Effective resistance from a vertex to the boundary of a box, by Jacobi-preconditioned CG."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numba
import numpy as np
import scipy.sparse as sp

from .connect import union_find_labels
from .lattice import Edge, Window

DEFAULT_TOL = 1e-8


class NonConvergenceError(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(f"CG did not converge in {iterations} iterations (residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class ResistanceResult:
    resistance: float
    iterations: int
    residual: float
    unknowns: int

    def __float__(self) -> float:
        return self.resistance


def default_max_iter(n: int) -> int:
    return int(20 * math.sqrt(n)) + 1000


def pcg(A: sp.csr_matrix, b: np.ndarray, tol: float = DEFAULT_TOL,
        max_iter: int | None = None) -> tuple[np.ndarray, int, float]:
    """Solve SPD ``A x = b`` with diagonal preconditioning.

    Stops when ``||b - A x|| <= tol * ||b||``; returns ``(x, iterations, relative residual)``.
    """
    n = len(b)
    if max_iter is None:
        max_iter = default_max_iter(n)
    inv_diag = 1.0 / A.diagonal()
    x = np.zeros(n)
    r = b.astype(float).copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return x, 0, 0.0
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            # confirm against the true residual to guard against drift
            res = np.linalg.norm(b - A @ x) / bnorm
            if res <= tol:
                return x, it, res
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NonConvergenceError(max_iter, float(np.linalg.norm(b - A @ x) / bnorm))


@numba.njit(cache=True)
def _peel(indptr, nbr, protected):
    n = indptr.shape[0] - 1
    deg = np.empty(n, dtype=np.int64)
    alive = np.ones(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for v in range(n):
        deg[v] = indptr[v + 1] - indptr[v]
        if deg[v] <= 1 and not protected[v]:
            stack[top] = v
            top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        if not alive[v]:
            continue
        alive[v] = False
        for j in range(indptr[v], indptr[v + 1]):
            w = nbr[j]
            if alive[w]:
                deg[w] -= 1
                if deg[w] == 1 and not protected[w]:
                    stack[top] = w
                    top += 1
    return alive


def reff_to_boundary(edges: np.ndarray | Iterable[Edge], source: Sequence[int], n: int,
                     window: Window | None = None, tol: float = DEFAULT_TOL,
                     max_iter: int | None = None) -> ResistanceResult:
    """Effective resistance between ``source`` and the grounded set ``{|v|_inf = n}``.

    Only edges with both endpoints in ``B_n`` are used.  Dangling trees
    (which carry no current) are pruned before the solve.  If the source
    cannot reach the boundary the resistance is ``inf``.
    """
    d = len(source)
    box = Window.box(n, d)
    if window is None:
        ids = box.edges_to_ids(e for e in edges if box.contains(e.base) and box.contains(e.head))
    else:
        ids = window.translate_ids(np.asarray(edges, dtype=np.int64), box)
    s = box.index(source)
    grounded = box.norms() == n
    if grounded[s]:
        return ResistanceResult(0.0, 0, 0.0, 0)
    u, v = box.endpoints(ids)
    labels = union_find_labels(box.num_vertices, u, v)
    comp = labels == labels[s]
    if not np.any(comp & grounded):
        return ResistanceResult(math.inf, 0, 0.0, 0)
    inside = comp[u]
    u, v = u[inside], v[inside]
    verts = np.flatnonzero(comp)
    local = np.full(box.num_vertices, -1, dtype=np.int64)
    local[verts] = np.arange(len(verts))
    lu, lv = local[u], local[v]
    m = len(verts)
    adj = sp.coo_matrix((np.ones(2 * len(lu)), (np.concatenate([lu, lv]), np.concatenate([lv, lu]))),
                        shape=(m, m)).tocsr()
    protected = grounded[verts].copy()
    protected[local[s]] = True
    alive = _peel(adj.indptr.astype(np.int64), adj.indices.astype(np.int64), protected)
    free = alive & ~grounded[verts]
    # Laplacian restricted to free vertices; edges to grounded vertices only add to the diagonal
    deg = np.asarray(adj[:, alive].sum(axis=1)).ravel()
    fi = np.flatnonzero(free)
    A = (sp.diags(deg[fi]) - adj[fi][:, fi]).tocsr()
    b = np.zeros(len(fi))
    src = np.searchsorted(fi, local[s])
    b[src] = 1.0
    x, it, res = pcg(A, b, tol, max_iter)
    return ResistanceResult(float(x[src]), it, float(res), len(fi))
