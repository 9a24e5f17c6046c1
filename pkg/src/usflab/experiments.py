"""Experiment drivers: domination coupling, connection scaling, sprinkling,
special component, renormalized field and the transience probe.

Every driver returns a :class:`Report` holding per-trial records, CSV rows
and a JSON-ready summary.  Trials are keyed by derived seeds, so a driver
run is a pure function of its configuration.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache, partial
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .boxperc import CLIP, EXACT, sample_box_percolation
from .connect import (ComponentLabeling, all_joined, count_U, label_components, merge_labels,
                      vertex_labels)
from .forest import Network, order_forest_edges, sample_wusf
from .lattice import Window, cell_centers, read_edge_list
from .oracles import DenseNetwork, SequentialConditioner
from .resistance import DEFAULT_TOL, reff_to_boundary
from .seeding import derive_seed


class LambdaValidationError(ValueError):
    pass


class PreconditionError(ValueError):
    """A driver argument violates the driver's preconditions (raised before sampling)."""


# -- Lambda -----------------------------------------------------------------

LAMBDA_KINDS = ("axis-lines", "independent-wusf", "file", "full")


@dataclass(frozen=True)
class LambdaSpec:
    """Recipe for the everywhere-percolating set Lambda.

    ``axis-lines``: every lattice line parallel to ``axis``.
    ``independent-wusf``: a WUSF sample (padded window, see ``padding``).
    ``file``: an edge list in the lattice text format.
    ``full``: every edge of the lattice.
    """

    kind: str = "axis-lines"
    axis: int = 0
    padding: int | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in LAMBDA_KINDS:
            raise PreconditionError(f"unknown Lambda generator {self.kind!r}; choose from {LAMBDA_KINDS}")
        if self.kind == "file" and not self.path:
            raise PreconditionError("file Lambda needs a path")

    @classmethod
    def parse(cls, text: str, axis: int = 0, padding: int | None = None) -> "LambdaSpec":
        if text.startswith("file:"):
            return cls("file", path=text[5:])
        return cls(text, axis=axis, padding=padding)

    @property
    def random(self) -> bool:
        return self.kind == "independent-wusf"

    def build(self, window: Window, seed: int | None = None) -> np.ndarray:
        """Edge ids of Lambda restricted to ``window``."""
        if self.kind == "independent-wusf":
            return sample_wusf(window, seed, self.padding).edge_ids
        if self.kind == "file":
            return _file_lambda(self.path, window)
        return _static_lambda(self.kind, self.axis, window)


@lru_cache(maxsize=16)
def _static_lambda(kind: str, axis: int, window: Window) -> np.ndarray:
    ids = window.edge_ids()
    if kind == "axis-lines":
        if not 0 <= axis < window.d:
            raise PreconditionError(f"axis {axis} out of range for d={window.d}")
        ids = ids[ids % window.d == axis]
    ids.setflags(write=False)
    return ids


def _file_lambda(path: str, window: Window) -> np.ndarray:
    with open(path) as fh:
        first = next((ln for ln in fh if ln.strip() and not ln.startswith("#")), "")
    _, edges = read_edge_list(path, header=";" not in first)
    edges = [e for e in edges if len(e.base) == window.d
             and window.contains(e.base) and window.contains(e.head)]
    return window.edges_to_ids(edges)


def validate_lambda(ids: np.ndarray, window: Window) -> None:
    """Every window vertex must reach the window boundary inside Lambda."""
    labels = vertex_labels(ids, window)
    good = np.zeros(int(labels.max()) + 1, dtype=bool)
    good[labels[window.on_boundary()]] = True
    bad = np.flatnonzero(~good[labels])
    if bad.size:
        raise LambdaValidationError(
            f"Lambda is not everywhere percolating in the window: vertex {window.coords(int(bad[0]))} "
            "does not reach the window boundary")


@lru_cache(maxsize=16)
def _static_labels(lam: LambdaSpec, window: Window) -> np.ndarray:
    ids = lam.build(window)
    validate_lambda(ids, window)
    labels = vertex_labels(ids, window)
    labels.setflags(write=False)
    return labels


def lambda_labels(lam: LambdaSpec, window: Window, seed: int | None) -> np.ndarray:
    """Validated vertex labels of Lambda on ``window`` (cached when deterministic)."""
    if not lam.random:
        return _static_labels(lam, window)
    ids = lam.build(window, seed)
    validate_lambda(ids, window)
    return vertex_labels(ids, window)


# -- records and reports --------------------------------------------------------

@dataclass
class TrialRecord:
    """One trial.  ``timings`` is excluded from equality and from outputs."""

    index: int
    seed: int
    outputs: dict[str, Any]
    timings: dict[str, float] = field(default_factory=dict, compare=False)


@dataclass
class Report:
    name: str
    config: dict[str, Any]
    rows: list[dict[str, Any]]
    summary: dict[str, Any]
    records: list[TrialRecord] = field(default_factory=list)

    def header_lines(self) -> list[str]:
        return [f"# usflab {__version__} {self.name}",
                "# config " + json.dumps(self.config, sort_keys=True, default=str)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("\n".join(self.header_lines()) + "\n")
        if self.rows:
            cols = list(self.rows[0])
            for r in self.rows[1:]:
                cols += [c for c in r if c not in cols]
            w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for r in self.rows:
                w.writerow({c: _fmt(r.get(c, "")) for c in cols})
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"artifact": "usflab", "version": __version__, "experiment": self.name,
               "config": self.config, "summary": self.summary}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"

    def write(self, outdir: str | Path, stem: str | None = None) -> tuple[Path, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        stem = stem or self.name
        c, j = outdir / f"{stem}.csv", outdir / f"{stem}.json"
        c.write_text(self.to_csv())
        j.write_text(self.to_json())
        return c, j


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def combine_reports(name: str, config: dict[str, Any], reports: Sequence[Report],
                    key: str = "n") -> Report:
    """Concatenate the rows of per-``n`` reports into one report."""
    rows = [r for rep in reports for r in rep.rows]
    summary = {str(rep.config[key]): rep.summary for rep in reports}
    records = [rec for rep in reports for rec in rep.records]
    return Report(name, config, rows, summary, records)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def bootstrap_median_ci(x: Sequence[float], seed: int, confidence: float = 0.9,
                        resamples: int = 2000) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if len(x) < 2 or np.all(x == x[0]):
        return float(np.median(x)), float(np.median(x))
    res = stats.bootstrap((x,), np.median, confidence_level=confidence, n_resamples=resamples,
                          method="percentile", random_state=np.random.default_rng(seed))
    return float(res.confidence_interval.low), float(res.confidence_interval.high)


def _map(fn: Callable[[int], TrialRecord], n: int, workers: int = 1) -> list[TrialRecord]:
    if workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        out = list(ex.map(fn, range(n), chunksize=max(1, n // (4 * workers))))
    return sorted(out, key=lambda r: r.index)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise PreconditionError(msg)


def _check_eps(eps: float) -> None:
    _require(0.0 <= eps <= 1.0, f"eps must lie in [0, 1], got {eps}")


def _check_square(n: int) -> int:
    r = math.isqrt(n)
    _require(n >= 1 and r * r == n, f"n must be a perfect square, got {n}")
    return r


# -- domination coupling -----------------------------------------------------------

def _domination_trial(t: int, window: Window, k: int, eps: float, seed: int,
                      g: DenseNetwork) -> TrialRecord:
    d = window.d
    s = derive_seed(seed, 1, t)
    bp = sample_box_percolation(window, k, 1.0, s, mode=CLIP)
    H = bp.window.ids_to_edges(np.sort(bp.chosen))
    order = order_forest_edges(H)
    rng = np.random.default_rng(derive_seed(seed, 2, t))
    cond = SequentialConditioner(g)
    thr = Fraction(1, 2 * d)
    min_p = None
    n_f = n_phi = 0
    contained = True
    for e in order:
        p = cond.probability(e)
        u, w = rng.random(), rng.random()
        in_f = u < p
        cond.reveal(e, in_f)
        kept = w < eps
        f_e = in_f and kept
        phi_e = (u < thr) and kept
        n_f += f_e
        n_phi += phi_e
        contained &= (not phi_e) or f_e
        min_p = p if min_p is None or p < min_p else min_p
    out = {"H_size": len(order), "min_p": min_p, "min_p_float": float(min_p),
           "F_count": n_f, "phi_count": n_phi, "contained": contained,
           "min_p_ok": min_p >= thr, "fresh_order": True}
    return TrialRecord(t, s, out)


def run_domination_coupling(window: Window, k: int, eps: float, trials: int, seed: int,
                            workers: int = 1) -> Report:
    """Couple the eps-thinned UST on a wired window with box percolation at eps/2d.

    Each trial samples H (one uniform edge per cell), orders it so that each
    edge has a fresh endpoint, and reveals the UST on H edge by edge with
    exact conditional probabilities p_n.  A shared uniform u_n puts the edge
    in the UST sample iff u_n < p_n and in the percolation sample iff
    u_n < 1/2d; a second shared uniform applies the eps-thinning to both.
    """
    _check_eps(eps)
    _require(k >= 1 and trials >= 1, "need k >= 1 and trials >= 1")
    d = window.d
    z = cell_centers(window, k)
    full = np.all((z - k >= np.array(window.lo)) & (z + k <= np.array(window.hi)), axis=1)
    _require(int(full.sum()) >= 4, f"window holds only {int(full.sum())} full cells; need >= 4")
    g = DenseNetwork.from_network(Network(window, wired=True))
    records = _map(partial(_domination_trial, window=window, k=k, eps=eps, seed=seed, g=g),
                   trials, workers)
    thr = Fraction(1, 2 * d)
    min_p = min(r.outputs["min_p"] for r in records)
    total_h = sum(r.outputs["H_size"] for r in records)
    phi = sum(r.outputs["phi_count"] for r in records)
    fcount = sum(r.outputs["F_count"] for r in records)
    lo, hi = stats.binom.interval(0.999, total_h, eps / (2 * d))
    summary = {
        "trials": trials,
        "threshold": str(thr),
        "min_p": str(min_p),
        "min_p_float": float(min_p),
        "min_p_at_least_threshold": bool(min_p >= thr),
        "containment_frequency": sum(r.outputs["contained"] for r in records) / trials,
        "phi_total": phi,
        "H_total": total_h,
        "phi_band_999": [int(lo), int(hi)],
        "phi_in_band": bool(lo <= phi <= hi),
        "F_total": fcount,
    }
    rows = [{"trial": r.index, "seed": r.seed, "H_size": r.outputs["H_size"],
             "min_p": str(r.outputs["min_p"]), "F_count": r.outputs["F_count"],
             "phi_count": r.outputs["phi_count"], "contained": r.outputs["contained"]}
            for r in records]
    config = {"window": [window.lo, window.hi], "k": k, "eps": eps, "trials": trials, "seed": seed}
    return Report("domination", config, rows, summary, records)


# -- connection scaling ----------------------------------------------------------------

def _connection_trial(t: int, lam: LambdaSpec, n: int, d: int, k: int, eps: float,
                      seed: int) -> TrialRecord:
    window = Window.box(2 * n, d)
    s = derive_seed(seed, 3, n, t)
    base = lambda_labels(lam, window, derive_seed(s, 0))
    phi = sample_box_percolation(window, k, eps, derive_seed(s, 1), mode=EXACT).open_ids
    labels = merge_labels(base, *window.endpoints(phi))
    inner = window.norms() <= n
    event = all_joined(labels, inner)
    pieces = len(np.unique(labels[inner]))
    return TrialRecord(t, s, {"n": n, "connected": event, "pieces_in_Bn": pieces,
                              "open_edges": int(len(phi))})


def run_connection_scaling(lam: LambdaSpec, d: int, k: int, eps: float, n_list: Sequence[int],
                           trials: int, seed: int, workers: int = 1) -> Report:
    """Probability that ``B_n`` is connected inside ``B_{2n}`` by Lambda plus box percolation."""
    _check_eps(eps)
    _require(d >= 2 and k >= 1 and trials >= 1, "need d >= 2, k >= 1, trials >= 1")
    _require(all(n >= 1 for n in n_list), "every n must be >= 1")
    rows, records = [], []
    for n in n_list:
        recs = _map(partial(_connection_trial, lam=lam, n=n, d=d, k=k, eps=eps, seed=seed),
                    trials, workers)
        hits = sum(r.outputs["connected"] for r in recs)
        lo, hi = wilson_interval(hits, trials)
        rows.append({"n": n, "trials": trials, "connected": hits, "p_connect": hits / trials,
                     "ci_low": lo, "ci_high": hi, "p_fail": 1 - hits / trials,
                     "mean_pieces": float(np.mean([r.outputs["pieces_in_Bn"] for r in recs]))})
        records += recs
    fails = [r["p_fail"] for r in rows]
    summary = {"n": list(n_list), "p_fail": fails, "trials": trials,
               "p_fail_ci": [[1 - r["ci_high"], 1 - r["ci_low"]] for r in rows],
               "fail_strictly_decreasing": all(a > b for a, b in zip(fails, fails[1:]))}
    config = {"lambda": asdict(lam), "d": d, "k": k, "eps": eps, "n": list(n_list),
              "trials": trials, "seed": seed}
    return Report("connect-scaling", config, rows, summary, records)


# -- sprinkling ------------------------------------------------------------------------

class _Merger:
    """Union-find over component nodes with a running count of 'tracked' classes."""

    def __init__(self, tracked: int):
        self.parent: dict = {}
        self.tracked: dict = {}
        self.count = tracked

    def add(self, x, tracked: bool) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.tracked[x] = tracked

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.tracked[ra] and self.tracked[rb]:
            self.count -= 1
        self.parent[rb] = ra
        self.tracked[ra] = self.tracked[ra] or self.tracked[rb]


def sprinkling_annuli(m: float, n: int, d: int, k: int, shift: float = 0.0,
                      layers: int | None = None) -> list[tuple[float, float]]:
    """Radii (inner, outer) of the sprinkling layers; a layer is empty when inner >= outer."""
    L = 4 * d if layers is None else layers
    w = math.sqrt(n) / L
    return [(m + shift + l * w + 2 * k, m + shift + (l + 1) * w) for l in range(L)]


def _layer_edges(ids: np.ndarray, window: Window, norms: np.ndarray, inner: float,
                 outer: float) -> np.ndarray:
    if inner >= outer:
        return ids[:0]
    u, v = window.endpoints(ids)
    ok = (norms[u] > inner) & (norms[u] <= outer) & (norms[v] > inner) & (norms[v] <= outer)
    return ids[ok]


def _sprinkle(node: np.ndarray, tracked: np.ndarray, k0: int, layers: list[np.ndarray],
              window: Window) -> list[int]:
    """Component counts K_0..K_L as open layers are added to the node graph.

    ``node[v]`` is the component node of vertex v or -1; ``tracked`` marks
    which nodes are counted.  Other vertices act only as connectors.
    """
    mg = _Merger(k0)
    ks = [k0]
    for ids in layers:
        u, v = window.endpoints(ids)
        for a, b in zip(u.tolist(), v.tolist()):
            na = ("c", int(node[a])) if node[a] >= 0 else ("v", a)
            nb = ("c", int(node[b])) if node[b] >= 0 else ("v", b)
            mg.add(na, node[a] >= 0 and bool(tracked[node[a]]))
            mg.add(nb, node[b] >= 0 and bool(tracked[node[b]]))
            mg.union(na, nb)
        ks.append(mg.count)
    return ks


def _sprinkling_trial(t: int, lam: LambdaSpec, d: int, k: int, eps: float, m: int, n: int,
                      seed: int, layers: int | None) -> TrialRecord:
    r = math.isqrt(n)
    R = m + r
    window = Window.box(R, d)
    s = derive_seed(seed, 4, n, m, t)
    ids = lam.build(window, derive_seed(s, 0))
    validate_lambda(ids, window)
    lab = label_components(ids, window)
    crossing = (lab.min_norm <= m) & (lab.max_norm >= R)
    k0 = int(crossing.sum())
    node = np.where(lab.labels >= 0, lab.labels, -1)
    node = np.where((node >= 0) & crossing[np.maximum(node, 0)], node, -1)
    phi = sample_box_percolation(window, k, eps, derive_seed(s, 1), mode=EXACT).open_ids
    norms = window.norms()
    ann = sprinkling_annuli(m, n, d, k, 0.0, layers)
    layer_ids = [_layer_edges(phi, window, norms, a, b) for a, b in ann]
    ks = _sprinkle(node, np.ones(lab.count, dtype=bool), k0, layer_ids, window)
    q = n ** 0.25
    ok = [ks[i + 1] <= max(ks[i] / q, 1) for i in range(len(ann))]
    return TrialRecord(t, s, {"K": ks, "event": ok, "dropped": lab.count - k0,
                              "layer_edges": [int(len(x)) for x in layer_ids]})


def run_sprinkling(lam: LambdaSpec, d: int, k: int, eps: float, m: int, n: int, trials: int,
                   seed: int, layers: int | None = None, workers: int = 1) -> Report:
    """Sprinkle box percolation over 4d disjoint annuli onto the crossing components of Lambda.

    ``layers`` overrides the number of annuli (default 4d).
    """
    _check_eps(eps)
    r = _check_square(n)
    _require(n <= m <= m + r <= 8 * d * n, f"need n <= m <= m + sqrt(n) <= 8dn (n={n}, m={m}, d={d})")
    _require(k >= 1 and trials >= 1, "need k >= 1 and trials >= 1")
    L = 4 * d if layers is None else layers
    _require(L >= 1, "layers must be >= 1")
    ann = sprinkling_annuli(m, n, d, k, 0.0, L)
    records = _map(partial(_sprinkling_trial, lam=lam, d=d, k=k, eps=eps, m=m, n=n, seed=seed,
                           layers=L), trials, workers)
    rows = []
    for l, (a, b) in enumerate(ann):
        viol = sum(not rec.outputs["event"][l] for rec in records)
        lo, hi = wilson_interval(viol, trials)
        rows.append({"n": n, "m": m, "layer": l, "inner": a, "outer": b, "empty": a >= b,
                     "trials": trials, "violations": viol, "violation_freq": viol / trials,
                     "ci_low": lo, "ci_high": hi,
                     "mean_K_before": float(np.mean([x.outputs["K"][l] for x in records])),
                     "mean_K_after": float(np.mean([x.outputs["K"][l + 1] for x in records]))})
    single = sum(rec.outputs["K"][-1] <= 1 for rec in records)
    lo, hi = wilson_interval(single, trials)
    summary = {"n": n, "m": m, "trials": trials, "layers": L,
               "empty_layers": sum(a >= b for a, b in ann),
               "violation_freq": [x["violation_freq"] for x in rows],
               "final_single_freq": single / trials, "final_single_ci": [lo, hi],
               "mean_K0": float(np.mean([x.outputs["K"][0] for x in records]))}
    config = {"lambda": asdict(lam), "d": d, "k": k, "eps": eps, "m": m, "n": n, "layers": L,
              "trials": trials, "seed": seed}
    return Report("sprinkling", config, rows, summary, records)


# -- special component ---------------------------------------------------------------

def _special_trial(t: int, lam: LambdaSpec, d: int, k: int, eps: float, m: int, n: int, seed: int,
                   layers: int | None, x_radius: int, max_resample: int) -> TrialRecord:
    r = math.isqrt(n)
    s = derive_seed(seed, 5, n, m, t)
    xw = Window.box(x_radius, d)
    attempts = 0
    while True:
        ids = lam.build(xw, derive_seed(s, 0, attempts))
        validate_lambda(ids, xw)
        xlab = label_components(ids, xw)
        attempts += 1
        if count_U(xlab, m, m + r) >= 1 or not lam.random or attempts >= max_resample:
            break
    u_mr = count_U(xlab, m, m + r)
    u_target = count_U(xlab, m, m + 2 * r)
    R = m + 2 * r
    hw = Window.box(R, d)
    hids = xw.translate_ids(ids, hw)
    hlab = label_components(hids, hw)
    meets = hlab.min_norm <= m
    # components not meeting B_m collapse into one special node (id = count)
    node = np.where(hlab.labels >= 0, np.where(meets[np.maximum(hlab.labels, 0)], hlab.labels,
                                               hlab.count), -1)
    has_special = bool((~meets).any())
    tracked = np.append(np.ones(hlab.count, dtype=bool), True)
    k0 = int(meets.sum()) + has_special
    phi = sample_box_percolation(hw, k, eps, derive_seed(s, 1), mode=EXACT).open_ids
    norms = hw.norms()
    ann = sprinkling_annuli(m, n, d, k, r, layers)
    layer_ids = [_layer_edges(phi, hw, norms, a, b) for a, b in ann]
    ks = _sprinkle(node, tracked, k0, layer_ids, hw)
    q = n ** 0.25
    claim = [ks[i + 1] <= max(ks[i] / q, 1) for i in range(len(ann))]
    # U_{0,m} of X plus the sprinkled layers, computed on X's own components
    added = np.concatenate(layer_ids) if layer_ids else phi[:0]
    xadd = hw.translate_ids(added, xw)
    merged = merge_labels(np.where(xlab.labels >= 0, xlab.labels,
                                   xlab.count + np.arange(xw.num_vertices)), *xw.endpoints(xadd))
    near = (xw.norms() <= m) & (xlab.labels >= 0)
    u0m = int(len(np.unique(merged[near])))
    event = u0m <= max(u_target, 1)
    return TrialRecord(t, s, {"U_m_m+r": u_mr, "U_m_m+2r": u_target, "U_0m_after": u0m,
                              "event": event, "K": ks, "claim": claim, "special": has_special,
                              "vacuous": u_mr == 0, "attempts": attempts})


def run_special_component(lam: LambdaSpec, d: int, k: int, eps: float, m: int, n: int,
                          trials: int, seed: int, layers: int | None = None,
                          x_radius: int | None = None, max_resample: int = 20,
                          workers: int = 1) -> Report:
    """Sprinkling with the components avoiding ``B_m`` contracted into one special node.

    Lambda is restricted to ``B_{x_radius}`` (default 8dn); sprinkling uses
    the annuli shifted outward by sqrt(n).
    """
    _check_eps(eps)
    r = _check_square(n)
    _require(n <= m <= m + 2 * r <= 8 * d * n,
             f"need n <= m <= m + 2 sqrt(n) <= 8dn (n={n}, m={m}, d={d})")
    X = 8 * d * n if x_radius is None else x_radius
    _require(X >= m + 2 * r, "x_radius must be at least m + 2 sqrt(n)")
    L = 4 * d if layers is None else layers
    records = _map(partial(_special_trial, lam=lam, d=d, k=k, eps=eps, m=m, n=n, seed=seed,
                           layers=L, x_radius=X, max_resample=max_resample), trials, workers)
    live = [x for x in records if not x.outputs["vacuous"]]
    hits = sum(x.outputs["event"] for x in records)
    lo, hi = wilson_interval(hits, trials)
    rows = []
    for l in range(L):
        viol = sum(not x.outputs["claim"][l] for x in records)
        clo, chi = wilson_interval(viol, trials)
        rows.append({"n": n, "m": m, "layer": l, "trials": trials, "violations": viol,
                     "violation_freq": viol / trials, "ci_low": clo, "ci_high": chi})
    summary = {"n": n, "m": m, "trials": trials, "vacuous_trials": trials - len(live),
               "event_freq": hits / trials, "event_ci": [lo, hi],
               "final_single_freq": sum(x.outputs["K"][-1] <= 1 for x in records) / trials}
    config = {"lambda": asdict(lam), "d": d, "k": k, "eps": eps, "m": m, "n": n, "layers": L,
              "x_radius": X, "trials": trials, "seed": seed}
    return Report("special-component", config, rows, summary, records)


# -- renormalized field ------------------------------------------------------------------

def coarse_line(length: int, d: int) -> Window:
    """Coarse sites ``0, e_1, ..., length * e_1``."""
    return Window((0,) * d, (length,) + (0,) * (d - 1))


def _field_trial(t: int, lam: LambdaSpec, d: int, k: int, eps: float, n: int, coarse: Window,
                 seed: int) -> TrialRecord:
    s = derive_seed(seed, 6, n, t)
    sites = [coarse.coords(i) for i in range(coarse.num_vertices)]
    big = None
    if lam.random:
        lo = tuple(n * a - 2 * n for a in coarse.lo)
        hi = tuple(n * b + 2 * n for b in coarse.hi)
        big = Window(lo, hi)
        big_ids = lam.build(big, derive_seed(s, 0))
    bits = []
    for site in sites:
        c = tuple(n * x for x in site)
        box = Window.box(2 * n, d, c)
        if big is None:
            base = _static_labels(lam, box)
        else:
            ids = big.translate_ids(big_ids, box)
            base = vertex_labels(ids, box)
        phi = sample_box_percolation(box, k, eps, derive_seed(s, 1), mode=EXACT).open_ids
        labels = merge_labels(base, *box.endpoints(phi))
        target = labels[box.index(c)]
        ok = True
        for a in range(d):
            for sign in (-1, 1):
                y = list(c)
                y[a] += sign * n
                ok &= labels[box.index(y)] == target
        bits.append(bool(ok))
    return TrialRecord(t, s, {"X": bits})


def run_renormalized_field(lam: LambdaSpec, d: int, k: int, eps: float, n: int, coarse: Window,
                           trials: int, seed: int, workers: int = 1) -> Report:
    """Sample the coarse field X_s on the sites of ``coarse``.

    X_s = 1 iff ns is joined to each ns +- n e_i inside ``B_{2n}^{ns}``.
    Box percolation is shared across sites through its per-cell seeding.
    """
    _check_eps(eps)
    _require(n > 2 * k, f"need n > 2k (n={n}, k={k})")
    _require(coarse.d == d, "coarse window dimension must equal d")
    records = _map(partial(_field_trial, lam=lam, d=d, k=k, eps=eps, n=n, coarse=coarse,
                           seed=seed), trials, workers)
    X = np.array([r.outputs["X"] for r in records], dtype=float)
    sites = [coarse.coords(i) for i in range(coarse.num_vertices)]
    rows = []
    for i, site in enumerate(sites):
        hits = int(X[:, i].sum())
        lo, hi = wilson_interval(hits, trials)
        rows.append({"n": n, "kind": "site", "site": ",".join(map(str, site)), "distance": "",
                     "trials": trials, "value": hits / trials, "ci_low": lo, "ci_high": hi})
    by_dist: dict[int, list[float]] = {}
    for i in range(len(sites)):
        for j in range(i + 1, len(sites)):
            dist = max(abs(a - b) for a, b in zip(sites[i], sites[j]))
            a, b = X[:, i], X[:, j]
            if a.std() == 0 or b.std() == 0:
                # a constant indicator has zero sample covariance with anything
                c = 0.0
            else:
                c = float(np.corrcoef(a, b)[0, 1])
            by_dist.setdefault(dist, []).append(c)
    bound = 3 / math.sqrt(trials)
    for dist in sorted(by_dist):
        cs = np.array(by_dist[dist])
        rows.append({"n": n, "kind": "correlation", "site": "", "distance": dist, "trials": trials,
                     "value": float(np.max(np.abs(cs))),
                     "ci_low": -bound, "ci_high": bound})
    p_hat = min(r["value"] for r in rows if r["kind"] == "site")
    summary = {"n": n, "trials": trials, "p_hat": p_hat,
               "max_abs_corr": {str(dd): r["value"] for dd, r in
                                zip(sorted(by_dist), [x for x in rows if x["kind"] == "correlation"])},
               "corr_bound": bound}
    config = {"lambda": asdict(lam), "d": d, "k": k, "eps": eps, "n": n,
              "coarse": [coarse.lo, coarse.hi], "trials": trials, "seed": seed}
    return Report("renorm-field", config, rows, summary, records)


# -- transience probe -----------------------------------------------------------------------

REGIMES = ("single", "union", "single+perc")


def _transience_trial(t: int, d: int, k: int, eps: float, n_list: tuple[int, ...], seed: int,
                      padding: int | None, tol: float) -> TrialRecord:
    s = derive_seed(seed, 7, t)
    window = Window.box(max(n_list), d)
    f1 = sample_wusf(window, derive_seed(s, 1), padding).edge_ids
    f2 = sample_wusf(window, derive_seed(s, 2), padding).edge_ids
    phi = sample_box_percolation(window, k, eps, derive_seed(s, 3), mode=EXACT).open_ids
    graphs = {"single": f1, "union": np.union1d(f1, f2), "single+perc": np.union1d(f1, phi)}
    origin = (0,) * d
    out: dict[str, Any] = {}
    for name, ids in graphs.items():
        res = [reff_to_boundary(ids, origin, n, window, tol) for n in n_list]
        for n, r in zip(n_list, res):
            if not math.isfinite(r.resistance):
                raise RuntimeError(f"origin disconnected from the boundary of B_{n} in regime {name}")
        out[name] = [r.resistance for r in res]
        out[name + "_iterations"] = [r.iterations for r in res]
        out[name + "_residual"] = [r.residual for r in res]
    return TrialRecord(t, s, out)


def run_transience_probe(d: int, k: int, eps: float, n_list: Sequence[int], trials: int,
                         seed: int, padding: int | None = None, tol: float = DEFAULT_TOL,
                         workers: int = 1) -> Report:
    """Effective resistance from the origin to ``dB_n`` in three regimes.

    ``single``: one WUSF sample; ``union``: union of two independent
    samples; ``single+perc``: the first sample plus box percolation.
    """
    _check_eps(eps)
    _require(d >= 3, "the transience probe needs d >= 3")
    n_list = tuple(sorted(n_list))
    _require(len(n_list) >= 2 and n_list[0] >= 1, "need at least two radii >= 1")
    records = _map(partial(_transience_trial, d=d, k=k, eps=eps, n_list=n_list, seed=seed,
                           padding=padding, tol=tol), trials, workers)
    rows = []
    summary: dict[str, Any] = {"n": list(n_list), "trials": trials}
    for reg in REGIMES:
        R = np.array([r.outputs[reg] for r in records])
        med = [float(np.median(R[:, i])) for i in range(len(n_list))]
        incs = []
        for i, n in enumerate(n_list):
            lo, hi = bootstrap_median_ci(R[:, i], derive_seed(seed, 8, i))
            row = {"regime": reg, "n": n, "n_next": "", "trials": trials, "median_R": med[i],
                   "ci_low": lo, "ci_high": hi,
                   "max_iterations": int(max(r.outputs[reg + "_iterations"][i] for r in records)),
                   "max_residual": float(max(r.outputs[reg + "_residual"][i] for r in records))}
            rows.append(row)
        for i in range(len(n_list) - 1):
            inc = R[:, i + 1] - R[:, i]
            lo, hi = bootstrap_median_ci(inc, derive_seed(seed, 9, i))
            incs.append({"median": float(np.median(inc)), "ci": [lo, hi]})
            rows.append({"regime": reg, "n": n_list[i], "n_next": n_list[i + 1], "trials": trials,
                         "median_R": "", "median_increment": float(np.median(inc)),
                         "ci_low": lo, "ci_high": hi})
        summary[reg] = {"median_R": med, "increments": incs,
                        "medians_strictly_increasing": all(a < b for a, b in zip(med, med[1:]))}
    a, b = summary["single"]["increments"], summary["union"]["increments"]
    summary["union_increments_below_single"] = all(y["median"] < x["median"] for x, y in zip(a, b))
    summary["union_single_ci_separated"] = all(y["ci"][1] < x["ci"][0] for x, y in zip(a, b))
    config = {"d": d, "k": k, "eps": eps, "n": list(n_list), "trials": trials, "seed": seed,
              "padding": padding, "tol": tol}
    return Report("transience", config, rows, summary, records)
