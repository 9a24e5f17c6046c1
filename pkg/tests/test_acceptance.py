"""Numbered acceptance criteria.

Each test records one PASS/FAIL line (printed at the end of the run) and
then asserts.  Tolerances and sizes are the ones the criteria state.
"""
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from usflab.boxperc import EXACT, restrict, sample_box_percolation
from usflab.cli import main
from usflab.experiments import (LambdaSpec, coarse_line, run_connection_scaling,
                                run_domination_coupling, run_renormalized_field, run_sprinkling,
                                run_transience_probe)
from usflab.forest import Network, sample_ust_many
from usflab.lattice import Annulus, Window, cell_edge_template, cell_size
from usflab.oracles import DenseNetwork, edge_in_ust_probability
from usflab.verify import (cell_partition_failures, cycle_shares_cell, nash_williams_instance,
                           random_cycle, tree_frequencies)

pytestmark = pytest.mark.acceptance

ACCEPTANCE_RESULTS = {}
AXIS = LambdaSpec("axis-lines")


def record(num, ok, detail):
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_RESULTS[num] = line
    print(line)
    return ok


def test_01_cell_combinatorics():
    t0 = time.perf_counter()
    partition = {(d, k): cell_partition_failures(d, k, 2 * k + 1) for d in (2, 3) for k in (1, 2, 3)}
    rng = np.random.default_rng(1)
    misses = 0
    for i in range(100_000):
        d = 2 + i % 2
        cyc = random_cycle(rng, d)
        misses += sum(not cycle_shares_cell(cyc, k) for k in (1, 2, 3))
    secs = time.perf_counter() - t0
    bad = sum(partition.values())
    ok = bad == 0 and misses == 0 and secs < 60
    record(1, ok, f"partition failures {bad}, cycles without shared cell {misses}/300000 "
                  f"checks, {secs:.1f}s")
    assert ok


def test_02_ust_exactness():
    t0 = time.perf_counter()
    net2 = Network(Window((0, 0), (1, 1)), wired=False)
    _, c2 = tree_frequencies(net2, 100_000, 21)
    tv = 0.5 * np.abs(c2 / c2.sum() - 0.25).sum()
    net3 = Network(Window((0, 0), (2, 2)), wired=False)
    N = 1_000_000
    trees = sample_ust_many(net3, N, 22)
    uniq, c3 = np.unique(trees, axis=0, return_counts=True)
    chi = stats.chisquare(c3)
    g = DenseNetwork.from_network(net3)
    worst = 0.0
    for eid in net3.window.edge_ids():
        p = float(edge_in_ust_probability(g, net3.window.edge(int(eid))))
        phat = np.count_nonzero(trees == eid) / N
        worst = max(worst, abs(phat - p) / np.sqrt(p * (1 - p) / N))
    secs = time.perf_counter() - t0
    ok = len(c2) == 4 and tv <= 0.02 and len(uniq) == 192 and chi.pvalue > 0.001 and worst <= 3 \
        and secs < 300
    record(2, ok, f"2x2 TV {tv:.4f}; 3x3 {len(uniq)} trees, chi2 p={chi.pvalue:.3f}; "
                  f"max marginal deviation {worst:.2f} sigma; {secs:.0f}s")
    assert ok


def test_03_nash_williams_bound():
    rng = np.random.default_rng(3)
    windows = [Window((0, 0), (s - 1, s - 1)) for s in range(2, 8)] + \
              [Window((0,) * 3, (s - 1,) * 3) for s in (2, 3)]
    exceptions, steps = 0, 0
    worst = Fraction(10)
    for w in windows:
        g = DenseNetwork.from_network(Network(w, wired=True))
        thr = Fraction(1, 2 * w.d)
        for _ in range(1000):
            low, s = nash_williams_instance(g, w, rng)
            steps += s
            exceptions += low < thr
            worst = min(worst, low / thr)
    ok = exceptions == 0
    record(3, ok, f"{len(windows)} windows x 1000 instances, {steps} exact steps, "
                  f"{exceptions} below 1/2d (min p*2d = {float(worst):.4f})")
    assert ok


def test_04_domination_coupling():
    r = run_domination_coupling(Window.box(4, 2), k=1, eps=1.0, trials=10_000, seed=4)
    s = r.summary
    ok = s["containment_frequency"] == 1.0 and s["phi_in_band"] and s["min_p_at_least_threshold"]
    record(4, ok, f"containment {s['containment_frequency']:.4f}, phi count {s['phi_total']} in "
                  f"band {s['phi_band_999']} (|H| total {s['H_total']}), min p {s['min_p_float']:.4f}")
    assert ok


def _template_counts(d, k, eps, radius, seed):
    w = Window.box(radius, d)
    s = sample_box_percolation(w, k, eps, seed)
    full = ~s.clipped
    tb, ta = cell_edge_template(d, k)
    base, axis = w.edge_bases(s.chosen[full])
    rel = base - s.centers[full]
    # position of the chosen edge inside the cell template
    lookup = {(tuple(b), int(a)): j for j, (b, a) in enumerate(zip(tb.tolist(), ta.tolist()))}
    pos = np.array([lookup[(tuple(b), int(a))] for b, a in zip(rel.tolist(), axis.tolist())])
    opened = s.is_open[full]
    return np.bincount(pos[opened], minlength=len(ta)), int(full.sum())


def test_05_box_percolation_marginals():
    eps = 0.5
    worst = 0.0
    details = []
    for d, k, radius in ((2, 1, 1001), (3, 1, 101)):
        counts, cells = _template_counts(d, k, eps, radius, 5)
        p = eps / cell_size(d, k)
        z = np.abs(counts / cells - p) / np.sqrt(p * (1 - p) / cells)
        worst = max(worst, z.max())
        details.append(f"d={d} k={k}: {cells} cells")
    w = Window.box(16, 2)
    a1, a2 = Annulus(2, 8), Annulus(10, 16)
    T = 10_000
    x, y = np.empty(T), np.empty(T)
    for t in range(T):
        smp = sample_box_percolation(w, 1, 0.5, 10_000 + t, mode=EXACT)
        x[t], y[t] = len(restrict(smp, a1)), len(restrict(smp, a2))
    corr = np.corrcoef(x, y)[0, 1]
    ok = worst <= 3 and abs(corr) < 3 / np.sqrt(T)
    record(5, ok, f"{'; '.join(details)}; max deviation {worst:.2f} sigma; annulus corr {corr:+.4f} "
                  f"(bound {3 / np.sqrt(T):.4f})")
    assert ok


def test_06_connection_scaling():
    t0 = time.perf_counter()
    r = run_connection_scaling(AXIS, d=3, k=1, eps=0.25, n_list=[8, 16, 32], trials=200, seed=6)
    secs = time.perf_counter() - t0
    fails = r.summary["p_fail"]
    ok = r.summary["fail_strictly_decreasing"] and secs < 1800
    record(6, ok, f"failure probability {fails} at n=8,16,32 (200 trials each), {secs:.0f}s")
    assert ok


def test_07_sprinkling_decay():
    lam = LambdaSpec("independent-wusf")
    reps = {n: run_sprinkling(lam, d=2, k=1, eps=0.5, m=n, n=n, trials=200, seed=7) for n in (16, 36, 64)}
    viol = np.array([reps[n].summary["violation_freq"] for n in (16, 36, 64)])
    single = [reps[n].summary["final_single_freq"] for n in (16, 36, 64)]
    empty = [reps[n].summary["empty_layers"] for n in (16, 36, 64)]
    nonincreasing = bool(np.all(np.diff(viol, axis=0) <= 0))
    increasing = all(a < b for a, b in zip(single, single[1:]))
    ok = nonincreasing and increasing
    record(7, ok, f"violation freq per layer (first layer) {viol[:, 0].tolist()}, "
                  f"final single-component freq {single}, empty annuli {empty} of 8")
    assert ok


def test_08_renormalized_field():
    T = 1000
    r = run_renormalized_field(AXIS, d=3, k=1, eps=0.25, n=16, coarse=coarse_line(5, 3), trials=T, seed=8)
    X = np.array([x.outputs["X"] for x in r.records], dtype=float)
    corr = np.corrcoef(X[:, 0], X[:, 5])[0, 1] if X[:, 0].std() and X[:, 5].std() else 0.0
    p_hat = []
    for n in (8, 16, 32):
        rep = run_renormalized_field(AXIS, d=3, k=1, eps=0.25, n=n, coarse=coarse_line(0, 3),
                                     trials=300, seed=80 + n)
        p_hat.append(rep.summary["p_hat"])
    increasing = all(a < b for a, b in zip(p_hat, p_hat[1:]))
    ok = abs(corr) < 3 / np.sqrt(T) and increasing
    record(8, ok, f"corr(X_0, X_5) {corr:+.4f} (bound {3 / np.sqrt(T):.4f}, site marginal "
                  f"{X[:, 0].mean():.3f}); p_hat(8,16,32) = {p_hat}")
    assert ok


def test_09_transience_contrast():
    t0 = time.perf_counter()
    r = run_transience_probe(d=3, k=1, eps=0.25, n_list=[8, 16, 32], trials=50, seed=9)
    secs = time.perf_counter() - t0
    s = r.summary
    ok = s["union_increments_below_single"] and s["union_single_ci_separated"] \
        and s["single"]["medians_strictly_increasing"] and secs < 7200
    inc = lambda reg: [round(x["median"], 3) for x in s[reg]["increments"]]
    record(9, ok, f"median increments single {inc('single')}, union {inc('union')}; "
                  f"single medians {[round(x, 2) for x in s['single']['median_R']]}; {secs:.0f}s")
    assert ok


SUBCOMMAND_RUNS = [
    ["connect-scaling", "--d", "3", "--k", "1", "--eps", "0.25", "--n", "8,16,32", "--trials", "200"],
    ["domination", "--radius", "4", "--trials", "50"],
    ["sprinkling", "--n", "16,36", "--trials", "20"],
    ["special-component", "--n", "16", "--trials", "10", "--x-radius", "40"],
    ["renorm-field", "--n", "8", "--trials", "20"],
    ["transience", "--n", "4,8", "--trials", "4"],
]


def test_10_reproducibility(tmp_path):
    mismatched = []
    for argv in SUBCOMMAND_RUNS:
        outs = []
        for rep in ("a", "b"):
            d = tmp_path / rep / argv[0]
            assert main(argv + ["--seed", "7", "--out", str(d)]) == 0
            outs.append({f.name: f.read_bytes() for f in sorted(d.iterdir())})
        if outs[0] != outs[1]:
            mismatched.append(argv[0])
    ok = not mismatched
    record(10, ok, f"{len(SUBCOMMAND_RUNS)} subcommands re-run; mismatches: {mismatched or 'none'}")
    assert ok
