"""Coupling of the thinned wired UST with box percolation on a small window.

    python3 scripts/domination.py --radius 4 --trials 1000
"""
import argparse

from usflab.experiments import run_domination_coupling
from usflab.lattice import Window

p = argparse.ArgumentParser()
p.add_argument("--d", type=int, default=2)
p.add_argument("--k", type=int, default=1)
p.add_argument("--eps", type=float, default=1.0)
p.add_argument("--radius", type=int, default=4)
p.add_argument("--trials", type=int, default=1000)
p.add_argument("--seed", type=int, default=4)
p.add_argument("--out", default="results/scripts")
a = p.parse_args()

rep = run_domination_coupling(Window.box(a.radius, a.d), a.k, a.eps, a.trials, a.seed)
rep.write(a.out, "domination")
s = rep.summary
print(f"smallest conditional probability: {s['min_p']} ~ {s['min_p_float']:.5f} (threshold {s['threshold']})")
print(f"containment in {s['containment_frequency']:.2%} of trials")
print(f"percolation edges {s['phi_total']} of {s['H_total']}, 99.9% band {s['phi_band_999']}")
