"""Effective resistance to the boundary of B_n in three regimes (d = 3).

    python3 scripts/transience_contrast.py --n 8,16,32 --trials 50
"""
import argparse

from usflab.experiments import REGIMES, run_transience_probe

p = argparse.ArgumentParser()
p.add_argument("--d", type=int, default=3)
p.add_argument("--k", type=int, default=1)
p.add_argument("--eps", type=float, default=0.25)
p.add_argument("--n", default="8,16,32")
p.add_argument("--trials", type=int, default=50)
p.add_argument("--seed", type=int, default=9)
p.add_argument("--workers", type=int, default=1)
p.add_argument("--out", default="results/scripts")
a = p.parse_args()

rep = run_transience_probe(a.d, a.k, a.eps, [int(x) for x in a.n.split(",")], a.trials, a.seed,
                           workers=a.workers)
rep.write(a.out, "transience")
for reg in REGIMES:
    s = rep.summary[reg]
    incs = ", ".join(f"{x['median']:.3f} [{x['ci'][0]:.3f}, {x['ci'][1]:.3f}]" for x in s["increments"])
    print(f"{reg:12s} median R {[round(x, 3) for x in s['median_R']]}  increments {incs}")
print("union increments below single, intervals separated:",
      rep.summary["union_single_ci_separated"])
