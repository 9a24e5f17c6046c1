"""Site marginal of the coarse field and correlations along a line of sites.

    python3 scripts/renorm_field.py --n 8,16,32 --trials 300
"""
import argparse

from usflab.experiments import LambdaSpec, coarse_line, run_renormalized_field

p = argparse.ArgumentParser()
p.add_argument("--lambda", dest="lam", default="axis-lines")
p.add_argument("--d", type=int, default=3)
p.add_argument("--k", type=int, default=1)
p.add_argument("--eps", type=float, default=0.25)
p.add_argument("--n", default="8,16,32")
p.add_argument("--sites", type=int, default=0, help="line of sites 0..sites along e_1")
p.add_argument("--trials", type=int, default=300)
p.add_argument("--seed", type=int, default=8)
p.add_argument("--out", default="results/scripts")
a = p.parse_args()

for n in (int(x) for x in a.n.split(",")):
    rep = run_renormalized_field(LambdaSpec.parse(a.lam), a.d, a.k, a.eps, n,
                                 coarse_line(a.sites, a.d), a.trials, a.seed)
    rep.write(a.out, f"renorm_n{n}")
    corr = rep.summary["max_abs_corr"]
    print(f"n={n}: p_hat={rep.summary['p_hat']:.3f}" + (f"  max |corr| by distance {corr}" if corr else ""))
