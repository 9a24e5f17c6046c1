"""Failure probability of the box connection event against n.

    python3 scripts/connection_scaling.py --lambda axis-lines --n 8,16,32 --trials 200
"""
import argparse
import json

from usflab.experiments import LambdaSpec, run_connection_scaling

p = argparse.ArgumentParser()
p.add_argument("--lambda", dest="lam", default="axis-lines")
p.add_argument("--d", type=int, default=3)
p.add_argument("--k", type=int, default=1)
p.add_argument("--eps", type=float, default=0.25)
p.add_argument("--n", default="8,16,32")
p.add_argument("--trials", type=int, default=200)
p.add_argument("--seed", type=int, default=6)
p.add_argument("--out", default="results/scripts")
a = p.parse_args()

rep = run_connection_scaling(LambdaSpec.parse(a.lam), a.d, a.k, a.eps,
                             [int(x) for x in a.n.split(",")], a.trials, a.seed)
rep.write(a.out, f"connection_{a.lam.replace(':', '_').replace('/', '_')}")
for row in rep.rows:
    print(f"n={row['n']:3d}  p_fail={row['p_fail']:.3f}  "
          f"95% CI of p_connect [{row['ci_low']:.3f}, {row['ci_high']:.3f}]  "
          f"mean pieces in B_n {row['mean_pieces']:.1f}")
print(json.dumps({"fail_strictly_decreasing": rep.summary["fail_strictly_decreasing"]}))
