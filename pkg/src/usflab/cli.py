"""Command-line entry point.

    usflab <subcommand> [--config FILE] [--seed S] [--out DIR] ...

Settings are resolved as: command-line flags, then ``USFLAB_OUT`` (output
directory only), then the ``key = value`` config file, then the defaults
listed in ``DEFAULTS``.  Exit codes: 0 success, 1 usage error, 2 runtime
failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

from . import __version__
from . import experiments as ex
from .lattice import Window
from .seeding import fresh_seed

SUBCOMMANDS = ("domination", "connect-scaling", "sprinkling", "special-component",
               "renorm-field", "transience", "verify")

COMMON = {"seed": None, "trials": 100, "out": "results", "workers": 1, "d": 3, "k": 1,
          "eps": 0.25, "lambda": "axis-lines", "lambda_axis": 0, "padding": None}

DEFAULTS: dict[str, dict[str, Any]] = {
    "domination": {"d": 2, "eps": 1.0, "radius": 4, "trials": 1000},
    "connect-scaling": {"n": [8, 16, 32], "trials": 200},
    "sprinkling": {"d": 2, "eps": 0.5, "lambda": "independent-wusf", "n": [16, 36, 64],
                   "m": None, "layers": None},
    "special-component": {"d": 2, "eps": 0.5, "lambda": "independent-wusf", "n": [16, 36, 64],
                          "m": None, "layers": None, "x_radius": None},
    "renorm-field": {"n": [8, 16, 32], "coarse_radius": 5, "coarse_shape": "line"},
    "transience": {"n": [8, 16, 32], "trials": 50, "tol": 1e-8},
    "verify": {},
}

INT_KEYS = {"seed", "trials", "workers", "d", "k", "lambda_axis", "padding", "radius", "m",
            "layers", "x_radius", "coarse_radius"}
FLOAT_KEYS = {"eps", "tol"}
LIST_KEYS = {"n"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    subcommand: str
    values: dict[str, Any] = field(default_factory=dict)
    ci: bool = False

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)


def _convert(key: str, raw: Any) -> Any:
    if raw is None or raw == "" or raw == "none":
        return None
    try:
        if key in LIST_KEYS:
            if isinstance(raw, (list, tuple)):
                return [int(x) for x in raw]
            return [int(x) for x in str(raw).split(",") if x.strip()]
        if key in INT_KEYS:
            return int(raw)
        if key in FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise UsageError(f"invalid value for {key}: {raw!r}") from None
    return raw


def read_config_file(path: str) -> dict[str, Any]:
    """``key = value`` lines; ``#`` starts a comment.  Dashes in keys become underscores."""
    out = {}
    try:
        text = open(path).read()
    except OSError as err:
        raise UsageError(f"cannot read config file {path}: {err.strerror}") from None
    for num, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = _convert(key.replace("-", "_"), val)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="usflab", description="Wired spanning forest and box percolation experiments.")
    p.add_argument("--version", action="version", version=f"usflab {__version__}")
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="key = value config file")
        s.add_argument("--ci", action="store_true", default=None,
                       help="CI mode: --seed becomes mandatory (also enabled by CI=true)")
        if name == "verify":
            s.add_argument("--seed", type=int)
            continue
        s.add_argument("--seed", type=int)
        s.add_argument("--trials", type=int)
        s.add_argument("--out", help="output directory (env USFLAB_OUT)")
        s.add_argument("--workers", type=int)
        s.add_argument("--d", type=int)
        s.add_argument("--k", type=int)
        s.add_argument("--eps", type=float)
        if name != "domination" and name != "transience":
            s.add_argument("--lambda", dest="lambda",
                           help="axis-lines | independent-wusf | full | file:PATH")
            s.add_argument("--lambda-axis", dest="lambda_axis", type=int)
        if name != "domination":
            s.add_argument("--n", help="comma-separated radii")
            s.add_argument("--padding", type=int)
        if name == "domination":
            s.add_argument("--radius", type=int, help="window is B_radius")
        if name in ("sprinkling", "special-component"):
            s.add_argument("--m", type=int, help="inner radius (default: each n)")
            s.add_argument("--layers", type=int, help="number of annuli (default 4d)")
        if name == "special-component":
            s.add_argument("--x-radius", dest="x_radius", type=int)
        if name == "renorm-field":
            s.add_argument("--coarse-radius", dest="coarse_radius", type=int)
            s.add_argument("--coarse-shape", dest="coarse_shape", choices=("line", "box"))
        if name == "transience":
            s.add_argument("--tol", type=float)
    return p


def resolve(argv: Sequence[str], env: dict | None = None) -> RunConfig:
    env = os.environ if env is None else env
    args = build_parser().parse_args(list(argv))
    if args.subcommand is None:
        raise UsageError("usflab: a subcommand is required: " + ", ".join(SUBCOMMANDS))
    name = args.subcommand
    values = dict(COMMON)
    values.update(DEFAULTS[name])
    if args.config:
        extra = read_config_file(args.config)
        unknown = set(extra) - set(values) - {"ci"}
        if unknown:
            raise UsageError(f"unknown config keys for {name}: {', '.join(sorted(unknown))}")
        values.update(extra)
    if env.get("USFLAB_OUT"):
        values["out"] = env["USFLAB_OUT"]
    for key, val in vars(args).items():
        if key in ("subcommand", "config", "ci") or val is None:
            continue
        values[key] = _convert(key, val)
    ci = bool(args.ci) or bool(values.pop("ci", None)) or env.get("CI", "").lower() in ("1", "true", "yes")
    cfg = RunConfig(name, values, ci)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    v = cfg.values
    if cfg.subcommand == "verify":
        return
    for key in ("trials", "workers", "k"):
        if v[key] is None or v[key] < 1:
            raise UsageError(f"--{key} must be >= 1")
    if v["d"] is None or v["d"] < 2:
        raise UsageError("--d must be >= 2")
    if not 0 <= v["eps"] <= 1:
        raise UsageError("--eps must lie in [0, 1]")
    if "n" in v and (not v["n"] or min(v["n"]) < 1):
        raise UsageError("--n needs a list of positive radii")
    if "lambda" in v and cfg.subcommand not in ("domination", "transience"):
        spec = str(v["lambda"])
        if not (spec.startswith("file:") or spec in ex.LAMBDA_KINDS):
            raise UsageError(f"unknown --lambda {spec!r}")


def _lambda(cfg: RunConfig) -> ex.LambdaSpec:
    return ex.LambdaSpec.parse(cfg["lambda"], axis=cfg["lambda_axis"], padding=cfg["padding"])


def _echo_config(cfg: RunConfig) -> dict[str, Any]:
    vals = {k: v for k, v in cfg.values.items() if k not in ("out", "workers")}
    return {"subcommand": cfg.subcommand, **vals}


def dispatch(cfg: RunConfig) -> ex.Report:
    v, name = cfg.values, cfg.subcommand
    common = {"trials": v["trials"], "seed": v["seed"], "workers": v["workers"]}
    if name == "domination":
        return ex.run_domination_coupling(Window.box(v["radius"], v["d"]), v["k"], v["eps"], **common)
    if name == "connect-scaling":
        return ex.run_connection_scaling(_lambda(cfg), v["d"], v["k"], v["eps"], v["n"], **common)
    if name == "transience":
        return ex.run_transience_probe(v["d"], v["k"], v["eps"], v["n"], padding=v["padding"],
                                       tol=v["tol"], **common)
    reports = []
    for n in v["n"]:
        if name == "sprinkling":
            m = n if v["m"] is None else v["m"]
            reports.append(ex.run_sprinkling(_lambda(cfg), v["d"], v["k"], v["eps"], m, n,
                                             layers=v["layers"], **common))
        elif name == "special-component":
            m = n if v["m"] is None else v["m"]
            reports.append(ex.run_special_component(_lambda(cfg), v["d"], v["k"], v["eps"], m, n,
                                                    layers=v["layers"], x_radius=v["x_radius"],
                                                    **common))
        else:
            R = v["coarse_radius"]
            coarse = ex.coarse_line(R, v["d"]) if v["coarse_shape"] == "line" else Window.box(R, v["d"])
            reports.append(ex.run_renormalized_field(_lambda(cfg), v["d"], v["k"], v["eps"], n,
                                                     coarse, **common))
    return ex.combine_reports(name, _echo_config(cfg), reports)


def _precheck(cfg: RunConfig) -> None:
    """Driver preconditions that can be checked without sampling."""
    v, name = cfg.values, cfg.subcommand
    import math
    for n in v.get("n") or []:
        if name in ("sprinkling", "special-component"):
            r = math.isqrt(n)
            if r * r != n:
                raise UsageError(f"n must be a perfect square for {name}, got {n}")
            m = n if v["m"] is None else v["m"]
            gap = r if name == "sprinkling" else 2 * r
            if not n <= m <= m + gap <= 8 * v["d"] * n:
                raise UsageError(f"need n <= m <= m + {'' if gap == r else '2 '}sqrt(n) <= 8dn; "
                                 f"violated for n={n}, m={m}, d={v['d']}")
        if name == "renorm-field" and n <= 2 * v["k"]:
            raise UsageError(f"renorm-field needs n > 2k, got n={n}, k={v['k']}")
    if name == "transience" and v["d"] < 3:
        raise UsageError("transience needs d >= 3")


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = resolve(argv)
        if cfg.subcommand == "verify":
            from .verify import run_checks, format_table
            seed = cfg.get("seed")
            results = run_checks(seed=0 if seed is None else seed)
            print(format_table(results))
            return 0 if all(r.passed for r in results) else 2
        if cfg.values["seed"] is None:
            if cfg.ci:
                raise UsageError("--seed is mandatory in CI mode")
            cfg.values["seed"] = fresh_seed()
            print(f"seed: {cfg.values['seed']}", file=sys.stderr)
        _precheck(cfg)
        report = dispatch(cfg)
    except (UsageError, ex.PreconditionError) as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # runtime failure in a driver
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    report.config = _echo_config(cfg)
    csv_path, json_path = report.write(cfg["out"], cfg.subcommand)
    print(csv_path)
    print(json_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
