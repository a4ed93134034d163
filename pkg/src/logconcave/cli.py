"""Command line interface: ``logconcave <command> [options]``.

Every command accepts ``--config path.json`` whose keys fill any option
not given on the command line (dashes become underscores), ``--out dir``
for output files, ``--seed`` and ``--threads``.
"""
import argparse
import json
import os
import sys

import numpy as np

DEFAULTS = {
    "fit": {"method": "auto"},
    "risk": {"scenario": "uniform_interval", "replicates": 20, "n_grid": None},
    "envelope": {"grid": None, "lo": -5.0, "hi": 5.0, "step": 0.01},
    "invelope": {"d": 2, "eta": 1e-3},
    "check_class": {"beta": 2.0, "lam": None, "tau": None, "pairs": 100000},
    "lsc_demo": {"n": 200, "replicates": 100, "ells": "0,5"},
}


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values")
    common.add_argument("--out", help="output directory, or json/csv/svg to print to stdout")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)

    p = argparse.ArgumentParser(prog="logconcave", description="Log-concave density estimation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("fit", parents=[common], help="fit the log-concave MLE to a data file")
    s.add_argument("--data", help="text file with one point per row")
    s.add_argument("--method", default=None, choices=["auto", "active_set", "ralg", "sqrtk"])

    s = sub.add_parser("risk", parents=[common], help="Monte Carlo risk table for a scenario")
    s.add_argument("--scenario", default=None,
                   help="uniform_interval, uniform_triangle, uniform_64gon (or a scenario in --config)")
    s.add_argument("--replicates", type=int, default=None)
    s.add_argument("--n-grid", dest="n_grid", default=None, help="comma separated sample sizes")

    s = sub.add_parser("envelope", parents=[common], help="tabulate the 1-d envelope F")
    s.add_argument("--grid", default=None, help="lo:hi:step, e.g. -10:10:0.01")
    s.add_argument("--lo", type=float, default=None)
    s.add_argument("--hi", type=float, default=None)
    s.add_argument("--step", type=float, default=None)

    s = sub.add_parser("invelope", parents=[common], help="build the polytope P_eta")
    s.add_argument("--d", type=int, default=None)
    s.add_argument("--eta", type=float, default=None)

    s = sub.add_parser("check-class", parents=[common], help="certify contour separation for a density")
    s.add_argument("--density", help="JSON description, e.g. '{\"family\": \"gaussian\", \"params\": {\"d\": 2}}'")
    s.add_argument("--beta", type=float, default=None)
    s.add_argument("--lambda", dest="lam", type=float, default=None)
    s.add_argument("--tau", type=float, default=None)
    s.add_argument("--pairs", type=int, default=None)

    s = sub.add_parser("lsc-demo", parents=[common], help="risk along a sequence tending to a uniform ball")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--replicates", type=int, default=None)
    s.add_argument("--ells", default=None, help="comma separated ell values")
    return p


def _merge(args):
    key = args.command.replace("-", "_")
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = {k.replace("-", "_"): v for k, v in json.load(fh).items()}
    for k, v in cfg.items():
        if getattr(args, k, None) is None:
            setattr(args, k, v)
    for k, v in DEFAULTS.get(key, {}).items():
        if getattr(args, k, None) is None:
            setattr(args, k, v)
    args.seed = 0 if args.seed is None else args.seed
    args.threads = 1 if args.threads is None else args.threads
    args._config = cfg
    return args


# --out values that mean "print to stdout in this format" rather than a directory
STDOUT = (None, "-", "json", "csv", "svg")


def _write(args, name, text):
    """Write to --out/name, or to stdout when --out is absent or a format name."""
    if args.out in STDOUT:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return None
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, name)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    print(path)
    return path


def _ints(v):
    if v is None or isinstance(v, list):
        return v
    return [int(x) for x in str(v).split(",") if x]


# ----------------------------------------------------------------------
# commands

def cmd_fit(args):
    from .mle import fit
    if args.data:
        X = np.loadtxt(args.data, delimiter="," if args.data.endswith(".csv") else None, ndmin=2)
    elif "data" in args._config:
        X = np.atleast_2d(np.asarray(args._config["data"], dtype=float))
    elif "density" in args._config:
        from .densities import density_from_json
        f = density_from_json(args._config["density"])
        X = f.sample(int(args._config.get("n", 100)), args.seed)
    else:
        raise SystemExit("fit needs --data or a config with 'data' or 'density'")
    if X.shape[0] == 1:
        X = X.T
    res = fit(X, method=args.method)
    out = res.to_json()
    out["integral"] = res.integral
    out["log_likelihood"] = float(np.mean(res.logpdf(X)))
    _write(args, "fit.json", json.dumps(out, indent=2))
    return 0


def cmd_risk(args):
    from . import bench
    if "density" in args._config:
        sc = bench.Scenario.from_json({k: args._config[k] for k in
                                       ("density", "d", "n_grid", "replicates", "seed", "solver",
                                        "divergences", "name") if k in args._config})
        sc.seed = args.seed if args.seed else sc.seed
    else:
        kw = {"replicates": args.replicates, "seed": args.seed}
        if args.n_grid:
            kw["n_grid"] = _ints(args.n_grid)
        if args.scenario == "uniform_interval":
            sc = bench.uniform_interval_scenario(**kw)
        elif args.scenario in ("uniform_triangle", "uniform_64gon"):
            sc = bench.uniform_polygon_scenario(args.scenario.split("_")[1], **kw)
        else:
            raise SystemExit(f"unknown scenario {args.scenario!r}")
    partial = None
    if args.out not in STDOUT:
        os.makedirs(args.out, exist_ok=True)
        partial = os.path.join(args.out, "risk.partial.csv")
    table = bench.run_scenario(sc, threads=args.threads, partial_path=partial)
    if partial and os.path.exists(partial):
        os.remove(partial)
    if args.out == "csv":
        sys.stdout.write(bench.to_csv(table))
    elif args.out == "svg":
        sys.stdout.write(bench.to_svg(table))
    elif args.out in STDOUT:
        _write(args, "risk.json", json.dumps(table.to_json(), indent=2, default=float))
    else:
        for fmt in ("csv", "svg", "json"):
            print(bench.emit(table, fmt, os.path.join(args.out, f"risk.{fmt}")))
    return 0


def cmd_envelope(args):
    from .envelope1d import envelope_table
    if args.grid:
        args.lo, args.hi, args.step = (float(v) for v in str(args.grid).split(":"))
    T = envelope_table(float(args.lo), float(args.hi), float(args.step))
    lines = ["x,F,lower,upper"] + [",".join(repr(float(v)) for v in row) for row in T]
    _write(args, "envelope.csv", "\n".join(lines) + "\n")
    return 0


def cmd_invelope(args):
    from .invelopes import Invelope, build_P, complement_volume, VERTEX_ATOL, invelope_contains
    d, eta = int(args.d), float(args.eta)
    P = build_P(eta, d)
    J = Invelope(eta, d)
    out = P.to_json()
    out["complement_volume_J"] = complement_volume(J)
    out["complement_volume_P"] = 1.0 - P.volume
    out["vertices_in_J"] = bool(np.all(invelope_contains(J, P.vertices, VERTEX_ATOL)))
    _write(args, "invelope.json", json.dumps(out, indent=2))
    return 0


def cmd_check_class(args):
    from .densities import density_from_json
    from .separation import SeparationParams, check_grad_criterion, check_separation_pairs
    spec = args.density if args.density is not None else args._config.get("density")
    if spec is None:
        raise SystemExit("check-class needs --density or a config with 'density'")
    if isinstance(spec, str):
        spec = json.loads(open(spec).read()) if os.path.exists(spec) else json.loads(spec)
    f = density_from_json(spec)
    if args.lam is None:
        raise SystemExit("check-class needs --lambda")
    params = SeparationParams(float(args.beta), float(args.lam),
                              np.inf if args.tau is None else float(args.tau))
    pairs = check_separation_pairs(f, params, int(args.pairs), args.seed)
    grad = check_grad_criterion(f, params, seed=args.seed)
    out = {"pairs": pairs.to_json(), "gradient": grad.to_json(),
           "pass": bool(pairs.passed and grad.passed)}
    _write(args, "certificate.json", json.dumps(out, indent=2, default=float))
    return 0


def cmd_lsc_demo(args):
    from .bench import lsc_demo
    res = lsc_demo(ell_grid=_ints(args.ells), n=int(args.n), replicates=int(args.replicates),
                   seed=args.seed, threads=args.threads)
    out = {"ell_grid": res.ell_grid, "mass_on_ball": res.masses,
           "mean_dx_sq": {str(k): v for k, v in res.means().items()},
           "trend_pvalue": res.trend_pvalue(), "permuted_pvalue": res.trend_pvalue(permute_seed=args.seed + 1),
           "pass": res.passed()}
    if args.out not in STDOUT:
        lines = ["ell,replicate,dx_sq,converged"] + [
            f"{r['ell']},{r['replicate']},{r['dx_sq']!r},{'true' if r['converged'] else 'false'}"
            for r in res.rows]
        _write(args, "lsc.csv", "\n".join(lines) + "\n")
    _write(args, "lsc.json", json.dumps(out, indent=2))
    return 0


COMMANDS = {"fit": cmd_fit, "risk": cmd_risk, "envelope": cmd_envelope, "invelope": cmd_invelope,
            "check-class": cmd_check_class, "lsc-demo": cmd_lsc_demo}


def main(argv=None):
    args = _merge(_parser().parse_args(argv))
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
