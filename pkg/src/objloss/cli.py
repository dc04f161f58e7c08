"""Command-line front end: bounds, experiment sweeps, and CSV emission.

Angles are taken in degrees on the command line (as in the experiment
figures) and converted to radians internally.  Every CSV starts with a
``#``-prefixed metadata block (tool version, command, region/model specs,
seed, trials) so each output file is reproducible from its own header.
Output files are written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__, analysis, lp, mps, regions, sampling

DEFAULT_TRIALS = 10000
CSV_HEADER = [
    "alpha_deg",
    "trials",
    "ratio_of_expectations",
    "stderr_roe",
    "expectation_of_ratio",
    "stderr_eor",
    "theory",
    "mean_max_w",
    "mean_max_v",
    "mean_range",
    "skipped",
]


def _fmt(x):
    if isinstance(x, float):
        return repr(float(x))  # shortest round-trip form, plain even for np.float64
    return str(x)


def _write_csv(path, metadata, rows):
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# objloss {__version__}\n")
            for key, value in metadata:
                fh.write(f"# {key} = {value}\n")
            fh.write(",".join(CSV_HEADER) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _result_row(alpha_deg, result, theory):
    return [
        alpha_deg,
        result.trials,
        result.ratio_of_expectations,
        result.stderr_ratio_of_expectations,
        result.expectation_of_ratio,
        result.stderr_expectation_of_ratio,
        theory,
        result.mean_max_w,
        result.mean_max_v,
        result.mean_range,
        result.skipped_trials,
    ]


def _parse_region(spec, dim):
    kind, sep, arg = spec.partition(":")
    if not sep and " " in spec:
        kind, arg = spec.split(None, 1)
    kind = kind.strip().lower()
    if kind == "ball":
        return regions.Ball(np.zeros(dim), 1.0)
    if kind == "square":
        return regions.Polytope(lp.box([0.0, 0.0], [1.0, 1.0]))
    if kind == "points":
        if not arg:
            raise ValueError("points region needs a file: --region points:FILE")
        return regions.PointSet(np.loadtxt(arg, ndmin=2))
    if kind == "mps":
        if not arg:
            raise ValueError("mps region needs a file: --region mps:FILE")
        return mps.to_region(mps.parse_mps_file(arg))
    if kind == "worst-case":
        if not arg:
            raise ValueError("worst-case region needs r: --region worst-case:R")
        return regions.make_worst_case_instance(float(arg))
    if kind == "binary":
        if not arg:
            raise ValueError("binary region needs n: --region binary:N")
        return regions.BinarySet(int(arg))
    raise ValueError(
        f"unknown region {spec!r}; expected ball, square, points:FILE, mps:FILE, "
        "worst-case:R or binary:N"
    )


def _parse_alpha_grid(text):
    grid = [float(t) for t in text.split(",") if t.strip()]
    if not grid:
        raise ValueError("alpha grid is empty")
    for a in grid:
        if not 0.0 < a < 90.0:
            raise ValueError(f"alpha grid values must lie in (0, 90) degrees, got {a}")
    return grid


def _fixed_alpha_sampler(model, n, alpha_rad):
    if model == "pd1":
        return sampling.pd1_sampler(n, alpha_rad)
    if model == "pd2":
        return sampling.pd2_sampler(n, alpha_rad)
    if model == "swap":
        return sampling.swap_sampler(n=n, alpha=alpha_rad)
    raise ValueError(f"unknown fixed-angle model {model!r}")


def _random_alpha_sampler(spec, n, base):
    # spec: random-alpha:uniform:LO,HI  or  random-alpha:point:A  (degrees)
    parts = spec.split(":")
    if len(parts) < 2:
        raise ValueError(
            "random-alpha needs a distribution, e.g. random-alpha:uniform:20,40"
        )
    dist = parts[1].lower()
    arg = parts[2] if len(parts) > 2 else ""
    if dist == "uniform":
        lo, hi = (float(t) for t in arg.split(","))
        dist_fn = sampling.uniform_alpha(math.radians(lo), math.radians(hi))
    elif dist == "point":
        dist_fn = sampling.point_alpha(math.radians(float(arg)))
    else:
        raise ValueError(f"unknown alpha distribution {dist!r} (uniform or point)")
    return sampling.random_alpha_sampler(n, dist_fn, base=base)


def _sweep(region, model, base, alpha_grid, trials, seed, workers):
    """One ExperimentResult per grid point (a single one for random-alpha)."""
    results = []
    if model.startswith("random-alpha"):
        sampler = _random_alpha_sampler(model, region.dim, base)
        res = analysis.run_experiment(
            region, sampler, trials, seed, workers=workers, stream_offset=0
        )
        theory = (1.0 - res.mean_cos_alpha) / 2.0
        results.append((math.nan, res, theory))
        return results
    for k, alpha_deg in enumerate(alpha_grid):
        alpha = math.radians(alpha_deg)
        sampler = _fixed_alpha_sampler(model, region.dim, alpha)
        res = analysis.run_experiment(
            region, sampler, trials, seed, workers=workers, stream_offset=k * trials
        )
        results.append((alpha_deg, res, analysis.model_case_value(alpha)))
    return results


def cmd_bound(args):
    try:
        params = analysis.WorstCaseParams(r=args.r, alpha=math.radians(args.alpha))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("the bound requires sin(alpha) <= r <= cos(alpha)", file=sys.stderr)
        return 2
    bound = analysis.worst_case_bound(params)
    instance = regions.make_worst_case_instance(params.r)
    pair = sampling.ObjectivePair(
        w=np.array([math.sin(params.alpha), math.cos(params.alpha)]),
        v=np.array([0.0, 1.0]),
        alpha=params.alpha,
        z=np.zeros(2),
        model_tag=sampling.PD2,
    )
    attained = analysis.scaled_loss(instance, pair)
    print(f"r                = {_fmt(params.r)}")
    print(f"rho              = {_fmt(params.rho)}")
    print(f"alpha_deg        = {_fmt(float(args.alpha))}")
    print(f"bound            = {_fmt(bound)}")
    print(f"attained_slos    = {_fmt(attained)}")
    print(f"sin_alpha_over_r = {_fmt(math.sin(params.alpha) / params.r)}")
    return 0


def cmd_experiment(args, model=None, region_spec=None):
    region_spec = region_spec or args.region
    model = model or args.model
    region = _parse_region(region_spec, args.dim)
    grid = None if model.startswith("random-alpha") else _parse_alpha_grid(args.alpha_grid)
    results = _sweep(region, model, args.base, grid, args.trials, args.seed, args.workers)
    metadata = [
        ("command", args.command),
        ("region", region_spec),
        ("model", model),
        ("alpha_grid_deg", args.alpha_grid if grid else "per-trial"),
        ("trials", args.trials),
        ("seed", args.seed),
    ]
    rows = [_result_row(a, res, theory) for a, res, theory in results]
    _write_csv(args.out, metadata, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_netlib(args):
    problem = mps.parse_mps_file(args.mps)
    print(
        f"parsed {problem.name or os.path.basename(args.mps)}: "
        f"{problem.num_rows} rows, {problem.num_columns} columns"
    )
    return cmd_experiment(args, region_spec=f"mps:{args.mps}")


def cmd_swap(args):
    return cmd_experiment(args, model="swap")


def cmd_perturb_binary(args):
    region = regions.BinarySet(args.n)
    if args.w:
        w = np.array([float(t) for t in args.w.split(",")])
    else:
        # deterministic default truth, drawn away from the trial streams
        w = sampling.RngStream(args.seed, 2**32).generator().standard_normal(args.n)
    sigmas = [float(t) for t in args.sigma_grid.split(",") if t.strip()]
    if not sigmas:
        raise ValueError("sigma grid is empty")
    rows = []
    for k, sigma in enumerate(sigmas):
        res = analysis.perturb_binary_experiment(
            region, w, sigma, args.trials, args.seed,
            workers=args.workers, stream_offset=k * args.trials,
        )
        theory = (1.0 - math.cos(res.alpha)) / 2.0
        rows.append(_result_row(math.degrees(res.alpha), res, theory))
    metadata = [
        ("command", "perturb-binary"),
        ("region", f"binary:{args.n}"),
        ("sigma_grid", args.sigma_grid),
        ("w", ",".join(repr(float(x)) for x in w)),
        ("trials", args.trials),
        ("seed", args.seed),
    ]
    _write_csv(args.out, metadata, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_identities(args):
    region = _parse_region(args.region, args.dim)
    grid = _parse_alpha_grid(args.alpha_grid)
    if args.trials < 100:
        print(
            f"warning: {args.trials} trials is below the contract minimum of 100; "
            "z-scores will be noisy",
            file=sys.stderr,
        )
    ok = True
    for k, alpha_deg in enumerate(grid):
        sampler = _fixed_alpha_sampler(args.model, region.dim, math.radians(alpha_deg))
        res = analysis.run_experiment(
            region, sampler, args.trials, args.seed,
            workers=args.workers, stream_offset=k * args.trials,
        )
        report = analysis.check_expectation_identities(res)
        ok = ok and report.all_passed
        for check in report.checks:
            state = "pass" if check.passed else "FAIL"
            print(
                f"alpha={alpha_deg:g} deg  {check.name:<32} "
                f"z={check.z:+.3f}  [{state}]"
            )
    print("all identities within 4 sigma" if ok else "some identities exceed 4 sigma")
    return 0


def _add_common(parser, *, needs_out=True, needs_model=True):
    parser.add_argument("--alpha-grid", default="15,30,45,60",
                        help="comma-separated angles in degrees, inside (0, 90)")
    parser.add_argument("--trials", type=int, default=DEFAULT_TRIALS,
                        help=f"pairs per grid point (default {DEFAULT_TRIALS})")
    parser.add_argument("--seed", type=int,
                        default=int(os.environ.get("OBJLOSS_SEED", "20240901")),
                        help="master seed (env OBJLOSS_SEED overrides the default)")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker threads; output is identical for any count")
    parser.add_argument("--dim", type=int, default=2,
                        help="dimension for the ball region (default 2)")
    if needs_model:
        parser.add_argument("--model", default="pd1",
                            help="pd1 | pd2 | swap | random-alpha:uniform:LO,HI "
                                 "| random-alpha:point:A")
        parser.add_argument("--base", default="pd1", choices=("pd1", "pd2"),
                            help="base model for random-alpha")
    if needs_out:
        parser.add_argument("--out", required=True, help="CSV output path")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="objloss",
        description="Loss in true objective value under a misspecified linear objective",
    )
    parser.add_argument("--version", action="version", version=f"objloss {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="evaluate the worst-case bound and its tight instance")
    p.add_argument("--r", type=float, required=True, help="inner radius, in (0, 1)")
    p.add_argument("--alpha", type=float, required=True, help="angle in degrees")
    p.set_defaults(fn=cmd_bound)

    p = sub.add_parser("experiment", help="Monte Carlo sweep over an alpha grid")
    p.add_argument("--region", required=True,
                   help="ball | square | points:FILE | mps:FILE | worst-case:R | binary:N")
    _add_common(p)
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("netlib", help="experiment over the feasible set of an MPS file")
    p.add_argument("--mps", required=True, help="path to the MPS file")
    _add_common(p)
    p.set_defaults(fn=cmd_netlib)

    p = sub.add_parser("swap", help="experiment under the component-swap model")
    p.add_argument("--region", required=True,
                   help="ball | square | points:FILE | mps:FILE | worst-case:R | binary:N")
    _add_common(p)
    p.set_defaults(fn=cmd_swap)

    p = sub.add_parser("perturb-binary",
                       help="explicit Gaussian perturbation of a fixed binary objective")
    p.add_argument("--n", type=int, required=True, help="number of binary variables")
    p.add_argument("--sigma-grid", default="0.05,0.1,0.2,0.5",
                   help="comma-separated perturbation scales (alpha = arctan sigma)")
    p.add_argument("--w", default="",
                   help="comma-separated true objective (default: seeded Gaussian draw)")
    _add_common(p, needs_model=False)
    p.set_defaults(fn=cmd_perturb_binary)

    p = sub.add_parser("identities", help="z-score report of the expectation identities")
    p.add_argument("--region", required=True,
                   help="ball | square | points:FILE | mps:FILE | worst-case:R | binary:N")
    _add_common(p, needs_out=False)
    p.set_defaults(fn=cmd_identities)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, TypeError, mps.MpsParseError,
            regions.UnboundedRegionError, lp.NumericalFailureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
