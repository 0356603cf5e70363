"""Command-line interface: summarize, surface, minni, isobols, strata, variance, oracle.

Exit status: 0 success, 1 domain error (infeasible or degenerate input),
2 usage error or unreadable input, 3 oracle residual breach.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import contour, minni, oracle, surface, variance
from .errors import NoAnalysisNeeded, SensitivityError
from .summary import ObservedSummary, read_csv, round_sig, summarize, synthesize_summary

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_BREACH = 0, 1, 2, 3

# oracle acceptance limits
RESIDUAL_LIMITS = {
    "total_expectation": 1e-14,
    "mean_decomposition": 1e-14,
    "mean_difference_bound": 1e-14,
    "ignorability": 1e-14,
    "ratio_decomposition": 1e-12,
    "variance_gap": 1e-12,
}


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _range(text: str) -> tuple:
    vals = _floats(text)
    if len(vals) != 2 or not vals[0] < vals[1]:
        raise argparse.ArgumentTypeError("range must be 'lo,hi' with lo < hi")
    return tuple(vals)


def _mapping(text: str) -> dict:
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected label=value, got {item!r}")
        out[key.strip()] = float(value)
    return out


def read_config(path) -> dict:
    """key=value lines; '#' starts a comment; keys use option names with - or _."""
    cfg = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{n}: expected key=value")
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _budget(p):
    p.add_argument("--k-se", type=float, help="bias budget in standard errors of the observed mean")
    p.add_argument("--k-sigma", type=float, help="bias budget k*sigma in outcome units")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minnisens", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output and diagnostics")
    common.add_argument("--config", help="key=value file mirroring the flags (flags win)")
    common.add_argument("-o", "--output", help="write the main result here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", parents=[common], help="observed summary from CSV or published values")
    p.add_argument("input", nargs="?", help="CSV with header outcome[,stratum]")
    p.add_argument("--outcome-kind", choices=["binary", "continuous"])
    p.add_argument("--ddof", type=int, default=0, choices=[0, 1])
    p.add_argument("--synthesize", action="store_true")
    p.add_argument("--mu-obs", type=float)
    p.add_argument("--frac-missing", type=float)
    p.add_argument("--n-observed", type=int)
    p.add_argument("--sd-obs", type=float)

    p = sub.add_parser("surface", parents=[common], help="calibrated bias over a parameter grid")
    p.add_argument("--summary", required=True)
    p.add_argument("--pi0", type=_floats, default=list(surface.DEFAULT_PI0))
    p.add_argument("--exp-beta1", type=_floats, default=[2.0, 3.0])
    p.add_argument("--exp-gamma1", type=_floats, default=[2.0, 3.0])
    p.add_argument("--link", choices=[surface.LOGISTIC, surface.IDENTITY], default=surface.LOGISTIC)
    p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("minni", parents=[common], help="MinNI index on the difference or ratio scale")
    p.add_argument("--summary", required=True)
    p.add_argument("--scale", choices=minni.SCALES, default=minni.DIFFERENCE)
    p.add_argument("--m", type=int, default=2, help="confounder levels")
    _budget(p)

    p = sub.add_parser("isobols", parents=[common], help="equal-bias curves as CSV and SVG")
    p.add_argument("--summary", required=True)
    p.add_argument("--plane", choices=contour.PLANES, default=contour.GAMMA1_BETA1)
    p.add_argument("--levels", type=_floats, help="absolute bias levels (surface plane)")
    p.add_argument("--levels-se", type=_floats, help="levels in standard errors")
    p.add_argument("--pi0", type=float, default=0.5)
    p.add_argument("--gamma1-range", type=_range, default=(0.0, math.log(4.0)))
    p.add_argument("--beta1-range", type=_range, default=(0.0, math.log(4.0)))
    p.add_argument("--resolution", type=int, default=contour.DEFAULT_RESOLUTION)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--csv", dest="csv_path", help="write CSV polylines here")
    p.add_argument("--svg", dest="svg_path", help="write the SVG plot here")

    p = sub.add_parser("strata", parents=[common], help="per-stratum bias and MinNI for a discrete covariate")
    p.add_argument("input", help="CSV with header outcome,stratum")
    p.add_argument("--ed", type=_mapping, help="per-stratum ED_YU as label=value,...")
    p.add_argument("--rd", type=_mapping, help="per-stratum RD_UG as label=value,...")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--ddof", type=int, default=0, choices=[0, 1])
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    _budget(p)

    p = sub.add_parser("variance", parents=[common], help="variance gap var(Y) - var(Y|G=1)")
    for name in ("vd-yu", "vd-ug", "ed-yu", "rd-ug", "pr-g1"):
        p.add_argument(f"--{name}", type=float, required=True)

    p = sub.add_parser("oracle", parents=[common], help="exact-enumeration identity report")
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--n-joints", type=int, default=10000)
    p.add_argument("--max-m", type=int, default=6)
    return parser


def _load_summary(path) -> ObservedSummary:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read summary {path}: {exc}") from None
    try:
        return ObservedSummary.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid summary {path}: {exc}") from None


def _write(args, text: str, out):
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        out.write(text)


def _k_sigma(args, summary) -> float:
    if (args.k_se is None) == (args.k_sigma is None):
        raise UsageError("give exactly one of --k-se or --k-sigma")
    return args.k_sigma if args.k_sigma is not None else args.k_se * summary.se_obs


def cmd_summarize(args, out):
    if args.synthesize:
        if None in (args.mu_obs, args.frac_missing, args.n_observed):
            raise UsageError("--synthesize needs --mu-obs, --frac-missing and --n-observed")
        s = synthesize_summary(args.mu_obs, args.frac_missing, args.n_observed,
                               args.outcome_kind or "binary", args.sd_obs)
    else:
        if not args.input:
            raise UsageError("summarize needs an input CSV or --synthesize")
        try:
            data = read_csv(args.input, args.outcome_kind)
        except OSError as exc:
            raise UsageError(f"cannot read {args.input}: {exc}") from None
        s = summarize(data, args.ddof)
    _write(args, s.to_json() + "\n", out)
    return EXIT_OK


def cmd_surface(args, out):
    s = _load_summary(args.summary)
    cells = surface.bias_grid(s, args.pi0, args.exp_beta1, args.exp_gamma1, args.link)
    text = surface.grid_to_json(cells) + "\n" if args.format == "json" or args.json else surface.grid_to_csv(cells)
    _write(args, text, out)
    return EXIT_DOMAIN if any(c.error for c in cells) else EXIT_OK


def cmd_minni(args, out):
    s = _load_summary(args.summary)
    ks = _k_sigma(args, s)
    if args.scale == minni.DIFFERENCE:
        res = minni.minni_difference(s, ks, args.m)
    else:
        if s.mu_obs == 0:
            raise SensitivityError("coefficient of variation undefined for mu_obs = 0")
        res = minni.minni_ratio(s, ks / s.mu_obs, args.m)
    text = res.to_json() + "\n"
    if not args.json:
        text = res.describe() + "\n" + text
    _write(args, text, out)
    return EXIT_OK if res.feasible else EXIT_DOMAIN


def cmd_isobols(args, out):
    s = _load_summary(args.summary)
    if args.plane == contour.GAMMA1_BETA1:
        if (args.levels is None) == (args.levels_se is None):
            raise UsageError("give exactly one of --levels or --levels-se")
        levels = args.levels if args.levels is not None else [k * s.se_obs for k in args.levels_se]
        iset = contour.isobol_surface(s, args.pi0, args.gamma1_range, args.beta1_range, levels, args.resolution)
    else:
        if args.levels_se is None:
            raise UsageError("MinNI planes need --levels-se")
        scale = minni.DIFFERENCE if args.plane == contour.ED_RD else minni.RATIO
        iset = contour.minni_curves(s, scale, args.levels_se, args.m)
    if args.csv_path:
        Path(args.csv_path).write_text(contour.to_csv(iset), encoding="utf-8")
    if args.svg_path:
        Path(args.svg_path).write_text(contour.to_svg(iset), encoding="utf-8")
    report = {
        "plane": iset.plane,
        "levels": [
            {
                "level": round_sig(iso.level),
                "n_polylines": len(iso.polylines),
                "n_points": int(sum(len(p) for p in iso.polylines)),
                "minni": None if iso.minni is None else [round_sig(v) for v in iso.minni],
                "note": iso.note,
            }
            for iso in iset.isobols
        ],
    }
    if not (args.csv_path or args.svg_path):
        _write(args, contour.to_csv(iset), out)
    elif args.json:
        _write(args, json.dumps(report, indent=2) + "\n", out)
    return EXIT_OK


def cmd_strata(args, out):
    try:
        data = read_csv(args.input)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from None
    strata = variance.strata_from_dataset(data, args.ddof)
    if (args.k_se is None) == (args.k_sigma is None):
        raise UsageError("give exactly one of --k-se or --k-sigma")
    results = variance.stratified_minni(strata, k_sigma=args.k_sigma, k_se=args.k_se, m=args.m)
    bias = None
    if args.ed is not None or args.rd is not None:
        if args.ed is None or args.rd is None:
            raise UsageError("--ed and --rd go together")
        bias = variance.stratified_bias(strata, args.ed, args.rd)
    rows = variance.strata_table(results, bias)
    if args.format == "json" or args.json:
        text = variance.strata_to_json(rows, bias) + "\n"
    else:
        text = variance.strata_to_csv(rows)
    _write(args, text, out)
    return EXIT_OK


def cmd_variance(args, out):
    v = variance.VarianceInputs(args.vd_yu, args.vd_ug, args.ed_yu, args.rd_ug, args.pr_g1)
    gap = variance.variance_gap(v)
    text = json.dumps({"variance_gap": round_sig(gap)}, indent=2) + "\n"
    if not args.json:
        text = f"var(Y) - var(Y|G=1) = {gap:.6g}\n" + text
    _write(args, text, out)
    return EXIT_OK


def cmd_oracle(args, out):
    binary = oracle.sweep(args.n_joints, args.seed, (2,))
    categorical = oracle.sweep(args.n_joints, args.seed + 1, tuple(range(2, args.max_m + 1)))
    breaches = []
    for name, rep in (("binary", binary), ("categorical", categorical)):
        for key, value in rep.max_residual.items():
            if value >= RESIDUAL_LIMITS.get(key, 1e-12):
                breaches.append(f"{name}:{key}")
        breaches += [f"{name}:{k}" for k, v in rep.bound_violations.items() if v]
    doc = {
        "binary": binary.to_dict(),
        "categorical": categorical.to_dict(),
        "limits": RESIDUAL_LIMITS,
        "breaches": breaches,
        "pass": not breaches,
    }
    _write(args, json.dumps(doc, indent=2) + "\n", out)
    return EXIT_BREACH if breaches else EXIT_OK


COMMANDS = {
    "summarize": cmd_summarize,
    "surface": cmd_surface,
    "minni": cmd_minni,
    "isobols": cmd_isobols,
    "strata": cmd_strata,
    "variance": cmd_variance,
    "oracle": cmd_oracle,
}

_BOOL_KEYS = {"json", "synthesize"}


def _apply_config(parser, argv, cfg):
    sub = parser._subparsers._group_actions[0].choices[argv_command(argv)]
    dests = {a.dest for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = {"csv": "csv_path", "svg": "svg_path"}.get(key, key)
        if dest not in dests:
            raise UsageError(f"unknown config key {key!r}")
        if dest in _BOOL_KEYS:
            defaults[dest] = value.lower() in ("1", "true", "yes", "on")
        else:
            action = next(a for a in sub._actions if a.dest == dest)
            defaults[dest] = action.type(value) if action.type else value
            action.required = False
    sub.set_defaults(**defaults)


def argv_command(argv):
    return next((a for a in argv if a in COMMANDS), None)


def run(argv=None, out=None, err=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    err = err or sys.stderr
    as_json = "--json" in argv

    def fail(message, status):
        if as_json:
            out.write(json.dumps({"error": message, "status": status}) + "\n")
        else:
            err.write(f"minnisens: error: {message}\n")
        return status

    parser = build_parser()
    try:
        if "--config" in argv or any(a.startswith("--config=") for a in argv):
            pre = argparse.ArgumentParser(add_help=False)
            pre.add_argument("--config")
            known, _ = pre.parse_known_args(argv)
            if argv_command(argv) is None:
                raise UsageError("unknown or missing subcommand")
            cfg = read_config(known.config)
            as_json = as_json or cfg.get("json", "").lower() in ("1", "true", "yes", "on")
            _apply_config(parser, argv, cfg)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            if exc.code in (0, None):
                return EXIT_OK
            return EXIT_USAGE
        as_json = as_json or args.json
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        return fail(str(exc), EXIT_USAGE)
    except NoAnalysisNeeded as exc:
        return fail(str(exc), EXIT_DOMAIN)
    except SensitivityError as exc:
        return fail(str(exc), EXIT_DOMAIN)
    except (argparse.ArgumentTypeError, ValueError) as exc:
        return fail(str(exc), EXIT_USAGE)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
