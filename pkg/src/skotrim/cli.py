"""Command line front end.

Exit codes: 0 success, 1 a verification ran and failed, 2 usage or input
errors.  All file outputs are written atomically (temp file then rename)
and are byte-identical across runs for identical arguments and seed.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile

from . import grafting, reflection, stochastic, trees
from .paths import DomainError, path_from_csv_file, write_csv


def _atomic_write_text(filename, text):
    directory = os.path.dirname(os.path.abspath(filename)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".skotrim-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, filename)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _csv_text(path):
    buf = io.StringIO()
    write_csv(path, buf)
    return buf.getvalue()


def _json_text(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _plot_rows(series):
    lines = ["series,t,value"]
    for name, path in series:
        for t, v in zip(path.times, path.values):
            lines.append("%s,%r,%r" % (name, float(t), float(v)))
    return "\n".join(lines) + "\n"


def _check(name, statistic, expected, tolerance, ok):
    return {
        "name": name,
        "statistic": statistic,
        "expected": expected,
        "tolerance": tolerance,
        "pass": bool(ok),
    }


def _envelope(test, checks, detail=None):
    out = {"test": test, "checks": checks, "pass": all(c["pass"] for c in checks)}
    if detail is not None:
        out["detail"] = detail
    return out


# -- subcommands -------------------------------------------------------------


def _cmd_reflect(args):
    f = path_from_csv_file(args.infile)
    refl = reflection.reflect_two_sided(f, args.h)
    _atomic_write_text(args.out_prefix + ".lambda.csv", _csv_text(refl.lam))
    _atomic_write_text(args.out_prefix + ".c0.csv", _csv_text(refl.c0))
    _atomic_write_text(args.out_prefix + ".ch.csv", _csv_text(refl.ch))
    if args.emit_plot_data:
        _atomic_write_text(
            args.emit_plot_data,
            _plot_rows(
                [("input", f), ("lambda", refl.lam), ("c0", refl.c0), ("ch", refl.ch)]
            ),
        )
    return 0


def _cmd_cut(args):
    f = path_from_csv_file(args.infile)
    dec = reflection.h_cut(f, args.h)
    _atomic_write_text(args.out_prefix + ".cut.csv", _csv_text(dec.cut))
    events = {
        "t": list(dec.t),
        "T": list(dec.T),
        "s": list(dec.s),
        "X": list(dec.X),
        "Y": list(dec.Y),
        "N": dec.N,
    }
    _atomic_write_text(args.out_prefix + ".events.json", _json_text(events))
    if args.emit_plot_data:
        _atomic_write_text(
            args.emit_plot_data, _plot_rows([("input", f), ("cut", dec.cut)])
        )
    return 0


def _cmd_trim(args):
    if args.infile.endswith(".json"):
        tree = trees.tree_from_json_file(args.infile)
    else:
        tree = trees.contour_to_tree(path_from_csv_file(args.infile))
    trimmed = trees.trim(tree, args.h)
    if trimmed is None:
        sys.stderr.write("trim: empty result (tree shallower than h)\n")
        _atomic_write_text(args.out, _json_text(None))
        return 0
    _atomic_write_text(args.out, _json_text(trees.tree_to_json_obj(trimmed)))
    return 0


def _cmd_simulate(args):
    if args.what == "excursion":
        if args.mode == "first-return":
            path = stochastic.sample_excursion_first_return(args.n, args.h, args.seed)
        else:
            cfg = stochastic.RandomWalkConfig(n=args.n, seed=args.seed)
            path = stochastic.sample_excursion_conditioned(cfg, args.h)
        _atomic_write_text(args.out, _csv_text(path))
    elif args.what == "walk":
        cfg = stochastic.RandomWalkConfig(n=args.n, seed=args.seed, mode="free-walk")
        _atomic_write_text(args.out, _csv_text(stochastic.sample_walk(cfg)))
    else:  # binary-tree
        tree, _ = stochastic.sample_binary_tree(args.alpha, args.seed)
        _atomic_write_text(args.out, _json_text(trees.tree_to_json_obj(tree)))
    return 0


def _cmd_verify_main1(args):
    f = path_from_csv_file(args.infile)
    rep = grafting.verify_main1(f, args.h)
    spread = max(rep["branch_lengths"]) - min(rep["branch_lengths"])
    checks = [
        _check("profiles_equal", rep["profiles_equal"], True, 0, rep["profiles_equal"]),
        _check("branch_length_spread", spread, 0.0, 1e-9, spread <= 1e-9),
    ]
    env = _envelope("main1", checks, detail=rep)
    env["status"] = rep["status"]
    if args.report:
        _atomic_write_text(args.report, _json_text(env))
    if rep["status"] == "empty":
        return 0
    return 0 if env["pass"] else 1


def _cmd_verify_pn(args):
    cfg = stochastic.RandomWalkConfig(n=args.n, seed=args.seed)
    rep = stochastic.pn_statistics(
        args.h, cfg, args.replicates, path_check=args.path_check
    )
    target = args.h / 2.0
    mean_tol = max(3 * rep["pooled_x_se"], 0.05 * target)
    law_ok = all(b["within_3se"] for b in rep["cycle_count_law"])
    checks = [
        _check("first_offset_zero", rep["y1_max_abs"], 0.0, 0.0, rep["y1_all_zero"]),
        _check(
            "pooled_x_mean",
            rep["pooled_x_mean"],
            target,
            mean_tol,
            abs(rep["pooled_x_mean"] - target) <= mean_tol,
        ),
        _check(
            "ks_exponential_p",
            rep["ks_vs_exp_mean_half_h"]["p"],
            "> 0.01",
            0.01,
            rep["ks_vs_exp_mean_half_h"]["p"] > 0.01,
        ),
        _check("cycle_count_law_3se", law_ok, True, 0, law_ok),
        _check(
            "x_equals_local_time_increment",
            rep["path_check"]["max_local_time_identity_error"],
            0.0,
            1e-9,
            rep["path_check"]["max_local_time_identity_error"] <= 1e-9,
        ),
    ]
    env = _envelope("pn", checks, detail=rep)
    if args.report:
        _atomic_write_text(args.report, _json_text(env))
    return 0 if env["pass"] else 1


def _cmd_verify_teo1(args):
    cfg = stochastic.RandomWalkConfig(n=args.n, seed=args.seed, mode="free-walk")
    w = stochastic.sample_walk(cfg)
    rep = stochastic.verify_teo1(w, args.t, args.theta, args.h, args.markings, args.seed)
    checks = [
        _check(
            "trim_length_equals_compensator",
            rep["deterministic_error"],
            0.0,
            1e-9,
            rep["deterministic_pass"],
        ),
        _check(
            "sticky_max_frequency",
            rep["observed_frequency"],
            rep["expected_probability"],
            3 * rep["binomial_se"],
            rep["stochastic_pass"],
        ),
    ]
    env = _envelope("teo1", checks, detail=rep)
    if args.report:
        _atomic_write_text(args.report, _json_text(env))
    return 0 if env["pass"] else 1


def build_parser():
    p = argparse.ArgumentParser(
        prog="skotrim",
        description="Two-sided reflection, h-cut and tree trimming toolbox",
        allow_abbrev=False,
    )
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("reflect", help="two-sided reflection of a CSV path")
    pr.add_argument("--h", type=float, required=True)
    pr.add_argument("--in", dest="infile", required=True)
    pr.add_argument("--out-prefix", required=True)
    pr.add_argument("--emit-plot-data", default=None)
    pr.set_defaults(fn=_cmd_reflect)

    pc = sub.add_parser("cut", help="h-cut of a CSV path plus its event data")
    pc.add_argument("--h", type=float, required=True)
    pc.add_argument("--in", dest="infile", required=True)
    pc.add_argument("--out-prefix", required=True)
    pc.add_argument("--emit-plot-data", default=None)
    pc.set_defaults(fn=_cmd_cut)

    pt = sub.add_parser("trim", help="prune a tree (JSON) or a contour (CSV)")
    pt.add_argument("--h", type=float, required=True)
    pt.add_argument("--in", dest="infile", required=True)
    pt.add_argument("--out", required=True)
    pt.set_defaults(fn=_cmd_trim)

    ps = sub.add_parser("simulate", help="draw walks, excursions or random trees")
    ps.add_argument("what", choices=["excursion", "walk", "binary-tree"])
    ps.add_argument("--n", type=int, default=1000)
    ps.add_argument("--h", type=float, default=0.0)
    ps.add_argument("--alpha", type=float, default=0.5)
    ps.add_argument("--seed", type=int, required=True)
    ps.add_argument("--mode", choices=["bridge", "first-return"], default="bridge")
    ps.add_argument("--out", required=True)
    ps.set_defaults(fn=_cmd_simulate)

    pv = sub.add_parser("verify", help="run a verification suite")
    vsub = pv.add_subparsers(dest="what", required=True)

    v1 = vsub.add_parser("main1", help="trim / cut / graft three-way check")
    v1.add_argument("--h", type=float, required=True)
    v1.add_argument("--in", dest="infile", required=True)
    v1.add_argument("--report", default=None)
    v1.set_defaults(fn=_cmd_verify_main1)

    v2 = vsub.add_parser("pn", help="boundary-cycle statistics of excursions")
    v2.add_argument("--h", type=float, required=True)
    v2.add_argument("--replicates", type=int, required=True)
    v2.add_argument("--n", type=int, default=10_000)
    v2.add_argument("--seed", type=int, required=True)
    v2.add_argument("--path-check", type=int, default=25)
    v2.add_argument("--report", default=None)
    v2.set_defaults(fn=_cmd_verify_pn)

    v3 = vsub.add_parser("teo1", help="sticky maximum law versus local time")
    v3.add_argument("--theta", type=float, required=True)
    v3.add_argument("--h", type=float, required=True)
    v3.add_argument("--t", type=float, required=True)
    v3.add_argument("--n", type=int, default=10_000)
    v3.add_argument("--markings", type=int, required=True)
    v3.add_argument("--seed", type=int, required=True)
    v3.add_argument("--report", default=None)
    v3.set_defaults(fn=_cmd_verify_teo1)

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (DomainError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write("skotrim: %s\n" % exc)
        return 2
    except stochastic.SamplingBudgetError as exc:
        sys.stderr.write("skotrim: sampling failed: %s\n" % exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
