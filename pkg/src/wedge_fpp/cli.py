"""wedge-fpp command line.

Every subcommand writes config.json plus its outputs under --out and prints a
one-line summary. Exit codes: 0 ok, 1 validation error, 2 resource error,
3 statistical check failed under --strict.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import SCHEMA, __version__
from .harness import DualityViolation, ExperimentPlan, clt_test, run, variance_mean_test
from .martingale import (BlockClock, CapExceeded, check_moment_bounds, clt_outer, decorrelation,
                         martingale_mean_check, required_length, run_martingale, telescoping_check)
from .perc import estimate_rect_crossing, estimate_xi, phi, sponge_phase_scan
from .regimes import classify, fit_against_rate
from .rng import WeightModel
from .sequences import audit_assumptions, build_sequence, fit_increment_bound
from .wedge import ResourceError, WedgeFunction

EXIT_OK, EXIT_VALIDATION, EXIT_RESOURCE, EXIT_STATS = 0, 1, 2, 3
CASES = {"1": "critical", "2a": "sub_xi", "2b": "at_xi"}
SPONGE_EXPECTED = {"sub": "to_zero", "super": "to_one", "critical": "intermediate"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def to_json(self):
        return json.dumps({"schema": SCHEMA, "command": self.command, "seed": self.seed,
                           "params": self.params}, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported schema {d.get('schema')!r}")
        return cls(command=d["command"], params=d["params"], seed=int(d["seed"]))


# ---------------------------------------------------------------------------
# output helpers

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def dump_json(obj):
    return json.dumps({"schema": SCHEMA, **_jsonable(obj)}, sort_keys=True, indent=2) + "\n"


def csv_text(header, rows, name):
    out = io.StringIO()
    out.write(f"# {SCHEMA} {name}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return out.getvalue()


class Output:
    def __init__(self, root):
        self.root = Path(root) if root else None
        if self.root:
            self.root.mkdir(parents=True, exist_ok=True)

    def write(self, name, text):
        if self.root:
            (self.root / name).write_text(text)


# ---------------------------------------------------------------------------
# shared argument groups

def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--strict", action="store_true", help="exit 3 when a statistical check fails")


def _add_wedge(p, need_p=True):
    p.add_argument("--kind", default="loglog", choices=["loglog", "power", "logpower"])
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, default=0.0)
    if need_p:
        p.add_argument("--p", type=float, required=True, help="P(t_e = 0)")


def _add_law(p):
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--law", default="constant", choices=["constant", "shifted_exp", "pareto"])
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--exponent", type=float, default=4.5)
    p.add_argument("--scale", type=float, default=1.0)


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _wedge(args):
    return WedgeFunction(args.kind, args.a, args.b)


def _model(args):
    law = {"kind": args.law}
    if args.law == "shifted_exp":
        law["rate"] = args.rate
    elif args.law == "pareto":
        law.update(exponent=args.exponent, scale=args.scale)
    return WeightModel(p=args.p, delta=args.delta, law=law)


def build_parser():
    ap = _Parser(prog="wedge-fpp", description="First-passage percolation on wedge graphs.")
    ap.add_argument("--version", action="version", version=f"wedge-fpp {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="replicated passage times over an n grid")
    _add_wedge(p)
    _add_law(p)
    p.add_argument("--n", type=_int_list, required=True, help="comma-separated grid")
    p.add_argument("--replicas", type=int, default=200)
    p.add_argument("--measure", default="T,T_B,Y_n")
    p.add_argument("--xi", type=float, default=None, help="xi(1-p) for the regime fit when p > 1/2")
    _add_common(p)

    p = sub.add_parser("duality-check", help="passage time against max-flow dual crossings")
    _add_wedge(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--replicas", type=int, default=200)
    _add_common(p)

    p = sub.add_parser("xi", help="correlation length of subcritical percolation")
    p.add_argument("--p", type=float, required=True, help="open-edge probability, < 1/2")
    p.add_argument("--nmax", type=int, default=60)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--target", default="point", choices=["point", "plane"])
    _add_common(p)

    p = sub.add_parser("crossing", help="left-right crossing probability of [0,n]x[0,h]")
    p.add_argument("--p", type=float, required=True, help="open-edge probability")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    _add_common(p)

    p = sub.add_parser("sponge", help="crossing probabilities along three height drivers")
    p.add_argument("--p", type=float, required=True, help="open-edge probability, < 1/2")
    p.add_argument("--xi", type=float, default=None, help="skip estimation and use this xi")
    p.add_argument("--n", type=_int_list, default=[4, 8, 12, 16, 20])
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--xi-samples", type=int, default=200_000)
    _add_common(p)

    p = sub.add_parser("sequence", help="block sequence r_i and assumption audit")
    p.add_argument("--case", required=True, choices=sorted(CASES))
    _add_wedge(p)
    p.add_argument("--xi", type=float, default=None, help="xi(1-p), required for cases 2a/2b")
    p.add_argument("--imax", type=int, default=40)
    p.add_argument("--audit", action="store_true")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--irange", type=_int_list, default=None, help="first,last block to audit")
    _add_common(p)

    p = sub.add_parser("martingale", help="martingale increments by nested Monte Carlo")
    p.add_argument("--case", required=True, choices=sorted(CASES))
    _add_wedge(p)
    _add_law(p)
    p.add_argument("--xi", type=float, default=None)
    p.add_argument("--i0", type=int, default=10)
    p.add_argument("--outer", type=int, default=200)
    p.add_argument("--inner", type=int, default=256)
    _add_common(p)

    p = sub.add_parser("classify", help="growth regime of (a, b, p)")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--xi", type=float, default=None)
    p.add_argument("--xi-ci", type=float, default=0.0)
    _add_common(p)

    p = sub.add_parser("clt", help="KS normality of T(0, P(n)) at one n")
    _add_wedge(p)
    _add_law(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--replicas", type=int, default=2000)
    _add_common(p)

    p = sub.add_parser("report", help="summarize a run directory")
    p.add_argument("run_dir")
    p.add_argument("--out", default=None, help="where to write the report (default: run_dir)")
    return ap


# ---------------------------------------------------------------------------
# subcommands; each returns (summary line, passed)

def _params(args, skip=("command", "out", "workers", "strict", "seed", "func")):
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def cmd_simulate(args, out):
    measures = tuple(m.strip() for m in args.measure.split(",") if m.strip())
    plan = ExperimentPlan(_wedge(args), _model(args), args.n, args.replicas, args.seed, measures)
    rec = run(plan, workers=args.workers)
    out.write("samples.jsonl", rec.jsonl())
    out.write("summary.csv", rec.summary_csv())
    main_m = "T" if "T" in measures else measures[0]
    checks = {}
    passed = True
    if main_m in ("T", "T_B", "Y_n"):
        checks["variance_mean"] = variance_mean_test(rec, main_m)
        passed &= checks["variance_mean"]["pass"] is not False
        top = plan.n_grid[-1]
        if args.replicas >= 1000:
            checks["clt"] = clt_test(rec, top, main_m)
            passed &= checks["clt"]["p_value"] >= 0.01
        reg = classify(args.a, args.b, args.p, args.xi) if (args.p <= 0.5 or args.xi) else None
        means = [rec.summaries[n][main_m]["mean"] for n in plan.n_grid]
        if reg is not None:
            checks["regime"] = reg.to_dict()
            ns = [n for n in plan.n_grid if n >= 3]
            if len(ns) >= 6 and ns[-1] / ns[0] >= 8 and all(m > 0 for m in means[-len(ns):]):
                checks["rate_fit"] = fit_against_rate(ns, means[-len(ns):], reg)
    out.write("record.json", dump_json({**rec.to_dict(), "checks": checks}))
    s = rec.summaries[plan.n_grid[-1]][main_m]
    dual = f", duality {rec.duality_checked}/{rec.duality_checked} exact" if rec.duality_checked else ""
    return f"simulate: n={plan.n_grid[-1]} mean {main_m}={s['mean']:.4g} var={s['var']:.4g}{dual}", passed


def cmd_duality(args, out):
    plan = ExperimentPlan(_wedge(args), WeightModel(args.p), [args.n], args.replicas, args.seed,
                          ("T_B", "Y_n"))
    try:
        rec = run(plan, workers=args.workers)
        ok = rec.duality_checked
        bad = None
    except DualityViolation as exc:
        ok, bad = None, str(exc)
    result = {"n": args.n, "replicas": args.replicas, "exact": ok if bad is None else 0,
              "failure": bad}
    out.write("duality.json", dump_json(result))
    if bad is not None:
        raise ValidationFailure(f"duality violated: {bad}")
    return f"{ok}/{args.replicas} exact", True


class ValidationFailure(Exception):
    pass


def cmd_xi(args, out):
    est = estimate_xi(args.p, args.nmax, args.samples, args.seed, args.workers, target=args.target)
    out.write("xi.json", dump_json(est.to_dict()))
    out.write("curve.csv", csv_text(["n", "estimate", "ci_low", "ci_high", "samples"],
                                    [[c["n"], c["estimate"], c["ci_low"], c["ci_high"], c["samples"]]
                                     for c in est.curve], "xi curve"))
    return f"xi({args.p})={est.xi:.4f} +- {est.stderr:.4f} on n in {est.n_window}", True


def cmd_crossing(args, out):
    est = estimate_rect_crossing(args.p, args.n, args.h, args.samples, args.seed, args.workers)
    out.write("crossing.json", dump_json({"p": args.p, "n": args.n, "h": args.h, **est}))
    return (f"P(left-right crossing of [0,{args.n}]x[0,{args.h}])={est['estimate']:.4f} "
            f"[{est['ci_low']:.4f}, {est['ci_high']:.4f}]"), True


def cmd_sponge(args, out):
    xi = args.xi
    xi_info = None
    if xi is None:
        est = estimate_xi(args.p, 60, args.xi_samples, args.seed, args.workers, target="plane")
        xi, xi_info = est.xi, est.to_dict()
    scans = {}
    passed = True
    for kind in ("sub", "critical", "super"):
        scans[kind] = sponge_phase_scan(args.p, kind, args.n, xi, args.samples, args.seed, args.c, args.workers)
        passed &= scans[kind]["verdict"] == SPONGE_EXPECTED[kind]
        out.write(f"sponge_{kind}.csv", csv_text(["n", "driver", "p_hat"],
                                                  [[r["n"], r["driver"], r["estimate"]] for r in scans[kind]["rows"]],
                                                  f"sponge {kind}"))
    out.write("sponge.json", dump_json({"p": args.p, "xi": xi, "xi_estimate": xi_info, "scans": scans}))
    verdicts = ", ".join(f"{k}: {v['verdict']}" for k, v in scans.items())
    return f"sponge p={args.p} xi={xi:.3f}: {verdicts}", passed


def _sequence(args, i_max):
    regime = CASES[args.case]
    return build_sequence(_wedge(args), args.p, args.xi, regime, i_max)


def cmd_sequence(args, out):
    seq = _sequence(args, args.imax)
    res = seq.to_dict()
    passed = True
    if args.audit:
        start = seq.audit_index() if args.irange is None else args.irange[0]
        stop = min(start + 10, len(seq.r) - 2) if args.irange is None else args.irange[-1]
        if stop < start:
            raise ValueError("sequence too short for the audit range; raise --imax")
        audit = audit_assumptions(seq, WeightModel(args.p), range(start, stop + 1), args.samples,
                                  seed=args.seed, workers=args.workers)
        res["audit"] = audit.to_dict()
        thr = 0.25 if args.case == "1" else 0.5
        lows = [a["estimate"] + 3 * (a["ci_high"] - a["ci_low"]) / (2 * 1.96) for a in audit.a1]
        res["audit"]["a1_pass"] = bool(min(lows) >= thr)
        passed &= res["audit"]["a1_pass"]
        if any(v is not None for v in audit.a2):
            res["audit"]["increment_fit"] = fit_increment_bound(seq, audit, args.p, args.xi)
            passed &= res["audit"]["increment_fit"]["pass"]
    out.write("sequence.json", dump_json(res))
    return f"sequence case {args.case}: {len(seq.r)} values up to r={int(seq.r[-1])}, audit index {seq.audit_index()}", passed


def cmd_martingale(args, out):
    seq = _sequence(args, required_length(args.i0))
    clock = BlockClock(seq, _model(args))
    recs = run_martingale(clock, args.i0, args.outer, args.inner, args.seed, args.workers)
    out.write("records.jsonl", "".join(json.dumps({"schema": SCHEMA, **_jsonable(r)}, sort_keys=True) + "\n"
                                       for r in recs))
    summary = {"telescoping": telescoping_check(recs), "mean": martingale_mean_check(recs, args.i0),
               "decorrelation": decorrelation(recs), "moments": check_moment_bounds(recs, _model(args).eta)}
    if len(recs) > 2 and np.var([r["T"] for r in recs]) > 0:
        summary["clt"] = clt_outer(recs)
    out.write("summary.json", dump_json(summary))
    passed = summary["telescoping"]["pass"] and all(m["pass"] for m in summary["mean"])
    return (f"martingale i0={args.i0} outer={args.outer}: telescoping gap "
            f"{summary['telescoping']['mean_abs_gap']:.3g} (tol {summary['telescoping']['tolerance']:.3g})"), passed


def cmd_classify(args, out):
    res = classify(args.a, args.b, args.p, args.xi, args.xi_ci).to_dict()
    out.write("classify.json", dump_json(res))
    print(json.dumps(_jsonable(res), sort_keys=True))
    return f"regime {res['regime']}", True


def cmd_clt(args, out):
    plan = ExperimentPlan(_wedge(args), _model(args), [args.n], args.replicas, args.seed, ("T",))
    rec = run(plan, workers=args.workers)
    res = clt_test(rec, args.n, "T", min_replicas=min(1000, args.replicas))
    out.write("clt.json", dump_json(res))
    return f"KS D={res['ks_stat']:.4f} p={res['p_value']:.4f} over {res['replicas']} replicas", res["p_value"] >= 0.01


# ---------------------------------------------------------------------------
# report

def report(run_dir, out_dir=None):
    """Markdown summary plus plot-ready CSVs from whatever artifacts run_dir holds."""
    run_dir = Path(run_dir)
    out = Output(out_dir or run_dir)
    lines = ["# wedge-fpp report", ""]
    warnings = []
    found = 0
    if not run_dir.is_dir():
        warnings.append(f"{run_dir} is not a directory")
    else:
        rec_path = run_dir / "record.json"
        if rec_path.exists():
            found += 1
            rec = json.loads(rec_path.read_text())
            summ = rec["summaries"]
            ns = sorted(summ, key=int)
            m = next(iter(summ[ns[0]]))
            lines += ["## Passage-time growth", "", "| n | mean | var | var/mean |", "|---|---|---|---|"]
            rows = []
            for n in ns:
                s = summ[n][m]
                lines.append(f"| {n} | {s['mean']:.4g} | {s['var']:.4g} | {s['var'] / s['mean']:.3g} |"
                             if s["mean"] > 0 else f"| {n} | 0 | 0 | - |")
                rows.append([int(n), s["mean"], s["var"]])
            out.write("growth.csv", csv_text(["n", "mean", "var"], rows, "growth"))
            chk = rec.get("checks", {})
            if "regime" in chk:
                reg = chk["regime"]
                lines += ["", f"Regime {reg['regime']}, rate {reg['rate']}."]
            if "rate_fit" in chk:
                fit = chk["rate_fit"]
                lines.append(f"Rate fit: ratio band [{fit['band'][0]:.3f}, {fit['band'][1]:.3f}] of mean, "
                             f"trend slope {fit['trend_slope']:.3f}, verdict {fit['verdict']}.")
            if "variance_mean" in chk and not chk["variance_mean"].get("skipped"):
                v = chk["variance_mean"]
                lines.append(f"Var/mean band {v['band']:.3f}, trend {v['trend']}, pass {v['pass']}.")
            if "clt" in chk:
                lines.append(f"KS at n={chk['clt']['n']}: p={chk['clt']['p_value']:.4f}.")
            lines.append("")
        sp = run_dir / "sponge.json"
        if sp.exists():
            found += 1
            d = json.loads(sp.read_text())
            lines += ["## Sponge scan", "", "| driver | verdict |", "|---|---|"]
            for kind, scan in d["scans"].items():
                lines.append(f"| {kind} | {scan['verdict']} |")
                out.write(f"sponge_{kind}_report.csv", csv_text(["n", "driver", "p_hat"],
                                                                [[r["n"], r["driver"], r["estimate"]] for r in scan["rows"]],
                                                                f"sponge {kind}"))
            lines.append("")
        sq = run_dir / "sequence.json"
        if sq.exists():
            found += 1
            d = json.loads(sq.read_text())
            lines += ["## Block sequence", "", f"{len(d['r'])} values, audit index {d['audit_index']}.", ""]
            if "audit" in d:
                a = d["audit"]
                lines += ["| i | A1 | A2 |", "|---|---|---|"]
                for i, a1, a2 in zip(a["indices"], a["a1"], a["a2"]):
                    lines.append(f"| {i} | {a1['estimate']:.3f} | {'-' if a2 is None else f'{a2:.3f}'} |")
                lines.append("")
        ms = run_dir / "summary.json"
        if ms.exists():
            found += 1
            d = json.loads(ms.read_text())
            t = d["telescoping"]
            lines += ["## Martingale", "", f"Telescoping gap {t['mean_abs_gap']:.4g} against tolerance "
                      f"{t['tolerance']:.4g} over {t['outer']} outer fields.", ""]
        for name in ("xi.json", "crossing.json", "clt.json", "classify.json", "duality.json"):
            pth = run_dir / name
            if pth.exists():
                found += 1
                d = json.loads(pth.read_text())
                d.pop("schema", None)
                d.pop("curve", None)
                lines += [f"## {name[:-5]}", "", "```", json.dumps(d, sort_keys=True, indent=1), "```", ""]
    if not found:
        warnings.append("no run artifacts found")
    if warnings:
        lines += ["## Warnings", ""] + [f"- {w}" for w in warnings] + [""]
    text = "\n".join(lines)
    out.write("report.md", text)
    return text, warnings


COMMANDS = {"simulate": cmd_simulate, "duality-check": cmd_duality, "xi": cmd_xi, "crossing": cmd_crossing,
            "sponge": cmd_sponge, "sequence": cmd_sequence, "martingale": cmd_martingale,
            "classify": cmd_classify, "clt": cmd_clt}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as exc:   # --help / --version
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_VALIDATION
    if args.command == "report":
        text, warnings = report(args.run_dir, args.out)
        print(f"report: {len(warnings)} warning(s)")
        return EXIT_OK
    env_seed = os.environ.get("WEDGE_FPP_SEED")
    if env_seed is not None:
        try:
            args.seed = int(env_seed)
        except ValueError:
            print(f"WEDGE_FPP_SEED must be an integer, got {env_seed!r}", file=sys.stderr)
            return EXIT_VALIDATION
    out = Output(args.out)
    try:
        out.write("config.json", RunConfig(args.command, _jsonable(_params(args)), args.seed).to_json())
        line, passed = COMMANDS[args.command](args, out)
    except (ResourceError, MemoryError, CapExceeded) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, ValidationFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(line)
    if args.strict and not passed:
        return EXIT_STATS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
