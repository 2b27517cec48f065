"""Command-line front end: ``robusthedge <subcommand> -m model.json ...``.

Every subcommand writes a versioned JSON report (stdout unless ``--out``).
Exit codes: 0 success, 1 certificate check failed, 2 invalid input,
3 arbitrage where no-arbitrage is required, 4 stopping-rule cap exceeded.
"""
import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import american, multi_period, semistatic
from .exceptions import (ArbitrageDetected, ArbitrageWithOptions, CapExceeded, DimensionError,
                         ParseError, PreconditionViolated, UnsupportedConstraint, ValidationError)
from .model import dumps, load_model, reachable_leaves, reachable_nodes
from .numeric import convert, format_number

REPORT_VERSION = 1
EXIT_OK, EXIT_UNCERTIFIED, EXIT_INVALID, EXIT_ARBITRAGE, EXIT_CAP = 0, 1, 2, 3, 4


def _num(x):
    return format_number(x)


def _vec(v):
    return [_num(x) for x in v]


def _strategy(model, H):
    return {nid: _vec(H[nid]) for nid in reachable_nodes(model) if nid in H}


def _values(model, V):
    return {nid: _num(V[nid]) for nid in reachable_nodes(model) if nid in V}


def _measure(model, Q):
    if Q is None:
        return None
    out = {"leaf_probs": {a: _num(Q.leaf_probs.get(a, 0)) for a in reachable_leaves(model)}}
    if Q.penalty is not None:
        out["penalty"] = {a: _num(Q.penalty[a]) for a in reachable_leaves(model)}
    return out


def read_payoff(path, model):
    """JSON object keyed by node id, optionally wrapped as ``{"payoff": ...}``."""
    raw = json.loads(Path(path).read_text())
    if isinstance(raw, dict) and "payoff" in raw and isinstance(raw["payoff"], dict):
        raw = raw["payoff"]
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: payoff must be a JSON object keyed by node id")
    unknown = [k for k in raw if k not in model.nodes]
    if unknown:
        raise ValidationError(f"{path}: unknown node ids {unknown}")
    try:
        return {k: convert(v, model.exact) for k, v in raw.items()}
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def read_options(path, model):
    """List of payoff objects (or ``{"payoffs": ...}`` entries) keyed by leaf id."""
    raw = json.loads(Path(path).read_text())
    if isinstance(raw, dict):
        raw = raw.get("options", [])
    out = []
    for k, opt in enumerate(raw):
        pay = opt.get("payoffs", opt) if isinstance(opt, dict) else opt
        if not isinstance(pay, dict):
            raise ParseError(f"{path}: option {k} must be an object keyed by leaf id")
        out.append({key: convert(v, model.exact) for key, v in pay.items()})
    return out


def _need_payoff(args):
    if not args.payoff:
        raise ValidationError(f"{args.command} needs -f/--payoff")


def _model_hash(model):
    return hashlib.sha256(dumps(model).encode()).hexdigest()


# -- subcommands -------------------------------------------------------------------------

def cmd_check_arbitrage(args, model):
    rep = multi_period.check_na_global(model, multi_period.mixture_selection(model))

    def node_report(r):
        return {"node": r.node_id, "witness": _vec(r.witness) if r.witness else None,
                "atom": r.witness_atom}

    out = {"holds": rep.holds,
           "failing_nodes": [node_report(r) for r in rep.failing_nodes],
           "polar_nodes": [node_report(r) for r in rep.polar_nodes]}
    if rep.holds:
        Q = rep.dominating_measure
        out["certificate"] = {"kind": "dominating_measure", "measure": _measure(model, Q)}
    else:
        out["certificate"] = {"kind": "arbitrage_witness"}
    return out, EXIT_OK


def cmd_price_european(args, model):
    _need_payoff(args)
    f = read_payoff(args.payoff, model)
    hedge = multi_period.superhedge_european(model, f)
    dual, Q = multi_period.dual_price_joint(model, f, check=False)
    verified = multi_period.hedge_holds(model, hedge.price, hedge.strategy, f)
    gap = hedge.price - dual
    return {
        "price": _num(hedge.price),
        "strategy": _strategy(model, hedge.strategy),
        "values": _values(model, hedge.values),
        "certificate": {"kind": "superhedge", "verified": verified,
                        "dual_value": _num(dual), "duality_gap": _num(gap),
                        "dual_measure": _measure(model, Q)},
    }, EXIT_OK if verified else EXIT_UNCERTIFIED


def cmd_price_american(args, model):
    _need_payoff(args)
    f = read_payoff(args.payoff, model)
    sup = american.superhedge_american(model, f, cap=args.cap)
    table = american.rule_table(model, f, args.cap, args.jobs)
    best_sub = max(table, key=lambda r: r.inf_terminal)
    sub = american.subhedge_american(model, f, cap=args.cap, jobs=args.jobs)
    enum_max = max(r.sup_stopped for r in table)
    return {
        "superhedge": {"price": _num(sup.price), "strategy": _strategy(model, sup.strategy),
                       "certificate": {"kind": "superhedge_all_rules",
                                       "verified_rules": sup.verified_rules,
                                       "enumeration_max": _num(enum_max)}},
        "subhedge": {"price": _num(sub.price), "rule": sorted(sub.rule.stops),
                     "strategy": _strategy(model, sub.strategy),
                     "certificate": {"kind": "superhedge_of_negated_stopped_payoff",
                                     "rule_value": _num(best_sub.inf_terminal)}},
        "hat_price": _num(max(r.sup_terminal for r in table)),
        "rules": len(table),
    }, EXIT_OK


def cmd_decompose(args, model):
    _need_payoff(args)
    raw = read_payoff(args.payoff, model)
    if all(n in raw for n in reachable_nodes(model)):
        V, source = raw, "value_process"
    else:
        V, source = multi_period.superhedge_european(model, raw).values, "superhedge_values"
    dec = multi_period.optional_decomposition(model, V)
    ok = multi_period.decomposition_holds(model, V, dec)
    return {
        "source": source,
        "strategy": _strategy(model, dec.strategy),
        "consumption": _values(model, dec.consumption),
        "certificate": {"kind": "decomposition", "verified": ok},
    }, EXIT_OK if ok else EXIT_UNCERTIFIED


def cmd_semistatic(args, model):
    _need_payoff(args)
    f = read_payoff(args.payoff, model)
    opts = read_options(args.options, model) if args.options else semistatic.option_payoffs(model)
    na = semistatic.check_na_with_options(model, opts)
    if not na.holds:
        H, h = na.witness
        raise ArbitrageWithOptions(f"witness h={_vec(h)}, H={_strategy(model, H)}")
    cert = semistatic.price_semistatic(model, f, opts, check=False)
    out = {
        "price": _num(cert.price),
        "static_position": _vec(cert.static_position),
        "dynamic_strategy": _strategy(model, cert.dynamic_strategy),
        "certificate": {"kind": "semistatic_superhedge",
                        "verified": semistatic.certificate_holds(
                            model, semistatic.leaf_values(model, f), semistatic.option_payoffs(model, opts), cert),
                        "dual_measure": _measure(model, cert.dual_optimizer)},
    }
    if semistatic.is_symmetric(model):
        rep = semistatic.check_replicable(model, f, opts)
        out["replicable"] = rep.replicable
        out["complete"] = semistatic.check_completeness(model, opts)
    return out, EXIT_OK if out["certificate"]["verified"] else EXIT_UNCERTIFIED


def cmd_certify(args, model):
    """Re-check the certificates stored in a report by substitution."""
    if not args.report:
        raise ValidationError("certify needs -r/--report")
    report = json.loads(Path(args.report).read_text())
    if report.get("report_version") != REPORT_VERSION:
        raise ValidationError("unsupported report version")
    checks = {"model_hash": report.get("model_sha256") == _model_hash(model)}
    res = report.get("results", {})
    sub = report.get("subcommand")
    exact = model.exact

    def strat(d):
        return {k: tuple(convert(x, exact) for x in v) for k, v in d.items()}

    if sub == "price-european":
        _need_payoff(args)
        f = read_payoff(args.payoff, model)
        price = convert(res["price"], exact)
        checks["superhedge"] = multi_period.hedge_holds(model, price, strat(res["strategy"]), f)
        checks["admissible"] = multi_period.strategy_admissible(model, strat(res["strategy"]))
        Q = multi_period.measure_from_leaves(model, res["certificate"]["dual_measure"]["leaf_probs"])
        Q.penalty = multi_period.penalty_process(model, Q)
        fv = multi_period.leaf_values(model, f)
        lower = sum((Q.leaf_probs[a] * (fv[a] - Q.penalty[a]) for a in Q.leaf_probs), model.zero())
        checks["dual_bound"] = (lower == price) if exact else abs(lower - price) <= 1e-7
    elif sub == "price-american":
        _need_payoff(args)
        f = american.node_payoff(model, read_payoff(args.payoff, model))
        sup = res["superhedge"]
        checks["superhedge"] = american.covers_all_nodes(
            model, convert(sup["price"], exact), strat(sup["strategy"]), f)
        sub_res = res["subhedge"]
        rule = american.StoppingRule(frozenset(sub_res["rule"]))
        pay = american.stopped_payoff(model, f, rule)
        neg = {a: -v for a, v in pay.items()}
        checks["subhedge"] = multi_period.hedge_holds(
            model, -convert(sub_res["price"], exact), strat(sub_res["strategy"]), neg)
    elif sub == "decompose":
        cons = {k: convert(v, exact) for k, v in res["consumption"].items()}
        dec = multi_period.Decomposition(strat(res["strategy"]), cons)
        g = multi_period.gains_process(model, dec.strategy)
        root = model.root
        V0 = None
        if args.payoff:
            raw = read_payoff(args.payoff, model)
            if res.get("source") == "value_process":
                V = raw
            else:
                V = multi_period.superhedge_european(model, raw).values
            checks["decomposition"] = multi_period.decomposition_holds(model, V, dec)
        else:
            V0 = cons[root]
            checks["decomposition"] = V0 == 0 and multi_period.strategy_admissible(
                model, {k: v for k, v in dec.strategy.items() if k in g})
    elif sub == "semistatic":
        _need_payoff(args)
        f = semistatic.leaf_values(model, read_payoff(args.payoff, model))
        opts = semistatic.option_payoffs(
            model, read_options(args.options, model) if args.options else None)
        cert = semistatic.SemiStaticCertificate(
            convert(res["price"], exact), tuple(convert(x, exact) for x in res["static_position"]),
            strat(res["dynamic_strategy"]), None)
        checks["superhedge"] = semistatic.certificate_holds(model, f, opts, cert)
    elif sub == "check-arbitrage":
        if res.get("holds"):
            Q = multi_period.measure_from_leaves(
                model, res["certificate"]["measure"]["leaf_probs"])
            checks["martingale"] = multi_period.in_martingale_set(model, Q)
            checks["dominates"] = all(Q.leaf_probs.get(a, 0) > 0 for a in reachable_leaves(model))
        else:
            checks["arbitrage"] = not multi_period.check_na_global(model).holds
    else:
        raise ValidationError(f"cannot certify reports of {sub!r}")
    ok = all(checks.values())
    return {"certified": ok, "checks": checks, "subcommand": sub}, EXIT_OK if ok else EXIT_UNCERTIFIED


COMMANDS = {
    "check-arbitrage": cmd_check_arbitrage,
    "price-european": cmd_price_european,
    "price-american": cmd_price_american,
    "decompose": cmd_decompose,
    "semistatic": cmd_semistatic,
    "certify": cmd_certify,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="robusthedge",
                                     description="Robust super-hedging on finite scenario trees.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("-m", "--model", required=True, help="model JSON file")
        p.add_argument("-f", "--payoff", help="payoff JSON keyed by node id")
        p.add_argument("--options", help="statically traded options JSON")
        p.add_argument("--mode", choices=("exact", "float"), default="exact")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", help="report path (default stdout)")
        p.add_argument("--cap", type=int, default=american.DEFAULT_CAP,
                       help="stopping-rule enumeration cap")
        p.add_argument("--timings", action="store_true",
                       help="add wall-clock timings (reports stop being byte-stable)")
        if name == "certify":
            p.add_argument("-r", "--report", help="report JSON to re-check")
    return parser


def _emit(report, out):
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, tuple):
        return list(x)
    return float(x)


def run(argv=None):
    """Parse, execute and write the report; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    report = {"report_version": REPORT_VERSION, "subcommand": args.command,
              "command": list(sys.argv[1:] if argv is None else argv), "mode": args.mode}
    started = time.perf_counter()
    try:
        model = load_model(args.model, args.mode)
        report["model_sha256"] = _model_hash(model)
        results, code = COMMANDS[args.command](args, model)
        report["results"] = results
    except (ArbitrageDetected, ArbitrageWithOptions) as exc:
        report["error"] = {"kind": "arbitrage", "message": str(exc)}
        code = EXIT_ARBITRAGE
    except CapExceeded as exc:
        report["error"] = {"kind": "cap_exceeded", "message": str(exc),
                           "count": exc.count, "cap": exc.cap}
        code = EXIT_CAP
    except (ParseError, ValidationError, DimensionError, PreconditionViolated,
            UnsupportedConstraint, OSError, ValueError, KeyError) as exc:
        report["error"] = {"kind": "invalid_input", "message": str(exc)}
        code = EXIT_INVALID
    report["exit_code"] = code
    if args.timings:
        report["timings"] = {"total_seconds": time.perf_counter() - started}
    _emit(report, args.out)
    if "error" in report:
        print(f"robusthedge: {report['error']['message']}", file=sys.stderr)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
