"""Command line interface: ``dean <subcommand> ...``.

Every subcommand prints a human readable summary, or with ``--json`` one
JSON report per line.  Exit codes: 0 all checks pass, 1 some check fails,
2 usage or parse error, 3 node or memory budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import growth, morphisms, reproduce, search
from .reproduce import RunReport, peak_memory_kb
from .search import DEAN, REDUCED_ONLY, SearchBudgetExceeded, SearchConstraints
from .words import (
    AlphabetError,
    Exponent,
    as_word,
    is_d_directed,
    is_dean,
    is_e_free,
    is_reduced,
    is_square_free,
    max_exponent,
    minimal_absent_words,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

PRESETS = {"dean": DEAN, "reduced": REDUCED_ONLY}


class UsageError(Exception):
    pass


def _constraints(args) -> SearchConstraints:
    if args.constraints_file:
        try:
            c = SearchConstraints.from_json(json.loads(Path(args.constraints_file).read_text()))
        except (OSError, ValueError, TypeError) as e:
            raise UsageError(f"cannot read constraints file: {e}") from None
    else:
        c = PRESETS[args.preset]
    changes = {}
    if args.forbid:
        changes["forbidden_factors"] = c.forbidden_factors | frozenset(args.forbid)
    if args.require:
        changes["required_factors"] = c.required_factors | frozenset(args.require)
    if args.exponent:
        changes["exponent_bound"] = _exponent(args.exponent)
    if args.min_absent is not None:
        changes["min_absent_triples"] = args.min_absent
    if args.directed is not None:
        changes["directedness"] = args.directed
    if not changes:
        return c
    try:
        return SearchConstraints(**{**c.__dict__, **changes})
    except ValueError as e:
        raise UsageError(str(e)) from None


def _exponent(text: str) -> Exponent:
    try:
        return Exponent.parse(text)
    except (ValueError, ZeroDivisionError) as e:
        raise UsageError(f"bad exponent {text!r}: {e}") from None


def _word(text: str) -> str:
    try:
        return as_word(text.strip())
    except AlphabetError as e:
        raise UsageError(str(e)) from None


def _morphism(ref: str) -> morphisms.Morphism:
    """A catalog name or a path to a morphism file."""
    if ref in morphisms.catalog():
        return morphisms.get(ref)
    path = Path(ref)
    if not path.exists():
        raise UsageError(f"{ref} is neither a catalog name nor a file")
    try:
        return morphisms.Morphism.parse(path.read_text())
    except morphisms.MorphismFormatError as e:
        raise UsageError(f"{ref}: {e}") from None


def _report(command, inputs, result, passed, nodes=0, t0=None, claim=None) -> RunReport:
    ms = (time.perf_counter() - t0) * 1e3 if t0 else 0.0
    return RunReport(command, inputs, result, "PASS" if passed else "FAIL", nodes, ms, peak_memory_kb(), claim)


# subcommands ---------------------------------------------------------------


def cmd_count(args):
    t0 = time.perf_counter()
    c = _constraints(args)
    counts = search.count_by_length(c, args.n, workers=args.workers)
    text = " ".join(f"{i}:{v}" for i, v in enumerate(counts, 1))
    return [_report("count", {"n": args.n, "constraints": c.to_json()}, {"counts": counts}, True, 0, t0)], text


def cmd_longest(args):
    t0 = time.perf_counter()
    c = _constraints(args)
    out = search.longest(c, args.cap, workers=args.workers)
    text = f"{out.kind} max_length={out.max_length}\n{out.witness}"
    return [_report("longest", {"cap": args.cap}, out.to_json(), True, out.node_count, t0)], text


def cmd_enumerate(args):
    t0 = time.perf_counter()
    c = _constraints(args)
    words = search.enumerate_words(c, args.n, args.limit)
    return [_report("enumerate", {"n": args.n, "limit": args.limit}, {"words": words}, True, 0, t0)], "\n".join(words)


def cmd_avoided_sets(args):
    t0 = time.perf_counter()
    sets = search.classify_avoided_sets(args.n, args.k, args.strategy)
    rows = sorted(",".join(sorted(s)) for s in sets)
    text = f"{len(rows)} sets\n" + "\n".join(rows)
    return [_report("avoided-sets", {"n": args.n, "k": args.k}, {"count": len(rows), "sets": rows}, True, 0, t0)], text


def cmd_check_word(args):
    t0 = time.perf_counter()
    w = _word(args.word)
    checks = {}
    if args.dean:
        checks["dean"] = is_dean(w)
    if args.reduced:
        checks["reduced"] = is_reduced(w)
    if args.square_free:
        checks["square_free"] = is_square_free(w)
    if args.exponent:
        checks[f"{args.exponent}-free"] = is_e_free(w, _exponent(args.exponent))
    if args.directed is not None:
        checks[f"{args.directed}-directed"] = is_d_directed(w, args.directed)
    for f in args.avoid or ():
        checks[f"avoids {f}"] = f not in w
    rep = max_exponent(w)
    result = {
        "word": w,
        "checks": checks,
        "max_exponent": str(rep.exponent),
        "d3": sorted(minimal_absent_words(w, 3)) if is_reduced(w) else None,
    }
    notes = []
    if is_dean(w) and args.probe_margin > 0:
        ext = search.extendability_probe(w, args.probe_margin)
        result["extendability_probe"] = {"margin": args.probe_margin, "verdict": "PASS" if ext else "FAIL"}
        notes.append(f"extendability probe (margin {args.probe_margin}): {'PASS' if ext else 'FAIL'}")
    passed = all(checks.values())
    lines = [f"{k}: {'PASS' if v else 'FAIL'}" for k, v in checks.items()]
    lines += [f"max exponent: {rep.exponent}"] + notes
    return [_report("check-word", {"word": w}, result, passed, 0, t0)], "\n".join(lines)


CRITERIA = {
    "crochemore": morphisms.crochemore_square_free_test,
    "currie": morphisms.currie_test,
    "dean": morphisms.dean_morphism_test,
}


def cmd_check_morphism(args):
    t0 = time.perf_counter()
    h = _morphism(args.morphism)
    try:
        res = CRITERIA[args.criterion](h)
    except ValueError as e:
        raise UsageError(str(e)) from None
    result = {"criterion": args.criterion, "holds": res.holds, "counterexample": res.counterexample, "reason": res.reason}
    text = f"{args.criterion}: {'PASS' if res else 'FAIL'}" + (f" ({res.reason})" if res.reason else "")
    return [_report("check-morphism", {"morphism": args.morphism}, result, res.holds, 0, t0)], text


def cmd_image_check(args):
    t0 = time.perf_counter()
    h = _morphism(args.morphism)
    claims = morphisms.presets()["image_claims"].get(args.morphism, {})
    exponent = args.expect_exponent or claims.get("exponent")
    avoided = args.expect_avoid or claims.get("avoided", ())
    directed = args.expect_directed if args.expect_directed is not None else claims.get("directedness")
    width = max(len(x) for x in h.images)
    n = args.source_length or max(60, args.image_length // width)
    if args.source_preset == "threshold":
        src = morphisms.threshold_source(h.domain_size, n)
        src_exp = {4: Exponent(7, 5, True), 3: Exponent(7, 4, True)}.get(h.domain_size)
    elif args.source_preset == "dean-f":
        src, src_exp = morphisms.fixed_point_prefix(morphisms.get("dean_f"), 0, n), None
    else:
        src = _word(morphisms.presets()["words"][args.source_preset])[:n]
        src_exp = None
    rep = morphisms.verify_image_properties(
        h,
        src,
        exponent=_exponent(exponent) if exponent else None,
        avoided=avoided,
        directedness=directed,
        source_exponent=src_exp,
    )
    lines = [f"image length {rep.image_length}"] + [
        f"{c.name}: {'PASS' if c.passed else 'FAIL'} {c.detail}".rstrip() for c in rep.checks
    ]
    inputs = {"morphism": args.morphism, "source": args.source_preset, "source_length": len(src)}
    return [_report("image-check", inputs, rep.to_json(), rep.passed, 0, t0)], "\n".join(lines)


def cmd_growth(args):
    t0 = time.perf_counter()
    e = _exponent(args.exponent)
    if args.action == "certify":
        if not args.cert_file:
            raise UsageError("growth certify needs --cert-file")
        try:
            cert = growth.Certificate.load(args.cert_file)
        except (OSError, ValueError) as err:
            raise UsageError(str(err)) from None
        A = growth.build_lambda(cert.p, cert.exponent)
        check = growth.verify_certificate(A, cert)
        beta_ok = cert.beta is None or growth.growth_condition(cert.alpha, cert.beta, cert.p, cert.exponent)
        result = {
            "p": cert.p,
            "exponent": str(cert.exponent),
            "alpha": str(cert.alpha),
            "beta": None if cert.beta is None else str(cert.beta),
            "inequality_holds": check.valid,
            "violating_state": check.violating_state,
            "reason": check.reason,
            "beta_condition_holds": beta_ok,
        }
        passed = check.valid and beta_ok
        text = f"certificate: {'PASS' if passed else 'FAIL'}, alpha = {cert.alpha}"
        if check.violating_state is not None:
            text += f" (fails at state {check.violating_state or '-'}: {check.reason})"
        return [_report("growth certify", {"cert_file": args.cert_file}, result, passed, 0, t0)], text
    if args.action == "lower":
        beta, cert = growth.lower_bound(args.p, e, args.iterations)
        if args.cert_file:
            cert.save(args.cert_file)
        result = {
            "p": args.p,
            "exponent": str(e),
            "alpha": str(cert.alpha),
            "beta": None if beta is None else str(beta),
            "beta_decimal": None if beta is None else f"{float(beta):.10f}",
            "states": len(cert.coefficients),
        }
        text = f"alpha = {cert.alpha} ~ {float(cert.alpha):.10f}\n" + (
            f"beta = {float(beta):.10f}" if beta is not None else "no beta > 1 satisfies the growth condition"
        )
        return [_report("growth lower", {"p": args.p, "exponent": str(e)}, result, beta is not None, 0, t0)], text
    rho = growth.upper_bound(args.p, e, args.iterations)
    result = {"p": args.p, "exponent": str(e), "rho": str(rho), "rho_decimal": f"{float(rho):.10f}"}
    return [_report("growth upper", {"p": args.p, "exponent": str(e)}, result, True, 0, t0)], f"rho <= {float(rho):.10f}"


def cmd_frequency_check(args):
    t0 = time.perf_counter()
    rep = morphisms.frequency_morphism_check(args.n)
    reports = [_report("frequency-check", {"n": args.n}, rep, rep["passed"], 0, t0)]
    lines = [f"{k}: {'PASS' if v else 'FAIL'}" for k, v in rep["checks"].items()]
    lines.append(f"frequency of 3: {rep['frequency_of_3']}")
    if args.probe:
        t1 = time.perf_counter()
        pr = search.frequency_optimality_probe(args.probe_length, 3, args.probe_max, args.horizon)
        res = {"holds": pr.holds, "candidates": pr.candidates, "decided_at": pr.decided_at, "horizon": pr.horizon}
        inputs = {"length": args.probe_length, "max_count": args.probe_max, "horizon": args.horizon}
        reports.append(_report("frequency-probe", inputs, res, pr.holds, 0, t1))
        lines.append(f"optimality probe: {'PASS' if pr.holds else 'FAIL'} ({pr.candidates} candidates)")
    return reports, "\n".join(lines)


def cmd_catalog(args):
    t0 = time.perf_counter()
    cat = morphisms.catalog()
    if args.action == "list":
        rows = {n: e.provenance for n, e in cat.items()}
        text = "\n".join(f"{n:10s} {p}" for n, p in rows.items())
        return [_report("catalog list", {}, {"morphisms": rows}, True, 0, t0)], text
    if args.name not in cat:
        raise UsageError(f"unknown morphism {args.name!r}")
    e = cat[args.name]
    result = {"name": e.name, "provenance": e.provenance, "images": list(e.morphism.images)}
    return [_report("catalog show", {"name": args.name}, result, True, 0, t0)], e.morphism.to_text().rstrip()


def cmd_reproduce(args):
    reports = []
    lines = []
    for item in reproduce.ITEMS:
        if args.only and item.key not in args.only:
            continue
        r = reproduce.run_item(item, args.tier)
        reports.append(r)
        lines.append(f"{r.verdict:22s} {item.key:18s} {item.claim}")
    return reports, "\n".join(lines)


# parser --------------------------------------------------------------------


def _constraint_args(p):
    p.add_argument("--preset", choices=sorted(PRESETS), default="dean")
    p.add_argument("--constraints-file", help="JSON file with search constraints")
    p.add_argument("--forbid", nargs="+", metavar="FACTOR")
    p.add_argument("--require", nargs="+", metavar="FACTOR")
    p.add_argument("--exponent", help="exponent bound such as 7/4 or 7/4+")
    p.add_argument("--min-absent", type=int, help="at least this many absent reduced triples")
    p.add_argument("--directed", type=int, help="d for d-directedness")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dean", description="Square-free reduced words: search, morphisms, growth.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print one JSON report per line")
    common.add_argument("--workers", type=int, default=1)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", parents=[common], help="count words by length")
    p.add_argument("--n", type=int, required=True)
    _constraint_args(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("longest", parents=[common], help="longest word under constraints")
    p.add_argument("--cap", type=int, default=1000)
    _constraint_args(p)
    p.set_defaults(func=cmd_longest)

    p = sub.add_parser("enumerate", parents=[common], help="list words of one length")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--limit", type=int)
    _constraint_args(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("avoided-sets", parents=[common], help="realizable sets of absent triples")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--strategy", choices=["single", "subsets"], default="subsets")
    p.set_defaults(func=cmd_avoided_sets)

    p = sub.add_parser("check-word", parents=[common], help="check properties of a word")
    p.add_argument("word")
    p.add_argument("--dean", action="store_true")
    p.add_argument("--reduced", action="store_true")
    p.add_argument("--square-free", action="store_true")
    p.add_argument("--exponent")
    p.add_argument("--directed", type=int)
    p.add_argument("--avoid", nargs="+")
    p.add_argument("--probe-margin", type=int, default=10, help="two-sided extension margin (0 disables)")
    p.set_defaults(func=cmd_check_word)

    p = sub.add_parser("check-morphism", parents=[common], help="square-freeness criteria")
    p.add_argument("morphism", help="catalog name or morphism file")
    p.add_argument("--criterion", choices=sorted(CRITERIA), required=True)
    p.set_defaults(func=cmd_check_morphism)

    p = sub.add_parser("image-check", parents=[common], help="check the image of a source prefix")
    p.add_argument("morphism", help="catalog name or morphism file")
    p.add_argument("--source-preset", default="threshold", help="threshold, dean-f or a preset word name")
    p.add_argument("--source-length", type=int)
    p.add_argument("--image-length", type=int, default=20000)
    p.add_argument("--expect-exponent")
    p.add_argument("--expect-avoid", nargs="+")
    p.add_argument("--expect-directed", type=int)
    p.set_defaults(func=cmd_image_check)

    p = sub.add_parser("growth", parents=[common], help="certified growth bounds")
    p.add_argument("action", choices=["lower", "upper", "certify"])
    p.add_argument("--p", type=int, default=12)
    p.add_argument("--exponent", default="2")
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--cert-file", help="certificate to write (lower) or verify (certify)")
    p.set_defaults(func=cmd_growth)

    p = sub.add_parser("frequency-check", parents=[common], help="letter-frequency morphism checks")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--probe", action="store_true", help="also run the optimality probe")
    p.add_argument("--probe-length", type=int, default=118)
    p.add_argument("--probe-max", type=int, default=15)
    p.add_argument("--horizon", type=int, default=118)
    p.set_defaults(func=cmd_frequency_check)

    p = sub.add_parser("catalog", parents=[common], help="named morphisms")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("reproduce", parents=[common], help="rerun the published claims")
    p.add_argument("--tier", choices=["fast", "slow"], default="fast")
    p.add_argument("--only", nargs="+", help="item keys to run")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        reports, text = args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SearchBudgetExceeded, growth.ResourceError, MemoryError) as e:
        print(f"budget exhausted: {e}", file=sys.stderr)
        return EXIT_BUDGET
    if args.json:
        for r in reports:
            print(json.dumps(r.to_json(), default=_json_default))
    else:
        print(text)
    return EXIT_FAIL if any(r.verdict == "FAIL" for r in reports) else EXIT_PASS


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    return str(o)


if __name__ == "__main__":
    sys.exit(main())
