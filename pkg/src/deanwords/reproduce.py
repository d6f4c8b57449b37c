"""Reproduction items: each recomputes one published claim and compares.

An item returns (passed, result, node_count).  Items flagged ``slow`` need
far more time or memory than a laptop run and only run in the slow tier.
"""

from __future__ import annotations

import resource
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import growth, morphisms, search
from .search import DEAN, SearchConstraints
from .words import (
    Exponent,
    absent_reduced,
    canonical_form,
    factors,
    is_dean,
    is_reduced,
    max_exponent,
    minimal_absent_words,
    symmetry_group,
)


@dataclass
class RunReport:
    command: str
    inputs: dict
    result: dict
    verdict: str  # PASS, FAIL or SKIPPED-LONG-RUNNING
    node_count: int = 0
    wall_time_ms: float = 0.0
    memory_peak_kb: int = 0
    claim: str | None = None

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "result": self.result,
            "node_count": self.node_count,
            "wall_time_ms": round(self.wall_time_ms, 1),
            "memory_peak_kb": self.memory_peak_kb,
            "claim": self.claim,
            "verdict": self.verdict,
        }


def peak_memory_kb() -> int:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss


@dataclass
class Item:
    key: str
    claim: str
    run: Callable[[], tuple[bool, dict, int]]
    slow: bool = False
    inputs: dict = field(default_factory=dict)


def _table1():
    counts = search.count_by_length(DEAN, 20)
    expected = morphisms.presets()["table1"]
    return counts == expected, {"counts": counts}, 0


def _avoid10():
    out = search.longest(SearchConstraints(forbidden_factors={"10"}), 100)
    w = morphisms.presets()["words"]["avoid10_longest"]
    ok = out.kind == "EXHAUSTED" and out.max_length == 58 and len(w) == 58 and is_dean(w) and "10" not in w
    return ok, {"max_length": out.max_length, "witness": out.witness, "printed_witness_valid": ok}, out.node_count


def _stats20():
    words = search.enumerate_words(DEAN, 20)
    sets_with_empty = search.distinct_d3_sets(20)[1]
    orbits = len({canonical_form(w) for w in words})
    w = morphisms.presets()["words"]["all_triples_20"]
    twice = {t: sum(1 for i in range(len(w) - 2) if w[i : i + 3] == t) for t in ("012", "123")}
    hist19 = search.d3_buckets(19, minimal=True)
    no_zero_19 = frozenset() not in hist19
    res = {
        "words": len(words),
        "d3_sets_with_empty": sets_with_empty,
        "orbits": orbits,
        "d3_of_example": len(minimal_absent_words(w, 3)),
        "example_occurrences": twice,
        "all_length_19_have_d3_positive": no_zero_19,
    }
    ok = (
        len(words) == 15504
        and sets_with_empty == 709
        and orbits == 1938
        and is_dean(w)
        and not minimal_absent_words(w, 3)
        and twice == {"012": 2, "123": 2}
        and no_zero_19
    )
    return ok, res, 0


def _norep():
    a = search.longest(SearchConstraints(unique_pairs=True), 100)
    nine = search.enumerate_words(SearchConstraints(unique_pairs=True), 9)
    canon = {canonical_form(w) for w in nine}
    wits = [morphisms.presets()["words"][k] for k in ("norep_a", "norep_b")]
    found = all(canonical_form(w) in canon for w in wits)
    b = search.longest(SearchConstraints(max_right_special_2=1), 100)
    ex = morphisms.presets()["words"]["one_right_special"]
    d3_ok = minimal_absent_words(ex, 3) == morphisms.named_set("right_special_example_d3")
    res = {
        "no_pair_repetition_max": a.max_length,
        "witnesses_found": found,
        "one_right_special_max": b.max_length,
        "example_d3_matches": d3_ok,
    }
    ok = a.max_length == 9 and a.kind == "EXHAUSTED" and found and b.max_length == 23 and d3_ok
    return ok, res, a.node_count + b.node_count


def _avoided_sets():
    s59 = search.classify_avoided_sets(59, 6, "subsets")
    s58 = search.classify_avoided_sets(58, 6, "subsets")
    expected = {morphisms.named_set(f"S{i}") for i in range(1, 5)}
    res = {"n59": sorted(",".join(sorted(s)) for s in s59), "n58_count": len(s58)}
    return s59 == expected and len(s58) == 12, res, 0


def _criteria():
    get = morphisms.get
    checks = {
        "thue_crochemore": bool(morphisms.crochemore_square_free_test(get("thue"))),
        "second_h_crochemore": bool(morphisms.crochemore_square_free_test(get("second_h"))),
    }
    g_res = morphisms.crochemore_square_free_test(get("g"))
    checks["g_fails_crochemore_with_010"] = (not g_res) and "010" in (g_res.counterexample or "")
    checks["g_currie"] = bool(morphisms.currie_test(get("g")))
    checks["thue_bar_dean"] = bool(morphisms.dean_morphism_test(get("thue_bar")))
    h1 = morphisms.crochemore_square_free_test(get("first_h"))
    checks["first_h_fails_on_212"] = (not h1) and "212" in (h1.counterexample or "")
    checks["first_h_currie"] = bool(morphisms.currie_test(get("first_h")))
    return all(checks.values()), checks, 0


def _constructions():
    f_prefix = morphisms.fixed_point_prefix(morphisms.get("dean_f"), 0, 10**4)
    gm = morphisms.apply(morphisms.get("g"), morphisms.hall_thue_prefix(10**4))[: 10**4]
    s1 = morphisms.named_set("S1")
    d = {l: len(minimal_absent_words(gm, l)) for l in (4, 5, 6)}
    round_trip = _g_round_trip(12)
    checks = {
        "f_prefix_dean": is_dean(f_prefix),
        "f_prefix_matches_printed": f_prefix.startswith(morphisms.presets()["words"]["dean_f_prefix"]),
        "g_m_dean": is_dean(gm),
        "g_m_absent_triples_S1": absent_reduced(gm, 3) == s1,
        "g_m_d3_S1": minimal_absent_words(gm, 3) == s1,
        "g_m_d4_d5_d6_zero": all(v == 0 for v in d.values()),
        "g_decompose_round_trip": round_trip,
    }
    return all(checks.values()), checks, 0


def _g_round_trip(max_len: int) -> bool:
    """u g(v) decomposes back into (u, v) whenever it is a valid input, and
    is rejected otherwise."""
    g = morphisms.get("g")
    s1 = morphisms.named_set("S1")
    suffixes = {""} | {img[i:] for img in g.images for i in range(1, len(img))}
    c = SearchConstraints(require_reduced=False, alphabet_size=3)
    for n in range(1, max_len + 1):
        for v in search.enumerate_words(c, n):
            gv = morphisms.apply(g, v)
            for u in suffixes:
                w = u + gv
                valid = is_reduced(w) and not any(t in w for t in s1)
                try:
                    dec = morphisms.g_decompose(w)
                except morphisms.DecompositionError:
                    if valid:
                        return False
                    continue
                if not valid or (dec.prefix, dec.preimage, dec.tail) != (u, v, ""):
                    return False
    return True


def catalog_image_report(name: str, image_length: int = 20000):
    """Check one catalog morphism on a threshold source prefix against its
    recorded claims."""
    claim = morphisms.presets()["image_claims"][name]
    h = morphisms.get(name)
    n = max(60, image_length // h.width)
    src = morphisms.threshold_source(h.domain_size, n)
    return morphisms.verify_image_properties(
        h,
        src,
        exponent=Exponent.parse(claim["exponent"]),
        avoided=claim.get("avoided", ()),
        directedness=claim.get("directedness"),
        source_exponent={4: Exponent(7, 5, True), 3: Exponent(7, 4, True)}[h.domain_size],
    )


def _images(names):
    def run():
        reports = {n: catalog_image_report(n).to_json() for n in names}
        return all(r["passed"] for r in reports.values()), reports, 0

    return run


NEGATIVE_BOUNDS = [
    ("5/3", 0, 61),
    ("17/10", 2, 288),
    ("7/4", 3, 67),
    ("15/8", 5, 135),
]


def _negative_bounds():
    res, nodes, ok = {}, 0, True
    for e, k, expected in NEGATIVE_BOUNDS:
        out = search.longest_with_absent_triples(Exponent.parse(e), k) if k else search.longest(
            SearchConstraints(exponent_bound=Exponent.parse(e)), 2000
        )
        nodes += out.node_count
        hit = out.kind == "EXHAUSTED" and out.max_length == expected
        ok &= hit
        res[f"{e}-free, >= {k} absent triples"] = {
            "expected": expected,
            "max_length": out.max_length,
            "witness": out.witness,
            "max_exponent_of_witness": str(max_exponent(out.witness).exponent),
            "match": hit,
        }
    return ok, res, nodes


DIRECTED_BOUNDS = [
    (None, 5, 9),
    ("27/16", 11, 128),
    ("7/4", 9, 113),
]


def _directed_bounds():
    res, nodes, ok = {}, 0, True
    for e, d, expected in DIRECTED_BOUNDS:
        c = SearchConstraints(exponent_bound=Exponent.parse(e) if e else Exponent(2, 1), directedness=d)
        out = search.longest(c, 2000)
        nodes += out.node_count
        hit = out.kind == "EXHAUSTED" and out.max_length == expected
        ok &= hit
        res[f"{e or '2'}-free {d}-directed"] = {"expected": expected, "max_length": out.max_length, "match": hit}
    return ok, res, nodes


def _frequency():
    rep = morphisms.frequency_morphism_check(1000)
    return rep["passed"], rep, 0


def _frequency_probe():
    r = search.frequency_optimality_probe(118, 3, 15, 118)
    return r.holds, {"holds": r.holds, "candidates": r.candidates, "decided_at": r.decided_at, "horizon": r.horizon}, 0


def _arithmetic():
    g = morphisms.presets()["growth"]
    alpha, beta, p = Fraction(g["alpha"]), Fraction(g["beta"]), g["p"]
    summation = growth.growth_condition(alpha, beta, p, form="summation")
    displayed = growth.growth_condition(alpha, beta, p, form="displayed")
    res = {
        "summation_form_holds": summation,
        "displayed_form_holds": displayed,
        "slack_summation": str(float(alpha - growth.tail_weight(beta, p) - beta)),
        "slack_displayed": str(float(alpha - growth.displayed_tail(beta, p) - beta)),
    }
    return summation and not displayed, res, 0


def _pipeline():
    table = morphisms.presets()["table1"]
    res, ok, prev = {}, True, None
    for p in (4, 6, 8, 10, 12):
        A = growth.build_lambda(p)
        cert = growth.certify(A)
        valid = bool(growth.verify_certificate(A, cert))
        beta = growth.beta_bound(cert.alpha, p)
        rho = growth.upper_bound(p, A=A)
        unit = [int(wc.value) for wc in growth.weighted_counts(A, None, 20)]
        weighted = [wc.value for wc in growth.weighted_counts(A, cert.coefficients, 20)]
        steps = beta is not None and all(weighted[i + 1] >= beta * weighted[i] for i in range(19))
        sandwich = beta is not None and rho >= beta
        envelope = all(table[n - 1] <= table[9] * rho ** (n - 10) for n in range(10, 21))
        monotone = beta is not None and (prev is None or beta >= prev)
        entry = {
            "states": A.n_states,
            "alpha": str(cert.alpha),
            "certificate_valid": valid,
            "beta": None if beta is None else f"{float(beta):.10f}",
            "rho": f"{float(rho):.10f}",
            "unit_weights_match_table": unit == table,
            "weighted_growth_steps": steps,
            "rho_at_least_beta": sandwich,
            "table_envelope": envelope,
            "beta_nondecreasing": monotone,
        }
        res[str(p)] = entry
        ok &= valid and beta is not None and unit == table and steps and sandwich and envelope and monotone
        if beta is not None:
            prev = beta
    return ok, res, 0


def _growth36():
    g = morphisms.presets()["growth"]
    beta, cert = growth.lower_bound(36)
    rho = growth.upper_bound(36)
    ok = beta is not None and beta >= Fraction(g["beta"]) and rho <= Fraction(g["rho"])
    return ok, {"alpha": str(cert.alpha), "beta": str(beta), "rho": str(rho)}, 0


def _appendix():
    m = morphisms.hall_thue_prefix(10**4)
    f7 = factors(m, 7)
    group = symmetry_group()
    family = [morphisms.named_set(f"S{i}") for i in range(1, 5)]
    fam = set(family)
    closed_group = all(frozenset(s(t) for t in S) in fam for s in group for S in family)
    closed_rev = all(frozenset(t[::-1] for t in S) in fam for S in family)
    checks = {
        "factors_7_match": f7 == frozenset(morphisms.hall_thue_factors_7()) and len(f7) == 22,
        "group_order_8": len({s.mapping for s in group}) == 8,
        "family_closed_under_group": closed_group,
        "family_closed_under_reversal": closed_rev,
    }
    return all(checks.values()), checks, 0


ITEMS = [
    Item("table1", "Dean word counts for n = 1..20", _table1),
    Item("avoid10", "longest Dean word avoiding 10 has 58 letters", _avoid10),
    Item("stats20", "statistics of Dean words of length 20", _stats20),
    Item("norep", "no pair repetition: 9; one right-special pair: 23", _norep),
    Item("avoided_sets", "6-sets of avoided triples at n = 59 and 58", _avoided_sets),
    Item("criteria", "square-freeness criteria on the named morphisms", _criteria),
    Item("constructions", "fixed point of f and the image g(m)", _constructions),
    Item("exponent_images", "uniform morphisms with exponent and triple claims", _images(["e136", "e358", "e46", "e100"])),
    Item("exponent_bounds", "longest words under exponent and absent-triple constraints", _negative_bounds),
    Item("directed_images", "uniform morphisms with exponent and directedness claims", _images(["d72", "d564", "d40"])),
    Item("directed_bounds", "longest words under exponent and directedness constraints", _directed_bounds),
    Item("frequency", "letter-frequency morphism, finite checks", _frequency),
    Item("frequency_probe", "no Dean word of length 118 with at most 15 threes extends 118 letters both ways", _frequency_probe, slow=True),
    Item("growth_arithmetic", "alpha/beta growth inequality in exact arithmetic", _arithmetic),
    Item("growth_pipeline", "certified bounds for p = 4..12", _pipeline),
    Item("growth_p36", "certified bounds for p = 36", _growth36, slow=True),
    Item("appendix", "Hall-Thue factors and the symmetry group", _appendix),
]


def run_item(item: Item, tier: str = "fast") -> RunReport:
    if item.slow and tier != "slow":
        return RunReport(f"reproduce {item.key}", item.inputs, {}, "SKIPPED-LONG-RUNNING", claim=item.claim)
    t0 = time.perf_counter()
    ok, result, nodes = item.run()
    ms = (time.perf_counter() - t0) * 1e3
    return RunReport(
        f"reproduce {item.key}",
        item.inputs,
        result,
        "PASS" if ok else "FAIL",
        nodes,
        ms,
        peak_memory_kb(),
        item.claim,
    )
