"""Backtracking over reduced words with incremental constraint checks.

Every extension by one letter only has to look at factors ending at the new
letter, so the compiled kernel keeps per-period run lengths, factor
occurrence counters and a directedness table on a stack and undoes them on
backtrack.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from . import _kernel
from .words import (
    REDUCED_TRIPLES,
    SQUARE,
    Exponent,
    absent_reduced,
    minimal_absent_words,
    symmetry_group,
    to_array,
    from_array,
)

log = logging.getLogger(__name__)

DEFAULT_NODE_BUDGET = 10**10
_TRIPLE_INDEX = {t: i for i, t in enumerate(REDUCED_TRIPLES)}


class SearchBudgetExceeded(RuntimeError):
    def __init__(self, node_count):
        super().__init__(f"node budget exceeded after {node_count} nodes")
        self.node_count = node_count


def node_budget() -> int:
    return int(os.environ.get("DEAN_NODE_BUDGET", DEFAULT_NODE_BUDGET))


@dataclass(frozen=True)
class SearchConstraints:
    """Hypotheses a searched word must satisfy.

    ``min_absent_triples`` asks for at least that many reduced triples to be
    absent as factors (hereditary, so it prunes).  ``min_d3`` asks for at
    least that many *minimal* absent reduced triples; that property is not
    hereditary and only filters which words are reported.
    ``letter_budget`` is ``(letter, max_count)``; ``budget_window`` restricts
    the budget to the first positions of the word.
    """

    require_reduced: bool = True
    exponent_bound: Exponent | None = SQUARE
    forbidden_factors: frozenset[str] = frozenset()
    min_absent_triples: int | None = None
    directedness: int | None = None
    letter_budget: tuple[int, int] | None = None
    budget_window: int | None = None
    required_factors: frozenset[str] = frozenset()
    max_right_special_2: int | None = None
    unique_pairs: bool = False
    min_d3: int | None = None
    alphabet_size: int = 4

    def __post_init__(self):
        object.__setattr__(self, "forbidden_factors", frozenset(self.forbidden_factors))
        object.__setattr__(self, "required_factors", frozenset(self.required_factors))
        if not self.require_reduced and self.exponent_bound is None:
            raise ValueError("at least one of require_reduced / exponent_bound must be set")
        if self.forbidden_factors & self.required_factors:
            raise ValueError("forbidden and required factors overlap")
        for f in self.forbidden_factors | self.required_factors:
            if not 0 < len(f) <= _kernel.MAX_FACTOR_LEN:
                raise ValueError(f"factor length out of range: {f!r}")
        if self.directedness is not None and not 1 <= self.directedness <= 13:
            raise ValueError("directedness must be in 1..13")

    def to_json(self) -> dict:
        return {
            "require_reduced": self.require_reduced,
            "exponent_bound": str(self.exponent_bound) if self.exponent_bound else None,
            "forbidden_factors": sorted(self.forbidden_factors),
            "min_absent_triples": self.min_absent_triples,
            "directedness": self.directedness,
            "letter_budget": list(self.letter_budget) if self.letter_budget else None,
            "budget_window": self.budget_window,
            "required_factors": sorted(self.required_factors),
            "max_right_special_2": self.max_right_special_2,
            "unique_pairs": self.unique_pairs,
            "min_d3": self.min_d3,
            "alphabet_size": self.alphabet_size,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SearchConstraints":
        d = dict(d)
        if d.get("exponent_bound") is not None:
            d["exponent_bound"] = Exponent.parse(d["exponent_bound"])
        for key in ("forbidden_factors", "required_factors"):
            d[key] = frozenset(d.get(key) or ())
        if d.get("letter_budget") is not None:
            d["letter_budget"] = tuple(d["letter_budget"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown constraint fields: {sorted(unknown)}")
        return cls(**d)


DEAN = SearchConstraints()
REDUCED_ONLY = SearchConstraints(exponent_bound=None)


@dataclass
class SearchOutcome:
    kind: str  # "EXHAUSTED" or "CAP_REACHED"
    max_length: int
    witness: str
    node_count: int
    cap: int
    wall_time_ms: float = 0.0
    constraints: SearchConstraints = field(default=DEAN, repr=False)

    def to_json(self) -> dict:
        return {
            "constraints": self.constraints.to_json(),
            "outcome_kind": self.kind,
            "max_length": self.max_length,
            "witness": self.witness,
            "node_count": self.node_count,
            "wall_time_ms": round(self.wall_time_ms, 3),
        }


def _encode(f: str) -> int:
    code = 0
    for ch in f:
        code = code * 4 + int(ch)
    return code


def _factor_arrays(fs):
    fs = sorted(fs)
    return (
        np.array([_encode(f) for f in fs], dtype=np.int64),
        np.array([len(f) for f in fs], dtype=np.int64),
    )


_EMPTY_LOOKAHEAD = np.zeros(0, dtype=np.int64)


def _run(
    c: SearchConstraints,
    n_max: int,
    mode: int,
    prefix: str = "",
    stop_at_cap: bool = False,
    collect_limit: int = 0,
    lookahead: np.ndarray | None = None,
    budget: int | None = None,
    as_strings: bool = True,
    truncate: bool = False,
):
    fc, fl = _factor_arrays(c.forbidden_factors)
    rc, rl = _factor_arrays(c.required_factors)
    e = c.exponent_bound
    letter, max_count = c.letter_budget if c.letter_budget else (-1, 0)
    window = c.budget_window if c.budget_window is not None else n_max
    counts = np.zeros(n_max + 1, dtype=np.int64)
    witness = np.zeros(n_max + 1, dtype=np.int8)
    hist_size = 1 << 16 if mode == _kernel.MODE_LEAFSETS else 1
    hist_abs = np.zeros(hist_size, dtype=np.int64)
    hist_min = np.zeros(hist_size, dtype=np.int64)
    buf = np.zeros((max(collect_limit, 1), max(n_max, 1)), dtype=np.int8)
    max_nodes = node_budget() if budget is None else budget
    status, nodes, max_rec, n_coll = _kernel.dfs(
        to_array(prefix),
        n_max,
        c.alphabet_size,
        mode,
        c.require_reduced,
        e.numerator if e else 0,
        e.denominator if e else 1,
        e.strict if e else False,
        fc,
        fl,
        rc,
        rl,
        16 - c.min_absent_triples if c.min_absent_triples is not None else 64,
        c.min_d3 or 0,
        c.directedness or 0,
        letter,
        max_count,
        window,
        _EMPTY_LOOKAHEAD if lookahead is None else lookahead,
        c.max_right_special_2 if c.max_right_special_2 is not None else -1,
        c.unique_pairs,
        stop_at_cap,
        max_nodes,
        counts,
        witness,
        hist_abs,
        hist_min,
        buf,
    )
    if status == _kernel.BUDGET:
        raise SearchBudgetExceeded(int(nodes))
    if status == _kernel.COLLECT_FULL and not truncate:
        raise SearchBudgetExceeded(int(nodes))
    return {
        "status": int(status),
        "nodes": int(nodes),
        "max_length": int(max_rec),
        "witness": from_array(witness[: max(int(max_rec), 0)]),
        "counts": counts,
        "hist_absent": hist_abs,
        "hist_minimal": hist_min,
        "collected": [from_array(row) for row in buf[: int(n_coll)]] if as_strings else buf[: int(n_coll)],
    }


def _split(c: SearchConstraints, depth: int) -> list[str]:
    return _run(c, depth, _kernel.MODE_COLLECT, collect_limit=4**depth)["collected"]


def _count_task(args):
    c, n_max, prefix = args
    return _run(c, n_max, _kernel.MODE_COUNT, prefix=prefix)


def count_by_length(
    c: SearchConstraints = DEAN, n_max: int = 20, *, workers: int = 1, split_depth: int = 8
) -> list[int]:
    """Number of words of each length 1..n_max satisfying ``c``."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if workers <= 1 or n_max <= split_depth:
        res = _run(c, n_max, _kernel.MODE_COUNT)
        return [int(x) for x in res["counts"][1:]]
    head = _run(c, split_depth, _kernel.MODE_COUNT)["counts"]
    prefixes = _split(c, split_depth)
    total = np.zeros(n_max + 1, dtype=np.int64)
    total[: split_depth + 1] = head
    with ProcessPoolExecutor(workers) as pool:
        for res in pool.map(_count_task, [(c, n_max, p) for p in prefixes]):
            total[split_depth + 1 :] += res["counts"][split_depth + 1 :]
    return [int(x) for x in total[1:]]


def enumerate_words(c: SearchConstraints = DEAN, n: int = 1, limit: int | None = None) -> list[str]:
    """Words of length ``n`` satisfying ``c`` in lexicographic order, all of
    them or the first ``limit``."""
    if n == 0:
        return [""]
    if limit is not None:
        return _run(c, n, _kernel.MODE_COLLECT, collect_limit=max(limit, 1), truncate=True)["collected"][:limit]
    limit = count_by_length(c, n)[-1]
    return _run(c, n, _kernel.MODE_COLLECT, collect_limit=max(limit, 1))["collected"]


def _longest_task(args):
    c, cap, prefix = args
    return _run(c, cap, _kernel.MODE_LONGEST, prefix=prefix, stop_at_cap=True)


def longest(c: SearchConstraints = DEAN, cap: int = 100, *, workers: int = 1, split_depth: int = 8) -> SearchOutcome:
    """Longest word satisfying ``c``, searched up to length ``cap``.

    ``EXHAUSTED`` means the search tree died out (a proof of the bound);
    ``CAP_REACHED`` only says that a word of length ``cap`` exists.  The
    witness is the lexicographically first word of the reported length.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    t0 = time.perf_counter()
    if workers <= 1 or cap <= split_depth:
        res = _run(c, cap, _kernel.MODE_LONGEST, stop_at_cap=True)
        nodes, best, wit = res["nodes"], res["max_length"], res["witness"]
    else:
        head = _run(c, split_depth, _kernel.MODE_LONGEST)
        nodes, best, wit = head["nodes"], head["max_length"], head["witness"]
        prefixes = _split(c, split_depth)
        with ProcessPoolExecutor(workers) as pool:
            for res in pool.map(_longest_task, [(c, cap, p) for p in prefixes]):
                nodes += res["nodes"]
                if res["max_length"] > best:
                    best, wit = res["max_length"], res["witness"]
    kind = "CAP_REACHED" if best >= cap else "EXHAUSTED"
    ms = (time.perf_counter() - t0) * 1e3
    return SearchOutcome(kind, max(best, 0), wit, nodes, cap, ms, c)


def _mask_to_set(mask: int) -> frozenset[str]:
    return frozenset(t for i, t in enumerate(REDUCED_TRIPLES) if mask >> i & 1)


def _set_to_mask(s) -> int:
    return sum(1 << _TRIPLE_INDEX[t] for t in s)


def classify_avoided_sets(n: int, k: int, strategy: str = "single", c: SearchConstraints = DEAN) -> set[frozenset[str]]:
    """All k-sets S of reduced triples such that some word of length ``n``
    has exactly the triples of S absent.

    ``strategy="single"`` runs one search pruned by "at most 16-k triples
    present" and buckets the leaves; ``strategy="subsets"`` runs one search
    per candidate subset (forbid S, require the rest), using the symmetry
    group and reversal to visit one subset per orbit.
    """
    if not 0 <= k <= 16:
        raise ValueError("k must be in 0..16")
    if strategy == "single":
        res = _run(replace(c, min_absent_triples=k), n, _kernel.MODE_LEAFSETS)
        hist = res["hist_absent"]
        return {_mask_to_set(int(m)) for m in np.nonzero(hist)[0] if bin(int(m)).count("1") == k}
    if strategy != "subsets":
        raise ValueError(f"unknown strategy {strategy!r}")
    found: set[frozenset[str]] = set()
    done: set[frozenset[str]] = set()
    for combo in combinations(REDUCED_TRIPLES, k):
        s = frozenset(combo)
        if s in done:
            continue
        orbit = set(_orbit(s))
        done |= orbit
        cs = replace(c, forbidden_factors=s, required_factors=frozenset(REDUCED_TRIPLES) - s)
        if _run(cs, n, _kernel.MODE_LONGEST, stop_at_cap=True)["status"] == _kernel.CAP:
            found |= orbit
    return found


def _orbit(s: frozenset[str]):
    for sigma in symmetry_group():
        img = frozenset(sigma(t) for t in s)
        yield img
        yield frozenset(t[::-1] for t in img)


def d3_buckets(n: int, minimal: bool = False) -> dict[frozenset[str], int]:
    """Dean words of length ``n`` bucketed by their set of absent reduced
    triples, or by the minimal absent ones when ``minimal`` is set."""
    res = _run(DEAN, n, _kernel.MODE_LEAFSETS)
    hist = res["hist_minimal" if minimal else "hist_absent"]
    return {_mask_to_set(int(m)): int(hist[m]) for m in np.nonzero(hist)[0]}


def distinct_d3_sets(n: int, minimal: bool = False) -> tuple[int, int]:
    """(number of distinct nonempty sets, number including the empty set)."""
    buckets = d3_buckets(n, minimal)
    nonempty = sum(1 for s in buckets if s)
    return nonempty, len(buckets)


def longest_with_absent_triples(exponent: Exponent, k: int, cap: int = 2000, *, exact_d3: bool = False) -> SearchOutcome:
    """Longest e-free Dean word with at least ``k`` absent reduced triples.

    With ``exact_d3`` the reported words must have at least ``k`` *minimal*
    absent triples; the search tree is the same since minimal absent words
    are in particular absent.
    """
    c = SearchConstraints(exponent_bound=exponent, min_absent_triples=k, min_d3=k if exact_d3 else None)
    return longest(c, cap)


def longest_over_subsets(exponent: Exponent, k: int, cap: int = 2000) -> SearchOutcome:
    """Same bound as :func:`longest_with_absent_triples`, as a maximum over
    per-subset searches with the k triples forbidden (one subset per
    symmetry orbit)."""
    best: SearchOutcome | None = None
    nodes = 0
    seen: set[frozenset[str]] = set()
    for combo in combinations(REDUCED_TRIPLES, k):
        s = frozenset(combo)
        if s in seen:
            continue
        seen |= set(_orbit(s))
        out = longest(SearchConstraints(exponent_bound=exponent, forbidden_factors=s), cap)
        nodes += out.node_count
        if best is None or out.max_length > best.max_length:
            best = out
    best.node_count = nodes
    return best


def min_letter_table(letter: int, n_max: int, c: SearchConstraints = DEAN) -> list[int]:
    """table[m] = fewest occurrences of ``letter`` in any word of length m
    satisfying ``c`` (``c`` must be closed under taking factors)."""
    table = [0]
    for m in range(1, n_max + 1):
        k = table[-1]
        look = np.array(table, dtype=np.int64)
        while True:
            cm = replace(c, letter_budget=(letter, k), budget_window=m)
            res = _run(cm, m, _kernel.MODE_LONGEST, stop_at_cap=True, lookahead=look)
            if res["status"] == _kernel.CAP:
                break
            k += 1
            if k > m:
                raise ValueError(f"no word of length {m} satisfies the constraints")
        table.append(k)
    return table


def _is_valid(c: SearchConstraints, w: str) -> bool:
    return _run(c, len(w), _kernel.MODE_LONGEST, prefix=w)["status"] != _kernel.INVALID_PREFIX


def _extensions(c: SearchConstraints, w: str, target: int, chunk: int = 12):
    """Yield the right extensions of ``w`` of length ``target`` in lexicographic
    order, collecting at most ``chunk`` letters per kernel call."""
    if len(w) >= target:
        yield w
        return
    step = min(chunk, target - len(w))
    limit = c.alphabet_size**step if not c.require_reduced else 4 * 2**step
    for x in _run(c, len(w) + step, _kernel.MODE_COLLECT, prefix=w, collect_limit=limit)["collected"]:
        yield from _extensions(c, x, target, chunk)


def two_sided_extendable(w: str, margin: int, c: SearchConstraints = DEAN) -> bool:
    """Is there u, v with |u| = |v| = margin and uwv satisfying ``c``?

    ``c`` must be invariant under reversal (Dean words are).
    """
    if not _is_valid(c, w):
        return False
    if margin == 0:
        return True
    for wv in _extensions(c, w, len(w) + margin):
        res = _run(c, len(w) + 2 * margin, _kernel.MODE_LONGEST, prefix=wv[::-1], stop_at_cap=True)
        if res["status"] == _kernel.CAP:
            return True
    return False


def extendability_probe(w: str, margin: int) -> bool:
    """Bounded test of two-sided extendability of a Dean word.

    ``False`` proves ``w`` cannot sit inside arbitrarily long Dean words;
    ``True`` only says a Dean word ``u w v`` with ``|u| = |v| = margin``
    exists.  Margins are tried upwards so non-extendable words fail fast.
    """
    if not _is_valid(DEAN, w):
        raise ValueError(f"{w} is not a Dean word")
    return all(two_sided_extendable(w, h) for h in range(margin + 1))


@dataclass
class ProbeResult:
    holds: bool
    candidates: int
    horizon: int
    decided_at: int | None
    extension: str = "two-sided"


def frequency_optimality_probe(length: int, letter: int, max_count: int, horizon: int = 118) -> ProbeResult:
    """Can no Dean word of ``length`` with at most ``max_count`` occurrences of
    ``letter`` be extended by ``horizon`` letters on both sides?

    Two-sided extendability is monotone in the margin, so margins are tried
    from 0 upwards and the answer is settled at the first margin where no
    candidate survives.
    """
    table = np.array(min_letter_table(letter, length), dtype=np.int64)
    c = replace(DEAN, letter_budget=(letter, max_count), budget_window=length)
    cands = _run(c, length, _kernel.MODE_COLLECT, collect_limit=1 << 20, lookahead=table)["collected"]
    alive = list(cands)
    for h in range(0, horizon + 1):
        alive = [w for w in alive if two_sided_extendable(w, h)]
        if not alive:
            return ProbeResult(True, len(cands), horizon, h)
    return ProbeResult(False, len(cands), horizon, None)


def absent_triple_set(w: str) -> frozenset[str]:
    return absent_reduced(w, 3)
