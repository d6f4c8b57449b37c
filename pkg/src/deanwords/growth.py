"""Certified growth-rate bounds for reduced words avoiding repetitions.

The automaton reads a reduced word letter by letter and remembers the
longest suffix that is a proper prefix of a minimal forbidden repetition of
period at most ``p``.  A positive weight vector C with

    alpha * C[v] <= sum over legal letters a of C[goto(v, a)]

for every state v gives a per-letter growth factor alpha for the weighted
count; subtracting the contribution of long-period repetitions gives beta,
a lower bound on the growth of the real word count.  The same vector gives
an upper bound on the spectral radius through the max-ratio bound.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor, lcm, log10
from pathlib import Path

import numpy as np
from scipy import sparse

from . import _kernel
from .search import SearchConstraints, _run, enumerate_words
from .words import SQUARE, Exponent, as_word, from_array

log = logging.getLogger(__name__)

WEIGHT_BITS = 40
DEFAULT_STATE_BUDGET = 60_000_000


def state_budget() -> int:
    """Cap on trie nodes allocated while building the automaton."""
    return int(os.environ.get("DEAN_STATE_BUDGET", DEFAULT_STATE_BUDGET))


class ResourceError(MemoryError):
    """The automaton would exceed the configured state budget."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats or {}


def repetition_length(period: int, exponent: Exponent) -> int:
    """Length of the shortest forbidden repetition with the given period."""
    q = exponent.value * period
    return floor(q) + 1 if exponent.strict else ceil(q)


def forbidden_repetitions(p: int, exponent: Exponent = SQUARE, minimal: bool = True) -> list[str]:
    """Reduced forbidden repetitions of period <= p whose longest proper
    prefix avoids forbidden repetitions of period <= p.

    With ``minimal`` (the default) the longest proper suffix must avoid them
    too, so the repetition has no forbidden proper factor at all.
    """
    return [from_array(w) for r in _repetition_rows(p, exponent, minimal) for w in r]


def _repetition_rows(p, exponent, minimal):
    c = SearchConstraints(exponent_bound=exponent)
    rows = []
    # reduced words only have even periods once the length exceeds the period
    for per in range(2, p + 1, 2):
        length = repetition_length(per, exponent)
        count = int(_run(c, per, _kernel.MODE_COUNT)["counts"][per])
        us = _run(c, per, _kernel.MODE_COLLECT, collect_limit=count, as_strings=False)["collected"]
        rows.append(
            _kernel.periodic_repetitions(
                us, length, p, exponent.numerator, exponent.denominator, exponent.strict, minimal
            )
        )
    return rows


@dataclass
class LambdaAutomaton:
    """Suffix automaton over proper prefixes of forbidden repetitions.

    State 0 is the empty word; states are numbered by length, then
    lexicographically.  ``goto[s, a]`` is -1 when reading ``a`` from ``s``
    completes a forbidden repetition.
    """

    p: int
    exponent: Exponent
    parent: np.ndarray
    letter: np.ndarray
    depth: np.ndarray
    goto: np.ndarray
    minimal: bool = True
    n_repetitions: int = 0
    _words: list[str] | None = field(default=None, repr=False)
    _index: dict[str, int] | None = field(default=None, repr=False)

    @property
    def n_states(self) -> int:
        return int(self.goto.shape[0])

    @property
    def states(self) -> list[str]:
        if self._words is None:
            words = [""] * self.n_states
            for s in range(1, self.n_states):
                words[s] = words[self.parent[s]] + str(int(self.letter[s]))
            self._words = words
        return self._words

    def index(self, w: str) -> int:
        if self._index is None:
            self._index = {v: i for i, v in enumerate(self.states)}
        return self._index[w]

    def transition(self, v: str, a: int | str) -> str | None:
        t = int(self.goto[self.index(v), int(a)])
        return None if t < 0 else self.states[t]

    def run(self, w: str) -> int:
        """State reached after reading ``w`` from the empty word, i.e. the
        index of Lambda(w); raises if ``w`` contains a forbidden repetition
        of period <= p."""
        s = 0
        for ch in as_word(w):
            s = int(self.goto[s, int(ch)])
            if s < 0:
                raise ValueError(f"{w} contains a forbidden repetition of period <= {self.p}")
        return s

    def matrix(self) -> sparse.csr_matrix:
        """M[u, v] = number of letters a with goto(v, a) = u."""
        src = np.repeat(np.arange(self.n_states), self.goto.shape[1])
        dst = self.goto.ravel()
        keep = dst >= 0
        data = np.ones(int(keep.sum()), dtype=np.int64)
        m = sparse.coo_matrix((data, (dst[keep], src[keep])), shape=(self.n_states, self.n_states))
        return m.tocsr()

    def stats(self) -> dict:
        return {
            "p": self.p,
            "exponent": str(self.exponent),
            "minimal": self.minimal,
            "states": self.n_states,
            "repetitions": self.n_repetitions,
            "legal_transitions": int((self.goto >= 0).sum()),
        }


def build_lambda(p: int, exponent: Exponent = SQUARE, minimal: bool = True, max_states: int | None = None) -> LambdaAutomaton:
    if p < 2 or p % 2:
        raise ValueError("p must be an even integer >= 2")
    rows = _repetition_rows(p, exponent, minimal)
    n_rep = sum(len(r) for r in rows)
    total = 1 + sum(r.shape[0] * (r.shape[1] - 1) for r in rows)
    if max_states is None:
        max_states = state_budget()
    if total > max_states:
        raise ResourceError(
            f"up to {total} states exceed the budget of {max_states}",
            {"p": p, "repetitions": n_rep, "prefix_letters": total},
        )
    flat = np.concatenate([r.ravel() for r in rows]) if rows else np.zeros(0, dtype=np.int8)
    lengths = [r.shape[1] for r in rows for _ in range(r.shape[0])]
    offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(lengths)
    parent, letter, depth, goto = _kernel.build_factor_automaton(flat, offsets, 4)
    # reduced words alternate the parity of their letters
    same = (letter[:, None].astype(np.int64) + np.arange(4)) % 2 == 0
    same[0] = False
    goto[same] = -1
    a = LambdaAutomaton(p, exponent, parent, letter, depth, goto, minimal, n_rep)
    log.info("automaton %s", a.stats())
    return a


@dataclass
class Certificate:
    p: int
    exponent: Exponent
    alpha: Fraction
    coefficients: list[Fraction]
    states: list[str]
    beta: Fraction | None = None

    def to_text(self) -> str:
        lines = [f"p {self.p} exponent {self.exponent}", f"alpha {_frac(self.alpha)}"]
        if self.beta is not None:
            lines.append(f"beta {_frac(self.beta)}")
        for w, c in zip(self.states, self.coefficients):
            lines.append(f"state {w or '-'} C {_frac(c)}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def parse(cls, text: str) -> "Certificate":
        p = exponent = alpha = beta = None
        states, coeffs = [], []
        for no, line in enumerate(text.splitlines(), 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                if parts[0] == "p":
                    p, exponent = int(parts[1]), Exponent.parse(parts[3])
                elif parts[0] == "alpha":
                    alpha = Fraction(parts[1])
                elif parts[0] == "beta":
                    beta = Fraction(parts[1])
                elif parts[0] == "state" and parts[2] == "C":
                    states.append("" if parts[1] == "-" else as_word(parts[1]))
                    coeffs.append(Fraction(parts[3]))
                else:
                    raise ValueError(parts[0])
            except (IndexError, ValueError) as e:
                raise ValueError(f"certificate line {no}: cannot parse {line!r}") from e
        if p is None or alpha is None:
            raise ValueError("certificate lacks the p/exponent header or alpha")
        return cls(p, exponent, alpha, coeffs, states, beta)

    @classmethod
    def load(cls, path) -> "Certificate":
        return cls.parse(Path(path).read_text())


def _frac(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _ratios(goto: np.ndarray, x: np.ndarray):
    y = np.zeros(len(x), dtype=np.int64)
    for a in range(goto.shape[1]):
        t = goto[:, a]
        y += np.where(t >= 0, x[np.maximum(t, 0)], 0)
    return y


def _extreme_ratio(y: np.ndarray, x: np.ndarray, mask: np.ndarray, want_min: bool) -> Fraction:
    # rank by floating ratio, then settle near-ties exactly
    idx = np.nonzero(mask)[0]
    r = y[idx] / x[idx]
    best = r.min() if want_min else r.max()
    near = idx[np.abs(r - best) <= 1e-9 * best]
    fr = [Fraction(int(y[i]), int(x[i])) for i in near]
    return min(fr) if want_min else max(fr)


def dominant_pair(A: LambdaAutomaton, iterations: int = 100) -> tuple[Fraction, np.ndarray]:
    """Power iteration from the all-ones vector with integer weights.

    Returns (alpha, C) where alpha is the exact minimum of
    (sum_a C[goto(v, a)]) / C[v] over states with C[v] > 0, so the
    certificate inequality holds by construction.
    """
    if iterations < 1:
        raise ValueError("iterations must be positive")
    x = _kernel.iterate_weights(A.goto, np.ones(A.n_states, dtype=np.int64), iterations, WEIGHT_BITS, False)
    if not x.any():
        raise ArithmeticError("power iteration collapsed to the zero vector")
    y = _ratios(A.goto, x)
    return _extreme_ratio(y, x, x > 0, True), x


@dataclass
class CertificateCheck:
    valid: bool
    violating_state: str | None = None
    reason: str = ""

    def __bool__(self):
        return self.valid


def _as_integers(coeffs) -> list[int]:
    qs = [Fraction(c) for c in coeffs]
    den = lcm(*(q.denominator for q in qs)) if qs else 1
    return [int(q * den) for q in qs]


def verify_certificate(A: LambdaAutomaton, cert: Certificate) -> CertificateCheck:
    """Exact check of alpha * C[v] <= sum_a C[goto(v, a)] for every state."""
    if cert.p != A.p or cert.exponent != A.exponent:
        return CertificateCheck(False, None, "certificate was made for another automaton")
    if len(cert.coefficients) != A.n_states:
        return CertificateCheck(False, None, f"{len(cert.coefficients)} coefficients for {A.n_states} states")
    if cert.states and cert.states != A.states:
        return CertificateCheck(False, None, "state list differs from the automaton")
    c = _as_integers(cert.coefficients)
    if c[0] <= 0:
        return CertificateCheck(False, "", "weight of the empty word is not positive")
    cv = np.array(c, dtype=object)
    if (cv < 0).any():
        s = int(np.nonzero(cv < 0)[0][0])
        return CertificateCheck(False, A.states[s], "negative weight")
    rhs = np.zeros(A.n_states, dtype=object)
    for a in range(A.goto.shape[1]):
        t = A.goto[:, a]
        rhs = rhs + np.where(t >= 0, cv[np.maximum(t, 0)], 0)
    bad = cert.alpha.numerator * cv > cert.alpha.denominator * rhs
    if bad.any():
        s = int(np.nonzero(bad)[0][0])
        return CertificateCheck(False, A.states[s], "weighted inequality fails")
    return CertificateCheck(True)


def tail_weight(beta: Fraction, p: int, exponent: Exponent = SQUARE) -> Fraction:
    """Sum over even periods i > p of beta^(1 - m_i), where m_i letters of a
    forbidden repetition of period i are forced by the rest of the word.

    For squares m_i = i and the sum is beta^(1-p) / (beta^2 - 1).  For other
    exponents m_i grows by 2(a - b) every 2b periods (exponent a/b), which
    gives a finite sum of geometric series.
    """
    beta = Fraction(beta)
    a, b = exponent.numerator, exponent.denominator
    step = 2 * b
    ratio = 1 - beta ** (-2 * (a - b))
    first = p + 2 if p % 2 == 0 else p + 1
    total = Fraction(0)
    for i in range(first, first + step, 2):
        m = repetition_length(i, exponent) - i
        total += beta ** (1 - m)
    return total / ratio


def displayed_tail(beta: Fraction, p: int) -> Fraction:
    """The correction term with exponent 2 - ceil((p+1)/2), for comparison."""
    beta = Fraction(beta)
    return beta ** (2 - ceil(Fraction(p + 1, 2))) / (beta**2 - 1)


def growth_condition(alpha: Fraction, beta: Fraction, p: int, exponent: Exponent = SQUARE, form: str = "summation") -> bool:
    """alpha - tail(beta) >= beta, with the tail summed over even periods
    (``form="summation"``) or in the displayed closed form (``"displayed"``)."""
    beta = Fraction(beta)
    if beta <= 1:
        return False
    if form == "summation":
        t = tail_weight(beta, p, exponent)
    elif form == "displayed":
        t = displayed_tail(beta, p)
    else:
        raise ValueError(f"unknown form {form!r}")
    return Fraction(alpha) - t >= beta


def beta_bound(alpha: Fraction, p: int, exponent: Exponent = SQUARE, precision: Fraction = Fraction(1, 10**9)) -> Fraction | None:
    """Largest beta (to ``precision``) with alpha - tail(beta) >= beta.

    The left side minus beta is concave in beta, so the feasible set is an
    interval; we locate a feasible point with a float ternary search and
    bisect its upper end exactly.  Returns None if no beta > 1 qualifies.
    """
    alpha = Fraction(alpha)
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")

    def g(b: float) -> float:
        try:
            return float(alpha) - b - float(tail_weight(Fraction(b), p, exponent))
        except (OverflowError, ZeroDivisionError):
            return -np.inf

    lo_f, hi_f = 1.0, float(alpha)
    for _ in range(200):
        m1 = lo_f + (hi_f - lo_f) / 3
        m2 = hi_f - (hi_f - lo_f) / 3
        if g(m1) < g(m2):
            lo_f = m1
        else:
            hi_f = m2
    lo = Fraction((lo_f + hi_f) / 2)
    if not growth_condition(alpha, lo, p, exponent):
        return None
    hi = alpha
    while hi - lo > precision / 2:
        mid = (lo + hi) / 2
        if growth_condition(alpha, mid, p, exponent):
            lo = mid
        else:
            hi = mid
    # round down to a short decimal; the loss stays below precision / 4
    scale = 10 ** ceil(log10(4 / precision))
    short = Fraction(floor(lo * scale), scale)
    return short if growth_condition(alpha, short, p, exponent) else lo


def certify(A: LambdaAutomaton, iterations: int = 100, max_denominator: int | None = 10**8) -> Certificate:
    """Certificate with the min-ratio alpha, optionally replaced by the best
    rational below it with a bounded denominator."""
    alpha, x = dominant_pair(A, iterations)
    if max_denominator:
        alpha = rational_below(alpha, max_denominator)
    coeffs = [Fraction(int(v)) for v in x]
    return Certificate(A.p, A.exponent, alpha, coeffs, A.states)


def rational_below(q: Fraction, max_denominator: int) -> Fraction:
    """A rational <= q with denominator <= max_denominator, close to q."""
    r = q.limit_denominator(max_denominator)
    if r <= q:
        return r
    den = r.denominator
    return Fraction(floor(q * den), den)


def lower_bound(p: int, exponent: Exponent = SQUARE, iterations: int = 100, max_states: int | None = None) -> tuple[Fraction | None, Certificate]:
    A = build_lambda(p, exponent, max_states=max_states)
    cert = certify(A, iterations)
    check = verify_certificate(A, cert)
    if not check:
        raise ArithmeticError(f"certificate fails at state {check.violating_state!r}: {check.reason}")
    cert.beta = beta_bound(cert.alpha, p, exponent)
    return cert.beta, cert


def live_states(A: LambdaAutomaton) -> np.ndarray:
    """States from which arbitrarily long legal continuations exist."""
    alive = np.ones(A.n_states, dtype=bool)
    while True:
        nxt = np.zeros(A.n_states, dtype=bool)
        for a in range(A.goto.shape[1]):
            t = A.goto[:, a]
            nxt |= (t >= 0) & alive[np.maximum(t, 0)]
        nxt &= alive
        if (nxt == alive).all():
            return alive
        alive = nxt


def upper_bound(p: int, exponent: Exponent = SQUARE, iterations: int = 100, A: LambdaAutomaton | None = None) -> Fraction:
    """Max-ratio bound on the spectral radius of the transfer matrix.

    Dead-end states add nothing to the growth, so the bound is taken on the
    live part, where rounding the renormalization upwards keeps every weight
    positive as the bound requires.
    """
    if A is None:
        A = build_lambda(p, exponent)
    alive = live_states(A)
    goto = np.where(np.isin(A.goto, np.nonzero(alive)[0]), A.goto, -1)
    goto[~alive] = -1
    x = np.where(alive, 1, 0).astype(np.int64)
    x = _kernel.iterate_weights(goto.astype(np.int32), x, iterations, WEIGHT_BITS, True)
    y = _ratios(goto, x)
    return _extreme_ratio(y, x, alive, False)


@dataclass
class WeightedCount:
    n: int
    value: Fraction


def weighted_counts(A: LambdaAutomaton, coefficients=None, n_max: int = 20, c: SearchConstraints | None = None) -> list[WeightedCount]:
    """T^_n = sum over words w of length n of C[Lambda(w)], for n = 1..n_max.

    The words are those satisfying ``c`` (default: reduced and free of the
    automaton's exponent).  ``coefficients=None`` means unit weights.
    """
    if c is None:
        c = SearchConstraints(exponent_bound=A.exponent)
    coeffs = [Fraction(1)] * A.n_states if coefficients is None else [Fraction(q) for q in coefficients]
    out = []
    for n in range(1, n_max + 1):
        total = Fraction(0)
        for w in enumerate_words(c, n):
            total += coeffs[A.run(w)]
        out.append(WeightedCount(n, total))
    return out
