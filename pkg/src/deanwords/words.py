"""Words over small alphabets: repetitions, absent factors, symmetries.

Words are plain digit strings (``"0123"``).  Functions that only make sense
over the four-letter free-group alphabet check that explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from . import _kernel

INVERSE = {"0": "2", "1": "3", "2": "0", "3": "1"}
NON_REDUCED_PAIRS = frozenset({"02", "20", "13", "31"})


class AlphabetError(ValueError):
    """A letter lies outside the alphabet an operation expects."""


def as_word(w: str | Sequence[int], alphabet_size: int = 4) -> str:
    """Normalize ``w`` to a digit string and check its letters."""
    if not isinstance(w, str):
        w = "".join(str(int(a)) for a in w)
    for ch in w:
        if not ch.isdigit() or int(ch) >= alphabet_size:
            raise AlphabetError(f"letter {ch!r} not in alphabet of size {alphabet_size}")
    return w


def to_array(w: str) -> np.ndarray:
    return np.frombuffer(w.encode("ascii"), dtype=np.uint8).astype(np.int8) - ord("0")


def from_array(a: Iterable[int]) -> str:
    return "".join(str(int(x)) for x in a)


def reduced_words(n: int) -> list[str]:
    """All reduced words of length ``n`` in lexicographic order."""
    if n == 0:
        return [""]
    out = list("0123")
    for _ in range(n - 1):
        out = [w + b for w in out for b in "0123" if (int(w[-1]) + int(b)) % 2]
    return out


REDUCED_TRIPLES = tuple(reduced_words(3))


@dataclass(frozen=True)
class Exponent:
    """A repetition threshold ``numerator/denominator``.

    ``strict=False`` is the plain "e-free" reading (forbid exponent >= e);
    ``strict=True`` is "e+-free" (forbid exponent > e).
    """

    numerator: int
    denominator: int
    strict: bool = False

    def __post_init__(self):
        if self.numerator <= 0 or self.denominator <= 0:
            raise ValueError("exponent terms must be positive")
        if gcd(self.numerator, self.denominator) != 1:
            raise ValueError("exponent must be a reduced fraction")
        if self.numerator <= self.denominator:
            raise ValueError("exponent must exceed 1")

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def forbids(self, e: Fraction) -> bool:
        return e > self.value if self.strict else e >= self.value

    @classmethod
    def parse(cls, text: str) -> "Exponent":
        """Parse ``"7/4"``, ``"7/4+"`` or ``"2"``."""
        text = text.strip()
        strict = text.endswith("+")
        if strict:
            text = text[:-1]
        q = Fraction(text)
        return cls(q.numerator, q.denominator, strict)

    def __str__(self):
        base = f"{self.numerator}/{self.denominator}"
        return base + ("+" if self.strict else "")


SQUARE = Exponent(2, 1)


@dataclass(frozen=True)
class Permutation:
    """A letter permutation of {0,1,2,3} stored as its image tuple."""

    mapping: tuple[int, int, int, int]

    def __post_init__(self):
        if sorted(self.mapping) != [0, 1, 2, 3]:
            raise ValueError(f"not a permutation: {self.mapping}")
        m = self.mapping
        if {frozenset({m[0], m[2]}), frozenset({m[1], m[3]})} != {
            frozenset({0, 2}),
            frozenset({1, 3}),
        }:
            raise ValueError(f"{self.mapping} does not preserve reduced words")

    @classmethod
    def from_cycles(cls, cycles: Sequence[Sequence[int]]) -> "Permutation":
        m = [0, 1, 2, 3]
        for cyc in cycles:
            for i, a in enumerate(cyc):
                m[a] = cyc[(i + 1) % len(cyc)]
        return cls(tuple(m))

    def __call__(self, w: str) -> str:
        return w.translate(self._table)

    @property
    def _table(self):
        return str.maketrans("0123", "".join(str(x) for x in self.mapping))

    def __str__(self):
        seen, parts = set(), []
        for a in range(4):
            if a in seen or self.mapping[a] == a:
                continue
            cyc = [a]
            seen.add(a)
            b = self.mapping[a]
            while b != a:
                cyc.append(b)
                seen.add(b)
                b = self.mapping[b]
            parts.append("(" + " ".join(map(str, cyc)) + ")")
        return "".join(parts) or "id"


# the seven non-identity permutations of the appendix, in its order
_APPENDIX_CYCLES = [
    [[0, 2]],
    [[1, 3]],
    [[0, 2], [1, 3]],
    [[0, 1], [2, 3]],
    [[0, 3], [2, 1]],
    [[0, 1, 2, 3]],
    [[0, 3, 2, 1]],
]


def symmetry_group() -> list[Permutation]:
    """The identity followed by the 7 reduced-word preserving permutations."""
    return [Permutation((0, 1, 2, 3))] + [Permutation.from_cycles(c) for c in _APPENDIX_CYCLES]


def apply_permutation(w: str, sigma: Permutation) -> str:
    return sigma(as_word(w))


def canonical_form(w: str) -> str:
    """Lexicographically least image of ``w`` under the symmetry group."""
    return min(s(w) for s in symmetry_group())


def reverse(w: str) -> str:
    return w[::-1]


def factors(w: str, l: int) -> frozenset[str]:
    """Distinct factors of length ``l``."""
    return frozenset(w[i : i + l] for i in range(len(w) - l + 1))


def format_factor_set(s: Iterable[str]) -> str:
    return ",".join(sorted(s))


def parse_factor_set(text: str) -> frozenset[str]:
    return frozenset(x.strip() for x in text.split(",") if x.strip())


def is_reduced(w: str) -> bool:
    w = as_word(w, 4)
    return all((ord(a) + ord(b)) % 2 for a, b in zip(w, w[1:]))


def is_square_free(w: str) -> bool:
    w = as_word(w)
    return not is_e_free_violated(w, SQUARE)


def is_dean(w: str) -> bool:
    return is_reduced(w) and is_square_free(w)


@dataclass(frozen=True)
class Repetition:
    exponent: Fraction
    start: int
    length: int
    period: int

    @property
    def factor_span(self) -> tuple[int, int]:
        return self.start, self.start + self.length


def max_exponent(w: str, max_period: int | None = None) -> Repetition:
    """Largest exponent |f|/period(f) over factors f of ``w``.

    With ``max_period`` only periods up to that bound are considered.  Words
    with no repetition at all report exponent 1.
    """
    w = as_word(w)
    if len(w) < 2:
        return Repetition(Fraction(1), 0, len(w), max(len(w), 1))
    arr = to_array(w)
    length, period = _kernel.max_exponent_scan(arr, 0 if max_period is None else max_period)
    length, period = int(length), int(period)
    if length == 1:
        return Repetition(Fraction(1), 0, 1, 1)
    start = int(_kernel.max_exponent_witness(arr, length, period))
    return Repetition(Fraction(length, period), start, length, period)


def is_e_free_violated(w: str, e: Exponent) -> bool:
    return e.forbids(max_exponent(w).exponent)


def is_e_free(w: str, e: Exponent) -> bool:
    return not is_e_free_violated(as_word(w), e)


def is_d_directed(w: str, d: int) -> bool:
    """No length-``d`` factor occurs together with its reverse."""
    if d < 1:
        raise ValueError("d must be positive")
    fs = factors(w, d)
    return not any(f[::-1] in fs for f in fs)


def minimal_absent_words(w: str, l: int, reduced_universe: bool | None = None, alphabet_size: int = 4) -> frozenset[str]:
    """D_l(w): absent words of length ``l`` whose proper prefixes and suffixes occur.

    ``reduced_universe`` restricts candidates to reduced words; it defaults to
    True over the four-letter alphabet.
    """
    w = as_word(w, alphabet_size)
    if reduced_universe is None:
        reduced_universe = alphabet_size == 4
    if l == 1:
        return frozenset(str(a) for a in range(alphabet_size) if str(a) not in w)
    shorter = factors(w, l - 1)
    present = factors(w, l)
    if reduced_universe:
        candidates = reduced_words(l)
    else:
        candidates = ("".join(t) for t in product("0123"[:alphabet_size], repeat=l))
    return frozenset(v for v in candidates if v not in present and v[:-1] in shorter and v[1:] in shorter)


def absent_reduced(w: str, l: int) -> frozenset[str]:
    """Reduced words of length ``l`` that are not factors of ``w``."""
    present = factors(w, l)
    return frozenset(v for v in reduced_words(l) if v not in present)


def right_special_factors(w: str, l: int) -> frozenset[str]:
    succ: dict[str, set[str]] = {}
    for i in range(len(w) - l):
        succ.setdefault(w[i : i + l], set()).add(w[i + l])
    return frozenset(v for v, s in succ.items() if len(s) >= 2)


def bar(w: str) -> str:
    """Insert 3 inside every occurrence of 02 and 20 of a ternary word."""
    w = as_word(w, 3)
    out = []
    for i, a in enumerate(w):
        if i and {w[i - 1], a} == {"0", "2"}:
            out.append("3")
        out.append(a)
    return "".join(out)


def letter_frequency(w: str, a: int | str) -> Fraction:
    if not w:
        raise ValueError("frequency of a letter in the empty word")
    return Fraction(w.count(str(a)), len(w))
