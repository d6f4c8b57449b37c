"""Morphisms, fixed points, the named morphism catalog and image checks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from os.path import commonprefix

import numpy as np

from . import _kernel
from .search import DEAN, SearchConstraints, SearchBudgetExceeded, enumerate_words, longest
from .words import (
    Exponent,
    as_word,
    factors,
    is_d_directed,
    is_dean,
    is_reduced,
    is_square_free,
    letter_frequency,
    max_exponent,
    to_array,
)


class MorphismFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Morphism:
    images: tuple[str, ...]
    domain_size: int
    codomain_size: int

    def __post_init__(self):
        if len(self.images) != self.domain_size:
            raise ValueError("one image per domain letter is required")
        for img in self.images:
            if not img:
                raise ValueError("erasing morphisms are not supported")
            as_word(img, self.codomain_size)

    @classmethod
    def of(cls, *images: str, codomain_size: int | None = None) -> "Morphism":
        if codomain_size is None:
            codomain_size = max(int(ch) for img in images for ch in img) + 1
        return cls(tuple(images), len(images), codomain_size)

    @property
    def uniform(self) -> bool:
        return len({len(x) for x in self.images}) == 1

    @property
    def width(self) -> int | None:
        return len(self.images[0]) if self.uniform else None

    def __call__(self, w: str) -> str:
        return apply(self, w)

    def to_text(self) -> str:
        lines = [f"alphabet {self.domain_size} -> {self.codomain_size}"]
        lines += [f"{a} -> {img}" for a, img in enumerate(self.images)]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "Morphism":
        """Read the ``alphabet d -> c`` / ``a -> image`` text format."""
        header = None
        images: dict[int, str] = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            left, sep, right = line.partition("->")
            if not sep:
                raise MorphismFormatError(f"missing '->' in line {raw!r}")
            left, right = left.strip(), right.strip()
            if header is None:
                parts = left.split()
                if len(parts) != 2 or parts[0] != "alphabet":
                    raise MorphismFormatError("first line must be 'alphabet <d> -> <c>'")
                try:
                    header = (int(parts[1]), int(right))
                except ValueError as exc:
                    raise MorphismFormatError(str(exc)) from None
                continue
            if not left.isdigit() or not right.isdigit():
                raise MorphismFormatError(f"bad image line {raw!r}")
            a = int(left)
            if a in images:
                raise MorphismFormatError(f"letter {a} defined twice")
            images[a] = right
        if header is None:
            raise MorphismFormatError("empty morphism file")
        d, c = header
        if sorted(images) != list(range(d)):
            raise MorphismFormatError(f"expected images for letters 0..{d - 1}")
        try:
            return cls(tuple(images[a] for a in range(d)), d, c)
        except ValueError as exc:
            raise MorphismFormatError(str(exc)) from None


def apply(h: Morphism, w: str) -> str:
    w = as_word(w, h.domain_size)
    return "".join(h.images[int(a)] for a in w)


def fixed_point_prefix(h: Morphism, seed: int, n: int) -> str:
    """First ``n`` letters of the fixed point h^omega(seed)."""
    img = h.images[seed]
    if img[0] != str(seed) or len(img) < 2:
        raise ValueError(f"morphism is not prolongable on {seed}")
    w = str(seed)
    while len(w) < n:
        w = apply(h, w)
    return w[:n]


# catalog ------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    morphism: Morphism
    provenance: str


def _data(name: str):
    return resources.files("deanwords").joinpath("data", name)


@lru_cache(maxsize=None)
def catalog() -> dict[str, CatalogEntry]:
    out = {}
    for f in sorted(_data("morphisms").iterdir(), key=lambda p: p.name):
        if not f.name.endswith(".morph"):
            continue
        text = f.read_text()
        first = text.splitlines()[0]
        name, _, prov = first.lstrip("# ").partition(":")
        out[name.strip()] = CatalogEntry(name.strip(), Morphism.parse(text), prov.strip())
    return out


def get(name: str) -> Morphism:
    try:
        return catalog()[name].morphism
    except KeyError:
        raise KeyError(f"unknown catalog morphism {name!r}; known: {sorted(catalog())}") from None


@lru_cache(maxsize=None)
def presets() -> dict:
    return json.loads(_data("presets.json").read_text())


def named_set(name: str) -> frozenset[str]:
    return frozenset(presets()["sets"][name])


def hall_thue_prefix(n: int) -> str:
    """Prefix of the Hall-Thue word m, the fixed point of 0->012, 1->02, 2->1."""
    return fixed_point_prefix(get("hall"), 0, n)


def hall_thue_factors_7() -> list[str]:
    return list(presets()["hall_thue_factors_7"])


# square-freeness criteria ---------------------------------------------------


def _ternary_square_free(max_len: int) -> list[str]:
    c = SearchConstraints(require_reduced=False, alphabet_size=3)
    out = []
    for n in range(1, max_len + 1):
        out += enumerate_words(c, n)
    return out


@dataclass
class CriterionResult:
    holds: bool
    counterexample: str | None = None
    reason: str = ""

    def __bool__(self):
        return self.holds


def _check_domain(h: Morphism, size: int = 3):
    if h.domain_size != size:
        raise ValueError(f"criterion needs a morphism on {size} letters, got {h.domain_size}")


def crochemore_square_free_test(h: Morphism) -> CriterionResult:
    """h is square-free iff h(w) is square-free for square-free ternary |w| <= 5.

    On failure the shortest (then lexicographically first) violating w is
    returned.
    """
    _check_domain(h)
    for w in _ternary_square_free(5):
        if not is_square_free(apply(h, w)):
            return CriterionResult(False, w, f"h({w}) contains a square")
    return CriterionResult(True)


def currie_test(h: Morphism) -> CriterionResult:
    """h(m) is square-free iff h(v) is square-free for the 22 length-7
    factors v of the Hall-Thue word."""
    _check_domain(h)
    for v in hall_thue_factors_7():
        if not is_square_free(apply(h, v)):
            return CriterionResult(False, v, f"h({v}) contains a square")
    return CriterionResult(True)


def dean_morphism_test(h: Morphism) -> CriterionResult:
    """Square-free (by the length-5 criterion) and h(ab) reduced for a != b."""
    _check_domain(h)
    if h.codomain_size != 4:
        raise ValueError("a Dean morphism maps into the four-letter alphabet")
    res = crochemore_square_free_test(h)
    if not res:
        return res
    for a in range(3):
        for b in range(3):
            if a != b:
                ab = f"{a}{b}"
                if not is_reduced(apply(h, ab)):
                    return CriterionResult(False, ab, f"h({ab}) is not reduced")
    return CriterionResult(True)


def conjugate(h: Morphism) -> Morphism:
    """Move the common prefix u of all images to their ends (u v_a -> v_a u)."""
    u = commonprefix(list(h.images))
    if len(u) == min(len(x) for x in h.images):
        u = u[:-1]
    return Morphism(tuple(x[len(u) :] + u for x in h.images), h.domain_size, h.codomain_size)


def permuted(h: Morphism, sigma) -> Morphism:
    return Morphism(tuple(sigma(x) for x in h.images), h.domain_size, h.codomain_size)


# decomposition over g ---------------------------------------------------------


class DecompositionError(ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} (position {position})")
        self.position = position


@dataclass(frozen=True)
class Decomposition:
    prefix: str
    preimage: str
    tail: str  # proper prefix of an image left over at the end of a finite word


def g_decompose(w: str, g: Morphism | None = None) -> Decomposition:
    """Write ``w = u g(v) t`` with |u| <= 5, v ternary and t a proper prefix of
    some image of g.

    ``w`` must be reduced and avoid every triple of S1.
    """
    if g is None:
        g = get("g")
    w = as_word(w)
    if not is_reduced(w):
        raise DecompositionError("word is not reduced", 0)
    for t in sorted(named_set("S1")):
        i = w.find(t)
        if i >= 0:
            raise DecompositionError(f"word contains {t} from S1", i)
    i = w.find("1")
    if i < 0:
        # no complete block; the whole word must sit inside one image
        if any(w in img for img in g.images):
            return Decomposition(w, "", "")
        raise DecompositionError("no occurrence of 1 and not a factor of an image", 0)
    u = w[:i]
    if not any(img.endswith(u) and len(u) < len(img) for img in g.images):
        raise DecompositionError("prefix before the first 1 is not a proper suffix of an image", 0)
    pos = i
    v = []
    while pos < len(w):
        for a, img in enumerate(g.images):
            if w.startswith(img, pos):
                v.append(str(a))
                pos += len(img)
                break
        else:
            rest = w[pos:]
            if any(img.startswith(rest) for img in g.images):
                return Decomposition(u, "".join(v), rest)
            raise DecompositionError("no image of g matches", pos)
    return Decomposition(u, "".join(v), "")


# image verification -------------------------------------------------------------


def threshold_source(alphabet_size: int, n: int, exponent: Exponent | None = None) -> str:
    """Lexicographically least word of length ``n`` over ``alphabet_size``
    letters avoiding repetitions above the threshold (7/5+ on 4 letters,
    7/4+ on 3 letters unless ``exponent`` is given)."""
    if exponent is None:
        exponent = {4: Exponent(7, 5, True), 3: Exponent(7, 4, True)}[alphabet_size]
    c = SearchConstraints(require_reduced=False, exponent_bound=exponent, alphabet_size=alphabet_size)
    out = longest(c, n)
    if out.kind != "CAP_REACHED":
        raise SearchBudgetExceeded(out.node_count)
    return out.witness


@dataclass
class PropertyCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ImageReport:
    image_length: int
    checks: list[PropertyCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "image_length": self.image_length,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


def verify_image_properties(
    h: Morphism,
    source: str,
    exponent: Exponent | None = None,
    avoided=(),
    directedness: int | None = None,
    must_be_reduced: bool = True,
    source_exponent: Exponent | None = None,
) -> ImageReport:
    """Apply ``h`` to ``source`` and check the claimed image properties.

    Exponent checks are exact over the whole finite image.
    """
    checks = []
    if source_exponent is not None:
        rep = max_exponent(source)
        checks.append(
            PropertyCheck(f"source {source_exponent}-free", not source_exponent.forbids(rep.exponent), f"max exponent {rep.exponent}")
        )
    img = apply(h, source)
    report = ImageReport(len(img), checks)
    if must_be_reduced:
        bad = next((i for i in range(len(img) - 1) if (int(img[i]) + int(img[i + 1])) % 2 == 0), None)
        checks.append(PropertyCheck("reduced", bad is None, "" if bad is None else f"non-reduced pair at {bad}"))
    if exponent is not None:
        rep = max_exponent(img)
        ok = not exponent.forbids(rep.exponent)
        detail = f"max exponent {rep.exponent} (period {rep.period} at {rep.start})"
        checks.append(PropertyCheck(f"{exponent}-free", ok, detail))
    for f in sorted(avoided):
        i = img.find(f)
        checks.append(PropertyCheck(f"avoids {f}", i < 0, "" if i < 0 else f"occurs at {i}"))
    if directedness is not None:
        fs = factors(img, directedness)
        bad = next((f for f in sorted(fs) if f[::-1] in fs), None)
        checks.append(PropertyCheck(f"{directedness}-directed", bad is None, "" if bad is None else f"{bad} and its reverse occur"))
    return report


# the letter-frequency morphism ---------------------------------------------------


def _occurrences(w: str, f: str) -> list[int]:
    out, i = [], w.find(f)
    while i >= 0:
        out.append(i)
        i = w.find(f, i + 1)
    return out


def _block_starts(h: Morphism, w: str, letter: str) -> list[int]:
    out, pos = [], 0
    for a in w:
        if a == letter:
            out.append(pos)
        pos += len(h.images[int(a)])
    return out


def frequency_morphism_check(n: int = 1000, source: str | None = None, max_period: int = 500) -> dict:
    """Finite checks behind the 8/59 construction on a Dean source of length n."""
    if n < 236:
        raise ValueError("n must be at least 236")
    f = get("freq")
    if source is None:
        source = fixed_point_prefix(get("dean_f"), 0, n)
    img = apply(f, source)
    arr = to_array(img)
    length, period = _kernel.max_exponent_scan(arr, max_period)
    lengths = [len(x) for x in f.images]
    one, three = f.images[1], f.images[3]
    lcp = len(commonprefix([one, three]))
    lcs = len(commonprefix([one[::-1], three[::-1]]))
    checks = {
        "source_dean": is_dean(source),
        "image_reduced": is_reduced(img),
        "no_square_period_le_max": int(length) < 2 * int(period),
        "image_lengths": lengths == [3, 115, 3, 115],
        "010_only_as_f0": _occurrences(img, "010") == _block_starts(f, source, "0"),
        "212_only_as_f2": _occurrences(img, "212") == _block_starts(f, source, "2"),
        "common_prefix_1": lcp == 1,
        "common_suffix_1": lcs == 1,
    }
    freq = letter_frequency(img, 3)
    if n % 2 == 0:
        checks["frequency_8_59"] = freq == Fraction(8, 59)
    return {
        "n": n,
        "image_length": len(img),
        "max_period_checked": max_period,
        "image_lengths": lengths,
        "common_prefix": lcp,
        "common_suffix": lcs,
        "threes_in_images": [x.count("3") for x in f.images],
        "frequency_of_3": str(freq),
        "checks": checks,
        "passed": all(checks.values()),
    }
