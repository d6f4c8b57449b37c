import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deanwords import morphisms
from deanwords.morphisms import (
    DecompositionError,
    Morphism,
    MorphismFormatError,
    apply,
    catalog,
    conjugate,
    crochemore_square_free_test,
    currie_test,
    dean_morphism_test,
    fixed_point_prefix,
    g_decompose,
    get,
    permuted,
    threshold_source,
    verify_image_properties,
)
from deanwords.search import SearchConstraints, enumerate_words
from deanwords.words import Exponent, factors, is_dean, is_square_free, max_exponent, symmetry_group

ternary = st.text(alphabet="012", max_size=25)


def test_parse_and_text_round_trip():
    text = "# comment\nalphabet 3 -> 4\n0 -> 01\n\n1 -> 21  # trailing\n2 -> 03\n"
    h = Morphism.parse(text)
    assert h.images == ("01", "21", "03") and h.codomain_size == 4
    assert Morphism.parse(h.to_text()) == h


@pytest.mark.parametrize(
    "text",
    [
        "",
        "0 -> 01\n",
        "alphabet 2 -> 4\n0 -> 01\n",
        "alphabet 2 -> 4\n0 -> 01\n0 -> 1\n",
        "alphabet 2 -> 2\n0 -> 01\n1 -> 3\n",
        "alphabet 2 -> 4\n0 01\n1 -> 1\n",
        "alphabet x -> 4\n",
    ],
)
def test_parse_errors(text):
    with pytest.raises(MorphismFormatError):
        Morphism.parse(text)


@given(ternary, ternary)
def test_apply_is_a_monoid_morphism(u, v):
    for h in (get("thue"), get("g"), get("hall")):
        assert apply(h, u + v) == apply(h, u) + apply(h, v)
    assert apply(get("g"), "") == ""


@settings(max_examples=20)
@given(st.integers(1, 400))
def test_fixed_point_prefixes_are_nested(n):
    h = get("dean_f")
    assert fixed_point_prefix(h, 0, n + 1).startswith(fixed_point_prefix(h, 0, n))


def test_fixed_point_needs_prolongable_letter():
    with pytest.raises(ValueError):
        fixed_point_prefix(get("g"), 0, 10)


def test_fixed_point_of_f_is_dean():
    w = fixed_point_prefix(get("dean_f"), 0, 10**5)
    assert is_dean(w)


def test_hall_thue_word():
    m = morphisms.hall_thue_prefix(5000)
    assert is_square_free(m)
    assert "010" not in m and "212" not in m
    assert factors(m, 7) == frozenset(morphisms.hall_thue_factors_7())


def test_catalog_checksums():
    sums = morphisms.presets()["checksums"]
    assert set(sums) == set(catalog())
    for name, entry in catalog().items():
        digest = hashlib.sha256("\n".join(entry.morphism.images).encode()).hexdigest()
        assert digest == sums[name], name


def test_catalog_uniform_widths():
    widths = {n: get(n).width for n in ("e136", "e358", "e46", "e100", "d72", "d564", "d40")}
    assert widths == {"e136": 136, "e358": 358, "e46": 46, "e100": 100, "d72": 72, "d564": 564, "d40": 40}
    assert [len(x) for x in get("freq").images] == [3, 115, 3, 115]


def test_get_unknown():
    with pytest.raises(KeyError):
        get("nope")


def test_criteria_on_named_morphisms():
    assert crochemore_square_free_test(get("thue"))
    assert crochemore_square_free_test(get("second_h"))
    res = crochemore_square_free_test(get("g"))
    assert not res and "010" in res.counterexample
    assert currie_test(get("g"))
    assert dean_morphism_test(get("thue_bar"))
    res = crochemore_square_free_test(get("first_h"))
    assert not res and "212" in res.counterexample
    assert currie_test(get("first_h"))


def test_criteria_need_ternary_domain():
    with pytest.raises(ValueError):
        currie_test(get("dean_f"))


def test_dean_morphism_spot_check_beyond_length_five():
    words = []
    c = SearchConstraints(require_reduced=False, alphabet_size=3)
    for n in range(1, 11):
        words += enumerate_words(c, n)
    for name in ("thue_bar", "second_h"):
        h = get(name)
        if dean_morphism_test(h):
            assert all(is_dean(apply(h, w)) for w in words), name


def test_dean_test_rejects_non_reduced_images():
    h = Morphism.of("012", "02", "1", codomain_size=4)
    res = dean_morphism_test(h)
    assert not res


def test_conjugates_and_permutations_of_g_pass_currie():
    g = get("g")
    assert currie_test(conjugate(g))
    for s in symmetry_group():
        assert currie_test(permuted(g, s))


def test_g_image_of_hall_thue_word():
    gm = apply(get("g"), morphisms.hall_thue_prefix(4000))[:10**4]
    assert is_dean(gm)
    s1 = morphisms.named_set("S1")
    assert all(t not in gm for t in s1)


def test_g_decompose_round_trip():
    g = get("g")
    c = SearchConstraints(require_reduced=False, alphabet_size=3)
    for v in enumerate_words(c, 8):
        for u in ("", "0", "30", "230"):
            w = u + apply(g, v)
            dec = g_decompose(w)
            assert (dec.prefix, dec.preimage, dec.tail) == (u, v, "")


def test_g_decompose_partial_tail_and_errors():
    dec = g_decompose(apply(get("g"), "0120") + "10")
    assert dec.preimage == "0120" and dec.tail == "10"
    with pytest.raises(DecompositionError):
        g_decompose("0101")  # contains 101 from S1
    with pytest.raises(DecompositionError) as exc:
        g_decompose("02")
    assert exc.value.position == 0


def test_threshold_sources():
    s4 = threshold_source(4, 200)
    assert len(s4) == 200 and not Exponent(7, 5, True).forbids(max_exponent(s4).exponent)
    s3 = threshold_source(3, 200)
    assert set(s3) <= set("012") and not Exponent(7, 4, True).forbids(max_exponent(s3).exponent)
    assert threshold_source(4, 200) == s4


def test_verify_image_properties_reports_failures():
    h = get("thue_bar")
    rep = verify_image_properties(h, "0120", exponent=Exponent(3, 2), avoided=["0123"], directedness=2)
    names = {c.name: c.passed for c in rep.checks}
    assert names["reduced"]
    assert not names["3/2-free"]
    assert not names["avoids 0123"]
    assert not rep.passed


def test_frequency_morphism_shape():
    rep = morphisms.frequency_morphism_check(1000)
    checks = rep["checks"]
    assert rep["image_lengths"] == [3, 115, 3, 115]
    assert checks["010_only_as_f0"] and checks["212_only_as_f2"]
    assert checks["common_prefix_1"] and checks["common_suffix_1"]
    assert checks["frequency_8_59"] and rep["frequency_of_3"] == "8/59"
    assert rep["threes_in_images"] == [0, 16, 0, 16]


def test_frequency_check_needs_long_source():
    with pytest.raises(ValueError):
        morphisms.frequency_morphism_check(100)
