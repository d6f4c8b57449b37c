from fractions import Fraction

import numpy as np
import pytest

from deanwords import growth
from deanwords.growth import (
    Certificate,
    LambdaAutomaton,
    ResourceError,
    beta_bound,
    build_lambda,
    certify,
    dominant_pair,
    growth_condition,
    repetition_length,
    upper_bound,
    verify_certificate,
    weighted_counts,
)
from deanwords.morphisms import presets
from deanwords.words import SQUARE, Exponent, reduced_words


def has_forbidden(x, p, e):
    for per in range(1, min(p, len(x) - 1) + 1):
        run = 0
        for i in range(per, len(x)):
            run = run + 1 if x[i] == x[i - per] else 0
            if run and e.forbids(Fraction(run + per, per)):
                return True
    return False


def brute_repetitions(p, e):
    """Minimal forbidden repetitions of period <= p, by exhaustive search."""
    out = set()
    for per in range(1, p + 1):
        L = repetition_length(per, e)
        for x in reduced_words(L):
            if all(x[i] == x[i - per] for i in range(per, L)) and not has_forbidden(x[:-1], p, e) and not has_forbidden(x[1:], p, e):
                out.add(x)
    return out


def brute_states(p, e):
    return {""} | {x[:k] for x in brute_repetitions(p, e) for k in range(1, len(x))}


CASES = [(2, SQUARE), (4, SQUARE), (6, SQUARE), (4, Exponent(7, 4)), (6, Exponent(5, 3, True)), (6, Exponent(7, 4, True))]


@pytest.mark.parametrize("p,e", CASES)
def test_lambda_states_match_brute_force(p, e):
    A = build_lambda(p, e)
    assert set(A.states) == brute_states(p, e)
    assert set(growth.forbidden_repetitions(p, e)) == brute_repetitions(p, e)
    assert A.states[0] == ""
    assert A.states == sorted(A.states, key=lambda w: (len(w), w))


@pytest.mark.parametrize("p,e", CASES)
def test_transitions_are_longest_state_suffixes(p, e):
    A = build_lambda(p, e)
    states = set(A.states)
    for v in A.states:
        for a in "0123":
            va = v + a
            t = A.transition(v, a)
            legal = len(va) < 2 or (int(va[-2]) + int(a)) % 2 == 1
            legal = legal and not has_forbidden(va, p, e)
            if not legal:
                assert t is None, (v, a)
                continue
            best = max((va[k:] for k in range(len(va) + 1) if va[k:] in states), key=len)
            assert t == best, (v, a)


def test_single_letters_are_states():
    A = build_lambda(4)
    for a in "0123":
        assert A.transition("", a) == a


def test_column_sums_are_legal_extension_counts():
    A = build_lambda(6)
    cols = np.asarray(A.matrix().sum(axis=0)).ravel()
    assert cols[0] == 4
    assert (cols[1:] <= 2).all()
    assert list(cols) == list((A.goto >= 0).sum(axis=1))


def test_lambda_rejects_odd_p():
    with pytest.raises(ValueError):
        build_lambda(5)


def test_state_budget():
    with pytest.raises(ResourceError) as exc:
        build_lambda(12, max_states=10)
    assert exc.value.stats["p"] == 12


def test_run_reports_lambda_of_a_word():
    A = build_lambda(6)
    w = "0103212"
    s = A.states[A.run(w)]
    assert w.endswith(s)
    with pytest.raises(ValueError):
        A.run("0101")


def test_toy_automaton():
    one = np.zeros(1, dtype=np.int32)
    A = LambdaAutomaton(2, SQUARE, one - 1, one.astype(np.int8) - 1, one, np.array([[0, 0, -1, -1]], dtype=np.int32))
    alpha, c = dominant_pair(A)
    assert alpha == 2 and c[0] > 0


def test_alpha_matches_dense_eigenvalue_at_p4():
    A = build_lambda(4)
    lam = max(abs(np.linalg.eigvals(A.matrix().toarray().astype(float))))
    alpha, _ = dominant_pair(A)
    assert float(alpha) <= lam + 1e-12
    assert abs(float(alpha) - lam) < 1e-6
    assert float(upper_bound(4, A=A)) >= lam - 1e-12


def test_certificate_verifies_and_detects_tampering():
    A = build_lambda(8)
    cert = certify(A)
    assert verify_certificate(A, cert)
    too_big = Certificate(8, SQUARE, cert.alpha + Fraction(1, 100), cert.coefficients, cert.states)
    check = verify_certificate(A, too_big)
    assert not check and check.violating_state is not None
    zero = Certificate(8, SQUARE, cert.alpha, [Fraction(0)] + cert.coefficients[1:], cert.states)
    assert not verify_certificate(A, zero)


def test_halving_one_coefficient_is_rechecked_exactly():
    A = build_lambda(6)
    cert = certify(A)
    k = 7
    coeffs = list(cert.coefficients)
    coeffs[k] = coeffs[k] / 2
    alt = Certificate(6, SQUARE, cert.alpha, coeffs, cert.states)
    expected = all(
        cert.alpha * coeffs[v] <= sum(coeffs[t] for t in A.goto[v] if t >= 0) for v in range(A.n_states)
    )
    assert bool(verify_certificate(A, alt)) == expected


def test_certificate_text_round_trip(tmp_path):
    A = build_lambda(6)
    cert = certify(A)
    cert.beta = Fraction(11, 10)
    path = tmp_path / "c.txt"
    cert.save(path)
    back = Certificate.load(path)
    assert back.alpha == cert.alpha and back.beta == cert.beta
    assert back.coefficients == cert.coefficients and back.states == cert.states
    assert verify_certificate(A, back)
    assert path.read_text().splitlines()[0] == "p 6 exponent 2/1"


def test_certificate_parse_errors():
    with pytest.raises(ValueError):
        Certificate.parse("alpha 3/2\n")
    with pytest.raises(ValueError):
        Certificate.parse("p 4 exponent 2\nalpha 3/2\nstate 01 X 1\n")


def test_published_pair_satisfies_summation_but_not_displayed_form():
    g = presets()["growth"]
    alpha, beta = Fraction(g["alpha"]), Fraction(g["beta"])
    assert growth_condition(alpha, beta, 36)
    assert not growth_condition(alpha, beta, 36, form="displayed")
    assert beta_bound(alpha, 36) >= beta


def test_square_tail_closed_form():
    b = Fraction(3, 2)
    for p in (4, 10, 36):
        assert growth.tail_weight(b, p) == b ** (1 - p) / (b**2 - 1)


@pytest.mark.parametrize("alpha,p", [(Fraction(33075185, 22682414), 36), (Fraction(3, 2), 20), (Fraction(146, 100), 12)])
def test_beta_bound_is_tight_to_precision(alpha, p):
    beta = beta_bound(alpha, p)
    assert beta is not None and 1 < beta < alpha
    assert growth_condition(alpha, beta, p)
    assert not growth_condition(alpha, beta + Fraction(1, 10**9), p)


def test_beta_tends_to_alpha_for_large_p():
    beta = beta_bound(Fraction(2), 400)
    assert Fraction(2) - beta < Fraction(1, 10**8)


def test_beta_bound_failure_value():
    assert beta_bound(Fraction(3, 2), 4) is None
    with pytest.raises(ValueError):
        beta_bound(Fraction(1), 10)


def test_weighted_counts():
    A = build_lambda(10)
    unit = [int(wc.value) for wc in weighted_counts(A, None, 14)]
    assert unit == presets()["table1"][:14]
    beta, cert = growth.lower_bound(10)
    vals = [wc.value for wc in weighted_counts(A, cert.coefficients, 16)]
    assert vals[0] == sum(cert.coefficients[A.run(a)] for a in "0123")
    assert all(vals[i + 1] >= beta * vals[i] for i in range(len(vals) - 1))


def test_upper_bound_above_lower_bound():
    for p in (6, 10):
        A = build_lambda(p)
        alpha, _ = dominant_pair(A)
        assert upper_bound(p, A=A) >= alpha


def test_bounds_shrink_with_p():
    rhos = [upper_bound(p) for p in (4, 8, 12)]
    assert rhos == sorted(rhos, reverse=True)
    assert all(r > Fraction(14581863, 10**7) for r in rhos)


def test_generalized_exponent_certificate():
    e = Exponent(5, 3, True)
    A = build_lambda(10, e)
    cert = certify(A)
    assert verify_certificate(A, cert)
    assert 1 < cert.alpha < Fraction(14, 10)


@pytest.mark.parametrize("p", [12, 20])
def test_five_thirds_plus_bound_at_small_p(p):
    # the tail for this exponent is only summable against alpha at large p
    e = Exponent(5, 3, True)
    A = build_lambda(p, e)
    cert = certify(A)
    beta = beta_bound(cert.alpha, p, e)
    assert beta is not None and beta >= Fraction(105, 100)
