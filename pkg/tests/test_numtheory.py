import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from algrand.numtheory import (
    DEFAULT_TEST_NUMBERS,
    DigitString,
    TestNumberSet,
    carmichael_up_to,
    cs_params,
    cs_predicate,
    factorize,
    is_carmichael,
    is_prime_trial,
    jacobi,
    load_carmichael,
    mulmod,
    powmod,
    ss_predicate,
    store_carmichael,
    to_base_digits,
    witness_table,
)

from fixtures import TABLE1, brute_carmichael, sig2

odd_moduli = st.integers(3, 10**20).filter(lambda n: n % 2)


def legendre(a, p):
    r = pow(a, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def jacobi_by_factoring(a, n):
    out = 1
    for p, e in factorize(n).items():
        out *= legendre(a % p, p) ** e
    return out


@given(st.integers(0, 2**70), st.integers(0, 2**70), st.integers(2, 10**20))
def test_mulmod(a, b, n):
    assert mulmod(a, b, n) == a * b % n


@given(st.integers(0, 2**70), st.integers(0, 2**70), st.integers(2, 10**20))
def test_powmod_matches_builtin(a, e, n):
    assert powmod(a, e, n) == pow(a, e, n)


def test_modulus_errors():
    with pytest.raises(ValueError):
        mulmod(1, 1, 1)
    with pytest.raises(ValueError):
        powmod(2, -1, 7)


@given(st.integers(0, 10**6), st.integers(3, 5000).filter(lambda n: n % 2))
def test_jacobi_against_factored_legendre(a, n):
    assert jacobi(a, n) == jacobi_by_factoring(a, n)


@given(st.integers(1, 10**8), odd_moduli, odd_moduli)
def test_jacobi_multiplicative_in_n(a, m, n):
    assert jacobi(a, m * n) == jacobi(a, m) * jacobi(a, n)


def test_jacobi_rejects_even():
    with pytest.raises(ValueError):
        jacobi(3, 10)


def test_predicate_examples():
    # gcd(3, 9) = 3: Jacobi 0 equals 3^4 mod 9 = 0, so 3 is a liar for 9
    assert ss_predicate(9, 3) is False
    assert ss_predicate(9, 2) is True
    assert [a for a in range(1, 9) if not ss_predicate(9, a)] == [1, 3, 6, 8]
    with pytest.raises(ValueError):
        ss_predicate(9, 9)
    with pytest.raises(ValueError):
        ss_predicate(9, 0)


def test_witness_table_agrees():
    for n in (9, 15, 561):
        table = witness_table(n)
        assert table.tolist() == [ss_predicate(n, 1 + d) for d in range(n - 1)]


@pytest.mark.parametrize("n,m,k,p", TABLE1)
def test_table1_rows(n, m, k, p):
    t = cs_params(n)
    assert (t.m_cs, t.k_digits) == (m, k)
    assert sig2(t.p_ss) == p


@pytest.mark.parametrize("n", DEFAULT_TEST_NUMBERS)
def test_k_is_minimal(n):
    t = cs_params(n)
    assert (n - 1) ** (t.k_digits + 1) >= 2**t.m_cs
    assert (n - 1) ** t.k_digits < 2**t.m_cs


def test_cs_params_errors():
    for bad in (7, 10, 10**20 + 1):
        with pytest.raises(ValueError):
            cs_params(bad)


def test_default_set():
    s = TestNumberSet.default()
    assert len(s) == 26
    assert s.ints()[0] == 9 and s.ints()[-1] == 561
    with pytest.raises(ValueError):
        TestNumberSet.from_ints([9, 11])


@given(st.integers(0, 2**40 - 1))
def test_digits_roundtrip(s):
    t = cs_params(9)
    d = to_base_digits(s, t)
    assert len(d) == t.k_digits + 1
    assert all(0 <= v < 8 for v in d.digits)
    assert d.value() == s


def test_digits_least_significant_first():
    t = cs_params(9)
    d = to_base_digits(8 * 3 + 5, t)
    assert d.digits[:3] == (5, 3, 0)
    with pytest.raises(ValueError):
        to_base_digits(2**40, t)


def test_compound_predicate():
    t = cs_params(9)
    # digit 0 -> a = 1, a liar; all-zero witness is a violation
    assert cs_predicate(t, to_base_digits(0, t)) == (True, 13)
    # first digit 1 -> a = 2, a witness: stops after one evaluation
    assert cs_predicate(t, to_base_digits(1, t)) == (False, 1)
    # liar digits 0,2,5,7 then a witness at index 3
    d = DigitString((0, 2, 5, 1) + (0,) * 10, 8)
    assert cs_predicate(t, d) == (False, 4)


def test_compound_predicate_ignores_top_digit():
    t = cs_params(9)
    d = DigitString((0,) * 13 + (1,), 8)
    assert cs_predicate(t, d)[0] is True


def test_korselt_helpers():
    assert is_carmichael(561) and is_carmichael(1105)
    assert not is_carmichael(563) and not is_carmichael(9) and not is_carmichael(562)
    assert is_prime_trial(2) and is_prime_trial(97) and not is_prime_trial(91)
    assert factorize(561) == {3: 1, 11: 1, 17: 1}


def test_carmichael_small():
    assert carmichael_up_to(10**4) == [561, 1105, 1729, 2465, 2821, 6601, 8911]
    with pytest.raises(ValueError):
        carmichael_up_to(500)


def test_carmichael_segments_agree():
    assert carmichael_up_to(200_000, segment=1000) == carmichael_up_to(200_000)


def test_carmichael_against_brute_force():
    assert carmichael_up_to(200_000) == brute_carmichael(200_000)


def test_carmichael_file_roundtrip(tmp_path):
    values = carmichael_up_to(10**5)
    p = tmp_path / "c.txt"
    store_carmichael(values, p)
    assert load_carmichael(p, validate=True) == values


@pytest.mark.parametrize(
    "text",
    ["561\n560\n", "561\n1104\n", "1105\n561\n", "abc\n", "561\n563\n"],
)
def test_carmichael_file_rejects(tmp_path, text):
    p = tmp_path / "c.txt"
    p.write_text(text)
    with pytest.raises(ValueError):
        load_carmichael(p, validate=True)


def test_carmichael_file_comments(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# list\n\n561\n1105  extra\n")
    assert load_carmichael(p) == [561, 1105]


@given(st.integers(3, 3000).filter(lambda n: n % 2 and not is_prime_trial(n)))
def test_at_least_half_witnesses(n):
    w = sum(ss_predicate(n, a) for a in range(1, n))
    assert 2 * w >= n - 1


def test_liars_form_subgroup_size():
    # Euler liars coprime to n form a subgroup of the units
    for n in (15, 25, 561):
        liars = [a for a in range(1, n) if math.gcd(a, n) == 1 and not ss_predicate(n, a)]
        phi = sum(1 for a in range(1, n) if math.gcd(a, n) == 1)
        assert phi % len(liars) == 0
