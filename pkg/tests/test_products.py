"""Pochhammer/theta layer: symbols, oracle cross-checks, classical identities."""

import random
from fractions import Fraction

import pytest

from qident.series import (
    Monomial,
    QSeries,
    coefficient,
    equal_up_to,
    invert_unit,
    qmono,
)
from qident.products import (
    J,
    NP,
    P,
    TP,
    ProductExpr,
    eval_product,
    eval_product_sum,
    inv_poch_table,
    poch_finite,
    poch_infinite,
    poch_table,
    theta_triple,
    triple_product_oracle,
)

from helpers import count_partitions, series_coeffs


def S(pairs, order=None, den=4):
    return QSeries.from_terms(pairs, den=den, order=order)


Q = qmono(1)


def test_poch_finite_basic():
    assert poch_finite(Q, 1, 0) == QSeries.one()
    assert poch_finite(Q, 1, 3) == S(
        [(0, 1), (1, -1), (2, -1), (4, 1), (5, 1), (6, -1)])


def test_poch_finite_negative_index():
    inv = poch_finite(qmono(3), 1, -2, order=8)
    direct = invert_unit(poch_finite(Q, 1, 2), 8)
    assert inv == direct
    prod = inv * poch_finite(Q, 1, 2)
    assert equal_up_to(prod, QSeries.one(), 8)
    with pytest.raises(ValueError):
        poch_finite(Q, 1, -3, order=8)  # (1 - q*q^-1) factor vanishes


def test_poch_shift_rule():
    rng = random.Random(4)
    for n in range(-10, 11):
        a = Monomial(rng.choice([1, -1, 2]),
                     Fraction(2 * rng.randint(0, 2) + 1, 2))
        lhs = poch_finite(a, 1, n + 1, order=40)
        rhs = poch_finite(a, 1, n, order=40) * \
            (QSeries.one() - QSeries.from_terms([(a.exp + n, a.coeff)]))
        assert equal_up_to(lhs, rhs, 10)


def test_poch_negative_composes():
    for m in (1, 2, 3):
        a = qmono(Fraction(5, 2))
        left = poch_finite(a, 1, -m, order=10)
        right = poch_finite(Monomial(a.coeff, a.exp - m), 1, m)
        assert equal_up_to(left * right, QSeries.one(), 8)


def test_poch_infinite_pentagonal():
    s = poch_infinite(Q, 1, 12)
    assert s == S([(0, 1), (1, -1), (2, -1), (5, 1), (7, 1), (12, -1)], 12)
    assert poch_infinite(qmono(5), 1, 4) == S([(0, 1)], 4)


def test_poch_infinite_half_exponents():
    s = poch_infinite(Monomial(-1, Fraction(1, 2)), 1, 2)
    # (1+q^(1/2))(1+q^(3/2)) to order 2; later factors start above q^2
    assert s == S([(0, 1), (Fraction(1, 2), 1), (Fraction(3, 2), 1), (2, 1)], 2)


def test_triple_product_oracle_matches_products():
    # degenerate z=q case: (q,q,1;q)_inf = 0 on both routes
    z = triple_product_oracle(Q, 1, 30)
    prod = poch_infinite(Q, 1, 30) ** 1 if False else \
        poch_infinite(Q, 1, 30) * poch_infinite(Q, 1, 30) * \
        poch_infinite(qmono(0), 1, 30)
    assert z.is_zero and prod.is_zero

    assert equal_up_to(triple_product_oracle(qmono(5), 11, 40),
                       theta_triple(5, 11, 40), 40)

    half = triple_product_oracle(qmono(Fraction(1, 2)), Fraction(3, 2), 30)
    prod = poch_infinite(qmono(Fraction(3, 2)), Fraction(3, 2), 30) * \
        poch_infinite(qmono(Fraction(1, 2)), Fraction(3, 2), 30) * \
        poch_infinite(qmono(1), Fraction(3, 2), 30)
    assert equal_up_to(half, prod, 30)


def test_theta_triple_random_against_oracle():
    rng = random.Random(11)
    for _ in range(20):
        m = rng.randint(2, 14)
        a = rng.randint(1, m - 1)
        assert equal_up_to(theta_triple(a, m, 40),
                           triple_product_oracle(qmono(a), m, 40), 40)


def test_theta_triple_symmetry():
    for (a, m) in [(2, 4), (1, 5), (3, 7)]:
        assert theta_triple(a, m, 30) == theta_triple(m - a, m, 30)
    with pytest.raises(ValueError):
        theta_triple(5, 5, 10)


def test_euler_identities():
    # sum z^n/(q;q)_n = 1/(z;q)_inf and sum q^C(n,2) z^n/(q;q)_n = (-z;q)_inf
    order = 40
    for ze in (1, 2, Fraction(1, 2)):
        z = qmono(ze)
        n_max = int(order / ze) + 1
        invq = inv_poch_table(Q, 1, n_max, order)
        first = QSeries(4, {}, 160)
        second = QSeries(4, {}, 160)
        for n in range(n_max + 1):
            zn = QSeries.from_terms([(ze * n, 1)])
            first = first + zn * invq[n]
            second = second + zn * invq[n] * \
                QSeries.from_terms([(Fraction(n * (n - 1), 2), 1)])
        assert equal_up_to(first,
                           invert_unit(poch_infinite(z, 1, order), order),
                           order)
        assert equal_up_to(second,
                           poch_infinite(Monomial(-1, ze), 1, order), order)


def test_merge_lemma_consequence():
    # sum_{i+2j=n} q^(i(i-1)/2) / ((q;q)_i (q^2;q^2)_j) = 1/(q;q)_n for n <= 50
    order = 50
    invq = inv_poch_table(Q, 1, 50, order)
    invq2 = inv_poch_table(qmono(2), 2, 25, order)
    for n in range(51):
        acc = QSeries(4, {}, 200)
        for i in range(n % 2, n + 1, 2):
            j = (n - i) // 2
            gauss = QSeries.from_terms([(Fraction(i * (i - 1), 2), 1)])
            acc = acc + gauss * invq[i] * invq2[j]
        assert equal_up_to(acc, invq[n], order), f"n={n}"


def test_square_lemma_consequence():
    # sum_{i+j=n} q^(i^2+j^2-i)/((q^2;q^2)_i (q^2;q^2)_j)
    #   = q^((n^2-n)/2)/(q;q)_n for n <= 50
    order = 50
    invq = inv_poch_table(Q, 1, 50, order)
    invq2 = inv_poch_table(qmono(2), 2, 50, order)
    for n in range(51):
        acc = QSeries(4, {}, 200)
        for i in range(n + 1):
            j = n - i
            acc = acc + QSeries.from_terms([(i * i + j * j - i, 1)]) * \
                invq2[i] * invq2[j]
        want = invq[n] * QSeries.from_terms([(Fraction(n * n - n, 2), 1)])
        assert equal_up_to(acc, want, order), f"n={n}"


def test_eval_product_trivial_and_rr():
    assert eval_product(ProductExpr(), 10) == S([(0, 1)], 10)
    rr1 = ProductExpr() / (P(1, 5) * P(4, 5))
    s = eval_product(rr1, 12)
    for n in range(13):
        assert coefficient(s, n) == count_partitions(n, [p for p in range(1, 13)
                                                         if p % 5 in (1, 4)])
    assert series_coeffs(s, 6) == [1, 1, 1, 1, 2, 2, 3]


def test_eval_product_prefactor_and_sum():
    expr = (2 * TP(3, 5, 8, 8)) / P(1, 1)
    s = eval_product(expr, 10)
    assert coefficient(s, 0) == 2
    two_terms = eval_product_sum([P(1, 2), P(3, 4)], 8)
    assert equal_up_to(two_terms,
                       eval_product(P(1, 2), 8) + eval_product(P(3, 4), 8), 8)


def test_J_helpers():
    assert eval_product(J(14), 30) == poch_infinite(qmono(14), 14, 30)
    assert eval_product(J(2, 28), 40) == theta_triple(2, 28, 40)
    quotient = J(14) * J(28) ** 2 * J(2, 28) / (J(1, 28) * J(4, 28))
    assert coefficient(eval_product(quotient, 20), 0) == 1


def test_NP_factor():
    s = eval_product(NP(1, 2), 9)
    # (-q;q^2)_inf counts partitions into distinct odd parts
    table = [0] * 10
    table[0] = 1
    for part in (1, 3, 5, 7, 9):
        for m in range(9, part - 1, -1):
            table[m] += table[m - part]
    for n in range(10):
        assert coefficient(s, n) == table[n]


def test_poch_table_matches_finite():
    tab = poch_table(Monomial(-1, Fraction(1, 2)), 1, 6)
    for n in range(7):
        assert tab[n] == poch_finite(Monomial(-1, Fraction(1, 2)), 1, n)
