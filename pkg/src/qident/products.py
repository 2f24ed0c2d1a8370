"""Pochhammer symbols, theta triples and product expressions.

Finite symbols (a; q^base)_n are exact Laurent polynomials (negative n turns
into an inversion).  Infinite symbols are truncated soundly: a factor
(1 - a q^(base*k)) is included iff its lowest nontrivial exponent is <= the
requested order, every omitted factor being 1 + O(q^(>order)).

:class:`ProductExpr` is the assembled right-hand-side shape: an optional
polynomial prefactor times a signed multiset of infinite products.  The
bilateral theta sum :func:`triple_product_oracle` gives an independent route
to the same values and is cross-checked against the product form in the
test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from qident.series import (
    DEFAULT_D,
    ExpLike,
    Monomial,
    QSeries,
    Scalar,
    exp_num,
    invert_unit,
    mul_inv_one_minus,
)


def poch_finite(a: Monomial, base: ExpLike, n: int,
                order: Optional[ExpLike] = None,
                den: int = DEFAULT_D) -> QSeries:
    """(a; q^base)_n for any integer n.

    n >= 0 gives the exact polynomial prod_{k<n} (1 - a q^(base*k)); n < 0
    inverts the complementary product, which requires an explicit order.
    """
    base = Fraction(base)
    if n >= 0:
        onum = None if order is None else exp_num(order, den)
        out = QSeries.one(den)
        for k in range(n):
            f = Monomial(a.coeff, a.exp + base * k)
            out = out - out * f
            if onum is not None and (out.order_num is None
                                     or out.order_num > onum):
                out = out.truncated(Fraction(order))
        return out
    # (a;q)_{-m} = 1 / prod_{k<m} (1 - a q^(base*(n+k)))
    for k in range(-n):
        if a.coeff == 1 and a.exp + base * (n + k) == 0:
            raise ValueError("vanishing factor in negative-index Pochhammer")
    if order is None:
        raise ValueError("negative-index Pochhammer needs a truncation order")
    down = poch_finite(Monomial(a.coeff, a.exp + base * n), base, -n, den=den)
    return invert_unit(down, order)


def poch_infinite(a: Monomial, base: ExpLike, order: ExpLike,
                  den: int = DEFAULT_D) -> QSeries:
    """(a; q^base)_infinity truncated at order."""
    base = Fraction(base)
    if base <= 0:
        raise ValueError("infinite product needs a positive base")
    onum = exp_num(order, den)
    out = QSeries(den, {0: 1}, onum)
    k = 0
    while exp_num(a.exp + base * k, den) <= onum:
        f = Monomial(a.coeff, a.exp + base * k)
        out = out - out * f
        k += 1
    return out


def triple_product_oracle(z: Monomial, base: ExpLike, order: ExpLike,
                          den: int = DEFAULT_D) -> QSeries:
    """Bilateral theta sum sum_n (-1)^n q^(base*C(n,2)) z^n, truncated.

    Equals (q^base, z, q^base/z; q^base)_infinity and is computed without
    reference to any product code, so it can serve as an oracle for it.
    """
    base = Fraction(base)
    if base <= 0:
        raise ValueError("oracle needs a positive base")
    onum = exp_num(order, den)
    terms: dict[int, Scalar] = {}

    def put(n: int) -> bool:
        e = base * Fraction(n * (n - 1), 2) + z.exp * n
        num = exp_num(e, den)
        if num > onum:
            return False
        c = Fraction(z.coeff) ** n if n >= 0 else Fraction(1) / \
            (Fraction(z.coeff) ** (-n))
        if n % 2:
            c = -c
        prev = Fraction(terms.get(num, 0)) + c
        if prev == 0:
            terms.pop(num, None)
        else:
            terms[num] = prev.numerator if prev.denominator == 1 else prev
        return True

    n = 0
    while put(n):
        n += 1
    n = -1
    while put(n):
        n -= 1
    return QSeries(den, terms, onum)


def theta_triple(a: ExpLike, m: ExpLike, order: ExpLike,
                 den: int = DEFAULT_D) -> QSeries:
    """(q^a, q^(m-a), q^m; q^m)_infinity truncated at order."""
    a, m = Fraction(a), Fraction(m)
    if not 0 < a < m:
        raise ValueError(f"theta triple needs 0 < a < m, got a={a}, m={m}")
    out = poch_infinite(Monomial(1, a), m, order, den)
    out = out * poch_infinite(Monomial(1, m - a), m, order, den)
    return out * poch_infinite(Monomial(1, m), m, order, den)


# -- product expressions -----------------------------------------------------

@dataclass(frozen=True)
class ProductExpr:
    """prefactor(q) * prod (arg; q^base)_infinity^power.

    The prefactor is a polynomial stored as a tuple of monomials; factors
    with negative power sit in the denominator and must be unit series.
    """

    factors: tuple[tuple[Monomial, Fraction, int], ...] = ()
    prefactor: tuple[Monomial, ...] = (Monomial(1, 0),)

    def __mul__(self, other: Union["ProductExpr", int, Monomial]) -> "ProductExpr":
        other = _as_product(other)
        pf = tuple(a * b for a in self.prefactor for b in other.prefactor)
        return ProductExpr(_merge(self.factors + other.factors), _poly_norm(pf))

    __rmul__ = __mul__

    def __truediv__(self, other: Union["ProductExpr", int, Monomial]) -> "ProductExpr":
        other = _as_product(other)
        if other.prefactor != (Monomial(1, 0),):
            raise ValueError("can only divide by a pure product")
        inv = tuple((m, b, -p) for (m, b, p) in other.factors)
        return ProductExpr(_merge(self.factors + inv), self.prefactor)

    def __pow__(self, k: int) -> "ProductExpr":
        if self.prefactor != (Monomial(1, 0),):
            raise ValueError("can only power a pure product")
        return ProductExpr(_merge(tuple(
            (m, b, p * k) for (m, b, p) in self.factors)))


def _as_product(x) -> ProductExpr:
    if isinstance(x, ProductExpr):
        return x
    if isinstance(x, int):
        return ProductExpr((), (Monomial(x, 0),))
    if isinstance(x, Monomial):
        return ProductExpr((), (x,))
    raise TypeError(f"cannot use {x!r} in a product expression")


def _poly_norm(monos: tuple[Monomial, ...]) -> tuple[Monomial, ...]:
    acc: dict[Fraction, Scalar] = {}
    for m in monos:
        acc[m.exp] = acc.get(m.exp, 0) + m.coeff
    out = tuple(Monomial(c, e) for e, c in sorted(acc.items()) if c != 0)
    if not out:
        raise ValueError("zero prefactor")
    return out


def _merge(factors):
    acc: dict[tuple[Scalar, Fraction, Fraction], int] = {}
    order = []
    for (m, b, p) in factors:
        key = (m.coeff, m.exp, Fraction(b))
        if key not in acc:
            order.append(key)
            acc[key] = 0
        acc[key] += p
    return tuple((Monomial(k[0], k[1]), k[2], acc[k])
                 for k in order if acc[k] != 0)


def P(a: ExpLike, m: ExpLike) -> ProductExpr:
    """(q^a; q^m)_infinity."""
    return ProductExpr(((Monomial(1, a), Fraction(m), 1),))


def NP(a: ExpLike, m: ExpLike) -> ProductExpr:
    """(-q^a; q^m)_infinity."""
    return ProductExpr(((Monomial(-1, a), Fraction(m), 1),))


def TP(x: ExpLike, y: ExpLike, z: ExpLike, m: ExpLike) -> ProductExpr:
    """(q^x, q^y, q^z; q^m)_infinity."""
    return P(x, m) * P(y, m) * P(z, m)


def J(a: ExpLike, m: Optional[ExpLike] = None) -> ProductExpr:
    """J(m) = (q^m;q^m)_inf; J(a, m) = (q^a, q^(m-a), q^m; q^m)_inf."""
    if m is None:
        return P(a, a)
    a, m = Fraction(a), Fraction(m)
    if not 0 < a < m:
        raise ValueError(f"need 0 < a < m, got a={a}, m={m}")
    return TP(a, m - a, m, m)


def eval_product(expr: ProductExpr, order: ExpLike,
                 den: int = DEFAULT_D) -> QSeries:
    """Evaluate a product expression exactly to the given order."""
    out = QSeries(den, {0: 1}, exp_num(order, den))
    for (m, base, power) in expr.factors:
        s = poch_infinite(m, base, order, den)
        if power < 0:
            s = invert_unit(s, order)
        for _ in range(abs(power)):
            out = out * s
    pf = QSeries.from_terms(((mo.exp, mo.coeff) for mo in expr.prefactor),
                            den=den)
    return out * pf


def eval_product_sum(exprs, order: ExpLike, den: int = DEFAULT_D) -> QSeries:
    """Sum of product expressions (multi-term right-hand sides)."""
    out = QSeries(den, {}, exp_num(order, den))
    for e in exprs:
        out = out + eval_product(e, order, den)
    return out


# -- shared Pochhammer tables ------------------------------------------------

def inv_poch_table(arg: Monomial, base: ExpLike, n_max: int, order: ExpLike,
                   den: int = DEFAULT_D) -> list[QSeries]:
    """[1/(arg; q^base)_n for n in 0..n_max], each truncated at order.

    Built incrementally: entry n is entry n-1 divided by the single factor
    (1 - arg q^(base*(n-1))), which keeps the whole table at O(n_max * order)
    coefficient operations.
    """
    base = Fraction(base)
    out = [QSeries(den, {0: 1}, exp_num(order, den))]
    for n in range(1, n_max + 1):
        f = Monomial(arg.coeff, arg.exp + base * (n - 1))
        prev = out[-1]
        if f.exp > 0:
            out.append(mul_inv_one_minus(prev, f, order))
        elif f.exp == 0:
            if f.coeff == 1:
                raise ValueError("vanishing Pochhammer factor")
            out.append(prev.scale(Fraction(1, 1) / (1 - Fraction(f.coeff))))
        else:
            out.append(prev * invert_unit(
                QSeries.from_terms([(0, 1), (f.exp, -f.coeff)], den=den),
                Fraction(order) - min(f.exp, 0) * 2))
    return [s.truncated(Fraction(order)) for s in out]


def poch_table(arg: Monomial, base: ExpLike, n_max: int,
               order: Optional[ExpLike] = None,
               den: int = DEFAULT_D) -> list[QSeries]:
    """[(arg; q^base)_n for n in 0..n_max] as exact polynomials."""
    base = Fraction(base)
    out = [QSeries.one(den)]
    for n in range(1, n_max + 1):
        f = Monomial(arg.coeff, arg.exp + base * (n - 1))
        nxt = out[-1] - out[-1] * f
        if order is not None and nxt.order_num is None:
            hi = exp_num(order, den)
            if any(e > hi for e in nxt.terms):
                nxt = nxt.truncated(Fraction(order))
        out.append(nxt)
    return out
