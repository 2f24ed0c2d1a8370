"""Brute-force combinatorial oracles shared by the test modules.

Everything here recounts coefficients from first principles (partition
enumeration, direct nested loops) so the library under test never supplies
its own expected values.
"""

from fractions import Fraction
from functools import lru_cache

from qident.series import QSeries, exp_num


def count_partitions(n, allowed_parts):
    """Partitions of n into parts drawn (with repetition) from allowed_parts."""
    parts = sorted(p for p in allowed_parts if 0 < p <= n)
    table = [1] + [0] * n
    for p in parts:
        for m in range(p, n + 1):
            table[m] += table[m - p]
    return table[n]


@lru_cache(maxsize=None)
def count_gap2(n, min_part=1):
    """Partitions of n whose parts differ pairwise by at least 2."""
    if n == 0:
        return 1
    total = 0
    for smallest in range(min_part, n + 1):
        rest = n - smallest
        if rest == 0:
            total += 1
        elif rest >= smallest + 2:
            total += count_gap2(rest, smallest + 2)
    return total


def series_coeffs(s: QSeries, upto, step=1):
    """Integer-exponent coefficients [q^0], [q^step], ... as plain numbers."""
    out = []
    e = 0
    while e <= upto:
        out.append(s.coeff_num(exp_num(e, s.den)))
        e += step
    return out


def brute_sum(order, den, ranges, term):
    """Direct nested-loop sum oracle.

    ranges: list of per-index upper bounds (inclusive); term(idx) must return
    a QSeries (or None to skip).  Deliberately naive: used to double-check the
    library's evaluators on small instances.
    """
    total = QSeries(den, {}, exp_num(order, den))
    idx = [0] * len(ranges)

    def rec(pos):
        nonlocal total
        if pos == len(ranges):
            t = term(tuple(idx))
            if t is not None:
                total = total + t
            return
        for v in range(ranges[pos] + 1):
            idx[pos] = v
            rec(pos + 1)

    rec(0)
    return total.truncated(Fraction(order))
