"""Moment formulas against quadrature and closed forms; tail certificates."""
import math

import mpmath
import pytest
from gmpy2 import mpq

from bergman.moments import monomial_moment, radial_moment, tail_check


def test_unit_mass_dim1():
    assert monomial_moment((0,), (0,), 1, 5).value(5) == mpq(1, 5)


def test_offdiagonal_vanishes():
    assert monomial_moment((1, 0), (0, 1), 2).coefficient == 0


def test_diagonal_value_dim2():
    mom = monomial_moment((2, 1), (2, 1), 2, 2)
    assert mom.value(2) == mpq(2, 2**5)
    assert mom.value(2) == mpq(1, 16)


def test_radial_basic():
    assert radial_moment((1,), 1, 1, 1).value(1) == 2


def test_radial_q_zero_reduces_to_monomial():
    for n in (1, 2, 3):
        degrees = range(0, 7)
        for d in degrees:
            for p in _exponents(n, d):
                assert radial_moment(p, 0, n) == monomial_moment(p, p, n)


def _exponents(n, d):
    if n == 1:
        return [(d,)]
    out = []
    for first in range(d + 1):
        for rest in _exponents(n - 1, d - first):
            out.append((first,) + rest)
    return out


def test_radial_dim2_example():
    assert radial_moment((0, 0), 1, 2, 3).value(3) == mpq(2, 27)


def test_normalization_anchor():
    for n in (1, 2, 3):
        mom = monomial_moment((0,) * n, (0,) * n, n)
        assert mom.coefficient == 1 and mom.m_exponent == -n


def test_moments_decrease_in_m():
    mom = radial_moment((2, 1), 2, 2)
    values = [mom.value(m) for m in (1, 2, 5, 17)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert all(v > 0 for v in values)


def test_moment_against_mpmath_quadrature_dim1():
    # independent check of the closed form via radial quadrature
    for p in (0, 1, 3):
        for m in (1, 4):
            val = float(radial_moment((p,), 0, 1).value(m))
            quad = mpmath.quad(lambda u: u**p * mpmath.e ** (-m * u), [0, mpmath.inf])
            assert abs(val - float(quad)) < 1e-12


def test_invalid_inputs():
    with pytest.raises(ValueError):
        monomial_moment((1,), (1,), 1, 0)
    with pytest.raises(ValueError):
        radial_moment((1,), -1, 1)
    with pytest.raises(ValueError):
        monomial_moment((-1,), (1,), 1)


# -- tail certificates ---------------------------------------------------------

def test_tail_exact_value_small_p():
    # closed form: tail mass for P=0, n=1 is e^{-(log m)^2}
    cert = tail_check((0,), 1, 100, 0.5)
    exact = math.exp(-math.log(100) ** 2) / 100
    assert cert.quad_tail == pytest.approx(exact, rel=1e-10)
    assert cert.passed


def test_tail_quadrature_matches_incomplete_gamma():
    for p in (0, 2, 4):
        for m in (100, 1000):
            cert = tail_check((p,), 1, m, 0.5)
            a2 = math.log(m) ** 2
            exact = float(mpmath.gammainc(p + 1, a2)) * m ** (-(1 + p))
            assert cert.quad_tail == pytest.approx(exact, rel=1e-9)


def test_tail_bound_dominates_quadrature():
    for m in (10, 100, 1000, 10000):
        pmax = math.floor(0.5 * math.log(m) ** 2)
        for p in range(0, min(pmax, 4) + 1):
            cert = tail_check((p,), 1, m, 0.5)
            assert cert.quad_tail <= cert.bound
            assert cert.passed


def test_eps2_tends_to_zero_as_eps1_to_one():
    eps2s = [tail_check((0,), 1, 1000, e).eps2 for e in (0.5, 0.9, 0.99, 0.999)]
    assert all(a > b for a, b in zip(eps2s, eps2s[1:]))
    assert eps2s[-1] < 1e-5


def test_tail_hypothesis_enforced():
    with pytest.raises(ValueError):
        tail_check((40,), 1, 100, 0.5)
