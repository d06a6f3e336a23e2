"""Exact Gaussian-rational scalars used as coefficients throughout the package."""
from __future__ import annotations

from fractions import Fraction

import gmpy2
from gmpy2 import mpq


def _to_mpq(x) -> mpq:
    if isinstance(x, float):
        raise TypeError("float coefficients are not exact; pass int, str or mpq")
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


class QQi:
    """A complex number with exact rational real and imaginary parts.

    Immutable by convention; all arithmetic returns new instances.  Floats are
    rejected at construction so exactness cannot silently leak away.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _to_mpq(re))
        object.__setattr__(self, "im", _to_mpq(im))

    def __setattr__(self, name, value):
        raise AttributeError("QQi is immutable")

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        other = as_qqi(other)
        return QQi(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = as_qqi(other)
        return QQi(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return as_qqi(other) - self

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __mul__(self, other):
        other = as_qqi(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        return QQi(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_qqi(other)
        c, d = other.re, other.im
        den = c * c + d * d
        if den == 0:
            raise ZeroDivisionError("division by zero QQi")
        a, b = self.re, self.im
        return QQi((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        return as_qqi(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers")
        if k < 0:
            return QQi(1) / self ** (-k)
        out = QQi(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conj(self) -> "QQi":
        return QQi(self.re, -self.im)

    # -- predicates & conversions ----------------------------------------

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def __eq__(self, other):
        if isinstance(other, (int, mpq, Fraction, QQi)):
            other = as_qqi(other)
            return self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return not self.is_zero()

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"QQi({self.re})"
        return f"QQi({self.re}, {self.im})"

    def as_strings(self) -> tuple[str, str]:
        """Serialize as a (real, imag) pair of 'p/q' strings."""
        return (str(self.re), str(self.im))


QQI_ZERO = QQi(0)
QQI_ONE = QQi(1)


def as_qqi(x) -> QQi:
    if isinstance(x, QQi):
        return x
    return QQi(x)


def qqi_from_strings(re: str, im: str = "0") -> QQi:
    return QQi(mpq(re), mpq(im))


def rational_sqrt(q: mpq) -> mpq | None:
    """Exact square root of a nonnegative rational, or None if irrational."""
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    if not (gmpy2.is_square(num) and gmpy2.is_square(den)):
        return None
    return mpq(gmpy2.isqrt(num), gmpy2.isqrt(den))
