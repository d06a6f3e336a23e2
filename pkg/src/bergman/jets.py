"""Truncated power-series (jet) algebra in z and z-bar with exact coefficients.

A :class:`BidegreeJet` stores finitely many monomials ``z^P zbar^Q`` with
``|P|+|Q| <= order`` and Gaussian-rational coefficients.  Absent keys mean
zero.  Every binary operation demands equal truncation orders; use
:meth:`BidegreeJet.truncate` for explicit coercion.  All values are immutable
after construction, so they are safe to share between threads.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple

from .rationals import QQi, QQI_ONE, QQI_ZERO, as_qqi, rational_sqrt

Exponents = tuple[int, ...]


# ---------------------------------------------------------------------------
# multi-indices and the section order
# ---------------------------------------------------------------------------

def mi_degree(p: Exponents) -> int:
    return sum(p)


def mi_factorial(p: Exponents) -> int:
    out = 1
    for e in p:
        out *= math.factorial(e)
    return out


def mi_validate(p: Exponents, n: int) -> None:
    if len(p) != n or any(e < 0 for e in p):
        raise ValueError(f"invalid multi-index {p!r} for dimension {n}")


@lru_cache(maxsize=None)
def graded_exponents(n: int, degree: int) -> tuple[Exponents, ...]:
    """All exponent tuples of total degree ``degree``, leading entry largest first."""
    if n == 1:
        return ((degree,),)
    out = []
    for first in range(degree, -1, -1):
        for rest in graded_exponents(n - 1, degree - first):
            out.append((first,) + rest)
    return tuple(out)


class SectionIndex(NamedTuple):
    """Label (P, j) of a local monomial section z^P e_j."""

    p: Exponents
    j: int


def section_indices(n: int, r: int, max_degree: int) -> list[SectionIndex]:
    """All section indices with |P| <= max_degree, in rank order."""
    out = []
    for d in range(max_degree + 1):
        for p in graded_exponents(n, d):
            for j in range(1, r + 1):
                out.append(SectionIndex(p, j))
    return out


def section_rank(idx: SectionIndex, n: int, r: int) -> int:
    """1-based position of (P, j) in the graded section order.

    Sections are compared by total degree first, then by exponent tuple with
    the leftmost entry dominating (so (1,0) precedes (0,1)), then by bundle
    index j.  The map is a bijection onto 1..sum of block sizes.
    """
    p, j = idx
    mi_validate(p, n)
    if not 1 <= j <= r:
        raise ValueError(f"bundle index {j} outside 1..{r}")
    d = mi_degree(p)
    rank = sum(len(graded_exponents(n, k)) for k in range(d)) * r
    rank += graded_exponents(n, d).index(p) * r
    return rank + j


# ---------------------------------------------------------------------------
# raw dictionary kernels (no order checking; keys are P+Q concatenated)
# ---------------------------------------------------------------------------

def _dict_mul(a: dict, b: dict, order: int) -> dict:
    if len(a) > len(b):
        a, b = b, a
    items_b = sorted(((sum(k), k, c) for k, c in b.items()))
    out: dict = {}
    get = out.get
    for ka, ca in a.items():
        da = sum(ka)
        limit = order - da
        for db, kb, cb in items_b:
            if db > limit:
                break
            k = tuple(x + y for x, y in zip(ka, kb))
            prod = ca * cb
            cur = get(k)
            out[k] = prod if cur is None else cur + prod
    return {k: c for k, c in out.items() if not c.is_zero()}


def _dict_add(a: dict, b: dict, bscale=None) -> dict:
    out = dict(a)
    for k, c in b.items():
        if bscale is not None:
            c = c * bscale
        cur = out.get(k)
        s = c if cur is None else cur + c
        if s.is_zero():
            out.pop(k, None)
        else:
            out[k] = s
    return out


def _dict_truncate(a: dict, order: int) -> dict:
    return {k: c for k, c in a.items() if sum(k) <= order}


def _zero_const(n: int) -> Exponents:
    return (0,) * n


# ---------------------------------------------------------------------------
# BidegreeJet
# ---------------------------------------------------------------------------

class BidegreeJet:
    """Exact truncated power series in (z_1..z_n, zbar_1..zbar_n)."""

    __slots__ = ("n", "order", "_c")

    def __init__(self, n: int, order: int, coeffs: dict | None = None):
        if n < 1 or order < 0:
            raise ValueError("need n >= 1 and order >= 0")
        self.n = n
        self.order = order
        c = {}
        if coeffs:
            for k, v in coeffs.items():
                v = as_qqi(v)
                if sum(k) > order:
                    raise ValueError(f"key {k} exceeds truncation order {order}")
                if not v.is_zero():
                    c[k] = v
        self._c = c

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(n: int, order: int) -> "BidegreeJet":
        return BidegreeJet(n, order)

    @staticmethod
    def constant(n: int, order: int, value) -> "BidegreeJet":
        return BidegreeJet(n, order, {_zero_const(2 * n): as_qqi(value)})

    @staticmethod
    def from_terms(n: int, order: int, terms: Iterable[tuple[Exponents, Exponents, object]]) -> "BidegreeJet":
        c: dict = {}
        for p, q, v in terms:
            mi_validate(p, n)
            mi_validate(q, n)
            key = tuple(p) + tuple(q)
            c[key] = c.get(key, QQI_ZERO) + as_qqi(v)
        return BidegreeJet(n, order, c)

    @staticmethod
    def coordinate(n: int, order: int, axis: int, bar: bool = False) -> "BidegreeJet":
        if not 1 <= axis <= n:
            raise ValueError("axis outside 1..n")
        key = [0] * (2 * n)
        key[axis - 1 + (n if bar else 0)] = 1
        return BidegreeJet(n, order, {tuple(key): QQI_ONE})

    @staticmethod
    def abs_squared(n: int, order: int) -> "BidegreeJet":
        """The jet of |z|^2 = sum_i z_i zbar_i."""
        c = {}
        for i in range(n):
            key = [0] * (2 * n)
            key[i] = 1
            key[n + i] = 1
            c[tuple(key)] = QQI_ONE
        return BidegreeJet(n, order, c)

    # -- access ------------------------------------------------------------

    def coeff(self, p: Exponents, q: Exponents) -> QQi:
        return self._c.get(tuple(p) + tuple(q), QQI_ZERO)

    def terms(self) -> Iterator[tuple[Exponents, Exponents, QQi]]:
        n = self.n
        for k, c in self._c.items():
            yield k[:n], k[n:], c

    def constant_term(self) -> QQi:
        return self._c.get(_zero_const(2 * self.n), QQI_ZERO)

    def __len__(self) -> int:
        return len(self._c)

    def is_zero(self) -> bool:
        return not self._c

    def min_total_degree(self) -> int | None:
        if not self._c:
            return None
        return min(sum(k) for k in self._c)

    def _check_compat(self, other: "BidegreeJet") -> None:
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        if self.order != other.order:
            raise ValueError(
                f"truncation order mismatch: {self.order} vs {other.order}; "
                "truncate explicitly before combining"
            )

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        if isinstance(other, BidegreeJet):
            self._check_compat(other)
            return BidegreeJet(self.n, self.order, _dict_add(self._c, other._c))
        return self + BidegreeJet.constant(self.n, self.order, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, BidegreeJet):
            self._check_compat(other)
            return BidegreeJet(self.n, self.order, _dict_add(self._c, other._c, bscale=QQi(-1)))
        return self - BidegreeJet.constant(self.n, self.order, other)

    def __rsub__(self, other):
        return -(self - other)

    def __neg__(self):
        return BidegreeJet(self.n, self.order, {k: -c for k, c in self._c.items()})

    def __mul__(self, other):
        if isinstance(other, BidegreeJet):
            self._check_compat(other)
            return BidegreeJet(self.n, self.order, _dict_mul(self._c, other._c, self.order))
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, value) -> "BidegreeJet":
        v = as_qqi(value)
        if v.is_zero():
            return BidegreeJet.zero(self.n, self.order)
        return BidegreeJet(self.n, self.order, {k: c * v for k, c in self._c.items()})

    def __eq__(self, other):
        if not isinstance(other, BidegreeJet):
            return NotImplemented
        return self.n == other.n and self.order == other.order and self._c == other._c

    def __repr__(self):
        items = sorted(self._c.items(), key=lambda kv: (sum(kv[0]), kv[0]))
        body = ", ".join(f"{k}: {c!r}" for k, c in items[:8])
        if len(items) > 8:
            body += f", ... ({len(items)} terms)"
        return f"BidegreeJet(n={self.n}, order={self.order}, {{{body}}})"

    # -- calculus ------------------------------------------------------------

    def conj(self) -> "BidegreeJet":
        """Complex conjugate as a function: swap P and Q, conjugate coefficients."""
        n = self.n
        return BidegreeJet(
            self.n, self.order, {k[n:] + k[:n]: c.conj() for k, c in self._c.items()}
        )

    def truncate(self, order: int) -> "BidegreeJet":
        if order > self.order:
            raise ValueError("cannot raise truncation order")
        return BidegreeJet(self.n, order, _dict_truncate(self._c, order))

    def diff(self, kind: str, axis: int) -> "BidegreeJet":
        """Formal partial derivative; the truncation order drops by one."""
        if kind not in ("z", "zbar"):
            raise ValueError("kind must be 'z' or 'zbar'")
        if not 1 <= axis <= self.n:
            raise ValueError("axis outside 1..n")
        pos = axis - 1 + (self.n if kind == "zbar" else 0)
        out: dict = {}
        for k, c in self._c.items():
            e = k[pos]
            if e == 0:
                continue
            kk = k[:pos] + (e - 1,) + k[pos + 1:]
            out[kk] = c * e
        return BidegreeJet(self.n, max(self.order - 1, 0), out)

    def exp(self) -> "BidegreeJet":
        """Truncated exponential; requires vanishing constant term."""
        if not self.constant_term().is_zero():
            raise ValueError("exp requires f(0) = 0")
        order, n = self.order, self.n
        mindeg = self.min_total_degree()
        if mindeg is None:
            return BidegreeJet.constant(n, order, 1)
        acc = {_zero_const(2 * n): QQI_ONE}
        term = {_zero_const(2 * n): QQI_ONE}
        kmax = order // mindeg
        for k in range(1, kmax + 1):
            term = _dict_mul(term, self._c, order)
            if not term:
                break
            acc = _dict_add(acc, term, bscale=QQI_ONE / QQi(math.factorial(k)))
        return BidegreeJet(n, order, acc)

    def log(self) -> "BidegreeJet":
        """Truncated logarithm; requires constant term exactly 1."""
        if self.constant_term() != QQI_ONE:
            raise ValueError("log requires f(0) = 1")
        order, n = self.order, self.n
        g = dict(self._c)
        g.pop(_zero_const(2 * n), None)
        if not g:
            return BidegreeJet.zero(n, order)
        mindeg = min(sum(k) for k in g)
        acc: dict = {}
        term = {_zero_const(2 * n): QQI_ONE}
        kmax = order // mindeg
        for k in range(1, kmax + 1):
            term = _dict_mul(term, g, order)
            if not term:
                break
            sign = 1 if k % 2 == 1 else -1
            acc = _dict_add(acc, term, bscale=QQi(sign) / QQi(k))
        return BidegreeJet(n, order, acc)

    def inverse(self) -> "BidegreeJet":
        """Multiplicative inverse to truncation order; constant term must be nonzero."""
        c0 = self.constant_term()
        if c0.is_zero():
            raise ValueError("inverse requires f(0) != 0")
        order, n = self.order, self.n
        inv0 = QQI_ONE / c0
        # geometric series in g = 1 - f/c0
        g = {k: -(c * inv0) for k, c in self._c.items()}
        g = _dict_add(g, {_zero_const(2 * n): QQI_ONE})
        if not g:
            return BidegreeJet.constant(n, order, inv0)
        mindeg = min(sum(k) for k in g)
        acc = {_zero_const(2 * n): QQI_ONE}
        term = {_zero_const(2 * n): QQI_ONE}
        for _ in range(order // mindeg):
            term = _dict_mul(term, g, order)
            if not term:
                break
            acc = _dict_add(acc, term)
        return BidegreeJet(n, order, {k: c * inv0 for k, c in acc.items()})

    def sqrt_one_plus(self) -> "BidegreeJet":
        """Square root of 1 + f for f with f(0) = 0, via the binomial series."""
        if not self.constant_term().is_zero():
            raise ValueError("sqrt_one_plus requires f(0) = 0")
        order, n = self.order, self.n
        mindeg = self.min_total_degree()
        if mindeg is None:
            return BidegreeJet.constant(n, order, 1)
        acc = {_zero_const(2 * n): QQI_ONE}
        term = {_zero_const(2 * n): QQI_ONE}
        coef = QQI_ONE
        for k in range(1, order // mindeg + 1):
            term = _dict_mul(term, self._c, order)
            if not term:
                break
            # binom(1/2, k) = binom(1/2, k-1) * (1/2 - k + 1)/k
            coef = coef * (QQi(3) / QQi(2) - QQi(k)) / QQi(k)
            acc = _dict_add(acc, term, bscale=coef)
        return BidegreeJet(n, order, acc)

    # -- structure queries ----------------------------------------------------

    def pure_holomorphic_part(self, include_constant: bool = False) -> "BidegreeJet":
        n = self.n
        zero = _zero_const(n)
        out = {}
        for k, c in self._c.items():
            if k[n:] == zero and (include_constant or k[:n] != zero):
                out[k] = c
        return BidegreeJet(n, self.order, out)

    def is_pure_holomorphic(self) -> bool:
        n = self.n
        zero = _zero_const(n)
        return all(k[n:] == zero for k in self._c)

    def hol_antihol_degrees(self, key: Exponents) -> tuple[int, int]:
        n = self.n
        return sum(key[:n]), sum(key[n:])

    def is_hermitian(self) -> bool:
        """True when the jet equals its own conjugate as a function."""
        return self == self.conj()

    # -- recentering and substitution ------------------------------------------

    def shift(self, t: tuple[QQi, ...]) -> "BidegreeJet":
        """Recentered jet f(t + w) as an exact polynomial identity in w.

        The stored polynomial is shifted; degrees do not grow, so no
        truncation is introduced by the shift itself.
        """
        n = self.n
        if len(t) != n:
            raise ValueError("base point dimension mismatch")
        t = tuple(as_qqi(v) for v in t)
        tbar = tuple(v.conj() for v in t)
        if all(v.is_zero() for v in t):
            return self
        out: dict = {}
        for k, c in self._c.items():
            self._shift_term(out, k, c, t, tbar)
        return BidegreeJet(n, self.order, {k: v for k, v in out.items() if not v.is_zero()})

    def _shift_term(self, out: dict, key: Exponents, c: QQi, t, tbar) -> None:
        n = self.n
        # expand prod_i (w_i + t_i)^{p_i} * prod_i (wbar_i + tbar_i)^{q_i}
        parts: list[list[tuple[int, QQi]]] = []
        for i in range(2 * n):
            e = key[i]
            base = t[i] if i < n else tbar[i - n]
            if e == 0:
                parts.append([(0, QQI_ONE)])
            elif base.is_zero():
                parts.append([(e, QQI_ONE)])
            else:
                row = []
                for a in range(e + 1):
                    row.append((a, QQi(math.comb(e, a)) * base ** (e - a)))
                parts.append(row)
        stack = [((), QQI_ONE)]
        for row in parts:
            stack = [(pref + (a,), w * wa) for pref, w in stack for a, wa in row]
        for kk, w in stack:
            v = c * w
            cur = out.get(kk)
            s = v if cur is None else cur + v
            if s.is_zero():
                out.pop(kk, None)
            else:
                out[kk] = s

    def eval_exact(self, t: tuple[QQi, ...]) -> QQi:
        """Exact evaluation of the stored polynomial at a rational point."""
        n = self.n
        t = tuple(as_qqi(v) for v in t)
        tbar = tuple(v.conj() for v in t)
        total = QQI_ZERO
        for k, c in self._c.items():
            val = c
            for i in range(n):
                if k[i]:
                    val = val * t[i] ** k[i]
                if k[n + i]:
                    val = val * tbar[i] ** k[n + i]
            total = total + val
        return total

    def compose_holomorphic(self, sigma: list["BidegreeJet"]) -> "BidegreeJet":
        """Substitute z_i <- sigma_i(z) and zbar_i <- conj(sigma_i).

        Each sigma_i must be a pure-holomorphic jet fixing the origin.  The
        linear part may be any invertible matrix; the nonlinear part is folded
        in through a Taylor sum, which is exact at the truncation order.
        """
        n, order = self.n, self.order
        if len(sigma) != n:
            raise ValueError("need one substitution jet per variable")
        for s in sigma:
            if s.n != n or s.order != order:
                raise ValueError("substitution jets must match dimension and order")
            if not s.is_pure_holomorphic():
                raise ValueError("substitution must be holomorphic")
            if not s.constant_term().is_zero():
                raise ValueError("substitution must fix the origin")
        # split sigma = L + h with L linear, h of minimal degree >= 2
        L = [[QQI_ZERO] * n for _ in range(n)]  # L[i][j]: coeff of z_j in sigma_i
        hs = []
        for i, s in enumerate(sigma):
            hd = {}
            for k, c in s._c.items():
                if sum(k) == 1:
                    L[i][k.index(1)] = c
                else:
                    hd[k] = c
            hs.append(hd)
        f1 = self._compose_linear(L)
        if all(not hd for hd in hs):
            return f1
        Linv = _const_matrix_inverse(L)
        u = []
        for j in range(n):
            acc: dict = {}
            for i in range(n):
                if Linv[i][j].is_zero() or not hs[i]:
                    continue
                acc = _dict_add(acc, hs[i], bscale=Linv[i][j])
            u.append(acc)
        return f1._compose_near_identity(u)

    def _compose_linear(self, L: list[list[QQi]]) -> "BidegreeJet":
        n, order = self.n, self.order
        if all(L[i][j] == (QQI_ONE if i == j else QQI_ZERO) for i in range(n) for j in range(n)):
            return self
        diagonal = all(L[i][j].is_zero() for i in range(n) for j in range(n) if i != j)
        if diagonal:
            out = {}
            for k, c in self._c.items():
                v = c
                for i in range(n):
                    if k[i]:
                        v = v * L[i][i] ** k[i]
                    if k[n + i]:
                        v = v * L[i][i].conj() ** k[n + i]
                out[k] = out.get(k, QQI_ZERO) + v
            return BidegreeJet(n, order, out)
        # general linear part: expand products of powers of linear forms
        forms = []
        for i in range(n):
            d = {}
            for j in range(n):
                if not L[i][j].is_zero():
                    key = [0] * (2 * n)
                    key[j] = 1
                    d[tuple(key)] = L[i][j]
            forms.append(d)
        pow_h: list[list[dict]] = [[{_zero_const(2 * n): QQI_ONE}] for _ in range(n)]
        acc: dict = {}
        for k, c in self._c.items():
            term = {_zero_const(2 * n): QQI_ONE}
            for i in range(n):
                for e, conjugate in ((k[i], False), (k[n + i], True)):
                    while len(pow_h[i]) <= e:
                        pow_h[i].append(_dict_mul(pow_h[i][-1], forms[i], order))
                    fac = pow_h[i][e]
                    if conjugate:
                        fac = {kk[n:] + kk[:n]: v.conj() for kk, v in fac.items()}
                    if e:
                        term = _dict_mul(term, fac, order)
            acc = _dict_add(acc, term, bscale=c)
        return BidegreeJet(n, order, acc)

    def _compose_near_identity(self, u: list[dict]) -> "BidegreeJet":
        """Compose with z_i <- z_i + u_i, u_i of minimal total degree >= 2.

        Implemented as the pointwise Taylor sum
        f(z+u, zbar+ubar) = sum_{A,B} u^A ubar^B D^{A,B} f / (A! B!).
        """
        n, order = self.n, self.order
        for d in u:
            if d and min(sum(k) for k in d) < 2:
                raise ValueError("nonlinear substitution part must have degree >= 2")
        kmax = order // 2
        result = dict(self._c)
        # enumerate (A, B) with 1 <= |A|+|B| <= kmax incrementally
        upow: dict[Exponents, dict] = {(0,) * (2 * n): {_zero_const(2 * n): QQI_ONE}}
        deriv: dict[Exponents, dict] = {(0,) * (2 * n): dict(self._c)}

        def diff_dict(d: dict, pos: int) -> dict:
            out = {}
            for k, c in d.items():
                e = k[pos]
                if e:
                    out[k[:pos] + (e - 1,) + k[pos + 1:]] = c * e
            return out

        frontier = [(0,) * (2 * n)]
        for depth in range(1, kmax + 1):
            new_frontier = []
            for ab in frontier:
                for pos in range(2 * n):
                    nb = ab[:pos] + (ab[pos] + 1,) + ab[pos + 1:]
                    if nb in upow:
                        continue
                    # reach nb from its predecessor with the smallest position
                    first = next(i for i in range(2 * n) if nb[i])
                    prev = nb[:first] + (nb[first] - 1,) + nb[first + 1:]
                    if prev not in upow:
                        continue
                    base = u[first] if first < n else {
                        k[n:] + k[:n]: c.conj() for k, c in u[first - n].items()
                    }
                    up = _dict_mul(upow[prev], base, order)
                    dv = diff_dict(deriv[prev], first)
                    upow[nb] = up
                    deriv[nb] = dv
                    new_frontier.append(nb)
                    if up and dv:
                        fact = 1
                        for e in nb:
                            fact *= math.factorial(e)
                        contrib = _dict_mul(up, dv, order)
                        result = _dict_add(result, contrib, bscale=QQI_ONE / QQi(fact))
            frontier = new_frontier
            if not frontier:
                break
        return BidegreeJet(n, order, {k: c for k, c in result.items() if not c.is_zero()})


# ---------------------------------------------------------------------------
# constant matrices over QQi
# ---------------------------------------------------------------------------

def _const_matrix_inverse(M: list[list[QQi]]) -> list[list[QQi]]:
    """Exact inverse of a square QQi matrix by Gauss-Jordan elimination."""
    m = len(M)
    a = [[as_qqi(M[i][j]) for j in range(m)] + [QQi(1) if i == j else QQI_ZERO for j in range(m)] for i in range(m)]
    for col in range(m):
        piv = next((r for r in range(col, m) if not a[r][col].is_zero()), None)
        if piv is None:
            raise ValueError("singular constant matrix")
        a[col], a[piv] = a[piv], a[col]
        inv = QQI_ONE / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(m):
            if r != col and not a[r][col].is_zero():
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[m:] for row in a]


# ---------------------------------------------------------------------------
# MatrixJet
# ---------------------------------------------------------------------------

class MatrixJet:
    """Matrix with BidegreeJet entries sharing one truncation order."""

    __slots__ = ("rows", "cols", "n", "order", "entries")

    def __init__(self, entries: list[list[BidegreeJet]]):
        if not entries or not entries[0]:
            raise ValueError("empty matrix")
        self.rows = len(entries)
        self.cols = len(entries[0])
        first = entries[0][0]
        self.n = first.n
        self.order = first.order
        for row in entries:
            if len(row) != self.cols:
                raise ValueError("ragged matrix")
            for e in row:
                if e.n != self.n or e.order != self.order:
                    raise ValueError("entries must share dimension and truncation order")
        self.entries = [list(row) for row in entries]

    @staticmethod
    def identity(size: int, n: int, order: int) -> "MatrixJet":
        return MatrixJet(
            [
                [BidegreeJet.constant(n, order, 1 if i == j else 0) for j in range(size)]
                for i in range(size)
            ]
        )

    @staticmethod
    def from_constant(M: list[list], n: int, order: int) -> "MatrixJet":
        return MatrixJet(
            [[BidegreeJet.constant(n, order, as_qqi(v)) for v in row] for row in M]
        )

    def __getitem__(self, ij: tuple[int, int]) -> BidegreeJet:
        return self.entries[ij[0]][ij[1]]

    def map(self, fn) -> "MatrixJet":
        return MatrixJet([[fn(e) for e in row] for row in self.entries])

    def truncate(self, order: int) -> "MatrixJet":
        return self.map(lambda e: e.truncate(order))

    def __add__(self, other: "MatrixJet") -> "MatrixJet":
        self._shape_check(other)
        return MatrixJet(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def __sub__(self, other: "MatrixJet") -> "MatrixJet":
        self._shape_check(other)
        return MatrixJet(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def __neg__(self) -> "MatrixJet":
        return self.map(lambda e: -e)

    def _shape_check(self, other: "MatrixJet") -> None:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("matrix shape mismatch")

    def __matmul__(self, other: "MatrixJet") -> "MatrixJet":
        if self.cols != other.rows:
            raise ValueError("matrix shape mismatch in product")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = BidegreeJet.zero(self.n, self.order)
                for k in range(self.cols):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            out.append(row)
        return MatrixJet(out)

    def scale(self, value) -> "MatrixJet":
        return self.map(lambda e: e.scale(value))

    def conj_transpose(self) -> "MatrixJet":
        return MatrixJet(
            [[self.entries[j][i].conj() for j in range(self.rows)] for i in range(self.cols)]
        )

    def constant_matrix(self) -> list[list[QQi]]:
        return [[e.constant_term() for e in row] for row in self.entries]

    def is_hermitian(self) -> bool:
        if self.rows != self.cols:
            return False
        for i in range(self.rows):
            for j in range(self.rows):
                if self.entries[i][j] != self.entries[j][i].conj():
                    return False
        return True

    def is_square(self) -> bool:
        return self.rows == self.cols

    def __eq__(self, other):
        if not isinstance(other, MatrixJet):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and all(
                a == b for r1, r2 in zip(self.entries, other.entries) for a, b in zip(r1, r2)
            )
        )

    def inverse(self) -> "MatrixJet":
        """Inverse to truncation order; the constant matrix must be invertible."""
        if not self.is_square():
            raise ValueError("inverse of a non-square matrix")
        n, order, m = self.n, self.order, self.rows
        C0inv = _const_matrix_inverse(self.constant_matrix())
        A0inv = MatrixJet.from_constant(C0inv, n, order)
        # M = M0 (I + M0^{-1} M_+): Neumann series in the positive-degree part
        N = A0inv @ self - MatrixJet.identity(m, n, order)
        mindeg = min(
            (e.min_total_degree() for row in N.entries for e in row if not e.is_zero()),
            default=None,
        )
        acc = MatrixJet.identity(m, n, order)
        if mindeg is not None:
            term = MatrixJet.identity(m, n, order)
            for _ in range(order // mindeg):
                term = -(term @ N)
                if all(e.is_zero() for row in term.entries for e in row):
                    break
                acc = acc + term
        return acc @ A0inv

    def det(self) -> BidegreeJet:
        if not self.is_square():
            raise ValueError("determinant of a non-square matrix")
        m = self.rows
        if m == 1:
            return self.entries[0][0]
        acc = BidegreeJet.zero(self.n, self.order)
        for j in range(m):
            minor = MatrixJet(
                [
                    [self.entries[i][k] for k in range(m) if k != j]
                    for i in range(1, m)
                ]
            )
            term = self.entries[0][j] * minor.det()
            acc = acc + term if j % 2 == 0 else acc - term
        return acc

    def __repr__(self):
        return f"MatrixJet({self.rows}x{self.cols}, n={self.n}, order={self.order})"


def matrix_sqrt_jet(M: MatrixJet) -> MatrixJet:
    """Hermitian square root of a Hermitian matrix jet, exact to truncation order.

    The constant term must be the identity, or a diagonal matrix of positive
    rational perfect squares, so that its exact square root exists; anything
    else is rejected.  With constant term I the result agrees with the
    binomial series of sqrt(1+x) applied to (M - I); the general case is
    solved degree by degree through the Sylvester equation
    S0 X + X S0 = R, which keeps every coefficient rational.
    """
    if not M.is_square():
        raise ValueError("matrix square root of a non-square matrix")
    if not M.is_hermitian():
        raise ValueError("matrix square root requires a Hermitian jet")
    m, n, order = M.rows, M.n, M.order
    C0 = M.constant_matrix()
    s0: list[QQi] = []
    for i in range(m):
        for j in range(m):
            if i != j and not C0[i][j].is_zero():
                raise ValueError("constant term must be diagonal (or the identity)")
        d = C0[i][i]
        if not d.is_real() or d.re <= 0:
            raise ValueError("constant term must be positive definite")
        root = rational_sqrt(d.re)
        if root is None:
            raise ValueError(
                f"diagonal constant {d.re} has no exact rational square root"
            )
        s0.append(QQi(root))
    S = MatrixJet.from_constant([[s0[i] if i == j else 0 for j in range(m)] for i in range(m)], n, order)
    for degree in range(1, order + 1):
        R = M - S @ S
        correction = []
        for i in range(m):
            row = []
            for j in range(m):
                picked = {
                    k: c for k, c in R.entries[i][j]._c.items() if sum(k) == degree
                }
                denom = s0[i] + s0[j]
                row.append(BidegreeJet(n, order, {k: c / denom for k, c in picked.items()}))
            correction.append(row)
        C = MatrixJet(correction)
        if any(not e.is_zero() for row in C.entries for e in row):
            S = S + C
    return S
