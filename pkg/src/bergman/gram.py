"""Peak-basis Gram engine: entry expansions in 1/m, block inversion, assembly.

Series here are finite sums of exact rational coefficients times half-integer
powers of m, with an explicit O(m^tail) marker; all arithmetic closes under
that truncation.  The normalized Gram deviation matrix is stored in a
sqrt(P!)-rescaled gauge (entry_stored = entry_true * sqrt(P_row!/P_col!)) so
coefficients stay rational; the gauge is a similarity transform, so matrix
products, the Neumann inverse and the assembled density at the base point are
unchanged, while Hermitian symmetry of the true matrix becomes the weighted
identity P_row! * A[j][i] == P_col! * conj(A[i][j]).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import metric_from_potential
from .jets import (
    BidegreeJet,
    Exponents,
    SectionIndex,
    mi_degree,
    mi_factorial,
    section_indices,
)
from .normal_form import NormalizedChart, verify_k_normal
from .rationals import QQi, QQI_ONE, QQI_ZERO


class PipelineError(Exception):
    """An exact internal identity failed; indicates a pipeline bug or bad input."""


# ---------------------------------------------------------------------------
# AsymptoticSeries
# ---------------------------------------------------------------------------

class AsymptoticSeries:
    """Finite series sum_e c_e m^e over half-integer e, plus an O(m^tail) bound.

    Keys of ``terms`` are 2e (integers).  ``tail2`` is 2*tail, or None for an
    exact series with no error term; stored keys always exceed tail2.
    """

    __slots__ = ("terms", "tail2")

    def __init__(self, terms: dict[int, QQi] | None = None, tail2: int | None = None):
        t = {}
        if terms:
            for e2, c in terms.items():
                if tail2 is not None and e2 <= tail2:
                    continue
                if not c.is_zero():
                    t[int(e2)] = c
        self.terms = t
        self.tail2 = tail2

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero(tail2: int | None = None) -> "AsymptoticSeries":
        return AsymptoticSeries({}, tail2)

    @staticmethod
    def from_term(coeff, e2: int, tail2: int | None = None) -> "AsymptoticSeries":
        c = coeff if isinstance(coeff, QQi) else QQi(coeff)
        return AsymptoticSeries({e2: c}, tail2)

    @staticmethod
    def one() -> "AsymptoticSeries":
        return AsymptoticSeries({0: QQI_ONE}, None)

    # -- structure ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def lead2(self) -> int | None:
        """Largest stored 2*exponent, falling back to the tail bound."""
        if self.terms:
            return max(self.terms)
        return self.tail2

    def coeff2(self, e2: int) -> QQi:
        return self.terms.get(e2, QQI_ZERO)

    def conj(self) -> "AsymptoticSeries":
        return AsymptoticSeries({k: c.conj() for k, c in self.terms.items()}, self.tail2)

    def __eq__(self, other):
        if not isinstance(other, AsymptoticSeries):
            return NotImplemented
        return self.terms == other.terms and self.tail2 == other.tail2

    def eq_known(self, other: "AsymptoticSeries") -> bool:
        """Equality of all slots above the coarser of the two tail bounds."""
        cut = _max_tail(self.tail2, other.tail2)
        keys = set(self.terms) | set(other.terms)
        for k in keys:
            if cut is not None and k <= cut:
                continue
            if self.terms.get(k, QQI_ZERO) != other.terms.get(k, QQI_ZERO):
                return False
        return True

    def __repr__(self):
        parts = []
        for e2 in sorted(self.terms, reverse=True):
            parts.append(f"({self.terms[e2]!r}) m^{e2 / 2:g}")
        body = " + ".join(parts) if parts else "0"
        if self.tail2 is not None:
            body += f" + O(m^{self.tail2 / 2:g})"
        return f"AsymptoticSeries({body})"

    # -- arithmetic -------------------------------------------------------------

    def __add__(self, other: "AsymptoticSeries") -> "AsymptoticSeries":
        tail = _max_tail(self.tail2, other.tail2)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            s = terms.get(k, QQI_ZERO) + c
            if s.is_zero():
                terms.pop(k, None)
            else:
                terms[k] = s
        return AsymptoticSeries(terms, tail)

    def __sub__(self, other: "AsymptoticSeries") -> "AsymptoticSeries":
        return self + (-other)

    def __neg__(self) -> "AsymptoticSeries":
        return AsymptoticSeries({k: -c for k, c in self.terms.items()}, self.tail2)

    def scale(self, coeff) -> "AsymptoticSeries":
        c = coeff if isinstance(coeff, QQi) else QQi(coeff)
        if c.is_zero():
            return AsymptoticSeries({}, self.tail2)
        return AsymptoticSeries({k: v * c for k, v in self.terms.items()}, self.tail2)

    def shift2(self, d2: int) -> "AsymptoticSeries":
        """Multiply by m^{d2/2}."""
        tail = None if self.tail2 is None else self.tail2 + d2
        return AsymptoticSeries({k + d2: c for k, c in self.terms.items()}, tail)

    def __mul__(self, other: "AsymptoticSeries") -> "AsymptoticSeries":
        if self.is_zero() and self.tail2 is None:
            return AsymptoticSeries({}, None)
        if other.is_zero() and other.tail2 is None:
            return AsymptoticSeries({}, None)
        tail = None
        cands = []
        if self.tail2 is not None:
            lb = other.lead2()
            cands.append(self.tail2 + (lb if lb is not None else 0))
            if other.tail2 is not None:
                cands.append(self.tail2 + other.tail2)
        if other.tail2 is not None:
            la = self.lead2()
            cands.append(other.tail2 + (la if la is not None else 0))
        if cands:
            tail = max(cands)
        terms: dict[int, QQi] = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                k = ka + kb
                if tail is not None and k <= tail:
                    continue
                s = terms.get(k, QQI_ZERO) + ca * cb
                if s.is_zero():
                    terms.pop(k, None)
                else:
                    terms[k] = s
        return AsymptoticSeries(terms, tail)

    def truncate_below2(self, tail2: int) -> "AsymptoticSeries":
        new_tail = tail2 if self.tail2 is None else max(self.tail2, tail2)
        return AsymptoticSeries(self.terms, new_tail)

    def inv_sqrt(self) -> "AsymptoticSeries":
        """Inverse square root of a series with leading term exactly 1 at m^0.

        Uses the binomial series; the error bound is inherited from the input.
        """
        if self.coeff2(0) != QQI_ONE or (self.lead2() or 0) > 0:
            raise PipelineError("inv_sqrt requires leading term 1 at exponent 0")
        w = AsymptoticSeries({k: c for k, c in self.terms.items() if k != 0}, self.tail2)
        result = AsymptoticSeries.one()
        power = AsymptoticSeries.one()
        coeff = QQI_ONE
        k = 0
        while True:
            k += 1
            power = power * w
            if power.is_zero() and power.tail2 is None:
                break
            coeff = coeff * (QQi(1) / QQi(2) - QQi(k)) / QQi(k)
            contrib = power.scale(coeff)
            result = result + contrib
            top = power.lead2()
            if top is None or (self.tail2 is not None and top <= self.tail2):
                break
            if k > 4 * (len(self.terms) + 8):
                raise PipelineError("inv_sqrt failed to terminate")
        return AsymptoticSeries(result.terms, _max_tail(result.tail2, self.tail2))

    def inverse(self) -> "AsymptoticSeries":
        """Multiplicative inverse of a series with an invertible leading term."""
        lead = self.lead2()
        if lead is None or lead not in self.terms:
            raise PipelineError("cannot invert a series without a known leading term")
        c0 = self.terms[lead]
        base = self.shift2(-lead).scale(QQI_ONE / c0)
        w = AsymptoticSeries({k: c for k, c in base.terms.items() if k != 0}, base.tail2)
        result = AsymptoticSeries.one()
        power = AsymptoticSeries.one()
        k = 0
        while True:
            k += 1
            power = power * (-w)
            if power.is_zero() and power.tail2 is None:
                break
            result = result + power
            top = power.lead2()
            if top is None or (base.tail2 is not None and top <= base.tail2):
                break
            if k > 4 * (len(self.terms) + 8):
                raise PipelineError("inverse failed to terminate")
        out = result.scale(QQI_ONE / c0).shift2(-lead)
        tail = None if base.tail2 is None else base.tail2 - lead
        return AsymptoticSeries(out.terms, _max_tail(out.tail2, tail))

    # -- evaluation ----------------------------------------------------------------

    def eval_float(self, m) -> complex:
        total = 0j
        rm = math.sqrt(float(m))
        for e2, c in self.terms.items():
            total += complex(c) * rm**e2
        return total

    def eval_exact(self, m: int) -> QQi:
        """Exact evaluation; requires every exponent to be an integer."""
        from gmpy2 import mpq

        total = QQI_ZERO
        for e2, c in self.terms.items():
            if e2 % 2:
                raise PipelineError("eval_exact on a series with half-integer slots")
            total = total + c * QQi(mpq(m) ** (e2 // 2))
        return total

    def half_slots(self) -> list[int]:
        return sorted(k for k in self.terms if k % 2)


def _max_tail(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


# ---------------------------------------------------------------------------
# block sizes
# ---------------------------------------------------------------------------

def block_sizes(n: int, r: int, s: int) -> tuple[list[int], int]:
    """Sizes delta_0..delta_{s+1} of the degree blocks and the core count k.

    delta_alpha = r * C(n-1+alpha, n-1) counts indices (P, j) with |P| = alpha;
    the tail block has delta_{s+1} = r * C(n+s, n).  The core count
    k = sum_{alpha<=s} delta_alpha obeys k <= 2 r s^n for s >= 2.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    deltas = [r * math.comb(n - 1 + a, n - 1) for a in range(s + 1)]
    deltas.append(r * math.comb(n + s, n))
    k = sum(deltas[:-1])
    if s >= 2 and k > 2 * r * s**n:
        raise AssertionError("block size sanity bound violated")
    return deltas, k


# ---------------------------------------------------------------------------
# entry expansions
# ---------------------------------------------------------------------------

def zeta_from_chart(chart: NormalizedChart) -> BidegreeJet:
    """The regular remainder log a + |z|^2 of a normalized chart.

    Up to the chart's normalization order every monomial must carry at least
    two holomorphic and two antiholomorphic powers; a violation means the
    chart was not properly normalized and raises :class:`PipelineError`.
    """
    a = chart.line_metric
    n, order = a.n, a.order
    zeta = a.log() + BidegreeJet.abs_squared(n, order)
    p = chart.order
    for key, c in zeta._c.items():
        if sum(key) > p:
            continue
        hol, anti = sum(key[:n]), sum(key[n:])
        if hol < 2 or anti < 2:
            raise PipelineError(
                f"chart is not regular: zeta contains monomial {key} with coefficient {c!r}"
            )
    return zeta


def _zeta_levels(zeta: BidegreeJet, s: int) -> list[BidegreeJet]:
    """zeta^k / k! for k = 0..s."""
    levels = [BidegreeJet.constant(zeta.n, zeta.order, 1)]
    for k in range(1, s + 1):
        levels.append((levels[-1] * zeta).scale(QQI_ONE / QQi(k)))
        if levels[-1].is_zero():
            levels.extend([levels[-1]] * (s - k))
            break
    return levels[: s + 1]


def _entry_from_levels(
    levels: list[BidegreeJet],
    weight: BidegreeJet,
    P: Exponents,
    Q: Exponents,
    n: int,
    s: int,
) -> AsymptoticSeries:
    lead2 = -2 * n - (mi_degree(P) + mi_degree(Q))
    tail2 = lead2 - 2 * s - 1
    terms: dict[int, QQi] = {}
    for k, level in enumerate(levels):
        if level.is_zero():
            continue
        integrand = level * weight
        for key, c in integrand._c.items():
            I, J = key[:n], key[n:]
            PI = tuple(p + i for p, i in zip(P, I))
            if PI != tuple(q + j for q, j in zip(Q, J)):
                continue
            e2 = 2 * (k - n - mi_degree(PI))
            if e2 <= tail2:
                continue
            add = c * QQi(mi_factorial(PI))
            cur = terms.get(e2, QQI_ZERO) + add
            if cur.is_zero():
                terms.pop(e2, None)
            else:
                terms[e2] = cur
    return AsymptoticSeries(terms, tail2)


def gram_entry_expansion(
    zeta: BidegreeJet,
    weight: BidegreeJet,
    P: Exponents,
    Q: Exponents,
    s: int,
) -> AsymptoticSeries:
    """Expansion of the inner-product integral of z^P zbar^Q against a^m.

    Expands e^{m zeta} * weight level by level, integrates each monomial by
    the exact Gaussian moments and collects the result as
    m^{-(n + (|P|+|Q|)/2)} (a0 + a1/m + ... + a_s/m^s) with the O-tail one
    half-step below the last tracked slot.  Entries whose monomial degrees
    cannot balance P - Q vanish identically.
    """
    n = zeta.n
    if weight.n != n or weight.order != zeta.order:
        raise ValueError("zeta and weight must share dimension and order")
    if zeta.order < 4 * s:
        raise ValueError(
            f"jet order {zeta.order} insufficient for depth {s}: need at least {4 * s}"
        )
    return _entry_from_levels(_zeta_levels(zeta, s), weight, tuple(P), tuple(Q), n, s)


# ---------------------------------------------------------------------------
# lambda normalizations and the block matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LambdaExpansion:
    """Expansion of the squared-norm integral of one peak section."""

    index: SectionIndex
    inverse_square: AsymptoticSeries

    def normalized(self) -> AsymptoticSeries:
        """The unit-leading series u with lambda^{-2} = (P!/m^{n+|P|}) u."""
        p = self.index.p
        n = len(p)
        lead2 = -2 * (n + mi_degree(p))
        return self.inverse_square.shift2(-lead2).scale(QQI_ONE / QQi(mi_factorial(p)))


def _chart_weights(chart: NormalizedChart) -> tuple[BidegreeJet, list[list[BidegreeJet]]]:
    """(zeta, weight matrix det(g) h_{i jbar}) truncated to a common order."""
    zeta = zeta_from_chart(chart)
    g = metric_from_potential(chart.potential)
    detg = g.det()
    order = detg.order
    zeta = zeta.truncate(order)
    H = chart.bundle_metric.truncate(order)
    r = H.rows
    weights = [[detg * H[(i, j)] for j in range(r)] for i in range(r)]
    return zeta, weights


def lambda_expansion(chart: NormalizedChart, idx: SectionIndex, s: int) -> LambdaExpansion:
    """Norm expansion of the peak section labelled by idx, to relative depth s."""
    zeta, weights = _chart_weights(chart)
    j = idx.j
    series = gram_entry_expansion(zeta, weights[j - 1][j - 1], idx.p, idx.p, s)
    n = chart.n
    lead2 = -2 * (n + mi_degree(idx.p))
    if series.coeff2(lead2) != QQi(mi_factorial(idx.p)):
        raise PipelineError(
            f"norm expansion of {idx} has leading coefficient "
            f"{series.coeff2(lead2)!r}, expected {mi_factorial(idx.p)}"
        )
    return LambdaExpansion(index=idx, inverse_square=series)


@dataclass
class GramBlockMatrix:
    """Deviation matrix A = I - F1 over the core peak basis, sqrt(P!) gauge.

    indices are in rank order; weights[i] is P_i!.  block_of[i] gives the
    degree block of index i.  Entries are AsymptoticSeries.
    """

    n: int
    r: int
    s: int
    indices: list[SectionIndex]
    weights: list[int]
    entries: list[list[AsymptoticSeries]]

    @property
    def size(self) -> int:
        return len(self.indices)

    def block_of(self, i: int) -> int:
        return mi_degree(self.indices[i].p)

    def is_weighted_hermitian(self) -> bool:
        for i in range(self.size):
            for j in range(self.size):
                lhs = self.entries[j][i].scale(QQi(self.weights[i]))
                rhs = self.entries[i][j].conj().scale(QQi(self.weights[j]))
                if not lhs.eq_known(rhs):
                    return False
        return True

    def block_norm(self, alpha: int, beta: int, m) -> float:
        """Max entry magnitude of the (alpha, beta) block at a concrete m."""
        best = 0.0
        for i in range(self.size):
            if self.block_of(i) != alpha:
                continue
            for j in range(self.size):
                if self.block_of(j) != beta:
                    continue
                best = max(best, abs(self.entries[i][j].eval_float(m)))
        return best

    def block_is_zero(self, alpha: int, beta: int) -> bool:
        return all(
            self.entries[i][j].is_zero()
            for i in range(self.size)
            if self.block_of(i) == alpha
            for j in range(self.size)
            if self.block_of(j) == beta
        )


def _matrix_of(entries: list[list[AsymptoticSeries]]) -> list[list[AsymptoticSeries]]:
    return [list(row) for row in entries]


def _series_matmul(A, B):
    size = len(A)
    out = []
    for i in range(size):
        row = []
        for j in range(size):
            acc = AsymptoticSeries.zero()
            for k in range(size):
                acc = acc + A[i][k] * B[k][j]
            row.append(acc)
        out.append(row)
    return out


def build_block_matrix(chart: NormalizedChart, s: int) -> GramBlockMatrix:
    """Normalized Gram deviation matrix over sections of degree <= s.

    Entry (i, j) is delta_ij minus the lambda-normalized inner product in the
    sqrt(P!) gauge; exact diagonal normalization makes the diagonal vanish
    identically.  The weighted Hermitian identity is verified before
    returning.
    """
    if s < 1:
        raise ValueError("depth s must be at least 1")
    n, r = chart.n, chart.rank
    zeta, weights_w = _chart_weights(chart)
    idxs = section_indices(n, r, s)
    k = len(idxs)
    levels = _zeta_levels(zeta, s)
    if zeta.order < 4 * s:
        raise ValueError(
            f"chart jet order {zeta.order} insufficient for depth {s}: need {4 * s}"
        )

    u_invsqrt = []
    for idx in idxs:
        series = _entry_from_levels(levels, weights_w[idx.j - 1][idx.j - 1], idx.p, idx.p, n, s)
        lead2 = -2 * (n + mi_degree(idx.p))
        if series.coeff2(lead2) != QQi(mi_factorial(idx.p)):
            raise PipelineError(f"norm expansion of {idx} has wrong leading term")
        u = series.shift2(-lead2).scale(QQI_ONE / QQi(mi_factorial(idx.p)))
        u_invsqrt.append(u.inv_sqrt())

    entries = []
    for a, ia in enumerate(idxs):
        row = []
        for b, ib in enumerate(idxs):
            E = _entry_from_levels(levels, weights_w[ia.j - 1][ib.j - 1], ia.p, ib.p, n, s)
            shift = 2 * n + mi_degree(ia.p) + mi_degree(ib.p)
            fhat = (
                u_invsqrt[a]
                * u_invsqrt[b]
                * E.shift2(shift).scale(QQI_ONE / QQi(mi_factorial(ib.p)))
            )
            delta = AsymptoticSeries.one() if a == b else AsymptoticSeries.zero()
            row.append(delta - fhat)
        entries.append(row)

    A = GramBlockMatrix(
        n=n,
        r=r,
        s=s,
        indices=idxs,
        weights=[mi_factorial(i.p) for i in idxs],
        entries=entries,
    )
    if not A.is_weighted_hermitian():
        raise PipelineError("Gram deviation matrix lost Hermitian symmetry")
    return A


def neumann_inverse(A: GramBlockMatrix, s: int) -> list[list[AsymptoticSeries]]:
    """Truncated geometric-series inverse of F1 = I - A, with certificate.

    Sums A^k for k = 0..s+1 and verifies (sum) (I - A) == I on every tracked
    slot, exactly; an O(1) entry in A or a failed certificate raises
    :class:`PipelineError`.
    """
    size = A.size
    for row in A.entries:
        for e in row:
            if e.terms and max(e.terms) > -2:
                raise PipelineError("deviation matrix has an O(1) entry")
    ident = [
        [AsymptoticSeries.one() if i == j else AsymptoticSeries.zero() for j in range(size)]
        for i in range(size)
    ]
    acc = _matrix_of(ident)
    power = _matrix_of(ident)
    for _ in range(s + 1):
        power = _series_matmul(power, A.entries)
        acc = [[acc[i][j] + power[i][j] for j in range(size)] for i in range(size)]
    # certificate: acc @ (I - A) agrees with I on all tracked slots
    one_minus = [
        [ident[i][j] - A.entries[i][j] for j in range(size)] for i in range(size)
    ]
    product = _series_matmul(acc, one_minus)
    for i in range(size):
        for j in range(size):
            if not product[i][j].eq_known(ident[i][j]):
                raise PipelineError(
                    f"Neumann certificate failed at entry ({i}, {j}): {product[i][j]!r}"
                )
    return acc


# ---------------------------------------------------------------------------
# assembly at the base point
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BergmanExpansion:
    """Density expansion m^n (a_0 + a_1/m + ... + a_s/m^s) at the base point."""

    n: int
    r: int
    s: int
    series: list[list[AsymptoticSeries]]
    coefficients: list[list[list[QQi]]]

    def coefficient(self, k: int) -> list[list[QQi]]:
        return self.coefficients[k]

    def eval_truncated(self, m: int) -> list[list[QQi]]:
        """Exact value of m^n sum_k a_k m^{-k} at integer m."""
        from gmpy2 import mpq

        out = []
        for i in range(self.r):
            row = []
            for j in range(self.r):
                total = QQI_ZERO
                for k in range(self.s + 1):
                    total = total + self.coefficients[k][i][j] * QQi(mpq(m) ** (self.n - k))
                row.append(total)
            out.append(row)
        return out


def assemble_bergman_expansion(chart: NormalizedChart, s: int) -> BergmanExpansion:
    """Assemble the density expansion of the kernel at the chart's base point.

    At the base point only the degree-zero sections contribute, so the (j,k)
    entry is lambda_{0,j} lambda_{0,k} times the corresponding entry of the
    inverted Gram matrix.  Enforced checks: a_0 == I exactly, no half-integer
    slots, Hermitian coefficient matrices at every order.
    """
    if chart.order < 2 * s + 10:
        raise ValueError(
            f"chart normalization order {chart.order} below the required {2 * s + 10}"
        )
    n, r = chart.n, chart.rank
    A = build_block_matrix(chart, s)
    Finv = neumann_inverse(A, s)

    zeta, weights_w = _chart_weights(chart)
    levels = _zeta_levels(zeta, s)
    u_invsqrt = []
    zero_p = (0,) * n
    for j in range(1, r + 1):
        series = _entry_from_levels(levels, weights_w[j - 1][j - 1], zero_p, zero_p, n, s)
        u = series.shift2(2 * n)
        u_invsqrt.append(u.inv_sqrt())

    series_out = []
    for j in range(r):
        row = []
        for k in range(r):
            val = (u_invsqrt[j] * u_invsqrt[k] * Finv[j][k]).shift2(2 * n)
            row.append(val)
        series_out.append(row)

    coefficients: list[list[list[QQi]]] = []
    for depth in range(s + 1):
        e2 = 2 * (n - depth)
        mat = [[series_out[j][k].coeff2(e2) for k in range(r)] for j in range(r)]
        coefficients.append(mat)

    for j in range(r):
        for k in range(r):
            if series_out[j][k].half_slots():
                raise PipelineError("assembled expansion has weight in a half-integer slot")
    a0 = coefficients[0]
    for j in range(r):
        for k in range(r):
            want = QQI_ONE if j == k else QQI_ZERO
            if a0[j][k] != want:
                raise PipelineError(f"leading coefficient a0 is not the identity: {a0!r}")
    for depth, mat in enumerate(coefficients):
        for j in range(r):
            for k in range(r):
                if mat[j][k] != mat[k][j].conj():
                    raise PipelineError(f"coefficient a{depth} is not Hermitian")

    return BergmanExpansion(n=n, r=r, s=s, series=series_out, coefficients=coefficients)


# ---------------------------------------------------------------------------
# decay audits
# ---------------------------------------------------------------------------

def fit_decay_exponent(ms, values) -> float:
    """Least-squares slope of -log(value) against log(m); inf for all-zero data."""
    import numpy as np

    pairs = [(m, v) for m, v in zip(ms, values) if v > 0.0]
    if not pairs:
        return math.inf
    if len(pairs) < 2:
        return 0.0
    xs = np.log([p[0] for p in pairs])
    ys = np.log([p[1] for p in pairs])
    slope = np.polyfit(xs, ys, 1)[0]
    return float(-slope)


@dataclass(frozen=True)
class DecayRow:
    label: str
    required: float
    fitted: float
    passed: bool


@dataclass(frozen=True)
class DecayReport:
    rows: tuple[DecayRow, ...]

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.rows)


def block_decay_audit(
    A: GramBlockMatrix, m_list, slack: float = 0.1
) -> DecayReport:
    """Fit the decay of every block norm against its required exponent.

    Blocks that vanish identically pass with an infinite fitted exponent.
    """
    rows = []
    for alpha in range(A.s + 1):
        for beta in range(A.s + 1):
            required = 1.0 + abs(alpha - beta) / 2.0
            if A.block_is_zero(alpha, beta):
                rows.append(DecayRow(f"block({alpha},{beta})", required, math.inf, True))
                continue
            values = [A.block_norm(alpha, beta, m) for m in m_list]
            fitted = fit_decay_exponent(m_list, values)
            rows.append(
                DecayRow(
                    f"block({alpha},{beta})",
                    required,
                    fitted,
                    fitted >= required - slack,
                )
            )
    return DecayReport(rows=tuple(rows))


def ruan_bound_check(
    chart: NormalizedChart, sigma: int, m_list, slack: float = 0.1
) -> DecayReport:
    """Decay audit of inner products between low and high vanishing order.

    Builds normalized entries between sections of degree alpha and degree
    alpha + sigma and fits their decay in m against the required exponent
    1 + sigma/2; identically zero entries pass trivially.
    """
    if sigma < 1:
        raise ValueError("sigma must be positive")
    s = sigma + 1
    A = build_block_matrix(chart, s)
    rows = []
    required = 1.0 + sigma / 2.0
    for i in range(A.size):
        if A.block_of(i) > 1:
            continue
        for j in range(A.size):
            if A.block_of(j) != A.block_of(i) + sigma:
                continue
            e = A.entries[i][j]
            label = f"({A.indices[i].p},{A.indices[i].j})x({A.indices[j].p},{A.indices[j].j})"
            if e.is_zero():
                rows.append(DecayRow(label, required, math.inf, True))
                continue
            values = [abs(e.eval_float(m)) for m in m_list]
            fitted = fit_decay_exponent(m_list, values)
            rows.append(DecayRow(label, required, fitted, fitted >= required - slack))
    return DecayReport(rows=tuple(rows))
