"""Normalization of local Kahler data at a base point.

Given jets of the metric, line-bundle weight and bundle metric, these
routines build holomorphic coordinates and frames in which the constant
terms become the identity and every pure-holomorphic derivative vanishes up
to a requested order.  The construction is one explicit formula family, so
applying it across a grid of nearby base points yields smoothly varying
charts.

Exactness policy: constants that would require irrational square roots are
rejected rather than approximated.  The line-frame normalization is written
in a radical-free form (the square root of a(t) cancels), so it works at any
base value; the coordinate and bundle normalizations need the constant
metric to be the identity or diagonal with perfect-square rational entries.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .geometry import PotentialJet, metric_from_potential
from .jets import (
    BidegreeJet,
    MatrixJet,
    _const_matrix_inverse,
    graded_exponents,
    mi_factorial,
    matrix_sqrt_jet,
)
from .rationals import QQi, QQI_ONE, QQI_ZERO, as_qqi


@dataclass(frozen=True)
class FrameChange:
    """Record of one base point normalization.

    D is the constant linear coordinate normalizer with D @ D^* equal to the
    constant metric; b2 holds the mixed compensation terms z^P zbar_j with
    1 < |P| <= order; xi and Bp are the pure-holomorphic parts (1 <= |P| <=
    order) of the line weight and bundle metric; K is the constant bundle
    normalizer with K^2 equal to the constant bundle metric.
    """

    t: tuple[QQi, ...]
    D: tuple[tuple[QQi, ...], ...]
    b2: BidegreeJet
    xi: BidegreeJet
    Bp: MatrixJet
    K: tuple[tuple[QQi, ...], ...]
    order: int


@dataclass(frozen=True)
class NormalizedChart:
    """Local data after normalization, centered at the base point."""

    potential: PotentialJet
    line_metric: BidegreeJet
    bundle_metric: MatrixJet
    change: FrameChange

    @property
    def n(self) -> int:
        return self.potential.n

    @property
    def order(self) -> int:
        """The normalization order p of the chart."""
        return self.change.order

    @property
    def rank(self) -> int:
        return self.bundle_metric.rows


@dataclass(frozen=True)
class KNormalReport:
    """Outcome of the normal-form postcondition checks."""

    violations: tuple[str, ...]
    metric_checked_to: int
    frame_checked_to: int

    @property
    def ok(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# coordinate normalization
# ---------------------------------------------------------------------------

def _constant_sqrt_matrix(C0: list[list[QQi]], n: int, order: int) -> MatrixJet:
    return matrix_sqrt_jet(MatrixJet.from_constant(C0, n, order))


def _mixed_weight_data(G: MatrixJet, p: int) -> dict[tuple[int, ...], list[QQi]]:
    """Coefficients c_{P,j} = dbar_j d^P log(a) at the base point, |P| in 2..p.

    Extracted from metric derivatives: c_{P,j} = -[d^{P-e_i} g_{i jbar}](0)
    for any i in the support of P; the Kahler symmetry makes the choice of i
    immaterial and is verified here.
    """
    n = G.n
    out: dict[tuple[int, ...], list[QQi]] = {}
    zero = (0,) * n
    for deg in range(2, p + 1):
        if deg - 1 > G.order:
            break
        for P in graded_exponents(n, deg):
            values: list[QQi] = []
            for j in range(n):
                candidates = []
                for i in range(n):
                    if P[i] == 0:
                        continue
                    Pm = list(P)
                    Pm[i] -= 1
                    Pm = tuple(Pm)
                    c = G[(i, j)].coeff(Pm, zero) * mi_factorial(Pm)
                    candidates.append(c)
                if any(c != candidates[0] for c in candidates[1:]):
                    raise ValueError(
                        "metric jet is not Kahler: mixed log-weight data inconsistent at "
                        f"P={P}, j={j + 1}"
                    )
                values.append(-candidates[0])
            if any(not v.is_zero() for v in values):
                out[P] = values
    return out


def _build_b2(data: dict, n: int, order: int) -> BidegreeJet:
    terms = {}
    for P, values in data.items():
        fact = QQI_ONE / QQi(mi_factorial(P))
        for j, c in enumerate(values):
            if c.is_zero():
                continue
            key = list(P) + [0] * n
            key[n + j] = 1
            terms[tuple(key)] = c * fact
    return BidegreeJet(n, order, terms)


def _hol_compensators(data: dict, n: int, order: int) -> list[BidegreeJet]:
    """The holomorphic polynomials (d b2 / dzbar_j) for j = 1..n."""
    hols = []
    for j in range(n):
        terms = {}
        for P, values in data.items():
            c = values[j]
            if c.is_zero():
                continue
            key = tuple(P) + (0,) * n
            terms[key] = c / QQi(mi_factorial(P))
        hols.append(BidegreeJet(n, order, terms))
    return hols


def _invert_holomorphic_map(psi: list[BidegreeJet], Dinv: list[list[QQi]]) -> list[BidegreeJet]:
    """Compositional inverse of w -> psi(w) = wD + N(w), N of degree >= 2."""
    n = psi[0].n
    order = psi[0].order
    N = []
    for k in range(n):
        drop = {key: c for key, c in psi[k]._c.items() if sum(key) >= 2}
        N.append(BidegreeJet(n, order, drop))
    # initial guess: the linear inverse
    sigma = []
    for j in range(n):
        terms = {}
        for k in range(n):
            if not Dinv[k][j].is_zero():
                key = [0] * (2 * n)
                key[k] = 1
                terms[tuple(key)] = Dinv[k][j]
        sigma.append(BidegreeJet(n, order, terms))
    if all(c.is_zero() for comp in N for c in comp._c.values()):
        return sigma
    for _ in range(order):
        corrected = []
        for j in range(n):
            acc = BidegreeJet.zero(n, order)
            for k in range(n):
                if Dinv[k][j].is_zero():
                    continue
                zk = BidegreeJet.coordinate(n, order, k + 1)
                acc = acc + (zk - N[k].compose_holomorphic(sigma)).scale(Dinv[k][j])
            corrected.append(acc)
        if corrected == sigma:
            break
        sigma = corrected
    return sigma


def _k_coordinates_core(G: MatrixJet, p: int, map_order: int | None = None):
    """Shared coordinate-normalization engine at a base point already at the origin.

    map_order sets the truncation order carried by the returned coordinate
    map and its inverse (the map itself is a polynomial of degree <= p);
    it defaults to the metric order and may exceed it.
    """
    n, order = G.n, G.order
    if map_order is None:
        map_order = order
    if map_order < order:
        raise ValueError("map order cannot be below the metric order")
    if not G.is_hermitian():
        raise ValueError("metric jet must be Hermitian")
    if order < p - 1:
        raise ValueError(f"metric jet order {order} too small for normalization order {p}")
    C0 = G.constant_matrix()
    D = _constant_sqrt_matrix(C0, n, order).constant_matrix()
    Dinv = _const_matrix_inverse(D)
    data = _mixed_weight_data(G, p)
    b2 = _build_b2(data, n, map_order)
    hols = _hol_compensators(data, n, map_order)

    # forward map components z'_k = sum_i w_i D_ik - sum_j hol_j(w) Dinv_jk
    forward = []
    for k in range(n):
        acc = BidegreeJet.zero(n, map_order)
        for i in range(n):
            if not D[i][k].is_zero():
                acc = acc + BidegreeJet.coordinate(n, map_order, i + 1).scale(D[i][k])
        for j in range(n):
            if not Dinv[j][k].is_zero() and not hols[j].is_zero():
                acc = acc - hols[j].scale(Dinv[j][k])
        forward.append(acc)

    identity_map = not data and all(
        D[i][j] == (QQI_ONE if i == j else QQI_ZERO) for i in range(n) for j in range(n)
    )
    if identity_map:
        return forward, forward, G, b2, D

    # Gp_ij = -d_i dbar_j b2 = -d_i hol_j, holomorphic in w
    Gp_rows = []
    for i in range(n):
        row = []
        for j in range(n):
            terms = {}
            for key, c in hols[j]._c.items():
                e = key[i]
                if e:
                    kk = key[:i] + (e - 1,) + key[i + 1:]
                    terms[kk] = terms.get(kk, QQI_ZERO) - c * e
            row.append(BidegreeJet(n, order, _dict_keep_order(terms, order)))
        Gp_rows.append(row)
    Gp = MatrixJet(Gp_rows)

    DinvM = MatrixJet.from_constant(Dinv, n, order)
    Pmat = MatrixJet.from_constant(D, n, order) + Gp @ DinvM
    Pinv = Pmat.inverse()
    Gmid = Pinv @ G @ Pinv.conj_transpose()

    sigma = _invert_holomorphic_map(forward, Dinv)
    sigma_g = [s.truncate(order) for s in sigma]
    Gprime = Gmid.map(lambda e: e.compose_holomorphic(sigma_g))
    return forward, sigma, Gprime, b2, D


def _dict_keep_order(terms: dict, order: int) -> dict:
    return {k: c for k, c in terms.items() if sum(k) <= order}


def k_coordinates(G: MatrixJet, t: Sequence, p: int):
    """Normalizing coordinates at base point t.

    Returns the holomorphic coordinate map (as jets in the displacement
    w = z - t) and the transformed metric jet, which is the identity at the
    base point with all pure-holomorphic derivatives up to order p-1
    vanishing exactly.
    """
    t = tuple(as_qqi(v) for v in t)
    if len(t) != G.n:
        raise ValueError("base point dimension mismatch")
    Gt = G.map(lambda e: e.shift(t))
    forward, _, Gprime, _, _ = _k_coordinates_core(Gt, p)
    return forward, Gprime


# ---------------------------------------------------------------------------
# frame normalizations
# ---------------------------------------------------------------------------

def _pure_hol_truncated(f: BidegreeJet, p: int) -> BidegreeJet:
    n = f.n
    zero = (0,) * n
    out = {
        k: c
        for k, c in f._c.items()
        if k[n:] == zero and 1 <= sum(k) <= p
    }
    return BidegreeJet(n, f.order, out)


def _frame_line_core(a: BidegreeJet, p: int):
    a0 = a.constant_term()
    if not a0.is_real() or a0.re <= 0:
        raise ValueError("line weight must be positive at the base point")
    n, order = a.n, a.order
    xi = _pure_hol_truncated(a, p)
    xibar = xi.conj()
    den = BidegreeJet.constant(n, order, a0) + xi + xibar + (xi * xibar).scale(QQI_ONE / a0)
    aprime = a * den.inverse()
    factor = (BidegreeJet.constant(n, order, 1) + xi.scale(QQI_ONE / a0)).inverse()
    return factor, aprime, xi


def k_frame_line(a: BidegreeJet, t: Sequence, p: int):
    """Line-frame normalization at base point t.

    Returns (factor, a') where a' equals a times the squared modulus of the
    frame change and satisfies a'(t) = 1 with all pure derivatives up to
    order p vanishing.  The returned factor jet is normalized so that the
    actual frame multiplier is factor / sqrt(a(t)); the square root never
    enters a'.
    """
    t = tuple(as_qqi(v) for v in t)
    at = a.shift(t)
    factor, aprime, _ = _frame_line_core(at, p)
    return factor, aprime


def _frame_bundle_core(H: MatrixJet, p: int):
    if not H.is_hermitian():
        raise ValueError("bundle metric jet must be Hermitian")
    n, order, r = H.n, H.order, H.rows
    H0 = H.constant_matrix()
    K = _constant_sqrt_matrix(H0, n, order)
    Bp = H.map(lambda e: _pure_hol_truncated(e, p))
    base = MatrixJet.from_constant(H0, n, order) + Bp
    base_inv = base.inverse()
    W = base_inv @ H @ base_inv.conj_transpose()
    Hprime = K @ W @ K
    Qinv = K @ base_inv
    return Qinv, Hprime, Bp, K.constant_matrix()


def k_frame_bundle(H: MatrixJet, t: Sequence, p: int):
    """Bundle-frame normalization at base point t.

    Returns (Qinv, H') with H'(t) = I and vanishing pure derivatives up to
    order p.  The constant bundle metric at t must be the identity or
    diagonal with perfect-square rational entries, so its square root is
    exact; the rank-one case reduces to :func:`k_frame_line`.
    """
    t = tuple(as_qqi(v) for v in t)
    Ht = H.map(lambda e: e.shift(t))
    Qinv, Hprime, _, _ = _frame_bundle_core(Ht, p)
    return Qinv, Hprime


# ---------------------------------------------------------------------------
# full chart normalization
# ---------------------------------------------------------------------------

def normalize_chart(
    potential: PotentialJet,
    bundle_metric: MatrixJet | None = None,
    p: int | None = None,
    t: Sequence | None = None,
) -> NormalizedChart:
    """Normalize a potential (and optional bundle metric) at base point t.

    The incoming jets are recentered by exact polynomial shifting, the
    coordinate change is applied through one scalar composition of the
    potential (bundle entries are composed likewise), and both frames are
    normalized.  The resulting chart satisfies the postconditions of
    :func:`verify_k_normal` at order p.
    """
    n = potential.n
    order = potential.order
    if p is None:
        raise ValueError("normalization order p is required")
    if order < p:
        raise ValueError(f"potential jet order {order} cannot support normalization order {p}")
    t = tuple(as_qqi(v) for v in (t if t is not None else (0,) * n))
    if len(t) != n:
        raise ValueError("base point dimension mismatch")

    phi_t = potential.phi.shift(t)
    phi_t = phi_t - BidegreeJet.constant(n, order, phi_t.constant_term())
    pot_t = PotentialJet(phi_t)
    G_t = metric_from_potential(pot_t)

    forward, sigma, _, b2, D = _k_coordinates_core(G_t, p, map_order=order)
    if sigma is forward:
        phi_mid = phi_t
    else:
        phi_mid = phi_t.compose_holomorphic(sigma)

    a_mid = (-phi_mid).exp()
    factor, aprime, xi = _frame_line_core(a_mid, p)
    phi_prime = -(aprime.log())
    pot_prime = PotentialJet(phi_prime)

    if bundle_metric is None:
        bundle_metric = MatrixJet.identity(1, n, order)
    if bundle_metric.n != n or bundle_metric.order != order:
        raise ValueError("bundle metric must match the potential dimension and order")
    Ht = bundle_metric.map(lambda e: e.shift(t))
    if sigma is not forward:
        Ht = Ht.map(lambda e: e.compose_holomorphic(sigma))
    _, Hprime, Bp, K = _frame_bundle_core(Ht, p)

    change = FrameChange(
        t=t,
        D=tuple(tuple(row) for row in D),
        b2=b2,
        xi=xi,
        Bp=Bp,
        K=tuple(tuple(row) for row in K),
        order=p,
    )
    return NormalizedChart(
        potential=pot_prime,
        line_metric=aprime,
        bundle_metric=Hprime,
        change=change,
    )


def verify_k_normal(chart: NormalizedChart, p: int | None = None) -> KNormalReport:
    """Check the normal-form postconditions exactly; list every violation.

    Checks g(0) = I, a(0) = 1, H(0) = I and the vanishing of all
    pure-holomorphic derivative coefficients: metric entries up to total
    degree p-1, line and bundle metric up to degree p (each capped by the
    available jet order, which the report records).
    """
    if p is None:
        p = chart.order
    n = chart.n
    violations: list[str] = []
    g = metric_from_potential(chart.potential)
    metric_to = min(p - 1, g.order)
    frame_to = min(p, chart.line_metric.order)

    zero = (0,) * n
    for i in range(n):
        for j in range(n):
            e = g[(i, j)]
            want = QQI_ONE if i == j else QQI_ZERO
            if e.constant_term() != want:
                violations.append(f"metric constant g[{i+1}][{j+1}] != {'1' if i == j else '0'}")
            for deg in range(1, metric_to + 1):
                for P in graded_exponents(n, deg):
                    if not e.coeff(P, zero).is_zero():
                        violations.append(f"pure derivative of metric g[{i+1}][{j+1}] at P={P} nonzero")

    a = chart.line_metric
    if a.constant_term() != QQI_ONE:
        violations.append("line weight a(0) != 1")
    for deg in range(1, frame_to + 1):
        for P in graded_exponents(n, deg):
            if not a.coeff(P, zero).is_zero():
                violations.append(f"pure derivative of line weight at P={P} nonzero")

    H = chart.bundle_metric
    r = H.rows
    for i in range(r):
        for j in range(r):
            e = H[(i, j)]
            want = QQI_ONE if i == j else QQI_ZERO
            if e.constant_term() != want:
                violations.append(f"bundle constant H[{i+1}][{j+1}] != {'1' if i == j else '0'}")
            for deg in range(1, min(p, e.order) + 1):
                for P in graded_exponents(n, deg):
                    if not e.coeff(P, zero).is_zero():
                        violations.append(f"pure derivative of bundle metric H[{i+1}][{j+1}] at P={P} nonzero")

    return KNormalReport(
        violations=tuple(violations),
        metric_checked_to=metric_to,
        frame_checked_to=frame_to,
    )


def family_charts(
    source,
    grid: Sequence[Sequence],
    p: int,
    bundle_metric: MatrixJet | None = None,
) -> list[NormalizedChart]:
    """Normalized charts over a grid of base points from one construction.

    ``source`` is either a PotentialJet (recentered by exact polynomial
    shifting, appropriate for polynomial data) or a callable t -> (PotentialJet,
    MatrixJet) producing jets already centered at t (appropriate for analytic
    models whose recentered Taylor coefficients are known in closed form).
    """
    charts = []
    for t in grid:
        t = tuple(as_qqi(v) for v in t)
        if callable(source):
            pot_t, H_t = source(t)
            chart = normalize_chart(pot_t, H_t, p=p, t=(QQI_ZERO,) * pot_t.n)
            chart = replace(chart, change=replace(chart.change, t=t))
        else:
            chart = normalize_chart(source, bundle_metric, p=p, t=t)
        charts.append(chart)
    return charts
