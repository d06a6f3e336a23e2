"""Kahler metric, curvature and volume data derived from a local potential jet.

Conventions: the metric is the full complex Hessian g_{a bbar} = d^2 phi / dz_a
dzbar_b with no 2*pi normalization, the Ricci tensor is minus the complex
Hessian of log det g, and signs are fixed so that the standard rational-curve
potential log(1 + |z|^2) has scalar curvature +2 in dimension one.  The volume
density relative to the Gaussian-normalized Euclidean measure is det g.
"""
from __future__ import annotations

from dataclasses import dataclass

from .jets import BidegreeJet, MatrixJet
from .rationals import QQi


@dataclass(frozen=True)
class PotentialJet:
    """Local Kahler potential phi as a jet, with a = e^{-phi}.

    Requires phi(0) = 0 and a positive-definite (1,1) Hessian at the origin.
    Pure first-order terms are allowed; the normalizer removes them.
    """

    phi: BidegreeJet

    @property
    def n(self) -> int:
        return self.phi.n

    @property
    def order(self) -> int:
        return self.phi.order

    def __post_init__(self):
        if not self.phi.constant_term().is_zero():
            raise ValueError("potential must vanish at the base point")
        if self.phi.order < 2:
            raise ValueError("potential jet order must be at least 2")
        H = _hessian_constant(self.phi)
        if not _is_positive_definite(H):
            raise ValueError("potential Hessian at the base point is not positive definite")

    def line_metric(self) -> BidegreeJet:
        """The local representative a = exp(-phi) of the line bundle metric."""
        return (-self.phi).exp()


def _hessian_constant(phi: BidegreeJet) -> list[list[QQi]]:
    n = phi.n
    out = []
    for a in range(n):
        row = []
        for b in range(n):
            p = [0] * n
            q = [0] * n
            p[a] = 1
            q[b] = 1
            row.append(phi.coeff(tuple(p), tuple(q)))
        out.append(row)
    return out


def _is_positive_definite(H: list[list[QQi]]) -> bool:
    """Exact Hermitian positive-definiteness via leading principal minors."""
    m = len(H)
    for i in range(m):
        for j in range(m):
            if H[i][j] != H[j][i].conj():
                return False
    for k in range(1, m + 1):
        minor = [[H[i][j] for j in range(k)] for i in range(k)]
        d = _det_const(minor)
        if not d.is_real() or d.re <= 0:
            return False
    return True


def _det_const(M: list[list[QQi]]) -> QQi:
    m = len(M)
    if m == 1:
        return M[0][0]
    acc = QQi(0)
    for j in range(m):
        minor = [[M[i][k] for k in range(m) if k != j] for i in range(1, m)]
        term = M[0][j] * _det_const(minor)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def metric_from_potential(p: PotentialJet) -> MatrixJet:
    """Metric matrix jet g_{a bbar} = d^2 phi / dz_a dzbar_b; Hermitian, order drops by 2."""
    phi, n = p.phi, p.n
    rows = []
    for a in range(1, n + 1):
        dz = phi.diff("z", a)
        rows.append([dz.diff("zbar", b) for b in range(1, n + 1)])
    return MatrixJet(rows)


@dataclass(frozen=True)
class CurvatureData:
    """Curvature package of a potential jet at a base point.

    riemann maps (a, b, c, d) to the all-lower-index component R_{a bbar c dbar};
    ricci and scalar follow the contraction conventions in the module docstring.
    """

    metric: MatrixJet
    inverse_metric: MatrixJet
    riemann: dict[tuple[int, int, int, int], BidegreeJet]
    ricci: MatrixJet
    scalar: BidegreeJet
    det_g: BidegreeJet


def curvature_data(p: PotentialJet) -> CurvatureData:
    """All curvature fields supported by the input order (needs order >= 4).

    The Riemann tensor is computed from the metric by the Kahler formula
    (second metric derivatives corrected by metric-contracted first-derivative
    products); the Ricci tensor it contracts to is verified exactly against
    -d dbar log det g before returning.
    """
    if p.order < 4:
        raise ValueError("curvature needs a potential jet of order >= 4")
    n = p.n
    g = metric_from_potential(p)
    ginv = g.inverse()
    ord_r = g.order - 2
    ginv_r = ginv.truncate(ord_r)
    dg = [
        [[g[(a, b)].diff("z", c).truncate(ord_r) for c in range(1, n + 1)] for b in range(n)]
        for a in range(n)
    ]
    dgbar = [
        [[g[(a, b)].diff("zbar", d).truncate(ord_r) for d in range(1, n + 1)] for b in range(n)]
        for a in range(n)
    ]

    riemann: dict[tuple[int, int, int, int], BidegreeJet] = {}
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    second = g[(a, b)].diff("z", c + 1).diff("zbar", d + 1)
                    corr = BidegreeJet.zero(n, ord_r)
                    for pp in range(n):
                        for qq in range(n):
                            corr = corr + ginv_r[(qq, pp)] * (dg[a][qq][c] * dgbar[pp][b][d])
                    riemann[(a, b, c, d)] = -second + corr

    ricci_rows = []
    for c in range(n):
        row = []
        for d in range(n):
            acc = BidegreeJet.zero(n, ord_r)
            for a in range(n):
                for b in range(n):
                    acc = acc + ginv_r[(b, a)] * riemann[(a, b, c, d)]
            row.append(acc)
        ricci_rows.append(row)
    ricci = MatrixJet(ricci_rows)

    detg = g.det()
    log_det = detg.scale(QQi(1) / detg.constant_term()).log()
    ricci_check = MatrixJet(
        [
            [-(log_det.diff("z", c).diff("zbar", d)) for d in range(1, n + 1)]
            for c in range(1, n + 1)
        ]
    )
    if ricci_check != ricci:
        raise AssertionError("Ricci contraction disagrees with -d dbar log det g")

    scalar = BidegreeJet.zero(n, ord_r)
    for c in range(n):
        for d in range(n):
            scalar = scalar + ginv_r[(d, c)] * ricci[(c, d)]

    return CurvatureData(
        metric=g,
        inverse_metric=ginv,
        riemann=riemann,
        ricci=ricci,
        scalar=scalar,
        det_g=detg,
    )


def a1_reference(c: CurvatureData) -> BidegreeJet:
    """Half the scalar curvature: the expected first subleading density coefficient."""
    return c.scalar.scale(QQi("1/2"))
