"""Normal-form postconditions: exact vanishing, idempotence, families."""
import random

import pytest

from bergman.rationals import QQi
from bergman.jets import BidegreeJet, MatrixJet
from bergman.geometry import PotentialJet, metric_from_potential
from bergman.normal_form import (
    family_charts,
    k_coordinates,
    k_frame_bundle,
    k_frame_line,
    normalize_chart,
    verify_k_normal,
)


def one(n=1, order=8):
    return BidegreeJet.constant(n, order, 1)


def fock(n=1, order=10):
    return PotentialJet(BidegreeJet.abs_squared(n, order))


def fs_potential(order=10):
    u = BidegreeJet.abs_squared(1, order)
    return PotentialJet((one(1, order) + u).log())


def random_test_potential(rng, n, order, nterms=3, maxdeg=5):
    """|z|^2 plus sparse Hermitian-symmetric higher terms with small coefficients."""
    phi = BidegreeJet.abs_squared(n, order)
    added = BidegreeJet.zero(n, order)
    for _ in range(nterms):
        while True:
            p = tuple(rng.randint(0, 2) for _ in range(n))
            q = tuple(rng.randint(0, 2) for _ in range(n))
            d = sum(p) + sum(q)
            if 3 <= d <= maxdeg:
                break
        c = QQi(rng.randint(-2, 2), rng.randint(-2, 2)) / QQi(rng.choice([8, 12, 16]))
        if c.is_zero():
            continue
        term = BidegreeJet.from_terms(n, order, [(p, q, c)])
        added = added + term + term.conj()
    return PotentialJet(phi + added)


# -- k_coordinates -------------------------------------------------------------

def test_flat_metric_identity_map():
    G = MatrixJet.identity(1, 1, 8)
    fmap, Gp = k_coordinates(G, (0,), 6)
    assert fmap[0] == BidegreeJet.coordinate(1, 8, 1)
    assert Gp == G


def test_fs_chart_is_already_normal():
    # metric expands in powers of |z|^2 only, so no pure-z terms to remove
    G = metric_from_potential(fs_potential(order=12))
    fmap, Gp = k_coordinates(G, (0,), 8)
    assert fmap[0] == BidegreeJet.coordinate(1, 10, 1)
    assert Gp == G


def test_k_coordinates_kills_pure_terms():
    rng = random.Random(7)
    for _ in range(3):
        pot = random_test_potential(rng, 2, 10)
        G = metric_from_potential(pot)
        _, Gp = k_coordinates(G, (0, 0), 6)
        zero = (0, 0)
        for i in range(2):
            for j in range(2):
                assert Gp[(i, j)].constant_term() == (QQi(1) if i == j else QQi(0))
                for key, c in Gp[(i, j)]._c.items():
                    P, Q = key[:2], key[2:]
                    if Q == zero and 1 <= sum(P) <= 5:
                        raise AssertionError(f"pure term {P} survives in g[{i}][{j}]")


def test_k_coordinates_rejects_non_kahler():
    order = 6
    z1 = BidegreeJet.coordinate(2, order, 1)
    z2b = BidegreeJet.coordinate(2, order, 2, bar=True)
    I = MatrixJet.identity(2, 2, order)
    # put a z1^2 zbar-free... a z1 z2bar entry only in one slot: not a Hessian
    G = MatrixJet(
        [
            [I[(0, 0)] + z1 * z1 * z2b, BidegreeJet.zero(2, order)],
            [(z1 * z1 * z2b).conj(), I[(1, 1)]],
        ]
    )
    with pytest.raises(ValueError):
        k_coordinates(G, (0, 0), 5)


# -- k_frame_line ----------------------------------------------------------------

def test_frame_line_already_normal():
    a = (-BidegreeJet.abs_squared(1, 8)).exp()
    factor, ap = k_frame_line(a, (0,), 6)
    assert factor == one(1, 8)
    assert ap == a


def test_frame_line_absorbs_unit_holomorphic_factor():
    # a = |1+z|^2 e^{-|z|^2}: the pure factor is removed exactly
    order = 8
    z = BidegreeJet.coordinate(1, order, 1)
    gauss = (-BidegreeJet.abs_squared(1, order)).exp()
    a = (one(1, order) + z) * (one(1, order) + z.conj()) * gauss
    _, ap = k_frame_line(a, (0,), 4)
    assert ap == gauss


def test_frame_line_value_one_at_base():
    order = 8
    z = BidegreeJet.coordinate(1, order, 1)
    a = (one(1, order) + z.scale(QQi("1/3")) + z.conj().scale(QQi("1/3"))
         + BidegreeJet.abs_squared(1, order).scale(QQi("1/2"))) * (-BidegreeJet.abs_squared(1, order)).exp()
    _, ap = k_frame_line(a, (0,), 6)
    assert ap.constant_term() == QQi(1)
    # no pure-holomorphic terms up to order 6
    for key, c in ap._c.items():
        if key[1] == 0 and 1 <= key[0] <= 6:
            raise AssertionError(f"pure term z^{key[0]} survives")


def test_frame_line_rejects_nonpositive():
    a = BidegreeJet.constant(1, 4, -1) + BidegreeJet.abs_squared(1, 4)
    with pytest.raises(ValueError):
        k_frame_line(a, (0,), 3)


# -- k_frame_bundle ----------------------------------------------------------------

def test_frame_bundle_identity():
    H = MatrixJet.identity(2, 2, 8)
    Qinv, Hp = k_frame_bundle(H, (0, 0), 5)
    assert Qinv == H
    assert Hp == H


def test_frame_bundle_rank_one_matches_line():
    order = 8
    z = BidegreeJet.coordinate(1, order, 1)
    a = (one(1, order) + z.scale(QQi("1/4")) + z.conj().scale(QQi("1/4"))
         + BidegreeJet.abs_squared(1, order).scale(QQi("1/3")))
    _, ap = k_frame_line(a, (0,), 5)
    _, Hp = k_frame_bundle(MatrixJet([[a]]), (0,), 5)
    assert Hp[(0, 0)] == ap


def test_frame_bundle_removes_holomorphic_part():
    order = 8
    z = BidegreeJet.coordinate(2, order, 1)
    zb = z.conj()
    zero = BidegreeJet.zero(2, order)
    H = MatrixJet(
        [
            [one(2, order), z],
            [zb, one(2, order)],
        ]
    )
    assert H.is_hermitian()
    _, Hp = k_frame_bundle(H, (0, 0), 3)
    assert Hp.is_hermitian()
    for i in range(2):
        for j in range(2):
            e = Hp[(i, j)]
            assert e.constant_term() == (QQi(1) if i == j else QQi(0))
            for key in e._c:
                P, Q = key[:2], key[2:]
                if Q == (0, 0) and 1 <= sum(P) <= 3:
                    raise AssertionError(f"pure term {P} survives in H[{i}][{j}]")


# -- full normalization ---------------------------------------------------------------

def test_fock_chart_normalizes_to_itself():
    chart = normalize_chart(fock(1, 10), p=8)
    assert verify_k_normal(chart).ok
    assert chart.line_metric == (-BidegreeJet.abs_squared(1, 10)).exp()


def test_verify_flags_constructed_violation():
    # a chart whose line weight keeps a z^2 term must be reported
    order = 8
    z = BidegreeJet.coordinate(1, order, 1)
    bad_phi = BidegreeJet.abs_squared(1, order) - (z * z) - (z * z).conj()
    chart = normalize_chart(fock(1, order), p=6)
    object.__setattr__(chart, "line_metric", (-(bad_phi)).exp())
    report = verify_k_normal(chart, 6)
    assert not report.ok
    assert any("P=(2,)" in v for v in report.violations)


def test_normalize_random_charts_pass_verification():
    rng = random.Random(11)
    for n in (1, 2):
        for _ in range(3):
            pot = random_test_potential(rng, n, 10)
            chart = normalize_chart(pot, p=8)
            report = verify_k_normal(chart)
            assert report.ok, report.violations


def test_normalize_with_random_bundle():
    order = 10
    rng = random.Random(3)
    pot = random_test_potential(rng, 1, order)
    z = BidegreeJet.coordinate(1, order, 1)
    off = z.scale(QQi("1/5")) + (z * z).scale(QQi(0, "1/7"))
    H = MatrixJet(
        [
            [one(1, order) + BidegreeJet.abs_squared(1, order).scale(QQi("1/3")), off],
            [off.conj(), one(1, order)],
        ]
    )
    chart = normalize_chart(pot, H, p=7)
    assert verify_k_normal(chart).ok


def test_idempotence_on_normal_charts():
    rng = random.Random(23)
    pot = random_test_potential(rng, 1, 12)
    chart = normalize_chart(pot, p=9)
    again = normalize_chart(chart.potential, chart.bundle_metric, p=9)
    assert again.change.b2.is_zero()
    assert again.change.xi.is_zero()
    assert all(
        again.change.D[i][j] == (QQi(1) if i == j else QQi(0)) for i in range(1) for j in range(1)
    )
    assert again.line_metric == chart.line_metric
    assert again.potential.phi == chart.potential.phi


def test_order_monotonicity():
    rng = random.Random(5)
    pot = random_test_potential(rng, 2, 10)
    chart = normalize_chart(pot, p=8)
    for smaller in (7, 5, 3):
        assert verify_k_normal(chart, smaller).ok


def test_consistency_metric_of_transformed_potential():
    # the transformed potential's Hessian equals the k_coordinates output metric
    rng = random.Random(17)
    pot = random_test_potential(rng, 2, 10)
    G = metric_from_potential(pot)
    _, Gp = k_coordinates(G, (0, 0), 7)
    chart = normalize_chart(pot, p=7)
    g_chart = metric_from_potential(chart.potential)
    assert g_chart == Gp


# -- families ---------------------------------------------------------------------

def test_family_single_origin_matches_direct_call():
    pot = fock(1, 10)
    charts = family_charts(pot, [(0,)], p=7)
    direct = normalize_chart(pot, p=7)
    assert charts[0].line_metric == direct.line_metric


def test_family_flat_any_grid_is_translation():
    pot = fock(1, 10)
    grid = [(QQi(0),), (QQi("1/10"),), (QQi("1/5", "1/10"),)]
    for chart in family_charts(pot, grid, p=7):
        assert verify_k_normal(chart).ok
        assert chart.change.b2.is_zero()
        assert chart.change.D == ((QQi(1),),)
        # recentred Gaussian up to the normalization order
        gauss = (-BidegreeJet.abs_squared(1, 10)).exp()
        assert chart.line_metric.truncate(7) == gauss.truncate(7)


def fs_centered_jets(t, order=12):
    """Taylor jets of log(1+|z|^2) and the trivial bundle centered at rational t."""
    t = t[0]
    n = 1
    w = BidegreeJet.coordinate(n, order, 1)
    denom = QQi(1) + t * t.conj()
    v = (w.scale(t.conj()) + w.conj().scale(t) + w * w.conj()).scale(QQi(1) / denom)
    phi = (BidegreeJet.constant(n, order, 1) + v).log()
    return PotentialJet(phi), MatrixJet.identity(1, n, order)


def test_family_fs_grid_passes_verification():
    grid = [(QQi(0),), (QQi("1/10"),), (QQi("1/5"),)]
    charts = family_charts(fs_centered_jets, grid, p=8)
    for chart, t in zip(charts, grid):
        report = verify_k_normal(chart)
        assert report.ok, (t, report.violations)
        assert chart.change.t == t


def test_family_fs_smooth_in_base_point_and_homogeneous():
    grid = [(QQi(k, 0) / QQi(50),) for k in range(5)]
    charts = family_charts(fs_centered_jets, grid, p=8)
    # D(t) = 1/(1+t^2) varies smoothly: second differences shrink like the step
    dvals = [complex(ch.change.D[0][0]).real for ch in charts]
    assert any(abs(v - dvals[0]) > 1e-6 for v in dvals[1:])
    second = [dvals[k + 2] - 2 * dvals[k + 1] + dvals[k] for k in range(3)]
    assert all(abs(s) < 1e-2 for s in second)
    # the normalized data itself is the same at every point (homogeneous metric)
    ref = charts[0].line_metric.truncate(8)
    for ch in charts[1:]:
        assert ch.line_metric.truncate(8) == ref
