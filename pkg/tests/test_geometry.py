"""Curvature pipeline against hand and symbolic-differentiation oracles."""
import pytest

from bergman.rationals import QQi
from bergman.jets import BidegreeJet, MatrixJet
from bergman.geometry import PotentialJet, a1_reference, curvature_data, metric_from_potential


def flat_potential(n=1, order=6):
    return PotentialJet(BidegreeJet.abs_squared(n, order))


def fs_potential(order=6):
    """log(1 + |z|^2) as a jet, dimension one."""
    u = BidegreeJet.abs_squared(1, order)
    return PotentialJet((BidegreeJet.constant(1, order, 1) + u).log())


def perturbed_potential(eps="1/10", order=8):
    u = BidegreeJet.abs_squared(1, order)
    return PotentialJet(u - (u * u).scale(QQi(eps)))


def test_flat_metric_is_one():
    g = metric_from_potential(flat_potential())
    assert g == MatrixJet.identity(1, 1, 4)


def test_fs_metric_expansion():
    g = metric_from_potential(fs_potential(order=6))
    e = g[(0, 0)]
    assert e.coeff((0,), (0,)) == QQi(1)
    assert e.coeff((1,), (1,)) == QQi(-2)
    assert e.coeff((1,), (0,)) == QQi(0)
    assert e.coeff((2,), (2,)) == QQi(3)


def test_perturbed_metric():
    g = metric_from_potential(perturbed_potential("1/10", order=6))
    u = BidegreeJet.abs_squared(1, 4)
    assert g[(0, 0)] == BidegreeJet.constant(1, 4, 1) - u.scale(QQi("2/5"))


def test_rejects_nonpositive_hessian():
    u = BidegreeJet.abs_squared(1, 4)
    with pytest.raises(ValueError):
        PotentialJet(-u)


def test_rejects_nonzero_constant():
    f = BidegreeJet.constant(1, 4, 1) + BidegreeJet.abs_squared(1, 4)
    with pytest.raises(ValueError):
        PotentialJet(f)


def test_flat_curvature_vanishes():
    c = curvature_data(flat_potential())
    assert c.scalar.is_zero()
    assert all(j.is_zero() for j in c.riemann.values())
    assert a1_reference(c).is_zero()


def test_fs_scalar_curvature_is_two():
    c = curvature_data(fs_potential(order=8))
    assert c.scalar.constant_term() == QQi(2)
    assert a1_reference(c).constant_term() == QQi(1)


def test_fs_scalar_curvature_is_constant_two():
    # constant scalar curvature holds at every retained order, not just at 0
    c = curvature_data(fs_potential(order=10))
    assert c.scalar == BidegreeJet.constant(1, c.scalar.order, 2)


def test_perturbed_scalar_curvature_at_origin():
    c = curvature_data(perturbed_potential("1/10", order=8))
    assert c.scalar.constant_term() == QQi("2/5")
    assert a1_reference(c).constant_term() == QQi("1/5")


def test_needs_order_four():
    with pytest.raises(ValueError):
        curvature_data(flat_potential(order=3))


def test_metric_hermitian_and_minors():
    n, order = 2, 8
    z1 = BidegreeJet.coordinate(n, order, 1)
    z2 = BidegreeJet.coordinate(n, order, 2)
    phi = BidegreeJet.abs_squared(n, order) + (z1 * z1 * z2.conj() * z2.conj()).scale(
        QQi("1/8")
    ) + (z2 * z2 * z1.conj() * z1.conj()).scale(QQi("1/8"))
    p = PotentialJet(phi)
    g = metric_from_potential(p)
    assert g.is_hermitian()
    c = curvature_data(p)
    assert c.ricci.is_hermitian()


def test_kahler_symmetries_of_riemann():
    n, order = 2, 8
    z1 = BidegreeJet.coordinate(n, order, 1)
    z2 = BidegreeJet.coordinate(n, order, 2)
    cross = (z1 * z1 * z1.conj() * z2.conj()).scale(QQi("1/16"))
    phi = BidegreeJet.abs_squared(n, order) + cross + cross.conj()
    c = curvature_data(PotentialJet(phi))
    R = c.riemann
    for a in range(n):
        for b in range(n):
            for cc in range(n):
                for d in range(n):
                    # exchange of holomorphic slots
                    assert R[(a, b, cc, d)] == R[(cc, b, a, d)]
                    # exchange of antiholomorphic slots via conjugation symmetry
                    assert R[(a, b, cc, d)] == R[(b, a, d, cc)].conj()


def test_scalar_invariant_under_phase_rotation():
    # replacing z by (i z) leaves the scalar curvature value at 0 unchanged
    order = 8
    u = BidegreeJet.abs_squared(1, order)
    zz = BidegreeJet.coordinate(1, order, 1)
    extra = (zz * zz * zz.conj() * zz.conj() * zz).scale(QQi("1/32"))
    phi = u - (u * u).scale(QQi("1/7")) + extra + extra.conj()
    rho1 = curvature_data(PotentialJet(phi)).scalar.constant_term()
    rot = phi.compose_holomorphic([zz.scale(QQi(0, 1))])
    rho2 = curvature_data(PotentialJet(rot)).scalar.constant_term()
    assert rho1 == rho2


def test_det_g_flat_and_fs():
    assert curvature_data(flat_potential()).det_g == BidegreeJet.constant(1, 4, 1)
    c = curvature_data(fs_potential(order=8))
    # det g = (1+u)^{-2} = 1 - 2u + 3u^2 - ...
    assert c.det_g.coeff((1,), (1,)) == QQi(-2)
    assert c.det_g.coeff((2,), (2,)) == QQi(3)
