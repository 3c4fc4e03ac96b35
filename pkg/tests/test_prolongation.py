import math

import numpy as np
import pytest

from errors import InvalidOrder
from Group.group_core import GalileanElement, compose, random_element
from MovingFrame.motions import AnalyticMotion, Jet4
from Prolongation.prolongation import (
    InvariantKind,
    JetN,
    completeness_check,
    gram_determinant,
    invariant_family,
    orbit_dimension,
    prolong_action,
)


def random_jet(rng, order=4):
    return JetN(rng.uniform(-1, 1), rng.normal(size=(order + 1, 3)))


def test_orbit_dimensions_on_a_generic_jet(rng):
    j = random_jet(rng)
    reports = [orbit_dimension(n, j) for n in range(5)]
    assert [r.s_n for r in reports] == [4, 7, 9, 10, 10]
    assert [r.i_n for r in reports] == [0, 0, 1, 3, 6]
    assert all(r.well_separated for r in reports)


def test_orbit_dimensions_over_many_jets(rng):
    for _ in range(10):
        j = random_jet(rng)
        assert orbit_dimension(3, j).s_n == 10
        assert orbit_dimension(2, j).i_n == 1


def test_orbit_dimension_accepts_jet4(rng):
    j = Jet4.from_derivatives(0.2, rng.normal(size=(5, 3)))
    assert orbit_dimension(4, j).to_dict() == {"n": 4, "s_n": 10, "i_n": 6, "well_separated": True}


def test_prolonged_action_is_a_group_action(rng):
    for _ in range(20):
        g1, g2 = random_element(rng), random_element(rng)
        j = random_jet(rng, order=6)
        lhs = prolong_action(compose(g1, g2), j)
        rhs = prolong_action(g1, prolong_action(g2, j))
        assert lhs.allclose(rhs, 1e-11)
    j = random_jet(rng)
    assert prolong_action(GalileanElement.identity(), j).allclose(j, 0.0)


def test_boost_example():
    boost = GalileanElement(0.0, [1.0, 0.0, 0.0], np.eye(3), np.zeros(3))
    j = JetN(2.0, np.zeros((5, 3)))
    moved = prolong_action(boost, j)
    assert moved.t == 2.0
    assert np.array_equal(moved.derivs[0], [2.0, 0.0, 0.0])
    assert np.array_equal(moved.derivs[1], [1.0, 0.0, 0.0])
    assert not np.any(moved.derivs[2:])


def test_jet_shape_rules(rng):
    with pytest.raises(InvalidOrder):
        JetN(0.0, np.zeros((10, 3)))
    j = random_jet(rng, order=6)
    assert j.dimension == 22 and j.coordinates().shape == (22,)
    assert j.truncate(2).order == 2
    with pytest.raises(InvalidOrder):
        j.truncate(7)
    with pytest.raises(InvalidOrder):
        j.truncate(3).to_jet4()
    assert np.array_equal(j.to_jet4().derivs, j.derivs[:5])


def test_invariant_kind_parsing():
    kind = InvariantKind.parse(" K( 3, 2 )")
    assert kind == InvariantKind("K", (3, 2))
    assert str(kind) == "K(3,2)"
    for bad in ("Q(2)", "I(1)", "L(2,3,4)", "J(3)", "I2"):
        with pytest.raises(InvalidOrder):
            InvariantKind.parse(bad)


def test_family_values_and_lagrange_identity(rng):
    for _ in range(20):
        j = random_jet(rng, order=5)
        d = j.derivs
        assert invariant_family(j, "I(4)") == pytest.approx(np.linalg.norm(d[4]))
        assert invariant_family(j, "J(3,5)") == pytest.approx(d[3] @ d[5])
        K = invariant_family(j, "K(3,2)")
        I2, I3 = invariant_family(j, "I(2)"), invariant_family(j, "I(3)")
        J = invariant_family(j, "J(3,2)")
        assert K ** 2 == pytest.approx(I3 ** 2 * I2 ** 2 - J ** 2, rel=1e-9, abs=1e-12)
        L = invariant_family(j, "L(5,3,2)")
        assert L ** 2 == pytest.approx(gram_determinant(j, (5, 3, 2)), rel=1e-8, abs=1e-12)


def test_family_members_are_invariant(rng):
    kinds = ["I(2)", "I(5)", "J(4,2)", "K(3,2)", "L(4,3,2)"]
    for _ in range(20):
        j, g = random_jet(rng, order=5), random_element(rng)
        moved = prolong_action(g, j)
        for kind in kinds:
            a, b = invariant_family(j, kind), invariant_family(moved, kind)
            assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_family_rejects_orders_above_the_jet(rng):
    with pytest.raises(InvalidOrder):
        invariant_family(random_jet(rng), "I(5)")


def test_completeness_on_a_circle(circle):
    report = completeness_check(circle, 0.3)
    assert report.I2 == pytest.approx(1.0) and report.I3 == pytest.approx(1.0)
    assert abs(report.J32) < 1e-14
    assert report.K32 == pytest.approx(1.0)
    assert report.residual < 1e-8
    assert report.a2_mismatch
    assert abs(report.alt_a3) < 1e-14


def test_completeness_on_a_uniformly_accelerated_line():
    line = AnalyticMotion.polynomial([[0.0, 0.0, 0.5], [0.0], [0.0]])
    report = completeness_check(line, 1.0)
    assert report.I2 == pytest.approx(1.0)
    assert report.K32 == 0.0 and report.J32 == 0.0
    assert math.isnan(report.alt_a3)
    assert not report.a2_mismatch


def test_completeness_on_polynomials(rng):
    for _ in range(5):
        m = AnalyticMotion.random_polynomial(rng, degree=6)
        for t in (-0.4, 0.0, 0.7):
            report = completeness_check(m, t)
            assert report.residual < 1e-6
            assert set(report.to_dict()) >= {"I2", "I3", "J32", "K32", "alt_a2", "alt_a3"}
