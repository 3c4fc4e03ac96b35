import math

import numpy as np
import pytest

from errors import GimbalLock, InvalidElement
from Group.group_core import (
    EulerAngles,
    Event,
    GalileanElement,
    act,
    chart_angles,
    chart_rotation,
    compose,
    decompose,
    elementary_rotation,
    element_from_matrix,
    embed_matrix,
    euler_from_rotation,
    inverse,
    is_rotation,
    random_element,
    rotation_from_euler,
)

E = GalileanElement.identity()


def test_compose_matches_worked_example():
    g1 = GalileanElement(1.0, [1, 0, 0], np.eye(3), [0, 0, 0])
    g2 = GalileanElement(2.0, [0, 0, 0], np.eye(3), [0, 1, 0])
    g = compose(g1, g2)
    assert g.s == 3.0
    assert np.allclose(g.v, [1, 0, 0])
    assert np.allclose(g.y, [2, 1, 0])
    assert np.allclose(embed_matrix(g), embed_matrix(g1) @ embed_matrix(g2), atol=1e-12)


def test_identity_and_inverse_axioms(rng):
    for _ in range(20):
        g = random_element(rng)
        assert compose(E, g).allclose(g)
        assert compose(g, E).allclose(g)
        assert compose(g, inverse(g)).allclose(E)
        assert compose(inverse(g), g).allclose(E)


def test_inverse_of_pure_translation():
    g = GalileanElement(1.0, np.zeros(3), np.eye(3), [1, 0, 0])
    h = inverse(g)
    assert h.s == -1.0
    assert np.allclose(h.y, [-1, 0, 0])
    assert inverse(E).allclose(E)


def test_inverse_matches_matrix_inverse(rng):
    for _ in range(100):
        g = random_element(rng, scales=(2.0, 3.0, 5.0))
        assert np.max(np.abs(embed_matrix(inverse(g)) - np.linalg.inv(embed_matrix(g)))) < 1e-12


def test_compose_is_matrix_product(rng):
    for _ in range(100):
        g1, g2 = random_element(rng), random_element(rng)
        diff = embed_matrix(compose(g1, g2)) - embed_matrix(g1) @ embed_matrix(g2)
        assert np.max(np.abs(diff)) < 1e-12


def test_associativity(rng):
    for _ in range(50):
        g1, g2, g3 = (random_element(rng) for _ in range(3))
        left = compose(compose(g1, g2), g3)
        right = compose(g1, compose(g2, g3))
        assert left.max_abs_diff(right) < 1e-11


def test_action_examples_and_compatibility(rng):
    ev = Event(0.5, [1.0, 2.0, 3.0])
    assert act(E, ev).allclose(ev)
    shifted = act(GalileanElement(1.0, np.zeros(3), np.eye(3), np.zeros(3)), Event(0.0, np.zeros(3)))
    assert shifted.t == 1.0 and np.allclose(shifted.x, 0.0)
    for _ in range(100):
        g1, g2 = random_element(rng), random_element(rng)
        ev = Event(rng.uniform(-1, 1), rng.uniform(-1, 1, 3))
        assert act(compose(g1, g2), ev).allclose(act(g1, act(g2, ev)), 1e-12)


def test_embed_matrix_layout():
    assert np.array_equal(embed_matrix(E), np.eye(5))
    M = embed_matrix(GalileanElement(1.0, np.zeros(3), np.eye(3), np.zeros(3)))
    expected = np.eye(5)
    expected[0, 4] = 1.0
    assert np.array_equal(M, expected)


def test_element_from_matrix_round_trip_and_rejects_bad_pattern(rng):
    g = random_element(rng)
    assert element_from_matrix(embed_matrix(g)).allclose(g)
    M = embed_matrix(g)
    M[0, 1] = 0.3
    with pytest.raises(InvalidElement):
        element_from_matrix(M)


def test_rotation_from_euler_examples():
    assert np.allclose(rotation_from_euler(EulerAngles(0, 0, 0)), np.eye(3))
    R = rotation_from_euler(EulerAngles(0.0, 0.0, math.pi / 2))
    assert np.allclose(R, [[0, 1, 0], [-1, 0, 0], [0, 0, 1]], atol=1e-15)


def test_rotation_from_euler_is_product_of_factors(rng):
    for _ in range(50):
        t1, t2, t3 = rng.uniform(-math.pi, math.pi, 3)
        product = elementary_rotation("z", t3) @ elementary_rotation("y", t2) @ elementary_rotation("x", t1)
        assert np.max(np.abs(rotation_from_euler(EulerAngles(t1, t2, t3)) - product)) < 1e-14


def test_euler_round_trip():
    angles = euler_from_rotation(rotation_from_euler(EulerAngles(0.3, -0.2, 1.1)))
    assert angles.gimbal_lock is False
    assert np.allclose(angles.as_array(), [0.3, -0.2, 1.1], atol=1e-10)
    assert np.allclose(euler_from_rotation(np.eye(3)).as_array(), 0.0)


def test_euler_round_trip_random(rng):
    for _ in range(100):
        R = random_element(rng).R
        a = euler_from_rotation(R)
        assert -math.pi < a.theta1 <= math.pi and -math.pi < a.theta3 <= math.pi
        assert -math.pi / 2 <= a.theta2 <= math.pi / 2
        assert np.max(np.abs(rotation_from_euler(a) - R)) < 1e-10


def test_gimbal_lock_is_flagged_and_optionally_raised():
    R = rotation_from_euler(EulerAngles(0.4, math.pi / 2, -0.7))
    assert abs(R[2, 0] + 1.0) < 1e-15
    a = euler_from_rotation(R)
    assert a.gimbal_lock
    assert a.theta1 == 0.0
    assert np.max(np.abs(rotation_from_euler(a) - R)) < 1e-10
    with pytest.raises(GimbalLock):
        euler_from_rotation(R, strict=True)


def test_chart_swaps_angle_roles(rng):
    for _ in range(20):
        a = EulerAngles(*rng.uniform(-1.2, 1.2, 3))
        R = chart_rotation(a)
        expected = elementary_rotation("z", a.theta1) @ elementary_rotation("y", a.theta2) @ elementary_rotation("x", a.theta3)
        assert np.allclose(R, expected, atol=1e-14)
        assert np.allclose(chart_angles(R).as_array(), a.as_array(), atol=1e-10)


def test_decompose_factors(rng):
    g3, g4, g2 = decompose(E)
    assert all(f.allclose(E) for f in (g3, g4, g2))
    boost = GalileanElement(0.0, [0.3, -0.1, 2.0], np.eye(3), np.zeros(3))
    g3, g4, g2 = decompose(boost)
    assert g3.allclose(E) and g4.allclose(boost) and g2.allclose(E)
    for _ in range(100):
        g = random_element(rng)
        g3, g4, g2 = decompose(g)
        assert g3.s == 0 and not np.any(g3.v) and not np.any(g3.y)
        assert g4.s == 0 and np.array_equal(g4.R, np.eye(3)) and not np.any(g4.y)
        assert not np.any(g2.v) and np.array_equal(g2.R, np.eye(3))
        assert compose(g3, compose(g4, g2)).max_abs_diff(g) < 1e-12


def test_origin_shifts_are_normal(rng):
    for _ in range(50):
        g = random_element(rng)
        h = GalileanElement(rng.uniform(-1, 1), np.zeros(3), np.eye(3), rng.uniform(-1, 1, 3))
        c = compose(compose(g, h), inverse(g))
        assert np.max(np.abs(c.v)) < 1e-10
        assert np.max(np.abs(c.R - np.eye(3))) < 1e-10


def test_rotation_invariants_survive_products(rng):
    g = random_element(rng)
    for _ in range(30):
        g = compose(g, random_element(rng))
    assert is_rotation(g.R, 1e-12)
    assert is_rotation(inverse(g).R, 1e-12)


def test_random_element_is_reproducible():
    draws = [random_element(7) for _ in range(3)]
    assert all(d.allclose(draws[0], 0.0) for d in draws)
    assert not random_element(8).allclose(draws[0])
    with pytest.raises(InvalidElement):
        random_element(1, scales=(1.0, 0.0, 1.0))


def test_invalid_element_is_rejected():
    with pytest.raises(InvalidElement):
        GalileanElement(0.0, np.zeros(3), np.diag([1.0, 1.0, -1.0]), np.zeros(3))
    with pytest.raises(InvalidElement):
        GalileanElement(0.0, np.zeros(2), np.eye(3), np.zeros(3))
