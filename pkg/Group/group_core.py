import math
from dataclasses import dataclass

import numpy as np

from errors import InvalidElement, GimbalLock
from log import Logger

logger = Logger("GroupCore").get_logger()

DEFAULT_TOL = 1e-12
GIMBAL_TOL = 1e-10
# construction guard; much looser than DEFAULT_TOL so long products still validate
ROTATION_GUARD = 1e-8


def _frozen_array(value, shape, name):
    arr = np.array(value, dtype=float)
    if arr.shape != shape:
        raise InvalidElement(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidElement(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


def wrap_angle(angle):
    """Wraps an angle into (-pi, pi]."""
    return -((-angle + math.pi) % (2.0 * math.pi) - math.pi)


def is_rotation(R, tol=DEFAULT_TOL):
    """
    Checks the Rotation invariants: R^T R = I and det R = +1.

    Args:
        R (np.ndarray): A 3x3 matrix.
        tol (float, optional): Absolute tolerance. Default is 1e-12.

    Returns:
        bool: True if R is special orthogonal within tol.
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    return bool(np.max(np.abs(R.T @ R - np.eye(3))) <= tol and abs(np.linalg.det(R) - 1.0) <= tol)


@dataclass(frozen=True)
class EulerAngles:
    """Angles (radians) of the Euler-angle rotation; theta2 is the middle (y-axis) angle."""
    theta1: float
    theta2: float
    theta3: float
    gimbal_lock: bool = False

    def as_array(self):
        return np.array([self.theta1, self.theta2, self.theta3])


@dataclass(frozen=True, eq=False)
class Event:
    """A spacetime event (t, x); the homogeneous coordinate is implicitly 1."""
    t: float
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", _frozen_array(self.x, (3,), "x"))

    def allclose(self, other, tol=DEFAULT_TOL):
        return abs(self.t - other.t) <= tol and bool(np.max(np.abs(self.x - other.x)) <= tol)


@dataclass(frozen=True, eq=False)
class GalileanElement:
    """
    An element (s, v, R, y) of SGal(3).

    Attributes:
        s (float): Time shift.
        v (np.ndarray): Boost velocity, shape (3,).
        R (np.ndarray): Rotation in SO(3), shape (3, 3).
        y (np.ndarray): Spatial translation, shape (3,).
    """
    s: float
    v: np.ndarray
    R: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.s):
            raise InvalidElement("time shift s is not finite")
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "v", _frozen_array(self.v, (3,), "v"))
        object.__setattr__(self, "R", _frozen_array(self.R, (3, 3), "R"))
        object.__setattr__(self, "y", _frozen_array(self.y, (3,), "y"))
        if not is_rotation(self.R, ROTATION_GUARD):
            raise InvalidElement("R is not a special orthogonal matrix")

    @classmethod
    def identity(cls):
        return cls(0.0, np.zeros(3), np.eye(3), np.zeros(3))

    def max_abs_diff(self, other):
        """Largest componentwise difference over (s, v, R, y)."""
        return max(
            abs(self.s - other.s),
            float(np.max(np.abs(self.v - other.v))),
            float(np.max(np.abs(self.R - other.R))),
            float(np.max(np.abs(self.y - other.y))),
        )

    def allclose(self, other, tol=DEFAULT_TOL):
        return self.max_abs_diff(other) <= tol

    def is_identity(self, tol=0.0):
        return self.allclose(GalileanElement.identity(), tol)

    def to_dict(self):
        return {
            "s": self.s,
            "v": self.v.tolist(),
            "R": self.R.tolist(),
            "y": self.y.tolist(),
        }


def compose(g1, g2):
    """
    Group product g1 * g2.

    Args:
        g1 (GalileanElement): Left factor.
        g2 (GalileanElement): Right factor.

    Returns:
        GalileanElement: (s1+s2, v1 + R1 v2, R1 R2, y1 + s2 v1 + R1 y2).
    """
    return GalileanElement(
        g1.s + g2.s,
        g1.v + g1.R @ g2.v,
        g1.R @ g2.R,
        g1.y + g2.s * g1.v + g1.R @ g2.y,
    )


def inverse(g):
    """
    Group inverse.

    Args:
        g (GalileanElement): The element to invert.

    Returns:
        GalileanElement: (-s, -R^T v, R^T, R^T (s v - y)).
    """
    Rt = g.R.T
    return GalileanElement(-g.s, -Rt @ g.v, Rt, Rt @ (g.s * g.v - g.y))


def act(g, event):
    """
    Action of SGal(3) on spacetime: (t, x) -> (t + s, R x + t v + y).

    Args:
        g (GalileanElement): The transformation.
        event (Event): The event to move.

    Returns:
        Event: The transformed event.
    """
    return Event(event.t + g.s, g.R @ event.x + event.t * g.v + g.y)


def elementary_rotation(axis, angle):
    """
    One of the three elementary factors of the Euler-angle rotation.

    The factors use the sign pattern [[c, s], [-s, c]] in the plane they rotate.

    Args:
        axis (str): "x", "y" or "z".
        angle (float): Rotation angle in radians.

    Returns:
        np.ndarray: The 3x3 factor.

    Raises:
        InvalidElement: If axis is not one of x, y, z.
    """
    c, s = math.cos(angle), math.sin(angle)
    if axis == "z":
        return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    if axis == "y":
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    if axis == "x":
        return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])
    raise InvalidElement(f"unknown rotation axis {axis!r}")


def rotation_from_euler(a):
    """
    Rotation matrix of Euler angles, the product Rz(theta3) Ry(theta2) Rx(theta1) of the
    elementary factors written out entry by entry.

    Args:
        a (EulerAngles): The angles.

    Returns:
        np.ndarray: A 3x3 special orthogonal matrix.
    """
    c1, s1 = math.cos(a.theta1), math.sin(a.theta1)
    c2, s2 = math.cos(a.theta2), math.sin(a.theta2)
    c3, s3 = math.cos(a.theta3), math.sin(a.theta3)
    return np.array([
        [c2 * c3, c1 * s3 - s1 * s2 * c3, s1 * s3 + c1 * s2 * c3],
        [-c2 * s3, c1 * c3 + s1 * s2 * s3, s1 * c3 - c1 * s2 * s3],
        [-s2, -s1 * c2, c1 * c2],
    ])


def euler_from_rotation(R, tol=GIMBAL_TOL, strict=False):
    """
    Inverse of rotation_from_euler on the canonical branch.

    theta2 = arcsin(-R31) lies in [-pi/2, pi/2]; theta1 and theta3 come from two-argument
    arctangents and lie in (-pi, pi]. At gimbal lock (|R31| = 1 within tol) theta1 is fixed to 0,
    the remaining freedom is folded into theta3 and the result is flagged.

    Args:
        R (np.ndarray): A rotation matrix.
        tol (float, optional): Gimbal-lock detection tolerance. Default is 1e-10.
        strict (bool, optional): Raise GimbalLock instead of returning a flagged result.

    Returns:
        EulerAngles: The angles, with gimbal_lock set at the degenerate branch.

    Raises:
        GimbalLock: If strict and the chart is degenerate.
    """
    R = np.asarray(R, dtype=float)
    r31 = R[2, 0]
    if abs(abs(r31) - 1.0) <= tol:
        if strict:
            raise GimbalLock(f"gimbal lock: R31 = {r31:.17g}")
        logger.warning("Gimbal lock (R31=%.3g); theta1 fixed to 0.", r31)
        theta2 = math.copysign(math.pi / 2.0, -r31)
        theta3 = math.atan2(R[0, 1], R[1, 1])
        return EulerAngles(0.0, theta2, wrap_angle(theta3), gimbal_lock=True)
    theta2 = math.asin(float(np.clip(-r31, -1.0, 1.0)))
    theta1 = math.atan2(-R[2, 1], R[2, 2])
    theta3 = math.atan2(-R[1, 0], R[0, 0])
    return EulerAngles(wrap_angle(theta1), theta2, wrap_angle(theta3))


def chart_rotation(a):
    """
    Rotation of the group coordinate chart: Rz(theta1) Ry(theta2) Rx(theta3).

    The coordinate formulas of the action (and hence the Maurer-Cartan forms and the
    normalized angles) use the angles in the opposite roles to rotation_from_euler.
    """
    return rotation_from_euler(EulerAngles(a.theta3, a.theta2, a.theta1))


def chart_angles(R, tol=GIMBAL_TOL, strict=False):
    """Chart twin of euler_from_rotation; at gimbal lock theta3 is fixed to 0 instead."""
    e = euler_from_rotation(R, tol=tol, strict=strict)
    return EulerAngles(e.theta3, e.theta2, e.theta1, gimbal_lock=e.gimbal_lock)


def decompose(g):
    """
    Splits g into a rotation, a boost and an origin shift with g = g3 * g4 * g2.

    Args:
        g (GalileanElement): The element to split.

    Returns:
        tuple: (g3, g4, g2) with g3 in G3 = (0, 0, R, 0), g4 in G4 = (0, v', I, 0) and
            g2 in G2 = (s, 0, I, y').
    """
    Rt = g.R.T
    zero = np.zeros(3)
    g3 = GalileanElement(0.0, zero, g.R, zero)
    g4 = GalileanElement(0.0, Rt @ g.v, np.eye(3), zero)
    g2 = GalileanElement(g.s, zero, np.eye(3), Rt @ (g.y - g.s * g.v))
    return g3, g4, g2


def embed_matrix(g):
    """
    The 5x5 matrix [[1, 0, s], [v, R, y], [0, 0, 1]] acting on columns [t, x, 1].

    Args:
        g (GalileanElement): The element.

    Returns:
        np.ndarray: The 5x5 representation.
    """
    M = np.eye(5)
    M[0, 4] = g.s
    M[1:4, 0] = g.v
    M[1:4, 1:4] = g.R
    M[1:4, 4] = g.y
    return M


def element_from_matrix(M, tol=1e-9):
    """
    Reads a GalileanElement back from its 5x5 representation.

    Raises:
        InvalidElement: If M does not have the block pattern of the representation.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (5, 5):
        raise InvalidElement(f"expected a 5x5 matrix, got {M.shape}")
    pattern = np.concatenate([M[0, :4] - np.array([1.0, 0.0, 0.0, 0.0]), M[4, :] - np.array([0.0, 0.0, 0.0, 0.0, 1.0])])
    if np.max(np.abs(pattern)) > tol:
        raise InvalidElement("matrix does not have the Galilean block pattern")
    return GalileanElement(M[0, 4], M[1:4, 0], M[1:4, 1:4], M[1:4, 4])


def random_element(seed=None, scales=(1.0, 1.0, 1.0)):
    """
    Draws a random group element for property tests and fixtures.

    Args:
        seed (int or np.random.Generator, optional): Seed or generator; a Generator is used as is.
        scales (tuple, optional): (time, velocity, length) scales of s, v and y. Default (1, 1, 1).

    Returns:
        GalileanElement: s, v, y uniform in [-scale, scale]; the rotation is built from uniform
            Euler angles on the canonical branch.

    Raises:
        InvalidElement: If a scale is not positive.
    """
    if len(scales) != 3 or min(scales) <= 0:
        raise InvalidElement(f"scales must be three positive numbers, got {scales}")
    rng = np.random.default_rng(seed)
    s = rng.uniform(-1.0, 1.0) * scales[0]
    v = rng.uniform(-1.0, 1.0, 3) * scales[1]
    y = rng.uniform(-1.0, 1.0, 3) * scales[2]
    angles = EulerAngles(
        rng.uniform(-math.pi, math.pi),
        rng.uniform(-math.pi / 2.0, math.pi / 2.0),
        rng.uniform(-math.pi, math.pi),
    )
    return GalileanElement(s, v, rotation_from_euler(angles), y)
