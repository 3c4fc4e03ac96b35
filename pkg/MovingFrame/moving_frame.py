import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import DegenerateAcceleration, DegenerateTorsion, InvalidOrder
from Group.group_core import (
    EulerAngles,
    GalileanElement,
    chart_angles,
    chart_rotation,
    inverse,
    wrap_angle,
)
from Prolongation.prolongation import prolong_action
from log import Logger

logger = Logger("MovingFrame").get_logger()

TOL_A = 1e-9
TOL_B = 1e-9
# a2 below this multiple of tol_b is computed but flagged as ill-conditioned
CONDITIONING_FACTOR = 1e3
CHART_DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class InvariantsAtPoint:
    """
    Differential invariants of a jet.

    a3 and Jcurv are None when a2 <= tol_b.
    """
    t: float
    a1: float
    a2: float
    a3: Optional[float]
    Jcurv: Optional[float]
    regular: bool
    ill_conditioned: bool = False

    def to_dict(self):
        return {
            "t": self.t, "a1": self.a1, "a2": self.a2, "a3": self.a3, "Jcurv": self.Jcurv,
            "regular": self.regular, "ill_conditioned": self.ill_conditioned,
        }


@dataclass(frozen=True)
class FrameResult:
    rho: GalileanElement
    angles: EulerAngles
    regular: bool
    ill_conditioned: bool = False


@dataclass(frozen=True)
class CoframeDependencies:
    """Coefficients of the final horizontal third-order coframe."""
    a: float
    a2_over_a1_squared: float
    Jcurv: Optional[float]


def _check_acceleration(j, tol_a):
    a = float(np.linalg.norm(j.x2))
    if a <= tol_a:
        logger.error("Degenerate acceleration at t=%.6g (|x_tt|=%.3g).", j.t, a)
        raise DegenerateAcceleration(f"|x_tt| = {a:.3g} <= tol_a = {tol_a:.3g} at t = {j.t:.17g}")
    return a


def _check_torsion(j, tol_b):
    b = np.cross(j.x2, j.x3)
    K = float(np.linalg.norm(b))
    if K <= tol_b:
        logger.error("Degenerate torsion at t=%.6g (|x_tt x x_ttt|=%.3g).", j.t, K)
        raise DegenerateTorsion(f"x_tt and x_ttt are parallel at t = {j.t:.17g} (|x_tt x x_ttt| = {K:.3g})")
    if K < CONDITIONING_FACTOR * tol_b:
        logger.warning("Near-degenerate torsion at t=%.6g; frame vectors e2, e3 are ill-conditioned.", j.t)
    return b, K


def frame_rotation(j, tol_a=TOL_A, tol_b=TOL_B):
    """
    Rotation with columns e1 = x_tt/|x_tt|, e2 = (x_tt x x_ttt)/|x_tt x x_ttt| and e3 = e1 x e2.

    Raises:
        DegenerateAcceleration: If |x_tt| <= tol_a.
        DegenerateTorsion: If |x_tt x x_ttt| <= tol_b.
    """
    a = _check_acceleration(j, tol_a)
    b, K = _check_torsion(j, tol_b)
    e1 = j.x2 / a
    e2 = b / K
    e3 = np.cross(j.x2, b) / (a * K)
    return np.column_stack([e1, e2, e3])


def normalize_angles(j, tol_a=TOL_A, tol_b=TOL_B):
    """
    Euler angles of the normalization that carries x_tt to (|x_tt|, 0, 0).

    theta1 = -atan2(x2'', x1''), theta2 = -arcsin(x3''/a) and theta3 comes from the two-argument
    arctangent of a (x1''' x2'' - x2''' x1'') over -[(x1''^2 + x2''^2) x3''' - (x1'' x1''' + x2'' x2''') x3''].
    The chart rotation of the result is the frame rotation. On the chart degeneracy
    (x_tt along the z-axis) the angles are read off the frame and flagged.

    Args:
        j (Jet4): A jet with |x_tt| > tol_a and |x_tt x x_ttt| > tol_b.
        tol_a (float, optional): Acceleration threshold. Default is 1e-9.
        tol_b (float, optional): Torsion threshold. Default is 1e-9.

    Returns:
        EulerAngles: Angles in (-pi, pi] for theta1, theta3 and [-pi/2, pi/2] for theta2.

    Raises:
        DegenerateAcceleration: If |x_tt| <= tol_a.
        DegenerateTorsion: If x_tt and x_ttt are parallel.
    """
    a = _check_acceleration(j, tol_a)
    _check_torsion(j, tol_b)
    x1, x2, x3 = j.x2
    y1, y2, y3 = j.x3
    if math.hypot(x1, x2) / a < CHART_DEGENERACY_TOL:
        logger.warning("Normalized angles hit the chart degeneracy at t=%.6g.", j.t)
        return chart_angles(frame_rotation(j, tol_a, tol_b))
    theta1 = wrap_angle(-math.atan2(x2, x1))
    theta2 = -math.asin(float(np.clip(x3 / a, -1.0, 1.0)))
    numerator = a * (y1 * x2 - y2 * x1)
    denominator = -((x1 ** 2 + x2 ** 2) * y3 - (x1 * y1 + x2 * y2) * x3)
    theta3 = wrap_angle(math.atan2(numerator, denominator))
    return EulerAngles(theta1, theta2, theta3)


def frame(j, tol_a=TOL_A, tol_b=TOL_B):
    """
    The third-order moving frame rho(j) = (t, x_t, [e1 e2 e3], x).

    It satisfies rho . (0, 0) = (t, x) and frame(g . j) = g * frame(j).

    Args:
        j (Jet4): A regular jet.
        tol_a (float, optional): Acceleration threshold. Default is 1e-9.
        tol_b (float, optional): Torsion threshold. Default is 1e-9.

    Returns:
        FrameResult: The lift, its angles and flags.

    Raises:
        DegenerateAcceleration: If |x_tt| <= tol_a.
        DegenerateTorsion: If x_tt and x_ttt are parallel.
    """
    R = frame_rotation(j, tol_a, tol_b)
    angles = normalize_angles(j, tol_a, tol_b)
    K = float(np.linalg.norm(np.cross(j.x2, j.x3)))
    rho = GalileanElement(j.t, j.x1, R, j.x)
    return FrameResult(rho, angles, True, K < CONDITIONING_FACTOR * tol_b)


def invariants(j, tol_a=TOL_A, tol_b=TOL_B):
    """
    a1 = |x_tt|, a2 = |x_tt x x_ttt|, a3 = (x_tt x x_ttt) . x_tttt and Jcurv = a1 a3 / a2^2.

    Degeneracies never raise: a3 and Jcurv are left out when a2 <= tol_b and the regular
    flag is cleared.

    Args:
        j (Jet4): The jet.
        tol_a (float, optional): Acceleration threshold. Default is 1e-9.
        tol_b (float, optional): Torsion threshold. Default is 1e-9.

    Returns:
        InvariantsAtPoint: The invariants at j.t.
    """
    b = np.cross(j.x2, j.x3)
    a1 = float(np.linalg.norm(j.x2))
    a2 = float(np.linalg.norm(b))
    regular = a1 > tol_a and a2 > tol_b
    if a2 <= tol_b:
        return InvariantsAtPoint(j.t, a1, a2, None, None, False)
    a3 = float(b @ j.x4)
    ill = a2 < CONDITIONING_FACTOR * tol_b
    if ill:
        logger.warning("Near-degenerate torsion at t=%.6g; a3 and Jcurv are ill-conditioned.", j.t)
    return InvariantsAtPoint(j.t, a1, a2, a3, a1 * a3 / a2 ** 2, regular, ill)


def compatible_lift(order, j, v=None, angles=None, tol_a=TOL_A, tol_b=TOL_B):
    """
    Compatible lift of the given order; every lift sends the base event (0, 0) to (t, x).

    Order 0 leaves boost and angles free, order 1 normalizes the boost to x_t and order 3 is
    the moving frame.

    Args:
        order (int): 0, 1 or 3.
        j (Jet4): The jet.
        v (np.ndarray, optional): Free boost for order 0. Defaults to zero.
        angles (EulerAngles, optional): Free chart angles for orders 0 and 1. Default zero.

    Returns:
        GalileanElement: The lift.

    Raises:
        InvalidOrder: For orders other than 0, 1 and 3.
    """
    if order == 3:
        return frame(j, tol_a, tol_b).rho
    if order not in (0, 1):
        raise InvalidOrder(f"compatible lifts are available for orders 0, 1 and 3, got {order}")
    R = chart_rotation(angles or EulerAngles(0.0, 0.0, 0.0))
    if order == 1:
        boost = j.x1
    else:
        boost = np.zeros(3) if v is None else np.asarray(v, dtype=float)
    return GalileanElement(j.t, boost, R, j.x)


def normalized_jet(j, tol_a=TOL_A, tol_b=TOL_B):
    """
    The jet moved by the inverse frame: t = 0, x = 0, x_t = 0, x_tt = (a1, 0, 0), x_ttt has
    no e2 component and x_tttt has e2 component a3 / a2.
    """
    return prolong_action(inverse(frame(j, tol_a, tol_b).rho), j)


def coframe_dependencies(j, tol_a=TOL_A, tol_b=TOL_B):
    a1 = _check_acceleration(j, tol_a)
    inv = invariants(j, tol_a, tol_b)
    return CoframeDependencies(a1, inv.a2 / a1 ** 2, inv.Jcurv)
