import math
from dataclasses import dataclass

import numpy as np

from errors import GimbalLock, InvalidElement, SingularJacobian
from Group.group_core import (
    EulerAngles,
    GalileanElement,
    chart_angles,
    chart_rotation,
    compose,
    elementary_rotation,
    wrap_angle,
)
from log import Logger

logger = Logger("MaurerCartan").get_logger()

CHART_DEGENERACY_TOL = 1e-8
COFRAME_RANK_CUTOFF = 1e-8
JACOBIAN_FD_STEP = 1e-6
ANGLE_SLOTS = (1, 2, 3)

COORDINATE_NAMES = ("s", "theta1", "theta2", "theta3", "v1", "v2", "v3", "y1", "y2", "y3")


@dataclass(frozen=True, eq=False)
class GroupPoint:
    """
    The ten chart coordinates (s, theta1, theta2, theta3, v, y) of SGal(3).

    The rotation of a point is chart_rotation(theta) = Rz(theta1) Ry(theta2) Rx(theta3).
    """
    s: float
    theta: EulerAngles
    v: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "v", np.array(self.v, dtype=float).reshape(3))
        object.__setattr__(self, "y", np.array(self.y, dtype=float).reshape(3))

    @classmethod
    def from_array(cls, coords):
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (10,):
            raise InvalidElement(f"a group point has 10 coordinates, got shape {coords.shape}")
        return cls(coords[0], EulerAngles(*coords[1:4]), coords[4:7], coords[7:10])

    @classmethod
    def from_element(cls, g, strict=False):
        return cls(g.s, chart_angles(g.R, strict=strict), g.v, g.y)

    def as_array(self):
        return np.concatenate([[self.s], self.theta.as_array(), self.v, self.y])

    def to_element(self):
        return GalileanElement(self.s, self.v, chart_rotation(self.theta), self.y)

    def is_degenerate(self, tol=CHART_DEGENERACY_TOL):
        return abs(math.cos(self.theta.theta2)) < tol


@dataclass(frozen=True, eq=False)
class GroupTangent:
    """Components (ds, dtheta1..3, dv1..3, dy1..3) of a tangent vector in the chart."""
    components: np.ndarray

    def __post_init__(self):
        comps = np.array(self.components, dtype=float)
        if comps.shape != (10,):
            raise InvalidElement(f"a group tangent has 10 components, got shape {comps.shape}")
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, ds=0.0, dtheta=(0.0, 0.0, 0.0), dv=(0.0, 0.0, 0.0), dy=(0.0, 0.0, 0.0)):
        return cls(np.concatenate([[ds], dtheta, dv, dy]))

    @classmethod
    def basis(cls, k):
        """Unit tangent along chart coordinate k (0-based, in COORDINATE_NAMES order)."""
        comps = np.zeros(10)
        comps[k] = 1.0
        return cls(comps)

    @property
    def ds(self):
        return self.components[0]

    @property
    def dtheta(self):
        return self.components[1:4]

    @property
    def dv(self):
        return self.components[4:7]

    @property
    def dy(self):
        return self.components[7:10]


@dataclass(frozen=True, eq=False)
class CoframeValue:
    """Values mu_1..mu_10 of the Maurer-Cartan forms on one tangent vector."""
    mu: np.ndarray

    def __getitem__(self, i):
        if not 1 <= i <= 10:
            raise IndexError(f"form index must be in 1..10, got {i}")
        return self.mu[i - 1]

    def max_abs_diff(self, other):
        return float(np.max(np.abs(self.mu - other.mu)))


def _trig(p):
    t = p.theta
    return (
        math.cos(t.theta1), math.sin(t.theta1),
        math.cos(t.theta2), math.sin(t.theta2),
        math.cos(t.theta3), math.sin(t.theta3),
    )


def coframe_matrix(p):
    """
    Coefficients of the ten forms at p: row i-1 holds mu_i in the basis
    (ds, dtheta1, dtheta2, dtheta3, dv1, dv2, dv3, dy1, dy2, dy3).

    Args:
        p (GroupPoint): Evaluation point.

    Returns:
        np.ndarray: Shape (10, 10).
    """
    c1, s1, c2, s2, c3, s3 = _trig(p)
    v1, v2, v3 = p.v
    M = np.zeros((10, 10))
    # mu1 = ds
    M[0, 0] = 1.0
    # rotation forms
    M[1, 1], M[1, 3] = s2, -1.0
    M[2, 1], M[2, 2] = c2 * c3, -s3
    M[3, 1], M[3, 2] = c2 * s3, c3
    # columns of the chart rotation
    col1 = np.array([c1 * c2, -s1 * c2, -s2])
    col2 = np.array([s1 * c3 - c1 * s2 * s3, c1 * c3 + s1 * s2 * s3, -c2 * s3])
    col3 = np.array([s1 * s3 + c1 * s2 * c3, c1 * s3 - s1 * s2 * c3, c2 * c3])
    v = np.array([v1, v2, v3])
    # mu5 = col1 . dv
    M[4, 4:7] = col1
    # mu6 = col1 . (v ds - dy)
    M[5, 0], M[5, 7:10] = col1 @ v, -col1
    # mu7 = -col3 . dv
    M[6, 4:7] = -col3
    # mu8 = -col2 . dv
    M[7, 4:7] = -col2
    # mu9 = col3 . (v ds - dy)
    M[8, 0], M[8, 7:10] = col3 @ v, -col3
    # mu10 = col2 . (v ds - dy)
    M[9, 0], M[9, 7:10] = col2 @ v, -col2
    return M


def tabulated_coframe_matrix(p):
    """
    The coframe with mu_6 and mu_10 exactly as tabulated: mu_6 misses its
    sin(theta2) dy3 term and mu_10 has the wrong ds part and repeats the dy part of mu_9.
    """
    c1, s1, c2, s2, c3, s3 = _trig(p)
    v1, v2, v3 = p.v
    M = coframe_matrix(p)
    M[5, 9] = 0.0
    M[9, 0] = (s1 * c3 - c1 * s2 * s3) * v1 + (c1 * c3 - s1 * s2 * s3) * v2 + c2 * s3 * v3
    M[9, 7:10] = [-(c1 * s2 * c3 + s1 * s3), s1 * s2 * c3 - c1 * s3, -c2 * c3]
    return M


def mc_eval(p, xi):
    """
    Evaluates the ten left-invariant Maurer-Cartan forms at p on xi from their closed forms.

    Args:
        p (GroupPoint): Evaluation point.
        xi (GroupTangent): Tangent vector at p.

    Returns:
        CoframeValue: mu_1(xi), ..., mu_10(xi).
    """
    return CoframeValue(coframe_matrix(p) @ xi.components)


def mc_eval_tabulated(p, xi):
    return CoframeValue(tabulated_coframe_matrix(p) @ xi.components)


def _action_map(z, coords):
    """The action (t, x) -> (t + s, R x + t v + y) written in chart coordinates."""
    g = GroupPoint.from_array(coords)
    R = chart_rotation(g.theta)
    return np.concatenate([[z[0] + g.s], R @ z[1:] + z[0] * g.v + g.y])


def _elementary_derivative(axis, angle):
    c, s = math.cos(angle), math.sin(angle)
    if axis == "z":
        return np.array([[-s, c, 0.0], [-c, -s, 0.0], [0.0, 0.0, 0.0]])
    if axis == "y":
        return np.array([[-s, 0.0, c], [0.0, 0.0, 0.0], [-c, 0.0, -s]])
    return np.array([[0.0, 0.0, 0.0], [0.0, -s, c], [0.0, -c, -s]])


def _rotation_partials(theta):
    Rz = elementary_rotation("z", theta.theta1)
    Ry = elementary_rotation("y", theta.theta2)
    Rx = elementary_rotation("x", theta.theta3)
    return (
        _elementary_derivative("z", theta.theta1) @ Ry @ Rx,
        Rz @ _elementary_derivative("y", theta.theta2) @ Rx,
        Rz @ Ry @ _elementary_derivative("x", theta.theta3),
    )


def _jacobians_analytic(z, p):
    R = chart_rotation(p.theta)
    H_z = np.zeros((4, 4))
    H_z[0, 0] = 1.0
    H_z[1:, 0] = p.v
    H_z[1:, 1:] = R
    H_g = np.zeros((4, 10))
    H_g[0, 0] = 1.0
    for k, dR in enumerate(_rotation_partials(p.theta)):
        H_g[1:, 1 + k] = dR @ z[1:]
    H_g[1:, 4:7] = z[0] * np.eye(3)
    H_g[1:, 7:10] = np.eye(3)
    return H_z, H_g


def _jacobians_fd(z, p, step=JACOBIAN_FD_STEP):
    coords = p.as_array()
    H_z = np.zeros((4, 4))
    for k in range(4):
        dz = np.zeros(4)
        dz[k] = step
        H_z[:, k] = (_action_map(z + dz, coords) - _action_map(z - dz, coords)) / (2.0 * step)
    H_g = np.zeros((4, 10))
    for k in range(10):
        dg = np.zeros(10)
        dg[k] = step
        H_g[:, k] = (_action_map(z, coords + dg) - _action_map(z, coords - dg)) / (2.0 * step)
    return H_z, H_g


def _pulled_back_field(z, p, xi, mode):
    H_z, H_g = _jacobians_analytic(z, p) if mode == "analytic" else _jacobians_fd(z, p)
    try:
        if np.linalg.cond(H_z) > 1e12:
            raise np.linalg.LinAlgError("ill-conditioned H_z")
        return np.linalg.solve(H_z, H_g @ xi.components)
    except np.linalg.LinAlgError as e:
        logger.error("H_z could not be inverted at %s: %s", p.as_array(), e)
        raise SingularJacobian(f"H_z is singular at the requested point: {e}") from e


def mc_eval_direct(p, xi, mode="analytic"):
    """
    Evaluates the Maurer-Cartan forms by the direct method.

    Builds F(z) = H_z^{-1} H_g xi for the coordinate form of the action, expands F in z exactly
    by evaluating it at z = 0 and at the four unit events (the action is affine in z), and reads
    off the coefficients of the generators.

    Args:
        p (GroupPoint): Evaluation point.
        xi (GroupTangent): Tangent vector at p.
        mode (str, optional): "analytic" or "finite-difference" Jacobians. Default is "analytic".

    Returns:
        CoframeValue: mu_1(xi), ..., mu_10(xi).

    Raises:
        SingularJacobian: If H_z cannot be inverted.
        ValueError: If mode is unknown.
    """
    if mode not in ("analytic", "finite-difference"):
        raise ValueError(f"unknown Jacobian mode {mode!r}")
    F0 = _pulled_back_field(np.zeros(4), p, xi, mode)
    coeff = []
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        coeff.append(_pulled_back_field(e, p, xi, mode) - F0)
    Ct, _, Cy, Cz = coeff
    mu = np.empty(10)
    mu[0] = F0[0]
    # x-coefficients give the columns of R^T dR
    mu[1] = Cy[3]
    mu[2] = Cy[1]
    mu[3] = Cz[1]
    mu[4] = Ct[1]
    mu[5] = -F0[1]
    mu[6] = -Ct[3]
    mu[7] = -Ct[2]
    mu[8] = -F0[3]
    mu[9] = -F0[2]
    return CoframeValue(mu)


def coframe_rank(p, cutoff=COFRAME_RANK_CUTOFF):
    """
    Numerical rank of [mu_i(d_j)] at p with relative singular-value cutoff.

    Returns:
        int: 10 away from the chart degeneracy cos(theta2) = 0.
    """
    sv = np.linalg.svd(coframe_matrix(p), compute_uv=False)
    rank = int(np.sum(sv > cutoff * sv[0]))
    if rank < 10:
        logger.warning("Coframe rank %d at theta2=%.6g (chart degeneracy).", rank, p.theta.theta2)
    return rank


def _chart_difference(a, b):
    d = a - b
    for k in ANGLE_SLOTS:
        d[k] = wrap_angle(d[k])
    return d


def left_invariance_residual(h, p, xi, fd_step=1e-5):
    """
    Measures how far the forms are from left-invariant under h.

    The pushforward dL_h(xi) is obtained by central differences of the chart coordinates of
    h * g(p +- fd_step xi); the residual is mu at h*p on that vector minus mu at p on xi.

    Args:
        h (GalileanElement): Left translation.
        p (GroupPoint): Base point.
        xi (GroupTangent): Tangent vector at p.
        fd_step (float, optional): Central-difference step. Default is 1e-5.

    Returns:
        np.ndarray: The ten residuals.

    Raises:
        GimbalLock: If p or h*p sits on the chart degeneracy.
    """
    if h.is_identity(tol=0.0):
        return np.zeros(10)
    q = GroupPoint.from_element(compose(h, p.to_element()))
    for point in (p, q):
        if point.is_degenerate():
            raise GimbalLock(f"chart degenerate at theta2 = {point.theta.theta2:.17g}")
    base = p.as_array()
    plus = GroupPoint.from_element(
        compose(h, GroupPoint.from_array(base + fd_step * xi.components).to_element())
    ).as_array()
    minus = GroupPoint.from_element(
        compose(h, GroupPoint.from_array(base - fd_step * xi.components).to_element())
    ).as_array()
    eta = GroupTangent(_chart_difference(plus, minus) / (2.0 * fd_step))
    return mc_eval(q, eta).mu - mc_eval(p, xi).mu


# Tabulated and corrected text of the two closed-form lines that disagree with the direct method.
TABULATED_LINES = {
    6: "mu6 = (c1c2 v1 - s1c2 v2 - s2 v3) ds - c1c2 dy1 + s1c2 dy2",
    10: "mu10 = ((s1c3 - c1s2s3) v1 + (c1c3 - s1s2s3) v2 + c2s3 v3) ds"
        " - (c1s2c3 + s1s3) dy1 + (s1s2c3 - c1s3) dy2 - c2c3 dy3",
}
CORRECTED_LINES = {
    6: "mu6 = (c1c2 v1 - s1c2 v2 - s2 v3) ds - c1c2 dy1 + s1c2 dy2 + s2 dy3",
    10: "mu10 = ((s1c3 - c1s2s3) v1 + (c1c3 + s1s2s3) v2 - c2s3 v3) ds"
        " - (s1c3 - c1s2s3) dy1 - (c1c3 + s1s2s3) dy2 + c2s3 dy3",
}


def random_point(rng, scale=1.0, theta2_margin=0.1):
    """A random chart point with theta2 kept theta2_margin away from +-pi/2."""
    half = math.pi / 2.0 - theta2_margin
    theta = EulerAngles(
        rng.uniform(-math.pi, math.pi), rng.uniform(-half, half), rng.uniform(-math.pi, math.pi)
    )
    return GroupPoint(rng.uniform(-scale, scale), theta, rng.uniform(-scale, scale, 3),
                      rng.uniform(-scale, scale, 3))


def random_tangent(rng, scale=1.0):
    return GroupTangent(rng.uniform(-scale, scale, 10))


def tabulated_discrepancies(n_points=100, seed=0, tol=1e-8):
    """
    Compares each tabulated closed-form line with the direct method at random points.

    Args:
        n_points (int, optional): Number of random (point, tangent) pairs. Default is 100.
        seed (int, optional): Seed of the draws. Default is 0.
        tol (float, optional): Agreement tolerance. Default is 1e-8.

    Returns:
        list: One dict per form with keys "form", "max_residual", "agrees" and, for lines that
            fail, "tabulated" and "corrected".
    """
    rng = np.random.default_rng(seed)
    worst = np.zeros(10)
    for _ in range(n_points):
        p, xi = random_point(rng), random_tangent(rng)
        diff = np.abs(mc_eval_tabulated(p, xi).mu - mc_eval_direct(p, xi).mu)
        worst = np.maximum(worst, diff)
    report = []
    for i, residual in enumerate(worst, start=1):
        entry = {"form": i, "max_residual": float(residual), "agrees": bool(residual < tol)}
        if not entry["agrees"]:
            entry["tabulated"] = TABULATED_LINES.get(i, "")
            entry["corrected"] = CORRECTED_LINES.get(i, "")
            logger.info("Closed form mu%d disagrees with the direct method (%.3g).", i, residual)
        report.append(entry)
    return report
