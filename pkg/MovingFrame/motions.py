import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline
from scipy.signal import savgol_filter
from scipy.special import factorial

from errors import (
    GridTooSmall,
    InvalidOrder,
    NonMonotoneGrid,
    NonUniformGrid,
    OffGrid,
    TrajectoryFormatError,
)
from log import Logger

logger = Logger("Motions").get_logger()

JET_ORDER = 4
SCHEMES = ("central2", "central4")
# stencil width per derivative order
STENCIL_WIDTHS = {
    "central2": {1: 3, 2: 3, 3: 5, 4: 5},
    "central4": {1: 5, 2: 5, 3: 7, 4: 7},
}
MIN_SAMPLES = {"central2": 5, "central4": 9}
UNIFORM_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class Jet4:
    """
    A point of the fourth jet space: time plus position and its first four time derivatives.

    Attributes:
        t (float): Time.
        x, x1, x2, x3, x4 (np.ndarray): Position and derivatives d^n x / dt^n, each shape (3,).
        boundary (bool): Set for jets estimated with one-sided stencils near the ends of a grid.
    """
    t: float
    x: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray
    x4: np.ndarray
    boundary: bool = False

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        for name in ("x", "x1", "x2", "x3", "x4"):
            arr = np.array(getattr(self, name), dtype=float).reshape(3)
            if not np.all(np.isfinite(arr)):
                raise TrajectoryFormatError(f"jet component {name} at t={self.t} is not finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_derivatives(cls, t, derivs, boundary=False):
        derivs = np.asarray(derivs, dtype=float)
        return cls(t, derivs[0], derivs[1], derivs[2], derivs[3], derivs[4], boundary=boundary)

    @property
    def derivs(self):
        return np.stack([self.x, self.x1, self.x2, self.x3, self.x4])

    def max_abs_diff(self, other):
        return max(abs(self.t - other.t), float(np.max(np.abs(self.derivs - other.derivs))))

    def allclose(self, other, tol=1e-12):
        return self.max_abs_diff(other) <= tol


def stencil_weights(offsets, order):
    """
    Finite-difference weights for the order-th derivative on dimensionless offsets.

    Solves the Vandermonde system sum_j w_j u_j^i = i! [i == order] for i < len(offsets).

    Args:
        offsets (np.ndarray): Sample offsets from the evaluation point in units of the step.
        order (int): Derivative order.

    Returns:
        np.ndarray: One weight per offset.
    """
    offsets = np.asarray(offsets, dtype=float)
    n = len(offsets)
    A = np.vander(offsets, n, increasing=True).T
    b = np.zeros(n)
    b[order] = factorial(order)
    return np.linalg.solve(A, b)


def validate_grid(ts, xs):
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if ts.ndim != 1 or xs.shape != (len(ts), 3):
        raise TrajectoryFormatError(f"expected {len(ts)} positions of shape (n, 3), got {xs.shape}")
    if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(xs))):
        raise TrajectoryFormatError("samples contain non-finite values")
    if len(ts) > 1 and np.any(np.diff(ts) <= 0):
        k = int(np.argmax(np.diff(ts) <= 0)) + 1
        logger.error("Sample times are not strictly increasing at index %d.", k)
        raise NonMonotoneGrid(f"sample times are not strictly increasing at index {k}")
    return ts, xs


def uniform_step(ts):
    """Common spacing of a uniform grid, or None when the spacing varies."""
    steps = np.diff(ts)
    h = float(np.mean(steps))
    if np.max(np.abs(steps - h)) <= UNIFORM_RTOL * h:
        return h
    return None


def _window(k, n, width):
    half = width // 2
    start = min(max(k - half, 0), n - width)
    boundary = start != k - half
    return start, boundary


def _stencil_derivative(ts, values, order, width, cache):
    n = len(ts)
    out = np.zeros_like(values, dtype=float)
    boundary = np.zeros(n, dtype=bool)
    for k in range(n):
        start, at_edge = _window(k, n, width)
        window = slice(start, start + width)
        h = (ts[start + width - 1] - ts[start]) / (width - 1)
        offsets = (ts[window] - ts[k]) / h
        key = (order, tuple(np.round(offsets, 9)))
        weights = cache.get(key)
        if weights is None:
            weights = stencil_weights(offsets, order)
            cache[key] = weights
        out[k] = weights @ values[window] / h ** order
        boundary[k] = at_edge
    return out, boundary


def grid_derivative(ts, values, scheme="central4", order=1):
    """
    Derivative of gridded values with the stencil a scheme uses for that order.

    Args:
        ts (np.ndarray): Strictly increasing times, shape (n,).
        values (np.ndarray): Samples, shape (n,) or (n, d).
        scheme (str, optional): "central2" or "central4". Default is "central4".
        order (int, optional): Derivative order, 1..4. Default is 1.

    Returns:
        np.ndarray: The derivative at every time, same shape as values.

    Raises:
        GridTooSmall: If the grid is narrower than the stencil.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown differentiation scheme {scheme!r}")
    width = STENCIL_WIDTHS[scheme][order]
    ts = np.asarray(ts, dtype=float)
    if len(ts) < width:
        raise GridTooSmall(f"{scheme} order {order} needs {width} samples, got {len(ts)}")
    out, _ = _stencil_derivative(ts, np.asarray(values, dtype=float), order, width, {})
    return out


def _finite_difference_derivatives(ts, xs, scheme):
    n = len(ts)
    derivs = np.zeros((n, JET_ORDER + 1, 3))
    derivs[:, 0] = xs
    boundary = np.zeros(n, dtype=bool)
    cache = {}
    for order in range(1, JET_ORDER + 1):
        derivs[:, order], at_edge = _stencil_derivative(ts, xs, order, STENCIL_WIDTHS[scheme][order], cache)
        boundary |= at_edge
    return derivs, boundary


def _smoothed_derivatives(ts, xs, window, degree):
    h = uniform_step(ts)
    if h is None:
        logger.error("Smoothing requested on a non-uniform grid.")
        raise NonUniformGrid("smoothing needs a uniformly spaced grid")
    if degree < JET_ORDER:
        raise InvalidOrder(f"smoothing degree must be at least {JET_ORDER}, got {degree}")
    if window % 2 == 0 or window < degree + 1:
        raise InvalidOrder(f"smoothing window must be odd and at least degree+1, got {window}")
    if window > len(ts):
        raise GridTooSmall(f"smoothing window {window} exceeds the {len(ts)} samples")
    derivs = np.stack(
        [savgol_filter(xs, window, degree, deriv=k, delta=h, axis=0, mode="interp")
         for k in range(JET_ORDER + 1)],
        axis=1,
    )
    boundary = np.zeros(len(ts), dtype=bool)
    boundary[: window // 2] = True
    boundary[len(ts) - window // 2:] = True
    return derivs, boundary


def jets_from_samples(ts, xs, scheme="central4", smooth_window=None, smooth_degree=4):
    """
    Estimates fourth-order jets from position samples.

    Interior samples use centered stencils of the chosen accuracy; samples too close to either end
    use one-sided stencils of the same width and are flagged as boundary jets. With smooth_window
    set, derivatives come from a local least-squares polynomial of smooth_degree instead.

    Args:
        ts (np.ndarray): Strictly increasing sample times, shape (n,).
        xs (np.ndarray): Positions, shape (n, 3).
        scheme (str, optional): "central2" or "central4". Default is "central4".
        smooth_window (int, optional): Odd smoothing window; None disables smoothing.
        smooth_degree (int, optional): Degree of the smoothing polynomial. Default is 4.

    Returns:
        list: One Jet4 per sample.

    Raises:
        GridTooSmall: If there are too few samples for the scheme.
        NonMonotoneGrid: If the times are not strictly increasing.
        NonUniformGrid: If smoothing is requested on a non-uniform grid.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown differentiation scheme {scheme!r}")
    ts, xs = validate_grid(ts, xs)
    if len(ts) < MIN_SAMPLES[scheme]:
        logger.error("%d samples are too few for %s.", len(ts), scheme)
        raise GridTooSmall(f"{scheme} needs at least {MIN_SAMPLES[scheme]} samples, got {len(ts)}")
    if smooth_window:
        derivs, boundary = _smoothed_derivatives(ts, xs, smooth_window, smooth_degree)
    else:
        derivs, boundary = _finite_difference_derivatives(ts, xs, scheme)
    logger.debug("Estimated %d jets (%d boundary) with %s.", len(ts), int(boundary.sum()), scheme)
    return [Jet4.from_derivatives(t, d, bool(b)) for t, d, b in zip(ts, derivs, boundary)]


class TrigPolySeries:
    def __init__(self, poly_coeffs=(0.0,), waves=()):
        """
        A scalar function p(t) + sum_k A_k cos(w_k t + phi_k) with closed-form derivatives.

        Args:
            poly_coeffs (sequence, optional): Polynomial coefficients, lowest degree first.
            waves (sequence, optional): (amplitude, angular frequency, phase) triples.
        """
        self.poly = Polynomial(poly_coeffs)
        self.waves = [tuple(float(c) for c in w) for w in waves]

    def derivative(self, ts, n=0):
        ts = np.asarray(ts, dtype=float)
        out = self.poly.deriv(n)(ts) if n else self.poly(ts)
        out = np.broadcast_to(out, ts.shape).astype(float)
        for amplitude, omega, phase in self.waves:
            out = out + amplitude * omega ** n * np.cos(omega * ts + phase + n * math.pi / 2.0)
        return out


class Motion(ABC):
    """A motion t -> x(t) that can hand out jets."""
    exact = False
    max_order = JET_ORDER
    scheme = None

    @property
    @abstractmethod
    def domain(self):
        """Closed time interval (t_min, t_max) on which the motion is defined."""

    @abstractmethod
    def derivatives(self, ts, order=JET_ORDER):
        """Array of shape (len(ts), order + 1, 3) with x and its derivatives at each time."""

    def jet(self, t):
        return Jet4.from_derivatives(t, self.derivatives([t])[0])

    def jets(self, ts):
        return [Jet4.from_derivatives(t, d) for t, d in zip(ts, self.derivatives(ts))]

    def positions(self, ts):
        return self.derivatives(ts, order=0)[:, 0]

    def _check_domain(self, ts):
        lo, hi = self.domain
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        span = max(hi - lo, 1.0) if np.isfinite(hi - lo) else 1.0
        slack = 1e-12 * span
        if np.any(ts < lo - slack) or np.any(ts > hi + slack):
            raise OffGrid(f"times outside the motion domain [{lo}, {hi}]")
        return np.clip(ts, lo, hi)

    def _check_order(self, order):
        if not 0 <= order <= self.max_order:
            raise InvalidOrder(f"derivative order must be in 0..{self.max_order}, got {order}")


class AnalyticMotion(Motion):
    exact = True
    max_order = 8

    def __init__(self, components, domain=(-math.inf, math.inf)):
        """
        A motion with three closed-form coordinate functions.

        Args:
            components (sequence): Three TrigPolySeries for x, y and z.
            domain (tuple, optional): Time interval. Defaults to the whole line.
        """
        if len(components) != 3:
            raise ValueError("an analytic motion needs three components")
        self.components = list(components)
        self._domain = (float(domain[0]), float(domain[1]))

    @property
    def domain(self):
        return self._domain

    def derivatives(self, ts, order=JET_ORDER):
        self._check_order(order)
        ts = self._check_domain(ts)
        return np.stack(
            [np.stack([c.derivative(ts, n) for c in self.components], axis=-1) for n in range(order + 1)],
            axis=1,
        )

    @classmethod
    def circle(cls, radius=1.0, omega=1.0, phase=0.0, center=(0.0, 0.0, 0.0)):
        """Uniform circular motion in the xy-plane: center + r (cos(wt + phi), sin(wt + phi), 0)."""
        cx, cy, cz = center
        return cls([
            TrigPolySeries((cx,), [(radius, omega, phase)]),
            TrigPolySeries((cy,), [(radius, omega, phase - math.pi / 2.0)]),
            TrigPolySeries((cz,)),
        ])

    @classmethod
    def helix_like(cls, radius=1.0, omega=1.0, pitch=0.2, ellipticity=0.5, drift=0.05):
        """
        Elliptic helix with a cubic vertical drift; its acceleration norm is not periodic, so the
        time shift between copies is identifiable.
        """
        return cls([
            TrigPolySeries((0.0,), [(radius, omega, 0.0)]),
            TrigPolySeries((0.0,), [(radius * ellipticity, omega, -math.pi / 2.0)]),
            TrigPolySeries((0.0, pitch, 0.0, drift)),
        ])

    @classmethod
    def polynomial(cls, coeffs):
        """Polynomial motion; coeffs has one row of lowest-degree-first coefficients per axis."""
        return cls([TrigPolySeries(row) for row in coeffs])

    @classmethod
    def random_polynomial(cls, rng, degree=5, scale=1.0):
        coeffs = rng.uniform(-scale, scale, (3, degree + 1))
        coeffs[:, 1:] /= factorial(np.arange(1, degree + 1))
        return cls.polynomial(coeffs)


class TransformedMotion(Motion):
    def __init__(self, base, g):
        """
        The image g . m of a motion: tau -> R x(tau) + tau v + y shown at time tau + s.

        Args:
            base (Motion): The original motion.
            g (GalileanElement): The transformation.
        """
        self.base = base
        self.g = g
        self.exact = base.exact
        self.scheme = base.scheme
        self.max_order = base.max_order

    @property
    def domain(self):
        lo, hi = self.base.domain
        return lo + self.g.s, hi + self.g.s

    def derivatives(self, ts, order=JET_ORDER):
        self._check_order(order)
        ts = self._check_domain(ts)
        tau = ts - self.g.s
        D = self.base.derivatives(tau, order)
        out = D @ self.g.R.T
        out[:, 0] += tau[:, None] * self.g.v + self.g.y
        if order >= 1:
            out[:, 1] += self.g.v
        return out


class SampledMotion(Motion):
    def __init__(self, ts, xs, scheme="central4", smooth_window=None, smooth_degree=4):
        """
        A motion known only at grid samples.

        Node jets come from jets_from_samples; between nodes each derivative is interpolated
        with a cubic spline through the node values.

        Args:
            ts (np.ndarray): Strictly increasing times.
            xs (np.ndarray): Positions, shape (n, 3).
            scheme (str, optional): Differentiation scheme. Default is "central4".
            smooth_window (int, optional): Savitzky-Golay window; None disables smoothing.
            smooth_degree (int, optional): Smoothing polynomial degree. Default is 4.
        """
        self.logger = Logger(self.__class__.__name__).get_logger()
        self.scheme = scheme
        self.smooth_window = smooth_window
        self.smooth_degree = smooth_degree
        self.node_jets = jets_from_samples(ts, xs, scheme, smooth_window, smooth_degree)
        self.ts = np.array([j.t for j in self.node_jets])
        self.xs = np.asarray(xs, dtype=float)
        self.node_derivs = np.stack([j.derivs for j in self.node_jets])
        self.boundary_mask = np.array([j.boundary for j in self.node_jets])
        self._splines = [CubicSpline(self.ts, self.node_derivs[:, k]) for k in range(JET_ORDER + 1)]
        self._error_estimate = None

    @classmethod
    def from_motion(cls, motion, ts, **kwargs):
        return cls(ts, motion.positions(ts), **kwargs)

    @property
    def domain(self):
        return float(self.ts[0]), float(self.ts[-1])

    @property
    def step(self):
        return float(np.mean(np.diff(self.ts)))

    def derivatives(self, ts, order=JET_ORDER):
        self._check_order(order)
        ts = self._check_domain(ts)
        out = np.empty((len(ts), order + 1, 3))
        idx = np.searchsorted(self.ts, ts)
        on_node = (idx < len(self.ts)) & np.isclose(self.ts[np.minimum(idx, len(self.ts) - 1)], ts, rtol=0.0, atol=1e-12)
        for k in range(order + 1):
            out[:, k] = self._splines[k](ts)
            out[on_node, k] = self.node_derivs[idx[on_node], k]
        return out

    def jet(self, t):
        j = super().jet(t)
        k = int(np.argmin(np.abs(self.ts - t)))
        if self.boundary_mask[k]:
            return Jet4.from_derivatives(j.t, j.derivs, boundary=True)
        return j

    def error_estimate(self):
        """
        Per-order error estimate: the largest interior difference between the second- and
        fourth-order schemes.

        Returns:
            dict: Derivative order (1..4) to estimated absolute error.
        """
        if self._error_estimate is None:
            if len(self.ts) < MIN_SAMPLES["central4"]:
                raise GridTooSmall("an error estimate needs enough samples for both schemes")
            coarse, _ = _finite_difference_derivatives(self.ts, self.xs, "central2")
            fine, boundary = _finite_difference_derivatives(self.ts, self.xs, "central4")
            interior = ~boundary
            if not np.any(interior):
                interior = np.ones(len(self.ts), dtype=bool)
            self._error_estimate = {
                k: float(np.max(np.abs(coarse[interior, k] - fine[interior, k])))
                for k in range(1, JET_ORDER + 1)
            }
            self.logger.debug("Jet error estimate: %s", self._error_estimate)
        return self._error_estimate
