import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from errors import (
    AmbiguousShift,
    DegenerateAcceleration,
    DegenerateFrame,
    DegenerateTorsion,
    NoRegularWindow,
    OffGrid,
)
from Group.group_core import GalileanElement, compose, inverse
from MovingFrame.motions import STENCIL_WIDTHS, SampledMotion, grid_derivative
from MovingFrame.moving_frame import TOL_A, TOL_B, frame
from log import Logger

DEFAULT_TOL = 1e-6
ANALYTIC_SAMPLES = 201
MAX_SHIFT_GRID = 2001
MIN_SHIFT_GRID = 401
# coarse shift-grid points per window length for exact motions
SHIFT_GRID_DENSITY = 50
# initial search reach, in window lengths, when the second motion has an unbounded domain
UNBOUNDED_REACH = 4.0
MAX_WIDENINGS = 6
MIN_REGULAR = 3
# fraction of the regular window that must stay inside the second motion's domain
MIN_OVERLAP = 0.5
FLAT_TOL = 1e-8
SAMPLED_TOL_FACTOR = 100.0


@dataclass
class Signature:
    """
    Invariant curves of a motion on a time grid.

    a3 is NaN where a2 <= tol_b; boundary marks jets estimated with one-sided stencils.
    """
    ts: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    da1: np.ndarray
    regular_mask: np.ndarray
    boundary: np.ndarray

    def rows(self):
        return np.column_stack([self.a1, self.a2, self.a3, self.da1])

    @property
    def usable(self):
        return self.regular_mask & ~self.boundary


@dataclass
class EquivalenceReport:
    equivalent: bool
    time_shift: float
    transform: Optional[GalileanElement]
    max_signature_residual: float
    max_pointwise_residual: float
    ambiguous_shift: bool = False
    anchor: Optional[float] = None
    tol: float = DEFAULT_TOL
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {
            "equivalent": self.equivalent,
            "time_shift": self.time_shift,
            "transform": self.transform.to_dict() if self.transform is not None else None,
            "max_signature_residual": self.max_signature_residual,
            "max_pointwise_residual": self.max_pointwise_residual,
            "ambiguous_shift": self.ambiguous_shift,
            "anchor": self.anchor,
            "tol": self.tol,
            "warnings": list(self.warnings),
        }


def _boundary_mask(m, ts):
    if not isinstance(m, SampledMotion):
        return np.zeros(len(ts), dtype=bool)
    k = np.clip(np.searchsorted(m.ts, ts), 0, len(m.ts) - 1)
    k_prev = np.clip(k - 1, 0, len(m.ts) - 1)
    nearest = np.where(np.abs(m.ts[k_prev] - ts) < np.abs(m.ts[k] - ts), k_prev, k)
    return m.boundary_mask[nearest]


def reliable_domain(m):
    """Time interval where jets of m are interior estimates (the whole domain for exact motions)."""
    if isinstance(m, SampledMotion):
        inner = m.ts[~m.boundary_mask]
        if len(inner) == 0:
            raise NoRegularWindow("the sampled motion has no interior jets")
        return float(inner[0]), float(inner[-1])
    return m.domain


def signature(m, ts, tol_a=TOL_A, tol_b=TOL_B):
    """
    Samples the invariant signature (a1, a2, a3, da1/dt) of a motion.

    For exact motions da1 uses J_{3,2} / a1 (zero where a1 vanishes); for sampled motions it is the
    first-derivative stencil of the motion's scheme applied to a1 over the grid, with J_{3,2} / a1
    kept for grids narrower than that stencil. Irregular samples are masked, not fatal.

    Args:
        m (Motion): The motion.
        ts (np.ndarray): Times inside the motion domain.
        tol_a (float, optional): Acceleration threshold. Default is 1e-9.
        tol_b (float, optional): Torsion threshold. Default is 1e-9.

    Returns:
        Signature: The sampled invariants.
    """
    ts = np.asarray(ts, dtype=float)
    D = m.derivatives(ts)
    x2, x3, x4 = D[:, 2], D[:, 3], D[:, 4]
    b = np.cross(x2, x3)
    a1 = np.linalg.norm(x2, axis=1)
    a2 = np.linalg.norm(b, axis=1)
    a3 = np.where(a2 > tol_b, np.sum(b * x4, axis=1), np.nan)
    scheme = m.scheme or "central4"
    if m.exact or len(ts) < STENCIL_WIDTHS[scheme][1]:
        J32 = np.sum(x2 * x3, axis=1)
        da1 = np.divide(J32, a1, out=np.zeros_like(a1), where=a1 > 0)
    else:
        da1 = grid_derivative(ts, a1, scheme)
    regular = (a1 > tol_a) & (a2 > tol_b)
    return Signature(ts, a1, a2, a3, da1, regular, _boundary_mask(m, ts))


def recover_transformation(m1, m2, s, t0, tol_a=TOL_A, tol_b=TOL_B):
    """
    The candidate g = rho2(t0 + s) * rho1(t0)^{-1} from the moving frames at an anchor.

    Args:
        m1 (Motion): First motion.
        m2 (Motion): Second motion.
        s (float): Time shift.
        t0 (float): Anchor time on m1.

    Returns:
        GalileanElement: The candidate transformation.

    Raises:
        DegenerateFrame: If either frame is undefined at its anchor.
    """
    try:
        rho1 = frame(m1.jet(t0), tol_a, tol_b).rho
        rho2 = frame(m2.jet(t0 + s), tol_a, tol_b).rho
    except (DegenerateAcceleration, DegenerateTorsion) as e:
        raise DegenerateFrame(f"no regular frame at anchor t0 = {t0:.17g}: {e}") from e
    return compose(rho2, inverse(rho1))


class EquivalenceTester:
    def __init__(self, tol=DEFAULT_TOL, tol_a=TOL_A, tol_b=TOL_B, shift_grid=None,
                 samples=ANALYTIC_SAMPLES, max_shift=None, strict_shift=False):
        """
        Decides Galilean equivalence of two motions from their signatures and moving frames.

        Args:
            tol (float, optional): Pointwise verification tolerance. Default is 1e-6.
            tol_a (float, optional): Acceleration threshold. Default is 1e-9.
            tol_b (float, optional): Torsion threshold. Default is 1e-9.
            shift_grid (int, optional): Coarse shift-grid size; derived from the sampling when None.
            samples (int, optional): Samples per window for exact motions. Default is 201.
            max_shift (float, optional): Largest |s| searched when the second motion has an
                unbounded domain. When None the search starts at four window lengths and widens
                while the optimum sits on the edge of the range.
            strict_shift (bool, optional): Raise AmbiguousShift instead of scanning the grid when
                a1 is flat over the window. Default is False.
        """
        self.logger = Logger(self.__class__.__name__).get_logger()
        self.tol = tol
        self.tol_a = tol_a
        self.tol_b = tol_b
        self.shift_grid = shift_grid
        self.samples = samples
        self.max_shift = max_shift
        self.strict_shift = strict_shift

    def _window_grid(self, m1, window):
        lo, hi = m1.domain if window is None else window
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
            raise NoRegularWindow(f"a finite window is needed, got [{lo}, {hi}]")
        if isinstance(m1, SampledMotion):
            ts = m1.ts[(m1.ts >= lo) & (m1.ts <= hi)]
        else:
            ts = np.linspace(lo, hi, self.samples)
        return ts

    def _shift_range(self, t_a, t_b, m2, widenings=0):
        """Shift search interval and whether each of its ends may still be pushed outwards."""
        L = t_b - t_a
        lo2, hi2 = reliable_domain(m2)
        s_lo = lo2 - t_b + MIN_OVERLAP * L
        s_hi = hi2 - t_a - MIN_OVERLAP * L
        reach = self.max_shift if self.max_shift is not None else UNBOUNDED_REACH * L * 2 ** widenings
        open_lo = not math.isfinite(s_lo)
        open_hi = not math.isfinite(s_hi)
        s_lo = -reach if open_lo else s_lo
        s_hi = reach if open_hi else s_hi
        if s_hi < s_lo:
            raise NoRegularWindow("the motions do not overlap in time for any shift")
        return s_lo, s_hi, open_lo, open_hi

    def _grid_size(self, m1, m2, s_lo, s_hi, L):
        if self.shift_grid:
            return int(self.shift_grid)
        steps = [m.step for m in (m1, m2) if isinstance(m, SampledMotion)]
        if steps:
            return int(min(MAX_SHIFT_GRID, max(3, math.ceil((s_hi - s_lo) / min(steps)) + 1)))
        n = math.ceil(SHIFT_GRID_DENSITY * (s_hi - s_lo) / L) + 1
        return int(min(MAX_SHIFT_GRID, max(MIN_SHIFT_GRID, n)))

    def _coarse_search(self, m1, m2, ts, a1_ref):
        """Mismatch of a1 over the shift grid, widening open ends that hold the optimum."""
        L = ts[-1] - ts[0]
        widenings = 0
        while True:
            s_lo, s_hi, open_lo, open_hi = self._shift_range(ts[0], ts[-1], m2, widenings)
            grid = np.linspace(s_lo, s_hi, self._grid_size(m1, m2, s_lo, s_hi, L))
            values = np.array([self._mismatch(m2, ts, a1_ref, s) for s in grid])
            if not np.any(np.isfinite(values)):
                raise NoRegularWindow("no shift leaves enough samples inside the second motion")
            k = int(np.argmin(values))
            on_open_edge = (k == 0 and open_lo) or (k == len(grid) - 1 and open_hi)
            if not on_open_edge:
                return grid, values, None
            if self.max_shift is not None or widenings == MAX_WIDENINGS:
                msg = (f"the time-shift optimum lies on the edge of the search range "
                       f"[{s_lo:.6g}, {s_hi:.6g}]; the true shift may be outside it")
                return grid, values, msg
            widenings += 1
            self.logger.debug("Shift optimum on the range edge; widening to %.6g.",
                              UNBOUNDED_REACH * L * 2 ** widenings)

    @staticmethod
    def _inside(m2, ts, s):
        lo2, hi2 = reliable_domain(m2)
        return (ts + s >= lo2) & (ts + s <= hi2)

    def _a1(self, m, ts):
        return np.linalg.norm(m.derivatives(ts, order=2)[:, 2], axis=1)

    def _mismatch(self, m2, ts, a1_ref, s):
        inside = self._inside(m2, ts, s)
        if inside.sum() < MIN_REGULAR:
            return math.inf
        return float(np.mean((self._a1(m2, ts[inside] + s) - a1_ref[inside]) ** 2))

    def _jet_error(self, *motions):
        errors = [max(m.error_estimate()[k] for k in (1, 2, 3)) for m in motions if isinstance(m, SampledMotion)]
        return max(errors) if errors else 0.0

    def _pointwise_residual(self, m1, m2, g, ts, s):
        inside = self._inside(m2, ts, s)
        ts = ts[inside]
        x1 = m1.positions(ts)
        x2 = m2.positions(ts + s)
        predicted = x1 @ g.R.T + ts[:, None] * g.v + g.y
        return float(np.max(np.linalg.norm(x2 - predicted, axis=1)))

    def _signature_residual(self, sig1, m2, ts, s):
        inside = self._inside(m2, ts, s)
        sig2 = signature(m2, ts[inside] + s, self.tol_a, self.tol_b)
        r1 = sig1.rows()[inside]
        r2 = sig2.rows()
        rel = np.abs(r2 - r1) / (1.0 + np.abs(r1))
        return float(np.nanmax(rel)) if np.any(np.isfinite(rel)) else 0.0

    def _anchor(self, sig1, ts, m2, s, anchor):
        if anchor is not None:
            return float(anchor)
        inside = self._inside(m2, ts, s)
        a2 = np.where(inside, sig1.a2, -np.inf)
        return float(ts[int(np.argmax(a2))])

    def _refine(self, m2, ts, a1_ref, grid, values):
        k = int(np.argmin(values))
        center = float(grid[k])
        lo, hi = grid[max(k - 1, 0)] - center, grid[min(k + 1, len(grid) - 1)] - center
        if hi <= lo:
            return center
        # searched as an offset from the grid point; the bounded tolerance scales with |x|
        result = minimize_scalar(
            lambda u: self._mismatch(m2, ts, a1_ref, center + u),
            bounds=(lo, hi), method="bounded", options={"xatol": 1e-12},
        )
        if result.fun <= values[k]:
            return center + float(result.x)
        return center

    def _verify(self, m1, m2, sig1, ts, s, anchor):
        t0 = self._anchor(sig1, ts, m2, s, anchor)
        g = recover_transformation(m1, m2, s, t0, self.tol_a, self.tol_b)
        return g, t0, self._pointwise_residual(m1, m2, g, ts, s)

    def test(self, m1, m2, window=None, anchor=None):
        """
        Tests whether m2 is the image of m1 under some element of SGal(3).

        Estimates the time shift from the a1 curves (coarse grid then bounded Brent refinement),
        recovers the transformation from the moving frames at an anchor and confirms it
        pointwise over the window. Flat a1 makes the shift non-identifiable: every grid shift,
        and s = 0, is then tried in the pointwise check.

        Args:
            m1 (Motion): First motion.
            m2 (Motion): Second motion.
            window (tuple, optional): Time interval on m1; defaults to the domain of m1.
            anchor (float, optional): Anchor time on m1 for the frame quotient.

        Returns:
            EquivalenceReport: Verdict, shift, transform and residuals.

        Raises:
            NoRegularWindow: If fewer than three regular samples remain or no shift overlaps.
            DegenerateFrame: If an explicit anchor is not regular.
            AmbiguousShift: If strict_shift is set and a1 is flat over the window.
        """
        ts = self._window_grid(m1, window)
        sig1 = signature(m1, ts, self.tol_a, self.tol_b)
        usable = sig1.usable
        if usable.sum() < MIN_REGULAR:
            self.logger.error("Only %d regular samples in the window.", int(usable.sum()))
            raise NoRegularWindow(f"only {int(usable.sum())} regular samples in the window")
        ts = ts[usable]
        sig1 = signature(m1, ts, self.tol_a, self.tol_b)
        sig1.boundary = np.zeros(len(ts), dtype=bool)

        err = self._jet_error(m1, m2)
        tol = self.tol
        if err > 0:
            scale = 1.0 + float(np.max(np.abs(m1.positions(ts))))
            tol = max(self.tol, SAMPLED_TOL_FACTOR * err * scale * (1.0 + ts[-1] - ts[0]))
        warnings = []

        flat_tol = max(FLAT_TOL, SAMPLED_TOL_FACTOR * err) * (1.0 + float(np.mean(sig1.a1)))
        ambiguous = float(np.ptp(sig1.a1)) <= flat_tol
        if ambiguous:
            msg = "a1 is constant over the window; the time shift is not identifiable from the signature"
            if self.strict_shift:
                self.logger.error(msg)
                raise AmbiguousShift(msg)
            self.logger.warning(msg)
            warnings.append(msg)
            s_lo, s_hi, _, _ = self._shift_range(ts[0], ts[-1], m2)
            grid = np.linspace(s_lo, s_hi, self._grid_size(m1, m2, s_lo, s_hi, ts[-1] - ts[0]))
            candidates = np.concatenate([[0.0], grid]) if s_lo <= 0.0 <= s_hi else grid
        else:
            grid, values, edge_msg = self._coarse_search(m1, m2, ts, sig1.a1)
            if edge_msg:
                self.logger.warning(edge_msg)
                warnings.append(edge_msg)
            candidates = [self._refine(m2, ts, sig1.a1, grid, values)]

        best = None
        for s in candidates:
            if self._inside(m2, ts, s).sum() < MIN_REGULAR:
                continue
            try:
                g, t0, residual = self._verify(m1, m2, sig1, ts, float(s), anchor)
            except (DegenerateFrame, OffGrid) as e:
                if anchor is not None and len(candidates) == 1:
                    raise
                self.logger.debug("Shift %.6g skipped: %s", s, e)
                continue
            if best is None or residual < best[3]:
                best = (float(s), g, t0, residual)
            if ambiguous and residual <= tol:
                break
        if best is None:
            raise NoRegularWindow("no candidate shift admits a regular anchor")

        s, g, t0, residual = best
        sig_res = self._signature_residual(sig1, m2, ts, s)
        equivalent = residual <= tol
        self.logger.info("Shift %.9g, pointwise residual %.3g (tol %.3g): %s", s, residual, tol,
                         "equivalent" if equivalent else "not equivalent")
        return EquivalenceReport(
            equivalent=equivalent,
            time_shift=s,
            transform=g if equivalent else None,
            max_signature_residual=sig_res,
            max_pointwise_residual=residual,
            ambiguous_shift=ambiguous,
            anchor=t0,
            tol=tol,
            warnings=warnings,
        )


def test_equivalence(m1, m2, window=None, tol=DEFAULT_TOL, **kwargs):
    """Functional form of EquivalenceTester.test; extra keyword arguments configure the tester."""
    anchor = kwargs.pop("anchor", None)
    return EquivalenceTester(tol=tol, **kwargs).test(m1, m2, window=window, anchor=anchor)


test_equivalence.__test__ = False
