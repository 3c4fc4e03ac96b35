import re
from dataclasses import dataclass, field

import numpy as np

from errors import InvalidOrder
from Group.lie_algebra import DIM, AlgebraVector, one_parameter_subgroup
from MovingFrame.motions import Jet4
from log import Logger

logger = Logger("Prolongation").get_logger()

MAX_ORDER = 8
ORBIT_FD_STEP = 1e-5
RANK_CUTOFF = 1e-7


@dataclass(frozen=True, eq=False)
class JetN:
    """
    A point (t, x, x', ..., x^(n)) of the n-th jet space, n <= 8.

    Attributes:
        t (float): Time.
        derivs (np.ndarray): Shape (n + 1, 3); row k is the k-th derivative.
    """
    t: float
    derivs: np.ndarray

    def __post_init__(self):
        derivs = np.array(self.derivs, dtype=float)
        if derivs.ndim != 2 or derivs.shape[1] != 3 or not 1 <= derivs.shape[0] <= MAX_ORDER + 1:
            raise InvalidOrder(f"jet derivatives must have shape (n+1, 3) with n <= {MAX_ORDER}, got {derivs.shape}")
        derivs.setflags(write=False)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "derivs", derivs)

    @property
    def order(self):
        return self.derivs.shape[0] - 1

    @property
    def dimension(self):
        return 3 * self.order + 4

    @classmethod
    def from_jet4(cls, j):
        return cls(j.t, j.derivs)

    @classmethod
    def from_motion(cls, m, t, order=4):
        return cls(t, m.derivatives([t], order)[0])

    def to_jet4(self):
        if self.order < 4:
            raise InvalidOrder(f"a Jet4 needs order 4, this jet has order {self.order}")
        return Jet4.from_derivatives(self.t, self.derivs[:5])

    def truncate(self, n):
        if not 0 <= n <= self.order:
            raise InvalidOrder(f"cannot truncate an order-{self.order} jet to order {n}")
        return JetN(self.t, self.derivs[: n + 1])

    def coordinates(self):
        """Flat coordinates (t, x, x', ..., x^(n)) of length 3n + 4."""
        return np.concatenate([[self.t], self.derivs.ravel()])

    def allclose(self, other, tol=1e-12):
        return (
            self.order == other.order
            and abs(self.t - other.t) <= tol
            and bool(np.max(np.abs(self.derivs - other.derivs)) <= tol)
        )


def _prolong_derivs(g, t, derivs):
    out = derivs @ g.R.T
    out[0] += t * g.v + g.y
    if len(out) > 1:
        out[1] += g.v
    return out


def prolong_action(g, j):
    """
    Prolonged action of g on a jet.

    t -> t + s, x -> R x + t v + y, x' -> R x' + v and x^(n) -> R x^(n) for n >= 2.

    Args:
        g (GalileanElement): The transformation.
        j (JetN or Jet4): The jet; the result has the same type.

    Returns:
        JetN or Jet4: The transformed jet.
    """
    derivs = _prolong_derivs(g, j.t, j.derivs)
    if isinstance(j, Jet4):
        return Jet4.from_derivatives(j.t + g.s, derivs, boundary=j.boundary)
    return JetN(j.t + g.s, derivs)


@dataclass
class RankReport:
    n: int
    s_n: int
    i_n: int
    singular_values: np.ndarray = field(repr=False)
    well_separated: bool = True

    def to_dict(self):
        return {"n": self.n, "s_n": self.s_n, "i_n": self.i_n, "well_separated": self.well_separated}


def prolonged_generators(n, j, step=ORBIT_FD_STEP):
    """
    The ten prolonged infinitesimal generators at j, by central differences of prolong_action
    along each one-parameter subgroup.

    Returns:
        np.ndarray: Shape (10, 3n + 4).
    """
    jn = j.truncate(n)
    rows = []
    for i in range(1, DIM + 1):
        c = AlgebraVector.basis(i)
        plus = prolong_action(one_parameter_subgroup(c, step), jn).coordinates()
        minus = prolong_action(one_parameter_subgroup(c, -step), jn).coordinates()
        rows.append((plus - minus) / (2.0 * step))
    return np.array(rows)


def orbit_dimension(n, j, step=ORBIT_FD_STEP, cutoff=RANK_CUTOFF):
    """
    Dimension of the prolonged orbit through j in the n-th jet space.

    Args:
        n (int): Jet order, at most the order of j.
        j (JetN): The jet.
        step (float, optional): Central-difference step. Default is 1e-5.
        cutoff (float, optional): Relative singular-value cutoff. Default is 1e-7.

    Returns:
        RankReport: s_n and the invariant count i_n = (3n + 4) - s_n.
    """
    if not isinstance(j, JetN):
        j = JetN.from_jet4(j)
    M = prolonged_generators(n, j, step)
    sv = np.linalg.svd(M, compute_uv=False)
    threshold = cutoff * sv[0]
    rank = int(np.sum(sv > threshold))
    # nearest singular value to the cutoff on either side
    close = np.abs(np.log10(np.maximum(sv, 1e-300) / threshold)) < 1.0
    well_separated = not bool(np.any(close))
    if not well_separated:
        logger.warning("Orbit rank at order %d is close to the cutoff; the jet may be non-generic.", n)
    dim = 3 * n + 4
    return RankReport(n, rank, dim - rank, sv, well_separated)


_KIND_PATTERN = re.compile(r"^\s*([IJKL])\s*\(\s*([\d\s,]+)\)\s*$")
_ARITY = {"I": 1, "J": 2, "K": 2, "L": 3}


@dataclass(frozen=True)
class InvariantKind:
    """One member of the invariant families: I(n), J(n,m), K(n,m) or L(l,n,m)."""
    family: str
    orders: tuple

    def __post_init__(self):
        if self.family not in _ARITY:
            raise InvalidOrder(f"unknown invariant family {self.family!r}")
        if len(self.orders) != _ARITY[self.family]:
            raise InvalidOrder(f"{self.family} takes {_ARITY[self.family]} orders, got {self.orders}")
        if any(k < 2 for k in self.orders):
            raise InvalidOrder(f"invariant orders must be at least 2, got {self.orders}")
        if self.family == "L" and not self.orders[0] > self.orders[1] > self.orders[2]:
            raise InvalidOrder(f"L needs l > n > m, got {self.orders}")

    @classmethod
    def parse(cls, text):
        match = _KIND_PATTERN.match(text)
        if not match:
            raise InvalidOrder(f"cannot parse invariant kind {text!r}")
        orders = tuple(int(k) for k in match.group(2).split(",") if k.strip())
        return cls(match.group(1), orders)

    def __str__(self):
        return f"{self.family}({','.join(str(k) for k in self.orders)})"


def invariant_family(j, kind):
    """
    Evaluates a member of the invariant families at j.

    I_n = |x^(n)|, J_{n,m} = x^(n) . x^(m), K_{n,m} = |x^(n) x x^(m)| and
    L_{l,n,m} = (x^(l) x x^(n)) . x^(m).

    Args:
        j (JetN or Jet4): The jet.
        kind (InvariantKind or str): The family member, e.g. "K(3,2)".

    Returns:
        float: The invariant value.

    Raises:
        InvalidOrder: If an order is below 2, above the jet order, or L's orders are not decreasing.
    """
    if isinstance(kind, str):
        kind = InvariantKind.parse(kind)
    order = j.derivs.shape[0] - 1
    if max(kind.orders) > order:
        raise InvalidOrder(f"{kind} needs a jet of order {max(kind.orders)}, got {order}")
    d = [j.derivs[k] for k in kind.orders]
    if kind.family == "I":
        return float(np.linalg.norm(d[0]))
    if kind.family == "J":
        return float(d[0] @ d[1])
    if kind.family == "K":
        return float(np.linalg.norm(np.cross(d[0], d[1])))
    return float(np.cross(d[0], d[1]) @ d[2])


def gram_determinant(j, orders):
    """det[x^(i) . x^(k)] over the given derivative orders."""
    vectors = np.array([j.derivs[k] for k in orders])
    return float(np.linalg.det(vectors @ vectors.T))


@dataclass
class CompletenessReport:
    t: float
    I2: float
    I3: float
    J32: float
    K32: float
    half_d_I2_squared: float
    residual: float
    a3: float
    alt_a2: float
    alt_a3: float
    a2_mismatch: bool

    def to_dict(self):
        return dict(self.__dict__)


def completeness_check(m, t, h=1e-4, tol=1e-9):
    """
    Checks the third-order invariants of a motion at t.

    Compares J_{3,2} with one half the central difference of I_2^2 and lists the complete
    third-order set (I_2, I_3, J_{3,2}) together with the alternative normalizations
    a2' = J_{3,2} and a3' = L_{4,3,2} / K_{3,2}^2 next to K_{3,2} and a3.

    Args:
        m (Motion): A motion with exact jets defined on [t - h, t + h].
        t (float): Evaluation time.
        h (float, optional): Central-difference step. Default is 1e-4.
        tol (float, optional): Threshold for flagging a2' != K_{3,2}. Default is 1e-9.

    Returns:
        CompletenessReport: The values and the residual |J_{3,2} - (1/2) d/dt I_2^2|.
    """
    j = JetN.from_motion(m, t, order=4)
    I2 = invariant_family(j, "I(2)")
    I3 = invariant_family(j, "I(3)")
    J32 = invariant_family(j, "J(3,2)")
    K32 = invariant_family(j, "K(3,2)")
    L432 = invariant_family(j, "L(4,3,2)")
    x2_pm = m.derivatives([t + h, t - h], order=2)[:, 2]
    sq = np.sum(x2_pm ** 2, axis=1)
    half_d = 0.25 * (sq[0] - sq[1]) / h
    a3 = float(np.cross(j.derivs[2], j.derivs[3]) @ j.derivs[4])
    alt_a3 = L432 / K32 ** 2 if K32 > 0 else float("nan")
    mismatch = abs(J32 - K32) > tol * max(1.0, K32)
    if mismatch:
        logger.info("At t=%.6g the alternative a2 (J32=%.6g) differs from K32=%.6g.", t, J32, K32)
    return CompletenessReport(t, I2, I3, J32, K32, half_d, abs(J32 - half_d), a3, J32, alt_a3, mismatch)
