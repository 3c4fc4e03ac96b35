from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import expm

from errors import DecompositionFailure, IndexOutOfRange, InvalidElement
from Group.group_core import element_from_matrix
from log import Logger

logger = Logger("LieAlgebra").get_logger()

DIM = 10
ZERO_TOL = 1e-12

# Coordinates of R^4 in the order (t, x, y, z).
T, X, Y, Z = 0, 1, 2, 3


@dataclass(frozen=True, eq=False)
class AffineField:
    """
    The vector field z -> linear @ z + constant on R^4 with coordinates (t, x, y, z).

    Attributes:
        linear (np.ndarray): Linear part, shape (4, 4).
        constant (np.ndarray): Constant part, shape (4,).
    """
    linear: np.ndarray
    constant: np.ndarray

    def __post_init__(self):
        linear = np.array(self.linear, dtype=float)
        constant = np.array(self.constant, dtype=float)
        if linear.shape != (4, 4) or constant.shape != (4,):
            raise InvalidElement("an affine field needs a 4x4 linear part and a 4-vector constant part")
        linear.setflags(write=False)
        constant.setflags(write=False)
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "constant", constant)

    @classmethod
    def zero(cls):
        return cls(np.zeros((4, 4)), np.zeros(4))

    def __call__(self, z):
        return self.linear @ np.asarray(z, dtype=float) + self.constant

    def __add__(self, other):
        return AffineField(self.linear + other.linear, self.constant + other.constant)

    def __sub__(self, other):
        return AffineField(self.linear - other.linear, self.constant - other.constant)

    def __neg__(self):
        return AffineField(-self.linear, -self.constant)

    def scale(self, factor):
        return AffineField(factor * self.linear, factor * self.constant)

    def flatten(self):
        """The 20 slots (16 linear, 4 constant) used for coefficient matching."""
        return np.concatenate([self.linear.ravel(), self.constant])

    def max_abs(self):
        return float(np.max(np.abs(self.flatten())))

    def allclose(self, other, tol=ZERO_TOL):
        return (self - other).max_abs() <= tol

    def matrix(self):
        """The 5x5 matrix of the field in the representation used by embed_matrix."""
        M = np.zeros((5, 5))
        M[:4, :4] = self.linear
        M[:4, 4] = self.constant
        return M


@dataclass(frozen=True, eq=False)
class AlgebraVector:
    """Coefficients in the ordered basis X1, ..., X10."""
    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.shape != (DIM,):
            raise InvalidElement(f"an algebra vector has {DIM} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def basis(cls, i):
        _check_index(i)
        c = np.zeros(DIM)
        c[i - 1] = 1.0
        return cls(c)

    def __getitem__(self, i):
        _check_index(i)
        return self.c[i - 1]

    def __neg__(self):
        return AlgebraVector(-self.c)

    def allclose(self, other, tol=ZERO_TOL):
        return bool(np.max(np.abs(self.c - other.c)) <= tol)

    def is_zero(self, tol=ZERO_TOL):
        return bool(np.max(np.abs(self.c)) <= tol)

    def label(self):
        """Readable form such as '-X3' or 'X2 + X5'; '0' for the zero vector."""
        terms = []
        for k, coeff in enumerate(self.c, start=1):
            if abs(coeff) <= ZERO_TOL:
                continue
            rounded = round(coeff)
            if abs(coeff - rounded) <= ZERO_TOL and abs(rounded) == 1:
                text = f"X{k}"
                sign = "-" if rounded < 0 else "+"
            else:
                text = f"{abs(coeff):g}X{k}"
                sign = "-" if coeff < 0 else "+"
            terms.append((sign, text))
        if not terms:
            return "0"
        first_sign, first = terms[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, text in terms[1:]:
            out += f" {sign} {text}"
        return out


def _check_index(i):
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= DIM:
        raise IndexOutOfRange(f"generator index must be in 1..{DIM}, got {i!r}")


def _translation(axis):
    constant = np.zeros(4)
    constant[axis] = 1.0
    return AffineField(np.zeros((4, 4)), constant)


def _boost(axis):
    linear = np.zeros((4, 4))
    linear[axis, T] = 1.0
    return AffineField(linear, np.zeros(4))


def _rotation(plus_row, plus_col):
    # plus_row d/d(plus_row) gets +plus_col, its partner gets -plus_row
    linear = np.zeros((4, 4))
    linear[plus_row, plus_col] = 1.0
    linear[plus_col, plus_row] = -1.0
    return AffineField(linear, np.zeros(4))


_GENERATORS = (
    _translation(T),   # X1 = d/dt
    _translation(X),   # X2 = d/dx
    _translation(Y),   # X3 = d/dy
    _translation(Z),   # X4 = d/dz
    _boost(X),         # X5 = t d/dx
    _boost(Y),         # X6 = t d/dy
    _boost(Z),         # X7 = t d/dz
    _rotation(X, Y),   # X8 = y d/dx - x d/dy
    _rotation(Z, X),   # X9 = x d/dz - z d/dx
    _rotation(Y, Z),   # X10 = z d/dy - y d/dz
)


def generator(i):
    """
    The i-th infinitesimal generator of the action on R^4.

    Args:
        i (int): Index in 1..10.

    Returns:
        AffineField: The generator X_i.

    Raises:
        IndexOutOfRange: If i is outside 1..10.
    """
    _check_index(i)
    return _GENERATORS[i - 1]


def generators():
    return list(_GENERATORS)


def bracket(V, W):
    """
    Lie bracket of two affine fields.

    For V = (A, a) and W = (B, b) the result has linear part B A - A B and constant part
    B a - A b. With this sign [X1, X5] = X2, which fixes the convention of the structure table.

    Args:
        V (AffineField): First field.
        W (AffineField): Second field.

    Returns:
        AffineField: [V, W].
    """
    A, a = V.linear, V.constant
    B, b = W.linear, W.constant
    return AffineField(B @ A - A @ B, B @ a - A @ b)


def field_of(c, basis=None):
    """The field sum_i c_i X_i of an algebra vector."""
    basis = generators() if basis is None else basis
    linear = sum(ci * Xi.linear for ci, Xi in zip(c.c, basis))
    constant = sum(ci * Xi.constant for ci, Xi in zip(c.c, basis))
    return AffineField(linear, constant)


def decompose_field(field, basis=None, tol=ZERO_TOL):
    """
    Expresses a field in the generator basis by solving the 20x10 coefficient system.

    Args:
        field (AffineField): Field to decompose.
        basis (list, optional): Generators to use. Defaults to X1..X10.
        tol (float, optional): Residual above which the field is outside the span. Default is 1e-12.

    Returns:
        AlgebraVector: The coefficients.

    Raises:
        DecompositionFailure: If the field is not in the span of the basis.
    """
    basis = generators() if basis is None else basis
    A = np.column_stack([Xi.flatten() for Xi in basis])
    target = field.flatten()
    coeffs, *_ = np.linalg.lstsq(A, target, rcond=None)
    residual = float(np.max(np.abs(A @ coeffs - target)))
    if residual > tol:
        logger.error("Field is not in the span of the generators (residual %.3g).", residual)
        raise DecompositionFailure(f"bracket is not in the span of the generators (residual {residual:.3g})")
    coeffs[np.abs(coeffs) <= tol] = 0.0
    return AlgebraVector(coeffs)


class StructureTable:
    def __init__(self, coefficients):
        """
        Holds bracket coefficients c[i][j] for all ordered pairs of generators.

        Args:
            coefficients (np.ndarray): Shape (10, 10, 10); coefficients[i-1, j-1] is [X_i, X_j].
        """
        self.coefficients = np.asarray(coefficients, dtype=float)

    def entry(self, i, j):
        """[X_i, X_j] as an AlgebraVector (1-based indices)."""
        _check_index(i)
        _check_index(j)
        return AlgebraVector(self.coefficients[i - 1, j - 1])

    def antisymmetry_residual(self):
        return float(np.max(np.abs(self.coefficients + self.coefficients.transpose(1, 0, 2))))

    def jacobi_residual(self):
        """Largest Jacobi-identity violation over all generator triples, using the table alone."""
        C = self.coefficients
        # [X_i, [X_j, X_k]] = sum_m C[j,k,m] C[i,m,:]
        inner = np.einsum("jkm,imn->ijkn", C, C)
        total = inner + inner.transpose(1, 2, 0, 3) + inner.transpose(2, 0, 1, 3)
        return float(np.max(np.abs(total)))

    def mismatches(self, other, tol=ZERO_TOL):
        """Upper-triangle pairs (i, j) where the two tables disagree."""
        return [
            (i, j)
            for i, j in combinations(range(1, DIM + 1), 2)
            if not self.entry(i, j).allclose(other.entry(i, j), tol)
        ]

    def format_table(self):
        """The table as text, one row per generator, columns X1..X10."""
        labels = [[self.entry(i, j).label() for j in range(1, DIM + 1)] for i in range(1, DIM + 1)]
        width = max(len(text) for row in labels for text in row)
        width = max(width, 3)
        header = " " * 5 + " ".join(f"X{j}".rjust(width) for j in range(1, DIM + 1))
        lines = [header]
        for i, row in enumerate(labels, start=1):
            lines.append(f"X{i}".ljust(5) + " ".join(text.rjust(width) for text in row))
        return "\n".join(lines)


def structure_table(basis=None):
    """
    Computes all brackets [X_i, X_j] and decomposes them in the generator basis.

    Args:
        basis (list, optional): Generators to use. Defaults to X1..X10; the check suite passes a
            deliberately corrupted basis to confirm that mistakes are caught.

    Returns:
        StructureTable: The computed table.

    Raises:
        DecompositionFailure: If some bracket leaves the span of the basis.
    """
    basis = generators() if basis is None else basis
    C = np.zeros((DIM, DIM, DIM))
    for i, j in combinations(range(DIM), 2):
        c = decompose_field(bracket(basis[i], basis[j]), basis).c
        C[i, j] = c
        C[j, i] = -c
    logger.debug("Structure table computed for %d pairs.", DIM * (DIM - 1) // 2)
    return StructureTable(C)


# Nonzero upper-triangle entries of the tabulated commutator table: (i, j) -> (sign, k).
TABULATED_BRACKETS = {
    (1, 5): (1, 2), (1, 6): (1, 3), (1, 7): (1, 4),
    (2, 8): (-1, 3), (2, 9): (1, 4),
    (3, 8): (1, 2), (3, 10): (-1, 4),
    (4, 9): (-1, 2), (4, 10): (1, 3),
    (5, 8): (-1, 6), (5, 9): (1, 7),
    (6, 8): (1, 5), (6, 10): (-1, 7),
    (7, 9): (-1, 5), (7, 10): (1, 6),
    (8, 9): (-1, 10), (8, 10): (1, 9),
    (9, 10): (-1, 8),
}


def reference_table():
    """The reference commutator table as a StructureTable."""
    C = np.zeros((DIM, DIM, DIM))
    for (i, j), (sign, k) in TABULATED_BRACKETS.items():
        C[i - 1, j - 1, k - 1] = sign
        C[j - 1, i - 1, k - 1] = -sign
    return StructureTable(C)


def one_parameter_subgroup(c, eps):
    """
    exp(eps * sum_i c_i X_i) as a group element, via the 5x5 matrix exponential.

    Args:
        c (AlgebraVector): Direction in the algebra.
        eps (float): Flow parameter.

    Returns:
        GalileanElement: The group element reached at time eps.
    """
    M = field_of(c).matrix()
    E = expm(eps * M)
    return element_from_matrix(E)
