"""
Finite-dimensional qudit algebra

States are normalized complex vectors in the computational basis Z_d.
The conjugate basis X_d is the discrete Fourier basis

    |l>_x = 1/sqrt(d) * sum_k exp(2*pi*i*k*l/d) |k>

and the generalized Hadamard H_d maps |j> to |j>_x. Coding operations are
cyclic shifts |m> -> |(m + j) mod d>, the unitary extension of U_j|0> = |j>.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, require

# Tolerances for vector/operator comparisons and closed-form scalars
STATE_ATOL = 1e-9
SCALAR_ATOL = 1e-12


def _check_dim(d: int) -> None:
    require(isinstance(d, (int, np.integer)) and not isinstance(d, bool), f"dimension must be an integer, got {d!r}")
    require(d >= 2, f"dimension must be >= 2, got {d}")


def _check_index(d: int, j: int, name: str = "index") -> None:
    _check_dim(d)
    require(isinstance(j, (int, np.integer)) and not isinstance(j, bool), f"{name} must be an integer, got {j!r}")
    require(0 <= j < d, f"{name} must lie in [0, {d}), got {j}")


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


class BasisKind(Enum):
    Z = "Z"
    X = "X"


@dataclass(frozen=True, eq=False)
class QuditState:
    """Normalized pure state of a d-level system."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        require(amps.size >= 2, f"a qudit state needs at least 2 amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > STATE_ATOL:
            raise InvalidArgumentError(f"state is not normalized (norm^2 = {norm:.12g})")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)

    def probabilities(self) -> np.ndarray:
        """Computational-basis probabilities |a_k|^2."""
        return np.abs(self.amplitudes) ** 2

    def inner(self, other: "QuditState") -> complex:
        """<self|other>"""
        require(self.dim == other.dim, f"dimension mismatch: {self.dim} vs {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def equals(self, other: "QuditState", atol: float = STATE_ATOL) -> bool:
        """Equality up to a global phase."""
        if self.dim != other.dim:
            return False
        return abs(abs(self.inner(other)) - 1.0) <= atol

    def __repr__(self) -> str:
        return f"QuditState(dim={self.dim}, amplitudes={np.round(self.amplitudes, 6).tolist()})"


@dataclass(frozen=True, eq=False)
class QuditOperator:
    """Unitary d x d operator."""

    matrix: np.ndarray
    name: str = field(default="U", compare=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        require(mat.ndim == 2 and mat.shape[0] == mat.shape[1], f"operator must be square, got shape {mat.shape}")
        require(mat.shape[0] >= 2, "operator dimension must be >= 2")
        gram = mat.conj().T @ mat
        if not np.allclose(gram, np.eye(mat.shape[0]), atol=STATE_ATOL, rtol=0.0):
            raise InvalidArgumentError(f"operator {self.name} is not unitary")
        object.__setattr__(self, "matrix", _frozen(mat))

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def adjoint(self) -> "QuditOperator":
        return QuditOperator(self.matrix.conj().T, name=f"{self.name}^dag")

    def compose(self, other: "QuditOperator") -> "QuditOperator":
        """Operator product self * other (other acts first)."""
        require(self.dim == other.dim, f"dimension mismatch: {self.dim} vs {other.dim}")
        return QuditOperator(self.matrix @ other.matrix, name=f"{self.name}*{other.name}")

    def equals(self, other: "QuditOperator", atol: float = STATE_ATOL) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.matrix, other.matrix, atol=atol, rtol=0.0))


@dataclass(frozen=True)
class Basis:
    """Measuring basis Z_d or X_d."""

    kind: BasisKind
    dim: int

    def __post_init__(self):
        _check_dim(self.dim)

    def eigenvector(self, k: int) -> QuditState:
        if self.kind is BasisKind.Z:
            return basis_state(self.dim, k)
        return x_basis_state(self.dim, k)

    def eigenvectors(self) -> np.ndarray:
        """Matrix whose column k is the k-th eigenvector."""
        return _eigenvector_matrix(self.kind, self.dim)

    def __str__(self) -> str:
        return f"{self.kind.value}_{self.dim}"


@dataclass(frozen=True)
class MeasurementRecord:
    basis: Basis
    outcome: int
    collapsed: QuditState


@lru_cache(maxsize=None)
def _fourier_matrix(d: int) -> np.ndarray:
    k = np.arange(d)
    return _frozen(np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d))


@lru_cache(maxsize=None)
def _eigenvector_matrix(kind: BasisKind, d: int) -> np.ndarray:
    if kind is BasisKind.Z:
        return _frozen(np.eye(d, dtype=np.complex128))
    return _fourier_matrix(d)


@lru_cache(maxsize=None)
def basis_state(d: int, j: int) -> QuditState:
    """Computational basis vector |j> of Z_d."""
    _check_index(d, j, "j")
    amps = np.zeros(d, dtype=np.complex128)
    amps[j] = 1.0
    return QuditState(amps)


@lru_cache(maxsize=None)
def x_basis_state(d: int, l: int) -> QuditState:
    """Fourier basis vector |l>_x of X_d."""
    _check_index(d, l, "l")
    return QuditState(_fourier_matrix(d)[:, l].copy())


@lru_cache(maxsize=None)
def identity(d: int) -> QuditOperator:
    _check_dim(d)
    return QuditOperator(np.eye(d, dtype=np.complex128), name="I")


@lru_cache(maxsize=None)
def hadamard(d: int) -> QuditOperator:
    """Generalized Hadamard, matrix[k][j] = exp(2*pi*i*k*j/d)/sqrt(d)."""
    _check_dim(d)
    return QuditOperator(_fourier_matrix(d), name=f"H_{d}")


@lru_cache(maxsize=None)
def shift_op(d: int, j: int) -> QuditOperator:
    """Cyclic shift |m> -> |(m + j) mod d>."""
    _check_index(d, j, "j")
    mat = np.zeros((d, d), dtype=np.complex128)
    for m in range(d):
        mat[(m + j) % d, m] = 1.0
    return QuditOperator(mat, name=f"U_{j}")


def apply(op: QuditOperator, s: QuditState) -> QuditState:
    """Apply `op` to `s`."""
    if op.dim != s.dim:
        raise InvalidArgumentError(f"dimension mismatch: operator {op.dim} vs state {s.dim}")
    out = op.matrix @ s.amplitudes
    # strip floating-point drift
    return QuditState(out / np.linalg.norm(out))


def born_distribution(s: QuditState, b: Basis) -> np.ndarray:
    """Outcome probabilities p[k] = |<e_k|s>|^2 in basis `b`."""
    if s.dim != b.dim:
        raise InvalidArgumentError(f"dimension mismatch: state {s.dim} vs basis {b.dim}")
    p = np.abs(b.eigenvectors().conj().T @ s.amplitudes) ** 2
    return p / p.sum()


def measure(s: QuditState, b: Basis, rng: np.random.Generator) -> MeasurementRecord:
    """Projective measurement of `s` in `b`, sampled from the Born rule."""
    p = born_distribution(s, b)
    outcome = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
    outcome = min(outcome, b.dim - 1)
    return MeasurementRecord(basis=b, outcome=outcome, collapsed=b.eigenvector(outcome))


def overlap_probability(d: int, k: int, l: int) -> float:
    """|<k|l>_x|^2, which is 1/d for every k and l."""
    _check_index(d, k, "k")
    _check_index(d, l, "l")
    return float(abs(_fourier_matrix(d)[k, l]) ** 2)


def eigen_index(s: QuditState, b: Basis, atol: float = STATE_ATOL) -> Optional[int]:
    """Index k if `s` is the k-th eigenvector of `b` up to phase, else None."""
    p = born_distribution(s, b)
    k = int(np.argmax(p))
    return k if abs(p[k] - 1.0) <= atol else None

