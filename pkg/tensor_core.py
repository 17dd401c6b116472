# tensor_core.py
# Dense complex linear algebra, gl_N matrix units and truncated multi-species Fock spaces.
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from math import comb
from typing import Dict, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from errors import DimensionError, IndexRangeError

logger = logging.getLogger(__name__)

# Every operator in the package is a dense complex128 ndarray.
Matrix = NDArray[np.complex128]


class Ordering(str, Enum):
    NORMAL = "normal"
    ANTINORMAL = "antinormal"


def as_matrix(a) -> Matrix:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def _require_square(a: Matrix, what: str = "matrix") -> int:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {a.shape}")
    return a.shape[0]


def _require_dims(a: Matrix, dims: Sequence[int]) -> None:
    n = _require_square(a)
    if int(np.prod(dims)) != n:
        raise DimensionError(f"factor dims {tuple(dims)} do not match matrix size {n}")


def identity(n: int) -> Matrix:
    return np.eye(n, dtype=np.complex128)


def dagger(a: Matrix) -> Matrix:
    return as_matrix(a).conj().T


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def commutator(a: Matrix, b: Matrix) -> Matrix:
    return matmul(a, b) - matmul(b, a)


def chebyshev(a) -> float:
    """Largest absolute entry; 0.0 for an empty selection."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def kron(*ops: Matrix) -> Matrix:
    """Kronecker product of any number of matrices, left to right."""
    if not ops:
        raise DimensionError("kron needs at least one operand")
    return reduce(np.kron, (as_matrix(op) for op in ops))


def matrix_unit(n: int, k: int, l: int) -> Matrix:
    """e_kl on C^n with 1-based indices."""
    if not (1 <= k <= n and 1 <= l <= n):
        raise IndexRangeError(f"matrix unit indices ({k},{l}) outside 1..{n}")
    e = np.zeros((n, n), dtype=np.complex128)
    e[k - 1, l - 1] = 1.0
    return e


def permutation_op(n: int) -> Matrix:
    """P = sum_kl e_kl (x) e_lk, i.e. P|a>|b> = |b>|a>."""
    if n < 2:
        raise DimensionError(f"permutation operator needs n >= 2, got {n}")
    p = np.zeros((n * n, n * n), dtype=np.complex128)
    for a, b in itertools.product(range(n), repeat=2):
        p[b * n + a, a * n + b] = 1.0
    return p


def antidiagonal(n: int) -> Matrix:
    """V = antidiag(1, ..., 1)."""
    return np.fliplr(identity(n)).copy()


def embed(op: Matrix, position: int, dims: Sequence[int]) -> Matrix:
    """Place a local operator on factor `position` (0-based) of a product space."""
    if not 0 <= position < len(dims):
        raise IndexRangeError(f"position {position} outside 0..{len(dims) - 1}")
    if _require_square(op, "local operator") != dims[position]:
        raise DimensionError(f"local operator of size {op.shape[0]} on factor of dim {dims[position]}")
    left = int(np.prod(dims[:position], dtype=np.int64))
    right = int(np.prod(dims[position + 1:], dtype=np.int64))
    return kron(identity(left), op, identity(right))


def partial_transpose(a: Matrix, dims: Sequence[int], axis: int) -> Matrix:
    """Transpose factor `axis` only."""
    _require_dims(a, dims)
    k = len(dims)
    t = a.reshape(tuple(dims) * 2)
    perm = list(range(2 * k))
    perm[axis], perm[k + axis] = perm[k + axis], perm[axis]
    return t.transpose(perm).reshape(a.shape)


def partial_trace(a: Matrix, dims: Sequence[int], axis: int) -> Matrix:
    """Trace out factor `axis`; the result acts on the remaining factors in order."""
    _require_dims(a, dims)
    k = len(dims)
    t = np.trace(a.reshape(tuple(dims) * 2), axis1=axis, axis2=k + axis)
    rest = int(np.prod([d for i, d in enumerate(dims) if i != axis], dtype=np.int64))
    return t.reshape(rest, rest)


def blocks_to_matrix(blocks: NDArray[np.complex128]) -> Matrix:
    """(n, n, d, d) auxiliary blocks -> sum_ab e_ab (x) X_ab."""
    if blocks.ndim != 4 or blocks.shape[0] != blocks.shape[1] or blocks.shape[2] != blocks.shape[3]:
        raise DimensionError(f"blocks must have shape (n, n, d, d), got {blocks.shape}")
    n, _, d, _ = blocks.shape
    return blocks.transpose(0, 2, 1, 3).reshape(n * d, n * d)


def matrix_to_blocks(m: Matrix, n_aux: int) -> NDArray[np.complex128]:
    size = _require_square(m)
    if size % n_aux:
        raise DimensionError(f"matrix size {size} is not a multiple of {n_aux}")
    d = size // n_aux
    return m.reshape(n_aux, d, n_aux, d).transpose(0, 2, 1, 3)


def tile_mask(mask: NDArray[np.bool_], left_dim: int) -> NDArray[np.bool_]:
    """Extend a mask on the last factor to (left factors) (x) (last factor)."""
    return np.tile(np.asarray(mask, dtype=bool), left_dim)


def restricted(a: Matrix, mask: NDArray[np.bool_]) -> Matrix:
    if a.shape[0] != mask.size or a.shape[1] != mask.size:
        raise DimensionError(f"mask of length {mask.size} on matrix {a.shape}")
    return a[np.ix_(mask, mask)]


@dataclass(frozen=True)
class FockSpace:
    """Bosonic Fock space of `species` oscillators truncated at total occupation `cutoff`.

    Basis order is graded lexicographic: by total occupation, then lexicographic on the
    occupation tuple, so index 0 is the vacuum.
    """

    species: int
    cutoff: int
    basis: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    index: Dict[Tuple[int, ...], int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.species < 1:
            raise DimensionError(f"species must be positive, got {self.species}")
        if self.cutoff < 0:
            raise DimensionError(f"cutoff must be non-negative, got {self.cutoff}")
        basis = []
        for total in range(self.cutoff + 1):
            basis.extend(
                occ for occ in itertools.product(range(total + 1), repeat=self.species)
                if sum(occ) == total
            )
        object.__setattr__(self, "basis", tuple(basis))
        object.__setattr__(self, "index", {occ: i for i, occ in enumerate(basis)})
        assert len(basis) == comb(self.cutoff + self.species, self.species)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def occupation_totals(self) -> NDArray[np.int64]:
        return np.array([sum(occ) for occ in self.basis], dtype=np.int64)

    def block_mask(self, max_total: int) -> NDArray[np.bool_]:
        return self.occupation_totals() <= max_total

    def sub_cutoff_mask(self) -> NDArray[np.bool_]:
        """Total occupation <= D - 1, where operators linear in a, a+ are exact."""
        return self.block_mask(self.cutoff - 1)

    def vacuum(self) -> NDArray[np.complex128]:
        v = np.zeros(self.dim, dtype=np.complex128)
        v[0] = 1.0
        return v


def ladder_ops(fock: FockSpace, j: int) -> Tuple[Matrix, Matrix]:
    """(a_j, a_j^+) for species j (1-based)."""
    if not 1 <= j <= fock.species:
        raise IndexRangeError(f"species {j} outside 1..{fock.species}")
    a = np.zeros((fock.dim, fock.dim), dtype=np.complex128)
    for col, occ in enumerate(fock.basis):
        n = occ[j - 1]
        if n == 0:
            continue
        lowered = occ[: j - 1] + (n - 1,) + occ[j:]
        a[fock.index[lowered], col] = np.sqrt(n)
    # a^+ from the conjugate transpose; raising past the cutoff falls out automatically
    return a, a.conj().T.copy()


def number_op(fock: FockSpace, ordering: Ordering = Ordering.NORMAL) -> Matrix:
    """Diagonal number operator.

    NORMAL is sum_j a_j^+ a_j. ANTINORMAL is sum_j a_j a_j^+ taken with its untruncated
    eigenvalues, i.e. NORMAL + species * I, so the two readings differ by a constant
    everywhere including the cutoff edge.
    """
    totals = fock.occupation_totals().astype(np.float64)
    if Ordering(ordering) is Ordering.ANTINORMAL:
        totals = totals + fock.species
    return np.diag(totals).astype(np.complex128)
