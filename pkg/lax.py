# lax.py
# Operator constructors for the gl_N chain with an oscillator defect: R, L, L-hat, S, transmission
# matrices and the chain monodromy / transfer matrix.
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Union

import numpy as np
from numpy.typing import NDArray
from scipy.special import gamma, rgamma

from errors import DimensionCapError, DimensionError, IndexRangeError, PoleProximityError
from tensor_core import (
    FockSpace,
    Matrix,
    Ordering,
    antidiagonal,
    blocks_to_matrix,
    embed,
    identity,
    kron,
    ladder_ops,
    number_op,
    partial_transpose,
    permutation_op,
    tile_mask,
)

logger = logging.getLogger(__name__)

POLE_EPSILON = 1e-8
DIMENSION_CAP = 20_000


@dataclass(frozen=True)
class AlgebraRank:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DimensionError(f"algebra rank must be an integer >= 2, got {self.n}")


RankLike = Union[int, AlgebraRank]


def rank_of(rank: RankLike) -> int:
    return rank.n if isinstance(rank, AlgebraRank) else AlgebraRank(int(rank)).n


class LaxVariant(str, Enum):
    DEFECT_L = "L"
    DEFECT_LHAT = "Lhat"


class NbarReference(str, Enum):
    """Ordering that the constant N/2 - 3/2 of the transmission-matrix number operator rides on."""

    NORMAL = "normal"
    ANTINORMAL = "antinormal"


@dataclass(frozen=True)
class LaxSpec:
    rank: int
    variant: LaxVariant = LaxVariant.DEFECT_L
    ordering: Ordering = Ordering.NORMAL
    shift: float = 1.0
    rapidity: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "rank", rank_of(self.rank))
        object.__setattr__(self, "variant", LaxVariant(self.variant))
        object.__setattr__(self, "ordering", Ordering(self.ordering))
        if not np.isfinite(self.shift):
            raise DimensionError(f"shift must be finite, got {self.shift}")

    @property
    def effective_shift(self) -> float:
        """Constant multiplying i in the weighted entry on the Fock vacuum."""
        extra = self.rank - 1 if self.ordering is Ordering.ANTINORMAL else 0
        return float(self.shift) + extra

    def describe(self) -> str:
        return f"{self.variant.value}/{self.ordering.value}/shift={self.shift:g}"


@dataclass(frozen=True)
class ChainSpec:
    """sites bulk C^N sites plus one defect at chain position defect_site (1..sites+1).

    The quantum space is ordered (bulk sites in chain order) (x) Fock. The defect's
    rapidity is always the chain's theta.
    """

    rank: int
    sites: int
    fock: FockSpace
    theta: complex = 0j
    defect_site: int = 1
    lax: Optional[LaxSpec] = None

    def __post_init__(self):
        n = rank_of(self.rank)
        object.__setattr__(self, "rank", n)
        if self.sites < 0:
            raise DimensionError(f"sites must be non-negative, got {self.sites}")
        if not 1 <= self.defect_site <= self.sites + 1:
            raise IndexRangeError(f"defect_site {self.defect_site} outside 1..{self.sites + 1}")
        if self.fock.species != n - 1:
            raise DimensionError(f"fock has {self.fock.species} species, rank {n} needs {n - 1}")
        lax = self.lax or LaxSpec(rank=n)
        if lax.rank != n:
            raise DimensionError(f"lax rank {lax.rank} does not match chain rank {n}")
        object.__setattr__(self, "lax", replace(lax, rapidity=complex(self.theta)))

    @property
    def site_dims(self) -> List[int]:
        return [self.rank] * self.sites + [self.fock.dim]

    @property
    def quantum_dim(self) -> int:
        return self.rank ** self.sites * self.fock.dim


def _check_fock(n: int, fock: FockSpace) -> None:
    if fock.species != n - 1:
        raise DimensionError(f"fock has {fock.species} species, rank {n} needs {n - 1}")


def _guard(what: str, z: complex, eps: float) -> None:
    if abs(z) < eps:
        raise PoleProximityError(what, z, abs(z))


def _guard_gamma(what: str, z: complex, eps: float) -> None:
    k = round(z.real)
    if k <= 0 and abs(z - k) < eps:
        raise PoleProximityError(f"{what} (Gamma pole at {k})", z, abs(z - k))


# ---------------------------------------------------------------- bulk R and S


def r_matrix(rank: RankLike, lam: complex) -> Matrix:
    """R(lam) = lam + iP on C^N (x) C^N."""
    n = rank_of(rank)
    return lam * identity(n * n) + 1j * permutation_op(n)


def bulk_blocks(rank: RankLike, lam: complex) -> NDArray[np.complex128]:
    """R(lam) as auxiliary blocks over one C^N site: block (a, b) = lam delta_ab + i e_ba."""
    n = rank_of(rank)
    blocks = np.zeros((n, n, n, n), dtype=np.complex128)
    for a in range(n):
        blocks[a, a] += lam * identity(n)
        for b in range(n):
            blocks[a, b, b, a] += 1j
    return blocks


def s_amplitude(rank: RankLike, lam: complex, eps: float = POLE_EPSILON) -> complex:
    """Scalar hole-hole scattering amplitude S(lam)."""
    n = rank_of(rank)
    z = 1j * complex(lam) / n
    num = (z + 1, -z + 1 - 1 / n)
    for arg in num:
        _guard_gamma("s_amplitude", arg, eps)
    return complex(gamma(num[0]) * gamma(num[1]) * rgamma(-z + 1) * rgamma(z + 1 - 1 / n))


def s_matrix(rank: RankLike, lam: complex, eps: float = POLE_EPSILON) -> Matrix:
    n = rank_of(rank)
    denom = 1j * lam + 1
    _guard("s_matrix prefactor i*lam + 1", denom, eps)
    return s_amplitude(n, lam, eps) / denom * (1j * lam * identity(n * n) + permutation_op(n))


def transmission_amplitude(rank: RankLike, sign: str, lam: complex, eps: float = POLE_EPSILON) -> complex:
    """Closed-form T+(lam) or T-(lam) as a Gamma ratio."""
    n = rank_of(rank)
    z = 1j * complex(lam) / n
    if sign == "+":
        top, bottom = -z + 1 / (2 * n), -z - 1 / (2 * n) + 1
    elif sign == "-":
        top, bottom = z + 1 / (2 * n) + 0.5, z - 1 / (2 * n) + 0.5
    else:
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    _guard_gamma(f"T{sign}", top, eps)
    return complex(gamma(top) * rgamma(bottom))


# ---------------------------------------------------------------- defect Lax operators


def _fock_ops(fock: FockSpace):
    return [ladder_ops(fock, j) for j in range(1, fock.species + 1)]


def l_blocks(spec: LaxSpec, fock: FockSpace, lam: complex) -> NDArray[np.complex128]:
    n = spec.rank
    _check_fock(n, fock)
    d = fock.dim
    eye = identity(d)
    blocks = np.zeros((n, n, d, d), dtype=np.complex128)
    blocks[0, 0] = (lam + 1j * spec.shift) * eye + 1j * number_op(fock, spec.ordering)
    for j, (a, adag) in enumerate(_fock_ops(fock), start=1):
        blocks[j, j] = 1j * eye
        blocks[0, j] = 1j * a
        blocks[j, 0] = 1j * adag
    return blocks


def l_hat_blocks(spec: LaxSpec, fock: FockSpace, lam: complex) -> NDArray[np.complex128]:
    n = spec.rank
    _check_fock(n, fock)
    d = fock.dim
    eye = identity(d)
    last = n - 1
    blocks = np.zeros((n, n, d, d), dtype=np.complex128)
    blocks[last, last] = (-lam - 0.5j * n + 1j * spec.shift) * eye + 1j * number_op(fock, spec.ordering)
    for s, (a, adag) in enumerate(_fock_ops(fock), start=1):
        jb = last - s  # barred index N + 1 - j with j = s + 1, 0-based
        blocks[jb, jb] = 1j * eye
        blocks[jb, last] = 1j * a
        blocks[last, jb] = 1j * adag
    return blocks


def l_matrix(spec: LaxSpec, fock: FockSpace, lam: complex) -> Matrix:
    if spec.variant is not LaxVariant.DEFECT_L:
        raise DimensionError(f"l_matrix needs variant L, got {spec.variant.value}")
    return blocks_to_matrix(l_blocks(spec, fock, lam))


def l_hat_matrix(spec: LaxSpec, fock: FockSpace, lam: complex) -> Matrix:
    if spec.variant is not LaxVariant.DEFECT_LHAT:
        raise DimensionError(f"l_hat_matrix needs variant Lhat, got {spec.variant.value}")
    return blocks_to_matrix(l_hat_blocks(spec, fock, lam))


def defect_blocks(spec: LaxSpec, fock: FockSpace, lam: complex) -> NDArray[np.complex128]:
    """Blocks of the variant's Lax operator at lam - rapidity."""
    u = lam - spec.rapidity
    if spec.variant is LaxVariant.DEFECT_L:
        return l_blocks(spec, fock, u)
    return l_hat_blocks(spec, fock, u)


def defect_operator(spec: LaxSpec, fock: FockSpace, lam: complex) -> Matrix:
    return blocks_to_matrix(defect_blocks(spec, fock, lam))


def vacuum_weights(spec: LaxSpec, lam: complex) -> NDArray[np.complex128]:
    """Diagonal auxiliary entries of defect_operator(spec, ., lam) on the Fock vacuum."""
    n = spec.rank
    u = lam - spec.rapidity
    w = np.full(n, 1j, dtype=np.complex128)
    if spec.variant is LaxVariant.DEFECT_L:
        w[0] = u + 1j * spec.effective_shift
    else:
        w[n - 1] = -u - 0.5j * n + 1j * spec.effective_shift
    return w


def crossing_transform(m: Matrix, rank: RankLike, rest_dim: int) -> Matrix:
    """V_1 M^{t_1} V_1 on C^N (x) rest."""
    n = rank_of(rank)
    dims = [n, rest_dim]
    v = embed(antidiagonal(n), 0, dims)
    return v @ partial_transpose(m, dims, 0) @ v


# ---------------------------------------------------------------- transmission matrices


def nbar_operator(rank: RankLike, fock: FockSpace, reference: NbarReference = NbarReference.NORMAL) -> Matrix:
    n = rank_of(rank)
    ordering = Ordering(NbarReference(reference).value)
    return number_op(fock, ordering) + (n / 2 - 1.5) * identity(fock.dim)


def transmission_matrix(
    rank: RankLike,
    fock: FockSpace,
    lam: complex,
    *,
    reference: NbarReference = NbarReference.NORMAL,
    prefactor: bool = True,
    eps: float = POLE_EPSILON,
) -> Matrix:
    n = rank_of(rank)
    _check_fock(n, fock)
    d = fock.dim
    eye = identity(d)
    blocks = np.zeros((n, n, d, d), dtype=np.complex128)
    blocks[0, 0] = (1j * lam + 1) * eye + nbar_operator(n, fock, reference)
    for j, (a, adag) in enumerate(_fock_ops(fock), start=1):
        blocks[j, j] = eye
        blocks[0, j] = a
        blocks[j, 0] = adag
    m = blocks_to_matrix(blocks)
    if not prefactor:
        return m
    denom = 1j * lam + n / 2 - 0.5
    _guard("transmission_matrix prefactor", denom, eps)
    return transmission_amplitude(n, "-", lam, eps) / denom * m


def conjugate_transmission_matrix(
    rank: RankLike,
    fock: FockSpace,
    lam: complex,
    *,
    reference: NbarReference = NbarReference.NORMAL,
    prefactor: bool = True,
    eps: float = POLE_EPSILON,
) -> Matrix:
    n = rank_of(rank)
    _check_fock(n, fock)
    d = fock.dim
    eye = identity(d)
    last = n - 1
    blocks = np.zeros((n, n, d, d), dtype=np.complex128)
    blocks[last, last] = (-1j * lam - n / 2 + 1) * eye + nbar_operator(n, fock, reference)
    for s, (a, adag) in enumerate(_fock_ops(fock), start=1):
        jb = last - s
        blocks[jb, jb] = eye
        blocks[jb, last] = a
        blocks[last, jb] = adag
    m = blocks_to_matrix(blocks)
    if not prefactor:
        return m
    return transmission_amplitude(n, "+", lam, eps) * m


# ---------------------------------------------------------------- chain


def _local_blocks(chain: ChainSpec, position: int, lam: complex):
    """(blocks, factor index) for chain position 1..sites+1."""
    if position == chain.defect_site:
        return defect_blocks(chain.lax, chain.fock, lam), chain.sites
    bulk_index = position - 1 if position < chain.defect_site else position - 2
    return bulk_blocks(chain.rank, lam), bulk_index


def monodromy_blocks(chain: ChainSpec, lam: complex, cap: int = DIMENSION_CAP) -> NDArray[np.complex128]:
    """Auxiliary blocks of T(lam) = O_{sites+1} ... O_1, the defect sitting at defect_site."""
    dim = chain.quantum_dim
    if dim > cap:
        raise DimensionCapError(dim, cap)
    n = chain.rank
    dims = chain.site_dims
    logger.debug("monodromy rank=%d sites=%d quantum_dim=%d", n, chain.sites, dim)
    t = np.zeros((n, n, dim, dim), dtype=np.complex128)
    for a in range(n):
        t[a, a] = identity(dim)
    for position in range(1, chain.sites + 2):
        local, factor = _local_blocks(chain, position, lam)
        op = np.empty_like(t)
        for a in range(n):
            for c in range(n):
                op[a, c] = embed(local[a, c], factor, dims)
        t = np.stack([np.stack([sum(op[a, c] @ t[c, b] for c in range(n)) for b in range(n)]) for a in range(n)])
    return t


def monodromy(chain: ChainSpec, lam: complex, cap: int = DIMENSION_CAP) -> Matrix:
    return blocks_to_matrix(monodromy_blocks(chain, lam, cap))


def transfer_matrix(chain: ChainSpec, lam: complex, cap: int = DIMENSION_CAP) -> Matrix:
    t = monodromy_blocks(chain, lam, cap)
    return np.einsum("aaij->ij", t)


def closed_sector_mask(chain: ChainSpec) -> NDArray[np.bool_]:
    """Quantum basis states whose conserved charge is at most the Fock cutoff.

    L defect: occupation + number of bulk sites in colour 1.
    L-hat defect: occupation + number of bulk sites not in colour N.
    """
    n = chain.rank
    fock_totals = chain.fock.occupation_totals()
    site_charge = np.zeros(n ** chain.sites, dtype=np.int64)
    for idx in range(n ** chain.sites):
        colours = np.unravel_index(idx, [n] * chain.sites) if chain.sites else ()
        if chain.lax.variant is LaxVariant.DEFECT_L:
            site_charge[idx] = sum(1 for c in colours if c == 0)
        else:
            site_charge[idx] = sum(1 for c in colours if c != n - 1)
    charge = site_charge[:, None] + fock_totals[None, :]
    return (charge <= chain.fock.cutoff).reshape(-1)


def sub_cutoff_mask(chain: ChainSpec) -> NDArray[np.bool_]:
    """Quantum basis states with Fock occupation <= D - 1."""
    return tile_mask(chain.fock.sub_cutoff_mask(), chain.rank ** chain.sites)


def two_aux(op: Matrix, rank: int, slot: int, rest_dim: int) -> Matrix:
    """Lift an operator on aux (x) rest to aux1 (x) aux2 (x) rest, acting on aux `slot` (1 or 2)."""
    lifted = kron(identity(rank), op)
    if slot == 2:
        return lifted
    p = kron(permutation_op(rank), identity(rest_dim))
    return p @ lifted @ p
