# bethe.py
# Nested Bethe ansatz equations for the chain with one oscillator defect: residuals, solver, counting function.
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la
from numpy.typing import NDArray
from scipy.optimize import root

from errors import (
    BranchTrackingError,
    ConvergenceError,
    PoleProximityError,
    RootCollisionError,
    SingularJacobianError,
    StateFormatError,
)
from lax import POLE_EPSILON
from thermo import bulk_quantile
from validate_state import validate_state_document

logger = logging.getLogger(__name__)

STATE_SCHEMA = 1


class BetheVariant(str, Enum):
    L_DEFECT = "L"
    LHAT_DEFECT = "Lhat"


@dataclass(frozen=True)
class BetheState:
    """Root sets lambda_i^(k), k = 1..rank-1, for a chain of `sites` sites plus the defect.

    Level 0 is implicit: `sites` roots pinned at 0.
    """

    rank: int
    sites: int
    theta: complex = 0j
    variant: BetheVariant = BetheVariant.L_DEFECT
    roots: Tuple[Tuple[complex, ...], ...] = ()
    quantum_numbers: Optional[Tuple[Tuple[float, ...], ...]] = None

    def __post_init__(self):
        if self.rank < 2:
            raise StateFormatError(f"rank must be >= 2, got {self.rank}")
        if self.sites < 0:
            raise StateFormatError(f"sites must be non-negative, got {self.sites}")
        try:
            roots = tuple(tuple(complex(x) for x in level) for level in self.roots)
        except (TypeError, ValueError) as e:
            raise StateFormatError(f"roots must be numbers: {e}") from e
        if not roots:
            roots = tuple(() for _ in range(self.rank - 1))
        if len(roots) != self.rank - 1:
            raise StateFormatError(f"expected {self.rank - 1} root levels, got {len(roots)}")
        object.__setattr__(self, "roots", roots)
        object.__setattr__(self, "variant", BetheVariant(self.variant))
        object.__setattr__(self, "theta", complex(self.theta))
        if self.quantum_numbers is not None:
            try:
                qn = tuple(tuple(float(j) for j in level) for level in self.quantum_numbers)
            except (TypeError, ValueError) as e:
                raise StateFormatError(f"quantum_numbers must be numbers: {e}") from e
            if [len(q) for q in qn] != [len(r) for r in roots]:
                raise StateFormatError("quantum_numbers do not match the root counts")
            object.__setattr__(self, "quantum_numbers", qn)

    @property
    def counts(self) -> List[int]:
        return [len(level) for level in self.roots]

    @property
    def defect_level(self) -> int:
        return 1 if self.variant is BetheVariant.L_DEFECT else self.rank - 1

    def level(self, k: int) -> Tuple[complex, ...]:
        """Roots at level k, 0..rank; level 0 is the sites, level rank is empty."""
        if k == 0:
            return (0j,) * self.sites
        if k == self.rank:
            return ()
        return self.roots[k - 1]

    def flat(self) -> NDArray[np.complex128]:
        return np.array([x for level in self.roots for x in level], dtype=np.complex128)

    def with_flat(self, values: Sequence[complex]) -> "BetheState":
        out, i = [], 0
        for m in self.counts:
            out.append(tuple(complex(v) for v in values[i:i + m]))
            i += m
        return replace(self, roots=tuple(out))


@dataclass(frozen=True)
class BAEResidual:
    values: Tuple[complex, ...]
    max_abs: float

    @classmethod
    def of(cls, values: Sequence[complex]) -> "BAEResidual":
        vals = tuple(complex(v) for v in values)
        return cls(vals, max((abs(v) for v in vals), default=0.0))


@dataclass(frozen=True)
class SolveOptions:
    max_iter: int = 200
    step_damping: float = 0.5
    tol: float = 1e-10
    delta: float = 1e-9


@dataclass
class SolveResult:
    state: BetheState
    residual: BAEResidual
    iterations: int
    trace: List[float] = field(default_factory=list)
    method: str = "newton"


# ---------------------------------------------------------------- elementary factors


def elementary_function(n: int, lam: complex, eps: float = POLE_EPSILON) -> complex:
    """e_n(lam) = (lam + i n/2) / (lam - i n/2)."""
    if n == 0:
        return 1 + 0j
    den = lam - 0.5j * n
    if abs(den) < eps:
        raise PoleProximityError(f"e_{n}", lam, abs(den))
    return (lam + 0.5j * n) / den


def defect_factor(sign: str, lam: complex, eps: float = POLE_EPSILON) -> complex:
    if sign == "+":
        return lam + 0.5j
    if sign == "-":
        den = lam - 0.5j
        if abs(den) < eps:
            raise PoleProximityError("defect factor e-", lam, abs(den))
        return 1 / den
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def _log_e(n: int, u: complex, eps: float) -> complex:
    return np.log(elementary_function(n, u, eps))


def _dlog_e(n: int, u: complex) -> complex:
    return -1j * n / (u * u + n * n / 4)


def _wrap(z: complex) -> complex:
    """Imaginary part into (-pi, pi]."""
    im = -((-z.imag + np.pi) % (2 * np.pi) - np.pi)
    return complex(z.real, im)


def _defect_sign(state: BetheState, k: int) -> Optional[str]:
    if k != state.defect_level:
        return None
    return "+" if state.variant is BetheVariant.L_DEFECT else "-"


# ---------------------------------------------------------------- residual and Jacobian


def bae_residual(state: BetheState, include_self: bool = True, eps: float = POLE_EPSILON) -> BAEResidual:
    """Logarithmic residual log(LHS) - log(RHS) per root, imaginary part taken mod 2 pi.

    include_self keeps the j = i factor e_2(0) = -1 together with the leading minus sign;
    otherwise both are dropped.
    """
    out: List[complex] = []
    for k in range(1, state.rank):
        level = state.level(k)
        sign = _defect_sign(state, k)
        for i, x in enumerate(level):
            lhs = 0j if sign is None else np.log(defect_factor(sign, x - state.theta, eps))
            rhs = 1j * np.pi if include_self else 0j
            for y in state.level(k - 1):
                rhs += _log_e(-1, x - y, eps)
            for j, xj in enumerate(level):
                if j == i and not include_self:
                    continue
                rhs += _log_e(2, x - xj, eps)
            for z in state.level(k + 1):
                rhs += _log_e(-1, x - z, eps)
            out.append(_wrap(lhs - rhs))
    return BAEResidual.of(out)


def find_collision(state: BetheState, delta: float) -> Optional[RootCollisionError]:
    for k in range(1, state.rank):
        level = state.level(k)
        for i in range(len(level)):
            for j in range(i + 1, len(level)):
                d = abs(level[i] - level[j])
                if d < delta:
                    return RootCollisionError(k, (i, j), d, delta)
    return None


def bae_jacobian(state: BetheState) -> NDArray[np.complex128]:
    """d(residual_i)/d(root_j) over the stacked roots (the residual is holomorphic in the roots)."""
    offsets = np.cumsum([0] + state.counts)
    size = int(offsets[-1])
    jac = np.zeros((size, size), dtype=np.complex128)
    for k in range(1, state.rank):
        level = state.level(k)
        sign = _defect_sign(state, k)
        for i, x in enumerate(level):
            row = offsets[k - 1] + i
            u = x - state.theta
            diag = 0j
            if sign == "+":
                diag += 1 / (u + 0.5j)
            elif sign == "-":
                diag -= 1 / (u - 0.5j)
            for y in state.level(k - 1):
                diag -= _dlog_e(-1, x - y)
            for j, xj in enumerate(level):
                if j != i:
                    g = _dlog_e(2, x - xj)
                    diag -= g
                    jac[row, offsets[k - 1] + j] = g
            for z in state.level(k + 1):
                diag -= _dlog_e(-1, x - z)
            jac[row, row] = diag
            # neighbouring levels that carry free roots
            if k >= 2:
                for j, y in enumerate(state.level(k - 1)):
                    jac[row, offsets[k - 2] + j] = _dlog_e(-1, x - y)
            if k + 1 <= state.rank - 1:
                for j, z in enumerate(state.level(k + 1)):
                    jac[row, offsets[k] + j] = _dlog_e(-1, x - z)
    return jac


# ---------------------------------------------------------------- solver


def _newton(initial: BetheState, options: SolveOptions) -> SolveResult:
    state = initial
    residual = bae_residual(state)
    trace = [residual.max_abs]
    iterations = 0
    while residual.max_abs > options.tol and iterations < options.max_iter:
        collision = find_collision(state, options.delta)
        if collision is not None:
            raise collision
        jac = bae_jacobian(state)
        f = np.array(residual.values)
        try:
            step = la.solve(jac, -f)
        except (la.LinAlgError, ValueError) as e:
            raise SingularJacobianError(f"Jacobian singular at iteration {iterations}: {e}") from e
        if not np.all(np.isfinite(step)):
            raise SingularJacobianError(f"non-finite Newton step at iteration {iterations}")
        x = state.flat()
        t = 1.0
        while True:
            candidate = state.with_flat(x + t * step)
            try:
                cand_res = bae_residual(candidate)
            except PoleProximityError:
                cand_res = None
            if cand_res is not None and (cand_res.max_abs < residual.max_abs or t < 1e-4):
                break
            t *= options.step_damping
            if t < 1e-12:
                raise ConvergenceError(f"line search failed at iteration {iterations}", trace)
        state, residual = candidate, cand_res
        iterations += 1
        trace.append(residual.max_abs)
        logger.debug("newton iter=%d residual=%.3e damping=%g", iterations, residual.max_abs, t)
    if residual.max_abs > options.tol:
        raise ConvergenceError(
            f"no convergence after {iterations} iterations (residual {residual.max_abs:.3e})", trace
        )
    return SolveResult(state, residual, iterations, trace, "newton")


def _levenberg_marquardt(initial: BetheState, options: SolveOptions) -> SolveResult:
    size = len(initial.flat())

    def split(z):
        return np.concatenate([z.real, z.imag])

    def join(v):
        return v[:size] + 1j * v[size:]

    def fun(v):
        return split(np.array(bae_residual(initial.with_flat(join(v))).values, dtype=np.complex128))

    def jac(v):
        j = bae_jacobian(initial.with_flat(join(v)))
        return np.block([[j.real, -j.imag], [j.imag, j.real]])

    collision = find_collision(initial, options.delta)
    if collision is not None:
        raise collision
    sol = root(fun, split(initial.flat()), jac=jac, method="lm",
               options={"maxiter": options.max_iter * 100, "xtol": 1e-15, "ftol": 1e-15})
    state = initial.with_flat(join(sol.x))
    residual = bae_residual(state)
    trace = [residual.max_abs]
    if residual.max_abs > options.tol:
        raise ConvergenceError(f"least-squares fallback stopped at residual {residual.max_abs:.3e}", trace)
    return SolveResult(state, residual, int(sol.nfev), trace, "lm")


def solve_bae(initial: BetheState, options: Optional[SolveOptions] = None, method: str = "newton") -> SolveResult:
    """Damped Newton on the stacked logarithmic residual; `method="lm"` uses scipy's least squares."""
    options = options or SolveOptions()
    if not initial.flat().size:
        return SolveResult(initial, BAEResidual.of(()), 0, [0.0], method)
    if method == "newton":
        return _newton(initial, options)
    if method == "lm":
        return _levenberg_marquardt(initial, options)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------- counting function


def _theta(n: int, u: complex) -> complex:
    return 2 * np.arctan(2 * u / n)


def _check_branch(n: int, u: complex, eps: float = 1e-12) -> None:
    if abs(u.real) < eps and abs(u.imag) >= n / 2:
        raise BranchTrackingError(f"phase theta_{n} evaluated on its branch cut at {u!r}")


def counting_function(state: BetheState, k: int, lam: float) -> float:
    """h^(k)(lam); odd in lam for theta = 0 and a root set symmetric under lam -> -lam."""
    if not 1 <= k <= state.rank - 1:
        raise ValueError(f"level {k} outside 1..{state.rank - 1}")
    total = 0j
    for n, roots, weight in ((1, state.level(k - 1), 1), (2, state.level(k), -1), (1, state.level(k + 1), 1)):
        for x in roots:
            u = lam - x
            _check_branch(n, u)
            total += weight * _theta(n, u)
    if k == state.defect_level:
        u = lam - state.theta
        _check_branch(1, u)
        total += 0.5 * _theta(1, u)
    return float((total / (2 * np.pi)).real)


def _a(n: int, u: complex) -> complex:
    return n / (2 * np.pi * (u * u + n * n / 4))


def counting_density(state: BetheState, k: int, lam: float) -> float:
    """(1/N) dh^(k)/dlam."""
    total = 0j
    for x in state.level(k - 1):
        total += _a(1, lam - x)
    for x in state.level(k):
        total -= _a(2, lam - x)
    for x in state.level(k + 1):
        total += _a(1, lam - x)
    if k == state.defect_level:
        total += 0.5 * _a(1, lam - state.theta)
    return float(total.real) / max(state.sites, 1)


def fermi_sea_state(
    rank: int, sites: int, theta: complex = 0j, variant: BetheVariant = BetheVariant.L_DEFECT
) -> BetheState:
    """Real roots filling every level at the quantiles of the bulk density sigma_0^(k)."""
    levels, numbers = [], []
    for k in range(1, rank):
        m = sites * (rank - k) // rank
        levels.append(tuple(complex(bulk_quantile(rank, k, (j - 0.5) / sites)) for j in range(1, m + 1)))
        numbers.append(tuple(j - (m + 1) / 2 for j in range(1, m + 1)))
    return BetheState(rank, sites, theta, variant, tuple(levels), tuple(numbers))


# ---------------------------------------------------------------- JSON


def state_to_json(state: BetheState, metadata: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    levels = []
    for k, level in enumerate(state.roots, start=1):
        entry: Dict[str, Any] = {"k": k, "roots": [[x.real, x.imag] for x in level]}
        if state.quantum_numbers is not None:
            entry["quantum_numbers"] = list(state.quantum_numbers[k - 1])
        levels.append(entry)
    return {
        "schema": STATE_SCHEMA,
        "rank": state.rank,
        "sites": state.sites,
        "theta": [state.theta.real, state.theta.imag],
        "variant": state.variant.value,
        "levels": levels,
        "metadata": metadata or {},
    }


def state_from_json(doc: Dict[str, Any]) -> BetheState:
    problems = validate_state_document(doc)
    if problems:
        raise StateFormatError("; ".join(problems))
    rank = int(doc["rank"])
    by_k = {int(level["k"]): level for level in doc.get("levels", [])}
    roots, numbers, have_numbers = [], [], True
    for k in range(1, rank):
        level = by_k.get(k, {"roots": []})
        roots.append(tuple(complex(re, im) for re, im in level["roots"]))
        if "quantum_numbers" in level:
            numbers.append(tuple(level["quantum_numbers"]))
        else:
            have_numbers = False
    theta = doc.get("theta", [0.0, 0.0])
    return BetheState(
        rank=rank,
        sites=int(doc["sites"]),
        theta=complex(theta[0], theta[1]),
        variant=BetheVariant(doc.get("variant", "L")),
        roots=tuple(roots),
        quantum_numbers=tuple(numbers) if have_numbers and rank > 1 else None,
    )


def load_state(path: str | Path) -> BetheState:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise StateFormatError(f"{path}: invalid JSON ({e})") from e
    return state_from_json(doc)


def save_state(state: BetheState, path: str | Path, metadata: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(path)
    path.write_text(json.dumps(state_to_json(state, metadata), indent=2) + "\n", encoding="utf-8")
    return path
