"""Input states: the Bell-diagonal two-qubit family, the tripartite
input with its classical flag, closed-form eigenvalues and PPT checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import StateError
from .linalg import (
    NEGATIVE_EIG_TOL,
    DensityMatrix,
    kron,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    tensor,
)

ONE_THIRD = 1.0 / 3.0
_EDGE_TOL = 1e-12

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

_S2 = 1.0 / math.sqrt(2.0)
BELL_00 = np.array([_S2, 0, 0, _S2], dtype=np.complex128)
BELL_10 = np.array([_S2, 0, 0, -_S2], dtype=np.complex128)
PSI_PLUS = np.array([0, _S2, _S2, 0], dtype=np.complex128)
PSI_MINUS = np.array([0, _S2, -_S2, 0], dtype=np.complex128)
BELL_BASIS = (BELL_00, BELL_10, PSI_PLUS, PSI_MINUS)


def bell_projector(index: int) -> np.ndarray:
    """|beta><beta| for BELL_BASIS[index] (beta00, beta10, psi+, psi-)."""
    v = BELL_BASIS[index]
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class BellDiagonalParams:
    """Local Bloch z-components r, s and correlation coefficients c1..c3."""

    r: float = 0.0
    s: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0

    def __post_init__(self) -> None:
        for name in ("r", "s", "c1", "c2", "c3"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or abs(value) > 1.0 + _EDGE_TOL:
                raise StateError(f"{name}={value} outside [-1, 1]")
            object.__setattr__(self, name, value)

    @property
    def correlations(self) -> tuple[float, float, float]:
        return (self.c1, self.c2, self.c3)

    @property
    def is_bell_diagonal(self) -> bool:
        return self.r == 0.0 and self.s == 0.0


@dataclass(frozen=True)
class EigenQuadruple:
    v_plus: float
    v_minus: float
    u_plus: float
    u_minus: float

    def values(self) -> tuple[float, float, float, float]:
        return (self.v_plus, self.v_minus, self.u_plus, self.u_minus)

    def total(self) -> float:
        return sum(self.values())

    def is_valid(self, tol: float = NEGATIVE_EIG_TOL) -> bool:
        return min(self.values()) >= -tol and abs(self.total() - 1.0) <= 1e-12


@dataclass(frozen=True)
class InputSpec:
    """Input gap (v+ - v-)_in and the optional flag mixture (p0, p1).

    Without an explicit ``flag_mix`` the flag-0 weight follows the output
    decomposition: p0 = (1 - p) * delta_in for channel noise p.
    """

    delta_in: float = ONE_THIRD
    flag_mix: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        delta = float(self.delta_in)
        if not (0.0 < delta <= ONE_THIRD + _EDGE_TOL):
            raise StateError(f"delta_in={delta} outside (0, 1/3]")
        object.__setattr__(self, "delta_in", min(delta, ONE_THIRD))
        if self.flag_mix is not None:
            p0, p1 = (float(x) for x in self.flag_mix)
            if p0 < 0 or p1 < 0 or abs(p0 + p1 - 1.0) > _EDGE_TOL:
                raise StateError(f"flag mixture {self.flag_mix} is not a probability pair")
            object.__setattr__(self, "flag_mix", (p0, p1))

    def flag_probabilities(self, p: float = ONE_THIRD) -> tuple[float, float]:
        if self.flag_mix is not None:
            return self.flag_mix
        p0 = (1.0 - p) * self.delta_in
        return (p0, 1.0 - p0)


class PptVerdict(NamedTuple):
    is_ppt: bool
    min_pt_eigenvalue: float


@dataclass(frozen=True)
class SeparabilityVerdict:
    max_eigenvalue: float
    max_eigenvalue_ok: bool
    correlation_sum: float
    # None when r or s is nonzero: the |c| sum test only covers Bell-diagonal states.
    correlation_sum_ok: bool | None

    @property
    def holds(self) -> bool:
        return self.max_eigenvalue_ok and self.correlation_sum_ok is not False


def params_for_gap(delta: float) -> BellDiagonalParams:
    """(delta, -delta, 1 - 2 delta): the Bell-diagonal state whose even-parity
    block gap is ``delta`` and whose odd block is (delta/2) * I."""
    return BellDiagonalParams(r=0.0, s=0.0, c1=delta, c2=-delta, c3=1.0 - 2.0 * delta)


def formula_eigenvalues(params: BellDiagonalParams) -> EigenQuadruple:
    r, s, c1, c2, c3 = params.r, params.s, params.c1, params.c2, params.c3
    odd = math.sqrt((r - s) ** 2 + (c1 + c2) ** 2)
    even = math.sqrt((r + s) ** 2 + (c1 - c2) ** 2)
    return EigenQuadruple(
        v_plus=(1.0 - c3 + odd) / 4.0,
        v_minus=(1.0 - c3 - odd) / 4.0,
        u_plus=(1.0 + c3 + even) / 4.0,
        u_minus=(1.0 + c3 - even) / 4.0,
    )


# rho_AC carries the same parameterization; its quadruple is (kappa+-, tau+-).
ac_eigenvalues = formula_eigenvalues


def bell_diagonal_state(params: BellDiagonalParams) -> DensityMatrix:
    lowest = min(formula_eigenvalues(params).values())
    if lowest < -NEGATIVE_EIG_TOL:
        raise StateError(f"parameters {params} give negative eigenvalue {lowest:.3e}")
    m = kron(PAULI_I, PAULI_I)
    m = m + params.r * kron(PAULI_Z, PAULI_I) + params.s * kron(PAULI_I, PAULI_Z)
    for c, sigma in zip(params.correlations, (PAULI_X, PAULI_Y, PAULI_Z)):
        m = m + c * kron(sigma, sigma)
    return DensityMatrix(m / 4.0, (2, 2))


def flag_state(p0: float, p1: float) -> DensityMatrix:
    return DensityMatrix(np.diag([p0, p1]).astype(np.complex128), (2,))


def input_tripartite(spec: InputSpec, p: float = ONE_THIRD) -> DensityMatrix:
    """rho_ABC = rho_AB (x) (p0|0><0| + p1|1><1|), flag C separable from AB.

    ``p`` is only used to resolve the default flag mixture.
    """
    rho_ab = bell_diagonal_state(params_for_gap(spec.delta_in))
    return tensor(rho_ab, flag_state(*spec.flag_probabilities(p)))


def is_x_shaped(rho: DensityMatrix, tol: float = 1e-12) -> bool:
    if rho.subsystem_dims != (2, 2):
        return False
    mask = np.ones((4, 4), dtype=bool)
    np.fill_diagonal(mask, False)
    mask[np.arange(4), 3 - np.arange(4)] = False
    return bool(np.all(np.abs(rho.matrix[mask]) < tol))


def corner_block_gap(rho: DensityMatrix) -> float:
    """Eigenvalue gap of the {|00>, |11>} block of a two-qubit X state."""
    if not is_x_shaped(rho):
        raise StateError("corner_block_gap needs a two-qubit X-shaped state")
    a = rho.matrix[0, 0].real
    b = rho.matrix[3, 3].real
    g = abs(rho.matrix[0, 3])
    return math.sqrt((a - b) ** 2 + 4.0 * g * g)


def separability_conditions(params: BellDiagonalParams) -> SeparabilityVerdict:
    top = max(formula_eigenvalues(params).values())
    total = sum(abs(c) for c in params.correlations)
    return SeparabilityVerdict(
        max_eigenvalue=top,
        max_eigenvalue_ok=top <= 0.5 + _EDGE_TOL,
        correlation_sum=total,
        correlation_sum_ok=(total <= 1.0 + _EDGE_TOL) if params.is_bell_diagonal else None,
    )


def ppt_check(rho: DensityMatrix, subsystem: int) -> PptVerdict:
    lowest = min_eigenvalue(partial_transpose(rho, subsystem))
    return PptVerdict(is_ppt=lowest >= -NEGATIVE_EIG_TOL, min_pt_eigenvalue=lowest)


def input_ppt_conditions(spec: InputSpec, p: float = ONE_THIRD) -> dict[str, PptVerdict]:
    rho_abc = input_tripartite(spec, p)
    rho_ab = partial_trace(rho_abc, [0, 1])
    return {
        "rho_ab^T_A": ppt_check(rho_ab, 0),
        "rho_ab^T_B": ppt_check(rho_ab, 1),
        "rho_abc^T_B": ppt_check(rho_abc, 1),
        "rho_abc^T_C": ppt_check(rho_abc, 2),
    }
