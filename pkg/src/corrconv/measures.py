"""Correlation and capacity functionals of the channel output, in bits.

The closed forms take the *input* Bell-diagonal parameters plus the phase
flip noise p and work on the output coefficients ((1-p)c1, (1-p)c2, c3).
The matrix forms take a density matrix directly and serve as oracles.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import numpy.typing as npt
from scipy.special import xlogy

from .async_log import log_fields
from .channels import apply_joint, output_params
from .errors import DimensionMismatchError, StateError
from .linalg import (
    DensityMatrix,
    partial_trace,
    quantum_relative_entropy,
    random_density_matrix,
    tensor,
    von_neumann_entropy,
)
from .states import (
    BELL_BASIS,
    BellDiagonalParams,
    bell_diagonal_state,
    corner_block_gap,
    flag_state,
    formula_eigenvalues,
)

_LN2 = math.log(2.0)
_WEIGHT_TOL = 1e-12

REE_LEVELS: tuple[tuple[float, float], ...] = ((0.05, 1.0), (0.01, 0.05), (0.002, 0.01))
REE_PRODUCT_CANDIDATES = 200


@dataclass(frozen=True)
class CorrelationReport:
    mutual_info: float
    classical: float
    discord: float
    coherent_info: float
    e_closed: float
    e_oracle: float
    p: float
    delta_in: float

    @property
    def discord_nonnegative(self) -> bool:
        return self.discord >= -1e-9

    @property
    def identities_hold(self) -> bool:
        return (
            abs(self.discord - (self.mutual_info - self.classical)) <= 1e-10
            and abs(self.coherent_info - (self.mutual_info - 1.0)) <= 1e-10
        )


def _xlog2x(x: npt.ArrayLike) -> npt.NDArray[np.float64]:
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, None)
    return xlogy(x, x) / _LN2


def _check_bipartite(rho_ab: DensityMatrix) -> None:
    if rho_ab.num_subsystems != 2:
        raise DimensionMismatchError(
            f"expected a bipartite state, got subsystem dims {rho_ab.subsystem_dims}"
        )


def mutual_information(rho_ab: DensityMatrix) -> float:
    _check_bipartite(rho_ab)
    s_a = von_neumann_entropy(partial_trace(rho_ab, [0]))
    s_b = von_neumann_entropy(partial_trace(rho_ab, [1]))
    return s_a + s_b - von_neumann_entropy(rho_ab)


def marginal_entropies(params: BellDiagonalParams) -> tuple[float, float]:
    def closed(z: float) -> float:
        return float(1.0 - 0.5 * _xlog2x(1.0 - z) - 0.5 * _xlog2x(1.0 + z))

    return closed(params.r), closed(params.s)


def mutual_information_from_params(params: BellDiagonalParams, p: float = 0.0) -> float:
    """Eigenvalue form: S_A + S_B + sum over lambda log2 lambda of the output."""
    out = output_params(params, p)
    s_a, s_b = marginal_entropies(out)
    return s_a + s_b + float(np.sum(_xlog2x(formula_eigenvalues(out).values())))


def _f_measure(params: BellDiagonalParams) -> tuple[float, float, float]:
    r, s, c1, c2, c3 = params.r, params.s, params.c1, params.c2, params.c3
    norm = 2.0 * (1.0 + s)
    if norm <= _WEIGHT_TOL:
        f1 = math.inf
    else:
        terms = np.clip(
            np.array([1 + r + s + c3, 1 - r + s - c3, 1 + r - s - c3, 1 - r - s + c3]), 0.0, None
        )
        f1 = float(-0.25 * np.sum(xlogy(terms, terms / norm)) / _LN2)

    def along(c: float) -> float:
        x = min(1.0, math.sqrt(r * r + c * c))
        return float(1.0 - 0.5 * _xlog2x(1.0 - x) - 0.5 * _xlog2x(1.0 + x))

    return f1, along(c1), along(c2)


def classical_correlation(params: BellDiagonalParams, p: float) -> float:
    """S(rho_A) - min(f1, f2, f3) on the output coefficients."""
    out = output_params(params, p)
    if not formula_eigenvalues(out).is_valid():
        raise StateError(f"output parameters {out} leave the PSD region")
    if not params.is_bell_diagonal:
        log_fields("warn", "classical correlation uses S(rho_A), not S(sigma_B)", r=params.r, s=params.s)
    s_a, _ = marginal_entropies(out)
    return s_a - min(_f_measure(out))


def discord(rho_ab: DensityMatrix, params: BellDiagonalParams, p: float) -> float:
    return mutual_information(rho_ab) - classical_correlation(params, p)


def coherent_information(rho_ab: DensityMatrix) -> float:
    return mutual_information(rho_ab) - 1.0


def coherent_information_from_params(params: BellDiagonalParams, p: float = 0.0) -> float:
    return mutual_information_from_params(params, p) - 1.0


def ree_closed_form(gap: float) -> float:
    if not 0.0 <= gap <= 1.0:
        raise StateError(f"gap {gap} outside [0, 1]")
    return gap


def bell_weights(rho_ab: DensityMatrix) -> npt.NDArray[np.float64]:
    """<beta_k| rho |beta_k> in the order beta00, beta10, psi+, psi-."""
    basis = np.stack(BELL_BASIS, axis=1)
    return np.clip(np.real(np.einsum("ik,ij,jk->k", basis.conj(), rho_ab.matrix, basis)), 0.0, None)


def _weights_from_correlations(c: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    c1, c2, c3 = c[..., 0], c[..., 1], c[..., 2]
    return np.stack(
        [
            (1 + c1 - c2 + c3) / 4,
            (1 - c1 + c2 + c3) / 4,
            (1 + c1 + c2 - c3) / 4,
            (1 - c1 - c2 - c3) / 4,
        ],
        axis=-1,
    )


def _bell_candidate_divergence(
    entropy: float, q: npt.NDArray[np.float64], lam: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    support = q > _WEIGHT_TOL
    q = np.where(support, q, 0.0)
    with np.errstate(divide="ignore"):
        logs = np.where(lam > 0.0, np.log2(np.clip(lam, 1e-300, None)), -np.inf)
    cross = np.where(support, q * logs, 0.0)
    return -entropy - np.sum(cross, axis=-1)


def _octahedron_grid(center: npt.NDArray[np.float64], step: float, radius: float) -> npt.NDArray[np.float64]:
    axis = np.arange(-radius, radius + step / 2, step)
    pts = center + np.array(list(itertools.product(axis, repeat=3)))
    pts = np.clip(pts, -1.0, 1.0)
    return pts[np.sum(np.abs(pts), axis=1) <= 1.0 + 1e-12]


def _twirl_optimal_weights(q: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    k = int(np.argmax(q))
    if q[k] <= 0.5:
        return q.copy()
    rest = 1.0 - q[k]
    lam = np.full(4, 1.0 / 6.0) if rest <= _WEIGHT_TOL else q * (0.5 / rest)
    lam[k] = 0.5
    return lam


def ree_numeric(sigma: DensityMatrix, *, seed: int = 0, product_candidates: int = REE_PRODUCT_CANDIDATES) -> float:
    """Min of D(sigma || rho_sep) over the Bell-diagonal separable octahedron
    (nested grid) plus the twirl-optimal point and random product states."""
    if sigma.subsystem_dims != (2, 2):
        raise DimensionMismatchError(f"ree_numeric needs two qubits, got {sigma.subsystem_dims}")
    entropy = von_neumann_entropy(sigma)
    q = bell_weights(sigma)

    best = float(_bell_candidate_divergence(entropy, q, _twirl_optimal_weights(q)))
    center = np.zeros(3)
    for step, radius in REE_LEVELS:
        pts = _octahedron_grid(center, step, radius)
        values = _bell_candidate_divergence(entropy, q, _weights_from_correlations(pts))
        i = int(np.argmin(values))
        if values[i] < best:
            best = float(values[i])
        center = pts[i]

    rng = np.random.default_rng(seed)
    for _ in range(product_candidates):
        candidate = tensor(random_density_matrix((2,), rng), random_density_matrix((2,), rng))
        best = min(best, quantum_relative_entropy(sigma, candidate))
    return max(best, 0.0)


def _input_grid(resolution: float) -> list[BellDiagonalParams]:
    axis = np.round(np.arange(-1.0, 1.0 + resolution / 2, resolution), 12)
    grid = []
    for c1, c2, c3 in itertools.product(axis, repeat=3):
        params = BellDiagonalParams(c1=float(c1), c2=float(c2), c3=float(c3))
        if formula_eigenvalues(params).is_valid():
            grid.append(params)
    return grid


def joint_output_ab(params: BellDiagonalParams, p: float) -> DensityMatrix:
    rho_abc = tensor(bell_diagonal_state(params), flag_state(1.0, 0.0))
    return partial_trace(apply_joint(rho_abc, p), [0, 1])


def joint_capacity_single_shot(
    p: float,
    resolution: float = 0.25,
    *,
    grid: Sequence[BellDiagonalParams] | None = None,
    workers: int = 1,
) -> float:
    """max over Bell-diagonal inputs of I_coh of the AB output (n = 1 term only)."""
    candidates = list(grid) if grid is not None else _input_grid(resolution)
    if not candidates:
        raise StateError("joint capacity needs a nonempty input grid")

    def evaluate(params: BellDiagonalParams) -> float:
        return coherent_information(joint_output_ab(params, p))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(evaluate, candidates))
    else:
        values = [evaluate(c) for c in candidates]
    return max(values)


def joint_capacity_sweep(
    ps: Iterable[float], resolution: float = 0.25, *, workers: int = 1
) -> list[tuple[float, float]]:
    grid = _input_grid(resolution)
    return [(p, joint_capacity_single_shot(p, grid=grid, workers=workers)) for p in ps]


def correlation_report(
    params: BellDiagonalParams, p: float, delta_in: float | None = None
) -> CorrelationReport:
    """Every measure of the output for input ``params`` under noise ``p``.

    ``delta_in`` defaults to the corner-block gap of the input state.
    """
    if delta_in is None:
        delta_in = corner_block_gap(bell_diagonal_state(params))
    sigma = bell_diagonal_state(output_params(params, p))
    mi = mutual_information(sigma)
    cc = classical_correlation(params, p)
    return CorrelationReport(
        mutual_info=mi,
        classical=cc,
        discord=mi - cc,
        coherent_info=mi - 1.0,
        e_closed=ree_closed_form((1.0 - p) * delta_in),
        e_oracle=ree_numeric(sigma),
        p=p,
        delta_in=delta_in,
    )
