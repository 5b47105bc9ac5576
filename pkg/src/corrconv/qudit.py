"""d-dimensional version of the construction: A, B and the flag C are qudits.

The input mixes tau |phi><phi|_AB (x) |0><0|_C with the maximally mixed
state on the full d**3-dimensional space. The channels are modelled as one
unitary on A (x) C that shrinks the pure weight to (1 - p) tau.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .async_log import log_fields
from .errors import ChannelError, StateError
from .linalg import ComplexMatrix, DensityMatrix, dagger, embed_operator, partial_trace, pure_state

_UNITARY_TOL = 1e-12
_NORM_TOL = 1e-12


@dataclass(frozen=True)
class QuditConfig:
    d: int = 2
    schmidt_b: tuple[float, ...] = (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))
    # Two largest Schmidt coefficients of the output AB state; the two largest b_i when unset.
    schmidt_a: Optional[tuple[float, float]] = None
    # max(b1 b2, c1 c2); the flag is |0>, so c1 c2 = 0 unless given.
    m: Optional[float] = None
    p: float = 1.0 / 3.0
    flag_c: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 2:
            raise StateError(f"qudit dimension must be an integer >= 2, got {self.d}")
        b = tuple(float(x) for x in self.schmidt_b)
        if not b or len(b) > self.d:
            raise StateError(f"need between 1 and d={self.d} Schmidt coefficients, got {len(b)}")
        if min(b) < 0.0:
            raise StateError("Schmidt coefficients must be nonnegative")
        if any(x < y for x, y in zip(b, b[1:])):
            raise StateError(f"Schmidt coefficients must be descending, got {b}")
        norm = sum(x * x for x in b)
        if abs(norm - 1.0) > _NORM_TOL:
            raise StateError(f"sum of squared Schmidt coefficients is {norm!r}, not 1")
        object.__setattr__(self, "schmidt_b", b + (0.0,) * (self.d - len(b)))
        if self.schmidt_a is not None:
            a1, a2 = (float(x) for x in self.schmidt_a)
            if not a1 >= a2 >= 0.0:
                raise StateError(f"need a1 >= a2 >= 0, got ({a1}, {a2})")
            object.__setattr__(self, "schmidt_a", (a1, a2))
        if self.m is not None and self.m < 0.0:
            raise StateError(f"M must be nonnegative, got {self.m}")
        if not 0.0 <= self.p <= 1.0:
            raise StateError(f"channel noise p={self.p} outside [0, 1]")

    @property
    def a1a2(self) -> tuple[float, float]:
        if self.schmidt_a is not None:
            return self.schmidt_a
        return self.schmidt_b[0], self.schmidt_b[1]

    @property
    def big_m(self) -> float:
        if self.m is not None:
            return self.m
        return max(self.schmidt_b[0] * self.schmidt_b[1], self.flag_c[0] * self.flag_c[1])

    @property
    def gamma(self) -> float:
        return 1.0 - self.p

    @property
    def premise_holds(self) -> bool:
        a1, a2 = self.a1a2
        return self.big_m < a1 * a2

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.d, self.d, self.d)


@dataclass(frozen=True)
class QuditVerdict:
    tau: float
    tau_gamma: float
    threshold: float
    entangled: bool
    premise_holds: bool
    # Same test with d**2, the dimension the AB-marginal PPT check agrees with.
    marginal_entangled: bool = False

    def line(self) -> str:
        return (
            f"tau={self.tau:.12g} tau_gamma={self.tau_gamma:.12g} "
            f"threshold={self.threshold:.12g} entangled={str(self.entangled).lower()}"
        )


def tau(config: QuditConfig) -> float:
    return 1.0 / (1.0 + config.big_m * config.d)


@functools.lru_cache(maxsize=None)
def _note_identity_normalization(total_dim: int) -> None:
    log_fields("qudit", "maximally mixed term spans the full A(x)B(x)C space", identity_dim=total_dim)


def schmidt_vector(config: QuditConfig) -> ComplexMatrix:
    """|phi>_AB (x) |0>_C with |phi> = sum_i b_i |i>_A |i>_B."""
    d = config.d
    phi = np.zeros(d * d, dtype=np.complex128)
    for i, b in enumerate(config.schmidt_b):
        phi[i * d + i] = b
    flag = np.zeros(d, dtype=np.complex128)
    flag[0] = 1.0
    return np.kron(phi, flag)


def _mixture(vector: ComplexMatrix, weight: float, dims: Sequence[int]) -> DensityMatrix:
    if not 0.0 <= weight <= 1.0:
        raise StateError(f"mixture weight {weight} outside [0, 1]")
    total = math.prod(dims)
    _note_identity_normalization(total)
    pure = pure_state(vector, dims).matrix
    mixed = np.eye(total, dtype=np.complex128) / total
    return DensityMatrix(weight * pure + (1.0 - weight) * mixed, tuple(dims))


def qudit_input(config: QuditConfig, weight: Optional[float] = None) -> DensityMatrix:
    w = tau(config) if weight is None else weight
    return _mixture(schmidt_vector(config), w, config.dims)


def check_unitary(u: ComplexMatrix, dim: int) -> ComplexMatrix:
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (dim, dim):
        raise ChannelError(f"U_AC must be {dim}x{dim}, got {u.shape}")
    err = float(np.max(np.abs(dagger(u) @ u - np.eye(dim))))
    if err > _UNITARY_TOL:
        raise ChannelError(f"U_AC is not unitary (error {err:.3e})")
    return u


def complete_unitary(columns: ComplexMatrix, positions: Sequence[int], dim: int) -> ComplexMatrix:
    """Unitary whose column positions[k] is columns[:, k]; the remaining
    columns are an orthonormal basis of the complement."""
    cols = np.asarray(columns, dtype=np.complex128)
    gram = dagger(cols) @ cols
    if float(np.max(np.abs(gram - np.eye(cols.shape[1])))) > 1e-10:
        raise ChannelError("target vectors are not orthonormal")
    rest = scipy.linalg.null_space(dagger(cols))
    u = np.zeros((dim, dim), dtype=np.complex128)
    fill = iter(rest.T)
    for j in range(dim):
        u[:, j] = cols[:, positions.index(j)] if j in positions else next(fill)
    return u


def default_u_ac(d: int) -> ComplexMatrix:
    """U_AC |i>_A |0>_C = (F|i>)_A |0>_C with F the d-point Fourier transform."""
    k = np.arange(d)
    fourier = np.exp(2j * np.pi * np.outer(k, k) / d) / math.sqrt(d)
    zero = np.zeros(d, dtype=np.complex128)
    zero[0] = 1.0
    targets = np.stack([np.kron(fourier[:, i], zero) for i in range(d)], axis=1)
    return complete_unitary(targets, [i * d for i in range(d)], d * d)


def _full_rotation(u_ac: ComplexMatrix, config: QuditConfig) -> ComplexMatrix:
    u_ac = check_unitary(u_ac, config.d * config.d)
    return embed_operator(u_ac, [0, 2], config.dims)


def qudit_evolve(config: QuditConfig, u_ac: Optional[ComplexMatrix] = None) -> DensityMatrix:
    """gamma tau |psi><psi| + (1 - gamma tau) I/D with |psi> = U_AC |phi>|0>."""
    u_ac = default_u_ac(config.d) if u_ac is None else u_ac
    psi = _full_rotation(u_ac, config) @ schmidt_vector(config)
    return _mixture(psi, config.gamma * tau(config), config.dims)


def qudit_unrotate(sigma: DensityMatrix, u_ac: ComplexMatrix, config: QuditConfig) -> DensityMatrix:
    u = _full_rotation(u_ac, config)
    return DensityMatrix(dagger(u) @ sigma.matrix @ u, sigma.subsystem_dims)


def qudit_marginal_ab(config: QuditConfig, u_ac: Optional[ComplexMatrix] = None) -> DensityMatrix:
    return partial_trace(qudit_evolve(config, u_ac), [0, 1])


def qudit_entangled(tau_gamma: float, a1: float, a2: float, d: int) -> bool:
    if min(tau_gamma, a1, a2) < 0.0 or d < 2:
        raise StateError(f"invalid threshold inputs tau_gamma={tau_gamma}, a=({a1}, {a2}), d={d}")
    return tau_gamma > 1.0 / (1.0 + a1 * a2 * d)


def isotropic_like_state(weight: float, a1: float, a2: float, d: int = 2) -> DensityMatrix:
    """weight |psi><psi| + (1 - weight) I/d**2 with |psi> = a1|00> + a2|11>."""
    psi = np.zeros(d * d, dtype=np.complex128)
    psi[0] = a1
    psi[d + 1] = a2
    return _mixture(psi, weight, (d, d))


def qudit_report(config: QuditConfig) -> QuditVerdict:
    t = tau(config)
    tg = config.gamma * t
    a1, a2 = config.a1a2
    threshold = 1.0 / (1.0 + a1 * a2 * config.d)
    if not config.premise_holds:
        log_fields("qudit", "M is not below a1*a2; verdict reported as is", m=config.big_m, a1a2=a1 * a2)
    entangled = qudit_entangled(tg, a1, a2, config.d)
    marginal = qudit_entangled(tg, a1, a2, config.d**2)
    if marginal != entangled:
        log_fields(
            "qudit",
            "threshold with local d and the AB-marginal PPT test (d**2) disagree",
            entangled=entangled,
            marginal_entangled=marginal,
            marginal_threshold=1.0 / (1.0 + a1 * a2 * config.d**2),
        )
    return QuditVerdict(
        tau=t,
        tau_gamma=tg,
        threshold=threshold,
        entangled=entangled,
        premise_holds=config.premise_holds,
        marginal_entangled=marginal,
    )
