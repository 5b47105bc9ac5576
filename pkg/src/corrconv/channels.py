"""Kraus channels of the joint construction: the phase flip channel on B,
the measure-and-prepare (entanglement-breaking) channel on the flag C, the
Pauli-channel capacity formula and the Stinespring isometry."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .async_log import log_fields
from .errors import ChannelError, NoiseRegimeWarning, StateError
from .linalg import (
    ComplexMatrix,
    DensityMatrix,
    dagger,
    embed_operator,
    partial_trace,
)
from .states import (
    ONE_THIRD,
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    BellDiagonalParams,
    bell_diagonal_state,
    params_for_gap,
)

COMPLETENESS_TOL = 1e-12


@dataclass(frozen=True)
class KrausChannel:
    operators: tuple[ComplexMatrix, ...]
    label: str = "channel"

    def __post_init__(self) -> None:
        ops = tuple(np.asarray(k, dtype=np.complex128) for k in self.operators)
        if not ops:
            raise ChannelError("a Kraus channel needs at least one operator")
        shape = ops[0].shape
        if any(k.ndim != 2 or k.shape != shape for k in ops):
            raise ChannelError("Kraus operators must share one 2-D shape")
        total = sum(dagger(k) @ k for k in ops)
        err = float(np.max(np.abs(total - np.eye(shape[1]))))
        if err > COMPLETENESS_TOL:
            raise ChannelError(f"{self.label}: completeness violated by {err:.3e}")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "operators", ops)

    @property
    def input_dim(self) -> int:
        return self.operators[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.operators[0].shape[0]


@dataclass(frozen=True)
class PauliNoise:
    px: float = 0.0
    py: float = 0.0
    pz: float = 0.0

    def __post_init__(self) -> None:
        if min(self.px, self.py, self.pz) < 0.0 or self.total > 1.0 + 1e-12:
            raise ChannelError(f"invalid Pauli noise {self}")

    @property
    def total(self) -> float:
        return self.px + self.py + self.pz


class CapacityValue(NamedTuple):
    raw: float
    is_positive: bool


@dataclass(frozen=True)
class MeasurementOutcome:
    outcome: int
    probability: float
    # None for an outcome that cannot occur.
    post_state: DensityMatrix | None


def identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel((np.eye(dim, dtype=np.complex128),), label="identity")


def phase_flip(p: float) -> KrausChannel:
    """sqrt(1 - p/2) I and sqrt(p/2) Z: coherences shrink by (1 - p)."""
    if not 0.0 <= p <= 1.0:
        raise ChannelError(f"phase flip probability {p} outside [0, 1]")
    return KrausChannel(
        (math.sqrt(1.0 - p / 2.0) * PAULI_I, math.sqrt(p / 2.0) * PAULI_Z),
        label=f"phase_flip(p={p:g})",
    )


def pauli_channel(noise: PauliNoise) -> KrausChannel:
    return KrausChannel(
        (
            math.sqrt(max(0.0, 1.0 - noise.total)) * PAULI_I,
            math.sqrt(noise.px) * PAULI_X,
            math.sqrt(noise.py) * PAULI_Y,
            math.sqrt(noise.pz) * PAULI_Z,
        ),
        label=f"pauli({noise.px:g},{noise.py:g},{noise.pz:g})",
    )


def n1_noise_for(p: float) -> PauliNoise:
    """Capacity parameterization of the first channel: px = py = p/2, pz = 0."""
    return PauliNoise(px=p / 2.0, py=p / 2.0, pz=0.0)


def pauli_quantum_capacity(noise: PauliNoise) -> CapacityValue:
    px, py, pz = noise.px, noise.py, noise.pz
    raw = 1.0 - 2.0 * (
        px + py + pz + math.sqrt(px * py) + math.sqrt(px * pz) + math.sqrt(py * pz)
    )
    return CapacityValue(raw=raw, is_positive=raw > 0.0)


def kraus_apply(channel: KrausChannel, rho: DensityMatrix, target: int) -> DensityMatrix:
    dims = rho.subsystem_dims
    if not 0 <= target < len(dims):
        raise ChannelError(f"target subsystem {target} outside 0..{len(dims) - 1}")
    if channel.input_dim != dims[target] or channel.output_dim != channel.input_dim:
        raise ChannelError(
            f"{channel.label} maps {channel.input_dim}->{channel.output_dim}, "
            f"subsystem {target} has dim {dims[target]}"
        )
    out = np.zeros_like(rho.matrix)
    for k in channel.operators:
        full = embed_operator(k, [target], dims)
        out += full @ rho.matrix @ dagger(full)
    return DensityMatrix(out, dims)


@dataclass(frozen=True)
class EntanglementBreakingChannel:
    """Identity, projective measurement in the standard basis, identity.

    Outcome x is re-prepared as |x><x|, so the Kraus operators |x><x| are
    unit rank and the output carries one classical bit.
    """

    dim: int = 2
    stages: tuple[str, ...] = field(default=("identity", "measure", "identity"))

    @property
    def projectors(self) -> tuple[ComplexMatrix, ...]:
        eye = np.eye(self.dim, dtype=np.complex128)
        return tuple(np.outer(eye[x], eye[x]) for x in range(self.dim))

    @property
    def channel(self) -> KrausChannel:
        return KrausChannel(self.projectors, label="entanglement_breaking")

    @property
    def quantum_capacity(self) -> float:
        """Zero: rank-one Kraus operators break entanglement with any reference."""
        return 0.0

    def apply(self, rho: DensityMatrix, target: int) -> DensityMatrix:
        return kraus_apply(self.channel, rho, target)

    def measure(self, rho: DensityMatrix) -> list[MeasurementOutcome]:
        if rho.dim != self.dim:
            raise ChannelError(f"measure expects a {self.dim}-dim state, got {rho.dim}")
        outcomes = []
        for x, proj in enumerate(self.projectors):
            prob = float(np.clip(np.trace(proj @ rho.matrix).real, 0.0, 1.0))
            post = DensityMatrix(proj, (self.dim,)) if prob > COMPLETENESS_TOL else None
            outcomes.append(MeasurementOutcome(outcome=x, probability=prob, post_state=post))
        return outcomes


def entanglement_breaking_channel(dim: int = 2) -> EntanglementBreakingChannel:
    return EntanglementBreakingChannel(dim=dim)


def measure_flag(rho_abc: DensityMatrix, flag: int | None = None) -> list[MeasurementOutcome]:
    """Project the flag (last subsystem by default) and condition the rest on it."""
    dims = rho_abc.subsystem_dims
    flag = len(dims) - 1 if flag is None else flag
    if len(dims) < 2:
        raise ChannelError("measure_flag needs the flag plus at least one other subsystem")
    keep = [i for i in range(len(dims)) if i != flag]
    outcomes = []
    for x, proj in enumerate(entanglement_breaking_channel(dims[flag]).projectors):
        full = embed_operator(proj, [flag], dims)
        branch = full @ rho_abc.matrix @ full
        prob = float(np.clip(np.trace(branch).real, 0.0, 1.0))
        post = None
        if prob > COMPLETENESS_TOL:
            post = partial_trace(DensityMatrix(branch / np.trace(branch).real, dims), keep)
        outcomes.append(MeasurementOutcome(outcome=x, probability=prob, post_state=post))
    return outcomes


def isometric_extension(channel: KrausChannel) -> ComplexMatrix:
    """U = sum_i N_i (x) |i>_E, an isometry from the input into system (x) environment."""
    n_env = len(channel.operators)
    env = np.eye(n_env, dtype=np.complex128)
    return sum(np.kron(k, env[:, [i]]) for i, k in enumerate(channel.operators))


def apply_via_isometry(channel: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """Tr_E(U rho U^dagger) for a single-system input."""
    u = isometric_extension(channel)
    joint = DensityMatrix(u @ rho.matrix @ dagger(u), (channel.output_dim, len(channel.operators)))
    return partial_trace(joint, [0])


def apply_joint(rho_abc: DensityMatrix, p: float) -> DensityMatrix:
    """Phase flip(p) on B and the (non-selective) measure-prepare channel on C.

    The flag outcome itself is read later by ``measure_flag``.
    """
    if rho_abc.subsystem_dims != (2, 2, 2):
        raise ChannelError(f"apply_joint expects three qubits, got dims {rho_abc.subsystem_dims}")
    if p < ONE_THIRD - 1e-12:
        log_fields("warn", "first channel keeps positive quantum capacity below p=1/3", p=p)
        warnings.warn(
            f"phase flip noise p={p:g} is below the zero-capacity regime p >= 1/3",
            NoiseRegimeWarning,
            stacklevel=2,
        )
    sigma = kraus_apply(phase_flip(p), rho_abc, 1)
    return entanglement_breaking_channel().apply(sigma, 2)


def output_params(params: BellDiagonalParams, p: float) -> BellDiagonalParams:
    """Parameters after the phase flip on B: c1, c2 damped by (1 - p)."""
    return BellDiagonalParams(
        r=params.r, s=params.s, c1=(1.0 - p) * params.c1, c2=(1.0 - p) * params.c2, c3=params.c3
    )


def template_output(gap: float) -> DensityMatrix:
    """Printed output family: the input form with its gap replaced by ``gap``."""
    if not 0.0 <= gap <= 0.5:
        raise StateError(f"template gap {gap} outside [0, 1/2]")
    return bell_diagonal_state(params_for_gap(gap))


def check_completeness(operators: Sequence[ComplexMatrix]) -> float:
    total = sum(dagger(np.asarray(k)) @ np.asarray(k) for k in operators)
    return float(np.max(np.abs(total - np.eye(total.shape[0]))))
