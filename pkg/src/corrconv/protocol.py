from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple, Optional

import numpy as np
import numpy.typing as npt

from .async_log import log_fields
from .channels import apply_joint, measure_flag
from .errors import StateError
from .linalg import NEGATIVE_EIG_TOL, ComplexMatrix, DensityMatrix, min_eigenvalue, partial_trace
from .states import ONE_THIRD, InputSpec, bell_projector, input_tripartite, is_x_shaped, ppt_check

if TYPE_CHECKING:
    from .claims import ClaimRecord

BATCH_CHUNK = 4096
_CORNER_TOL = 1e-12


class OutputDecomposition(NamedTuple):
    """Unnormalized flag branches of an X-shaped output; p0 = Tr(branch0)."""

    branch0: ComplexMatrix
    branch1: ComplexMatrix
    p0: float


@dataclass(frozen=True)
class PreparedOutput:
    rho_abc: DensityMatrix
    sigma_abc: DensityMatrix
    sigma_ab: DensityMatrix
    decomposition: OutputDecomposition
    # Born-rule probabilities of the flag readout on sigma_abc.
    flag_probabilities: tuple[float, float]


@dataclass(frozen=True)
class PipelineResult:
    sigma_ab_premeasure: DensityMatrix
    branch0: Optional[DensityMatrix]
    branch1: Optional[DensityMatrix]
    p0: float
    # p(0) of the flag readout; equals p0 unless the input sets flag_mix.
    flag_p0: float
    sampled_outcome: int
    localized: bool
    branch0_min_pt_eigenvalue: Optional[float] = None

    def reconstruction_error(self) -> float:
        total = np.zeros_like(self.sigma_ab_premeasure.matrix)
        if self.branch0 is not None:
            total = total + self.p0 * self.branch0.matrix
        if self.branch1 is not None:
            total = total + (1.0 - self.p0) * self.branch1.matrix
        return float(np.max(np.abs(total - self.sigma_ab_premeasure.matrix)))


@dataclass(frozen=True)
class BatchResult:
    n: int
    flag_bits: npt.NDArray[np.int8]
    entangled_indices: npt.NDArray[np.int64]
    empirical_rate: float
    yield_predicted: int
    model_predicted: float
    p0: float
    flag_p0: float

    def binomial_bound(self, sigmas: float = 3.0) -> float:
        return sigmas * math.sqrt(self.flag_p0 * (1.0 - self.flag_p0) / self.n)

    def within_bound(self, sigmas: float = 3.0) -> bool:
        return abs(self.empirical_rate - self.flag_p0) <= self.binomial_bound(sigmas) + 1e-15


def decompose_output(sigma_ab: DensityMatrix) -> OutputDecomposition:
    """Split an X state into its coherent |00>+|11> part and the PSD remainder.

    branch0 = gamma (|00>+|11>)(<00|+<11|) with gamma the {|00>,|11>}
    coherence, so branch0 carries the input's corners exactly.
    """
    if not is_x_shaped(sigma_ab):
        raise StateError("decompose_output needs a two-qubit X-shaped state")
    corner = sigma_ab.entry(0, 3)
    if abs(corner.imag) > _CORNER_TOL or corner.real < -_CORNER_TOL:
        raise StateError(f"corner coherence {corner} is not a nonnegative real")
    gamma = max(corner.real, 0.0)

    branch0 = 2.0 * gamma * bell_projector(0)
    branch1 = sigma_ab.matrix - branch0
    lowest = min_eigenvalue(branch1)
    if lowest < -NEGATIVE_EIG_TOL:
        raise StateError(f"remainder branch has negative eigenvalue {lowest:.3e}")
    return OutputDecomposition(branch0=branch0, branch1=branch1, p0=2.0 * gamma)


def _normalized(branch: ComplexMatrix, weight: float) -> Optional[DensityMatrix]:
    if weight <= _CORNER_TOL:
        return None
    return DensityMatrix(branch / weight, (2, 2))


def prepare_output(spec: InputSpec, p: float = ONE_THIRD) -> PreparedOutput:
    """State stages shared by single runs and batches: prepare, transmit, decompose."""
    rho_abc = input_tripartite(spec, p)
    sigma_abc = apply_joint(rho_abc, p)
    sigma_ab = partial_trace(sigma_abc, [0, 1])
    decomposition = decompose_output(sigma_ab)
    outcomes = measure_flag(sigma_abc)
    flags = (outcomes[0].probability, outcomes[1].probability)
    if abs(flags[0] - decomposition.p0) > 1e-9:
        log_fields(
            "protocol",
            "flag readout differs from the coherent weight; sampling the readout",
            flag_p0=flags[0],
            p0=decomposition.p0,
        )
    return PreparedOutput(rho_abc, sigma_abc, sigma_ab, decomposition, flags)


def run_pipeline(spec: InputSpec, p: float, seed: int) -> PipelineResult:
    """One transmission and flag readout; the outcome follows the Born rule on sigma_ABC."""
    prepared = prepare_output(spec, p)
    dec = prepared.decomposition
    branch0 = _normalized(dec.branch0, dec.p0)
    branch1 = _normalized(dec.branch1, 1.0 - dec.p0)
    flag_p0 = prepared.flag_probabilities[0]

    outcome = 0 if np.random.default_rng(seed).random() < flag_p0 else 1
    pt_min = None
    localized = False
    if branch0 is not None:
        verdict = ppt_check(branch0, 0)
        pt_min = verdict.min_pt_eigenvalue
        localized = outcome == 0 and not verdict.is_ppt
    log_fields(
        "protocol", p=p, delta_in=spec.delta_in, p0=dec.p0, flag_p0=flag_p0, outcome=outcome, localized=localized
    )
    return PipelineResult(
        sigma_ab_premeasure=prepared.sigma_ab,
        branch0=branch0,
        branch1=branch1,
        p0=dec.p0,
        flag_p0=flag_p0,
        sampled_outcome=outcome,
        localized=localized,
        branch0_min_pt_eigenvalue=pt_min,
    )


def _sample_chunk(seed_seq: np.random.SeedSequence, size: int, p0: float) -> npt.NDArray[np.int8]:
    hits = np.random.default_rng(seed_seq).random(size) < p0
    return np.where(hits, 0, 1).astype(np.int8)


def batch_repeater(n: int, spec: InputSpec, p: float, seed: int, *, workers: int = 1) -> BatchResult:
    """n independent flag readouts; bit 0 marks a qubit of B known to be entangled.

    Bits are drawn with the flag readout probability p(0). Each fixed-size
    chunk draws from its own spawned stream, so the bits depend only on
    (n, spec, p, seed) and not on ``workers``.
    """
    if n < 1:
        raise ValueError(f"batch size must be at least 1, got {n}")
    prepared = prepare_output(spec, p)
    p0 = prepared.decomposition.p0
    flag_p0 = prepared.flag_probabilities[0]

    sizes = [min(BATCH_CHUNK, n - start) for start in range(0, n, BATCH_CHUNK)]
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_sample_chunk, streams, sizes, [flag_p0] * len(sizes)))
    else:
        chunks = [_sample_chunk(s, k, flag_p0) for s, k in zip(streams, sizes)]
    bits = np.concatenate(chunks)
    entangled = np.flatnonzero(bits == 0)

    result = BatchResult(
        n=n,
        flag_bits=bits,
        entangled_indices=entangled,
        empirical_rate=entangled.size / n,
        yield_predicted=math.floor(n * (1.0 - p)),
        model_predicted=n * flag_p0,
        p0=p0,
        flag_p0=flag_p0,
    )
    log_fields(
        "protocol",
        n=n,
        flag0=int(entangled.size),
        rate=result.empirical_rate,
        yield_predicted=result.yield_predicted,
        model_predicted=result.model_predicted,
    )
    return result


def verify_claims(spec: InputSpec, p: float = ONE_THIRD) -> list[ClaimRecord]:
    from .claims import collect_claims

    return collect_claims(spec, p)
