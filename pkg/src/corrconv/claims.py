from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Literal

import numpy as np

from .async_log import log_fields
from .channels import (
    entanglement_breaking_channel,
    n1_noise_for,
    pauli_quantum_capacity,
    template_output,
)
from .config import p_grid
from .errors import ClaimComputationError
from .linalg import fidelity_with_pure, hermitian_eig, partial_trace
from .measures import correlation_report, ree_closed_form, ree_numeric
from .protocol import batch_repeater, prepare_output, run_pipeline
from .states import (
    BELL_00,
    ONE_THIRD,
    InputSpec,
    bell_diagonal_state,
    corner_block_gap,
    input_ppt_conditions,
    input_tripartite,
    params_for_gap,
    ppt_check,
    separability_conditions,
)

Verdict = Literal["confirmed", "diverges", "reproduced-on-template-only"]

OPERATING_P = ONE_THIRD
OPERATING_GAP = ONE_THIRD
SWEEP_STEP = 0.01
REE_TOL = 1e-3


@dataclass(frozen=True)
class ClaimRecord:
    claim_id: str
    statement: str
    claimed_value: str
    computed_value: str
    verdict: Verdict
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _sweep_ps() -> list[float]:
    return p_grid(ONE_THIRD, 1.0, SWEEP_STEP)


def _corner_eigs(matrix: np.ndarray) -> tuple[float, float]:
    block = matrix[np.ix_([0, 3], [0, 3])]
    values = hermitian_eig(block).values
    return float(values[0]), float(values[1])


def _claim_pauli_zero(spec: InputSpec, p: float) -> ClaimRecord:
    cap = pauli_quantum_capacity(n1_noise_for(OPERATING_P))
    ok = abs(cap.raw) <= 1e-12 and not cap.is_positive
    return ClaimRecord(
        "pauli-capacity-zero-point",
        "Pauli channel capacity at (1/6, 1/6, 0) is zero",
        "0",
        _fmt(cap.raw),
        "confirmed" if ok else "diverges",
    )


def _claim_zero_capacity_regime(spec: InputSpec, p: float) -> ClaimRecord:
    first = max(pauli_quantum_capacity(n1_noise_for(float(q))).raw for q in _sweep_ps())
    worst = max(first, entanglement_breaking_channel().quantum_capacity)
    return ClaimRecord(
        "zero-capacity-regime",
        "both channels have no quantum capacity for every p in [1/3, 1]",
        "<= 0",
        _fmt(worst),
        "confirmed" if worst <= 1e-12 else "diverges",
    )


def _claim_input_ppt(spec: InputSpec, p: float) -> ClaimRecord:
    verdicts = input_ppt_conditions(spec, p)
    lowest = min(v.min_pt_eigenvalue for v in verdicts.values())
    ok = all(v.is_ppt for v in verdicts.values())
    return ClaimRecord(
        "input-ppt",
        "input is PPT on rho_AB (A, B) and rho_ABC (B, C)",
        "all PT >= 0",
        _fmt(lowest),
        "confirmed" if ok else "diverges",
        detail=", ".join(f"{k}={v.min_pt_eigenvalue:.3g}" for k, v in verdicts.items()),
    )


def _claim_input_marginal(spec: InputSpec, p: float) -> ClaimRecord:
    rho_ab = partial_trace(input_tripartite(spec, p), [0, 1])
    expected = bell_diagonal_state(params_for_gap(spec.delta_in))
    err = float(np.max(np.abs(rho_ab.matrix - expected.matrix)))
    eigs = ", ".join(_fmt(x) for x in rho_ab.eigenvalues())
    return ClaimRecord(
        "input-marginal-form",
        "Tr_C of the input is the Bell-diagonal family with gap delta_in",
        "{1/2, 1/6, 1/6, 1/6} at delta_in = 1/3",
        eigs,
        "confirmed" if err <= 1e-12 else "diverges",
        detail=f"max entry error {err:.3g}",
    )


def _claim_input_separable(spec: InputSpec, p: float) -> ClaimRecord:
    verdict = separability_conditions(params_for_gap(spec.delta_in))
    return ClaimRecord(
        "input-separable",
        "max eigenvalue <= 1/2 and |c1|+|c2|+|c3| <= 1 for the input",
        "holds",
        f"max={_fmt(verdict.max_eigenvalue)} sum={_fmt(verdict.correlation_sum)}",
        "confirmed" if verdict.holds else "diverges",
    )


def _claim_output_ppt(spec: InputSpec, p: float) -> ClaimRecord:
    prepared = prepare_output(spec, p)
    checks = [ppt_check(prepared.sigma_ab, k) for k in (0, 1)]
    checks += [ppt_check(prepared.sigma_abc, k) for k in (0, 1, 2)]
    lowest = min(c.min_pt_eigenvalue for c in checks)
    return ClaimRecord(
        "output-ppt",
        "channel output has no negative partial transpose before the flag readout",
        "PT >= 0",
        _fmt(lowest),
        "confirmed" if all(c.is_ppt for c in checks) else "diverges",
    )


def _claim_gap_law(spec: InputSpec, p: float) -> ClaimRecord:
    gap = corner_block_gap(prepare_output(spec, p).sigma_ab)
    expected = (1.0 - p) * spec.delta_in
    return ClaimRecord(
        "output-gap-law",
        "output corner-block gap equals (1 - p) * delta_in",
        _fmt(expected),
        _fmt(gap),
        "confirmed" if abs(gap - expected) <= 1e-12 else "diverges",
    )


def _claim_two_ninths(spec: InputSpec, p: float) -> ClaimRecord:
    values = [ree_closed_form((1.0 - float(q)) * OPERATING_GAP) for q in _sweep_ps()]
    top = max(values)
    ok = abs(top - 2.0 / 9.0) <= 1e-12 and abs(values[-1]) <= 1e-12
    return ClaimRecord(
        "entanglement-bound-two-ninths",
        "closed-form entanglement over p in [1/3, 1] peaks at 2/9 and vanishes at p = 1",
        "2/9",
        _fmt(top),
        "confirmed" if ok else "diverges",
    )


def _claim_output_eigenvalues(spec: InputSpec, p: float) -> ClaimRecord:
    target = (0.5, 5.0 / 18.0)
    template = _corner_eigs(template_output((1.0 - OPERATING_P) * OPERATING_GAP).matrix)
    kraus = _corner_eigs(prepare_output(InputSpec(OPERATING_GAP), OPERATING_P).sigma_ab.matrix)

    def close(pair: tuple[float, float]) -> bool:
        return all(abs(a - b) <= 1e-12 for a, b in zip(pair, target))

    if close(kraus):
        verdict: Verdict = "confirmed"
    elif close(template):
        verdict = "reproduced-on-template-only"
    else:
        verdict = "diverges"
    return ClaimRecord(
        "output-eigenvalues",
        "output corner-block eigenvalues at p = 1/3, delta_in = 1/3",
        "1/2, 5/18",
        f"{_fmt(kraus[0])}, {_fmt(kraus[1])}",
        verdict,
        detail=f"template gives {_fmt(template[0])}, {_fmt(template[1])}",
    )


def _claim_ree_closed_vs_numeric(spec: InputSpec, p: float) -> ClaimRecord:
    sigma = prepare_output(spec, p).sigma_ab
    closed = ree_closed_form((1.0 - p) * spec.delta_in)
    numeric = ree_numeric(sigma)
    return ClaimRecord(
        "ree-closed-vs-numeric",
        "closed-form entanglement equals the numerically minimized relative entropy",
        _fmt(closed),
        _fmt(numeric),
        "confirmed" if abs(closed - numeric) <= REE_TOL else "diverges",
        detail="two-qubit PPT output is separable" if numeric <= REE_TOL else "",
    )


def _claim_branch_npt(spec: InputSpec, p: float) -> ClaimRecord:
    result = run_pipeline(spec, p, seed=0)
    if result.branch0 is None:
        return ClaimRecord(
            "post-selected-branch-npt",
            "flag-0 branch is the Bell state with negative partial transpose",
            "-1/2",
            "none",
            "diverges",
            detail="no coherent branch at this p",
        )
    fidelity = fidelity_with_pure(result.branch0, BELL_00)
    pt_min = float(result.branch0_min_pt_eigenvalue)
    ok = fidelity >= 1.0 - 1e-10 and abs(pt_min + 0.5) <= 1e-9
    return ClaimRecord(
        "post-selected-branch-npt",
        "flag-0 branch is the Bell state with negative partial transpose",
        "-1/2",
        _fmt(pt_min),
        "confirmed" if ok else "diverges",
        detail=f"fidelity {fidelity:.12g}",
    )


def _claim_discord_positive(spec: InputSpec, p: float) -> ClaimRecord:
    report = correlation_report(params_for_gap(spec.delta_in), p, spec.delta_in)
    return ClaimRecord(
        "discord-positive",
        "output keeps positive quantum discord",
        "> 0",
        _fmt(report.discord),
        "confirmed" if report.discord > 1e-9 else "diverges",
    )


def _claim_discord_vanishes(spec: InputSpec, p: float) -> ClaimRecord:
    report = correlation_report(params_for_gap(spec.delta_in), 1.0, spec.delta_in)
    return ClaimRecord(
        "discord-vanishes-full-noise",
        "discord drops to 0 and I reduces to C at p = 1",
        "0",
        _fmt(report.discord),
        "confirmed" if abs(report.discord) <= 1e-9 else "diverges",
    )


def _claim_coherent_info_full_noise(spec: InputSpec, p: float) -> ClaimRecord:
    report = correlation_report(params_for_gap(spec.delta_in), 1.0, spec.delta_in)
    return ClaimRecord(
        "coherent-info-full-noise",
        "coherent information C - 1 vanishes at p = 1",
        "0",
        _fmt(report.coherent_info),
        "confirmed" if abs(report.coherent_info) <= 1e-9 else "diverges",
        detail="I - 1 with I = C < 1",
    )


def _claim_repeater_yield(spec: InputSpec, p: float) -> ClaimRecord:
    batch = batch_repeater(1000, spec, p, seed=0)
    return ClaimRecord(
        "repeater-yield",
        "post-selected yield per n transmitted qubits",
        f"floor(n(1-p)) = {batch.yield_predicted}",
        f"n*p(0) = {_fmt(batch.model_predicted)}",
        "confirmed" if math.isclose(batch.yield_predicted, batch.model_predicted, abs_tol=1.0) else "diverges",
        detail=f"n={batch.n}, sampled={batch.entangled_indices.size}",
    )


CLAIMS: tuple[tuple[str, Callable[[InputSpec, float], ClaimRecord]], ...] = (
    ("pauli-capacity-zero-point", _claim_pauli_zero),
    ("zero-capacity-regime", _claim_zero_capacity_regime),
    ("input-ppt", _claim_input_ppt),
    ("input-marginal-form", _claim_input_marginal),
    ("input-separable", _claim_input_separable),
    ("output-ppt", _claim_output_ppt),
    ("output-gap-law", _claim_gap_law),
    ("entanglement-bound-two-ninths", _claim_two_ninths),
    ("output-eigenvalues", _claim_output_eigenvalues),
    ("ree-closed-vs-numeric", _claim_ree_closed_vs_numeric),
    ("post-selected-branch-npt", _claim_branch_npt),
    ("discord-positive", _claim_discord_positive),
    ("discord-vanishes-full-noise", _claim_discord_vanishes),
    ("coherent-info-full-noise", _claim_coherent_info_full_noise),
    ("repeater-yield", _claim_repeater_yield),
)


def collect_claims(spec: InputSpec, p: float = ONE_THIRD) -> list[ClaimRecord]:
    records = []
    for claim_id, check in CLAIMS:
        try:
            records.append(check(spec, p))
        except Exception as exc:
            raise ClaimComputationError(claim_id, exc) from exc
    return records


def print_claim_report(records: list[ClaimRecord]) -> None:
    for item in records:
        extra = {"detail": repr(item.detail)} if item.detail else {}
        log_fields(
            "verify",
            f"{item.claim_id:<30} {item.verdict:<28}",
            claimed=item.claimed_value,
            computed=item.computed_value,
            **extra,
        )
    counts: dict[str, int] = {}
    for item in records:
        counts[item.verdict] = counts.get(item.verdict, 0) + 1
    log_fields("verify", "summary", **dict(sorted(counts.items())))
