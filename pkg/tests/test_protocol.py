import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from corrconv.claims import CLAIMS, collect_claims, print_claim_report
from corrconv.errors import ClaimComputationError, StateError
from corrconv.linalg import fidelity_with_pure, min_eigenvalue, partial_transpose, pure_state
from corrconv.protocol import (
    batch_repeater,
    decompose_output,
    prepare_output,
    run_pipeline,
    verify_claims,
)
from corrconv.states import (
    BELL_00,
    ONE_THIRD,
    BellDiagonalParams,
    InputSpec,
    bell_diagonal_state,
    params_for_gap,
)

OPERATING = InputSpec(ONE_THIRD)


def test_decompose_operating_output():
    sigma_ab = prepare_output(OPERATING, ONE_THIRD).sigma_ab
    dec = decompose_output(sigma_ab)
    assert dec.p0 == pytest.approx(2 / 9, abs=1e-12)
    assert_allclose(dec.branch1, np.diag([2 / 9, 1 / 6, 1 / 6, 2 / 9]), atol=1e-12)
    assert_allclose(dec.branch0 + dec.branch1, sigma_ab.matrix, atol=1e-15)


def test_decompose_input_family():
    dec = decompose_output(bell_diagonal_state(params_for_gap(0.2)))
    assert dec.p0 == pytest.approx(0.2, abs=1e-12)
    assert np.trace(dec.branch0).real == pytest.approx(dec.p0)


def test_decompose_rejects_non_x_state():
    with pytest.raises(StateError):
        decompose_output(pure_state([1, 1, 0, 0], (2, 2)))


def test_decompose_rejects_negative_corner():
    with pytest.raises(StateError):
        decompose_output(bell_diagonal_state(BellDiagonalParams(c1=-0.2, c2=0.2, c3=0.6)))


def test_pipeline_branches_at_operating_point():
    result = run_pipeline(OPERATING, ONE_THIRD, seed=1)
    assert result.p0 == pytest.approx(2 / 9, abs=1e-12)
    assert fidelity_with_pure(result.branch0, BELL_00) == pytest.approx(1.0, abs=1e-12)
    assert result.branch0_min_pt_eigenvalue == pytest.approx(-0.5, abs=1e-12)
    assert result.reconstruction_error() <= 1e-12
    assert min_eigenvalue(partial_transpose(result.sigma_ab_premeasure, 1)) >= -1e-10


def test_pipeline_localizes_only_on_flag_zero():
    for seed in range(20):
        result = run_pipeline(OPERATING, ONE_THIRD, seed=seed)
        assert result.localized == (result.sampled_outcome == 0)


def test_pipeline_full_noise_never_localizes():
    for seed in range(10):
        result = run_pipeline(OPERATING, 1.0, seed=seed)
        assert result.p0 == pytest.approx(0.0, abs=1e-15)
        assert result.branch0 is None
        assert result.sampled_outcome == 1
        assert not result.localized


@pytest.mark.parametrize("p", [ONE_THIRD, 0.5, 0.8, 1.0])
@pytest.mark.parametrize("delta", [0.1, 0.25, ONE_THIRD])
def test_flag_zero_weight_law(p, delta):
    prepared = prepare_output(InputSpec(delta), p)
    assert prepared.decomposition.p0 == pytest.approx((1 - p) * delta, abs=1e-12)
    assert prepared.flag_probabilities[0] == pytest.approx((1 - p) * delta, abs=1e-12)


def test_batch_rate_matches_flag_weight():
    batch = batch_repeater(100_000, OPERATING, ONE_THIRD, seed=7)
    assert batch.flag_bits.shape == (100_000,)
    assert batch.within_bound(sigmas=5.0)
    assert batch.yield_predicted == 66_666
    assert batch.model_predicted == pytest.approx(100_000 * 2 / 9)
    assert_array_equal(np.flatnonzero(batch.flag_bits == 0), batch.entangled_indices)


def test_batch_is_deterministic_across_workers():
    one = batch_repeater(10_000, OPERATING, 0.5, seed=3)
    again = batch_repeater(10_000, OPERATING, 0.5, seed=3)
    threaded = batch_repeater(10_000, OPERATING, 0.5, seed=3, workers=2)
    assert_array_equal(one.flag_bits, again.flag_bits)
    assert_array_equal(one.flag_bits, threaded.flag_bits)


def test_batch_single_trial():
    first = batch_repeater(1, OPERATING, ONE_THIRD, seed=11)
    second = batch_repeater(1, OPERATING, ONE_THIRD, seed=11)
    assert first.flag_bits.tolist() == second.flag_bits.tolist()
    assert first.n == 1


def test_batch_full_noise_has_no_entangled_pairs():
    batch = batch_repeater(500, OPERATING, 1.0, seed=0)
    assert batch.entangled_indices.size == 0
    assert batch.empirical_rate == 0.0


@pytest.mark.parametrize("n", [0, -5])
def test_batch_rejects_empty_runs(n):
    with pytest.raises(ValueError):
        batch_repeater(n, OPERATING, ONE_THIRD, seed=0)


def test_verify_claims_verdicts():
    verdicts = {r.claim_id: r.verdict for r in verify_claims(OPERATING, ONE_THIRD)}
    assert list(verdicts) == [claim_id for claim_id, _ in CLAIMS]
    assert verdicts["pauli-capacity-zero-point"] == "confirmed"
    assert verdicts["zero-capacity-regime"] == "confirmed"
    assert verdicts["input-ppt"] == "confirmed"
    assert verdicts["output-ppt"] == "confirmed"
    assert verdicts["output-gap-law"] == "confirmed"
    assert verdicts["entanglement-bound-two-ninths"] == "confirmed"
    assert verdicts["post-selected-branch-npt"] == "confirmed"
    assert verdicts["discord-positive"] == "confirmed"
    assert verdicts["discord-vanishes-full-noise"] == "confirmed"
    assert verdicts["output-eigenvalues"] == "reproduced-on-template-only"
    assert verdicts["ree-closed-vs-numeric"] == "diverges"
    assert verdicts["coherent-info-full-noise"] == "diverges"
    assert verdicts["repeater-yield"] == "diverges"


def test_claim_failure_names_the_claim(monkeypatch):
    def boom(spec, p):
        raise RuntimeError("no data")

    monkeypatch.setattr("corrconv.claims.CLAIMS", (("input-ppt", boom),))
    with pytest.raises(ClaimComputationError) as info:
        collect_claims(OPERATING, ONE_THIRD)
    assert info.value.claim_id == "input-ppt"


def test_print_claim_report_writes_summary(capsys):
    records = collect_claims(OPERATING, ONE_THIRD)[:2]
    print_claim_report(records)
    err = capsys.readouterr().err
    assert "[verify] pauli-capacity-zero-point" in err
    assert "[verify] summary confirmed=2" in err


def test_flag_mix_drives_the_sampled_readout():
    silent = InputSpec(ONE_THIRD, flag_mix=(0.0, 1.0))
    batch = batch_repeater(10_000, silent, ONE_THIRD, seed=4)
    assert batch.p0 == pytest.approx(2 / 9, abs=1e-12)
    assert batch.flag_p0 == pytest.approx(0.0, abs=1e-15)
    assert batch.empirical_rate == 0.0
    assert batch.model_predicted == pytest.approx(0.0, abs=1e-10)

    even = batch_repeater(10_000, InputSpec(ONE_THIRD, flag_mix=(0.5, 0.5)), ONE_THIRD, seed=4)
    assert even.flag_p0 == pytest.approx(0.5, abs=1e-12)
    assert even.within_bound(sigmas=5.0)
    assert abs(even.empirical_rate - 2 / 9) > 0.1


def test_pipeline_samples_flag_mix():
    always = InputSpec(ONE_THIRD, flag_mix=(1.0, 0.0))
    for seed in range(5):
        result = run_pipeline(always, ONE_THIRD, seed=seed)
        assert result.flag_p0 == pytest.approx(1.0, abs=1e-12)
        assert result.p0 == pytest.approx(2 / 9, abs=1e-12)
        assert result.sampled_outcome == 0
        assert result.localized


def test_default_flag_readout_equals_coherent_weight():
    batch = batch_repeater(100, OPERATING, 0.5, seed=2)
    assert batch.flag_p0 == pytest.approx(batch.p0, abs=1e-12)
