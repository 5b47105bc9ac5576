import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from corrconv.channels import (
    KrausChannel,
    PauliNoise,
    apply_joint,
    apply_via_isometry,
    check_completeness,
    entanglement_breaking_channel,
    identity_channel,
    isometric_extension,
    kraus_apply,
    measure_flag,
    n1_noise_for,
    output_params,
    pauli_channel,
    pauli_quantum_capacity,
    phase_flip,
    template_output,
)
from corrconv.errors import ChannelError, NoiseRegimeWarning
from corrconv.linalg import (
    DensityMatrix,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    pure_state,
    random_density_matrix,
    tensor,
)
from corrconv.states import (
    BELL_00,
    ONE_THIRD,
    BellDiagonalParams,
    InputSpec,
    bell_diagonal_state,
    corner_block_gap,
    flag_state,
    input_tripartite,
    params_for_gap,
)


def test_kraus_channel_rejects_incomplete_operators():
    with pytest.raises(ChannelError):
        KrausChannel((0.5 * np.eye(2),))
    with pytest.raises(ChannelError):
        KrausChannel(())


def test_identity_channel_leaves_state_unchanged():
    rng = np.random.default_rng(1)
    rho = random_density_matrix((2, 2), rng)
    assert_allclose(kraus_apply(identity_channel(), rho, 1).matrix, rho.matrix, atol=1e-15)


@pytest.mark.parametrize("p", [0.0, ONE_THIRD, 0.5, 1.0])
def test_phase_flip_damps_coherence(p):
    rho = pure_state([1, 1])
    out = kraus_apply(phase_flip(p), rho, 0)
    assert out.entry(0, 1) == pytest.approx((1 - p) * 0.5)
    assert out.entry(0, 0) == pytest.approx(0.5)
    assert check_completeness(phase_flip(p).operators) <= 1e-12


def test_phase_flip_operators_are_exact():
    ch = phase_flip(ONE_THIRD)
    assert_allclose(ch.operators[0], np.sqrt(1 - 1 / 6) * np.eye(2))
    assert_allclose(ch.operators[1], np.sqrt(1 / 6) * np.diag([1, -1]))


@pytest.mark.parametrize("p", [-0.01, 1.01])
def test_phase_flip_out_of_range(p):
    with pytest.raises(ChannelError):
        phase_flip(p)


def test_phase_flip_is_pauli_z_channel():
    p = 0.4
    assert_allclose(
        np.array(pauli_channel(PauliNoise(pz=p / 2)).operators)[[0, 3]],
        np.array(phase_flip(p).operators),
    )


def test_kraus_apply_preserves_trace_and_positivity():
    rng = np.random.default_rng(7)
    for _ in range(20):
        rho = random_density_matrix((2, 2, 2), rng)
        for target in range(3):
            out = kraus_apply(phase_flip(rng.uniform()), rho, target)
            assert np.trace(out.matrix).real == pytest.approx(1.0, abs=1e-12)
            assert min_eigenvalue(out.matrix) >= -1e-10


def test_kraus_apply_dimension_mismatch():
    rho = random_density_matrix((3, 2), np.random.default_rng(0))
    with pytest.raises(ChannelError):
        kraus_apply(phase_flip(0.5), rho, 0)


def test_pauli_capacity_examples():
    zero = pauli_quantum_capacity(PauliNoise(1 / 6, 1 / 6, 0))
    assert zero.raw == pytest.approx(0.0, abs=1e-12)
    assert not zero.is_positive
    assert pauli_quantum_capacity(PauliNoise()).raw == 1.0
    assert pauli_quantum_capacity(PauliNoise(0.01, 0, 0)).raw == pytest.approx(0.98)


def test_pauli_capacity_is_permutation_symmetric():
    noise = (0.05, 0.12, 0.2)
    values = {round(pauli_quantum_capacity(PauliNoise(*perm)).raw, 14) for perm in itertools.permutations(noise)}
    assert len(values) == 1


def test_first_channel_has_no_capacity_in_regime():
    for p in np.linspace(ONE_THIRD, 1.0, 21):
        assert pauli_quantum_capacity(n1_noise_for(p)).raw <= 1e-12


def test_pauli_noise_validation():
    with pytest.raises(ChannelError):
        PauliNoise(0.6, 0.6, 0)
    with pytest.raises(ChannelError):
        PauliNoise(-0.1)


def test_entanglement_breaking_output_is_separable():
    eb = entanglement_breaking_channel()
    assert all(np.linalg.matrix_rank(k) == 1 for k in eb.channel.operators)
    assert eb.stages == ("identity", "measure", "identity")
    out = eb.apply(pure_state(BELL_00, (2, 2)), 1)
    assert min_eigenvalue(partial_transpose(out, 1)) >= -1e-12
    assert eb.quantum_capacity == 0.0


def test_entanglement_breaking_measurement_statistics():
    eb = entanglement_breaking_channel()
    outcomes = eb.measure(pure_state([1, 0]))
    assert outcomes[0].probability == 1.0
    assert outcomes[1].post_state is None
    mixed = eb.measure(flag_state(0.3, 0.7))
    assert [o.probability for o in mixed] == pytest.approx([0.3, 0.7])
    assert_allclose(mixed[1].post_state.matrix, np.diag([0, 1]))


def test_measure_flag_on_product_state():
    rho_ab = bell_diagonal_state(params_for_gap(0.2))
    outcomes = measure_flag(tensor(rho_ab, flag_state(1.0, 0.0)))
    assert outcomes[0].probability == pytest.approx(1.0)
    assert_allclose(outcomes[0].post_state.matrix, rho_ab.matrix, atol=1e-12)
    assert outcomes[1].post_state is None


def test_measure_flag_probabilities_sum_to_one():
    rng = np.random.default_rng(21)
    for _ in range(10):
        outcomes = measure_flag(random_density_matrix((2, 2, 2), rng))
        assert sum(o.probability for o in outcomes) == pytest.approx(1.0, abs=1e-12)


def test_measure_flag_on_pipeline_output():
    sigma = apply_joint(input_tripartite(InputSpec(ONE_THIRD)), ONE_THIRD)
    outcomes = measure_flag(sigma)
    assert outcomes[0].probability == pytest.approx(2 / 9, abs=1e-12)


@pytest.mark.parametrize("p", [ONE_THIRD, 0.5, 0.9])
def test_isometric_extension_round_trip(p):
    ch = phase_flip(p)
    u = isometric_extension(ch)
    assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-12)
    rng = np.random.default_rng(int(p * 1000))
    for _ in range(20):
        rho = random_density_matrix((2,), rng)
        assert_allclose(apply_via_isometry(ch, rho).matrix, kraus_apply(ch, rho, 0).matrix, atol=1e-12)


def test_isometric_extension_of_identity_is_embedding():
    u = isometric_extension(identity_channel())
    assert u.shape == (2, 2)
    assert_allclose(u, np.eye(2))


def test_apply_joint_operating_point():
    sigma = apply_joint(input_tripartite(InputSpec(ONE_THIRD)), ONE_THIRD)
    sigma_ab = partial_trace(sigma, [0, 1])
    assert sigma_ab.entry(0, 3).real == pytest.approx(1 / 9, abs=1e-12)
    assert_allclose(np.diag(sigma_ab.matrix).real, [1 / 3, 1 / 6, 1 / 6, 1 / 3], atol=1e-12)
    for k in range(3):
        assert min_eigenvalue(partial_transpose(sigma, k)) >= -1e-10


def test_apply_joint_full_noise_is_diagonal():
    sigma_ab = partial_trace(apply_joint(input_tripartite(InputSpec(ONE_THIRD), 1.0), 1.0), [0, 1])
    assert_allclose(sigma_ab.matrix, np.diag(np.diag(sigma_ab.matrix)), atol=1e-15)


@pytest.mark.parametrize("p", np.linspace(ONE_THIRD, 1.0, 10))
@pytest.mark.parametrize("delta", np.linspace(0.02, ONE_THIRD, 10))
def test_gap_law(p, delta):
    sigma = apply_joint(input_tripartite(InputSpec(delta), p), p)
    gap = corner_block_gap(partial_trace(sigma, [0, 1]))
    assert gap == pytest.approx((1 - p) * delta, abs=1e-12)


def test_apply_joint_warns_below_regime():
    rho = input_tripartite(InputSpec(ONE_THIRD), 0.2)
    with pytest.warns(NoiseRegimeWarning):
        out = apply_joint(rho, 0.2)
    assert isinstance(out, DensityMatrix)


def test_output_params_match_kraus_output():
    params = BellDiagonalParams(r=0.1, s=-0.2, c1=0.3, c2=-0.25, c3=0.2)
    p = 0.6
    kraus = kraus_apply(phase_flip(p), bell_diagonal_state(params), 1)
    assert_allclose(kraus.matrix, bell_diagonal_state(output_params(params, p)).matrix, atol=1e-14)


def test_template_output_printed_family():
    template = template_output(2 / 9)
    assert_allclose(np.diag(template.matrix).real, [7 / 18, 1 / 9, 1 / 9, 7 / 18], atol=1e-15)
    assert corner_block_gap(template) == pytest.approx(2 / 9, abs=1e-12)
