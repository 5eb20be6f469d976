import itertools

import numpy as np
import pytest
from scipy.stats import norm

from structmit.circuit import AnsatzSpec, ansatz_unitary, identity_params, u3_matrix
from structmit.noisesim import (
    PAULIS,
    NoiseModel,
    OutcomeDistribution,
    ShotPlan,
    depolarize_pair,
    effective_channel,
    readout_map,
    readout_matrix,
    run_density_noisy,
    run_ideal,
    run_trajectories,
    sample_counts,
    unitary_superop,
)

TWO = AnsatzSpec(num_qubits=2, layers=1)


def random_density(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def pauli_twirl(rho, a, b, n):
    """Oracle: average of all 16 Pauli conjugations on the pair (a, b)."""
    out = np.zeros_like(rho)
    for pa, pb in itertools.product(PAULIS, PAULIS):
        factors = [np.eye(2)] * n
        factors[n - 1 - a] = pa
        factors[n - 1 - b] = pb
        op = factors[0]
        for f in factors[1:]:
            op = np.kron(op, f)
        out += op @ rho @ op.conj().T
    return out / 16


def test_ideal_identity_point_mass():
    dist = run_ideal(AnsatzSpec(layers=2), identity_params(AnsatzSpec(layers=2)), 15)
    assert dist.weights[15] == pytest.approx(1.0, abs=1e-15)


def test_ideal_single_block_flip(bit_order):
    params = np.array([np.pi, 0, np.pi, 0, 0, 0])
    dist = run_ideal(TWO, params, 0)
    assert dist.weights[3] == pytest.approx(1.0, abs=1e-12)


def test_ideal_sums_to_one():
    spec = AnsatzSpec(layers=3)
    p = np.random.default_rng(0).uniform(-3, 3, spec.num_params)
    assert abs(run_ideal(spec, p, 7).weights.sum() - 1) <= 1e-12


def test_density_noiseless_equals_ideal():
    spec = AnsatzSpec(layers=2)
    p = np.random.default_rng(1).uniform(-3, 3, spec.num_params)
    a = run_density_noisy(spec, p, 15, NoiseModel()).weights
    b = run_ideal(spec, p, 15).weights
    assert np.allclose(a, b, atol=1e-12)


def test_density_two_depolarizing_steps():
    p = 0.012
    dist = run_density_noisy(TWO, np.zeros(6), 0, NoiseModel(cx_depol=p))
    keep = (1 - p) ** 2
    assert dist.weights[0] == pytest.approx(keep + (1 - keep) / 4, abs=1e-12)
    assert dist.weights[0] == pytest.approx(0.982108, abs=1e-6)
    assert np.allclose(dist.weights[1:], (1 - keep) / 4, atol=1e-12)
    assert np.allclose(dist.weights[1:], 0.005964, atol=1e-6)


def test_readout_single_qubit():
    probs = readout_map(np.array([[1.0, 0.0]]), NoiseModel(readout_flip=0.01), 1)
    assert probs[0, 1] == pytest.approx(0.01)


def test_readout_is_tensor_power():
    noise = NoiseModel(readout_flip=0.02, readout_flip_10=0.05)
    m = readout_matrix(noise, 3)
    c = noise.confusion()
    assert np.allclose(m, np.kron(np.kron(c, c), c))
    assert np.allclose(m.sum(axis=0), 1)


def test_depolarizing_matches_pauli_twirl_and_preserves_rho():
    rng = np.random.default_rng(4)
    n, p = 3, 0.3
    rho = random_density(rng, 8)
    for a, b in [(0, 1), (1, 2)]:
        got = depolarize_pair(rho[np.newaxis], a, b, p, n)[0]
        ref = (1 - p) * rho + p * pauli_twirl(rho, a, b, n)
        assert np.allclose(got, ref, atol=1e-13)
        assert abs(np.trace(got) - 1) <= 1e-12
        assert np.linalg.norm(got - got.conj().T) <= 1e-12


def test_density_fidelity_monotone_in_p(benchmark):
    spec = AnsatzSpec(layers=3)
    params = benchmark[5].params
    ideal = run_ideal(spec, params, 15).weights
    fid = []
    for p in (0.0, 0.003, 0.015):
        w = run_density_noisy(spec, params, 15, NoiseModel(cx_depol=p)).weights
        fid.append(np.sum(np.sqrt(w * ideal)) ** 2)
    assert fid[0] == pytest.approx(1.0, abs=1e-12)
    assert fid[0] > fid[1] > fid[2]


# -- trajectories ---------------------------------------------------------------

def _bound_check(counts, probs, shots, z):
    sigma = np.sqrt(probs * (1 - probs) / shots)
    freq = counts / shots
    # zero-variance outcomes must match exactly
    assert np.all(np.abs(freq - probs) <= z * sigma + (sigma == 0) * 1e-12)


def test_trajectories_noiseless_sampling():
    spec = AnsatzSpec(layers=2)
    params = np.random.default_rng(8).uniform(-2, 2, spec.num_params)
    shots = 32000
    counts = sample_counts(spec, params, 15, NoiseModel(), ShotPlan(shots, seed=3))
    _bound_check(counts, run_ideal(spec, params, 15).weights, shots, 4.0)


def test_trajectories_converge_to_density():
    spec = AnsatzSpec(layers=2)
    params = np.random.default_rng(9).uniform(-2, 2, spec.num_params)
    noise = NoiseModel(cx_depol=0.05, readout_flip=0.02)
    shots = 32000
    counts = sample_counts(spec, params, 15, noise, ShotPlan(shots, seed=5))
    exact = run_density_noisy(spec, params, 15, noise).weights
    z = norm.isf(0.0027 / 2 / 32)
    _bound_check(counts, exact, shots, z)


def test_trajectory_total_variation_on_benchmark(benchmark):
    spec = AnsatzSpec(layers=3)
    params = benchmark[5].params
    noise = NoiseModel(cx_depol=0.012, readout_flip=0.01)
    shots = 32000
    emp = run_trajectories(spec, params, 15, noise, ShotPlan(shots, seed=1)).weights
    exact = run_density_noisy(spec, params, 15, noise).weights
    assert 0.5 * np.abs(emp - exact).sum() <= 5 * np.sqrt(32 / shots)


def test_trajectories_deterministic_and_shard_invariant():
    spec = AnsatzSpec(layers=2)
    params = np.random.default_rng(2).uniform(-2, 2, spec.num_params)
    noise = NoiseModel(cx_depol=0.02, readout_flip=0.01)
    a = sample_counts(spec, params, 15, noise, ShotPlan(9000, seed=42))
    b = sample_counts(spec, params, 15, noise, ShotPlan(9000, seed=42))
    assert np.array_equal(a, b)
    c = sample_counts(spec, params, 15, noise, ShotPlan(9000, seed=43))
    assert not np.array_equal(a, c)
    # shards are independent tasks: running them out of order gives the same total
    from structmit.noisesim import SHARD_SIZE, _sample_shard, task_rng
    from structmit.circuit import circuit_ops

    ops = circuit_ops(spec, params)
    sizes = [SHARD_SIZE, SHARD_SIZE, 9000 - 2 * SHARD_SIZE]
    parts = [_sample_shard(spec, ops, 15, noise, sizes[s], task_rng(42, 0, s)) for s in (2, 0, 1)]
    assert np.array_equal(sum(parts), a)


# -- effective channel ---------------------------------------------------------

def test_channel_noiseless_is_unitary_superop():
    spec = AnsatzSpec(num_qubits=3, layers=1)
    p = np.random.default_rng(0).uniform(-2, 2, spec.num_params)
    s = effective_channel(spec, p, NoiseModel())
    assert np.allclose(s, unitary_superop(ansatz_unitary(spec, p)), atol=1e-12)


def test_channel_trace_preserving():
    spec = AnsatzSpec(num_qubits=3, layers=2)
    p = np.random.default_rng(1).uniform(-2, 2, spec.num_params)
    s = effective_channel(spec, p, NoiseModel(cx_depol=0.05))
    rng = np.random.default_rng(2)
    for _ in range(3):
        rho = random_density(rng, 8)
        out = (s @ rho.reshape(-1)).reshape(8, 8)
        assert abs(np.trace(out) - 1) <= 1e-10


def test_noise_factor_depends_on_parameters():
    spec = AnsatzSpec(num_qubits=3, layers=2)
    noise = NoiseModel(cx_depol=0.012)
    rng = np.random.default_rng(3)
    factors = []
    for _ in range(2):
        p = rng.uniform(-np.pi, np.pi, spec.num_params)
        u = ansatz_unitary(spec, p)
        factors.append(effective_channel(spec, p, noise) @ unitary_superop(u.conj().T))
    gap = np.linalg.norm(factors[0] - factors[1])
    assert 1e-4 < gap < 1.0
    ident = effective_channel(spec, identity_params(spec), noise)
    # noise factor of the identity circuit is the channel itself and close to I
    assert np.linalg.norm(ident - np.eye(64)) < 1.0


# -- distribution type -----------------------------------------------------------

def test_outcome_distribution_validation_and_json():
    d = OutcomeDistribution([0.25, 0.75])
    assert OutcomeDistribution.from_json(d.to_json()).weights.tolist() == [0.25, 0.75]
    q = OutcomeDistribution([1.2, -0.2], kind="quasi")
    assert q.to_dict() == {"kind": "quasi", "weights": [1.2, -0.2]}
    with pytest.raises(ValueError):
        OutcomeDistribution([1.2, -0.2])
    with pytest.raises(ValueError):
        OutcomeDistribution([0.5, 0.6])
    with pytest.raises(ValueError):
        OutcomeDistribution([0.2, 0.3, 0.5])


def test_noise_model_ranges():
    with pytest.raises(ValueError):
        NoiseModel(cx_depol=1.0)
    with pytest.raises(ValueError):
        NoiseModel(readout_flip=-0.1)
    with pytest.raises(ValueError):
        ShotPlan(shots=0)


def test_unitary_density_matches_circuit_backends():
    from structmit.noisesim import run_unitary_density

    spec = AnsatzSpec(layers=2)
    p = np.random.default_rng(12).uniform(-2, 2, spec.num_params)
    u = ansatz_unitary(spec, p)
    assert np.allclose(run_unitary_density(u, 15).weights, run_ideal(spec, p, 15).weights, atol=1e-12)
    noise = NoiseModel(readout_flip=0.03)
    assert np.allclose(
        run_unitary_density(u, 15, noise).weights,
        run_density_noisy(spec, p, 15, noise).weights,
        atol=1e-12,
    )
