"""Circuit execution backends: ideal statevector, exact density matrix, and
seeded shot-sampling trajectories.

Noise model: after every CX the two-qubit depolarizing channel
``rho -> (1 - p) rho + p Tr_pair(rho) x I/4`` acts on the CX pair, and each
measured bit is flipped with probability q. Single-qubit gates and state
preparation are noiseless.
"""

import json
from dataclasses import dataclass

import numpy as np

from .circuit import apply_ansatz, circuit_ops, cx_permutation

PAULIS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
# index 4*a + b -> P_a (high qubit of the pair) x P_b (low qubit)
PAULIS_2Q = np.einsum("aij,bkl->abikjl", PAULIS, PAULIS).reshape(16, 4, 4)

SHARD_SIZE = 4000


@dataclass(frozen=True)
class NoiseModel:
    cx_depol: float = 0.0
    readout_flip: float = 0.0
    # P(read 0 | true 1); None means symmetric readout
    readout_flip_10: float = None

    def __post_init__(self):
        for name in ("cx_depol", "readout_flip"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name}={v} outside [0, 1)")
        if self.readout_flip_10 is not None and not 0.0 <= self.readout_flip_10 < 1.0:
            raise ValueError(f"readout_flip_10={self.readout_flip_10} outside [0, 1)")

    @property
    def flip_01(self):
        return self.readout_flip

    @property
    def flip_10(self):
        return self.readout_flip if self.readout_flip_10 is None else self.readout_flip_10

    def confusion(self):
        """Single-qubit column-stochastic confusion matrix, [read, true]."""
        a, b = self.flip_01, self.flip_10
        return np.array([[1 - a, b], [a, 1 - b]])


@dataclass(frozen=True)
class ShotPlan:
    shots: int = 32000
    seed: int = 0

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")


class OutcomeDistribution:
    """Weights over measurement bitstrings.

    ``kind`` is "probability" (non-negative, unit sum) or "quasi" (unit sum,
    negative entries allowed).
    """

    def __init__(self, weights, kind="probability", tol=1e-9):
        w = np.array(weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or w.size & (w.size - 1):
            raise ValueError("weights must be a 1-d array with a power-of-two length")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if kind not in ("probability", "quasi"):
            raise ValueError(f"unknown kind {kind!r}")
        if abs(w.sum() - 1.0) > tol:
            raise ValueError(f"weights sum to {w.sum():.12g}, expected 1")
        if kind == "probability" and w.min() < -tol:
            raise ValueError("probability weights must be non-negative")
        w.setflags(write=False)
        self.weights = w
        self.kind = kind

    @property
    def dim(self):
        return self.weights.size

    @property
    def num_qubits(self):
        return self.dim.bit_length() - 1

    def __repr__(self):
        return f"OutcomeDistribution(dim={self.dim}, kind={self.kind!r})"

    def to_dict(self):
        return {"kind": self.kind, "weights": [float(x) for x in self.weights]}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["weights"], kind=d["kind"])


def basis_state(index, dim):
    if not 0 <= index < dim:
        raise ValueError(f"input index {index} out of range for dimension {dim}")
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def run_ideal(spec, params, input_index):
    psi = apply_ansatz(spec, params, basis_state(input_index, spec.dim))
    probs = np.abs(psi) ** 2
    return OutcomeDistribution(probs / probs.sum())


# -- density-matrix backend ---------------------------------------------------

def _qubit_axis(q, num_qubits):
    """Axis of qubit q once a length-2**n index is reshaped to (2,)*n."""
    return num_qubits - 1 - q


def _apply_1q_rho(rho, mat, q, n):
    """U rho U^dagger on qubit q for a batch of density matrices (B, D, D)."""
    b, d, _ = rho.shape
    hi, lo = 2 ** (n - q - 1), 2 ** q
    r = rho.reshape(b, hi, 2, lo, d)
    r = np.einsum("ij,bhjld->bhild", mat, r).reshape(b, d, d)
    r = r.reshape(b, d, hi, 2, lo)
    r = np.einsum("ij,bdhjl->bdhil", mat.conj(), r)
    return r.reshape(b, d, d)


def depolarize_pair(rho, a, b, p, n):
    """Two-qubit depolarizing channel on qubits (a, b) of a batch (B, D, D)."""
    if p == 0.0:
        return rho
    batch, d, _ = rho.shape
    t = rho.reshape((batch,) + (2,) * (2 * n))
    axes = [
        1 + _qubit_axis(a, n),
        1 + _qubit_axis(b, n),
        1 + n + _qubit_axis(a, n),
        1 + n + _qubit_axis(b, n),
    ]
    moved = np.moveaxis(t, axes, [-4, -3, -2, -1])
    reduced = np.einsum("...ijij->...", moved)
    eye4 = np.eye(4).reshape(2, 2, 2, 2) / 4.0
    mixed = reduced[..., None, None, None, None] * eye4
    mixed = np.moveaxis(mixed, [-4, -3, -2, -1], axes).reshape(batch, d, d)
    return (1.0 - p) * rho + p * mixed


def evolve_density(spec, params, rho, noise):
    """Evolve a batch of density matrices (B, D, D) through the noisy ansatz."""
    n = spec.num_qubits
    p = noise.cx_depol
    rho = np.array(rho, dtype=complex)
    for op in circuit_ops(spec, params):
        if op[0] == "cx":
            _, c, t = op
            perm = cx_permutation(c, t, n)
            rho = rho[:, perm][:, :, perm]
            rho = depolarize_pair(rho, c, t, p, n)
        else:
            _, q, mat = op
            rho = _apply_1q_rho(rho, mat, q, n)
    return rho


def readout_map(probs, noise, num_qubits):
    """Apply per-qubit readout confusion to probability rows (B, D)."""
    if noise.flip_01 == 0.0 and noise.flip_10 == 0.0:
        return probs
    conf = noise.confusion()
    batch = probs.shape[0]
    t = probs.reshape((batch,) + (2,) * num_qubits)
    for q in range(num_qubits):
        ax = 1 + _qubit_axis(q, num_qubits)
        t = np.moveaxis(np.tensordot(conf, t, axes=([1], [ax])), 0, ax)
    return t.reshape(batch, -1)


def readout_matrix(noise, num_qubits):
    """Full-register readout confusion matrix (column-stochastic)."""
    eye = np.eye(2 ** num_qubits)
    return readout_map(eye, noise, num_qubits).T


def density_outputs(spec, params, inputs, noise):
    """Exact noisy output probabilities for several basis inputs, shape (K, D)."""
    d = spec.dim
    inputs = np.atleast_1d(np.asarray(inputs, dtype=int))
    if inputs.min() < 0 or inputs.max() >= d:
        raise ValueError("input index out of range")
    rho = np.zeros((inputs.size, d, d), dtype=complex)
    rho[np.arange(inputs.size), inputs, inputs] = 1.0
    rho = evolve_density(spec, params, rho, noise)
    probs = np.clip(np.einsum("bii->bi", rho).real, 0.0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    return readout_map(probs, noise, spec.num_qubits)


def run_density_noisy(spec, params, input_index, noise):
    probs = density_outputs(spec, params, [input_index], noise)[0]
    return OutcomeDistribution(probs / probs.sum())


def run_unitary_density(u, input_index, noise=None):
    """Density-backend execution of a whole unitary given as a matrix.

    With no CX decomposition there is no gate noise; only readout applies.
    """
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    rho = np.zeros((d, d), dtype=complex)
    rho[input_index, input_index] = 1.0
    rho = u @ rho @ u.conj().T
    probs = np.clip(np.diag(rho).real, 0.0, None)
    probs /= probs.sum()
    if noise is not None:
        probs = readout_map(probs[np.newaxis], noise, d.bit_length() - 1)[0]
    return OutcomeDistribution(probs)


# -- trajectory backend -------------------------------------------------------

def task_rng(seed, *task):
    """Generator for a (master seed, task index...) pair.

    Independent of execution order, so sharded and serial runs agree.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2 ** 64 - 1), spawn_key=tuple(int(t) for t in task))
    return np.random.default_rng(ss)


def _apply_1q_states(states, mat, q, n):
    b, d = states.shape
    hi, lo = 2 ** (n - q - 1), 2 ** q
    v = states.reshape(b, hi, 2, lo)
    return np.einsum("ij,bhjl->bhil", mat, v).reshape(b, d)


def _apply_pair_states(states, mats, a, b, n):
    """Apply per-row 4x4 matrices on qubits (a, b=a+1)."""
    batch, d = states.shape
    hi, lo = 2 ** (n - a - 2), 2 ** a
    v = states.reshape(batch, hi, 4, lo)
    return np.einsum("bij,bhjl->bhil", mats, v).reshape(batch, d)


def _sample_shard(spec, ops, input_index, noise, shots, rng):
    n = spec.num_qubits
    d = spec.dim
    p = noise.cx_depol
    states = np.zeros((shots, d), dtype=complex)
    states[:, input_index] = 1.0
    for op in ops:
        if op[0] == "cx":
            _, c, t = op
            states = states[:, cx_permutation(c, t, n)]
            if p > 0.0:
                hit = rng.random(shots) < p
                which = rng.integers(0, 16, size=shots)
                rows = np.nonzero(hit & (which > 0))[0]
                if rows.size:
                    if t != c + 1:
                        raise ValueError("trajectory noise requires adjacent CX pairs")
                    states[rows] = _apply_pair_states(
                        states[rows], PAULIS_2Q[which[rows]], c, t, n
                    )
        else:
            _, q, mat = op
            states = _apply_1q_states(states, mat, q, n)
    probs = np.abs(states) ** 2
    cum = np.cumsum(probs, axis=1)
    cum /= cum[:, -1:]
    u = rng.random(shots)
    outcomes = np.minimum((cum < u[:, None]).sum(axis=1), d - 1)
    if noise.flip_01 > 0.0 or noise.flip_10 > 0.0:
        bits = (outcomes[:, None] >> np.arange(n)) & 1
        flip_p = np.where(bits == 1, noise.flip_10, noise.flip_01)
        flips = rng.random((shots, n)) < flip_p
        outcomes = outcomes ^ (flips.astype(np.int64) << np.arange(n)).sum(axis=1)
    return np.bincount(outcomes, minlength=d)


def sample_counts(spec, params, input_index, noise, plan, task=0):
    """Shot counts from the trajectory backend.

    Shots are split into shards of ``SHARD_SIZE``; shard s draws from
    ``task_rng(plan.seed, task, s)``.
    """
    ops = circuit_ops(spec, params)
    counts = np.zeros(spec.dim, dtype=np.int64)
    done = 0
    shard = 0
    while done < plan.shots:
        m = min(SHARD_SIZE, plan.shots - done)
        counts += _sample_shard(spec, ops, input_index, noise, m, task_rng(plan.seed, task, shard))
        done += m
        shard += 1
    return counts


def run_trajectories(spec, params, input_index, noise, plan, task=0):
    basis_state(input_index, spec.dim)
    counts = sample_counts(spec, params, input_index, noise, plan, task)
    return OutcomeDistribution(counts / counts.sum())


# -- diagnostics --------------------------------------------------------------

def unitary_superop(u):
    """Superoperator of rho -> U rho U^dagger on row-major vec(rho)."""
    return np.kron(u, u.conj())


def effective_channel(spec, params, noise):
    """Gate-noise channel of the whole circuit as a (D^2, D^2) superoperator.

    Acts on row-major vectorized density matrices. Readout is excluded since it
    acts on classical outcomes only.
    """
    if spec.num_qubits > 5:
        raise ValueError("effective_channel supports at most 5 qubits")
    d = spec.dim
    basis = np.zeros((d * d, d, d), dtype=complex)
    basis[np.arange(d * d), np.repeat(np.arange(d), d), np.tile(np.arange(d), d)] = 1.0
    out = evolve_density(spec, params, basis, noise)
    return out.reshape(d * d, d * d).T
