"""Layered U3 + CX ansatz and its matrix representations.

Bit order: qubit k lives in bit k of the basis index (qubit 0 is the least
significant bit). Bit value 0 is spin up (Z = +1), bit value 1 is spin down.
The ancilla is the highest qubit.

A block on the adjacent pair (i, i+1) is CX(i -> i+1) . (U3_i x U3_{i+1}) . CX(i -> i+1),
with qubit i as control. A layer applies the blocks of ``pairs`` in order, and
layers are applied first to last.
"""

import json
from dataclasses import dataclass, field

import numpy as np

PARAMS_PER_BLOCK = 6

# local 4-dim basis of a pair is 2*b_{i+1} + b_i, control is the low bit
_CX_LOCAL = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)


def chain_pairs(num_qubits):
    return tuple((i, i + 1) for i in range(num_qubits - 1))


@dataclass(frozen=True)
class U3Params:
    theta: float
    phi: float
    lam: float


@dataclass(frozen=True)
class AnsatzSpec:
    num_qubits: int = 5
    layers: int = 2
    pairs: tuple = field(default=None)

    def __post_init__(self):
        if self.pairs is None:
            object.__setattr__(self, "pairs", chain_pairs(self.num_qubits))
        pairs = tuple(tuple(int(q) for q in p) for p in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if not pairs:
            raise ValueError("at least one qubit pair is required")
        for a, b in pairs:
            if b != a + 1 or a < 0 or b >= self.num_qubits:
                raise ValueError(f"pair {(a, b)} is not an adjacent in-range pair")

    @property
    def dim(self):
        return 2 ** self.num_qubits

    @property
    def num_params(self):
        return PARAMS_PER_BLOCK * len(self.pairs) * self.layers

    @property
    def cx_per_layer(self):
        return 2 * len(self.pairs)

    def key(self):
        """Stable string identifier, used for caching."""
        pairs = "-".join(f"{a}{b}" for a, b in self.pairs)
        return f"q{self.num_qubits}_n{self.layers}_p{pairs}"


def u3_matrix(theta, phi=None, lam=None):
    """2x2 U3 gate. Accepts a U3Params or three angles; angles may be arrays."""
    if isinstance(theta, U3Params):
        theta, phi, lam = theta.theta, theta.phi, theta.lam
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    out = np.empty(np.broadcast(theta, phi, lam).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -np.exp(1j * lam) * s
    out[..., 1, 0] = np.exp(1j * phi) * s
    out[..., 1, 1] = np.exp(1j * (phi + lam)) * c
    return out


def block_local(u_low, u_high):
    """4x4 block matrix on a pair given the U3 of qubit i and of qubit i+1."""
    inner = np.einsum("...ij,...kl->...ikjl", u_high, u_low)
    inner = inner.reshape(inner.shape[:-4] + (4, 4))
    return _CX_LOCAL @ inner @ _CX_LOCAL


def _apply_local(states, mats, pair, num_qubits):
    """Apply 4x4 matrices (broadcast over batch) to the pair of a batch of states."""
    i = pair[0]
    batch = states.shape[0]
    hi = 2 ** (num_qubits - i - 2)
    lo = 2 ** i
    view = states.reshape(batch, hi, 4, lo)
    if mats.ndim == 2:
        out = np.einsum("ij,bhjl->bhil", mats, view)
    else:
        out = np.einsum("bij,bhjl->bhil", mats, view)
    return out.reshape(states.shape)


def _as_param_array(spec, params):
    params = np.asarray(params, dtype=float)
    if params.shape[-1] != spec.num_params:
        raise ValueError(
            f"expected {spec.num_params} parameters for {spec.key()}, got {params.shape[-1]}"
        )
    return params


def block_matrices(spec, params):
    """Local 4x4 block matrices, shape (..., layers, len(pairs), 4, 4)."""
    params = _as_param_array(spec, params)
    shaped = params.reshape(params.shape[:-1] + (spec.layers, len(spec.pairs), 2, 3))
    u = u3_matrix(shaped[..., 0], shaped[..., 1], shaped[..., 2])
    return block_local(u[..., 0, :, :], u[..., 1, :, :])


def apply_ansatz(spec, params, states):
    """Apply the ansatz to statevectors.

    ``params`` is (P,) or (B, P); ``states`` is (D,), (B, D) or, for a single
    parameter vector, (K, D). Broadcasting pairs batch rows with parameter rows.
    """
    params = _as_param_array(spec, params)
    states = np.asarray(states, dtype=complex)
    single = states.ndim == 1
    if single:
        states = states[np.newaxis, :]
    blocks = block_matrices(spec, params)
    if params.ndim == 2 and states.shape[0] != params.shape[0]:
        states = np.broadcast_to(states, (params.shape[0], states.shape[1]))
    out = np.array(states, dtype=complex)
    for layer in range(spec.layers):
        for k, pair in enumerate(spec.pairs):
            out = _apply_local(out, blocks[..., layer, k, :, :], pair, spec.num_qubits)
    return out[0] if single and params.ndim == 1 else out


def embed_local(mat4, pair, total_qubits):
    """Full-register matrix of a 4x4 operator on an adjacent pair."""
    eye = np.eye(2 ** total_qubits, dtype=complex)
    # columns of the result are images of basis states
    return _apply_local(eye.T.copy(), mat4, pair, total_qubits).T


def block_unitary(pair, pa, pb, total_qubits):
    """Full-register unitary of one block; ``pa`` acts on the control qubit."""
    local = block_local(u3_matrix(pa), u3_matrix(pb))
    return embed_local(local, pair, total_qubits)


def ansatz_unitary(spec, params):
    eye = np.eye(spec.dim, dtype=complex)
    return apply_ansatz(spec, params, eye).T


def identity_params(spec):
    return np.zeros(spec.num_params)


def cx_permutation(control, target, num_qubits):
    """Index permutation ``perm`` with ``(CX psi)[i] = psi[perm[i]]``."""
    idx = np.arange(2 ** num_qubits)
    return np.where((idx >> control) & 1, idx ^ (1 << target), idx)


def circuit_ops(spec, params):
    """Flatten the ansatz to a gate list.

    Yields ``("cx", control, target)`` and ``("u3", qubit, 2x2 matrix)`` in
    execution order.
    """
    params = _as_param_array(spec, params)
    shaped = params.reshape(spec.layers, len(spec.pairs), 2, 3)
    ops = []
    for layer in range(spec.layers):
        for k, (a, b) in enumerate(spec.pairs):
            ops.append(("cx", a, b))
            ops.append(("u3", a, u3_matrix(*shaped[layer, k, 0])))
            ops.append(("u3", b, u3_matrix(*shaped[layer, k, 1])))
            ops.append(("cx", a, b))
    return ops


def params_to_json(params):
    return json.dumps([float(x) for x in np.asarray(params, dtype=float)])


def params_from_json(text, spec=None):
    params = np.asarray(json.loads(text), dtype=float)
    if spec is not None:
        _as_param_array(spec, params)
    return params
