"""Non-Hermitian transverse-field Ising chain, its unitary dilation with one
ancilla, post-selection, and magnetization observables.

The system occupies qubits 0..N-1 and the ancilla is qubit N (most significant
bit), so the ancilla-up sector is the first 2**N basis indices.
"""

from dataclasses import dataclass

import numpy as np

from . import numkit
from .errors import PostSelectionError, RankDeficientError
from .noisesim import OutcomeDistribution

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class TfiParams:
    sites: int = 4
    J: float = 1.0
    h_x: float = 1.5
    gamma: float = -0.5
    boundary: str = "open"

    def __post_init__(self):
        if self.sites < 1:
            raise ValueError("sites must be >= 1")
        if self.boundary != "open":
            raise ValueError(f"boundary={self.boundary!r} is not supported; only 'open'")
        if not all(np.isfinite([self.J, self.h_x, self.gamma])):
            raise ValueError("Hamiltonian parameters must be finite")


@dataclass(frozen=True)
class TimeGrid:
    dt: float = 2.0
    steps: int = 11

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    @property
    def times(self):
        return [k * self.dt for k in range(self.steps)]


@dataclass(frozen=True)
class EmbeddedUnitary:
    U: np.ndarray
    u: float
    t: float = None

    @property
    def system_dim(self):
        return self.U.shape[0] // 2

    @property
    def B(self):
        d = self.system_dim
        return self.U[:d, d:]

    @property
    def C(self):
        d = self.system_dim
        return self.U[d:, :d]

    @property
    def D(self):
        d = self.system_dim
        return self.U[d:, d:]


def site_operator(op, site, sites):
    """``op`` on one site, identity elsewhere, in the shared bit order."""
    factors = [I2] * sites
    factors[sites - 1 - site] = op
    return numkit.kron(*factors)


def build_hamiltonian(p):
    n = p.sites
    d = 2 ** n
    h = np.zeros((d, d), dtype=complex)
    zsum = np.zeros((d, d), dtype=complex)
    for j in range(n):
        h += p.h_x * site_operator(X, j, n)
        zsum += site_operator(Z, j, n)
    for j in range(n - 1):
        h += p.J * site_operator(Z, j, n) @ site_operator(Z, j + 1, n)
    return h + 1j * p.gamma * zsum


def evolution_operator(p, t, hamiltonian=None):
    if t < 0:
        raise ValueError("t must be non-negative")
    h = build_hamiltonian(p) if hamiltonian is None else hamiltonian
    return numkit.expm(-1j * t * h)


def embed(u_h, t=None, seed=0):
    """Unitary dilation of a (generally nonunitary) square matrix.

    The dilation has ``u * u_h`` as its top-left block, where ``u**-2`` is the
    largest eigenvalue of ``u_h^dagger u_h``. The remaining columns come from
    a positive-diagonal QR of ``[[u u_h, I], [C, I]]`` with
    ``C = sqrt(I - u^2 u_h^dagger u_h)``.
    """
    u_h = np.asarray(u_h, dtype=complex)
    d = u_h.shape[0]
    gram = u_h.conj().T @ u_h
    lam_max = numkit.herm_eig(gram)[0][-1]
    u = 1.0 / np.sqrt(lam_max)
    c = numkit.psd_sqrt(np.eye(d) - u * u * gram)
    top = np.vstack([u * u_h, c])
    second = np.vstack([np.eye(d), np.eye(d)]).astype(complex)
    rng = np.random.default_rng(seed)
    for attempt in range(4):
        try:
            q, _ = numkit.qr_positive(np.hstack([top, second]))
            break
        except RankDeficientError:
            if attempt == 3:
                raise
            second = rng.normal(size=(2 * d, d)) + 1j * rng.normal(size=(2 * d, d))
    return EmbeddedUnitary(U=q, u=float(u), t=t)


def post_select(dist):
    """Keep outcomes with the ancilla (top bit) up and renormalize.

    Returns the system distribution and the kept mass.
    """
    w = dist.weights
    half = w.size // 2
    kept = w[:half]
    mass = float(kept.sum())
    limit = 1e-9 if dist.kind == "probability" else 1e-6
    if abs(mass) <= limit:
        raise PostSelectionError(f"post-selection kept mass {mass:.3e} is too small")
    return OutcomeDistribution(kept / mass, kind=dist.kind), mass


def spin_signs(num_sites):
    idx = np.arange(2 ** num_sites)
    bits = (idx[:, None] >> np.arange(num_sites)) & 1
    return 1.0 - 2.0 * bits


def z_magnetization(dist):
    w = dist.weights if isinstance(dist, OutcomeDistribution) else np.asarray(dist, dtype=float)
    n = w.size.bit_length() - 1
    return float(w @ spin_signs(n).mean(axis=1))


def all_down_index(sites):
    return 2 ** sites - 1


def exact_state(p, t, hamiltonian=None):
    psi0 = np.zeros(2 ** p.sites, dtype=complex)
    psi0[all_down_index(p.sites)] = 1.0
    psi = evolution_operator(p, t, hamiltonian) @ psi0
    return psi / np.linalg.norm(psi)


def exact_reference(p, grid):
    """Normalized-evolution magnetization from the all-down state at each grid time."""
    h = build_hamiltonian(p)
    out = []
    for t in grid.times:
        psi = exact_state(p, t, h)
        out.append(z_magnetization(np.abs(psi) ** 2))
    return out


def deviation(z_exact, z_sim):
    return abs(z_exact - z_sim)


def avg_deviation(deviations):
    """Mean of per-step deviations over all samples of the grid."""
    deviations = list(deviations)
    if not deviations:
        raise ValueError("no deviations to average")
    return float(np.mean(deviations))


def curve_deviation(z_exact, z_sim):
    if len(z_exact) != len(z_sim):
        raise ValueError("curves must have equal length")
    return avg_deviation(deviation(a, b) for a, b in zip(z_exact, z_sim))
