"""Calibration matrices and inversion-based mitigation.

Column i of a calibration matrix is the noisy output distribution observed
when basis state i is fed to a calibration circuit. The full calibration runs
the identity-equivalent ansatz (same gate layout as the target circuit); the
readout calibration prepares and measures with no gates in between.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .circuit import ansatz_unitary
from .errors import CalibrationError
from .noisesim import (
    NoiseModel,
    OutcomeDistribution,
    ShotPlan,
    density_outputs,
    readout_matrix,
    sample_counts,
)

BACKENDS = ("density", "trajectory")
# Frobenius distance to the identity (up to phase) accepted for a calibration
# circuit; an operator cost c = 1 - |tr V|/D allows roughly sqrt(2 D c)
IDENTITY_TOL = 1e-2
POLICIES = ("simplex", "raw_quasi")


@dataclass(frozen=True)
class CalibrationMatrix:
    matrix: np.ndarray
    backend: str = "density"
    shots: int = 0
    noise: NoiseModel = field(default_factory=NoiseModel)
    cond: float = 1.0
    kind: str = "full"

    @property
    def dim(self):
        return self.matrix.shape[0]

    def to_dict(self):
        return {
            "dim": self.dim,
            "kind": self.kind,
            "backend": self.backend,
            "shots": self.shots,
            "noise": {"p": self.noise.cx_depol, "q": self.noise.readout_flip},
            "cond": self.cond,
            "columns": [[float(x) for x in col] for col in self.matrix.T],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        m = np.asarray(d["columns"], dtype=float).T
        noise = NoiseModel(cx_depol=d["noise"]["p"], readout_flip=d["noise"]["q"])
        return cls(
            matrix=m,
            backend=d["backend"],
            shots=d["shots"],
            noise=noise,
            cond=d["cond"],
            kind=d.get("kind", "full"),
        )

    def to_csv(self):
        """One matrix column per line."""
        return "".join(",".join(f"{x:.9g}" for x in col) + "\n" for col in self.matrix.T)


def _finish(matrix, backend, plan, noise, kind):
    sums = matrix.sum(axis=0)
    if np.any(np.abs(sums - 1.0) > 1e-9) or matrix.min() < 0:
        raise CalibrationError("calibration columns are not probability distributions")
    return CalibrationMatrix(
        matrix=matrix,
        backend=backend,
        shots=plan.shots if plan is not None else 0,
        noise=noise,
        cond=numkit.condition_number(matrix),
        kind=kind,
    )


def _check_backend(backend, plan):
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "trajectory" and plan is None:
        raise CalibrationError("trajectory calibration requires a shot plan")


def build_full_calibration(spec, identity_params, noise, backend="density", plan=None, check=True):
    """Calibration matrix of the structure-preserving identity circuit.

    Trajectory columns draw from task index ``1000 + i`` of the plan's seed.
    """
    _check_backend(backend, plan)
    params = np.asarray(identity_params, dtype=float)
    if check:
        v = ansatz_unitary(spec, params)
        tr = np.trace(v)
        phase = tr / abs(tr) if abs(tr) > 0 else 1.0
        dist = np.linalg.norm(v / phase - np.eye(spec.dim))
        if dist > IDENTITY_TOL:
            raise CalibrationError(
                f"calibration circuit is not the identity (operator distance {dist:.3e})"
            )
    d = spec.dim
    if backend == "density":
        m = density_outputs(spec, params, np.arange(d), noise).T
    else:
        cols = [sample_counts(spec, params, i, noise, plan, task=1000 + i) for i in range(d)]
        m = np.array(cols, dtype=float).T / plan.shots
    return _finish(m, backend, plan, noise, "full")


def build_readout_calibration(noise, num_qubits=5, backend="density", plan=None):
    """Prepare-and-measure calibration; only readout error contributes."""
    _check_backend(backend, plan)
    d = 2 ** num_qubits
    if backend == "density":
        m = readout_matrix(noise, num_qubits)
    else:
        rng_seed = plan.seed
        cols = []
        for i in range(d):
            rng = np.random.default_rng(np.random.SeedSequence(rng_seed, spawn_key=(2000 + i,)))
            bits = (i >> np.arange(num_qubits)) & 1
            flip_p = np.where(bits == 1, noise.flip_10, noise.flip_01)
            flips = rng.random((plan.shots, num_qubits)) < flip_p
            outcomes = i ^ (flips.astype(np.int64) << np.arange(num_qubits)).sum(axis=1)
            cols.append(np.bincount(outcomes, minlength=d))
        m = np.array(cols, dtype=float).T / plan.shots
    return _finish(m, backend, plan, noise, "readout")


def mitigate(dist, cal, policy="simplex"):
    """Correct a measured distribution with the inverse calibration matrix.

    ``raw_quasi`` returns the bare solution (may have negative entries);
    ``simplex`` projects it onto the probability simplex.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    m = cal.matrix if isinstance(cal, CalibrationMatrix) else np.asarray(cal, dtype=float)
    w = dist.weights if isinstance(dist, OutcomeDistribution) else np.asarray(dist, dtype=float)
    if m.shape[0] != w.size:
        raise ValueError(f"dimension mismatch: calibration {m.shape}, distribution {w.size}")
    x = numkit.solve(m, w)
    if policy == "raw_quasi":
        # column-stochastic M preserves total mass; remove rounding drift only
        return OutcomeDistribution(x, kind="quasi")
    return OutcomeDistribution(numkit.simplex_project(x), kind="probability")
