"""Variational training of ansatz angles.

The state cost is ``1 - |<psi0| V^dagger U |psi0>|``; the operator cost used
for identity circuits is ``1 - |tr V| / D``. Gradients are central finite
differences in every angle. Minimization is L-BFGS-B with box bounds.
"""

import json
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import nonherm
from .circuit import _apply_local, apply_ansatz, block_local, block_matrices, identity_params, u3_matrix
from .errors import TrainingError
from .noisesim import basis_state, task_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    restarts: int = 8
    max_iterations: int = 500
    fd_step: float = 1e-6
    bound: float = np.pi
    tol: float = 1e-8
    perturbation: float = np.pi / 4
    seed: int = 0
    # a restart reaching this cost ends the search early; 0 disables
    stop_cost: float = 1e-10

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")


@dataclass
class TrainResult:
    params: np.ndarray
    final_cost: float
    iterations: int = 0
    restart_index: int = 0
    t: float = None

    def to_dict(self):
        return {
            "t": self.t,
            "cost": float(self.final_cost),
            "iterations": int(self.iterations),
            "restart": int(self.restart_index),
            "params": [float(x) for x in self.params],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            params=np.asarray(d["params"], dtype=float),
            final_cost=float(d["cost"]),
            iterations=int(d.get("iterations", 0)),
            restart_index=int(d.get("restart", 0)),
            t=d.get("t"),
        )


def results_to_json(results):
    return json.dumps([r.to_dict() for r in results], indent=1)


def results_from_json(text):
    return [TrainResult.from_dict(d) for d in json.loads(text)]


# -- costs --------------------------------------------------------------------

def _state_costs(spec, params_batch, target_state, psi0):
    out = apply_ansatz(spec, params_batch, psi0)
    overlap = out.conj() @ target_state
    return np.clip(1.0 - np.abs(overlap), 0.0, None)


def cost(spec, params, target, psi0_index=15):
    """``1 - |<psi0|V^dagger U|psi0>|`` for one parameter vector."""
    target_state = np.asarray(target)[:, psi0_index]
    psi0 = basis_state(psi0_index, spec.dim)
    return float(_state_costs(spec, np.atleast_2d(params), target_state, psi0)[0])


def operator_cost(spec, params):
    """``1 - |tr V| / D``; zero exactly when V is the identity up to phase."""
    v = apply_ansatz(spec, params, np.eye(spec.dim, dtype=complex))
    return float(max(1.0 - abs(np.trace(v)) / spec.dim, 0.0))


def _fd_shifts(params, h):
    """Shifted 6-angle groups per block: (blocks, 12, 2, 3), rows 2k / 2k+1 are +h / -h."""
    groups = params.reshape(-1, 6)
    shifted = np.repeat(groups[:, np.newaxis, :], 12, axis=1)
    k = np.arange(6)
    shifted[:, 2 * k, k] += h
    shifted[:, 2 * k + 1, k] -= h
    return shifted.reshape(groups.shape[0], 12, 2, 3)


def _env_value_and_grad(spec, params, phi0, chi, norm, h):
    """Cost ``1 - |s| / norm`` with ``s = sum_c <chi_c| V |phi0_c>``, plus its
    central-difference gradient.

    Only one block changes per shifted parameter, so each shifted value is
    ``s = sum_ij B'_ij F_ij`` where F is the 4x4 environment of that block,
    built from the forward states before it and the backward-propagated
    ``chi`` after it.
    """
    blocks = block_matrices(spec, params).reshape(-1, 4, 4)
    pairs = [pair for _ in range(spec.layers) for pair in spec.pairs]
    n, nb = spec.num_qubits, len(pairs)
    forward = [phi0]
    for b in range(nb):
        forward.append(_apply_local(forward[-1], blocks[b], pairs[b], n))
    s0 = np.sum(chi.conj() * forward[-1])
    shifted = _fd_shifts(params, h)
    u = u3_matrix(shifted[..., 0], shifted[..., 1], shifted[..., 2])
    local = block_local(u[..., 0, :, :], u[..., 1, :, :])
    s_shift = np.empty((nb, 12), dtype=complex)
    back = chi
    for b in range(nb - 1, -1, -1):
        i = pairs[b][0]
        c = back.shape[0]
        hi, lo = 2 ** (n - i - 2), 2 ** i
        env = np.einsum("chil,chjl->ij", back.reshape(c, hi, 4, lo).conj(),
                        forward[b].reshape(c, hi, 4, lo))
        s_shift[b] = np.einsum("kij,ij->k", local[b], env)
        back = _apply_local(back, blocks[b].conj().T, pairs[b], n)
    vals = 1.0 - np.abs(s_shift.reshape(-1)) / norm
    grad = (vals[0::2] - vals[1::2]) / (2 * h)
    return max(1.0 - abs(s0) / norm, 0.0), grad


def gradient(spec, params, target, psi0_index=15, h=1e-6):
    """Central finite-difference gradient of :func:`cost`."""
    params = np.asarray(params, dtype=float)
    target_state = np.asarray(target, dtype=complex)[:, psi0_index]
    psi0 = basis_state(psi0_index, spec.dim)
    return _env_value_and_grad(spec, params, psi0[np.newaxis], target_state[np.newaxis], 1.0, h)[1]


def operator_gradient(spec, params, h=1e-6):
    """Central finite-difference gradient of :func:`operator_cost`."""
    eye = np.eye(spec.dim, dtype=complex)
    return _env_value_and_grad(spec, np.asarray(params, dtype=float), eye, eye, spec.dim, h)[1]


def _minimize(fun_grad, x0, cfg):
    bounds = [(-cfg.bound, cfg.bound)] * x0.size
    res = minimize(
        fun_grad,
        np.clip(x0, -cfg.bound, cfg.bound),
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": cfg.max_iterations, "gtol": cfg.tol, "ftol": 1e-14},
    )
    return res.x, float(res.fun), int(res.nit)


def _best_of_restarts(fun_grad, starts, cfg, label):
    best = None
    for r, x0 in enumerate(starts):
        x, val, nit = _minimize(fun_grad, x0, cfg)
        log.debug("%s restart %d: cost %.3e after %d iterations", label, r, val, nit)
        if best is None or val < best.final_cost:
            best = TrainResult(params=x, final_cost=val, iterations=nit, restart_index=r)
        if best.final_cost <= cfg.stop_cost:
            break
    return best


def _starts(spec, cfg, task, warm=None):
    rng = task_rng(cfg.seed, task)
    first = identity_params(spec) if warm is None else np.asarray(warm, dtype=float)
    yield first
    for _ in range(cfg.restarts - 1):
        yield identity_params(spec) + rng.uniform(-cfg.perturbation, cfg.perturbation, spec.num_params)


def train_state(spec, target, cfg, psi0_index=15, warm=None, task=0, label="train"):
    """Fit the ansatz to ``target[:, psi0_index]`` with multiple restarts."""
    chi = np.asarray(target, dtype=complex)[np.newaxis, :, psi0_index]
    phi0 = basis_state(psi0_index, spec.dim)[np.newaxis]

    def fun_grad(x):
        return _env_value_and_grad(spec, x, phi0, chi, 1.0, cfg.fd_step)

    return _best_of_restarts(fun_grad, _starts(spec, cfg, task, warm), cfg, label)


def target_unitaries(p, grid):
    h = nonherm.build_hamiltonian(p)
    return [nonherm.embed(nonherm.evolution_operator(p, t, h), t).U for t in grid.times]


def train_evolution(spec, p, grid, cfg, psi0_index=None, fail_cost=0.2):
    """Train one parameter vector per grid time, warm-starting from the previous step."""
    if psi0_index is None:
        psi0_index = nonherm.all_down_index(p.sites)
    if spec.num_qubits != p.sites + 1:
        raise ValueError("ansatz must cover the system sites plus one ancilla")
    results = []
    warm = None
    for k, (t, target) in enumerate(zip(grid.times, target_unitaries(p, grid))):
        res = train_state(spec, target, cfg, psi0_index, warm=warm, task=k, label=f"t={t:g}")
        res.t = t
        if res.final_cost >= fail_cost:
            raise TrainingError(
                f"training failed at t={t:g}: best cost {res.final_cost:.4f} >= {fail_cost}"
            )
        log.info("t=%g cost=%.3e (restart %d)", t, res.final_cost, res.restart_index)
        results.append(res)
        warm = res.params
    return results


def train_identity(spec, cfg=None, mode="analytic", fail_cost=1e-3):
    """Parameters realizing the identity with the ansatz structure.

    ``analytic`` returns all-zero angles (each block collapses to CX.CX).
    ``variational`` minimizes the operator cost from random starts.
    """
    if mode == "analytic":
        params = identity_params(spec)
        return TrainResult(params=params, final_cost=operator_cost(spec, params))
    if mode != "variational":
        raise ValueError(f"unknown identity mode {mode!r}")
    cfg = cfg or TrainConfig()
    eye = np.eye(spec.dim, dtype=complex)

    def fun_grad(x):
        return _env_value_and_grad(spec, x, eye, eye, spec.dim, cfg.fd_step)

    rng = task_rng(cfg.seed, 10_000)
    starts = [
        rng.uniform(-cfg.perturbation, cfg.perturbation, spec.num_params)
        for _ in range(cfg.restarts)
    ]
    res = _best_of_restarts(fun_grad, starts, cfg, "identity")
    if res.final_cost >= fail_cost:
        raise TrainingError(f"identity training stalled at operator cost {res.final_cost:.3e}")
    return res
