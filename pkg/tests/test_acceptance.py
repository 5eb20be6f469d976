"""Acceptance criteria, each at its stated tolerance and time budget.

Every check prints one PASS/FAIL line; the lines are repeated in the
terminal summary.
"""

import time

import numpy as np
import pytest

from structmit import nonherm, numkit
from structmit.bench import report
from structmit.bench.cli import main
from structmit.bench.config import ExperimentConfig, load_config
from structmit.bench.experiment import deviations, run_experiment, sweep, table_lookup
from structmit.circuit import AnsatzSpec, identity_params
from structmit.mitigate import build_full_calibration, mitigate
from structmit.noisesim import NoiseModel, ShotPlan, run_trajectories, run_unitary_density
from structmit.varopt import TrainConfig, cost, gradient

P_GRID = (0.003, 0.006, 0.009, 0.012, 0.015)
N_GRID = (2, 3, 4, 5)


def tv(a, b):
    return 0.5 * np.abs(np.asarray(a) - np.asarray(b)).sum()


# 1 ---------------------------------------------------------------------------

def test_c1_dilation(tfi, grid, verdict):
    start = time.perf_counter()
    h = nonherm.build_hamiltonian(tfi)
    worst_unit = worst_block = 0.0
    for t in grid.times:
        u_h = nonherm.evolution_operator(tfi, t, h)
        e = nonherm.embed(u_h, t)
        worst_unit = max(worst_unit, np.linalg.norm(e.U.conj().T @ e.U - np.eye(32)))
        worst_block = max(worst_block, np.linalg.norm(e.U[:16, :16] - e.u * u_h))
    elapsed = time.perf_counter() - start
    ok = worst_unit <= 1e-9 and worst_block <= 1e-8 and elapsed < 5
    verdict("C1 dilation correctness", ok,
            f"unitarity {worst_unit:.1e}, block {worst_block:.1e}, {elapsed:.2f}s")


# 2 ---------------------------------------------------------------------------

def test_c2_oracle_equivalence(tfi, grid, verdict):
    start = time.perf_counter()
    h = nonherm.build_hamiltonian(tfi)
    psi0 = nonherm.all_down_index(tfi.sites)
    worst_tv = worst_mass = 0.0
    for t in grid.times:
        u_h = nonherm.evolution_operator(tfi, t, h)
        e = nonherm.embed(u_h, t)
        selected, mass = nonherm.post_select(run_unitary_density(e.U, psi0))
        brute = np.abs(u_h[:, psi0]) ** 2
        worst_tv = max(worst_tv, tv(selected.weights, brute / brute.sum()))
        worst_mass = max(worst_mass, abs(mass - e.u ** 2 * brute.sum()))
    elapsed = time.perf_counter() - start
    ok = worst_tv <= 1e-9 and worst_mass <= 1e-9 and elapsed < 10
    verdict("C2 oracle equivalence", ok,
            f"TV {worst_tv:.1e}, success prob {worst_mass:.1e}, {elapsed:.2f}s")


# 3 ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def timed_training(trained):
    start = time.perf_counter()
    res = {n: trained(n) for n in (2, 8)}
    return res, time.perf_counter() - start


def _noiseless_z_error(layers, results, tfi, grid):
    spec = AnsatzSpec(layers=layers)
    z_exact = nonherm.exact_reference(tfi, grid)
    psi0 = nonherm.all_down_index(tfi.sites)
    errs = []
    for k, res in enumerate(results):
        dist = run_trajectories(spec, res.params, psi0, NoiseModel(), ShotPlan(32000, seed=0), task=k)
        selected, _ = nonherm.post_select(dist)
        errs.append(abs(nonherm.z_magnetization(selected) - z_exact[k]))
    return np.array(errs)


def test_c3a_training_cost_two_layers(timed_training, verdict):
    (res, elapsed) = timed_training
    worst = max(r.final_cost for r in res[2])
    verdict("C3a n=2 cost <= 0.02 at all 11 steps", worst <= 0.02 and elapsed < 600,
            f"max cost {worst:.4f}, training {elapsed:.0f}s")


def test_c3b_training_cost_eight_layers(timed_training, verdict):
    (res, elapsed) = timed_training
    worst = max(r.final_cost for r in res[8])
    verdict("C3b n=8 cost <= 1e-3", worst <= 1e-3 and elapsed < 600,
            f"max cost {worst:.1e}, training {elapsed:.0f}s")


@pytest.mark.parametrize("layers", [2, 8])
def test_c3c_noiseless_magnetization(layers, timed_training, tfi, grid, verdict):
    (res, _) = timed_training
    errs = _noiseless_z_error(layers, res[layers], tfi, grid)
    worst = int(np.argmax(errs))
    verdict(f"C3c n={layers} noiseless <Z> within 0.05 at every t (32000 shots)",
            errs.max() <= 0.05, f"max |dZ| {errs.max():.4f} at t={grid.times[worst]:g}")


# 4 ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def fig3_table(train_cache):
    start = time.perf_counter()
    base = load_config("fig3")
    rows = sweep(base, P_GRID, N_GRID, cache=train_cache)
    return rows, time.perf_counter() - start


def test_c4a_raw_deviation_grows(fig3_table, verdict):
    rows, elapsed = fig3_table
    lo = table_lookup(rows, 0.003, 2).dev_raw
    hi = table_lookup(rows, 0.015, 5).dev_raw
    verdict("C4a raw deviation (0.015,5) >= 2 x (0.003,2)", hi >= 2 * lo and elapsed < 900,
            f"{lo:.4f} -> {hi:.4f}, ratio {hi / lo:.2f}, sweep {elapsed:.0f}s")


def test_c4b_full_deviation_bound(fig3_table, verdict):
    rows, _ = fig3_table
    bad = [(r.p, r.n, round(r.dev_full, 4)) for r in rows if r.dev_full > 0.05]
    worst = max(r.dev_full for r in rows)
    verdict("C4b full-mitigation deviation <= 0.05 at every cell", not bad,
            f"max {worst:.4f}; over bound: {bad}" if bad else f"max {worst:.4f}")


def test_c4c_full_halves_raw(fig3_table, verdict):
    rows, _ = fig3_table
    cells = [r for r in rows if r.p >= 0.009 - 1e-12]
    bad = [(r.p, r.n, round(r.dev_full / r.dev_raw, 3)) for r in cells if r.dev_full > 0.5 * r.dev_raw]
    verdict("C4c full <= 0.5 x raw for every cell with p >= 0.009", not bad,
            f"violations (p, n, full/raw): {bad}" if bad else f"{len(cells)} cells")


# 5 ---------------------------------------------------------------------------

def test_c5_readout_mitigation_insignificant(train_cache, verdict):
    start = time.perf_counter()
    base = load_config("fig4")
    assert (base.noise.cx_depol, base.noise.readout_flip) == (0.012, 0.01)
    details, ok = [], True
    for n in (3, 4, 5):
        dev = deviations(run_experiment(base.with_(layers=n), cache=train_cache))
        frac = (dev["raw"] - dev["readout"]) / (dev["raw"] - dev["full"])
        ok &= dev["readout"] >= dev["full"] and frac < 0.3
        details.append(f"n={n} readout {dev['readout']:.4f} full {dev['full']:.4f} recovered {frac:.2f}")
    elapsed = time.perf_counter() - start
    verdict("C5 readout-only recovers < 30% of the raw-to-full gap", ok and elapsed < 300,
            "; ".join(details) + f"; {elapsed:.0f}s")


# 6 ---------------------------------------------------------------------------

def test_c6_calibration_identity(verdict):
    spec = AnsatzSpec(layers=2)
    zeros = identity_params(spec)
    dens = build_full_calibration(spec, zeros, NoiseModel()).matrix
    err = np.abs(dens - np.eye(32)).max()
    traj = build_full_calibration(spec, zeros, NoiseModel(), "trajectory", ShotPlan(32000, seed=0)).matrix
    # multinomial sigma is zero for an ideal identity, so the 3-sigma band is exact
    sigma = np.sqrt(np.eye(32) * (1 - np.eye(32)) / 32000)
    traj_ok = np.all(np.abs(traj - np.eye(32)) <= 3 * sigma)
    verdict("C6 zero-noise full calibration is the identity", err <= 1e-12 and traj_ok,
            f"density max err {err:.1e}, trajectory within 3 sigma: {bool(traj_ok)}")


# 7 ---------------------------------------------------------------------------

def test_c7_forward_backward(verdict):
    spec = AnsatzSpec(layers=2)
    cal = build_full_calibration(spec, identity_params(spec), NoiseModel(0.012, 0.01))
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        v = rng.dirichlet(np.full(32, 0.5))
        worst = max(worst, np.abs(mitigate(cal.matrix @ v, cal).weights - v).max())
    verdict("C7 mitigate(M v, M) = v for 100 random v", worst <= 1e-8, f"max err {worst:.1e}")


# 8 ---------------------------------------------------------------------------

def test_c8_determinism(tmp_path, train_cache, verdict):
    cache = str(train_cache.directory)
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        assert main(["run", "--config", "fig4", "--seed", "7", "--out", str(out),
                     "--cache", cache, "--no-png"]) == 0
        assert main(["sweep", "--config", "fig3", "--seed", "7", "--out", str(out),
                     "--cache", cache, "--no-png", "--workers", str(1 + 3 * i)]) == 0
        outs.append(out)
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
               for f in ("run.csv", "sweep.csv", "run.svg", "sweep.svg"))
    rows = len(report.read_csv(outs[0] / "sweep.csv")[1])
    verdict("C8 run and sweep artifacts byte-identical across executions", same and rows == 20,
            f"sweep rows {rows}")


# 9 ---------------------------------------------------------------------------

def test_c9_numerics(tfi, verdict):
    rng = np.random.default_rng(9)
    mats = [rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)) for _ in range(5)]
    mats.append(-2j * nonherm.build_hamiltonian(tfi))
    worst_expm = 0.0
    for a in mats:
        w, v = np.linalg.eig(a)
        ref = v @ np.diag(np.exp(w)) @ np.linalg.inv(v)
        worst_expm = max(worst_expm, np.linalg.norm(numkit.expm(a) - ref) / np.linalg.norm(ref))

    worst_sqrt = 0.0
    for _ in range(20):
        b = rng.normal(size=(16, 8)) + 1j * rng.normal(size=(16, 8))
        psd = b @ b.conj().T
        s = numkit.psd_sqrt(psd)
        worst_sqrt = max(worst_sqrt, np.linalg.norm(s @ s - psd) / np.linalg.norm(psd))

    spec = AnsatzSpec(layers=2)
    target = nonherm.embed(nonherm.evolution_operator(tfi, 6.0)).U
    params = rng.uniform(-2, 2, spec.num_params)
    f = lambda x: cost(spec, x, target)

    def central(i, h):
        e = np.zeros(spec.num_params)
        e[i] = h
        return (f(params + e) - f(params - e)) / (2 * h)

    extrap = np.array([(4 * central(i, 5e-4) - central(i, 1e-3)) / 3 for i in range(spec.num_params)])
    worst_grad = np.abs(gradient(spec, params, target, h=TrainConfig().fd_step) - extrap).max()
    ok = worst_expm <= 1e-9 and worst_sqrt <= 1e-7 and worst_grad <= 1e-5
    verdict("C9 numerics suite", ok,
            f"expm rel {worst_expm:.1e}, psd_sqrt {worst_sqrt:.1e}, gradient {worst_grad:.1e}")
