"""End-to-end pipeline: train, execute under noise, mitigate, post-select."""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import nonherm, varopt
from ..errors import NumericError
from ..mitigate import build_full_calibration, build_readout_calibration, mitigate
from ..noisesim import ShotPlan, run_density_noisy, run_trajectories

log = logging.getLogger(__name__)


@dataclass
class RunRecord:
    t: float
    z_exact: float
    z_raw: float = None
    z_readout: float = None
    z_full: float = None
    success_prob: float = None
    train_cost: float = None


@dataclass
class SweepRow:
    p: float
    n: int
    dev_raw: float = None
    dev_readout: float = None
    dev_full: float = None


class TrainingCache:
    """Trained parameters keyed by (ansatz, chain, grid, training config).

    Kept in memory and, when ``directory`` is set, as one JSON file per key.
    Noise never enters the key: training is noiseless.
    """

    def __init__(self, directory=None):
        self.directory = Path(directory) if directory else None
        self._mem = {}

    @staticmethod
    def key(spec, tfi, grid, train):
        raw = repr((spec, tfi, grid, train))
        digest = hashlib.sha1(raw.encode()).hexdigest()[:16]
        return f"{spec.key()}_{digest}"

    def get(self, spec, tfi, grid, train):
        k = self.key(spec, tfi, grid, train)
        if k in self._mem:
            return self._mem[k]
        if self.directory is not None:
            path = self.directory / f"{k}.json"
            if path.is_file():
                results = varopt.results_from_json(path.read_text())
                self._mem[k] = results
                return results
        results = varopt.train_evolution(spec, tfi, grid, train)
        self._mem[k] = results
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
            (self.directory / f"{k}.json").write_text(varopt.results_to_json(results))
        return results


_default_cache = TrainingCache()


def _cache_for(cfg, cache):
    if cache is not None:
        return cache
    if cfg.cache_dir:
        return TrainingCache(cfg.cache_dir)
    return _default_cache


def train_for(cfg, cache=None):
    return _cache_for(cfg, cache).get(cfg.spec, cfg.tfi, cfg.grid, cfg.train)


def calibrations(cfg):
    """Calibration matrices for the configured modes, keyed by mode."""
    spec = cfg.spec
    plan = ShotPlan(cfg.shots, cfg.seed) if cfg.backend == "trajectory" else None
    cals = {}
    if "full" in cfg.modes:
        ident = varopt.train_identity(spec, cfg.train, mode=cfg.identity_mode)
        cals["full"] = build_full_calibration(spec, ident.params, cfg.noise, cfg.backend, plan)
    if "readout" in cfg.modes:
        cals["readout"] = build_readout_calibration(cfg.noise, spec.num_qubits, cfg.backend, plan)
    return cals


def _z_after(dist):
    selected, mass = nonherm.post_select(dist)
    return nonherm.z_magnetization(selected), mass


def run_experiment(cfg, cache=None, trained=None):
    """One record per grid time. ``trained`` overrides the training step."""
    spec = cfg.spec
    psi0 = nonherm.all_down_index(cfg.tfi.sites)
    z_exact = nonherm.exact_reference(cfg.tfi, cfg.grid)
    results = trained if trained is not None else train_for(cfg, cache)
    if len(results) != cfg.grid.steps:
        raise ValueError("trained parameters do not match the time grid")
    try:
        cals = calibrations(cfg)
    except NumericError as exc:
        raise type(exc)(f"calibration: {exc}") from exc
    records = []
    for k, (t, res) in enumerate(zip(cfg.grid.times, results)):
        if cfg.backend == "density":
            dist = run_density_noisy(spec, res.params, psi0, cfg.noise)
        else:
            dist = run_trajectories(spec, res.params, psi0, cfg.noise, ShotPlan(cfg.shots, cfg.seed), task=k)
        rec = RunRecord(t=t, z_exact=z_exact[k], train_cost=res.final_cost)
        for mode in cfg.modes:
            try:
                if mode == "none":
                    rec.z_raw, rec.success_prob = _z_after(dist)
                else:
                    fixed = mitigate(dist, cals[mode], cfg.policy)
                    z, _ = _z_after(fixed)
                    setattr(rec, f"z_{mode}", z)
            except NumericError as exc:
                raise type(exc)(f"t={t:g} mode={mode}: {exc}") from exc
        records.append(rec)
    return records


def deviations(records):
    """Time-averaged absolute deviation per mode (None when a mode was not run)."""
    out = {}
    for mode, attr in (("raw", "z_raw"), ("readout", "z_readout"), ("full", "z_full")):
        vals = [getattr(r, attr) for r in records]
        if any(v is None for v in vals):
            out[mode] = None
        else:
            out[mode] = nonherm.curve_deviation([r.z_exact for r in records], vals)
    return out


def sweep(base_cfg, p_values=None, n_values=None, cache=None, workers=1):
    """Deviation table over CX error rates and layer counts, rows ordered (p, n)."""
    p_values = tuple(base_cfg.p_values if p_values is None else p_values)
    n_values = tuple(base_cfg.n_values if n_values is None else n_values)
    if any(not 0.0 <= p <= 0.05 for p in p_values):
        raise ValueError("p_values must lie in [0, 0.05]")
    if any(n < 1 for n in n_values):
        raise ValueError("n_values must be >= 1")
    cache = _cache_for(base_cfg, cache)
    trained = {}
    for n in n_values:
        cfg_n = base_cfg.with_(layers=n)
        trained[n] = cache.get(cfg_n.spec, cfg_n.tfi, cfg_n.grid, cfg_n.train)
    cells = [(p, n) for p in p_values for n in n_values]

    def cell(pn):
        p, n = pn
        noise = type(base_cfg.noise)(
            cx_depol=p,
            readout_flip=base_cfg.noise.readout_flip,
            readout_flip_10=base_cfg.noise.readout_flip_10,
        )
        cfg = base_cfg.with_(layers=n, noise=noise)
        dev = deviations(run_experiment(cfg, trained=trained[n]))
        log.info("p=%g n=%d %s", p, n, dev)
        return SweepRow(p=p, n=n, dev_raw=dev["raw"], dev_readout=dev["readout"], dev_full=dev["full"])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(cell, cells))
    return [cell(pn) for pn in cells]


def table_lookup(rows, p, n):
    for r in rows:
        if np.isclose(r.p, p) and r.n == n:
            return r
    raise KeyError((p, n))
