"""Experiment configuration.

Config files are flat ``key = value`` lines; ``#`` starts a comment. Keys:

    preset          base preset to start from (default, fig3, fig4, fig5, figs3)
    device          noise preset: oslo, hanoi, guadalupe (sets p)
    sites J h_x gamma                 chain parameters
    dt steps                          time grid
    layers                            ansatz layers n
    p q q10                           CX depolarizing, readout flip, optional P(0|1)
    shots seed backend                sampling plan and backend (density|trajectory)
    modes                             comma list from none,readout,full
    identity_mode policy              analytic|variational, simplex|raw_quasi
    restarts max_iterations fd_step train_seed stop_cost   training knobs
    p_values n_values                 comma lists for sweeps
    cache_dir                         directory for trained-parameter JSON
"""

from dataclasses import dataclass, field, replace
from pathlib import Path

from ..circuit import AnsatzSpec
from ..errors import ConfigError
from ..noisesim import NoiseModel
from ..nonherm import TfiParams, TimeGrid
from ..varopt import TrainConfig

MODES = ("none", "readout", "full")

# mean CX error rates of the three hardware chains
DEVICES = {
    "oslo": NoiseModel(cx_depol=0.012, readout_flip=0.01),
    "hanoi": NoiseModel(cx_depol=0.012, readout_flip=0.01),
    "guadalupe": NoiseModel(cx_depol=0.015, readout_flip=0.01),
}

PRESETS = {
    "default": "",
    "fig3": """
        p_values = 0.003, 0.006, 0.009, 0.012, 0.015
        n_values = 2, 3, 4, 5
        q = 0.01
        backend = density
    """,
    "fig4": """
        device = oslo
        layers = 4
        backend = trajectory
        shots = 32000
        n_values = 2, 3, 4, 5
    """,
    "fig5": """
        device = guadalupe
        backend = trajectory
        shots = 32000
        p_values = 0.012, 0.015
        n_values = 2, 3, 4, 5
    """,
    "figs3": """
        layers = 8
        p_values = 0.003, 0.009, 0.015
        n_values = 8
    """,
}


@dataclass(frozen=True)
class ExperimentConfig:
    tfi: TfiParams = field(default_factory=TfiParams)
    grid: TimeGrid = field(default_factory=TimeGrid)
    layers: int = 2
    noise: NoiseModel = field(default_factory=lambda: NoiseModel(0.012, 0.01))
    shots: int = 32000
    seed: int = 0
    backend: str = "density"
    modes: tuple = MODES
    identity_mode: str = "analytic"
    policy: str = "simplex"
    train: TrainConfig = field(default_factory=TrainConfig)
    p_values: tuple = (0.003, 0.006, 0.009, 0.012, 0.015)
    n_values: tuple = (2, 3, 4, 5)
    cache_dir: str = None

    def __post_init__(self):
        if self.layers < 1:
            raise ConfigError("layers must be >= 1")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.backend not in ("density", "trajectory"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if not self.modes or any(m not in MODES for m in self.modes):
            raise ConfigError(f"modes must be a non-empty subset of {MODES}")
        if self.identity_mode not in ("analytic", "variational"):
            raise ConfigError(f"unknown identity_mode {self.identity_mode!r}")
        if self.policy not in ("simplex", "raw_quasi"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if any(not 0.0 <= p <= 0.05 for p in self.p_values):
            raise ConfigError("p_values must lie in [0, 0.05]")
        if any(n < 1 for n in self.n_values):
            raise ConfigError("n_values must be >= 1")

    @property
    def spec(self):
        return AnsatzSpec(num_qubits=self.tfi.sites + 1, layers=self.layers)

    def with_(self, **changes):
        return replace(self, **changes)


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def parse_lines(text):
    """Ordered (key, value) pairs from config text."""
    items = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        items.append((key, value))
    return items


def apply_items(cfg, items):
    tfi = dict(sites=cfg.tfi.sites, J=cfg.tfi.J, h_x=cfg.tfi.h_x, gamma=cfg.tfi.gamma)
    grid = dict(dt=cfg.grid.dt, steps=cfg.grid.steps)
    noise = dict(
        cx_depol=cfg.noise.cx_depol,
        readout_flip=cfg.noise.readout_flip,
        readout_flip_10=cfg.noise.readout_flip_10,
    )
    train = dict(
        restarts=cfg.train.restarts,
        max_iterations=cfg.train.max_iterations,
        fd_step=cfg.train.fd_step,
        seed=cfg.train.seed,
        stop_cost=cfg.train.stop_cost,
    )
    top = {}
    try:
        for key, value in items:
            if key == "preset":
                cfg = load_preset(value)
                return apply_items(cfg, [kv for kv in items if kv[0] != "preset"])
            elif key == "device":
                if value not in DEVICES:
                    raise ConfigError(f"unknown device {value!r}; choose from {sorted(DEVICES)}")
                dev = DEVICES[value]
                noise.update(cx_depol=dev.cx_depol, readout_flip=dev.readout_flip)
            elif key in ("sites", "steps"):
                (tfi if key == "sites" else grid)[key] = int(value)
            elif key in ("J", "h_x", "gamma"):
                tfi[key] = float(value)
            elif key == "dt":
                grid["dt"] = float(value)
            elif key == "p":
                noise["cx_depol"] = float(value)
            elif key == "q":
                noise["readout_flip"] = float(value)
            elif key == "q10":
                noise["readout_flip_10"] = float(value)
            elif key in ("layers", "shots", "seed"):
                top[key] = int(value)
            elif key in ("backend", "identity_mode", "policy"):
                top[key] = value
            elif key == "cache_dir":
                top[key] = value or None
            elif key == "modes":
                top[key] = tuple(m.strip() for m in value.split(",") if m.strip())
            elif key == "p_values":
                top[key] = _floats(value)
            elif key == "n_values":
                top[key] = _ints(value)
            elif key in ("restarts", "max_iterations"):
                train[key] = int(value)
            elif key == "train_seed":
                train["seed"] = int(value)
            elif key in ("fd_step", "stop_cost"):
                train[key] = float(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        return replace(
            cfg,
            tfi=TfiParams(**tfi),
            grid=TimeGrid(**grid),
            noise=NoiseModel(**noise),
            train=TrainConfig(**train),
            **top,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_preset(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return apply_items(ExperimentConfig(), parse_lines(PRESETS[name]))


def load_config(source=None):
    """Config from a preset name, a file path, or defaults when None."""
    if source is None:
        return ExperimentConfig()
    if source in PRESETS:
        return load_preset(source)
    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"config {source!r} is neither a preset nor a readable file")
    return apply_items(ExperimentConfig(), parse_lines(path.read_text()))


def dump_config(cfg):
    """Serialize to the ``key = value`` format; round-trips through load_config."""
    lines = [
        f"sites = {cfg.tfi.sites}",
        f"J = {cfg.tfi.J!r}",
        f"h_x = {cfg.tfi.h_x!r}",
        f"gamma = {cfg.tfi.gamma!r}",
        f"dt = {cfg.grid.dt!r}",
        f"steps = {cfg.grid.steps}",
        f"layers = {cfg.layers}",
        f"p = {cfg.noise.cx_depol!r}",
        f"q = {cfg.noise.readout_flip!r}",
    ]
    if cfg.noise.readout_flip_10 is not None:
        lines.append(f"q10 = {cfg.noise.readout_flip_10!r}")
    lines += [
        f"shots = {cfg.shots}",
        f"seed = {cfg.seed}",
        f"backend = {cfg.backend}",
        f"modes = {', '.join(cfg.modes)}",
        f"identity_mode = {cfg.identity_mode}",
        f"policy = {cfg.policy}",
        f"restarts = {cfg.train.restarts}",
        f"max_iterations = {cfg.train.max_iterations}",
        f"fd_step = {cfg.train.fd_step!r}",
        f"train_seed = {cfg.train.seed}",
        f"stop_cost = {cfg.train.stop_cost!r}",
        f"p_values = {', '.join(repr(p) for p in cfg.p_values)}",
        f"n_values = {', '.join(str(n) for n in cfg.n_values)}",
    ]
    if cfg.cache_dir:
        lines.append(f"cache_dir = {cfg.cache_dir}")
    return "\n".join(lines) + "\n"
