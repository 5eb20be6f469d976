"""Command line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical or
convergence failure.
"""

import argparse
import logging
import sys
from pathlib import Path

from .. import nonherm, varopt
from ..errors import ConfigError, NumericError
from . import experiment, report
from .config import dump_config, load_config

log = logging.getLogger("structmit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p):
    p.add_argument("--config", default=None, help="preset name or path to a key = value file")
    p.add_argument("--seed", type=int, default=None, help="sampling seed (overrides config)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--cache", default=None, help="directory for trained-parameter JSON")
    p.add_argument("--no-png", action="store_true", help="skip matplotlib figures")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser():
    parser = _Parser(prog="structmit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("train", help="train ansatz parameters for every grid time")
    _common(p)
    p.add_argument("--layers", type=int, default=None)

    p = sub.add_parser("calibrate", help="build full and readout calibration matrices")
    _common(p)
    p.add_argument("--layers", type=int, default=None)

    p = sub.add_parser("run", help="noisy execution with mitigation, one row per grid time")
    _common(p)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--params", default=None, help="trained-parameter JSON from `train`")

    p = sub.add_parser("sweep", help="deviation table over CX error rates and layer counts")
    _common(p)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("oracle", help="exact magnetization curve")
    _common(p)

    p = sub.add_parser("plot", help="render an emitted CSV as SVG (and PNG)")
    p.add_argument("csv", help="CSV produced by run, sweep or oracle")
    p.add_argument("--out", default=None, help="output directory (default: next to the CSV)")
    p.add_argument("--no-png", action="store_true")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _config(args):
    cfg = load_config(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "layers", None) is not None:
        changes["layers"] = args.layers
    if getattr(args, "cache", None):
        changes["cache_dir"] = args.cache
    return cfg.with_(**changes) if changes else cfg


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _figures(items, base, title, args):
    report.emit_svg(items, base.with_suffix(".svg"), title)
    if not args.no_png:
        report.emit_png(items, base.with_suffix(".png"), title)


def cmd_train(args):
    cfg = _config(args)
    out = _outdir(args)
    results = experiment.train_for(cfg)
    path = out / f"train_n{cfg.layers}.json"
    path.write_text(varopt.results_to_json(results))
    print(path)


def cmd_calibrate(args):
    cfg = _config(args).with_(modes=("readout", "full"))
    out = _outdir(args)
    cals = experiment.calibrations(cfg)
    for mode, cal in cals.items():
        (out / f"calibration_{mode}.json").write_text(cal.to_json())
        (out / f"calibration_{mode}.csv").write_text(cal.to_csv())
        print(f"{mode}: cond={cal.cond:.6g} -> {out / f'calibration_{mode}.json'}")


def cmd_run(args):
    cfg = _config(args)
    out = _outdir(args)
    trained = None
    if args.params:
        trained = varopt.results_from_json(Path(args.params).read_text())
    records = experiment.run_experiment(cfg, trained=trained)
    base = out / "run"
    report.emit_csv(records, base.with_suffix(".csv"))
    (out / "run.cfg").write_text(dump_config(cfg))
    p, q = cfg.noise.cx_depol, cfg.noise.readout_flip
    _figures(records, base, f"n={cfg.layers} p={p:g} q={q:g}", args)
    print(base.with_suffix(".csv"))


def cmd_sweep(args):
    cfg = _config(args)
    out = _outdir(args)
    rows = experiment.sweep(cfg, workers=args.workers)
    base = out / "sweep"
    report.emit_csv(rows, base.with_suffix(".csv"))
    (out / "sweep.cfg").write_text(dump_config(cfg))
    _figures(rows, base, "time-averaged deviation", args)
    print(base.with_suffix(".csv"))


def cmd_oracle(args):
    cfg = _config(args)
    out = _outdir(args)
    z = nonherm.exact_reference(cfg.tfi, cfg.grid)
    rows = list(zip(cfg.grid.times, z))
    base = out / "oracle"
    report.emit_csv(rows, base.with_suffix(".csv"), header=report.ORACLE_HEADER)
    _figures(rows, base, "exact", args)
    print(base.with_suffix(".csv"))


def cmd_plot(args):
    src = Path(args.csv)
    if not src.is_file():
        raise ConfigError(f"no such CSV: {src}")
    outdir = Path(args.out) if args.out else src.parent
    outdir.mkdir(parents=True, exist_ok=True)
    svg = report.csv_to_svg(src, outdir / (src.stem + ".svg"))
    if not args.no_png:
        header, rows = report.read_csv(src)
        report.render_png(header, rows, outdir / (src.stem + ".png"), src.stem)
    print(svg)


COMMANDS = {
    "train": cmd_train,
    "calibrate": cmd_calibrate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "plot": cmd_plot,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:
        # --help exits 0
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"structmit: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"structmit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
