"""Command-line entry point: ``stochsplit {run,converge,diagnose,riemann-oracle}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..clstep import exact_riemann_burgers
from ..noise import dump_paths, sample_paths
from ..splitting import export_csv, run_splitting
from .config import ConfigError, ExperimentConfig, config_hash, load_config
from .convergence import run_convergence, write_convergence_csv
from .diagnose import run_diagnose, write_diagnose_csv

log = logging.getLogger("stochsplit")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--paths", type=int, help="number of Wiener paths")
    p.add_argument("--out", type=str, help="output directory")
    p.add_argument("--threads", type=int, help="worker processes")


def _load(args, ensemble: bool = True) -> ExperimentConfig:
    # for `run`, --paths counts trajectories and is not an ensemble size
    overrides = dict(seed=args.seed, n_paths=args.paths if ensemble else None, out=args.out,
                     workers=args.threads)
    if args.config is not None:
        return load_config(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text())
    return out


def _finish(out: Path, text: str) -> None:
    (out / "summary.txt").write_text(text + "\n")
    print(text)


def cmd_run(args) -> int:
    cfg = _load(args, ensemble=False)
    out = _outdir(cfg)
    k = cfg.diag_level if args.level is None else args.level
    npaths = args.paths or 1
    if npaths < 1:
        raise ValueError("--paths must be positive")
    path = sample_paths(cfg.seed, range(npaths), cfg.T, cfg.T, level=cfg.path_level)
    traj = run_splitting(cfg.initial_state(k), cfg.build_problem(), path, cfg.dt(k), cfg.T,
                         cfg.cl_scheme, cfg.sde_scheme)
    export_csv(traj, out / "trajectory.csv")
    dump_paths(path, out / "paths.wpth")
    u = np.atleast_2d(traj.final.values)
    _finish(out, "\n".join([
        f"run: problem={cfg.problem} level={k} dt={cfg.dt(k):.6g} steps={traj.n_steps} "
        f"cells={traj.final.grid.ncells} paths={npaths}",
        f"config_hash={config_hash(cfg)} seed={cfg.seed}",
        f"u(T): min={u.min():.6g} max={u.max():.6g}",
        f"wrote {out / 'trajectory.csv'} and {out / 'paths.wpth'}",
    ]))
    return 0


def cmd_converge(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    fit = run_convergence(cfg)
    write_convergence_csv(fit, cfg, out / "converge.csv")
    ok_order = fit.slope >= cfg.min_order
    ok_half = fit.halfwidth <= cfg.max_halfwidth
    lines = [f"converge: problem={cfg.problem} paths={cfg.n_paths} ladder={list(cfg.ladder)} "
             f"ref={cfg.ref_level}", f"config_hash={config_hash(cfg)} seed={cfg.seed}",
             "level        dt        mean error    stderr"]
    lines += [f"{k:5d}  {dt:10.4g}  {m:12.6g}  {s:10.3g}"
              for k, dt, m, s in zip(fit.levels, fit.dts, fit.means, fit.stderrs)]
    lines += [f"order {fit.slope:.4f} +- {fit.halfwidth:.4f} (95%)",
              f"adjacent-level error correlation {fit.level_correlation():.3f}",
              f"order >= {cfg.min_order}: {'PASS' if ok_order else 'FAIL'}",
              f"half-width <= {cfg.max_halfwidth}: {'PASS' if ok_half else 'FAIL'}"]
    _finish(out, "\n".join(lines))
    return 0 if ok_order and ok_half else 1


def cmd_diagnose(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    bundle = run_diagnose(cfg)
    write_diagnose_csv(bundle, cfg, out / "diagnose.csv")
    _finish(out, f"diagnose: problem={cfg.problem} config_hash={config_hash(cfg)} "
                 f"seed={cfg.seed}\n{bundle.summary()}")
    return 0 if bundle.passed else 1


def cmd_oracle(args) -> int:
    x = np.linspace(args.xmin, args.xmax, args.n)
    u = exact_riemann_burgers(args.ul, args.ur, x, args.t)
    print("x,u")
    for xi, ui in zip(x, np.atleast_1d(u)):
        print(f"{xi:.17g},{ui:.17g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochsplit",
                                     description="Operator splitting for stochastic balance laws")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one split trajectory; dump checkpoints and paths")
    _common(p)
    p.add_argument("--level", type=int, help="time level k (dt = T/2^k); default diag_level")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("converge", help="self-convergence rate experiment")
    _common(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("diagnose", help="inequality suite")
    _common(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("riemann-oracle", help="print the exact Burgers Riemann solution")
    p.add_argument("--ul", type=float, default=1.0)
    p.add_argument("--ur", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--xmin", type=float, default=-1.0)
    p.add_argument("--xmax", type=float, default=1.0)
    p.add_argument("--n", type=int, default=21)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
