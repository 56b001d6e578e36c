"""Command line interface: ``table``, ``sweep`` and ``check``.

Exit codes: 0 success, 1 property violation, 2 usage or configuration
error, 3 I/O or numerical infrastructure failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .checks import run_checks
from .estimators import FUNCTIONAL_NAMES, functional
from .model import (ComparisonInstance, VectorSet, VectorSetError, builtin_sets,
                    load_vector_set, normalize_columns)
from .montecarlo import SamplerConfig, estimate_curves
from .tables import TABLE_PRESETS, format_csv, reproduce_table

__all__ = ["main", "build_parser", "parse_grid", "RunConfig", "ConfigError"]

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("bilinear_comparison")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending flag."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    inst: ComparisonInstance
    grid: tuple
    sampler: SamplerConfig
    functionals: tuple
    c3s: Optional[float]
    source: str
    out: Optional[str]
    precision: int


def parse_grid(text: str) -> tuple:
    """``"a:b:step"`` (inclusive of ``b`` when it lands on the grid) or ``"t1,t2,..."``."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ConfigError("--t: range form is a:b:step")
            a, b, step = parts
            if step <= 0 or b < a:
                raise ConfigError("--t: need a <= b and step > 0")
            count = int(np.floor((b - a) / step + 1e-9)) + 1
            grid = tuple(round(a + k * step, 12) for k in range(count))
        else:
            grid = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"--t: cannot parse {text!r}") from None
    if not grid:
        raise ConfigError("--t: empty grid")
    if any(not 0.0 <= t <= 1.0 for t in grid):
        raise ConfigError("--t: grid points must lie in [0, 1]")
    if len(set(grid)) != len(grid):
        raise ConfigError("--t: duplicate grid points")
    return grid


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    src = p.add_argument_group("instance")
    src.add_argument("--builtin", action="store_true", help="use the built-in 5x10 vector sets")
    src.add_argument("--x", metavar="FILE", help="x vector set (columns are vectors)")
    src.add_argument("--y", metavar="FILE", help="y vector set (columns are vectors)")
    src.add_argument("--format", choices=("csv", "json"), default=None,
                     help="input format (default: from the file extension)")
    src.add_argument("--normalize", action="store_true", help="scale every vector to unit norm")
    src.add_argument("--beta", type=float, default=3.0, help="inverse temperature (default 3)")
    src.add_argument("--s", type=float, default=1.0, help="outer exponent, nonzero (default 1)")
    src.add_argument("--c3", type=float, default=None, help="lifting power")
    src.add_argument("--c3s", type=float, default=None,
                     help="lifted-limit exponent (default c3 * beta)")


def _add_sampler_args(p: argparse.ArgumentParser, samples: Optional[int]) -> None:
    g = p.add_argument_group("sampling")
    g.add_argument("--samples", type=int, default=samples, help="number of Monte Carlo draws")
    g.add_argument("--seed", type=int, default=2016, help="64-bit seed (default 2016)")
    g.add_argument("--workers", type=int, default=1, help="worker threads (default 1)")


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", metavar="FILE", help="write output here instead of stdout")
    p.add_argument("--precision", type=int, default=6, help="significant digits (default 6)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bilincomp",
        description="Monte Carlo evaluation of bilinear Gaussian comparison functionals.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", help="reproduce one of the six preset tables")
    p.add_argument("--table", type=int, required=True, choices=sorted(TABLE_PRESETS))
    p.add_argument("--step", type=float, default=0.01, help="derivative grid spacing")
    _add_sampler_args(p, None)
    _add_output_args(p)

    p = sub.add_parser("sweep", help="estimate functionals on a grid of t")
    _add_instance_args(p)
    p.add_argument("--t", default="0:1:0.1", help='grid "a:b:step" or "t1,t2,..."')
    p.add_argument("--functional", action="append", choices=FUNCTIONAL_NAMES,
                   help="functional to estimate (repeatable; default psi)")
    _add_sampler_args(p, 50_000)
    _add_output_args(p)

    p = sub.add_parser("check", help="run the property suite")
    _add_instance_args(p)
    _add_sampler_args(p, 20_000)
    p.add_argument("--sign-draws", type=int, default=20_000,
                   help="draws for the per-draw sign checks")
    p.add_argument("--out", metavar="FILE", help="write the report here instead of stdout")
    p.add_argument("--negate-closed", action="store_true", help=argparse.SUPPRESS)
    return parser


def _load(path: str, fmt: Optional[str], flag: str) -> VectorSet:
    if fmt is None:
        fmt = "json" if path.lower().endswith(".json") else "csv"
    try:
        with open(path, encoding="utf-8") as fh:
            return load_vector_set(fh, format=fmt)
    except (VectorSetError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{flag} {path}: {exc}") from None


def _instance(args) -> tuple[ComparisonInstance, str]:
    files = args.x is not None or args.y is not None
    if args.builtin and files:
        raise ConfigError("choose either --builtin or --x/--y, not both")
    if files and (args.x is None or args.y is None):
        raise ConfigError("--x and --y must be given together")
    if files:
        xset, yset = _load(args.x, args.format, "--x"), _load(args.y, args.format, "--y")
        source = f"files:{args.x},{args.y}"
    else:
        xset, yset = builtin_sets()
        source = "builtin"
    if args.normalize:
        xset, yset = normalize_columns(xset), normalize_columns(yset)
    try:
        inst = ComparisonInstance(xset, yset, beta=args.beta, s=args.s, c3=args.c3)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return inst, source


def _sampler(args) -> SamplerConfig:
    if args.samples is not None and args.samples < 1:
        raise ConfigError("--samples must be >= 1")
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    if not 0 <= args.seed < 1 << 64:
        raise ConfigError("--seed must be a 64-bit unsigned integer")
    kw = dict(seed=args.seed, workers=args.workers)
    if args.samples is not None:
        kw["n_samples"] = args.samples
    return SamplerConfig(**kw)


def _config(args) -> RunConfig:
    if getattr(args, "precision", 6) < 1:
        raise ConfigError("--precision must be >= 1")
    inst, source = _instance(args)
    grid = parse_grid(args.t) if args.command == "sweep" else ()
    names = tuple(args.functional or ["psi"]) if args.command == "sweep" else ()
    for name in names:
        if name.startswith(("psistar", "dpsistar")) and inst.c3 is None:
            raise ConfigError(f"--functional {name} needs --c3")
        if name == "lifted_limit" and inst.c3 is None and args.c3s is None:
            raise ConfigError("--functional lifted_limit needs --c3s or --c3")
        if name.endswith("_standard") and any(not 0.0 < t < 1.0 for t in grid):
            raise ConfigError(f"--functional {name} is only defined for 0 < t < 1; adjust --t")
    if args.c3s is not None and not args.c3s > 0:
        raise ConfigError("--c3s must be positive")
    if len(set(names)) != len(names):
        raise ConfigError("--functional given twice")
    return RunConfig(command=args.command, inst=inst, grid=grid, sampler=_sampler(args),
                     functionals=names, c3s=args.c3s, source=source, out=args.out,
                     precision=getattr(args, "precision", 6))


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _cmd_table(args) -> int:
    if args.precision < 1:
        raise ConfigError("--precision must be >= 1")
    sampler = _sampler(args)
    log.info("table %d, seed %d", args.table, sampler.seed)
    result = reproduce_table(args.table, seed=sampler.seed, n_samples=args.samples,
                             workers=sampler.workers, step=args.step)
    _emit(result.to_csv(args.precision), args.out)
    return EXIT_OK


def _cmd_sweep(cfg: RunConfig) -> int:
    log.info("sweep %s on %d grid points, %d draws", ",".join(cfg.functionals),
             len(cfg.grid), cfg.sampler.n_samples)
    funcs = [functional(name, c3s=cfg.c3s) for name in cfg.functionals]
    curves = estimate_curves(cfg.inst, [(f, cfg.grid) for f in funcs], cfg.sampler)
    header = ["t"]
    for name in cfg.functionals:
        header += [name, name + "_se"]
    rows = []
    for k, t in enumerate(cfg.grid):
        row = [t]
        for name in cfg.functionals:
            r = curves[name].results[name][k]
            row += [r.mean, r.std_error]
        rows.append(row)
    meta = {
        "command": "sweep",
        "sets": cfg.source,
        "beta": cfg.inst.beta,
        "s": cfg.inst.s,
        "c3": cfg.inst.c3,
        "c3s": cfg.c3s,
        "seed": cfg.sampler.seed,
        "samples": cfg.sampler.n_samples,
        "t": list(cfg.grid),
        "functionals": list(cfg.functionals),
    }
    _emit(format_csv(meta, header, rows, cfg.precision), cfg.out)
    return EXIT_OK


def _cmd_check(cfg: RunConfig, args) -> int:
    log.info("property suite, seed %d", cfg.sampler.seed)
    results = run_checks(cfg.inst, cfg.sampler, sign_draws=args.sign_draws,
                         negate_closed=args.negate_closed)
    lines = [r.line() for r in results]
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed} passed, {failed} failed")
    _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_VIOLATION if failed else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "table":
            return _cmd_table(args)
        if args.command == "check" and args.sign_draws < 1:
            raise ConfigError("--sign-draws must be >= 1")
        cfg = _config(args)
        if args.command == "sweep":
            return _cmd_sweep(cfg)
        return _cmd_check(cfg, args)
    except ConfigError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"{parser.prog}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FloatingPointError, OverflowError) as exc:
        print(f"{parser.prog}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
