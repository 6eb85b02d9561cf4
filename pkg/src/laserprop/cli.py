"""Command-line driver: ``laserprop {run,converge,eigs,absorber-calibrate}``.

Every flag can also be given in a key-value config file (``key = value``
lines, optional ``[laserprop]`` header); flags on the command line win.
Exit status is 0 on success, 2 for an invalid specification and 3 for a
numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import spectral
from .harness import (
    NumericalFailure,
    RunSpec,
    SpecError,
    convergence_study,
    emit_report,
    propagate,
    run_metadata,
    write_series,
)
from .problems import EX5_MOMENTA, build_problem, calibrate_absorber, eigenpairs
from .splitting import SplitScheme, register_table

EXIT_OK, EXIT_SPEC, EXIT_NUMERIC = 0, 2, 3
SECTION = "laserprop"

# flag name -> (type, default); the config file uses the same keys
OPTIONS = {
    "problem": (str, None),
    "scheme": (str, "S2+OMF76"),
    "steps": (str, None),
    "dt": (float, None),
    "knots": (int, None),
    "grid": (int, None),
    "T_final": (float, None),
    "out": (str, None),
    "threads": (int, 1),
    "workers": (int, 1),
    "reference_scheme": (str, None),
    "reference_factor": (int, 8),
    "observables": (str, "norm"),
    "count": (int, 5),
    "tables": (str, None),
    "strengths": (str, "0.05,0.1,0.15,0.18,0.2,0.25,0.3"),
    "momenta": (str, ",".join(str(k) for k in EX5_MOMENTA)),
    "width": (float, 40.0),
}


def read_config(path) -> dict:
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = f"[{SECTION}]\n" + text
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise SpecError(f"{path}: {exc}") from exc
    section = parser[SECTION] if parser.has_section(SECTION) else parser[parser.sections()[0]]
    out = {}
    for key, value in section.items():
        key = key.replace("-", "_")
        if key not in OPTIONS:
            raise SpecError(f"{path}: unknown key {key!r}")
        out[key] = value
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key-value file with defaults for every flag")
    p.add_argument("--problem", help="ex1, ex2, ex3, ex4_1, ex4_2 or ex5")
    p.add_argument("--grid", type=int, help="points per axis")
    p.add_argument("--knots", type=int, help="Gauss-Legendre knots per step")
    p.add_argument("--T-final", dest="T_final", type=float, help="final time")
    p.add_argument("--out", help="output file or directory")
    p.add_argument("--threads", type=int, help="FFT threads")
    p.add_argument("--tables", help="extra splitting tables, NAME=path[,NAME=path]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="laserprop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="propagate one problem with one scheme")
    _add_common(run)
    run.add_argument("--scheme", help="e.g. S2+OMF76, S3+OMF85, TO+OMF85, MaStBM4+BM4")
    group = run.add_mutually_exclusive_group()
    group.add_argument("--steps", help="number of steps")
    group.add_argument("--dt", type=float, help="step size (must divide T_final)")
    run.add_argument("--observables", help="comma list: norm, wells")

    conv = sub.add_parser("converge", help="convergence study against a fine reference")
    _add_common(conv)
    conv.add_argument("--scheme", help="comma list of schemes")
    conv.add_argument("--steps", help="comma list of step counts")
    conv.add_argument("--reference-scheme", dest="reference_scheme")
    conv.add_argument("--reference-factor", dest="reference_factor", type=int)
    conv.add_argument("--workers", type=int, help="parallel sweep processes")

    eigs = sub.add_parser("eigs", help="lowest eigenvalues of a 1-D problem's potential")
    _add_common(eigs)
    eigs.add_argument("--count", type=int)

    cal = sub.add_parser("absorber-calibrate", help="scattering scan for the absorbing band")
    _add_common(cal)
    cal.add_argument("--strengths", help="comma list of damping strengths")
    cal.add_argument("--momenta", help="comma list of packet momenta")
    cal.add_argument("--width", type=float)
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    opts = {k: default for k, (_, default) in OPTIONS.items()}
    if getattr(args, "config", None):
        try:
            opts.update(read_config(args.config))
        except OSError as exc:
            raise SpecError(f"cannot read config: {exc}") from exc
    for key in OPTIONS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    for key, (typ, _) in OPTIONS.items():
        if opts[key] is not None and not isinstance(opts[key], typ):
            try:
                opts[key] = typ(opts[key])
            except ValueError as exc:
                raise SpecError(f"bad value for {key}: {opts[key]!r}") from exc
    if opts["threads"] < 1:
        raise SpecError("threads must be at least 1")
    return opts


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise SpecError(f"expected a comma list of numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise SpecError(f"expected a comma list of integers, got {text!r}") from exc


def load_tables(spec: Optional[str]) -> None:
    if not spec:
        return
    for item in spec.split(","):
        name, _, path = item.partition("=")
        if not path:
            raise SpecError(f"table entry {item!r} must look like NAME=path")
        try:
            register_table(SplitScheme.from_file(path.strip(), name=name.strip().upper()))
        except (OSError, ValueError) as exc:
            raise SpecError(f"cannot load table {name}: {exc}") from exc


def _require(opts: dict, *keys) -> None:
    for k in keys:
        if opts.get(k) in (None, ""):
            raise SpecError(f"missing required option --{k.replace('_', '-')}")


def cmd_run(opts: dict) -> int:
    _require(opts, "problem", "scheme")
    steps = None if opts["steps"] is None else _ints(opts["steps"])[0]
    if steps is None and opts["dt"] is None:
        raise SpecError("give --steps or --dt")
    run = RunSpec(
        opts["problem"], opts["scheme"], steps=steps, dt=opts["dt"] if steps is None else None,
        knots=opts["knots"], points=opts["grid"], T_final=opts["T_final"],
        observables=tuple(o.strip() for o in opts["observables"].split(",")), threads=opts["threads"],
    )
    problem = run.build()
    res = propagate(run, problem)
    meta = run_metadata(problem, run.outer().label, opts["threads"])
    meta.update(steps=res.steps, h=repr(res.h), ffts=res.ffts, wall_s=f"{res.wall:.3f}")
    if opts["out"]:
        write_series(res, opts["out"], meta)
    print(f"{meta['problem']} {meta['scheme']} N={res.steps} h={res.h:.6g} "
          f"norm drift={abs(res.norms[-1] - res.norms[0]):.3e} ffts={res.ffts} wall={res.wall:.2f}s")
    return EXIT_OK


def cmd_converge(opts: dict) -> int:
    _require(opts, "problem", "scheme", "steps")
    schemes = [s.strip() for s in opts["scheme"].split(",") if s.strip()]
    overrides = {k: v for k, v in (("points", opts["grid"]), ("T_final", opts["T_final"]), ("knots", opts["knots"]))
                 if v is not None}
    reports = convergence_study(
        opts["problem"], schemes, _ints(opts["steps"]), reference_scheme=opts["reference_scheme"],
        reference_factor=opts["reference_factor"], workers=opts["workers"], threads=opts["threads"], **overrides,
    )
    for r in reports:
        print(f"{r.scheme}: slope {r.slope:.3f}")
        for h, err, wall, ffts in r.rows:
            print(f"  h={h:.6g} error={err:.3e} ffts={int(ffts)} wall={wall:.2f}s")
    if opts["out"]:
        for path in emit_report(reports, opts["out"]):
            print(f"wrote {path}")
    return EXIT_OK


def cmd_eigs(opts: dict) -> int:
    _require(opts, "problem")
    try:
        problem = build_problem(opts["problem"], points=opts["grid"])
    except ValueError as exc:
        raise SpecError(str(exc)) from exc
    if problem.grid.dims != 1:
        raise SpecError("eigs supports 1-D problems only")
    bare = getattr(problem, "bare_potential", problem.potential)
    vals, _ = eigenpairs(problem.grid, bare, problem.eps, opts["count"])
    lines = [f"{j} {float(v)!r}" for j, v in enumerate(vals)]
    print("\n".join(lines))
    if opts["out"]:
        Path(opts["out"]).write_text("# index eigenvalue\n" + "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_calibrate(opts: dict) -> int:
    problem = build_problem(opts["problem"] or "ex5", points=opts["grid"])
    if problem.grid.dims != 1:
        raise SpecError("absorber calibration needs a 1-D problem")
    strengths, momenta = _floats(opts["strengths"]), _floats(opts["momenta"])
    best, worst, table = calibrate_absorber(problem.grid, opts["width"], strengths, momenta, problem.eps)
    print("strength " + " ".join(f"k={k:g}" for k in momenta))
    for g, row in zip(strengths, table):
        print(f"{g:8g} " + " ".join(f"{v:.2e}" for v in row))
    print(f"best strength {best:g} (worst residual {worst:.2e})")
    if opts["out"]:
        np.savetxt(opts["out"], np.column_stack([strengths, table]),
                   header="strength " + " ".join(f"k={k:g}" for k in momenta))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "converge": cmd_converge, "eigs": cmd_eigs, "absorber-calibrate": cmd_calibrate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SPEC if exc.code else EXIT_OK
    try:
        opts = resolve_options(args)
        load_tables(opts["tables"])
        spectral.set_fft_workers(opts["threads"])
        return COMMANDS[args.command](opts)
    except (SpecError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (NumericalFailure, RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
