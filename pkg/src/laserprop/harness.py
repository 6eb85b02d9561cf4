"""Propagation runs, convergence studies and report files."""

from __future__ import annotations

import math
import re
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import spectral
from .problems import Problem, build_problem, well_occupation
from .spectral import WaveFunction
from .splitting import OuterScheme, parse_scheme

ROUNDOFF_FLOOR = 1e-11


class SpecError(ValueError):
    """Invalid or inconsistent run specification."""


class NumericalFailure(RuntimeError):
    """A run produced non-finite values or an unusable reference."""


@dataclass
class RunSpec:
    """One propagation run.

    Exactly one of ``steps`` and ``dt`` must be given; ``dt`` has to divide
    the time window into a whole number of steps.
    """

    problem: str
    scheme: str
    steps: Optional[int] = None
    dt: Optional[float] = None
    knots: Optional[int] = None
    points: Optional[int] = None
    T_final: Optional[float] = None
    observables: tuple = ("norm",)
    threads: int = 1

    def build(self) -> Problem:
        try:
            return build_problem(self.problem, points=self.points, T_final=self.T_final, knots=self.knots)
        except ValueError as exc:
            raise SpecError(str(exc)) from exc

    def resolve(self, problem: Problem) -> tuple[int, float]:
        T = problem.T_final
        if (self.steps is None) == (self.dt is None):
            raise SpecError("give exactly one of steps and dt")
        if self.steps is not None:
            if self.steps < 1:
                raise SpecError("steps must be positive")
            return int(self.steps), T / int(self.steps)
        if not self.dt > 0:
            raise SpecError("dt must be positive")
        n = int(round(T / self.dt))
        if n < 1 or abs(n * self.dt - T) > 1e-12 * T:
            raise SpecError(f"dt = {self.dt} does not divide T_final = {T}")
        return n, T / n

    def outer(self) -> OuterScheme:
        try:
            return parse_scheme(self.scheme)
        except (ValueError, KeyError) as exc:
            raise SpecError(str(exc)) from exc


@dataclass
class RunResult:
    final: WaveFunction
    times: np.ndarray
    norms: np.ndarray
    observables: dict
    steps: int
    h: float
    ffts: int
    wall: float


def check_compatible(scheme: OuterScheme, problem: Problem) -> None:
    if scheme.needs_gradient and problem.grad_potential is None:
        raise SpecError(f"{scheme.label} needs the gradient of the potential, which {problem.name} lacks")


def propagate(run: RunSpec, problem: Optional[Problem] = None, initial: Optional[WaveFunction] = None) -> RunResult:
    """Advance the initial state of ``run`` through ``N`` steps of its scheme.

    The norm is recorded after every step, as are the well occupations when
    ``"wells"`` is requested.  Non-finite states raise
    :class:`NumericalFailure`.
    """
    problem = problem if problem is not None else run.build()
    scheme = run.outer()
    check_compatible(scheme, problem)
    n, h = run.resolve(problem)
    u = initial if initial is not None else problem.initial_state()
    want_wells = "wells" in run.observables
    if want_wells and problem.centres is None:
        raise SpecError(f"problem {problem.name} has no well centres")
    norms = np.empty(n + 1)
    norms[0] = u.norm()
    wells = [well_occupation(u, problem.centres)] if want_wells else None
    old_workers = spectral.fft_workers()
    spectral.set_fft_workers(run.threads)
    start = time.perf_counter()
    ffts0 = spectral.fft_count()
    try:
        for k in range(n):
            u = scheme.step(u, problem, k * h, h)
            norms[k + 1] = u.norm()
            if not math.isfinite(norms[k + 1]):
                raise NumericalFailure(f"non-finite state after step {k + 1}")
            if want_wells:
                wells.append(well_occupation(u, problem.centres))
    finally:
        spectral.set_fft_workers(old_workers)
    wall = time.perf_counter() - start
    ffts = spectral.fft_count() - ffts0
    obs = {"wells": np.array(wells)} if want_wells else {}
    return RunResult(u, h * np.arange(n + 1), norms, obs, n, h, ffts, wall)


# --- convergence studies -----------------------------------------------------


@dataclass
class ConvergenceReport:
    """Error rows of one scheme on one problem, sorted by decreasing ``h``."""

    problem: str
    scheme: str
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted((tuple(float(v) for v in r) for r in self.rows), key=lambda r: -r[0])

    @property
    def h(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def errors(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def slope(self) -> float:
        return fit_slope(self.h, self.errors)


def fit_slope(h: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``.

    Among the two smallest step sizes, rows whose error sits below the
    round-off floor are dropped before fitting.
    """
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    order = np.argsort(-h)
    h, e = h[order], e[order]
    keep = np.ones(h.size, dtype=bool)
    for i in range(max(h.size - 2, 0), h.size):
        if e[i] < ROUNDOFF_FLOOR:
            keep[i] = False
    keep &= e > 0
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(h[keep]), np.log(e[keep]), 1)[0])


def default_reference_scheme(problem: Problem) -> str:
    return "S2+OMF76" if problem.grad_potential is not None else "S3+OMF85"


def _sweep_entry(args):
    name, overrides, scheme, steps, threads = args
    run = RunSpec(name, scheme, steps=steps, threads=threads, **overrides)
    res = propagate(run)
    return res.final.values, res.wall, res.ffts


def convergence_study(
    problem: str,
    schemes: Sequence[str],
    steps: Sequence[int],
    reference_scheme: Optional[str] = None,
    reference_factor: int = 8,
    reference: Optional[WaveFunction] = None,
    workers: int = 1,
    threads: int = 1,
    **overrides,
) -> list[ConvergenceReport]:
    """Global error against a fine reference for every ``(scheme, N)`` pair.

    The reference is the selected scheme run with ``reference_factor`` times
    the largest step count, unless one is passed in.  ``overrides`` go to
    :func:`build_problem` (``points``, ``T_final``, ``knots``).
    """
    base = RunSpec(problem, schemes[0] if schemes else "S2+OMF76", steps=1, threads=threads, **overrides)
    prob = base.build()
    for s in schemes:
        check_compatible(RunSpec(problem, s, steps=1).outer(), prob)
    if reference is None:
        ref_scheme = reference_scheme or default_reference_scheme(prob)
        n_ref = reference_factor * max(steps)
        try:
            reference = propagate(RunSpec(problem, ref_scheme, steps=n_ref, threads=threads, **overrides)).final
        except NumericalFailure as exc:
            raise NumericalFailure(f"reference generation failed: {exc}") from exc
        ref_label = f"{ref_scheme} N={n_ref}"
    else:
        ref_label = "supplied"
    tasks = [(problem, overrides, s, n, threads) for s in schemes for n in steps]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_entry, tasks))
    else:
        results = [_sweep_entry(t) for t in tasks]
    reports = []
    it = iter(results)
    for s in schemes:
        rows = []
        for n in steps:
            values, wall, ffts = next(it)
            err = spectral.norm(prob.grid, values - reference.values)
            rows.append((prob.T_final / n, err, wall, ffts))
        meta = run_metadata(prob, s, threads)
        meta["reference"] = ref_label
        reports.append(ConvergenceReport(problem, parse_scheme(s).label, rows, meta))
    return reports


# --- report files ------------------------------------------------------------

COLUMNS = ("h", "error", "wall_s", "ffts")


def git_commit() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5,
                             cwd=Path(__file__).resolve().parent)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def run_metadata(problem: Problem, scheme: str, threads: int) -> dict:
    return {
        "problem": problem.name,
        "scheme": scheme,
        "grid": "x".join(str(m) for m in problem.grid.points),
        "knots": str(problem.knots),
        "commit": git_commit(),
        "threads": str(threads),
    }


def report_filename(problem: str, scheme: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9+_.-]", "_", scheme)
    return f"{problem}__{safe}.dat"


def write_report(report: ConvergenceReport, path) -> Path:
    path = Path(path)
    meta = {"problem": report.problem, "scheme": report.scheme, **report.meta}
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    lines.append("# columns: " + " ".join(COLUMNS))
    for r in report.rows:
        lines.append(" ".join(repr(float(v)) for v in r))
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_report(reports: Sequence[ConvergenceReport], out_dir, meta: Optional[dict] = None) -> list[Path]:
    """Write one column file per ``(problem, scheme)``; an empty set gives a header-only file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not reports:
        empty = ConvergenceReport(meta.get("problem", "none") if meta else "none", "none", [], dict(meta or {}))
        return [write_report(empty, out / "empty.dat")]
    return [write_report(r, out / report_filename(r.problem, r.scheme)) for r in reports]


def parse_report(path) -> ConvergenceReport:
    meta, rows = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        elif line.strip():
            rows.append(tuple(float(v) for v in line.split()))
    meta.pop("columns", None)
    problem = meta.pop("problem", "")
    scheme = meta.pop("scheme", "")
    return ConvergenceReport(problem, scheme, rows, meta)


def write_series(result: RunResult, path, meta: dict) -> Path:
    """Time series of the norm (and well occupations) as column text."""
    path = Path(path)
    cols = [result.times, result.norms]
    names = ["t", "norm"]
    if "wells" in result.observables:
        w = result.observables["wells"]
        cols.extend(w.T)
        names.extend(f"P{j + 1}" for j in range(w.shape[1]))
    header = "\n".join(f"{k}: {v}" for k, v in meta.items()) + "\ncolumns: " + " ".join(names)
    np.savetxt(path, np.column_stack(cols), header=header, fmt="%.17g")
    return path
