"""Outer Magnus splittings, inner splitting tables and baseline steppers.

Every sixth-order scheme here has the shape

    exp(L/2) exp(C/2) [inner approximation of exp(T + W)] exp(C/2) exp(L/2)

where ``T`` is a kinetic term with a drift, ``W`` a multiplication
operator, ``C`` either the small commutator (S1) or a pure drift (S2, S3)
and ``L`` a linear phase (S3 only).  The inner exponential is approximated
by any splitting table for time-independent Hamiltonians.

Stage lists are written in operator-product order, left to right; the
rightmost stage acts first.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .field import MagnusCoefficients, magnus_coefficients
from .magnus import MagnusOperator, commutator_matvec, lanczos_expm, theta4_lanczos_step
from .spectral import WaveFunction, _kinetic_values

KINDS = ("T", "W", "WU")


@dataclass(frozen=True)
class SplitScheme:
    """Ordered ``(kind, coefficient, force-gradient coefficient)`` stages."""

    name: str
    stages: tuple
    order: int

    def __post_init__(self):
        for kind, _, _ in self.stages:
            if kind not in KINDS:
                raise ValueError(f"unknown stage kind {kind!r}")

    @classmethod
    def from_pattern(cls, name: str, pattern: Sequence, order: int) -> "SplitScheme":
        stages = []
        for st in pattern:
            kind, coef = st[0], float(st[1])
            ucoef = float(st[2]) if len(st) > 2 else 0.0
            if kind == "W" and ucoef != 0.0:
                kind = "WU"
            stages.append((kind, coef, ucoef))
        return cls(name, tuple(stages), order)

    @classmethod
    def from_file(cls, path, name: Optional[str] = None, order: int = 0) -> "SplitScheme":
        """Read a table with one stage per line: ``T a``, ``W b`` or ``WU b c``."""
        pattern = []
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            kind, *nums = line.split()
            pattern.append((kind.upper(), *map(float, nums)))
        if not pattern:
            raise ValueError(f"{path}: empty splitting table")
        return cls.from_pattern(name or Path(path).stem, pattern, order)

    @property
    def symmetric(self) -> bool:
        return self.stages == self.stages[::-1]

    @property
    def compact(self) -> bool:
        return any(kind == "WU" for kind, _, _ in self.stages)

    @property
    def kinetic_first(self) -> bool:
        return self.stages[0][0] == "T" and self.stages[-1][0] == "T"

    def coefficient_sums(self) -> tuple[float, float]:
        a = sum(c for k, c, _ in self.stages if k == "T")
        b = sum(c for k, c, _ in self.stages if k != "T")
        return a, b

    def kinetic_stage_count(self) -> int:
        return sum(1 for k, _, _ in self.stages if k == "T")


_OMF85 = dict(
    a=(-1.0130879789171747, 1.1874295737325427, -0.018335852096460590, 0.3439942572810926),
    b=(0.00016600692650009894, -0.3796242142637736, 0.6891374118518106, 0.3806415909709257),
)
_a, _b = _OMF85["a"], _OMF85["b"]
OMF85 = SplitScheme.from_pattern(
    "OMF85",
    [("T", _a[0]), ("W", _b[0]), ("T", _a[1]), ("W", _b[1]), ("T", _a[2]), ("W", _b[2]), ("T", _a[3]),
     ("W", _b[3]),
     ("T", _a[3]), ("W", _b[2]), ("T", _a[2]), ("W", _b[1]), ("T", _a[1]), ("W", _b[0]), ("T", _a[0])],
    order=6,
)

_a1, _a2 = 0.1097059723948682, 0.4140632267310831
_b1, _b2 = 0.2693315848935301, 1.1319803486515564
_c1, _c2 = 0.0008642161339706166, -0.01324638643416052
# The gradient weights sit on the outer and the central potential stages:
# the fourth-order condition on [W,[T,W]] reads 2 c1 + c2 = beta(a, b), which
# holds to 1e-17 only in this arrangement (c2 on the b2 stages gives order 2).
OMF76 = SplitScheme.from_pattern(
    "OMF76",
    [("T", _a1), ("W", _b1, _c1), ("T", _a2), ("W", _b2), ("T", 0.5 - (_a1 + _a2)),
     ("W", 1.0 - 2.0 * (_b1 + _b2), _c2),
     ("T", 0.5 - (_a1 + _a2)), ("W", _b2), ("T", _a2), ("W", _b1, _c1), ("T", _a1)],
    order=6,
)

# Six-stage fourth-order kinetic-first method of Blanes & Moan (2002).
_bm_a = (0.0792036964311957, 0.353172906049774, -0.0420650803577195)
_bm_b = (0.209515106613362, -0.143851773179818)
BM4 = SplitScheme.from_pattern(
    "BM4",
    [("T", _bm_a[0]), ("W", _bm_b[0]), ("T", _bm_a[1]), ("W", _bm_b[1]), ("T", _bm_a[2]),
     ("W", 0.5 - sum(_bm_b)), ("T", 1.0 - 2.0 * sum(_bm_a)), ("W", 0.5 - sum(_bm_b)),
     ("T", _bm_a[2]), ("W", _bm_b[1]), ("T", _bm_a[1]), ("W", _bm_b[0]), ("T", _bm_a[0])],
    order=4,
)

STRANG = SplitScheme.from_pattern("STRANG", [("T", 0.5), ("W", 1.0), ("T", 0.5)], order=2)

TABLES: dict[str, SplitScheme] = {s.name: s for s in (OMF85, OMF76, BM4, STRANG)}


def register_table(scheme: SplitScheme) -> None:
    TABLES[scheme.name.upper()] = scheme


def get_table(name) -> SplitScheme:
    if isinstance(name, SplitScheme):
        return name
    key = str(name).upper()
    if key not in TABLES:
        raise KeyError(
            f"no coefficient table {name!r}; known: {sorted(TABLES)}. "
            "Tables not printed with the method (e.g. OMF63/65/71/80/83) must be supplied as files."
        )
    return TABLES[key]


def inner_apply(
    scheme: SplitScheme,
    u: WaveFunction,
    kin_a: complex,
    kin_drift,
    w_phase: np.ndarray,
    u_phase: Optional[np.ndarray] = None,
    end_drift=None,
) -> WaveFunction:
    """Apply a splitting of ``exp(T + W)`` with ``T = kin_a Lap - kin_drift.grad``.

    ``end_drift`` is an extra commuting drift ``exp(-end_drift.grad)``
    applied at both ends of the product; it is merged into the outer kinetic
    stages when the table starts and ends with one.
    """
    if scheme.compact and u_phase is None:
        raise ValueError(f"{scheme.name} is a force-gradient scheme and needs the U phase (potential gradient)")
    grid = u.grid
    kin_drift = np.asarray(kin_drift, dtype=float)
    values = u.values
    stages = scheme.stages[::-1]
    merge = end_drift is not None and scheme.kinetic_first
    if end_drift is not None and not merge:
        values = _kinetic_values(grid, values, 0.0, end_drift)
    last = len(stages) - 1
    for i, (kind, coef, ucoef) in enumerate(stages):
        if kind == "T":
            drift = coef * kin_drift
            if merge and (i == 0 or i == last):
                drift = drift + end_drift
            values = _kinetic_values(grid, values, coef * kin_a, drift)
        else:
            phase = coef * w_phase
            if kind == "WU":
                phase = phase + ucoef * u_phase
            values = np.exp(phase) * values
    if end_drift is not None and not merge:
        values = _kinetic_values(grid, values, 0.0, end_drift)
    return WaveFunction(grid, values)


# --- per-step assembly -------------------------------------------------------


def _vtilde(problem, r) -> np.ndarray:
    out = problem.effective_potential() + 0.0
    for rk, x in zip(r, problem.coupling):
        if rk != 0.0:
            out = out + rk * x
    return np.broadcast_to(out, problem.grid.shape)


def _q_force(problem, q) -> np.ndarray:
    if not np.any(q != 0.0):
        return 0.0
    return sum(qk * g for qk, g in zip(q, problem.require_gradient()))


def _compact_phase(problem, co: MagnusCoefficients) -> np.ndarray:
    grad = problem.require_gradient()
    dcoup = problem.coupling_gradient
    total = 0.0
    for ax in range(problem.grid.dims):
        gv = grad[ax] + co.r[ax] * dcoup[ax]
        total = total + gv * gv
    return 2j * co.h**3 / problem.eps * total + np.zeros(problem.grid.shape)


def _coeffs(problem, t, h, rule, coeffs):
    if coeffs is not None:
        return coeffs
    return magnus_coefficients(problem.field, t, h, problem.eps, rule if rule is not None else problem.knots)


def _u_phase(problem, scheme, co):
    return _compact_phase(problem, co) if scheme.compact else None


def step_S1(u, problem, t, h, inner=OMF76, rule=None, lanczos_m: int = 2, lanczos_tol: Optional[float] = 1e-12,
            coeffs=None) -> WaveFunction:
    """Strang split of the commutator: ``exp(C1/2) inner(T1 + W1) exp(C1/2)``.

    ``exp(C1/2)`` is formed by Lanczos starting from ``lanczos_m`` iterations
    and growing (up to 64) until the residual estimate is below
    ``lanczos_tol * ||u||``; pass ``lanczos_tol=None`` for a fixed count.
    """
    scheme = get_table(inner)
    co = _coeffs(problem, t, h, rule, coeffs)
    eps = problem.eps
    problem.require_gradient()
    w = -1j * h / eps * _vtilde(problem, co.r) + 1j / eps * _q_force(problem, co.q) + co.c
    f = sum(pk * g for pk, g in zip(co.p, problem.grad_potential)) + np.zeros(problem.grid.shape)

    def half_commutator(values):
        if not np.any(f):
            return values
        matvec = lambda x: commutator_matvec(problem.grid, f, x)  # noqa: E731
        if lanczos_tol is None:
            return lanczos_expm(matvec, values, lanczos_m, 0.5)
        tol = lanczos_tol * np.linalg.norm(values)
        return lanczos_expm(matvec, values, max(64, lanczos_m), 0.5, tol=tol, min_iter=lanczos_m)

    v = WaveFunction(u.grid, half_commutator(u.values))
    v = inner_apply(scheme, v, 1j * h * eps, co.s, w, _u_phase(problem, scheme, co))
    return WaveFunction(u.grid, half_commutator(v.values))


def step_S2(u, problem, t, h, inner=OMF76, rule=None, coeffs=None) -> WaveFunction:
    """Commutator-free split: ``exp(C2/2) inner(T2 + W2) exp(C2/2)``, ``C2 = -12 p.grad / h^2``."""
    scheme = get_table(inner)
    co = _coeffs(problem, t, h, rule, coeffs)
    eps = problem.eps
    w = -1j * h / eps * _vtilde(problem, co.r) + 1j / eps * _q_force(problem, co.q) + co.c
    return inner_apply(scheme, u, 1j * h * eps, co.s_tilde, w, _u_phase(problem, scheme, co),
                       end_drift=6.0 * co.p / h**2)


def step_S3(u, problem, t, h, inner=OMF85, rule=None, coeffs=None) -> WaveFunction:
    """Gradient-free split ``exp(L/2) exp(C2/2) inner(T2 + W3) exp(C2/2) exp(L/2)``.

    ``L = -6 i q.x / (h^2 eps)`` and ``W3 = -i h Vtilde / eps - L + c_tilde``.
    The sign of ``L`` is fixed by the symmetric BCH term ``-[[B, A], B] / 12``
    with ``A = L``; the opposite sign leaves an O(h^5) defect ``q.grad(Vtilde)``
    and the scheme drops to order four.
    """
    scheme = get_table(inner)
    if scheme.compact:
        raise ValueError("the gradient-free scheme cannot use a force-gradient inner table")
    co = _coeffs(problem, t, h, rule, coeffs)
    eps = problem.eps
    qx = sum(qk * x for qk, x in zip(co.q, problem.coupling)) + np.zeros(problem.grid.shape)
    half_l = -3j / (h * h * eps) * qx
    w = -1j * h / eps * _vtilde(problem, co.r) - 2.0 * half_l + co.c_tilde
    v = WaveFunction(u.grid, np.exp(half_l) * u.values)
    v = inner_apply(scheme, v, 1j * h * eps, co.s_tilde, w, end_drift=6.0 * co.p / h**2)
    return WaveFunction(u.grid, np.exp(half_l) * v.values)


def step_MaStBM4(u, problem, t, h, inner=BM4, rule=None, coeffs=None) -> WaveFunction:
    """Fourth-order Magnus-Strang step with half drifts ``exp(-s.grad/2)`` at both ends."""
    scheme = get_table(inner)
    if scheme.compact:
        raise ValueError("the fourth-order Magnus-Strang step takes a classical table")
    co = _coeffs(problem, t, h, rule, coeffs)
    eps = problem.eps
    w = -1j * h / eps * _vtilde(problem, co.r)
    return inner_apply(scheme, u, 1j * h * eps, np.zeros(problem.grid.dims), w, end_drift=0.5 * co.s)


def step_time_ordered(u, problem, t, h, scheme=OMF85) -> WaveFunction:
    """Classical splitting with the clock advanced by the kinetic stages.

    Each potential stage samples ``V0 + e(tau).x`` at the running time
    ``tau = t + h * (sum of kinetic weights applied so far)``.
    """
    scheme = get_table(scheme)
    if scheme.compact:
        raise ValueError("time-ordered baseline supports classical (T/W) tables only")
    grid, eps = problem.grid, problem.eps
    base = problem.effective_potential() + np.zeros(grid.shape)
    values = u.values
    tau = t
    for kind, coef, _ in scheme.stages[::-1]:
        if kind == "T":
            values = _kinetic_values(grid, values, 1j * coef * h * eps, None)
            tau += coef * h
        else:
            e = problem.field(np.array([tau]))[0]
            pot = base + sum(ek * x for ek, x in zip(e, problem.coupling))
            values = np.exp(-1j * coef * h / eps * pot) * values
    return WaveFunction(grid, values)


def step_theta4_lanczos(u, problem, t, h, m: int = 40, rule=None, tol: Optional[float] = None,
                        coeffs=None) -> WaveFunction:
    co = _coeffs(problem, t, h, rule, coeffs)
    return theta4_lanczos_step(magnus_operator(problem, co), u, m, tol=tol)


def magnus_operator(problem, coeffs: MagnusCoefficients) -> MagnusOperator:
    return MagnusOperator(
        grid=problem.grid,
        coeffs=coeffs,
        potential=problem.effective_potential(),
        grad_potential=problem.grad_potential,
        eps=problem.eps,
        coupling=problem.coupling,
    )


# --- scheme strings ----------------------------------------------------------

VARIANTS = ("S1", "S2", "S3", "TO", "MASTBM4", "LANCZOS")


@dataclass(frozen=True)
class OuterScheme:
    """A parsed scheme string such as ``"S2+OMF76"`` or ``"TO+OMF85"``.

    ``LANCZOS+<m>`` selects the whole-exponent Lanczos propagator with ``m``
    iterations.  ``S1+<table>L<m>`` runs S1 with exactly ``m`` Lanczos
    iterations per half commutator instead of the adaptive count.
    """

    variant: str
    inner: Optional[SplitScheme]
    lanczos_m: int = 2
    lanczos_fixed: bool = False

    @property
    def label(self) -> str:
        if self.variant == "LANCZOS":
            return f"LANCZOS+{self.lanczos_m}"
        name = "MaStBM4" if self.variant == "MASTBM4" else self.variant
        suffix = f"L{self.lanczos_m}" if self.lanczos_fixed else ""
        return f"{name}+{self.inner.name}{suffix}"

    @property
    def needs_gradient(self) -> bool:
        return self.variant in ("S1", "S2", "LANCZOS") or (self.inner is not None and self.inner.compact)

    def step(self, u, problem, t, h, rule=None):
        v = self.variant
        if v == "S1":
            tol = None if self.lanczos_fixed else 1e-12
            return step_S1(u, problem, t, h, self.inner, rule, lanczos_m=self.lanczos_m, lanczos_tol=tol)
        if v == "S2":
            return step_S2(u, problem, t, h, self.inner, rule)
        if v == "S3":
            return step_S3(u, problem, t, h, self.inner, rule)
        if v == "MASTBM4":
            return step_MaStBM4(u, problem, t, h, self.inner, rule)
        if v == "TO":
            return step_time_ordered(u, problem, t, h, self.inner)
        return step_theta4_lanczos(u, problem, t, h, self.lanczos_m, rule)

    def ffts_per_step(self, dims: int = 1) -> int:
        """Forward plus inverse d-dimensional FFTs per step (S1 with a fixed Lanczos count)."""
        if self.variant == "LANCZOS":
            return 4 * self.lanczos_m
        n = 2 * self.inner.kinetic_stage_count()
        if self.variant == "S1":
            n += 2 * 4 * self.lanczos_m
        elif self.variant in ("S2", "S3", "MASTBM4") and not self.inner.kinetic_first:
            n += 4
        return n


def parse_scheme(text: str) -> OuterScheme:
    """Parse ``"<variant>+<table>"``; an ``L<m>`` suffix on S1 fixes the Lanczos count."""
    if "+" not in text:
        raise ValueError(f"scheme {text!r} must look like 'S2+OMF76'")
    head, tail = text.split("+", 1)
    variant = head.strip().upper()
    if variant not in VARIANTS:
        raise ValueError(f"unknown scheme variant {head!r}; expected one of {VARIANTS}")
    if variant == "LANCZOS":
        return OuterScheme("LANCZOS", None, lanczos_m=int(tail))
    tail = tail.strip()
    m, fixed = 2, False
    if variant == "S1" and tail.upper().rstrip("0123456789").endswith("L") and tail[-1].isdigit():
        stem = tail.upper().rstrip("0123456789")
        m = int(tail[len(stem):])
        tail = tail[: len(stem) - 1]
        fixed = True
    inner = get_table(tail)
    if variant == "S3" and inner.compact:
        raise ValueError("S3 with a force-gradient inner table defeats its gradient-free purpose")
    if variant in ("TO", "MASTBM4") and inner.compact:
        raise ValueError(f"{variant} takes a classical table, got {inner.name}")
    return OuterScheme(variant, inner, lanczos_m=m, lanczos_fixed=fixed)
