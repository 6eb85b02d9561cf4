"""The simplified sixth-order Magnus exponent and Krylov exponentiation.

For the dipole Hamiltonian the sixth-order Magnus exponent over one step
collapses to

    Theta = i h eps Lap - i h/eps (V0 + r.x) - s.grad + i/eps q.grad(V0)
            + [Lap, p.grad(V0)] + c

with a single commutator.  Its action on a grid function costs a handful of
FFTs, so ``exp(Theta) u`` can be formed by Lanczos iterations.  The same
Lanczos routine exponentiates the small commutator term inside the
Strang-type scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .field import MagnusCoefficients
from .spectral import SpectralGrid, WaveFunction, fftn, ifftn, laplacian


def commutator_matvec(grid: SpectralGrid, f: np.ndarray, u):
    """``Lap(f u) - f Lap(u)``; ``u`` may be a WaveFunction or a raw array."""
    values = u.values if isinstance(u, WaveFunction) else u
    out = laplacian(grid, f * values) - f * laplacian(grid, values)
    return WaveFunction(grid, out) if isinstance(u, WaveFunction) else out


@dataclass
class MagnusOperator:
    """Theta for one step, frozen at its Magnus coefficients.

    ``coupling`` holds the position functions multiplying the field, one per
    axis and broadcastable to the grid (plain coordinates unless an absorber
    flattens them).  ``potential`` may be complex when it carries an
    absorbing term; the operator is then no longer skew-Hermitian.
    """

    grid: SpectralGrid
    coeffs: MagnusCoefficients
    potential: np.ndarray
    grad_potential: Optional[Sequence[np.ndarray]]
    eps: float
    coupling: Optional[Sequence[np.ndarray]] = None
    _cache: dict = dc_field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.coupling is None:
            self.coupling = [self.grid.axis_view(x, ax) for ax, x in enumerate(self.grid.coords)]

    def _require_grad(self):
        if self.grad_potential is None:
            raise ValueError("this operator needs the gradient of the potential")
        return self.grad_potential

    def p_force(self) -> np.ndarray:
        """``p . grad(V0)`` on the grid, the multiplier inside the commutator."""
        if "pf" not in self._cache:
            grad = self._require_grad()
            self._cache["pf"] = sum(pk * g for pk, g in zip(self.coeffs.p, grad)) + np.zeros(self.grid.shape)
        return self._cache["pf"]

    def pointwise(self, with_c: bool = True) -> np.ndarray:
        """Multiplicative part ``-i h/eps Vtilde + i/eps q.grad(V0) (+ c)``."""
        key = ("pw", with_c)
        if key not in self._cache:
            co, h, eps = self.coeffs, self.coeffs.h, self.eps
            vt = self.potential + sum(rk * x for rk, x in zip(co.r, self.coupling))
            out = -1j * h / eps * vt
            if np.any(co.q != 0.0):
                grad = self._require_grad()
                out = out + 1j / eps * sum(qk * g for qk, g in zip(co.q, grad))
            if with_c:
                out = out + co.c
            self._cache[key] = np.broadcast_to(out, self.grid.shape)
        return self._cache[key]

    def kinetic_symbol(self) -> np.ndarray:
        if "ks" not in self._cache:
            g, co = self.grid, self.coeffs
            sym = 1j * co.h * self.eps * g.laplacian_symbol()
            for ax in range(g.dims):
                sym = sym - co.s[ax] * g.axis_view(g.c1[ax], ax)
            self._cache["ks"] = sym
        return self._cache["ks"]

    def matvec(self, values: np.ndarray, with_c: bool = True) -> np.ndarray:
        out = ifftn(fftn(values) * self.kinetic_symbol()) + self.pointwise(with_c) * values
        if np.any(self.coeffs.p != 0.0):
            out = out + commutator_matvec(self.grid, self.p_force(), values)
        return out

    def dense(self, with_c: bool = True) -> np.ndarray:
        n = self.grid.size
        eye = np.eye(n, dtype=complex).reshape((n,) + self.grid.shape)
        return np.stack([self.matvec(col, with_c).ravel() for col in eye], axis=1)


def apply_theta4(op: MagnusOperator, u: WaveFunction) -> WaveFunction:
    return WaveFunction(u.grid, op.matvec(u.values))


@dataclass
class LanczosWorkspace:
    """Preallocated storage for up to ``m_max`` Lanczos vectors."""

    m_max: int
    n: int
    basis: np.ndarray = dc_field(init=False, repr=False)
    alpha: np.ndarray = dc_field(init=False, repr=False)
    beta: np.ndarray = dc_field(init=False, repr=False)
    iterations: int = 0

    def __post_init__(self):
        self.basis = np.empty((self.m_max + 1, self.n), dtype=complex)
        self.alpha = np.empty(self.m_max)
        self.beta = np.empty(self.m_max)


REORTH_THRESHOLD = 1e-8


def lanczos_expm(
    matvec: Callable[[np.ndarray], np.ndarray],
    v,
    m: int,
    dt_scale: complex = 1.0,
    tol: Optional[float] = None,
    workspace: Optional[LanczosWorkspace] = None,
    min_iter: int = 1,
):
    """Krylov approximation of ``exp(dt_scale * A) v`` for skew-Hermitian ``A``.

    Lanczos is run on the Hermitian operator ``-i A``, so the projected
    matrix is real symmetric tridiagonal and is exponentiated through its
    eigendecomposition.  Iteration stops after ``m`` steps, on breakdown
    (invariant subspace found), or, when ``tol`` is given, once the standard
    residual estimate ``|beta_j [exp(i dt T_j) e1]_j| * ||v||`` drops below
    ``tol`` (but never before ``min_iter`` iterations).

    Returns the same type as ``v`` (WaveFunction or array).
    """
    if m < 1:
        raise ValueError("need at least one Lanczos iteration")
    is_wf = isinstance(v, WaveFunction)
    values = v.values if is_wf else np.asarray(v, dtype=complex)
    shape = values.shape
    x0 = values.ravel()
    beta0 = np.linalg.norm(x0)
    if beta0 == 0.0:
        out = np.zeros_like(values)
        return WaveFunction(v.grid, out) if is_wf else out

    n = x0.size
    ws = workspace if workspace is not None and workspace.m_max >= m and workspace.n == n else LanczosWorkspace(m, n)
    V, alpha, beta = ws.basis, ws.alpha, ws.beta
    V[0] = x0 / beta0
    scale = abs(dt_scale)
    small = None
    j = 0
    while True:
        w = -1j * matvec(V[j].reshape(shape)).ravel()
        alpha[j] = np.vdot(V[j], w).real
        w -= alpha[j] * V[j]
        if j > 0:
            w -= beta[j - 1] * V[j - 1]
        wn = np.linalg.norm(w)
        overlaps = V[: j + 1].conj() @ w
        if np.max(np.abs(overlaps)) > REORTH_THRESHOLD * max(wn, 1e-300):
            w -= overlaps @ V[: j + 1]
            w -= (V[: j + 1].conj() @ w) @ V[: j + 1]
            wn = np.linalg.norm(w)
        beta[j] = wn
        k = j + 1

        lam, Q = eigh_tridiagonal(alpha[:k], beta[: k - 1]) if k > 1 else (alpha[:1], np.ones((1, 1)))
        small = Q @ (np.exp(1j * dt_scale * lam) * Q[0])

        breakdown = wn <= 1e-13 * max(1.0, np.abs(alpha[:k]).max(), beta[: k - 1].max() if k > 1 else 0.0)
        converged = tol is not None and k >= min_iter and beta0 * wn * scale * abs(small[-1]) < tol
        if breakdown or converged or k >= m:
            break
        V[k] = w / wn
        j = k

    ws.iterations = k
    out = (beta0 * (small @ V[:k])).reshape(shape)
    return WaveFunction(v.grid, out) if is_wf else out


def theta4_lanczos_step(op: MagnusOperator, u: WaveFunction, m: int = 40, tol: Optional[float] = None) -> WaveFunction:
    """Whole-exponent propagator ``exp(c) * exp(Theta - c) u`` via Lanczos."""
    out = lanczos_expm(lambda x: op.matvec(x, with_c=False), u.values, m, tol=tol)
    return WaveFunction(u.grid, np.exp(op.coeffs.c) * out)


def power_norm(matvec: Callable[[np.ndarray], np.ndarray], shape, iters: int = 200, seed: int = 0, rtol: float = 1e-10) -> float:
    """Estimate ``||A||_2`` by power iteration on ``A^* A = -A^2`` (skew-Hermitian ``A``)."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = -matvec(matvec(x))
        new = np.sqrt(abs(np.vdot(x, y)))
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if abs(new - est) <= rtol * new:
            return float(new)
        est = new
    return float(est)
