"""Laser fields, Gauss-Legendre rules and the per-step Magnus coefficients.

Over one step ``[t, t+h]`` every time integral of the field that the
sixth-order schemes need is a moment against a rescaled Bernoulli polynomial,

    mu_n(t, h) = int_0^h B_n(h, z) e(t + z) dz,

plus a single doubly nested integral ``I1`` entering the scalar phase ``c``.
All of them are approximated from field samples at the knots of one
quadrature rule, so the field is evaluated ``k`` times per step.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import legendre


class LaserField:
    """Time-dependent vector field ``e(t)`` in ``R^d``.

    Parameters
    ----------
    fn : callable
        Vectorised in ``t``.  Returns an array of shape ``t.shape + (dims,)``,
        or ``t.shape`` when ``dims == 1``.
    dims : int
        Spatial dimension of the field.
    moments : callable, optional
        ``moments(t, h) -> (mu, I1)`` with ``mu`` of shape ``(4, dims)``.
        When given, quadrature is bypassed in :func:`magnus_coefficients`.
    """

    def __init__(self, fn: Callable, dims: int = 1, moments: Optional[Callable] = None, name: str = ""):
        self.fn = fn
        self.dims = int(dims)
        self.moments = moments
        self.name = name

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.fn(t), dtype=float)
        if out.shape == t.shape:
            if self.dims != 1:
                raise ValueError("scalar field output for a multi-dimensional field")
            out = out[..., None]
        return np.broadcast_to(out, t.shape + (self.dims,))

    @classmethod
    def polarized(cls, scalar_fn: Callable, direction, name: str = "") -> "LaserField":
        """Linearly polarised field ``scalar_fn(t) * direction``."""
        direction = np.atleast_1d(np.asarray(direction, dtype=float))

        def fn(t):
            return np.asarray(scalar_fn(t), dtype=float)[..., None] * direction

        return cls(fn, dims=direction.size, name=name)

    @classmethod
    def zero(cls, dims: int = 1) -> "LaserField":
        return cls(lambda t: np.zeros(np.shape(t) + (dims,)), dims=dims, name="zero")

    @classmethod
    def constant(cls, value) -> "LaserField":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(lambda t: np.broadcast_to(value, np.shape(t) + value.shape), dims=value.size, name="constant")


class TabulatedField(LaserField):
    """Field known only on an equispaced time grid.

    Values between samples come from local Lagrange interpolation of
    ``degree`` on the ``degree + 1`` nearest samples.  Outside the table the
    end stencils are extrapolated.
    """

    def __init__(self, times, values, degree: int = 5, name: str = "tabulated"):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or values.shape[0] != times.size:
            raise ValueError("times and values must have the same number of rows")
        steps = np.diff(times)
        if times.size < 2 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ValueError("tabulated field times must be equispaced")
        if times.size < degree + 1:
            raise ValueError(f"need at least {degree + 1} samples for degree {degree}")
        self.times = times
        self.values = values
        self.degree = int(degree)
        self.dt = float(steps[0])
        super().__init__(self._interp, dims=values.shape[1], name=name)

    def _interp(self, t):
        t = np.asarray(t, dtype=float)
        n, deg = self.times.size, self.degree
        pos = (t - self.times[0]) / self.dt
        start = np.clip(np.floor(pos).astype(int) - deg // 2, 0, n - deg - 1)
        s = pos - start
        out = np.zeros(t.shape + (self.dims,))
        for j in range(deg + 1):
            lj = np.ones_like(s)
            for m in range(deg + 1):
                if m != j:
                    lj = lj * (s - m) / (j - m)
            out += lj[..., None] * self.values[start + j]
        return out

    @classmethod
    def from_file(cls, path, degree: int = 5) -> "TabulatedField":
        """Load ``(t, e_1, ..., e_d)`` columns from a whitespace-separated text file."""
        data = np.loadtxt(path, ndmin=2)
        if data.shape[1] < 2:
            raise ValueError(f"{path}: need a time column and at least one field column")
        return cls(data[:, 0], data[:, 1:], degree=degree, name=str(path))


@dataclass(frozen=True)
class QuadratureRule:
    """Knots and weights on ``[0, h]`` plus nested weights for ``int_0^z``."""

    h: float
    knots: np.ndarray
    weights: np.ndarray
    nested: np.ndarray

    @property
    def size(self) -> int:
        return self.knots.size

    def rescaled(self, h: float) -> "QuadratureRule":
        if h == self.h:
            return self
        f = h / self.h
        return QuadratureRule(h, self.knots * f, self.weights * f, self.nested * f * f)


def _lagrange_basis(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``out[q, j] = l_j(x_q)`` for the Lagrange basis on ``nodes``."""
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    denom = diff.prod(axis=1)
    out = np.empty((x.size, nodes.size))
    for j in range(nodes.size):
        others = np.delete(nodes, j)
        out[:, j] = np.prod(x[:, None] - others[None, :], axis=1) / denom[j]
    return out


def gauss_legendre(k: int, h: float = 1.0) -> QuadratureRule:
    """``k``-point Gauss-Legendre rule on ``[0, h]`` with nested weights.

    ``nested[i, j]`` approximates ``int_0^h l_i(z) int_0^z l_j(x) dx dz``.
    Because the outer integrand is a polynomial of degree ``2k - 1`` this
    equals ``weights[i] * int_0^{knots[i]} l_j``; the inner integral is done
    with a ``(k + 4)``-point rule.
    """
    if k < 1:
        raise ValueError("need at least one knot")
    x, w = legendre.leggauss(k)
    knots = 0.5 * h * (x + 1.0)
    weights = 0.5 * h * w
    xi, wi = legendre.leggauss(k + 4)
    nested = np.empty((k, k))
    for i, z in enumerate(knots):
        inner_x = 0.5 * z * (xi + 1.0)
        basis = _lagrange_basis(knots, inner_x)
        nested[i] = weights[i] * (0.5 * z * wi) @ basis
    return QuadratureRule(float(h), knots, weights, nested)


@lru_cache(maxsize=32)
def _unit_rule(k: int) -> QuadratureRule:
    return gauss_legendre(k, 1.0)


def _as_rule(rule, h: float) -> QuadratureRule:
    if rule is None:
        rule = 3
    if isinstance(rule, (int, np.integer)):
        return _unit_rule(int(rule)).rescaled(h)
    return rule.rescaled(h)


def bernoulli_rescaled(n: int, h, z):
    """Rescaled Bernoulli polynomial ``h**n * B_n(z / h)`` for ``n <= 3``."""
    z = np.asarray(z, dtype=float)
    if n == 0:
        return np.ones_like(z)
    if n == 1:
        return z - 0.5 * h
    if n == 2:
        return z * z - h * z + h * h / 6.0
    if n == 3:
        return z**3 - 1.5 * h * z * z + 0.5 * h * h * z
    raise ValueError(f"rescaled Bernoulli polynomial of degree {n} not supported")


def mu(n: int, field: LaserField, t: float, h: float, rule=None) -> np.ndarray:
    """Quadrature approximation of ``int_0^h B_n(h, z) e(t + z) dz``."""
    rule = _as_rule(rule, h)
    samples = field(t + rule.knots)
    return (rule.weights * bernoulli_rescaled(n, h, rule.knots)) @ samples


@dataclass(frozen=True)
class MagnusCoefficients:
    """Everything one step of the sixth-order schemes needs from the field.

    ``r, s, q, p`` are the scaled moments ``mu_0 / h, 2 mu_1, mu_2, mu_3 / 3``;
    ``s_tilde = s - 12 p / h**2`` and ``c_tilde = c - i q.r / eps``.
    """

    t: float
    h: float
    eps: float
    r: np.ndarray
    s: np.ndarray
    q: np.ndarray
    p: np.ndarray
    c: complex
    s_tilde: np.ndarray
    c_tilde: complex

    @classmethod
    def from_moments(cls, t, h, eps, mus, I1) -> "MagnusCoefficients":
        mus = np.asarray(mus, dtype=float)
        r = mus[0] / h
        s = 2.0 * mus[1]
        q = mus[2].copy()
        p = mus[3] / 3.0
        int_e = mus[0]
        int_ze = mus[1] + 0.5 * h * mus[0]
        c = 1j / eps * (2.0 * I1 - int_e @ int_ze - h / 6.0 * (int_e @ int_e))
        return cls(
            t=t, h=h, eps=eps, r=r, s=s, q=q, p=p, c=complex(c),
            s_tilde=s - 12.0 * p / h**2,
            c_tilde=complex(c - 1j / eps * (q @ r)),
        )

    @classmethod
    def zero(cls, dims: int, t: float, h: float, eps: float) -> "MagnusCoefficients":
        return cls.from_moments(t, h, eps, np.zeros((4, dims)), 0.0)


def field_moments(field: LaserField, t: float, h: float, rule=None):
    """Return ``(mu, I1)``: the four Bernoulli moments and the nested integral."""
    if field.moments is not None:
        mus, I1 = field.moments(t, h)
        return np.asarray(mus, dtype=float), float(I1)
    rule = _as_rule(rule, h)
    z = rule.knots
    e = field(t + z)
    mus = np.stack([(rule.weights * bernoulli_rescaled(n, h, z)) @ e for n in range(4)])
    I1 = float(np.einsum("ij,i,id,jd->", rule.nested, z, e, e))
    return mus, I1


def magnus_coefficients(field: LaserField, t: float, h: float, eps: float, rule=None) -> MagnusCoefficients:
    if not (eps > 0 and h > 0):
        raise ValueError("need eps > 0 and h > 0")
    mus, I1 = field_moments(field, t, h, rule)
    return MagnusCoefficients.from_moments(t, h, eps, mus, I1)


def p_parts(field: LaserField, t: float, h: float, rule=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three pieces of ``p`` from the fourth-grade Magnus terms, separately.

    Their sum must reproduce ``mu_3 / 3``.
    """
    rule = _as_rule(rule, h)
    z = rule.knots
    e = field(t + z)
    w = rule.weights
    p1 = (w * (2 * z**3 - 3 * h * h * z + h**3) / 36.0) @ e
    p2 = (w * (8 * z**3 - 9 * h * z * z + h**3) / 72.0) @ e
    p3 = (w * (4 * z**3 - 9 * h * z * z + 6 * h * h * z - h**3) / 24.0) @ e
    return p1, p2, p3


def scalar_phase_parts(field: LaserField, t: float, h: float, eps: float, k: int = 16) -> tuple[complex, complex]:
    """``(c31, c32)`` from the auxiliary nested integrals ``I1, I2, I3``.

    ``c31 = i (I1 - I2) / (6 eps)`` and ``c32 = i (I1 - 2 I3) / (2 eps)``,
    with every nested integral evaluated by an outer ``k``-point rule and an
    inner ``k``-point rule on ``[0, z_i]``.  This route does not share any
    intermediate with :func:`magnus_coefficients`.
    """
    x, w = legendre.leggauss(k)
    z = 0.5 * h * (x + 1.0)
    wz = 0.5 * h * w
    e_out = field(t + z)
    I1 = I2 = I3 = 0.0
    for i in range(k):
        xi = 0.5 * z[i] * (x + 1.0)
        wxi = 0.5 * z[i] * w
        e_in = field(t + xi)
        int_e = wxi @ e_in
        int_xe = (wxi * xi) @ e_in
        I1 += wz[i] * z[i] * (e_out[i] @ int_e)
        I2 += wz[i] * (int_e @ int_e)
        I3 += wz[i] * (e_out[i] @ int_xe)
    c31 = 1j / eps * (I1 - I2) / 6.0
    c32 = 1j / eps * (I1 - 2.0 * I3) / 2.0
    return complex(c31), complex(c32)
