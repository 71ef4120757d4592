"""Polynomial Nemytskii drifts, dissipativity constants and Yosida regularisation.

A drift acts pointwise on grid values,

    F(x)(xi) = b(xi, x(xi)) + g(max_{s <= xi} |x(s)|),

where ``b(xi, .)`` is a polynomial of odd degree with negative leading
coefficient (stored as ascending coefficients ``a_0 .. a_{2m+1}``, so
``a_{2m+1} = -C_{2m+1} < 0``) and the optional running-max term ``g`` is
Lipschitz (one space dimension only).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

__all__ = [
    "MaxTerm",
    "DriftSpec",
    "YosidaParams",
    "YosidaError",
    "make_drift",
    "eval_drift",
    "drift_derivative",
    "dissipativity_constant",
    "yosida_resolvent",
    "yosida_drift",
    "grid_inner",
    "grid_h_norm",
    "h_dissipativity_gap",
    "e_dissipativity_gap",
    "weak_continuity_terms",
    "perturbation_ratio",
]


class YosidaError(RuntimeError):
    """Resolvent iteration failed to reach tolerance."""


def _scaled_sine(scale, r):
    return scale * np.sin(r)


@dataclass(frozen=True, eq=False)
class MaxTerm:
    """``g(max_{s in [0, xi]} |x(s)|)`` with ``g`` Lipschitz of constant ``lipschitz``."""

    func: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    name: str = "custom"

    @classmethod
    def linear(cls, scale: float = 1.0) -> "MaxTerm":
        return cls(partial(np.multiply, scale), abs(scale), f"linear:{scale:g}")

    @classmethod
    def sine(cls, scale: float = 1.0) -> "MaxTerm":
        return cls(partial(_scaled_sine, scale), abs(scale), f"sin:{scale:g}")

    def __call__(self, values: np.ndarray) -> np.ndarray:
        running = np.maximum.accumulate(np.abs(values), axis=-1)
        return self.func(running)


@dataclass(frozen=True, eq=False)
class DriftSpec:
    """Nemytskii drift with its certified dissipativity shift ``zeta_F``.

    Parameters
    ----------
    coeffs : array_like
        Ascending polynomial coefficients of ``b``. Shape ``(deg + 1,)`` for
        space-independent coefficients or ``(deg + 1, *grid_shape)``.
    max_term : MaxTerm, optional
        Running-max term; only meaningful in one dimension with the sup norm.
    fixed_point : array_like, optional
        Grid function ``x_0`` with ``F(x_0) = zeta_F x_0``.
    """

    coeffs: np.ndarray
    max_term: MaxTerm | None = None
    fixed_point: np.ndarray | None = None
    zeta_F: float = field(init=False)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        # strip identically-zero top rows
        while c.shape[0] > 1 and not np.any(c[-1]):
            c = c[:-1]
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.is_zero_polynomial:
            zeta = 0.0
        else:
            degree = c.shape[0] - 1
            if degree % 2 == 0:
                raise ValueError(f"leading term must have odd degree, got degree {degree}")
            if np.any(c[-1] >= 0):
                raise ValueError("leading coefficient must be strictly negative everywhere")
            zeta = _max_derivative(c)
        if self.max_term is not None:
            zeta += self.max_term.lipschitz
        object.__setattr__(self, "zeta_F", float(zeta))

    @property
    def is_zero_polynomial(self) -> bool:
        return self.coeffs.shape[0] == 1 and not np.any(self.coeffs)

    @property
    def degree(self) -> int:
        return 0 if self.is_zero_polynomial else self.coeffs.shape[0] - 1


def make_drift(coeffs, max_term: MaxTerm | None = None, fixed_point=None) -> DriftSpec:
    return DriftSpec(np.asarray(coeffs, dtype=float), max_term, fixed_point)


def _horner(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x) + coeffs[-1]
    for c in coeffs[-2::-1]:
        out = out * x + c
    return out


def _derivative_coeffs(coeffs: np.ndarray) -> np.ndarray:
    if coeffs.shape[0] == 1:
        return np.zeros_like(coeffs)
    k = np.arange(1, coeffs.shape[0]).reshape((-1,) + (1,) * (coeffs.ndim - 1))
    return coeffs[1:] * k


def _max_derivative(coeffs: np.ndarray) -> float:
    """Global maximum over ``s`` and grid points of ``d b / d s`` via exact critical points."""
    d1 = _derivative_coeffs(coeffs)
    d2 = _derivative_coeffs(d1)
    columns = d1.reshape(d1.shape[0], -1).T
    seconds = d2.reshape(d2.shape[0], -1).T
    best = -np.inf
    seen: dict[bytes, float] = {}
    for col, sec in zip(columns, seconds):
        key = col.tobytes()
        if key not in seen:
            seen[key] = _column_max(col, sec)
        best = max(best, seen[key])
    return float(best)


def _column_max(d1: np.ndarray, d2: np.ndarray) -> float:
    if d1.size == 1:
        return float(d1[0])
    roots = np.roots(d2[::-1]) if np.any(d2) else np.zeros(0)
    real = roots[np.abs(roots.imag) <= 1e-9 * (1.0 + np.abs(roots))].real
    if real.size == 0:
        # even-degree derivative with negative leading term always has a real critical point
        raise ArithmeticError("no real critical point found for the drift derivative")
    # one Newton polish on b'' for accuracy
    d3 = _derivative_coeffs(d2)
    if d3.size and np.any(d3):
        denom = _horner(d3, real)
        real = np.where(denom != 0, real - _horner(d2, real) / np.where(denom != 0, denom, 1), real)
    return float(np.max(_horner(d1, real)))


def eval_drift(F: DriftSpec, x: np.ndarray) -> np.ndarray:
    """Pointwise polynomial evaluation plus the running-max term (left to right on the last axis)."""
    x = np.asarray(x, dtype=float)
    out = _horner(F.coeffs, x)
    if F.max_term is not None:
        out = out + F.max_term(x)
    return out


def drift_derivative(F: DriftSpec, x: np.ndarray) -> np.ndarray:
    """``d b / d s`` at ``x`` (polynomial part only)."""
    return _horner(_derivative_coeffs(F.coeffs), np.asarray(x, dtype=float))


def dissipativity_constant(F: DriftSpec) -> float:
    return F.zeta_F


@dataclass(frozen=True)
class YosidaParams:
    delta: float
    newton_tol: float = 1e-12
    newton_max_iters: int = 100

    def check_admissible(self, F: DriftSpec) -> None:
        if not self.delta > 0:
            raise ValueError("Yosida delta must be positive")
        if F.zeta_F != 0 and not self.delta < 1.0 / abs(F.zeta_F):
            raise ValueError(
                f"Yosida delta={self.delta} outside (0, 1/|zeta_F|) with zeta_F={F.zeta_F}"
            )


def _pointwise_resolvent(coeffs, zeta, delta, rhs, tol, max_iters):
    """Solve ``(1 + delta zeta) s - delta b(s) = rhs`` pointwise.

    The left side has slope at least 1, so the root lies within ``|psi(rhs)|``
    of ``rhs``; Newton steps leaving that bracket are replaced by bisection.
    """
    d1 = _derivative_coeffs(coeffs)
    a = 1.0 + delta * zeta

    def psi(s):
        return a * s - delta * _horner(coeffs, s) - rhs

    r0 = psi(rhs)
    lo = np.where(r0 > 0, rhs - r0, rhs)
    hi = np.where(r0 > 0, rhs, rhs - r0)
    s = rhs.copy()
    r = r0
    scale = np.maximum(1.0, np.abs(rhs))
    for _ in range(max_iters):
        if np.all(np.abs(r) <= tol * scale):
            return s
        slope = a - delta * _horner(d1, s)
        trial = s - r / slope
        outside = ~((trial > lo) & (trial < hi))
        s = np.where(outside, 0.5 * (lo + hi), trial)
        r = psi(s)
        lo = np.where(r < 0, s, lo)
        hi = np.where(r > 0, s, hi)
        # bracket collapsed to adjacent floats: accept
        done = hi - lo <= 4 * np.spacing(np.maximum(np.abs(lo), np.abs(hi)))
        r = np.where(done, 0.0, r)
    if np.all(np.abs(r) <= tol * scale):
        return s
    raise YosidaError(f"pointwise resolvent did not converge in {max_iters} iterations")


def yosida_resolvent(F: DriftSpec, params: YosidaParams, x: np.ndarray) -> np.ndarray:
    """``J_delta(x)``: the unique solution of ``J - delta (F(J) - zeta_F J) = x``.

    Residual is measured relative to ``max(1, |x|)`` pointwise. With a
    running-max term the coupling between grid points is resolved by Picard
    iteration, which contracts in the sup norm with factor
    ``delta L / (1 + delta L)``.
    """
    params.check_admissible(F)
    x = np.asarray(x, dtype=float)
    delta, zeta = params.delta, F.zeta_F
    if F.is_zero_polynomial and F.max_term is None:
        return x / (1.0 + delta * zeta)
    if F.max_term is None:
        return _pointwise_resolvent(F.coeffs, zeta, delta, x, params.newton_tol,
                                    params.newton_max_iters)
    j = x.copy()
    scale = np.maximum(1.0, np.max(np.abs(x)))
    for _ in range(params.newton_max_iters):
        rhs = x + delta * F.max_term(j)
        nxt = _pointwise_resolvent(F.coeffs, zeta, delta, rhs, params.newton_tol,
                                   params.newton_max_iters)
        change = np.max(np.abs(nxt - j))
        j = nxt
        if change <= params.newton_tol * scale:
            return j
    raise YosidaError("running-max resolvent did not converge")


def yosida_drift(F: DriftSpec, params: YosidaParams, x: np.ndarray) -> np.ndarray:
    """``F_delta(x) = F(J_delta(x))``."""
    return eval_drift(F, yosida_resolvent(F, params, x))


# --- grid inner products and hypothesis probes ----------------------------------


def grid_inner(a: np.ndarray, b: np.ndarray, dim: int) -> np.ndarray:
    """Quadrature inner product of ``L^2`` on the trailing ``dim`` axes."""
    vol = float(a.shape[-1] + 1) ** (-dim)
    return vol * np.sum(a * b, axis=tuple(range(-dim, 0)))


def grid_h_norm(a: np.ndarray, dim: int) -> np.ndarray:
    return np.sqrt(grid_inner(a, a, dim))


def h_dissipativity_gap(F: DriftSpec, x, y, dim: int, drift=None) -> float:
    """``<F(x) - F(y), x - y>_H - zeta_F |x - y|_H^2`` (nonpositive when dissipative)."""
    f = drift or (lambda v: eval_drift(F, v))
    d = x - y
    return float(grid_inner(f(x) - f(y), d, dim) - F.zeta_F * grid_inner(d, d, dim))


def e_dissipativity_gap(F: DriftSpec, x, y, space, dim: int, drift=None) -> float:
    """Banach-space analogue of :func:`h_dissipativity_gap` using a norming functional of ``x - y``.

    Sup norm: the point evaluation at the maximiser of ``|x - y|``. ``L^p``:
    the duality pairing with ``|d|^{p-2} d``.
    """
    f = drift or (lambda v: eval_drift(F, v))
    d = x - y
    df = f(x) - f(y)
    p = getattr(space, "p", None)
    if p is None:
        flat = np.argmax(np.abs(d))
        dstar = d.flat[flat]
        return float(np.sign(dstar) * df.flat[flat] - F.zeta_F * abs(dstar))
    w = np.abs(d) ** (p - 2) * d
    return float(grid_inner(df, w, dim) - F.zeta_F * grid_inner(np.abs(d) ** p, np.ones_like(d), dim))


def weak_continuity_terms(xn, x, h, p: int, dim: int) -> tuple[float, float]:
    """Both sides of ``|<F(x_n) - F(x), h>| <= p |x - x_n|_H |h|_E (|x_n|_E^{p-1} + |x|_E^{p-1})``.

    For ``F(s) = -s^p`` with ``E = L^{2p}``; the constant ``p`` comes from
    the mean-value bound and the two Holder steps are exact for quadrature
    sums.
    """
    vol = float(x.shape[-1] + 1) ** (-dim)

    def lq(v, q):
        return float((vol * np.sum(np.abs(v) ** q)) ** (1.0 / q))

    lhs = abs(float(grid_inner(-(xn**p) + x**p, h, dim)))
    rhs = p * lq(x - xn, 2) * lq(h, 2 * p) * (lq(xn, 2 * p) ** (p - 1) + lq(x, 2 * p) ** (p - 1))
    return lhs, rhs


def perturbation_ratio(F: DriftSpec, delta: float, tau: float, x, y, dim: int) -> float:
    """Smallest ``B`` making the mixed-parameter resolvent perturbation bound hold for this pair."""
    fd = yosida_drift(F, YosidaParams(delta), x)
    ft = yosida_drift(F, YosidaParams(tau), y)
    d = x - y
    excess = float(grid_inner(fd - ft, d, dim) - F.zeta_F * grid_inner(d, d, dim))
    fx, fy = eval_drift(F, x), eval_drift(F, y)
    mass = float(sum(grid_inner(v, v, dim) for v in (fx, fy, x, y)))
    if mass == 0:
        return 0.0
    return max(excess, 0.0) / ((delta + tau) * mass)
