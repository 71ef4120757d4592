"""Diagonal representation of the Dirichlet Laplacian on the unit cube.

States live in two representations. Spectral coefficients are indexed by the
multi-index ``n in {1..N}^d`` (array shape ``(N,)*d``, mode ``n`` stored at
position ``n - 1``). Grid values live on the interior tensor grid
``xi_j = j / (N + 1)``. The transform pair is the type-I discrete sine
transform scaled so that

    grid value = sum_n c_n * 2^{d/2} * prod_i sin(n_i pi xi_i)

is exact, and the coefficient l2 norm equals the grid-quadrature L2 norm with
cell volume ``(N + 1)^-d`` (normalisation constant 1).

All transforms act on the trailing ``d`` axes so leading batch axes are
carried through untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import fft as _fft

__all__ = [
    "SpectralOperator",
    "ContinuousSup",
    "LpGrid",
    "GridFunction",
    "build_dirichlet_operator",
    "frac_norm",
    "semigroup_apply",
    "smoothing_constant_probe",
    "smoothing_sup",
    "to_spectral",
    "from_spectral",
    "space_norm",
    "phi1",
]


@dataclass(frozen=True, eq=False)
class SpectralOperator:
    """Truncated Dirichlet Laplacian ``A`` on ``[0, 1]^d``.

    Parameters
    ----------
    dim : int
        Spatial dimension, one of 1, 2, 3.
    n_modes : int
        Modes per axis ``N``; the grid has ``N`` interior points per axis.
    color_exponent : float
        Exponent ``delta_R`` of the Wiener colouring ``R = (-A)^delta_R``.
    """

    dim: int
    n_modes: int
    color_exponent: float = 0.0
    eigenvalues: np.ndarray = field(init=False, repr=False)
    mode_numbers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n_modes < 1:
            raise ValueError(f"n_modes must be positive, got {self.n_modes}")
        axes = np.meshgrid(*[np.arange(1, self.n_modes + 1)] * self.dim, indexing="ij")
        squares = sum(a.astype(float) ** 2 for a in axes)
        lam = np.pi**2 * squares
        lam.setflags(write=False)
        radius = np.sqrt(squares)
        radius.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        # |n| = sqrt(sum n_i^2); equals n in one dimension
        object.__setattr__(self, "mode_numbers", radius)

    # ``A - zeta_A I`` is dissipative with zeta_A = 0 for the negative Laplacian.
    zeta_A = 0.0

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_modes,) * self.dim

    @property
    def size(self) -> int:
        return self.n_modes**self.dim

    @property
    def cell_volume(self) -> float:
        return float(self.n_modes + 1) ** (-self.dim)

    @property
    def lambda_min(self) -> float:
        return float(np.pi**2 * self.dim)

    def grid(self) -> tuple[np.ndarray, ...]:
        """Tensor grid coordinates, one array per axis (``indexing='ij'``)."""
        xi = np.arange(1, self.n_modes + 1) / (self.n_modes + 1)
        return tuple(np.meshgrid(*[xi] * self.dim, indexing="ij"))

    def eigenfunction(self, index: Sequence[int]) -> np.ndarray:
        """Grid samples of ``e_n`` for the 1-based multi-index ``index``."""
        if len(index) != self.dim:
            raise ValueError("multi-index length must equal dim")
        out = np.ones(self.shape)
        for n_i, xi in zip(index, self.grid()):
            out = out * np.sqrt(2.0) * np.sin(n_i * np.pi * xi)
        return out

    def unit_mode(self, index: Sequence[int]) -> np.ndarray:
        v = np.zeros(self.shape)
        v[tuple(i - 1 for i in index)] = 1.0
        return v

    def semigroup_factors(self, t: float) -> np.ndarray:
        return np.exp(-self.eigenvalues * t)

    def wiener_coloring(self) -> np.ndarray:
        """Diagonal of ``R = (-A)^delta_R``."""
        return self.eigenvalues**self.color_exponent


@dataclass(frozen=True)
class ContinuousSup:
    """``E = C(O-bar)`` realised as the sup norm over grid points."""

    def norm(self, values: np.ndarray, cell_volume: float, dim: int) -> np.ndarray:
        axes = tuple(range(-dim, 0))
        return np.max(np.abs(values), axis=axes)

    def __str__(self) -> str:
        return "sup"


@dataclass(frozen=True)
class LpGrid:
    """``E = L^p`` with grid quadrature, ``p >= 2``."""

    p: float

    def __post_init__(self):
        if not self.p >= 2:
            raise ValueError(f"LpGrid requires p >= 2, got {self.p}")

    def norm(self, values: np.ndarray, cell_volume: float, dim: int) -> np.ndarray:
        axes = tuple(range(-dim, 0))
        return (cell_volume * np.sum(np.abs(values) ** self.p, axis=axes)) ** (1.0 / self.p)

    def __str__(self) -> str:
        return f"lp:{self.p:g}"


@dataclass(frozen=True, eq=False)
class GridFunction:
    values: np.ndarray
    space: ContinuousSup | LpGrid = ContinuousSup()

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def n_modes(self) -> int:
        return self.values.shape[0]

    def norm(self) -> float:
        return space_norm(self)


def build_dirichlet_operator(d: int, n: int, delta_r: float = 0.0) -> SpectralOperator:
    """Dirichlet Laplacian with spectrum ``pi^2 |n|^2`` truncated to ``n`` modes per axis."""
    return SpectralOperator(dim=d, n_modes=n, color_exponent=delta_r)


def _check_shape(v: np.ndarray, op: SpectralOperator) -> None:
    if v.shape[v.ndim - op.dim:] != op.shape or v.ndim < op.dim:
        raise ValueError(f"array of shape {v.shape} does not match truncation {op.shape}")


def _mode_axes(op: SpectralOperator) -> tuple[int, ...]:
    return tuple(range(-op.dim, 0))


def frac_norm(v: np.ndarray, rho: float, op: SpectralOperator) -> np.ndarray:
    """``|(-A)^rho v|_H`` of spectral coefficients ``v``."""
    if rho < 0:
        raise ValueError("fractional index must be nonnegative")
    v = np.asarray(v, dtype=float)
    _check_shape(v, op)
    weights = op.eigenvalues ** (2.0 * rho)
    return np.sqrt(np.sum(weights * v * v, axis=_mode_axes(op)))


def semigroup_apply(t: float, v: np.ndarray, op: SpectralOperator) -> np.ndarray:
    if t < 0:
        raise ValueError(f"semigroup time must be nonnegative, got {t}")
    v = np.asarray(v, dtype=float)
    _check_shape(v, op)
    return op.semigroup_factors(t) * v


def smoothing_sup(exponent: float) -> float:
    """``sup_{u > 0} u^r e^{-u}``, attained at ``u = r`` (value 1 for ``r = 0``)."""
    if exponent == 0:
        return 1.0
    return float(exponent**exponent * np.exp(-exponent))


def smoothing_constant_probe(
    op: SpectralOperator, rho1: float, rho2: float, t_grid: Sequence[float]
) -> float:
    """Empirical bound for the analytic smoothing constant ``C_{rho1, rho2}``.

    Returns ``max (t lambda_n)^{rho2 - rho1} exp(-t lambda_n)`` over the
    supplied times and all stored eigenvalues.
    """
    if rho2 < rho1:
        raise ValueError("smoothing probe requires rho2 >= rho1")
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0 or np.any(t <= 0):
        raise ValueError("t_grid must be a nonempty sequence of positive times")
    u = np.multiply.outer(t, op.eigenvalues.ravel())
    r = rho2 - rho1
    return float(np.max(u**r * np.exp(-u)))


def to_spectral(g, op: SpectralOperator) -> np.ndarray:
    """Grid values -> spectral coefficients (trailing ``d`` axes)."""
    values = g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)
    _check_shape(values, op)
    out = _fft.dstn(values, type=1, norm="ortho", axes=_mode_axes(op))
    return out * (op.n_modes + 1) ** (-0.5 * op.dim)


def from_spectral(v: np.ndarray, op: SpectralOperator) -> np.ndarray:
    """Spectral coefficients -> grid values (trailing ``d`` axes)."""
    v = np.asarray(v, dtype=float)
    _check_shape(v, op)
    out = _fft.dstn(v, type=1, norm="ortho", axes=_mode_axes(op))
    return out * (op.n_modes + 1) ** (0.5 * op.dim)


def space_norm(g: GridFunction) -> float:
    """Norm of ``E``: grid sup for ``ContinuousSup``, quadrature ``L^p`` for ``LpGrid``."""
    vol = float(g.n_modes + 1) ** (-g.dim)
    return float(g.space.norm(g.values, vol, g.dim))


def phi1(eigenvalues: np.ndarray, h: float) -> np.ndarray:
    """``(1 - exp(-lambda h)) / lambda``, the exact integral of ``exp(-lambda s)`` over ``[0, h]``."""
    lam = np.asarray(eigenvalues, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.expm1(-lam * h) / lam
    return np.where(lam == 0, h, out)
