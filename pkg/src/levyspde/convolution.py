"""Stochastic convolutions, Levy-measure regularity criteria and the fourth-moment statistic."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .noise import (
    STABLE_STREAM,
    WIENER_STREAM,
    DiagonalAlphaStable,
    DiagonalPoisson,
    FiniteAtomic,
    JumpPath,
    RngStream,
    _as_generator,
    _check_alpha,
    sample_jump_path,
    sample_symmetric_stable,
    stable_ou_step_scale,
    wiener_increment_variances,
)
from .spectral import SpectralOperator, frac_norm, phi1

__all__ = [
    "ConvolutionPath",
    "RegularityReport",
    "GSResult",
    "levy_convolution",
    "wiener_convolution",
    "alpha_stable_convolution",
    "zero_convolution",
    "check_ms_continuity",
    "check_cadlag_pz",
    "check_liu",
    "check_wiener_continuity",
    "is_levy_in",
    "regularity_report",
    "gs_statistic",
]


@dataclass(frozen=True, eq=False)
class ConvolutionPath:
    """Spectral path on a time grid with explicit left limits.

    ``values[m]`` is the right-continuous value at ``time_grid[m]``;
    ``left_limits[m]`` excludes any jump that happens exactly at that time.
    """

    time_grid: np.ndarray
    values: np.ndarray
    left_limits: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.left_limits.shape:
            raise ValueError("values and left_limits must have the same shape")
        if self.values.shape[0] != self.time_grid.size:
            raise ValueError("one value per grid time required")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape[1:]

    def __add__(self, other: "ConvolutionPath") -> "ConvolutionPath":
        if not np.array_equal(self.time_grid, other.time_grid):
            raise ValueError("convolution paths live on different time grids")
        return ConvolutionPath(self.time_grid, self.values + other.values,
                               self.left_limits + other.left_limits)

    def jump_indices(self) -> np.ndarray:
        axes = tuple(range(1, self.values.ndim))
        return np.flatnonzero(np.any(self.values != self.left_limits, axis=axes))


def _check_grid(time_grid) -> np.ndarray:
    grid = np.asarray(time_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or grid[0] != 0.0:
        raise ValueError("time grid must be one-dimensional and start at 0")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return grid


def zero_convolution(op: SpectralOperator, time_grid) -> ConvolutionPath:
    grid = _check_grid(time_grid)
    zeros = np.zeros((grid.size, *op.shape))
    return ConvolutionPath(grid, zeros, zeros.copy())


def levy_convolution(path: JumpPath, op: SpectralOperator, time_grid) -> ConvolutionPath:
    """Exact ``L_A`` of a finite-activity jump path at the grid times.

    Each jump is propagated by the exact semigroup and the compensator drift
    is integrated per mode in closed form, so no time-stepping error occurs.
    """
    grid = _check_grid(time_grid)
    if grid[-1] < path.horizon:
        raise ValueError(f"time grid ends at {grid[-1]} before the path horizon {path.horizon}")
    if path.shape != op.shape:
        raise ValueError("jump path and operator truncations differ")
    lam = op.eigenvalues.ravel()
    n_times, size = grid.size, lam.size

    jump_times = path.times[path.entry_jump]
    step = np.searchsorted(grid, jump_times, side="left")
    decay = np.exp(-lam[path.entry_mode] * (grid[step] - jump_times))
    injected = np.zeros((n_times, size))
    np.add.at(injected, (step, path.entry_mode), path.entry_value * decay)
    on_grid = grid[step] == jump_times
    at_time = np.zeros((n_times, size))
    np.add.at(at_time, (step[on_grid], path.entry_mode[on_grid]), path.entry_value[on_grid])

    comp = path.compensator_rate.ravel()
    values = np.zeros((n_times, size))
    current = np.zeros(size)
    for m in range(1, n_times):
        h = grid[m] - grid[m - 1]
        current = np.exp(-lam * h) * current + comp * phi1(lam, h) + injected[m]
        values[m] = current
    left = values - at_time
    return ConvolutionPath(grid, values.reshape(n_times, *op.shape),
                           left.reshape(n_times, *op.shape))


def wiener_convolution(op: SpectralOperator, time_grid, rng, mode_mask=None) -> ConvolutionPath:
    """``W_A`` on an arbitrary increasing grid via the exact per-mode OU recursion."""
    grid = _check_grid(time_grid)
    gen = _as_generator(rng, WIENER_STREAM)
    lam = op.eigenvalues
    steps = np.diff(grid)
    normals = gen.standard_normal((steps.size, *op.shape))
    mask = 1.0 if mode_mask is None else np.asarray(mode_mask, dtype=float)
    values = np.zeros((grid.size, *op.shape))
    current = np.zeros(op.shape)
    for m, h in enumerate(steps, start=1):
        std = np.sqrt(wiener_increment_variances(op, h)) * mask
        current = np.exp(-lam * h) * current + std * normals[m - 1]
        values[m] = current
    return ConvolutionPath(grid, values, values.copy())


def alpha_stable_convolution(model: DiagonalAlphaStable, op: SpectralOperator, time_grid, rng,
                             amplitude: float = 1.0) -> ConvolutionPath:
    """Exact-in-law Markov recursion for the diagonal alpha-stable convolution.

    Marginals at grid times are exact; the grid does not resolve individual
    jumps, so ``left_limits`` equals ``values``.
    """
    grid = _check_grid(time_grid)
    gen = _as_generator(rng, STABLE_STREAM)
    lam = op.eigenvalues
    sigma = amplitude * model.scales(op)
    values = np.zeros((grid.size, *op.shape))
    current = np.zeros(op.shape)
    for m, h in enumerate(np.diff(grid), start=1):
        scale = stable_ou_step_scale(model.alpha, sigma, lam, h)
        draws = sample_symmetric_stable(model.alpha, 1.0, gen, size=op.shape)
        current = np.exp(-lam * h) * current + scale * draws
        values[m] = current
    return ConvolutionPath(grid, values, values.copy())


# --- regularity criteria -------------------------------------------------------
#
# The diagonal Poisson criteria use the index convention of the l2 example:
# |n^{-k} e_n|_rho = n^{rho - k}. Series over multi-indices n in N^dim of
# |n|^s converge iff s < -dim; decided from exponents, never from partial sums.


def _series_converges(exponent: float, dim: int = 1) -> bool:
    return exponent < -dim


def check_ms_continuity(model, delta: float, dim: int = 1) -> float | None:
    """Mean-square continuity bound ``1/2 + delta`` when ``int |z|_delta^2 nu(dz) < inf``.

    Returns ``None`` when the second-moment condition fails or is not
    available (alpha-stable measures have no second moment).
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if isinstance(model, DiagonalAlphaStable):
        return None
    if isinstance(model, FiniteAtomic):
        return 0.5 + delta
    if isinstance(model, DiagonalPoisson):
        if _series_converges(2 * (delta - model.k), dim):
            return 0.5 + delta
        return None
    raise TypeError(f"unsupported Levy model {type(model).__name__}")


def check_cadlag_pz(model, delta: float, eps: float, dim: int = 1) -> float | None:
    """Cadlag bound ``eps + delta`` under ``int |z|_delta^2 + |z|_{eps+delta}^4 nu(dz) < inf``.

    Only ``0 <= eps <= 1/4`` is covered by the underlying argument.
    """
    if not 0 <= eps <= 0.25:
        raise ValueError(f"eps must lie in [0, 1/4], got {eps}")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if isinstance(model, DiagonalAlphaStable):
        return None
    if isinstance(model, FiniteAtomic):
        return eps + delta
    if isinstance(model, DiagonalPoisson):
        second = _series_converges(2 * (delta - model.k), dim)
        fourth = _series_converges(4 * (eps + delta - model.k), dim)
        return eps + delta if second and fourth else None
    raise TypeError(f"unsupported Levy model {type(model).__name__}")


def check_liu(alpha: float, beta: float, delta: float, op: SpectralOperator) -> bool:
    """``sum |sigma_n lambda_n^delta|^alpha < inf`` for ``sigma_n = |n|^-beta``, ``lambda_n ~ |n|^2``."""
    _check_alpha(alpha)
    return _series_converges(alpha * (2 * delta - beta), op.dim)


def check_wiener_continuity(dim: int, delta_r: float) -> bool:
    """``W_A`` continuous in ``C([0,1]^d)`` when ``delta_R > (d - 2)/4``."""
    return delta_r > (dim - 2) / 4


def is_levy_in(model, gamma: float, op: SpectralOperator | None = None, dim: int = 1) -> bool:
    """Whether ``L`` itself is a Levy process in ``H_gamma``."""
    if isinstance(model, DiagonalPoisson):
        # sum min(n^{2(gamma - k)}, 1) < inf
        return _series_converges(2 * (gamma - model.k), dim)
    if isinstance(model, FiniteAtomic):
        return True
    if isinstance(model, DiagonalAlphaStable):
        if op is None:
            raise ValueError("alpha-stable criterion needs the operator spectrum")
        return check_liu(model.alpha, model.beta, gamma, op)
    raise TypeError(f"unsupported Levy model {type(model).__name__}")


@dataclass
class RegularityReport:
    ms_continuity_gamma_bound: float
    cadlag_gamma_bound: float
    conditions: dict[str, bool] = field(default_factory=dict)
    gs_exponent: tuple[float, float] | None = None

    def _items(self) -> list[tuple[str, str]]:
        items = [
            ("ms_continuity_gamma_bound", _fmt(self.ms_continuity_gamma_bound)),
            ("cadlag_gamma_bound", _fmt(self.cadlag_gamma_bound)),
        ]
        items += [(k, "true" if v else "false") for k, v in self.conditions.items()]
        if self.gs_exponent is not None:
            items += [("gs_exponent", _fmt(self.gs_exponent[0])),
                      ("gs_exponent_stderr", _fmt(self.gs_exponent[1]))]
        return items

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self._items())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# schema: regularity_report v1\n")
        writer = csv.writer(buf, lineterminator="\n")
        items = self._items()
        writer.writerow([k for k, _ in items])
        writer.writerow([v for _, v in items])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


def regularity_report(model, delta: float, eps: float = 0.25, gamma: float | None = None,
                      op: SpectralOperator | None = None, dim: int = 1) -> RegularityReport:
    ms = check_ms_continuity(model, delta, dim)
    cad = check_cadlag_pz(model, delta, eps, dim)
    conditions = {
        "second_moment_condition": ms is not None,
        "fourth_moment_condition": cad is not None,
    }
    if gamma is not None:
        conditions[f"is_levy_in_Hgamma({gamma:g})"] = is_levy_in(model, gamma, op, dim)
        conditions[f"convolution_cadlag_in_Hgamma({gamma:g})"] = (
            cad is not None and gamma < cad
        ) or (isinstance(model, DiagonalAlphaStable) and op is not None
              and check_liu(model.alpha, model.beta, gamma, op))
    return RegularityReport(
        ms_continuity_gamma_bound=-math.inf if ms is None else ms,
        cadlag_gamma_bound=-math.inf if cad is None else cad,
        conditions=conditions,
    )


@dataclass
class GSResult:
    rows: list[tuple[float, float, float]]
    slope: float | None
    slope_stderr: float | None

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# schema: gs_statistic v1\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["h", "estimate", "stderr"])
        for row in self.rows:
            writer.writerow([_fmt(x) for x in row])
        return buf.getvalue()


def weighted_loglog_slope(x, y, stderr) -> tuple[float | None, float | None]:
    """Weighted least-squares slope of ``log y`` against ``log x``.

    Weights are ``y / stderr`` (the inverse delta-method standard error of
    ``log y``); nonpositive estimates are dropped.
    """
    x, y, s = (np.asarray(a, dtype=float) for a in (x, y, stderr))
    keep = (y > 0) & (s > 0)
    if keep.sum() < 2:
        return None, None
    lx, ly, w = np.log(x[keep]), np.log(y[keep]), y[keep] / s[keep]
    if keep.sum() == 2:
        slope = (ly[1] - ly[0]) / (lx[1] - lx[0])
        return float(slope), None
    coef, cov = np.polyfit(lx, ly, 1, w=w, cov="unscaled")
    return float(coef[0]), float(np.sqrt(cov[0, 0]))


def gs_statistic(model, op: SpectralOperator, gamma: float, h_list: Sequence[float], t: float,
                 replicas: int, rng: RngStream) -> GSResult:
    """Monte Carlo estimate of ``E[|L_A(t+h)-L_A(t)|_g^2 |L_A(t)-L_A(t-h)|_g^2]`` per ``h``.

    All ``h`` share each replica's path (common random numbers). Replica
    ``r`` uses ``rng.replica(r)``.
    """
    if isinstance(model, DiagonalAlphaStable):
        raise ValueError(
            "alpha-stable noise has infinite fourth moments; the fourth-moment "
            "statistic is undefined for it"
        )
    h = np.sort(np.asarray(h_list, dtype=float))
    if np.any(h <= 0) or np.any(h >= t):
        raise ValueError("need 0 < h < t for every h")
    horizon = t + h[-1]
    grid = np.unique(np.concatenate([[0.0, t], t - h, t + h]))
    i_t = np.searchsorted(grid, t)
    i_minus = np.searchsorted(grid, t - h)
    i_plus = np.searchsorted(grid, t + h)
    products = np.empty((replicas, h.size))
    for r in range(replicas):
        path = sample_jump_path(model, op, horizon, rng.replica(r))
        conv = levy_convolution(path, op, grid)
        vals = conv.values
        ahead = frac_norm(vals[i_plus] - vals[i_t], gamma, op) ** 2
        behind = frac_norm(vals[i_t] - vals[i_minus], gamma, op) ** 2
        products[r] = ahead * behind
    est = products.mean(axis=0)
    err = products.std(axis=0, ddof=1) / np.sqrt(replicas) if replicas > 1 else np.zeros(h.size)
    slope, slope_err = weighted_loglog_slope(h, est, err)
    rows = [(float(a), float(b), float(c)) for a, b, c in zip(h, est, err)]
    return GSResult(rows, slope, slope_err)
