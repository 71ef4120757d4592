"""Mild solver for ``dy/dt = A y + F(y + f(t^-))`` with cadlag forcing ``f``.

The drift is replaced by its Yosida approximation ``F_delta``; the linear part
is either the exact semigroup (``theta = 0``) or its bounded Yosida
approximant ``A_theta``. Two steppers are provided:

``exponential_euler``
    ``y_{m+1} = e^{h A} y_m + phi_1(h A) F_delta(y_m + f(t_m))``.
``picard_theta``
    The step map ``y -> e^{h A_theta} y_m + phi_1(h A_theta) F_delta(y + f(t_m))``
    solved for its fixed point by Picard iteration, bisecting the step until
    the map is a contraction.

Both read the forcing at the left end of each step: on ``(t_m, t_{m+1}]`` the
left limit ``f(s^-)`` equals ``f(t_m)`` because jump times are grid times, so
``y`` on ``[0, t_m]`` never sees ``f(t_m)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .convolution import ConvolutionPath, zero_convolution
from .dissipative import DriftSpec, YosidaParams, yosida_drift
from .spectral import (
    ContinuousSup,
    SpectralOperator,
    from_spectral,
    frac_norm,
    phi1,
    to_spectral,
)

__all__ = [
    "SolverConfig",
    "MildPath",
    "SolverError",
    "theta_eigenvalues",
    "uniform_grid",
    "picard_solve_step",
    "exp_euler_solve",
    "picard_solve",
    "solve",
    "yosida_continuation",
    "ContinuationResult",
    "gronwall_rhs",
    "gronwall_check",
]

STEPPERS = ("exponential_euler", "picard_theta")


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping parameters.

    ``yosida_delta=None`` ties the Yosida parameter to the time step, so that
    both discretisation and regularisation errors are first order in ``h``.
    """

    time_step: float
    yosida_delta: float | None = None
    yosida_theta: float = 0.0
    stepper: str = "exponential_euler"
    picard_tol: float = 1e-12
    picard_max_iters: int = 100
    newton_tol: float = 1e-12
    max_bisections: int = 30

    def __post_init__(self):
        if not self.time_step > 0:
            raise ValueError("time_step must be positive")
        if self.yosida_delta is not None and not self.yosida_delta > 0:
            raise ValueError("yosida_delta must be positive")
        if self.yosida_theta < 0:
            raise ValueError("yosida_theta must be nonnegative")
        if self.stepper not in STEPPERS:
            raise ValueError(f"stepper must be one of {STEPPERS}, got {self.stepper!r}")

    @property
    def delta(self) -> float:
        return self.time_step if self.yosida_delta is None else self.yosida_delta

    def yosida(self) -> YosidaParams:
        return YosidaParams(self.delta, self.newton_tol)


def theta_eigenvalues(op: SpectralOperator, theta: float) -> np.ndarray:
    """Eigenvalues of ``-A_theta``: ``lambda`` for ``theta = 0``, else ``lambda / (1 + theta lambda)``."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    lam = op.eigenvalues
    if theta == 0:
        return lam
    return lam / (1.0 + theta * lam)


def uniform_grid(horizon: float, step: float, extra=()) -> np.ndarray:
    """``0, h, 2h, ..., T`` merged with ``extra`` times (jump times) in ``(0, T]``."""
    if not horizon > 0 or not step > 0:
        raise ValueError("horizon and step must be positive")
    n = max(1, int(math.ceil(horizon / step - 1e-9)))
    base = np.minimum(np.arange(n + 1) * step, horizon)
    base[-1] = horizon
    extra = np.asarray(extra, dtype=float)
    if extra.size:
        # drop uniform points that coincide with a jump time up to rounding
        pos = np.clip(np.searchsorted(extra, base), 1, max(extra.size - 1, 1))
        near = np.minimum(np.abs(base - extra[pos - 1]), np.abs(base - extra[np.minimum(pos, extra.size - 1)]))
        keep = near > 1e-9 * step
        keep[0] = True
        base = base[keep]
    return np.union1d(base, extra)


@dataclass(frozen=True, eq=False)
class MildPath:
    """Solution path in spectral coefficients, ``coeffs[m]`` at ``time_grid[m]``."""

    time_grid: np.ndarray
    coeffs: np.ndarray
    op: SpectralOperator
    config: SolverConfig
    diagnostics: dict = field(default_factory=dict)

    def grid_values(self) -> np.ndarray:
        return from_spectral(self.coeffs, self.op)

    def h_norms(self) -> np.ndarray:
        return frac_norm(self.coeffs, 0.0, self.op)

    def e_norms(self, space=ContinuousSup()) -> np.ndarray:
        return space.norm(self.grid_values(), self.op.cell_volume, self.op.dim)

    def to_csv(self, n_modes: int = 4, space=ContinuousSup()) -> str:
        return path_csv("mild_path", self.time_grid, self.coeffs, self.op, n_modes, space)


def _fmt(x) -> str:
    return repr(float(x))


def path_csv(schema: str, times, coeffs, op: SpectralOperator, n_modes: int, space) -> str:
    if coeffs.ndim != op.dim + 1:
        raise ValueError("CSV export needs a path without batch axes")
    flat = coeffs.reshape(coeffs.shape[0], -1)
    k = min(n_modes, flat.shape[1])
    hn = frac_norm(coeffs, 0.0, op)
    en = space.norm(from_spectral(coeffs, op), op.cell_volume, op.dim)
    buf = io.StringIO()
    buf.write(f"# schema: {schema} v1\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time", *[f"c_{j + 1}" for j in range(k)], "e_norm", "h_norm"])
    for m in range(coeffs.shape[0]):
        writer.writerow([_fmt(times[m]), *[_fmt(c) for c in flat[m, :k]], _fmt(en[m]), _fmt(hn[m])])
    return buf.getvalue()


def _initial_coeffs(x, op: SpectralOperator, spectral: bool) -> np.ndarray:
    x = np.asarray(getattr(x, "values", x), dtype=float)
    return x.copy() if spectral else to_spectral(x, op)


def _forcing_or_zero(op, forcing, config, horizon):
    if forcing is not None:
        return forcing
    if horizon is None:
        raise ValueError("either a forcing path or a horizon is required")
    return zero_convolution(op, uniform_grid(horizon, config.time_step))


class _StepCache:
    """Per-step-size semigroup and phi_1 factors (most steps share one size)."""

    def __init__(self, lam: np.ndarray):
        self.lam = lam
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def __call__(self, h: float):
        hit = self._cache.get(h)
        if hit is None:
            hit = (np.exp(-self.lam * h), phi1(self.lam, h))
            if len(self._cache) < 64:
                self._cache[h] = hit
        return hit


def exp_euler_solve(op: SpectralOperator, F: DriftSpec, x, forcing: ConvolutionPath | None,
                    config: SolverConfig, horizon: float | None = None,
                    spectral_input: bool = False) -> MildPath:
    """Exponential Euler along the forcing's time grid.

    ``x`` holds grid values (or spectral coefficients with
    ``spectral_input=True``) and may carry leading batch axes; all batch
    members share the forcing.
    """
    forcing = _forcing_or_zero(op, forcing, config, horizon)
    grid = forcing.time_grid
    params = config.yosida()
    params.check_admissible(F)
    lam = theta_eigenvalues(op, config.yosida_theta)
    factors = _StepCache(lam)
    y = _initial_coeffs(x, op, spectral_input)
    f_grid = from_spectral(forcing.values, op)
    out = np.empty((grid.size, *y.shape))
    out[0] = y
    linear_only = F.is_zero_polynomial and F.max_term is None
    for m in range(grid.size - 1):
        decay, weight = factors(grid[m + 1] - grid[m])
        if linear_only:
            y = decay * y
        else:
            u = from_spectral(y, op) + f_grid[m]
            y = decay * y + weight * to_spectral(yosida_drift(F, params, u), op)
        out[m + 1] = y
    return MildPath(grid, out, op, config, {"stepper": "exponential_euler"})


def _contraction_factor(F: DriftSpec, delta: float, h: float) -> float:
    # Lip(F_delta) * int_0^h |e^{s A_theta}| ds with |e^{s A_theta}|_H <= 1
    return (2.0 / delta + abs(F.zeta_F)) * h


def picard_solve_step(y: np.ndarray, f_left: np.ndarray, F: DriftSpec, params: YosidaParams,
                      lam_theta: np.ndarray, h: float, op: SpectralOperator,
                      tol: float = 1e-12, max_iters: int = 100):
    """One contraction step; returns ``(y_next, iterations, residual)``.

    Raises :class:`SolverError` if the step map is not a contraction.
    """
    if _contraction_factor(F, params.delta, h) >= 1:
        raise SolverError(f"step {h} too large for a contraction at delta={params.delta}")
    decay = np.exp(-lam_theta * h)
    weight = phi1(lam_theta, h)
    base = decay * y

    def step_map(v):
        return base + weight * to_spectral(yosida_drift(F, params, from_spectral(v, op) + f_left), op)

    current = base
    scale = max(1.0, float(np.max(frac_norm(y, 0.0, op))))
    residual = math.inf
    for it in range(1, max_iters + 1):
        nxt = step_map(current)
        residual = float(np.max(frac_norm(nxt - current, 0.0, op)))
        current = nxt
        if residual <= tol * scale:
            return current, it, residual
    raise SolverError(f"Picard iteration stalled at residual {residual:.3e}")


def picard_solve(op: SpectralOperator, F: DriftSpec, x, forcing: ConvolutionPath | None,
                 config: SolverConfig, horizon: float | None = None,
                 spectral_input: bool = False) -> MildPath:
    forcing = _forcing_or_zero(op, forcing, config, horizon)
    grid = forcing.time_grid
    params = config.yosida()
    params.check_admissible(F)
    lam = theta_eigenvalues(op, config.yosida_theta)
    y = _initial_coeffs(x, op, spectral_input)
    f_grid = from_spectral(forcing.values, op)
    out = np.empty((grid.size, *y.shape))
    out[0] = y
    iterations = np.zeros(grid.size - 1, dtype=int)
    residuals = np.zeros(grid.size - 1)
    substeps = np.ones(grid.size - 1, dtype=int)
    for m in range(grid.size - 1):
        h = grid[m + 1] - grid[m]
        pieces = 1
        while _contraction_factor(F, params.delta, h / pieces) >= 1:
            pieces *= 2
            if pieces > 2**config.max_bisections:
                raise SolverError("step bisection limit reached without a contraction")
        for _ in range(pieces):
            y, it, res = picard_solve_step(y, f_grid[m], F, params, lam, h / pieces, op,
                                           config.picard_tol, config.picard_max_iters)
            iterations[m] += it
            residuals[m] = max(residuals[m], res)
        substeps[m] = pieces
        out[m + 1] = y
    diag = {"stepper": "picard_theta", "picard_iterations": iterations,
            "picard_residuals": residuals, "substeps": substeps}
    return MildPath(grid, out, op, config, diag)


def solve(op: SpectralOperator, F: DriftSpec, x, forcing: ConvolutionPath | None,
          config: SolverConfig, horizon: float | None = None,
          spectral_input: bool = False) -> MildPath:
    """Dispatch on ``config.stepper``."""
    fn = exp_euler_solve if config.stepper == "exponential_euler" else picard_solve
    return fn(op, F, x, forcing, config, horizon, spectral_input)


@dataclass
class ContinuationResult:
    path: MildPath
    deltas: list[float]
    table: list[tuple[float, float]]
    slope: float | None
    envelope_ok: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# schema: yosida_convergence v1\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["delta", "sup_sq_distance"])
        for d, dist in self.table:
            writer.writerow([_fmt(d), _fmt(dist)])
        return buf.getvalue()


def yosida_continuation(op: SpectralOperator, F: DriftSpec, x, forcing: ConvolutionPath | None,
                        base_delta: float, levels: int, config: SolverConfig,
                        horizon: float | None = None, deltas=None) -> ContinuationResult:
    """Solve at ``delta, delta/2, ...`` and tabulate consecutive sup-time squared H distances.

    Each table row is tagged with the larger parameter of its pair. The
    ``C (delta + tau)`` envelope is judged by a log-log slope of at least 0.9;
    a failure is reported in ``envelope_ok``, not raised.
    """
    if deltas is None:
        if levels < 2:
            raise ValueError("need at least two levels")
        deltas = [base_delta / 2**i for i in range(levels)]
    deltas = [float(d) for d in deltas]
    forcing = _forcing_or_zero(op, forcing, config, horizon)
    paths = [solve(op, F, x, forcing, replace(config, yosida_delta=d)) for d in deltas]
    table = []
    for coarse, fine, d in zip(paths, paths[1:], deltas):
        dist = frac_norm(coarse.coeffs - fine.coeffs, 0.0, op)
        table.append((d, float(np.max(dist) ** 2)))
    slope = loglog_slope([d for d, _ in table], [v for _, v in table])
    ok = slope is not None and slope >= 0.9
    return ContinuationResult(paths[-1], deltas, table, slope, ok)


def loglog_slope(x, y) -> float | None:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def gronwall_rhs(times, gamma0: float, b: float, g) -> np.ndarray:
    """``e^{b (t - t_0)} gamma_0 + int_{t_0}^t e^{b (t - s)} g(s) ds`` by the trapezoid rule."""
    t = np.asarray(times, dtype=float)
    g = np.asarray(g, dtype=float)
    out = np.empty_like(t)
    integral = 0.0
    out[0] = gamma0
    for i in range(1, t.size):
        h = t[i] - t[i - 1]
        grow = math.exp(b * h)
        integral = grow * integral + 0.5 * h * (grow * g[i - 1] + g[i])
        out[i] = math.exp(b * (t[i] - t[0])) * gamma0 + integral
    return out


def gronwall_check(times, gamma, b: float, g) -> bool:
    """Whether the sampled variation-of-constants inequality holds at every grid time."""
    gamma = np.asarray(gamma, dtype=float)
    rhs = gronwall_rhs(times, float(gamma[0]), b, g)
    scale = max(1.0, float(np.max(np.abs(gamma))), float(np.max(np.abs(rhs))))
    return bool(np.all(gamma <= rhs + 1e-9 * scale))
