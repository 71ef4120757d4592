"""Samplers for the driving noises and Levy-Ito compensator bookkeeping.

Finite-activity Levy measures (``DiagonalPoisson``, ``FiniteAtomic``) are
realised as explicit jump lists. The infinite-activity diagonal alpha-stable
model is never enumerated; it only enters through exact-in-law
Ornstein-Uhlenbeck updates (see :func:`stable_ou_step_scale`).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .spectral import SpectralOperator

__all__ = [
    "RngStream",
    "DiagonalPoisson",
    "FiniteAtomic",
    "DiagonalAlphaStable",
    "LevyModel",
    "JumpPath",
    "sample_jump_path",
    "wiener_increment_variances",
    "stable_ou_step_scale",
    "sample_symmetric_stable",
]

# sub-stream tags inside one replica
WIENER_STREAM = 1
LEVY_STREAM = 2
STABLE_STREAM = 3
DATA_STREAM = 4


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by ``(master_seed, replica_index)``.

    Each call to :meth:`generator` starts a fresh generator, so identical
    arguments replay identical samples. ``stream`` tags give independent
    sub-streams (Wiener, Levy, ...) inside one replica.
    """

    master_seed: int
    replica_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.replica_index < 0:
            raise ValueError("replica_index must be nonnegative")

    def generator(self, *stream: int) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.replica_index, *stream)
        )
        return np.random.Generator(np.random.PCG64(seq))

    def replica(self, index: int) -> "RngStream":
        return RngStream(self.master_seed, index)


def _as_generator(rng, *stream: int) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator(*stream)
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


@dataclass(frozen=True, eq=False)
class DiagonalPoisson:
    """Mode ``n`` jumps by ``|n|^{-k} e_n`` at unit intensity.

    ``drift`` is the Levy-Ito drift ``m``; ``None`` selects ``m = -a`` (the
    big-jump mean), i.e. a fully compensated process.
    """

    k: float
    drift: np.ndarray | None = None
    big_jump_threshold: float = 1.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if not self.big_jump_threshold > 0:
            raise ValueError("big_jump_threshold must be positive")

    def jump_sizes(self, op: SpectralOperator) -> np.ndarray:
        return op.mode_numbers ** (-self.k)

    def total_intensity(self, op: SpectralOperator) -> float:
        return float(op.size)


@dataclass(frozen=True, eq=False)
class FiniteAtomic:
    """Levy measure ``sum_j intensity_j * delta_{vector_j}`` in spectral coordinates."""

    atoms: Sequence[tuple[np.ndarray, float]] = ()
    drift: np.ndarray | None = None
    big_jump_threshold: float = 1.0

    def __post_init__(self):
        for _, rate in self.atoms:
            if not rate > 0:
                raise ValueError("atom intensities must be positive")
        if not self.big_jump_threshold > 0:
            raise ValueError("big_jump_threshold must be positive")

    def total_intensity(self, op: SpectralOperator | None = None) -> float:
        return float(sum(rate for _, rate in self.atoms))


@dataclass(frozen=True, eq=False)
class DiagonalAlphaStable:
    """Independent symmetric alpha-stable coordinates with scales ``sigma_n = |n|^{-beta}``."""

    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")

    def scales(self, op: SpectralOperator) -> np.ndarray:
        return op.mode_numbers ** (-self.beta)


LevyModel = Union[DiagonalPoisson, FiniteAtomic, DiagonalAlphaStable]


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 2:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")


def _atom_table(model, op: SpectralOperator):
    """Return ``(modes, values, owner, intensities)`` describing every atom sparsely.

    ``owner[i]`` is the atom that entry ``i`` belongs to.
    """
    if isinstance(model, DiagonalPoisson):
        sizes = model.jump_sizes(op).ravel()
        modes = np.arange(op.size)
        return modes, sizes, modes.copy(), np.ones(op.size)
    if isinstance(model, FiniteAtomic):
        modes, values, owner, rates = [], [], [], []
        for j, (vec, rate) in enumerate(model.atoms):
            vec = np.asarray(vec, dtype=float)
            if vec.shape != op.shape:
                raise ValueError(f"atom {j} has shape {vec.shape}, expected {op.shape}")
            nz = np.flatnonzero(vec)
            modes.append(nz)
            values.append(vec.ravel()[nz])
            owner.append(np.full(nz.size, j))
            rates.append(rate)
        if not rates:
            empty = np.zeros(0, dtype=int)
            return empty, np.zeros(0), empty, np.zeros(0)
        return (np.concatenate(modes), np.concatenate(values),
                np.concatenate(owner), np.asarray(rates, dtype=float))
    raise ValueError(
        "alpha-stable noise has infinite activity and cannot be sampled as a jump "
        "list; use alpha_stable_convolution"
    )


def compensator_rate(model, op: SpectralOperator) -> np.ndarray:
    """Constant drift ``m - sum_{|z|_H <= threshold} intensity * z``."""
    modes, values, owner, rates = _atom_table(model, op)
    norms = np.sqrt(np.bincount(owner, weights=values**2, minlength=rates.size))
    small = norms <= model.big_jump_threshold
    rate = np.zeros(op.size)
    np.add.at(rate, modes, np.where(small[owner], -rates[owner] * values, 0.0))
    if model.drift is None:
        # m = -a: subtract the mean of the big jumps as well
        np.add.at(rate, modes, np.where(small[owner], 0.0, -rates[owner] * values))
    else:
        rate += np.asarray(model.drift, dtype=float).ravel()
    return rate.reshape(op.shape)


@dataclass(frozen=True, eq=False)
class JumpPath:
    """Realised jumps on ``(0, T]`` stored sparsely.

    Entry ``i`` adds ``entry_value[i]`` to flat mode ``entry_mode[i]`` of jump
    ``entry_jump[i]``, which happens at ``times[entry_jump[i]]``.
    """

    horizon: float
    times: np.ndarray
    entry_jump: np.ndarray
    entry_mode: np.ndarray
    entry_value: np.ndarray
    compensator_rate: np.ndarray
    shape: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        t = self.times
        if t.size and (t[0] <= 0 or t[-1] > self.horizon):
            raise ValueError("jump times must lie in (0, T]")
        if np.any(np.diff(t) <= 0):
            raise ValueError("jump times must be strictly increasing")

    @property
    def n_jumps(self) -> int:
        return int(self.times.size)

    def jump_vector(self, i: int) -> np.ndarray:
        v = np.zeros(int(np.prod(self.shape)))
        sel = self.entry_jump == i
        np.add.at(v, self.entry_mode[sel], self.entry_value[sel])
        return v.reshape(self.shape)

    def value_at(self, t: float) -> np.ndarray:
        """Raw path ``L(t) = sum_{s_i <= t} v_i + t * compensator_rate``."""
        v = np.zeros(int(np.prod(self.shape)))
        sel = self.times[self.entry_jump] <= t
        np.add.at(v, self.entry_mode[sel], self.entry_value[sel])
        return v.reshape(self.shape) + t * self.compensator_rate

    def to_csv(self) -> str:
        """One row per nonzero jump component: time, 1-based mode indices, magnitude."""
        buf = io.StringIO()
        d = len(self.shape)
        buf.write("# schema: jump_path v1\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time", *[f"mode_{i}" for i in range(d)], "magnitude"])
        for j, m, val in zip(self.entry_jump, self.entry_mode, self.entry_value):
            idx = np.unravel_index(int(m), self.shape)
            writer.writerow([repr(float(self.times[j])), *[int(i) + 1 for i in idx], repr(float(val))])
        return buf.getvalue()

    @classmethod
    def from_jumps(cls, op: SpectralOperator, horizon: float, jumps, compensator=None) -> "JumpPath":
        """Build a path from ``[(time, dense_vector), ...]``; mainly for scripted scenarios."""
        jumps = sorted(jumps, key=lambda tv: tv[0])
        times, ej, em, ev = [], [], [], []
        for i, (t, vec) in enumerate(jumps):
            vec = np.asarray(vec, dtype=float).ravel()
            nz = np.flatnonzero(vec)
            times.append(float(t))
            ej.append(np.full(nz.size, i))
            em.append(nz)
            ev.append(vec[nz])
        comp = np.zeros(op.shape) if compensator is None else np.asarray(compensator, dtype=float)
        cat = lambda parts, dt: np.concatenate(parts).astype(dt) if parts else np.zeros(0, dtype=dt)
        return cls(horizon, np.asarray(times, dtype=float), cat(ej, int), cat(em, int),
                   cat(ev, float), comp, op.shape)


def sample_jump_path(model, op: SpectralOperator, horizon: float, rng) -> JumpPath:
    """Sample the jumps of a finite-activity Levy model on ``(0, horizon]``.

    Per atom the count is Poisson(intensity * T) and the times are uniform on
    ``(0, T]``; the per-atom order statistics are merged into one time-sorted
    list.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    modes, values, owner, rates = _atom_table(model, op)
    gen = _as_generator(rng, LEVY_STREAM)
    counts = gen.poisson(rates * horizon)
    atom_of_jump = np.repeat(np.arange(rates.size), counts)
    # 1 - U maps [0, 1) onto (0, 1]
    times = horizon * (1.0 - gen.random(atom_of_jump.size))
    order = np.argsort(times, kind="stable")
    times = times[order]
    atom_of_jump = atom_of_jump[order]

    # expand each jump into the sparse entries of its atom
    starts = np.searchsorted(owner, np.arange(rates.size), side="left")
    stops = np.searchsorted(owner, np.arange(rates.size), side="right")
    lengths = (stops - starts)[atom_of_jump]
    entry_jump = np.repeat(np.arange(atom_of_jump.size), lengths)
    offsets = np.arange(entry_jump.size) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    entry_idx = np.repeat(starts[atom_of_jump], lengths) + offsets
    return JumpPath(
        horizon=float(horizon),
        times=times,
        entry_jump=entry_jump,
        entry_mode=modes[entry_idx],
        entry_value=values[entry_idx],
        compensator_rate=compensator_rate(model, op),
        shape=op.shape,
    )


def wiener_increment_variances(op: SpectralOperator, h: float) -> np.ndarray:
    """Per-mode variance of the exact OU update of ``W_A`` over a step ``h``."""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    lam = op.eigenvalues
    return op.wiener_coloring() ** 2 * (-np.expm1(-2.0 * lam * h)) / (2.0 * lam)


def stable_ou_step_scale(alpha: float, sigma, lam, h: float):
    """Scale of ``int_0^h exp(-lam (h - s)) dl(s)`` for an alpha-stable ``l`` of scale ``sigma``."""
    _check_alpha(alpha)
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        integral = -np.expm1(-alpha * lam * h) / (alpha * lam)
    integral = np.where(lam == 0, h, integral)
    out = np.asarray(sigma, dtype=float) * integral ** (1.0 / alpha)
    return out if out.ndim else float(out)


def sample_symmetric_stable(alpha: float, scale, rng, size=None):
    """Symmetric alpha-stable draws with characteristic function ``exp(-|scale u|^alpha)``.

    Chambers-Mallows-Stuck construction from a uniform angle and a unit
    exponential; ``alpha = 1`` reduces to ``scale * tan(U)`` (Cauchy).
    """
    _check_alpha(alpha)
    scale = np.asarray(scale, dtype=float)
    if np.any(scale <= 0):
        raise ValueError("scale must be positive")
    gen = _as_generator(rng, STABLE_STREAM)
    shape = scale.shape if size is None else np.broadcast_shapes(
        scale.shape, tuple(int(n) for n in np.atleast_1d(size)))
    u = np.pi * (gen.random(shape) - 0.5)
    w = gen.standard_exponential(shape)
    if alpha == 1.0:
        x = np.tan(u)
    else:
        x = (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)
             * (np.cos((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha))
    out = scale * x
    return out if out.ndim else float(out)
