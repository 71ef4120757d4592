"""Flat ``key = value`` configuration with one section per module.

Every key has a default, so a config file only lists what it changes. The
normalised form (all sections, all keys, canonical value text) is what the
run manifest stores, which makes the echo round-trip exactly.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from ..dissipative import MaxTerm, make_drift
from ..noise import DiagonalAlphaStable, DiagonalPoisson
from ..solver import SolverConfig
from ..spde import ProblemSpec
from ..spectral import ContinuousSup, LpGrid, build_dirichlet_operator, from_spectral

EXPERIMENTS = (
    "simulate",
    "check-conditions",
    "gs-regularity",
    "yosida-convergence",
    "contraction",
    "apriori",
    "generalized",
)

DEFAULTS: dict[str, dict[str, str]] = {
    "spectral": {"dim": "1", "n_modes": "32", "delta_r": "0.0"},
    "drift": {"coeffs": "0, 0, 0, -1", "max_term": "none", "max_scale": "1.0",
              "fixed_point": "none"},
    "noise": {"wiener": "false", "levy": "none", "k": "1.5", "alpha": "1.5", "beta": "1.0"},
    "solver": {"time_step": "0.001", "yosida_delta": "none", "yosida_theta": "0.0",
               "stepper": "exponential_euler", "picard_tol": "1e-12", "picard_max_iters": "100"},
    "problem": {"horizon": "1.0", "space": "sup", "initial": "zero", "initial_decay": "2.0",
                "initial_amplitude": "1.0", "target_delta": "0.0", "cadlag_eps": "0.25"},
    "conditions": {"delta": "0.0", "eps": "0.25", "gamma": "0.2"},
    "gs": {"gamma": "0.0", "t": "0.5", "h_exponents": "-10, -9, -8, -7, -6, -5, -4"},
    "yosida": {"base_delta": "0.01", "levels": "4"},
    "generalized": {"levels": "8, 16, 32, 64", "taper": "fejer", "datum_exponent": "0.6"},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    master_seed: int
    replicas: int = 1
    output: str = "."
    sections: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.replicas < 1:
            raise ConfigError("replicas must be positive")

    def get(self, section: str, key: str) -> str:
        return self.sections[section][key]

    def getfloat(self, section: str, key: str) -> float:
        return _parse(float, self.get(section, key), section, key)

    def getint(self, section: str, key: str) -> int:
        return _parse(int, self.get(section, key), section, key)

    def getbool(self, section: str, key: str) -> bool:
        value = self.get(section, key).lower()
        if value not in ("true", "false"):
            raise ConfigError(f"[{section}] {key} must be true or false")
        return value == "true"

    def getfloats(self, section: str, key: str) -> list[float]:
        return [_parse(float, v, section, key) for v in self.get(section, key).split(",")]

    def optional_float(self, section: str, key: str) -> float | None:
        return None if self.get(section, key).lower() == "none" else self.getfloat(section, key)


def _parse(kind, text, section, key):
    try:
        return kind(text.strip())
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {text!r}") from None


def normalise_sections(raw: dict[str, dict[str, str]]) -> dict[str, dict[str, str]]:
    """Fill defaults and reject unknown sections or keys."""
    out = {name: dict(values) for name, values in DEFAULTS.items()}
    for name, values in raw.items():
        if name not in DEFAULTS:
            raise ConfigError(f"unknown section [{name}]")
        for key, value in values.items():
            if key not in DEFAULTS[name]:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            out[name][key] = value.strip()
    return out


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    return parser


def read_sections(path: str) -> dict[str, dict[str, str]]:
    parser = _parser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return {s: dict(parser[s]) for s in parser.sections() if s != "run"}


def load_config(path: str | None, experiment: str, seed: int, replicas: int | None,
                output: str) -> ExperimentConfig:
    raw = read_sections(path) if path else {}
    return ExperimentConfig(experiment, int(seed), int(replicas or 1), output, normalise_sections(raw))


def manifest_text(config: ExperimentConfig, version: str) -> str:
    parser = _parser()
    parser["run"] = {"experiment": config.experiment, "seed": str(config.master_seed),
                     "replicas": str(config.replicas), "library_version": version}
    for name in DEFAULTS:
        parser[name] = config.sections[name]
    import io

    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def parse_manifest(path: str, output: str) -> ExperimentConfig:
    parser = _parser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
        run = parser["run"]
        experiment, seed, replicas = run["experiment"], int(run["seed"]), int(run["replicas"])
    except (OSError, configparser.Error, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None
    raw = {s: dict(parser[s]) for s in parser.sections() if s != "run"}
    return ExperimentConfig(experiment, seed, replicas, output, normalise_sections(raw))


# --- config -> domain objects -------------------------------------------------------


def build_operator(cfg: ExperimentConfig):
    return build_dirichlet_operator(cfg.getint("spectral", "dim"), cfg.getint("spectral", "n_modes"),
                                    cfg.getfloat("spectral", "delta_r"))


def build_drift(cfg: ExperimentConfig):
    kind = cfg.get("drift", "max_term").lower()
    scale = cfg.getfloat("drift", "max_scale")
    if kind == "none":
        max_term = None
    elif kind == "linear":
        max_term = MaxTerm.linear(scale)
    elif kind == "sine":
        max_term = MaxTerm.sine(scale)
    else:
        raise ConfigError(f"[drift] max_term must be none, linear or sine, got {kind!r}")
    fixed = None if cfg.get("drift", "fixed_point").lower() == "none" else cfg.getfloat("drift", "fixed_point")
    try:
        return make_drift(cfg.getfloats("drift", "coeffs"), max_term, fixed)
    except ValueError as exc:
        raise ConfigError(f"[drift] {exc}") from None


def build_levy(cfg: ExperimentConfig):
    kind = cfg.get("noise", "levy").lower()
    try:
        if kind == "none":
            return None
        if kind == "poisson":
            return DiagonalPoisson(cfg.getfloat("noise", "k"))
        if kind == "stable":
            return DiagonalAlphaStable(cfg.getfloat("noise", "alpha"), cfg.getfloat("noise", "beta"))
    except ValueError as exc:
        raise ConfigError(f"[noise] {exc}") from None
    raise ConfigError(f"[noise] levy must be none, poisson or stable, got {kind!r}")


def build_space(cfg: ExperimentConfig):
    text = cfg.get("problem", "space").lower()
    if text == "sup":
        return ContinuousSup()
    if text.startswith("lp:"):
        try:
            return LpGrid(float(text[3:]))
        except ValueError as exc:
            raise ConfigError(f"[problem] space: {exc}") from None
    raise ConfigError(f"[problem] space must be sup or lp:<p>, got {text!r}")


def build_solver(cfg: ExperimentConfig) -> SolverConfig:
    try:
        return SolverConfig(
            time_step=cfg.getfloat("solver", "time_step"),
            yosida_delta=cfg.optional_float("solver", "yosida_delta"),
            yosida_theta=cfg.getfloat("solver", "yosida_theta"),
            stepper=cfg.get("solver", "stepper"),
            picard_tol=cfg.getfloat("solver", "picard_tol"),
            picard_max_iters=cfg.getint("solver", "picard_max_iters"),
        )
    except ValueError as exc:
        raise ConfigError(f"[solver] {exc}") from None


def build_initial(cfg: ExperimentConfig, op, gen: np.random.Generator) -> tuple[np.ndarray, bool]:
    """Initial datum as ``(values, spectral)``.

    ``zero``; ``smooth`` (Gaussian coefficients times ``|n|^-decay``);
    ``power`` (coefficients ``|n|^-decay``, an H datum given spectrally).
    """
    kind = cfg.get("problem", "initial").lower()
    decay = cfg.getfloat("problem", "initial_decay")
    amp = cfg.getfloat("problem", "initial_amplitude")
    if kind == "zero":
        return np.zeros(op.shape), False
    if kind == "smooth":
        coeffs = gen.standard_normal(op.shape) * op.mode_numbers ** (-decay) * amp
        return from_spectral(coeffs, op), False
    if kind == "power":
        return amp * op.mode_numbers ** (-decay), True
    raise ConfigError(f"[problem] initial must be zero, smooth or power, got {kind!r}")


def build_problem(cfg: ExperimentConfig, gen: np.random.Generator) -> ProblemSpec:
    op = build_operator(cfg)
    initial, spectral = build_initial(cfg, op, gen)
    try:
        return ProblemSpec(
            operator=op,
            drift=build_drift(cfg),
            horizon=cfg.getfloat("problem", "horizon"),
            solver=build_solver(cfg),
            initial=initial,
            initial_spectral=spectral,
            wiener_on=cfg.getbool("noise", "wiener"),
            levy=build_levy(cfg),
            space=build_space(cfg),
            target_delta=cfg.getfloat("problem", "target_delta"),
            cadlag_eps=cfg.getfloat("problem", "cadlag_eps"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
