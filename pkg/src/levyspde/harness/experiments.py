"""Experiment registry: each entry maps a config to output files and a verdict."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..convolution import check_cadlag_pz, gs_statistic, is_levy_in, regularity_report
from ..noise import DATA_STREAM, DiagonalAlphaStable, RngStream
from ..solver import yosida_continuation
from ..spectral import from_spectral
from ..spde import (
    apriori_bound_experiment,
    contraction_experiment,
    generalized_mild_solve,
    sample_forcing,
    solve_spde_path,
    validate_hypotheses,
)
from .config import ConfigError, ExperimentConfig, build_levy, build_operator, build_problem


@dataclass
class Outcome:
    files: dict[str, str] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)
    violations: int = 0


def _data_generator(cfg: ExperimentConfig, tag: int) -> np.random.Generator:
    # data draws live on their own stream, disjoint from every noise stream
    return RngStream(cfg.master_seed, 0).generator(DATA_STREAM, tag)


def run_simulate(cfg: ExperimentConfig, map_fn) -> Outcome:
    spec = build_problem(cfg, _data_generator(cfg, 0))
    report = validate_hypotheses(spec)
    out = Outcome()
    out.files["hypotheses.txt"] = report.to_text()
    if not report.ok:
        out.lines += [f"hypothesis failed: {f}" for f in report.failures()]
        out.violations = len(report.failures())
        return out
    sol = solve_spde_path(spec, RngStream(cfg.master_seed, 0), validate=False)
    out.files["path.csv"] = sol.to_csv(space=spec.space)
    if sol.jumps is not None:
        out.files["jump_path.csv"] = sol.jumps.to_csv()
    out.lines.append(f"mild_residual={sol.diagnostics['mild_residual']!r}")
    return out


def _fmt_bound(value) -> str:
    return "absent" if value is None else repr(float(value))


def run_check_conditions(cfg: ExperimentConfig, map_fn) -> Outcome:
    model = build_levy(cfg)
    if model is None:
        raise ConfigError("check-conditions needs [noise] levy = poisson or stable")
    op = build_operator(cfg)
    delta = cfg.getfloat("conditions", "delta")
    eps = cfg.getfloat("conditions", "eps")
    gamma = cfg.getfloat("conditions", "gamma")
    try:
        bound = check_cadlag_pz(model, delta, eps, op.dim)
        report = regularity_report(model, delta, eps, gamma, op, op.dim)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    levy_in = is_levy_in(model, gamma, op, op.dim)
    line = f"cadlag_bound={_fmt_bound(bound)}, is_levy_in_Hgamma(γ={gamma:g})={str(levy_in).lower()}"
    return Outcome({"conditions.csv": report.to_csv(), "conditions.txt": report.to_text()}, [line])


def run_gs_regularity(cfg: ExperimentConfig, map_fn) -> Outcome:
    model = build_levy(cfg)
    if model is None or isinstance(model, DiagonalAlphaStable):
        raise ConfigError("gs-regularity needs [noise] levy = poisson")
    op = build_operator(cfg)
    h = [2.0**e for e in cfg.getfloats("gs", "h_exponents")]
    res = gs_statistic(model, op, cfg.getfloat("gs", "gamma"), h, cfg.getfloat("gs", "t"),
                       cfg.replicas, RngStream(cfg.master_seed, 0))
    return Outcome({"gs.csv": res.to_csv()},
                   [f"slope={res.slope!r}, stderr={res.slope_stderr!r}"])


def run_yosida_convergence(cfg: ExperimentConfig, map_fn) -> Outcome:
    spec = build_problem(cfg, _data_generator(cfg, 0))
    Z, _ = sample_forcing(spec, RngStream(cfg.master_seed, 0))
    res = yosida_continuation(spec.operator, spec.drift, spec.initial_coeffs(), Z,
                              cfg.getfloat("yosida", "base_delta"), cfg.getint("yosida", "levels"),
                              spec.solver)
    lines = [f"slope={res.slope!r}, envelope_ok={str(res.envelope_ok).lower()}"]
    return Outcome({"convergence.csv": res.to_csv(), "path.csv": res.path.to_csv(space=spec.space)},
                   lines, 0 if res.envelope_ok else 1)


def run_contraction(cfg: ExperimentConfig, map_fn) -> Outcome:
    spec = build_problem(cfg, _data_generator(cfg, 0))
    op = spec.operator
    decay = cfg.getfloat("problem", "initial_decay")
    amp = cfg.getfloat("problem", "initial_amplitude")
    pair = [from_spectral(_data_generator(cfg, tag).standard_normal(op.shape)
                          * op.mode_numbers ** (-decay) * amp, op) for tag in (1, 2)]
    rep = contraction_experiment(spec, pair[0], pair[1], cfg.replicas,
                                 RngStream(cfg.master_seed, 0), map_fn)
    return Outcome({"contraction.csv": rep.to_csv()},
                   [f"max_ratio={rep.max_ratio!r}, violations={rep.violations}"], rep.violations)


def run_apriori(cfg: ExperimentConfig, map_fn) -> Outcome:
    spec = build_problem(cfg, _data_generator(cfg, 0))
    rep = apriori_bound_experiment(spec, cfg.replicas, RngStream(cfg.master_seed, 0), map_fn)
    return Outcome({"apriori.csv": rep.to_csv()},
                   [f"max_ratio={rep.max_ratio!r}, violations={rep.violations}"], rep.violations)


def run_generalized(cfg: ExperimentConfig, map_fn) -> Outcome:
    spec = build_problem(cfg, _data_generator(cfg, 0))
    op = spec.operator
    exponent = cfg.getfloat("generalized", "datum_exponent")
    spec = spec.with_initial(op.mode_numbers ** (-exponent), spectral=True)
    levels = [int(v) for v in cfg.getfloats("generalized", "levels")]
    try:
        sol, table = generalized_mild_solve(spec, levels, RngStream(cfg.master_seed, 0),
                                            cfg.get("generalized", "taper"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    bad = int(not table.within_lx) + int(not table.monotone)
    lines = [f"within_bound={str(table.within_lx).lower()}, monotone={str(table.monotone).lower()}"]
    return Outcome({"cauchy.csv": table.to_csv(), "path.csv": sol.to_csv(space=spec.space)}, lines, bad)


REGISTRY = {
    "simulate": run_simulate,
    "check-conditions": run_check_conditions,
    "gs-regularity": run_gs_regularity,
    "yosida-convergence": run_yosida_convergence,
    "contraction": run_contraction,
    "apriori": run_apriori,
    "generalized": run_generalized,
}
