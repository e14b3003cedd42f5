"""Registry of canned sweep scenarios.

Each scenario bundles the model setup and grid behind one of the standard
plots (currents and derivatives versus the modulating temperature,
amplification versus time / coupling / temperature, detached-ancilla cases,
anharmonic-ancilla cases, memory measures, the qubit-ancilla variant, and
the two-qubit device).  A scenario computes one or more tables; writing
files and manifests is the caller's job.

Grids are chosen so every scenario completes on a laptop while still
resolving the structure it exists to show (collision-period jumps, the
divergence of alpha at the critical temperature, the sharp coupling peak).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import metrics, nonmarkov
from .model import ModelConfig
from .output import (Table, U_CURRENT, U_DERIV, U_NONE, U_TEMP, U_TIME)

__all__ = [
    "Scenario",
    "RunContext",
    "SCENARIOS",
    "scenario_names",
    "build_tables",
]


@dataclass(frozen=True)
class RunContext:
    """Execution knobs shared by every scenario builder."""

    workers: int = 1
    boundary: str = "left"
    search: nonmarkov.SearchConfig = field(
        default_factory=nonmarkov.SearchConfig)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    build: Callable[[Optional[Dict], RunContext], List[Table]] = field(
        repr=False)


# run-level keys recognized in overrides; the rest go to the model config
_RUN_KEYS = {"t", "t_max"}


def _split_overrides(overrides: Optional[Dict]) -> Tuple[Dict, Dict]:
    overrides = dict(overrides or {})
    run = {k: overrides.pop(k) for k in list(overrides) if k in _RUN_KEYS}
    return run, overrides


def _make_config(model: Dict, *, preset: str = "baseline",
                 allow_preset: bool = True, **forced) -> ModelConfig:
    """Model config from user overrides plus scenario-forced values.

    Scenarios that exist to compare coupling presets set
    ``allow_preset=False`` and pin their own; elsewhere a ``preset``
    override selects the named coupling set.
    """
    over = {**model, **forced}
    user_preset = over.pop("preset", None)
    if allow_preset and user_preset is not None:
        preset = user_preset
    return ModelConfig.default(preset, **over)


def _time_grid(config: ModelConfig, t_max: float) -> np.ndarray:
    n = int(round(t_max / config.sample_dt))
    return np.round(np.arange(1, n + 1) * config.sample_dt, 12)


def _alpha_value(point: metrics.SweepPoint, terminal: str) -> float:
    if point.error:
        return math.nan
    return point.alphas[terminal].alpha


def _sweep_table(
    stem: str,
    axis_col: Tuple[str, str],
    sweeps: List[Tuple[str, metrics.SweepResult, str]],
) -> Table:
    """Merge sweeps sharing one grid into a column-per-curve table."""
    grid = sweeps[0][1].grid
    columns = [axis_col] + [(label, U_NONE) for label, _, _ in sweeps]
    rows, errors = [], []
    for i, v in enumerate(grid):
        row = [float(v)]
        errs = []
        for _, res, terminal in sweeps:
            p = res.values[i]
            row.append(_alpha_value(p, terminal))
            if p.error:
                errs.append(p.error)
        rows.append(row)
        errors.append("; ".join(errs))
    return Table(stem=stem, columns=columns, rows=rows, errors=errors)


def _fig2(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    cfg = _make_config(model)
    t = float(run.get("t", 1.0))
    grid = np.round(np.arange(4.0, 10.0 + 1e-9, 0.25), 10)
    res = metrics.sweep(cfg, "T_M", grid, t=t, h=cfg.stencil_h,
                        boundary=ctx.boundary, workers=ctx.workers)
    terms = cfg.system_terminals
    columns = [("T_M", U_TEMP)]
    columns += [(f"J_{x}", U_CURRENT) for x in terms]
    columns += [(f"dJ{x}_dTM", U_DERIV) for x in terms]
    rows, errors = [], []
    for p in res.values:
        if p.error:
            rows.append([p.value] + [math.nan] * (2 * len(terms)))
            errors.append(p.error)
        else:
            rows.append([p.value] + [p.currents[x] for x in terms]
                        + [p.derivatives[x] for x in terms])
            errors.append("")
    return [Table("fig2", columns, rows, errors)]


def _fig3(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    t = float(run.get("t", 1.0))
    grid = np.round(np.arange(4.0, 10.0 + 1e-9, 0.25), 10)
    sweeps = []
    for g in (3.5, 4.0, 4.5):
        cfg = _make_config(model, g=g)
        res = metrics.sweep(cfg, "T_M", grid, t=t, h=cfg.stencil_h,
                            boundary=ctx.boundary, workers=ctx.workers)
        sweeps.append((f"alpha_L[g={g}]", res, "L"))
    return [_sweep_table("fig3", ("T_M", U_TEMP), sweeps)]


def _fig4(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    cfg = _make_config(model)
    t_max = float(run.get("t_max", 5.0))
    grid = _time_grid(cfg, t_max)
    res = metrics.sweep(cfg, "t", grid, h=cfg.stencil_h,
                        boundary=ctx.boundary)
    sweeps = [("alpha_L", res, "L"), ("alpha_R", res, "R")]
    return [_sweep_table("fig4", ("t", U_TIME), sweeps)]


def _fig5(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    cfg = _make_config(model)
    t = float(run.get("t", 1.0))
    grid = np.round(np.arange(3.5, 4.5 + 1e-9, 0.01), 10)
    res = metrics.sweep(cfg, "g", grid, t=t, h=cfg.stencil_h,
                        boundary=ctx.boundary, workers=ctx.workers)
    sweeps = [("alpha_L", res, "L"), ("alpha_R", res, "R")]
    return [_sweep_table("fig5", ("g", "1/" + U_TIME), sweeps)]


def _detached_configs(model: Dict) -> Dict[str, ModelConfig]:
    base = dict(T_L=4.0, T_M=8.0, T_R=10.0)
    base.update(model)
    return {
        "right-detached": _make_config(base, attach_R=False),
        "left-detached": _make_config(base, attach_L=False),
    }


def _fig6(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    t_max = float(run.get("t_max", 3.0))
    sweeps = []
    for case, cfg in _detached_configs(model).items():
        grid = _time_grid(cfg, t_max)
        res = metrics.sweep(cfg, "t", grid, terminals=("L", "R"),
                            h=cfg.stencil_h, boundary=ctx.boundary)
        sweeps.append((f"alpha_L[{case}]", res, "L"))
        sweeps.append((f"alpha_R[{case}]", res, "R"))
    return [_sweep_table("fig6", ("t", U_TIME), sweeps)]


def _fig7(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    t = float(run.get("t", 0.7))
    grid = np.round(np.arange(3.5, 4.5 + 1e-9, 0.01), 10)
    sweeps = []
    for case, cfg in _detached_configs(model).items():
        res = metrics.sweep(cfg, "g", grid, terminals=("L", "R"), t=t,
                            h=cfg.stencil_h, boundary=ctx.boundary,
                            workers=ctx.workers)
        sweeps.append((f"alpha_L[{case}]", res, "L"))
        sweeps.append((f"alpha_R[{case}]", res, "R"))
    return [_sweep_table("fig7", ("g", "1/" + U_TIME), sweeps)]


def _fig8(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    t = float(run.get("t", 0.4))
    t_max = float(run.get("t_max", 3.0))
    temp_grid = np.round(np.arange(0.5, 12.0 + 1e-9, 0.25), 10)
    temp_sweeps, time_sweeps = [], []
    for preset in ("symmetric", "asymmetric"):
        cfg = _make_config(model, preset=preset, allow_preset=False)
        res_T = metrics.sweep(cfg, "T_M", temp_grid, t=t, h=cfg.stencil_h,
                              boundary=ctx.boundary, workers=ctx.workers)
        temp_sweeps.append((f"alpha_L[{preset}]", res_T, "L"))
        temp_sweeps.append((f"alpha_R[{preset}]", res_T, "R"))
        res_t = metrics.sweep(cfg, "t", _time_grid(cfg, t_max),
                              h=cfg.stencil_h, boundary=ctx.boundary)
        time_sweeps.append((f"alpha_L[{preset}]", res_t, "L"))
        time_sweeps.append((f"alpha_R[{preset}]", res_t, "R"))
    return [
        _sweep_table("fig8_temperature", ("T_M", U_TEMP), temp_sweeps),
        _sweep_table("fig8_time", ("t", U_TIME), time_sweeps),
    ]


_EPSILONS_FIG9 = (0.0, 0.01, 0.03, 0.05, -0.01, -0.03, -0.05)


def _nonlinear_config(model: Dict, eps: float, preset: str = "baseline",
                      allow_preset: bool = True) -> ModelConfig:
    if eps == 0.0:
        return _make_config(model, preset=preset, allow_preset=allow_preset,
                            kind="qutrit-linear", epsilon=0.0)
    return _make_config(model, preset=preset, allow_preset=allow_preset,
                        kind="qutrit-nonlinear", epsilon=eps)


def _eps_label(eps: float) -> str:
    return "alpha_L[linear]" if eps == 0.0 else f"alpha_L[eps={eps}]"


def _fig9(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    t = float(run.get("t", 1.0))
    grid = np.round(np.arange(4.0, 10.0 + 1e-9, 0.25), 10)
    sweeps = []
    for eps in _EPSILONS_FIG9:
        cfg = _nonlinear_config(model, eps)
        res = metrics.sweep(cfg, "T_M", grid, t=t, h=cfg.stencil_h,
                            boundary=ctx.boundary, workers=ctx.workers)
        sweeps.append((_eps_label(eps), res, "L"))
    return [_sweep_table("fig9", ("T_M", U_TEMP), sweeps)]


def _fig10(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    t_max = float(run.get("t_max", 3.0))
    sweeps = []
    for eps in (0.0, -0.01, 0.01):
        cfg = _nonlinear_config(model, eps)
        res = metrics.sweep(cfg, "t", _time_grid(cfg, t_max),
                            h=cfg.stencil_h, boundary=ctx.boundary)
        sweeps.append((_eps_label(eps), res, "L"))
    return [_sweep_table("fig10", ("t", U_TIME), sweeps)]


def _fig11(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    t = float(run.get("t", 0.4))
    grid = np.round(np.arange(0.5, 12.0 + 1e-9, 0.25), 10)
    tables = []
    for preset in ("symmetric", "asymmetric"):
        sweeps = []
        for eps in (0.0, -0.01, 0.01):
            cfg = _nonlinear_config(model, eps, preset=preset,
                                    allow_preset=False)
            res = metrics.sweep(cfg, "T_M", grid, t=t, h=cfg.stencil_h,
                                boundary=ctx.boundary, workers=ctx.workers)
            sweeps.append((_eps_label(eps), res, "L"))
        tables.append(_sweep_table(f"fig11_{preset}", ("T_M", U_TEMP),
                                   sweeps))
    return tables


def _fig12(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    t_max = float(run.get("t_max", 3.0))
    cutoffs = np.round(np.arange(0.1, t_max + 1e-9, 0.1), 10)
    tables = []
    for preset in ("baseline", "symmetric", "asymmetric"):
        cfg = _make_config(model, preset=preset, allow_preset=False)
        columns = [("t", U_TIME)]
        series = {}
        for x in cfg.system_terminals:
            series[x] = nonmarkov.blp_series(cfg, x, cutoffs, ctx.search,
                                             boundary=ctx.boundary)
            columns.append((f"N_{x}", U_NONE))
        rows = [[float(c)] + [float(series[x][i])
                              for x in cfg.system_terminals]
                for i, c in enumerate(cutoffs)]
        tables.append(Table(f"fig12_{preset}", columns, rows,
                            [""] * len(rows)))
    return tables


def _fig13(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    cfg = _make_config({"kind": "qubit", **model})
    t_star = float(run.get("t", 9.7))
    t_max = float(run.get("t_max", 10.0))
    res_t = metrics.sweep(cfg, "t", _time_grid(cfg, t_max), h=cfg.stencil_h,
                          boundary=ctx.boundary)
    time_sweeps = [("alpha_L", res_t, "L"), ("alpha_R", res_t, "R")]
    temp_grid = np.round(np.arange(4.0, 12.0 + 1e-9, 0.25), 10)
    res_T = metrics.sweep(cfg, "T_M", temp_grid, t=t_star, h=cfg.stencil_h,
                          boundary=ctx.boundary, workers=ctx.workers)
    temp_sweeps = [("alpha_L", res_T, "L"), ("alpha_R", res_T, "R")]
    return [
        _sweep_table("fig13_time", ("t", U_TIME), time_sweeps),
        _sweep_table("fig13_temperature", ("T_M", U_TEMP), temp_sweeps),
    ]


def _appendixA(overrides: Optional[Dict], ctx: RunContext) -> List[Table]:
    run, model = _split_overrides(overrides)
    cfg = _make_config({"T_R": 4.0, **model}, preset="appendixA",
                       allow_preset=False)
    t = float(run.get("t", 1.0))
    grid = np.round(np.arange(0.2, 4.0 + 1e-9, 0.05), 10)
    res = metrics.sweep(cfg, "T_M", grid, terminals=("R",), t=t,
                        h=cfg.stencil_h, boundary=ctx.boundary,
                        workers=ctx.workers)
    columns = [("T_L", U_TEMP), ("J_L", U_CURRENT), ("J_R", U_CURRENT),
               ("dJL_dTL", U_DERIV), ("dJR_dTL", U_DERIV),
               ("alpha", U_NONE)]
    rows, errors = [], []
    for p in res.values:
        if p.error:
            rows.append([p.value] + [math.nan] * 5)
            errors.append(p.error)
        else:
            rows.append([
                p.value, p.currents["L"], p.currents["R"],
                p.derivatives["L"], p.derivatives["R"],
                p.alphas["R"].alpha,
            ])
            errors.append("")
    return [Table("appendixA", columns, rows, errors)]


SCENARIOS: Dict[str, Scenario] = {
    s.name: s for s in (
        Scenario("fig2", "currents and their T_M-derivatives at t = 1",
                 _fig2),
        Scenario("fig3", "alpha_L vs T_M for g in {3.5, 4, 4.5}", _fig3),
        Scenario("fig4", "alpha_L, alpha_R vs time at T_M = 10", _fig4),
        Scenario("fig5", "alpha vs coupling g at t = 1", _fig5),
        Scenario("fig6", "detached-ancilla amplification vs time", _fig6),
        Scenario("fig7", "detached-ancilla amplification vs g at t = 0.7",
                 _fig7),
        Scenario("fig8", "symmetric/asymmetric coupling: alpha vs T_M and t",
                 _fig8),
        Scenario("fig9", "anharmonic ancillas: alpha_L vs T_M at t = 1",
                 _fig9),
        Scenario("fig10", "anharmonic ancillas: alpha_L vs time at T_M = 10",
                 _fig10),
        Scenario("fig11", "symmetric/asymmetric with anharmonic ancillas",
                 _fig11),
        Scenario("fig12",
                 "trace-distance backflow measure per qubit vs cutoff",
                 _fig12),
        Scenario("fig13", "qubit ancillas: alpha vs time and vs T_M",
                 _fig13),
        Scenario("appendixA", "two-qubit device: alpha vs T_L at t = 1",
                 _appendixA),
    )
}


def scenario_names() -> List[str]:
    return list(SCENARIOS)


def build_tables(
    name: str,
    overrides: Optional[Dict] = None,
    *,
    workers: int = 1,
    boundary: str = "left",
    search: Optional[nonmarkov.SearchConfig] = None,
) -> List[Table]:
    if name not in SCENARIOS:
        known = ", ".join(SCENARIOS)
        raise ValueError(f"unknown scenario {name!r}; known: {known}")
    ctx = RunContext(workers=workers, boundary=boundary,
                     search=search or nonmarkov.SearchConfig())
    return SCENARIOS[name].build(overrides, ctx)
