"""Figure experiments as deterministic CSV tables.

Each experiment expands into independent points (sweep value x case x
seed). A point builds its own topology from its seed, so points can run in
any order or in parallel; rows are emitted in expansion order, followed by
one ``seed=mean`` summary row per (sweep value, case).

AP-count sweeps use nested deployments: the fading for ``M`` APs is the
first ``M`` rows of the largest deployment of the same seed.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import montecarlo as mc
from . import scaling
from .closed_form import (collocated_allocation, collocated_rate_report, full_power_downlink,
                          orthogonal_scheme_sum_se, rate_report, uniform_allocation)
from .config import SystemConfig, from_mapping
from .model import (LargeScaleFading, collocated_large_scale, dbm_to_snr, draw_large_scale,
                    normalize_powers)
from .power_alloc import build_coefficients, model_sum_se, run_algorithm1, uniform_point

EXPERIMENTS = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "custom")

DESK_AP_SWEEP = (25, 50, 100, 200, 400)
ENERGY_DBM = 10.0  # E_p, E_u, E_r of the scaling figures
BUDGET_DBM = 10.0  # P of the allocation figure


class ExperimentError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run.

    ``sweep`` is ``(parameter, values)``; ``None`` takes the experiment's
    default sweep. For ``custom`` the parameter may be any config key and an
    empty value list gives a single row at the base config.
    """

    name: str
    sweep: tuple[str, tuple[float, ...]] | None = None
    seeds: tuple[int, ...] = (0,)
    overrides: dict[str, Any] = field(default_factory=dict)
    monte_carlo: bool = True

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ExperimentError(f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        if len(self.seeds) == 0:
            raise ExperimentError("at least one seed is required")
        if self.sweep is not None:
            param, values = self.sweep
            if any(not math.isfinite(float(v)) for v in values):
                raise ExperimentError("sweep values must be finite")
            if self.name != "custom" and len(values) == 0:
                raise ExperimentError("sweep needs at least one value")
            if self.name != "custom" and param != _DEFAULTS[self.name][0]:
                raise ExperimentError(f"{self.name} sweeps {_DEFAULTS[self.name][0]}, not {param}")


# --- per-point evaluators ---------------------------------------------------

def _nested_fading(cfg: SystemConfig, M: int, M_max: int, p_p: float | None = None):
    big = cfg.replace(num_aps=max(M, M_max))
    top, ls = draw_large_scale(big, p_p)
    return top.first_aps(M), ls.aps(M)


def _uniform(ls: LargeScaleFading, cfg: SystemConfig):
    p_p, p_u, p_r = normalize_powers(cfg)
    return uniform_allocation(ls, cfg.antennas_per_ap, p_p, p_u, p_r)


def _point_se(cfg: SystemConfig, ls: LargeScaleFading, mc_on: bool, baselines: bool, top=None):
    pa = _uniform(ls, cfg)
    out = {"closed_form_sum_se": rate_report(ls, pa, cfg).sum_se}
    if mc_on:
        s = mc.simulate(ls, pa, cfg.antennas_per_ap, cfg.num_realizations, cfg.rng_seed)
        out["mc_sum_se"] = mc.rate_report_from_samples(s, pa, cfg.prelog).sum_se
        out["mc_std_error"] = mc.bootstrap_sum_se(s, pa, cfg.prelog, cfg.rng_seed)
        if baselines:
            out["genie_sum_se"] = mc.genie_rate_report(s, pa, cfg.prelog).sum_se
    if baselines:
        ls_col = collocated_large_scale(top, cfg)
        pa_col = collocated_allocation(pa, ls_col, ls.num_aps, cfg.antennas_per_ap)
        out["collocated_sum_se"] = collocated_rate_report(ls_col, pa_col, cfg).sum_se
        out["orthogonal_sum_se"] = orthogonal_scheme_sum_se(ls, pa, cfg)
    return out


def _run_fig1(cfg, value, case, mc_on, M_max):
    top, ls = _nested_fading(cfg, int(value), M_max)
    return _point_se(cfg.replace(num_aps=int(value)), ls, mc_on, True, top)


def _run_fig2(cfg, value, case, mc_on, M_max):
    M = case["num_aps"]
    cfg = cfg.replace(num_aps=M, uplink_power_dbm=float(value), pilot_power_dbm=float(value))
    _, ls = draw_large_scale(cfg)
    return _point_se(cfg, ls, mc_on, False)


def _run_scaling(cfg, value, case, mc_on, M_max):
    M = int(value)
    E = float(dbm_to_snr(ENERGY_DBM, cfg))
    scen = scaling.ScalingScenario(case["scenario"], case["alpha_exp"], case["beta_exp"],
                                   case["gamma_exp"], E_p=E, E_u=E, E_r=E)
    cfg = cfg.replace(num_aps=M)
    _, ls = _nested_fading(cfg, M, M_max)
    exact = scaling.exact_report(ls.alpha_A, ls.alpha_B, scen, cfg).sum_se
    asym = {f: scaling.asymptotic_sinrs(ls, scen, cfg, f).rates(cfg.prelog).sum_se
            for f in ("consistent", "printed")}
    try:
        _, rates = scaling.corollary_rates(ls, scen, cfg, form="consistent")
        cor = float(rates.sum())
    except ValueError:
        cor = float("nan")
    return {"exact_sum_se": exact, "asymptotic_sum_se": asym["consistent"],
            "asymptotic_printed_sum_se": asym["printed"], "corollary_sum_se": cor,
            "limit": scaling.classify_limit(scen)["pair_rate"].kind}


def _run_fig7(cfg, value, case, mc_on, M_max):
    M = int(value)
    pp = case["pilot_power_dbm"]
    cfg = cfg.replace(num_aps=M, pilot_power_dbm=pp)
    _, ls = _nested_fading(cfg, M, M_max)
    P = float(dbm_to_snr(BUDGET_DBM, cfg))
    N = cfg.antennas_per_ap
    co = build_coefficients(ls, full_power_downlink(ls, N), N)
    uni = float(model_sum_se(co, *uniform_point(ls.num_pairs, P), cfg.prelog))
    res = run_algorithm1(ls, cfg, P)
    return {"uniform_sum_se": uni, "optimized_sum_se": res.sum_se,
            "improvement_pct": 100.0 * (res.sum_se / uni - 1.0) if uni > 0 else float("nan"),
            "iterations": res.iterations, "converged": int(res.converged)}


def _run_custom(cfg, value, case, mc_on, M_max):
    _, ls = draw_large_scale(cfg)
    return _point_se(cfg, ls, mc_on, False)


def _scen(s, a=0.0, b=0.0, c=0.0):
    return {"scenario": s, "alpha_exp": a, "beta_exp": b, "gamma_exp": c}


_SCALING_COLS = ["exact_sum_se", "asymptotic_sum_se", "asymptotic_printed_sum_se",
                 "corollary_sum_se", "limit"]

# name -> (swept parameter, default values, cases, evaluator, value columns)
_DEFAULTS = {
    "fig1": ("num_aps", (10, 25, 50, 100, 200, 400), [{}], _run_fig1,
             ["closed_form_sum_se", "mc_sum_se", "mc_std_error", "genie_sum_se",
              "collocated_sum_se", "orthogonal_sum_se"]),
    "fig2": ("uplink_power_dbm", (-10.0, 0.0, 10.0, 20.0, 30.0, 40.0),
             [{"num_aps": 100}, {"num_aps": 200}], _run_fig2,
             ["closed_form_sum_se", "mc_sum_se", "mc_std_error"]),
    "fig3": ("num_aps", DESK_AP_SWEEP, [_scen("A", a) for a in (0.7, 1.0, 1.4)], _run_scaling,
             _SCALING_COLS),
    "fig4": ("num_aps", DESK_AP_SWEEP,
             [_scen("B", 0, 1.0, 0.5), _scen("B", 0, 0.5, 1.0), _scen("B", 0, 1.0, 1.0)],
             _run_scaling, _SCALING_COLS),
    "fig5": ("num_aps", DESK_AP_SWEEP,
             [_scen("B", 0, 1.5, 0.5), _scen("B", 0, 0.5, 1.5), _scen("B", 0, 1.2, 1.2),
              _scen("B", 0, 0.5, 0.5), _scen("B", 0, 0.3, 0.7)],
             _run_scaling, _SCALING_COLS),
    "fig6": ("num_aps", DESK_AP_SWEEP,
             [_scen("C", 1.1, 1.2, 0.4), _scen("C", 0.9, 1.4, 0.6), _scen("C", 0.3, 0.5, 0.4),
              _scen("C", 0.4, 0.6, 0.2), _scen("C", 0.4, 0.2, 0.6)],
             _run_scaling, _SCALING_COLS),
    "fig7": ("num_aps", (20, 50, 100), [{"pilot_power_dbm": 10.0}, {"pilot_power_dbm": 15.0}],
             _run_fig7, ["uniform_sum_se", "optimized_sum_se", "improvement_pct",
                         "iterations", "converged"]),
    "custom": ("", (), [{}], _run_custom, ["closed_form_sum_se", "mc_sum_se", "mc_std_error"]),
}


def _evaluate(task):
    name, cfg, param, value, case, mc_on, M_max = task
    if name == "custom" and param:
        cfg = from_mapping({param: value}, cfg)
    return _DEFAULTS[name][3](cfg, value, case, mc_on, M_max)


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, np.ndarray) and v.ndim == 0:
        v = v[()]
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.9g" % float(v)
    return str(v)


def run_experiment(spec: ExperimentSpec, cfg: SystemConfig, jobs: int = 1) -> Table:
    """Evaluate every point of ``spec`` and return the table."""
    param, values, cases, _, value_cols = _DEFAULTS[spec.name]
    if spec.sweep is not None:
        param, values = spec.sweep[0], tuple(spec.sweep[1])
    if spec.name == "custom" and not values:
        param, values = "", (float("nan"),)
    cfg = from_mapping(dict(spec.overrides), cfg)
    mc_on = spec.monte_carlo and "mc_sum_se" in value_cols
    cols = [c for c in value_cols if mc_on or not c.startswith(("mc_", "genie"))]
    M_max = int(max(values)) if param == "num_aps" else cfg.num_aps

    case_keys = list(cases[0].keys())
    tasks, keys = [], []
    for value in values:
        for case in cases:
            for seed in spec.seeds:
                tasks.append((spec.name, cfg.replace(rng_seed=int(seed)), param, value, case,
                              mc_on, M_max))
                keys.append((value, tuple(case.values()), seed))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_evaluate, tasks))
    else:
        results = [_evaluate(t) for t in tasks]

    header = ["parameter", "value", *case_keys, "seed", *cols]
    pname = param or "none"
    rows, groups = [], {}
    for (value, case_vals, seed), res in zip(keys, results):
        rows.append([pname, value, *case_vals, seed, *[res[c] for c in cols]])
        groups.setdefault((value, case_vals), []).append(res)
    if len(spec.seeds) > 1:
        for (value, case_vals), group in groups.items():
            summary = []
            for c in cols:
                vals = [g[c] for g in group]
                if isinstance(vals[0], str):
                    summary.append(vals[0] if len(set(vals)) == 1 else "mixed")
                else:
                    summary.append(float(np.mean(vals)))
            rows.append([pname, value, *case_vals, "mean", *summary])
    return Table(header, rows)


def default_sweep(name: str) -> tuple[str, tuple]:
    param, values, *_ = _DEFAULTS[name]
    return param, values
