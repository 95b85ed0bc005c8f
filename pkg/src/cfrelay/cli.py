"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import montecarlo as mc
from . import scaling
from .config import ConfigError, SystemConfig, dump_config, load_config, parse_overrides
from .experiments import EXPERIMENTS, ExperimentError, ExperimentSpec, Table, run_experiment
from .gp import GpError
from .model import dbm_to_snr, draw_large_scale, noise_power, normalize_powers
from .closed_form import rate_report, uniform_allocation
from .power_alloc import run_algorithm1

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file with config keys")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    common.add_argument("--out", type=Path, help="write output here instead of stdout")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers")

    p = _Parser(prog="cfrelay", description="Two-way cell-free massive MIMO relaying: "
                "spectral efficiency, scaling laws and power allocation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("describe", parents=[common], help="print the resolved configuration")
    sub.add_parser("se-exact", parents=[common], help="closed-form per-pair rates")

    s = sub.add_parser("se-mc", parents=[common], help="Monte-Carlo sum SE next to the closed form")
    s.add_argument("--realizations", type=int, help="defaults to num_realizations")

    s = sub.add_parser("scaling", parents=[common], help="exact vs large-M sum SE over M")
    s.add_argument("--scenario", choices=("A", "B", "C"), required=True)
    s.add_argument("--alpha", type=float, default=0.0, help="pilot power exponent")
    s.add_argument("--beta", type=float, default=0.0, help="user power exponent")
    s.add_argument("--gamma", type=float, default=0.0, help="relay power exponent")
    s.add_argument("--energy-dbm", type=float, default=10.0, help="E_p = E_u = E_r in dBm")
    s.add_argument("--aps", type=_int_list, default=[25, 50, 100, 200, 400])
    s.add_argument("--form", choices=("consistent", "printed"), default="consistent")

    s = sub.add_parser("optimize", parents=[common], help="successive GP power allocation")
    s.add_argument("--budget-dbm", type=float, default=10.0, help="total power budget P")
    s.add_argument("--rate-min", type=float, default=0.0, help="per-pair rate floor [bit/s/Hz]")
    s.add_argument("--theta", type=float, default=1.1)
    s.add_argument("--eps", type=float, default=1e-3)
    s.add_argument("--max-iter", type=int, default=50)

    s = sub.add_parser("figures", parents=[common], help="figure experiments as CSV")
    s.add_argument("experiment", choices=EXPERIMENTS)
    s.add_argument("--seeds", type=_int_list, default=[0])
    s.add_argument("--sweep", metavar="KEY=V1,V2,...", help="replace the default sweep")
    s.add_argument("--no-mc", action="store_true", help="skip Monte-Carlo columns")
    return p


def _config(args) -> SystemConfig:
    cfg = load_config(args.config) if args.config else SystemConfig()
    return parse_overrides(args.overrides, cfg)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _describe(cfg: SystemConfig, args) -> str:
    p_p, p_u, p_r = normalize_powers(cfg)
    extra = [
        f"noise_power_w = {noise_power(cfg):.6e}",
        f"p_p_normalized = {p_p:.6e}",
        f"p_u_normalized = {p_u:.6e}",
        f"p_r_normalized = {p_r:.6e}",
        f"prelog = {cfg.prelog:.6g}",
    ]
    return dump_config(cfg) + "\n".join(extra) + "\n"


def _se_exact(cfg: SystemConfig, args) -> str:
    _, ls = draw_large_scale(cfg)
    p_p, p_u, p_r = normalize_powers(cfg)
    r = rate_report(ls, uniform_allocation(ls, cfg.antennas_per_ap, p_p, p_u, p_r), cfg)
    rows = [[i, r.gamma_mac_pair[i], r.r_mac_pair[i], r.r_mac_dir[i, 0], r.r_mac_dir[i, 1],
             r.r_bc_dir[i, 0], r.r_bc_dir[i, 1], r.r_pair[i]] for i in range(ls.num_pairs)]
    rows.append(["sum", np.nan, r.r_mac_pair.sum(), np.nan, np.nan, np.nan, np.nan, r.sum_se])
    return Table(["pair", "sinr_mac_pair", "rate_mac_pair", "rate_mac_A", "rate_mac_B",
                  "rate_bc_A", "rate_bc_B", "rate_pair"], rows).to_csv()


def _se_mc(cfg: SystemConfig, args) -> str:
    _, ls = draw_large_scale(cfg)
    p_p, p_u, p_r = normalize_powers(cfg)
    pa = uniform_allocation(ls, cfg.antennas_per_ap, p_p, p_u, p_r)
    n = args.realizations or cfg.num_realizations
    est = mc.mc_sum_se(ls, pa, cfg, n, cfg.rng_seed, jobs=args.jobs)
    exact = rate_report(ls, pa, cfg).sum_se
    return Table(["realizations", "closed_form_sum_se", "mc_sum_se", "mc_std_error", "z_score"],
                 [[n, exact, est.value, est.std_error, est.z_score(exact)]]).to_csv()


def _scaling(cfg: SystemConfig, args) -> str:
    E = float(dbm_to_snr(args.energy_dbm, cfg))
    try:
        scen = scaling.ScalingScenario(args.scenario, args.alpha, args.beta, args.gamma, E, E, E)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not args.aps or min(args.aps) < 1:
        raise UsageError("--aps needs positive AP counts")
    M_max = max(args.aps)
    _, ls_all = draw_large_scale(cfg.replace(num_aps=M_max))
    rows = []
    kind = scaling.classify_limit(scen)["pair_rate"].kind
    for M in args.aps:
        c = cfg.replace(num_aps=M)
        ls = ls_all.aps(M)
        exact = scaling.exact_report(ls.alpha_A, ls.alpha_B, scen, c).sum_se
        asym = scaling.asymptotic_sinrs(ls, scen, c, args.form).rates(c.prelog).sum_se
        try:
            cor = float(scaling.corollary_rates(ls, scen, c, form=args.form)[1].sum())
        except ValueError:
            cor = float("nan")
        rows.append([M, exact, asym, cor, kind])
    return Table(["num_aps", "exact_sum_se", "asymptotic_sum_se", "corollary_sum_se", "limit"],
                 rows).to_csv()


def _optimize(cfg: SystemConfig, args) -> str:
    _, ls = draw_large_scale(cfg)
    P = float(dbm_to_snr(args.budget_dbm, cfg))
    res = run_algorithm1(ls, cfg, P, R_min=args.rate_min, theta=args.theta, eps=args.eps,
                         max_iter=args.max_iter)
    rows = [[i, res.eta_tilde_A[i], res.eta_tilde_B[i], res.gamma[i], res.gamma_A[i], res.gamma_B[i]]
            for i in range(ls.num_pairs)]
    text = Table(["pair", "eta_tilde_A", "eta_tilde_B", "sinr_pair", "sinr_dir_A", "sinr_dir_B"],
                 rows).to_csv()
    summary = Table(["p_r", "budget", "initial_sum_se", "sum_se", "iterations", "converged"],
                    [[res.p_r, P, res.initial_sum_se, res.sum_se, res.iterations, res.converged]])
    sys.stderr.write(res.message + "\n")
    return text + "\n" + summary.to_csv()


def _figures(cfg: SystemConfig, args) -> str:
    sweep = None
    if args.sweep:
        key, sep, vals = args.sweep.partition("=")
        if not sep:
            raise UsageError("--sweep must look like key=v1,v2,...")
        try:
            sweep = (key.strip(), tuple(_float_list(vals)))
        except argparse.ArgumentTypeError as exc:
            raise UsageError(str(exc)) from None
    spec = ExperimentSpec(args.experiment, sweep, tuple(args.seeds), {}, not args.no_mc)
    return run_experiment(spec, cfg, jobs=args.jobs).to_csv()


_COMMANDS = {"describe": _describe, "se-exact": _se_exact, "se-mc": _se_mc,
             "scaling": _scaling, "optimize": _optimize, "figures": _figures}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        cfg = _config(args)
        text = _COMMANDS[args.command](cfg, args)
    except (UsageError, ConfigError, ExperimentError, OSError) as exc:
        sys.stderr.write(f"cfrelay: error: {exc}\n")
        return EXIT_USAGE
    except (GpError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        sys.stderr.write(f"cfrelay: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    _emit(text, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
