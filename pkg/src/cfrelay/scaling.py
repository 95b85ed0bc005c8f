"""Power-scaling laws as the number of APs grows.

Three scenarios shrink transmit powers with M:

* ``A``: pilot power ``p_p = E_p / M**a``, data powers fixed.
* ``B``: ``p_u = E_u / M**b`` and ``p_r = E_r / M**c``, pilot power fixed.
* ``C``: all three scaled.

The ``*_sinrs`` functions evaluate the large-M SINR forms at finite M. The
``*_limits`` functions evaluate the same expressions with the energies in
place of the scaled powers, i.e. exactly ``M`` times the finite-M form at
unit exponent sum. Uplink coefficients are 1 and the downlink uses a
uniform per-AP coefficient, which cancels from every BC SINR.

``form="printed"`` (default) follows the published large-M expressions of
Scenarios A and C, which are written in terms of the gains rather than
their squares. ``form="consistent"`` substitutes the low-pilot-SNR estimate
variance ``phi ~ tau_p p_p alpha**2`` into the exact SINRs instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closed_form import (PowerAllocation, RateReport, combine_rates, full_power_downlink,
                          rate_report)
from .config import SystemConfig
from .model import LargeScaleFading, normalize_powers

_TOL = 1e-9


@dataclass(frozen=True)
class ScalingScenario:
    scenario: str
    alpha_exp: float = 0.0
    beta_exp: float = 0.0
    gamma_exp: float = 0.0
    E_p: float = 1.0
    E_u: float = 1.0
    E_r: float = 1.0

    def __post_init__(self):
        if self.scenario not in ("A", "B", "C"):
            raise ValueError(f"scenario must be A, B or C, got {self.scenario!r}")
        for name in ("alpha_exp", "beta_exp", "gamma_exp"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("E_p", "E_u", "E_r"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative")

    @property
    def scales_pilot(self) -> bool:
        return self.scenario in ("A", "C")

    @property
    def scales_data(self) -> bool:
        return self.scenario in ("B", "C")

    def powers(self, M: int, cfg: SystemConfig) -> tuple[float, float, float]:
        """``(p_p, p_u, p_r)`` at ``M`` APs; unscaled powers come from ``cfg``."""
        p_p, p_u, p_r = normalize_powers(cfg)
        if self.scales_pilot:
            p_p = self.E_p / M ** self.alpha_exp
        if self.scales_data:
            p_u = self.E_u / M ** self.beta_exp
            p_r = self.E_r / M ** self.gamma_exp
        return p_p, p_u, p_r

    def mac_order(self) -> float:
        """Exponent ``k`` such that the MAC SINRs grow like ``M**k``."""
        return 1.0 - {"A": self.alpha_exp, "B": self.beta_exp,
                      "C": self.alpha_exp + self.beta_exp}[self.scenario]

    def bc_order(self) -> float:
        return 1.0 - {"A": self.alpha_exp, "B": self.gamma_exp,
                      "C": self.alpha_exp + self.gamma_exp}[self.scenario]


@dataclass(frozen=True)
class SinrSet:
    mac_pair: np.ndarray  # (W,)
    mac_dir: np.ndarray  # (W, 2), columns A, B
    bc_dir: np.ndarray  # (W, 2)

    def rates(self, prelog: float) -> RateReport:
        return combine_rates(prelog, self.mac_pair, self.mac_dir, self.bc_dir)


@dataclass(frozen=True)
class LimitClass:
    """Large-M behavior of one quantity.

    ``finite_value`` is only set for ``kind == "finite"``, and only when the
    fading needed to evaluate it was supplied.
    """

    kind: str  # "zero", "finite" or "unbounded"
    order: float
    finite_value: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "finite", "unbounded"):
            raise ValueError(f"unknown limit kind {self.kind!r}")
        if self.kind != "finite" and self.finite_value is not None:
            raise ValueError("finite_value is only meaningful for a finite limit")


def _div(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _ratio_forms(stat_A, stat_B, mac_den, bc_den_A, bc_den_B, mac_gain, bc_gain, bc_power=2):
    """Shared numerator/denominator assembly of the large-M SINR forms."""
    sA, sB = stat_A.sum(axis=0), stat_B.sum(axis=0)
    mac_A = mac_gain * _div(sA ** 2, mac_den)
    mac_B = mac_gain * _div(sB ** 2, mac_den)
    bc_A = bc_gain * _div(sA ** bc_power, bc_den_A)
    bc_B = bc_gain * _div(sB ** bc_power, bc_den_B)
    return SinrSet(mac_A + mac_B, np.column_stack([mac_A, mac_B]), np.column_stack([bc_A, bc_B]))


def _form_a(ls: LargeScaleFading, N: int, pilot: float, p_u: float, p_r: float,
            form: str, tau_p: int) -> SinrSet:
    aA, aB = ls.alpha_A, ls.alpha_B
    if form == "printed":
        load = np.sum(aA + aB, axis=1)  # (M,)
        mac_den = np.sum((load + 1.0)[:, None] * (aA + aB), axis=0)
        bc_den = lambda a: np.sum((p_r * a + 1.0) * load[:, None], axis=0)  # noqa: E731
        return _ratio_forms(aA, aB, mac_den, bc_den(aA), bc_den(aB),
                            p_u * N * pilot, N * p_r * pilot, bc_power=1)
    if form == "consistent":
        qA, qB = aA ** 2, aB ** 2
        load_ul = p_u * np.sum(aA + aB, axis=1)
        mac_den = np.sum((load_ul + 1.0)[:, None] * (qA + qB), axis=0)
        load_dl = np.sum(qA + qB, axis=1)
        bc_den = lambda a: np.sum((p_r * a + 1.0) * load_dl[:, None], axis=0)  # noqa: E731
        g = tau_p * pilot
        return _ratio_forms(qA, qB, mac_den, bc_den(aA), bc_den(aB), p_u * N * g, N * p_r * g)
    raise ValueError(f"unknown form {form!r}")


def _form_b(ls: LargeScaleFading, N: int, p_u: float, p_r: float) -> SinrSet:
    mac_den = np.sum(ls.phi_A + ls.phi_B, axis=0)
    bc_den = np.full(ls.num_pairs, np.sum(ls.phi_A + ls.phi_B))
    return _ratio_forms(ls.phi_A, ls.phi_B, mac_den, bc_den, bc_den, N * p_u, N * p_r)


def _exp_sum(a: float, b: float) -> float:
    """Exponent sum rounded so splits like 1.1+1.2 and 0.9+1.4 give the same power."""
    return round(a + b, 12)


def _form_c(ls: LargeScaleFading, N: int, pilot: float, p_u: float, p_r: float,
            form: str, tau_p: int) -> SinrSet:
    if form == "printed":
        aA, aB, g = ls.alpha_A, ls.alpha_B, pilot
    elif form == "consistent":
        aA, aB, g = ls.alpha_A ** 2, ls.alpha_B ** 2, tau_p * pilot
    else:
        raise ValueError(f"unknown form {form!r}")
    mac_den = np.sum(aA + aB, axis=0)
    bc_den = np.full(ls.num_pairs, np.sum(aA + aB))
    return _ratio_forms(aA, aB, mac_den, bc_den, bc_den, N * g * p_u, N * g * p_r)


def _require(scen: ScalingScenario, name: str) -> None:
    if scen.scenario != name:
        raise ValueError(f"expected a Scenario {name} configuration, got {scen.scenario}")


def scenario_a_sinrs(ls: LargeScaleFading, scen: ScalingScenario, cfg: SystemConfig,
                     form: str = "printed") -> SinrSet:
    """Large-M SINRs when only the pilot power shrinks. Uses only the gains of ``ls``."""
    _require(scen, "A")
    M = ls.num_aps
    _, p_u, p_r = normalize_powers(cfg)
    return _form_a(ls, cfg.antennas_per_ap, scen.E_p / M ** scen.alpha_exp, p_u, p_r, form,
                   cfg.pilot_symbols)


def scenario_a_limits(ls: LargeScaleFading, E_p: float, cfg: SystemConfig,
                      form: str = "printed") -> SinrSet:
    _, p_u, p_r = normalize_powers(cfg)
    return _form_a(ls, cfg.antennas_per_ap, E_p, p_u, p_r, form, cfg.pilot_symbols)


def scenario_b_sinrs(ls: LargeScaleFading, scen: ScalingScenario, cfg: SystemConfig) -> SinrSet:
    """Large-M SINRs when the data powers shrink. ``ls`` must carry the estimate
    variances at the (fixed) pilot power."""
    _require(scen, "B")
    M = ls.num_aps
    return _form_b(ls, cfg.antennas_per_ap, scen.E_u / M ** scen.beta_exp,
                   scen.E_r / M ** scen.gamma_exp)


def scenario_b_limits(ls: LargeScaleFading, E_u: float, E_r: float, cfg: SystemConfig) -> SinrSet:
    return _form_b(ls, cfg.antennas_per_ap, E_u, E_r)


def scenario_c_sinrs(ls: LargeScaleFading, scen: ScalingScenario, cfg: SystemConfig,
                     form: str = "printed") -> SinrSet:
    """Large-M SINRs when pilot and data powers all shrink. Uses only the gains."""
    _require(scen, "C")
    M = ls.num_aps
    # The pilot energy multiplies both phases, so fold it into the data powers;
    # the result depends on the exponents only through a+b and a+c.
    return _form_c(ls, cfg.antennas_per_ap, scen.E_p,
                   scen.E_u / M ** _exp_sum(scen.alpha_exp, scen.beta_exp),
                   scen.E_r / M ** _exp_sum(scen.alpha_exp, scen.gamma_exp), form, cfg.pilot_symbols)


def scenario_c_limits(ls: LargeScaleFading, E_p: float, E_u: float, E_r: float,
                      cfg: SystemConfig, form: str = "printed") -> SinrSet:
    return _form_c(ls, cfg.antennas_per_ap, E_p, E_u, E_r, form, cfg.pilot_symbols)


def asymptotic_sinrs(ls: LargeScaleFading, scen: ScalingScenario, cfg: SystemConfig,
                     form: str = "printed") -> SinrSet:
    if scen.scenario == "A":
        return scenario_a_sinrs(ls, scen, cfg, form)
    if scen.scenario == "B":
        return scenario_b_sinrs(ls, scen, cfg)
    return scenario_c_sinrs(ls, scen, cfg, form)


def _kind(order: float) -> str:
    if order > _TOL:
        return "unbounded"
    if order < -_TOL:
        return "zero"
    return "finite"


def classify_limit(scen: ScalingScenario, ls: LargeScaleFading | None = None,
                   cfg: SystemConfig | None = None) -> dict[str, LimitClass]:
    """Large-M class of the MAC SINRs, the BC SINRs and the pair rate.

    The pair rate is a minimum over MAC and BC rates, so it follows the
    smaller of the two orders. With ``ls`` and ``cfg`` the finite values are
    filled in: SINR limits for the SINR classes and the per-pair rates for
    the pair class.
    """
    mac, bc = scen.mac_order(), scen.bc_order()
    pair = min(mac, bc)
    out = {"mac": LimitClass(_kind(mac), mac), "bc": LimitClass(_kind(bc), bc),
           "pair_rate": LimitClass(_kind(pair), pair)}
    if ls is None or cfg is None:
        return out
    s = asymptotic_sinrs(ls, scen, cfg)
    if out["mac"].kind == "finite":
        out["mac"] = LimitClass("finite", mac, s.mac_pair)
    if out["bc"].kind == "finite":
        out["bc"] = LimitClass("finite", bc, s.bc_dir)
    if out["pair_rate"].kind == "finite" and scen.scenario != "A":
        out["pair_rate"] = LimitClass("finite", pair, corollary_rates(ls, scen, cfg)[1])
    elif out["pair_rate"].kind == "finite":
        out["pair_rate"] = LimitClass("finite", pair, s.rates(cfg.prelog).r_pair)
    return out


def _eq(x: float, y: float) -> bool:
    return abs(x - y) <= _TOL


def corollary_rates(ls: LargeScaleFading, scen: ScalingScenario, cfg: SystemConfig,
                    form: str = "printed") -> tuple[int, np.ndarray]:
    """Per-pair large-M rates for the exponent sets with a finite pair rate.

    Returns ``(corollary_number, rates)``. Numbering: 1-3 for Scenario B
    (MAC-limited, BC-limited, balanced), 4-6 for Scenario C in the same
    order. The SINRs are the finite-M large-M forms, so the rates converge to
    the exact rates as M grows. ``form`` selects the Scenario C expression.
    """
    prelog = cfg.prelog
    a, b, c = scen.alpha_exp, scen.beta_exp, scen.gamma_exp
    if scen.scenario == "B":
        s = scenario_b_sinrs(ls, scen, cfg)
        mac_sum = _eq(b, 1) and c < 1 - _TOL
        bc_sum = _eq(c, 1) and b < 1 - _TOL
        balanced = _eq(b, 1) and _eq(c, 1)
        base = 0
        why = f"needs b=1 or c=1 with the other at most 1, got b={b}, c={c}"
    elif scen.scenario == "C":
        s = scenario_c_sinrs(ls, scen, cfg, form)
        mac_sum = _eq(a + b, 1) and b > c + _TOL
        bc_sum = _eq(a + c, 1) and c > b + _TOL
        balanced = _eq(a + b, 1) and _eq(b, c)
        base = 3
        why = f"needs a+b=1 with b>=c, or a+c=1 with c>b, got a={a}, b={b}, c={c}"
    else:
        raise ValueError("no closed-form pair rate for Scenario A")
    if mac_sum:
        return base + 1, prelog * np.log2(1.0 + s.mac_pair)
    if bc_sum:
        return base + 2, prelog * np.log2(1.0 + s.bc_dir).sum(axis=1)
    if balanced:
        return base + 3, s.rates(prelog).r_pair
    raise ValueError(f"exponents match no finite-rate case: {why}")


def exact_report(alpha_A: np.ndarray, alpha_B: np.ndarray, scen: ScalingScenario,
                 cfg: SystemConfig) -> RateReport:
    """Exact rates under the scenario's power scaling at ``M = alpha_A.shape[0]``.

    Uplink coefficients are 1 and every AP transmits at full power.
    """
    M = alpha_A.shape[0]
    N = cfg.antennas_per_ap
    p_p, p_u, p_r = scen.powers(M, cfg)
    ls = LargeScaleFading.from_gains(alpha_A, alpha_B, cfg.pilot_symbols, p_p)
    w = ls.num_pairs
    eta_A, eta_B = full_power_downlink(ls, N)
    pa = PowerAllocation(np.ones(w), np.ones(w), eta_A, eta_B, p_p, p_u, p_r)
    return rate_report(ls, pa, cfg)


def log_slope(Ms, values) -> float:
    """Least-squares slope of ``values`` against ``log2(M)`` (units per octave)."""
    x = np.log2(np.asarray(Ms, dtype=float))
    return float(np.polyfit(x, np.asarray(values, dtype=float), 1)[0])
