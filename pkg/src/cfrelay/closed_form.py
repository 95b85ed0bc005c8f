"""Closed-form SINRs and spectral efficiencies with MR combining/precoding.

Array conventions: large-scale quantities are (M, W) with APs on axis 0,
uplink coefficients are length-W vectors, downlink coefficients are (M, W).
``side`` selects the user of a pair, ``"A"`` or ``"B"``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .model import LargeScaleFading


def _other(side: str) -> str:
    if side not in ("A", "B"):
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    return "B" if side == "A" else "A"


def _safe_ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den > 0)
    return out


@dataclass(frozen=True)
class PowerAllocation:
    eta_A_ul: np.ndarray  # (W,)
    eta_B_ul: np.ndarray  # (W,)
    eta_A_dl: np.ndarray  # (M, W)
    eta_B_dl: np.ndarray  # (M, W)
    p_p: float
    p_u: float
    p_r: float

    def ul(self, side: str) -> np.ndarray:
        return self.eta_A_ul if side == "A" else self.eta_B_ul

    def dl(self, side: str) -> np.ndarray:
        return self.eta_A_dl if side == "A" else self.eta_B_dl

    def with_powers(self, **kw) -> "PowerAllocation":
        from dataclasses import replace
        return replace(self, **kw)

    def pairs(self, idx) -> "PowerAllocation":
        idx = np.atleast_1d(idx)
        return PowerAllocation(self.eta_A_ul[idx], self.eta_B_ul[idx], self.eta_A_dl[:, idx],
                               self.eta_B_dl[:, idx], self.p_p, self.p_u, self.p_r)


def per_ap_load(ls: LargeScaleFading, pa: PowerAllocation, N: int) -> np.ndarray:
    """``N * sum_i (eta_A,mi phi_B,mi + eta_B,mi phi_A,mi)`` per AP; must be <= 1."""
    return N * np.sum(pa.eta_A_dl * ls.phi_B + pa.eta_B_dl * ls.phi_A, axis=1)


def downlink_power(ls: LargeScaleFading, pa: PowerAllocation, N: int) -> float:
    """Per-AP power scale ``p_d`` implied by the total relay power ``p_r``."""
    total = per_ap_load(ls, pa, N).sum()
    return pa.p_r / total if total > 0 else 0.0


def full_power_downlink(ls: LargeScaleFading, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Every AP spends its whole budget: ``eta_mi = 1 / (N sum_i (phi_B + phi_A))``.

    APs whose estimates are all zero get a zero coefficient.
    """
    row = N * np.sum(ls.phi_A + ls.phi_B, axis=1)
    eta = _safe_ratio(1.0, row)
    eta = np.repeat(eta[:, None], ls.num_pairs, axis=1)
    return eta, eta.copy()


def uniform_allocation(ls: LargeScaleFading, N: int, p_p: float, p_u: float,
                       p_r: float) -> PowerAllocation:
    """Full uplink power for every user and full-power downlink at every AP."""
    w = ls.num_pairs
    eta_A, eta_B = full_power_downlink(ls, N)
    return PowerAllocation(np.ones(w), np.ones(w), eta_A, eta_B, p_p, p_u, p_r)


def _mac_denominator(ls: LargeScaleFading, pa: PowerAllocation) -> np.ndarray:
    load = pa.p_u * (ls.alpha_A @ pa.eta_A_ul + ls.alpha_B @ pa.eta_B_ul)  # (M,)
    return np.sum((load + 1.0)[:, None] * (ls.phi_A + ls.phi_B), axis=0)


def sinr_mac_pair(ls: LargeScaleFading, pa: PowerAllocation, N: int) -> np.ndarray:
    """SINR of the jointly detected pair i during the MAC phase."""
    num = pa.p_u * N * (pa.eta_A_ul * ls.phi_A.sum(axis=0) ** 2
                        + pa.eta_B_ul * ls.phi_B.sum(axis=0) ** 2)
    return _safe_ratio(num, _mac_denominator(ls, pa))


def sinr_mac_dir(ls: LargeScaleFading, pa: PowerAllocation, N: int, side: str) -> np.ndarray:
    """MAC-phase SINR of user ``side`` of each pair.

    The numerator uses that user's own uplink coefficient.
    """
    _other(side)
    phi = ls.phi_A if side == "A" else ls.phi_B
    num = pa.p_u * pa.ul(side) * N * phi.sum(axis=0) ** 2
    return _safe_ratio(num, _mac_denominator(ls, pa))


def sinr_bc_dir(ls: LargeScaleFading, pa: PowerAllocation, N: int, side: str) -> np.ndarray:
    """BC-phase SINR at user ``side`` (it receives the other user's message)."""
    other = _other(side)
    phi = ls.phi_A if side == "A" else ls.phi_B
    alpha = ls.alpha_A if side == "A" else ls.alpha_B
    num = N * pa.p_r * np.sum(np.sqrt(pa.dl(other)) * phi, axis=0) ** 2
    load = np.sum(pa.eta_A_dl * ls.phi_B + pa.eta_B_dl * ls.phi_A, axis=1)  # (M,)
    den = np.sum((pa.p_r * alpha + 1.0) * load[:, None], axis=0)
    return _safe_ratio(num, den)


@dataclass(frozen=True)
class RateReport:
    gamma_mac_pair: np.ndarray  # (W,)
    gamma_mac_dir: np.ndarray  # (W, 2), columns A, B
    gamma_bc_dir: np.ndarray  # (W, 2)
    r_mac_pair: np.ndarray
    r_mac_dir: np.ndarray  # (W, 2)
    r_bc_dir: np.ndarray  # (W, 2)
    r_bc_pair: np.ndarray
    r_pair: np.ndarray
    sum_se: float


def combine_rates(prelog: float, gamma_mac_pair, gamma_mac_dir, gamma_bc_dir) -> RateReport:
    """Turn SINRs into rates and apply the two-way decode-and-forward min rules.

    Direction A->B is limited by A's MAC rate and B's BC rate, and vice versa.
    """
    gamma_mac_pair = np.asarray(gamma_mac_pair, dtype=float)
    gamma_mac_dir = np.asarray(gamma_mac_dir, dtype=float)
    gamma_bc_dir = np.asarray(gamma_bc_dir, dtype=float)
    r_mac_pair = prelog * np.log2(1.0 + gamma_mac_pair)
    r_mac_dir = prelog * np.log2(1.0 + gamma_mac_dir)
    r_bc_dir = prelog * np.log2(1.0 + gamma_bc_dir)
    r_bc_pair = (np.minimum(r_mac_dir[:, 0], r_bc_dir[:, 1])
                 + np.minimum(r_mac_dir[:, 1], r_bc_dir[:, 0]))
    r_pair = np.minimum(r_mac_pair, r_bc_pair)
    return RateReport(gamma_mac_pair, gamma_mac_dir, gamma_bc_dir, r_mac_pair, r_mac_dir,
                      r_bc_dir, r_bc_pair, r_pair, float(r_pair.sum()))


def _check_cfg(cfg: SystemConfig) -> None:
    if cfg.pilot_symbols >= cfg.coherence_symbols:
        raise ValueError("pilot_symbols must be smaller than coherence_symbols")


def rate_report(ls: LargeScaleFading, pa: PowerAllocation, cfg: SystemConfig,
                antennas: int | None = None) -> RateReport:
    """All SINRs and rates of the two-way relaying system.

    ``antennas`` overrides ``cfg.antennas_per_ap`` (the collocated baseline
    uses M*N antennas at one site).
    """
    _check_cfg(cfg)
    N = cfg.antennas_per_ap if antennas is None else antennas
    g_pair = sinr_mac_pair(ls, pa, N)
    g_mac = np.column_stack([sinr_mac_dir(ls, pa, N, "A"), sinr_mac_dir(ls, pa, N, "B")])
    g_bc = np.column_stack([sinr_bc_dir(ls, pa, N, "A"), sinr_bc_dir(ls, pa, N, "B")])
    return combine_rates(cfg.prelog, g_pair, g_mac, g_bc)


def collocated_allocation(pa: PowerAllocation, ls_collocated: LargeScaleFading,
                          num_aps: int, N: int) -> PowerAllocation:
    """Collocated counterpart of a cell-free allocation.

    Uplink coefficients and powers carry over; the single site uses the
    full-power downlink rule with ``num_aps * N`` antennas.
    """
    eta_A, eta_B = full_power_downlink(ls_collocated, num_aps * N)
    return PowerAllocation(pa.eta_A_ul, pa.eta_B_ul, eta_A, eta_B, pa.p_p, pa.p_u, pa.p_r)


def collocated_rate_report(ls_collocated: LargeScaleFading, pa: PowerAllocation,
                           cfg: SystemConfig) -> RateReport:
    """One relay site with ``M * N`` antennas (``M = cfg.num_aps``)."""
    if ls_collocated.num_aps != 1:
        raise ValueError("collocated fading must describe a single site")
    return rate_report(ls_collocated, pa, cfg, antennas=cfg.num_aps * cfg.antennas_per_ap)


def orthogonal_scheme_sum_se(ls: LargeScaleFading, pa: PowerAllocation, cfg: SystemConfig) -> float:
    """Sum SE when every pair gets its own 1/W share of the time-frequency resources.

    Each pair is evaluated alone (no inter-pair interference) with the same
    training overhead and per-slot powers; its rate is then divided by W.
    """
    w = ls.num_pairs
    total = 0.0
    for i in range(w):
        total += rate_report(ls.pairs(i), pa.pairs(i), cfg).sum_se
    return total / w


def mac_terms(ls: LargeScaleFading, pa: PowerAllocation, N: int) -> dict[str, np.ndarray]:
    """Per-pair MAC expectation terms, each normalized by ``p_u``.

    Keys: ``DS_A``, ``DS_B`` (desired signal), ``EE_A``, ``EE_B`` (estimation
    error of the pair's own channels), ``IUI`` (other pairs) and ``N``
    (combiner noise over ``p_u``). The pair SINR is
    ``(DS_A + DS_B) / (EE_A + EE_B + IUI + N)``.
    """
    phi_sum = ls.phi_A + ls.phi_B  # (M, W)
    ds_A = pa.eta_A_ul * (N * ls.phi_A.sum(axis=0)) ** 2
    ds_B = pa.eta_B_ul * (N * ls.phi_B.sum(axis=0)) ** 2
    ee_A = N * pa.eta_A_ul * np.sum(ls.alpha_A * phi_sum, axis=0)
    ee_B = N * pa.eta_B_ul * np.sum(ls.alpha_B * phi_sum, axis=0)
    # cross[i, j] = N sum_m (eta_A,j alpha_A,mj + eta_B,j alpha_B,mj)(phi_A,mi + phi_B,mi)
    cross = N * phi_sum.T @ (ls.alpha_A * pa.eta_A_ul + ls.alpha_B * pa.eta_B_ul)
    iui = cross.sum(axis=1) - np.diag(cross)
    noise = N * phi_sum.sum(axis=0) / pa.p_u if pa.p_u > 0 else np.full(ls.num_pairs, np.inf)
    return {"DS_A": ds_A, "DS_B": ds_B, "EE_A": ee_A, "EE_B": ee_B, "IUI": iui, "N": noise}


def bc_terms(ls: LargeScaleFading, pa: PowerAllocation, N: int, side: str) -> dict[str, np.ndarray]:
    """Per-pair BC expectation terms at user ``side``, at unit per-AP power scale.

    ``BU_<side>`` is the gain uncertainty of the desired stream and
    ``BU_<other>`` the residual self-interference. ``IUI_A`` / ``IUI_B``
    collect the A-stream / B-stream precoders of the other pairs. ``N`` is
    ``1 / p_d``.
    """
    other = _other(side)
    phi = ls.phi_A if side == "A" else ls.phi_B
    phi_o = ls.phi_B if side == "A" else ls.phi_A
    alpha = ls.alpha_A if side == "A" else ls.alpha_B
    eta_own, eta_o = pa.dl(side), pa.dl(other)
    ds = (N * np.sum(np.sqrt(eta_o) * phi, axis=0)) ** 2
    bu_desired = N * np.sum(eta_o * alpha * phi, axis=0)
    bu_self = N * np.sum(eta_own * alpha * phi_o, axis=0)
    load_A = pa.eta_A_dl * ls.phi_B  # A-stream precoders use the B-side estimates
    load_B = pa.eta_B_dl * ls.phi_A
    cross_A = N * alpha.T @ load_A  # [i, j]
    cross_B = N * alpha.T @ load_B
    p_d = downlink_power(ls, pa, N)
    return {
        "DS": ds,
        f"BU_{side}": bu_desired,
        f"BU_{other}": bu_self,
        "IUI_A": cross_A.sum(axis=1) - np.diag(cross_A),
        "IUI_B": cross_B.sum(axis=1) - np.diag(cross_B),
        "N": np.full(ls.num_pairs, 1.0 / p_d if p_d > 0 else np.inf),
    }
