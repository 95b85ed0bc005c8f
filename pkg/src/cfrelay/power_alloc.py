"""Sum-SE maximization under a total power budget.

The variables are the scaled uplink powers ``eta~ = p_u * eta`` of every user,
the total relay power ``p_r`` and three SINR proxies per pair: ``g`` for the
pair, ``gA`` for the A->B direction (A's MAC SINR and B's BC SINR) and
``gB`` for B->A. The pair rate is ``prelog * log2(1 + g)`` with

    g <= MAC pair SINR,    g <= gA + gB + gA*gB.

The problem is a complementary GP. It is solved by successive GPs in
which ``1 + g``, the MAC numerator and ``gA + gB + gA*gB`` are replaced by
monomial lower bounds that are tight at the current point, with a
multiplicative trust region of width ``theta`` around it.

The downlink keeps the full-power per-AP shape; only its total ``p_r`` is
optimized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .closed_form import full_power_downlink
from .config import SystemConfig
from .gp import GpError, GpProblem, Monomial, solve_gp
from .model import LargeScaleFading

VAR_FAMILIES = ("eA", "eB", "g", "gA", "gB")


class DegeneratePairError(ValueError):
    pass


@dataclass(frozen=True)
class SubproblemCoefficients:
    """Allocation-independent parts of the SINR model.

    MAC SINRs are ``a1 eA / c`` and ``a2 eB / c`` with
    ``c = 1 + a3 @ eA + a4 @ eB``; BC SINRs are ``p_r / (p_r b_X + c_X)``.
    """

    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray  # (W, W), [i, j]
    a4: np.ndarray
    b_A: np.ndarray
    b_B: np.ndarray
    c_A: np.ndarray
    c_B: np.ndarray

    @property
    def num_pairs(self) -> int:
        return self.a1.shape[0]

    def c(self, eA, eB):
        """Interference-plus-noise factor of every pair; accepts leading batch axes."""
        return 1.0 + np.asarray(eA) @ self.a3.T + np.asarray(eB) @ self.a4.T


def build_coefficients(ls: LargeScaleFading, dl_shape: tuple[np.ndarray, np.ndarray], N: int,
                       literal: bool = False) -> SubproblemCoefficients:
    """Coefficients of the SINR model for a fixed downlink shape.

    By default the interference coefficients keep the per-AP weighting so
    the model reproduces the exact closed-form SINRs. ``literal=True`` uses
    the separated sums ``sum_m alpha_mj / sum_m (phi_A,mi + phi_B,mi)``
    instead, for comparison.
    """
    eta_A, eta_B = dl_shape
    phi_sum = ls.phi_A + ls.phi_B
    s_phi = phi_sum.sum(axis=0)
    if np.any(s_phi <= 0):
        raise DegeneratePairError("a user pair has no channel estimate at any AP")
    a1 = N * ls.phi_A.sum(axis=0) ** 2 / s_phi
    a2 = N * ls.phi_B.sum(axis=0) ** 2 / s_phi
    if literal:
        a3 = ls.alpha_A.sum(axis=0)[None, :] / s_phi[:, None]
        a4 = ls.alpha_B.sum(axis=0)[None, :] / s_phi[:, None]
    else:
        a3 = (phi_sum.T @ ls.alpha_A) / s_phi[:, None]
        a4 = (phi_sum.T @ ls.alpha_B) / s_phi[:, None]

    load = np.sum(eta_A * ls.phi_B + eta_B * ls.phi_A, axis=1)  # (M,)

    def bc(alpha, phi, eta_other):
        gain = N * np.sum(np.sqrt(eta_other) * phi, axis=0) ** 2
        if np.any(gain <= 0):
            raise DegeneratePairError("a user has zero downlink beamforming gain")
        return (alpha * load[:, None]).sum(axis=0) / gain, np.full_like(gain, load.sum()) / gain

    b_A, c_A = bc(ls.alpha_A, ls.phi_A, eta_B)
    b_B, c_B = bc(ls.alpha_B, ls.phi_B, eta_A)
    return SubproblemCoefficients(a1, a2, a3, a4, b_A, b_B, c_A, c_B)


@dataclass(frozen=True)
class ModelSinrs:
    mac_pair: np.ndarray
    mac_A: np.ndarray
    mac_B: np.ndarray
    bc_A: np.ndarray
    bc_B: np.ndarray

    @property
    def dir_A(self):
        """Effective A->B SINR: A's uplink, then B's downlink."""
        return np.minimum(self.mac_A, self.bc_B)

    @property
    def dir_B(self):
        return np.minimum(self.mac_B, self.bc_A)

    @property
    def pair(self):
        gA, gB = self.dir_A, self.dir_B
        return np.minimum(self.mac_pair, gA + gB + gA * gB)


def model_sinrs(co: SubproblemCoefficients, eA, eB, p_r) -> ModelSinrs:
    """All SINRs of an allocation. Leading batch axes are allowed (``p_r`` per batch)."""
    eA, eB = np.asarray(eA, dtype=float), np.asarray(eB, dtype=float)
    p_r = np.asarray(p_r, dtype=float)[..., None]
    c = co.c(eA, eB)
    mac_A, mac_B = co.a1 * eA / c, co.a2 * eB / c
    with np.errstate(divide="ignore", invalid="ignore"):
        bc_A = np.where(p_r > 0, p_r / (p_r * co.b_A + co.c_A), 0.0)
        bc_B = np.where(p_r > 0, p_r / (p_r * co.b_B + co.c_B), 0.0)
    return ModelSinrs(mac_A + mac_B, mac_A, mac_B, bc_A, bc_B)


def model_sum_se(co: SubproblemCoefficients, eA, eB, p_r, prelog: float):
    return prelog * np.log2(1.0 + model_sinrs(co, eA, eB, p_r).pair).sum(axis=-1)


# --- monomial fits ---------------------------------------------------------

def monomial_objective_fit(g0) -> tuple[np.ndarray, np.ndarray]:
    """``(delta, mu)`` with ``delta * g**mu <= 1 + g``, equal at ``g = g0``."""
    g0 = np.asarray(g0, dtype=float)
    if np.any(~(g0 > 0)):
        raise ValueError("expansion point must be positive")
    mu = g0 / (g0 + 1.0)
    return g0 ** (-mu) * (1.0 + g0), mu


def am_gm_split(t_A, t_B) -> tuple[np.ndarray, np.ndarray]:
    """Weights of the geometric-mean bound ``t_A + t_B >= (t_A/w_A)^w_A (t_B/w_B)^w_B``."""
    t_A, t_B = np.asarray(t_A, dtype=float), np.asarray(t_B, dtype=float)
    if np.any(t_A < 0) or np.any(t_B < 0):
        raise ValueError("terms must be non-negative")
    total = t_A + t_B
    if np.any(total <= 0):
        raise ValueError("at least one term must be positive")
    w_A = t_A / total
    return w_A, 1.0 - w_A


def xy_monomial_fit(x0, y0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(zeta, lam_x, lam_y)`` with ``zeta x^lam_x y^lam_y <= x + y + xy``, equal at the point."""
    x0, y0 = np.asarray(x0, dtype=float), np.asarray(y0, dtype=float)
    if np.any(~(x0 > 0)) or np.any(~(y0 > 0)):
        raise ValueError("expansion point must be positive")
    f = x0 + y0 + x0 * y0
    lam_x = x0 * (1.0 + y0) / f
    lam_y = y0 * (1.0 + x0) / f
    return f * x0 ** (-lam_x) * y0 ** (-lam_y), lam_x, lam_y


# --- successive GP ---------------------------------------------------------

@dataclass(frozen=True)
class OperatingPoint:
    eA: np.ndarray
    eB: np.ndarray
    p_r: float
    g: np.ndarray
    gA: np.ndarray
    gB: np.ndarray

    @classmethod
    def from_allocation(cls, co: SubproblemCoefficients, eA, eB, p_r) -> "OperatingPoint":
        """Allocation with its SINR proxies set to the SINRs they stand for."""
        s = model_sinrs(co, eA, eB, p_r)
        return cls(np.asarray(eA, float), np.asarray(eB, float), float(p_r), s.pair, s.dir_A, s.dir_B)

    def as_dict(self) -> dict[str, float]:
        out = {"pr": self.p_r}
        for fam in VAR_FAMILIES:
            for i, v in enumerate(getattr(self, fam)):
                out[f"{fam}{i}"] = float(v)
        return out


def qos_threshold(R_min: float, cfg: SystemConfig) -> float:
    """Pair SINR needed for a pair rate of ``R_min``."""
    return 2.0 ** (R_min / cfg.prelog) - 1.0


def build_gp_subproblem(co: SubproblemCoefficients, point: OperatingPoint, theta: float,
                        P: float, R_min: float, cfg: SystemConfig) -> GpProblem:
    """GP approximation of the allocation problem around ``point``.

    Rows per pair: two trust-region bounds for each of ``eA, eB, g, gA, gB``,
    the monomialized MAC pair bound, the monomialized direction coupling,
    two MAC direction bounds, two BC direction bounds and, when
    ``R_min > 0``, a rate floor. One budget row is shared.
    """
    if theta <= 1:
        raise ValueError("theta must exceed 1")
    W = co.num_pairs
    M = Monomial
    names = [f"{f}{i}" for f in VAR_FAMILIES for i in range(W)] + ["pr"]
    _, mu = monomial_objective_fit(point.g)
    w_A, w_B = am_gm_split(co.a1 * point.eA, co.a2 * point.eB)
    zeta, lam_A, lam_B = xy_monomial_fit(point.gA, point.gB)
    thr = qos_threshold(R_min, cfg) if R_min > 0 else 0.0

    cons, labels = [], []

    def add(label, *monos):
        cons.append([m for m in monos if m.coef > 0])
        labels.append(label)

    def c_terms(i, factor: Monomial):
        out = [factor]
        for j in range(W):
            out.append(factor * M(co.a3[i, j], {f"eA{j}": 1.0}))
            out.append(factor * M(co.a4[i, j], {f"eB{j}": 1.0}))
        return [m for m in out if m.coef > 0]

    for i in range(W):
        for fam in VAR_FAMILIES:
            v, x0 = f"{fam}{i}", float(getattr(point, fam)[i])
            add(f"trust_hi:{v}", M(1.0 / (theta * x0), {v: 1.0}))
            add(f"trust_lo:{v}", M(x0 / theta, {v: -1.0}))
        # g * c / mono(a1 eA, a2 eB) <= 1
        mono_inv = {f"g{i}": 1.0}
        coef = 1.0
        for w, a, v in ((w_A[i], co.a1[i], f"eA{i}"), (w_B[i], co.a2[i], f"eB{i}")):
            if w > 0:
                coef *= (a / w) ** (-w)
                mono_inv[v] = -w
        add(f"mac_pair:{i}", *c_terms(i, M(coef, mono_inv)))
        add(f"couple:{i}", M(1.0 / zeta[i], {f"g{i}": 1.0, f"gA{i}": -lam_A[i], f"gB{i}": -lam_B[i]}))
        add(f"mac_A:{i}", *c_terms(i, M(1.0 / co.a1[i], {f"gA{i}": 1.0, f"eA{i}": -1.0})))
        add(f"mac_B:{i}", *c_terms(i, M(1.0 / co.a2[i], {f"gB{i}": 1.0, f"eB{i}": -1.0})))
        add(f"bc_B:{i}", M(co.b_B[i], {f"gA{i}": 1.0}), M(co.c_B[i], {f"gA{i}": 1.0, "pr": -1.0}))
        add(f"bc_A:{i}", M(co.b_A[i], {f"gB{i}": 1.0}), M(co.c_A[i], {f"gB{i}": 1.0, "pr": -1.0}))
        if thr > 0:
            add(f"qos:{i}", M(thr, {f"g{i}": -1.0}))
    budget = [M(1.0 / P, {"pr": 1.0})]
    budget += [M(1.0 / P, {f"{f}{i}": 1.0}) for f in ("eA", "eB") for i in range(W)]
    add("budget", *budget)
    objective = M(1.0, {f"g{i}": -float(mu[i]) for i in range(W)})
    return GpProblem(names, objective, cons, labels)


@dataclass
class AllocationResult:
    eta_tilde_A: np.ndarray
    eta_tilde_B: np.ndarray
    p_r: float
    gamma: np.ndarray
    gamma_A: np.ndarray
    gamma_B: np.ndarray
    sum_se: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list)
    initial_sum_se: float = float("nan")
    message: str = ""

    @property
    def total_power(self) -> float:
        return float(self.eta_tilde_A.sum() + self.eta_tilde_B.sum() + self.p_r)


def uniform_point(W: int, P: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Equal split: half the budget to the users, half to the relay."""
    e = np.full(W, P / (4.0 * W))
    return e, e.copy(), P / 2.0


def _relative_change(new: OperatingPoint, old: OperatingPoint) -> float:
    worst = 0.0
    for fam in VAR_FAMILIES:
        a, b = getattr(new, fam), getattr(old, fam)
        worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))))
    return worst


def run_algorithm1(ls: LargeScaleFading, cfg: SystemConfig, P: float, R_min: float = 0.0,
                   theta: float = 1.1, eps: float = 1e-3, max_iter: int = 50,
                   literal: bool = False, gp_tol: float = 1e-9) -> AllocationResult:
    """Successive GP allocation started from the uniform split.

    Each iteration expands around the current allocation with its SINR
    proxies reset to the model SINRs of that allocation, solves the GP and
    moves to its solution. The exact sum SE of the accepted iterates is
    recorded in ``history``. Stops when the largest relative change of the
    trust-regioned variables drops below ``eps``.
    """
    if not P > 0:
        raise ValueError("P must be positive")
    if not theta > 1:
        raise ValueError("theta must exceed 1")
    if not eps > 0:
        raise ValueError("eps must be positive")
    N = cfg.antennas_per_ap
    dl = full_power_downlink(ls, N)
    co = build_coefficients(ls, dl, N, literal=literal)
    exact = co if not literal else build_coefficients(ls, dl, N)
    W = co.num_pairs
    prelog = cfg.prelog

    def true_se(pt):
        return float(model_sum_se(exact, pt.eA, pt.eB, pt.p_r, prelog))

    point = OperatingPoint.from_allocation(co, *uniform_point(W, P))
    history = [true_se(point)]
    converged, message, k = False, "", 0
    for k in range(1, max_iter + 1):
        gp = build_gp_subproblem(co, point, theta, P, R_min, cfg)
        try:
            sol = solve_gp(gp, tol=gp_tol, x0=point.as_dict())
        except GpError as exc:
            message = f"subproblem {k} failed: {exc}"
            k -= 1
            break
        x = sol.x
        eA = np.array([x[f"eA{i}"] for i in range(W)])
        eB = np.array([x[f"eB{i}"] for i in range(W)])
        scale = min(1.0, P / (eA.sum() + eB.sum() + x["pr"]))  # absorb solver round-off
        new = OperatingPoint.from_allocation(co, eA * scale, eB * scale, x["pr"] * scale)
        se = true_se(new)
        change = _relative_change(new, point)
        if se < history[-1] - 1e-9:
            message = f"iteration {k} did not improve the sum SE; keeping the previous point"
            k -= 1
            break
        point = new
        history.append(se)
        if change < eps:
            converged = True
            message = "converged"
            break
    else:
        message = "iteration limit reached"

    g = model_sinrs(exact, point.eA, point.eB, point.p_r)
    if R_min > 0 and np.any(g.pair < qos_threshold(R_min, cfg) * (1 - 1e-9)):
        converged = False
        message = (message + "; " if message else "") + "rate floor not met"
    return AllocationResult(point.eA, point.eB, point.p_r, g.pair, g.dir_A, g.dir_B, history[-1],
                            k, converged, history, history[0], message)


# --- exhaustive oracle -----------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    eta_tilde_A: np.ndarray
    eta_tilde_B: np.ndarray
    p_r: float
    sum_se: float
    grid: np.ndarray


def oracle_grid(P: float, W: int, grid_points: int) -> np.ndarray:
    """Log-spaced levels in ``[1e-4 P, P]`` containing the uniform level ``P/(4W)``."""
    g = np.geomspace(P * 1e-4, P, grid_points)
    g[np.argmin(np.abs(np.log(g) - np.log(P / (4 * W))))] = P / (4 * W)
    return np.sort(g)


def brute_force_oracle(ls: LargeScaleFading, cfg: SystemConfig, P: float,
                       grid_points: int = 50, chunk: int = 250_000) -> OracleResult:
    """Best allocation over a grid of user powers, relay taking the remaining budget.

    The sum SE never decreases with ``p_r``, so for each grid point of the
    ``2W`` user powers the relay gets everything left of ``P``.
    """
    W = ls.num_pairs
    if W > 2:
        raise ValueError("the exhaustive oracle supports at most 2 pairs")
    if grid_points > 50:
        raise ValueError("at most 50 grid points per axis")
    N = cfg.antennas_per_ap
    co = build_coefficients(ls, full_power_downlink(ls, N), N)
    levels = oracle_grid(P, W, grid_points)
    dims = 2 * W
    best = (-np.inf, None)
    total = grid_points ** dims
    for start in range(0, total, chunk):
        n = min(chunk, total - start)
        flat = np.arange(start, start + n)
        idx = np.stack(np.unravel_index(flat, (grid_points,) * dims), axis=1)
        e = levels[idx]
        p_r = P - e.sum(axis=1)
        ok = p_r > 0
        if not np.any(ok):
            continue
        e, p_r = e[ok], p_r[ok]
        se = model_sum_se(co, e[:, :W], e[:, W:], p_r, cfg.prelog)
        j = int(np.argmax(se))
        if se[j] > best[0]:
            best = (float(se[j]), (e[j, :W].copy(), e[j, W:].copy(), float(p_r[j])))
    if best[1] is None:
        raise ValueError("no grid point leaves positive relay power")
    eA, eB, p_r = best[1]
    return OracleResult(eA, eB, p_r, best[0], levels)
