"""Small geometric-program solver.

A GP minimizes a monomial subject to posynomial constraints ``<= 1`` over
positive variables. With ``y = log x`` it becomes

    minimize    c^T y
    subject to  log sum_t exp(a_kt^T y + b_kt) <= 0,

a convex problem, solved here by a log-barrier interior-point method with
damped Newton steps and Armijo backtracking. A phase-I problem (minimize
``s`` subject to every constraint ``<= s``) supplies a strictly feasible
start, or a certificate that none exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Monomial:
    """``coef * prod_v x_v ** exps[v]`` with ``coef > 0``."""

    coef: float
    exps: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.coef > 0 and np.isfinite(self.coef)):
            raise ValueError(f"monomial coefficient must be positive and finite, got {self.coef}")

    def __call__(self, x: dict[str, float]) -> float:
        return float(self.coef * np.prod([x[v] ** e for v, e in self.exps.items()]))

    def __mul__(self, other: "Monomial") -> "Monomial":
        exps = dict(self.exps)
        for v, e in other.exps.items():
            exps[v] = exps.get(v, 0.0) + e
        return Monomial(self.coef * other.coef, exps)


Posynomial = list  # list[Monomial]


def posynomial_value(p: Posynomial, x: dict[str, float]) -> float:
    return sum(m(x) for m in p)


@dataclass
class GpProblem:
    """Minimize ``objective`` subject to ``posynomial <= 1`` for each constraint."""

    variables: list[str]
    objective: Monomial
    constraints: list[Posynomial]
    labels: list[str] | None = None

    def __post_init__(self):
        known = set(self.variables)
        if len(known) != len(self.variables):
            raise ValueError("duplicate variable names")
        for mono in [self.objective, *[m for p in self.constraints for m in p]]:
            missing = set(mono.exps) - known
            if missing:
                raise ValueError(f"unknown variables {sorted(missing)}")
        if any(len(p) == 0 for p in self.constraints):
            raise ValueError("empty posynomial constraint")
        if self.labels is not None and len(self.labels) != len(self.constraints):
            raise ValueError("one label per constraint")

    def max_violation(self, x: dict[str, float]) -> float:
        """Largest ``posynomial(x) - 1`` over the constraints."""
        if not self.constraints:
            return -np.inf
        return max(posynomial_value(p, x) - 1.0 for p in self.constraints)


class GpError(RuntimeError):
    pass


class GpInfeasible(GpError):
    """No strictly feasible point exists.

    ``min_violation`` is the phase-I optimum ``min_y max_k log f_k(y)`` (> 0
    means infeasible) and ``multipliers`` its dual weights per constraint,
    which certify it.
    """

    def __init__(self, msg, min_violation: float, multipliers: np.ndarray):
        super().__init__(msg)
        self.min_violation = min_violation
        self.multipliers = multipliers


class GpNotConverged(GpError):
    def __init__(self, msg, best: dict[str, float] | None):
        super().__init__(msg)
        self.best = best


class GpUnbounded(GpError):
    pass


@dataclass
class GpSolution:
    x: dict[str, float]
    objective: float
    duality_gap: float  # bound on log(objective) - log(optimum)
    kkt_residual: float
    newton_steps: int


class _Compiled:
    """Stacked exponent matrix of all constraint terms."""

    def __init__(self, A: np.ndarray, b: np.ndarray, seg: np.ndarray, K: int):
        self.A, self.b, self.seg, self.K = A, b, seg, K
        self.starts = np.flatnonzero(np.r_[True, seg[1:] != seg[:-1]]) if len(seg) else seg

    @classmethod
    def from_problem(cls, gp: GpProblem) -> "_Compiled":
        idx = {v: i for i, v in enumerate(gp.variables)}
        rows, b, seg = [], [], []
        for k, p in enumerate(gp.constraints):
            for m in p:
                r = np.zeros(len(idx))
                for v, e in m.exps.items():
                    r[idx[v]] += e
                rows.append(r)
                b.append(np.log(m.coef))
                seg.append(k)
        A = np.array(rows).reshape(-1, len(idx))
        return cls(A, np.array(b, dtype=float), np.array(seg, dtype=int), len(gp.constraints))

    def values(self, y: np.ndarray) -> np.ndarray:
        """``f_k(y)`` for every constraint (log of the posynomial)."""
        z = self.A @ y + self.b
        zmax = np.maximum.reduceat(z, self.starts)
        s = np.add.reduceat(np.exp(z - zmax[self.seg]), self.starts)
        return zmax + np.log(s)

    def derivatives(self, y: np.ndarray):
        """``f``, per-constraint gradients ``G`` (K, n) and the term weights ``p``."""
        z = self.A @ y + self.b
        zmax = np.maximum.reduceat(z, self.starts)
        e = np.exp(z - zmax[self.seg])
        s = np.add.reduceat(e, self.starts)
        p = e / s[self.seg]
        G = np.add.reduceat(p[:, None] * self.A, self.starts, axis=0)
        return zmax + np.log(s), G, p


def _barrier(comp: _Compiled, c: np.ndarray, y0: np.ndarray, tol: float, mu: float,
             max_newton: int, stop=None):
    """Central-path following for ``min c^T y s.t. f_k(y) <= 0`` from a strictly
    feasible ``y0``. ``stop(y)`` may end the run early (used by phase I)."""
    y = y0.astype(float).copy()
    K = comp.K
    if K == 0:
        if np.any(c != 0):
            raise GpUnbounded("objective is unbounded without constraints")
        return y, 0.0, 0.0, 0
    t = 1.0
    steps = 0
    lam = np.zeros(K)

    def phi(yy, tt):
        f = comp.values(yy)
        if np.any(f >= 0) or not np.all(np.isfinite(f)):
            return np.inf
        return tt * (c @ yy) - np.sum(np.log(-f))

    while True:
        for _ in range(200):
            f, G, p = comp.derivatives(y)
            inv = 1.0 / (-f)
            grad = t * c + G.T @ inv
            w = p * inv[comp.seg]
            H = (comp.A.T * w) @ comp.A - (G.T * inv) @ G + (G.T * inv ** 2) @ G
            H = 0.5 * (H + H.T)
            try:
                dy = np.linalg.solve(H + 1e-12 * np.trace(H) / len(y) * np.eye(len(y)), -grad)
            except np.linalg.LinAlgError:
                dy = -np.linalg.lstsq(H, grad, rcond=None)[0]
            dec = float(-grad @ dy)
            if dec / 2.0 <= 1e-11:
                break
            step, phi0 = 1.0, phi(y, t)
            while step > 1e-14:
                if phi(y + step * dy, t) <= phi0 + 0.25 * step * (grad @ dy):
                    break
                step *= 0.5
            else:
                break
            y = y + step * dy
            steps += 1
            if steps > max_newton:
                raise GpNotConverged("Newton iteration limit reached", None)
            if stop is not None and stop(y):
                return y, np.nan, np.nan, steps
            if np.max(np.abs(y)) > 700:
                raise GpUnbounded("iterates diverge; the problem appears unbounded")
        f, G, _ = comp.derivatives(y)
        lam = 1.0 / (t * -f)
        gap = K / t
        if stop is not None and stop(y):
            return y, gap, np.nan, steps
        if gap < tol:
            kkt = float(np.linalg.norm(c + G.T @ lam))
            return y, gap, kkt, steps
        t *= mu


def solve_gp(gp: GpProblem, tol: float = 1e-8, x0: dict[str, float] | None = None,
             mu: float = 10.0, max_newton: int = 5000) -> GpSolution:
    """Solve ``gp`` to a duality gap below ``tol`` (in log-objective units).

    ``x0`` is an optional starting guess; it need not be feasible.

    Raises
    ------
    GpInfeasible
        If no strictly feasible point exists.
    GpUnbounded
        If the objective can be driven to zero.
    GpNotConverged
        If the Newton budget runs out (carries the best iterate).
    """
    names = gp.variables
    n = len(names)
    comp = _Compiled.from_problem(gp)
    c = np.zeros(n)
    for v, e in gp.objective.exps.items():
        c[names.index(v)] += e
    y0 = np.zeros(n) if x0 is None else np.log([float(x0[v]) for v in names])

    if comp.K and np.max(comp.values(y0)) >= -1e-9:
        y0 = _phase_one(comp, y0, tol, mu, max_newton)
    try:
        y, gap, kkt, steps = _barrier(comp, c, y0, tol, mu, max_newton)
    except GpNotConverged as exc:
        raise GpNotConverged(str(exc), dict(zip(names, np.exp(y0)))) from None
    x = dict(zip(names, np.exp(y)))
    return GpSolution(x, gp.objective(x), gap, kkt, steps)


def _phase_one(comp: _Compiled, y0: np.ndarray, tol: float, mu: float, max_newton: int,
               radius: float = 60.0):
    """Find ``y`` with every ``f_k(y) < 0``: minimize ``s`` s.t. ``f_k(y) <= s``.

    The search is confined to ``|y - y0| <= radius`` and ``s >= -1`` so the
    barrier subproblems stay bounded; a feasible region lying entirely
    outside that log-box is reported as infeasible.
    """
    n = comp.A.shape[1]
    K = comp.K
    # augmented variable s enters every term with exponent -1
    rows = [np.hstack([comp.A, -np.ones((comp.A.shape[0], 1))])]
    b = [comp.b]
    eye = np.eye(n + 1)
    rows += [eye[:n], -eye[:n], -eye[n:]]
    b += [-(y0 + radius), y0 - radius, np.array([-1.0])]
    A = np.vstack(rows)
    bb = np.concatenate(b)
    seg = np.concatenate([comp.seg, K + np.arange(2 * n + 1)])
    aug = _Compiled(A, bb, seg, K + 2 * n + 1)
    s0 = max(float(np.max(comp.values(y0))), 0.0) + 1.0
    c = np.zeros(n + 1)
    c[-1] = 1.0
    margin = 1e-6

    def done(z):
        return float(np.max(comp.values(z[:n]))) < -margin

    z, _, _, _ = _barrier(aug, c, np.r_[y0, s0], tol, mu, max_newton, stop=done)
    y = z[:n]
    worst = float(np.max(comp.values(y)))
    if worst < -margin:
        return y
    f = comp.values(y) - z[-1]
    lam = 1.0 / np.maximum(-f, 1e-300)
    raise GpInfeasible(f"no strictly feasible point (min max log-violation {worst:.3g})",
                       worst, lam / lam.sum())
