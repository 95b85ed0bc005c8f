"""Monte-Carlo estimation of every SINR term, and of the sum SE.

Channels are drawn in fixed-size blocks; block ``b`` uses the keyed stream
``(seed, CHANNEL, b)`` so results depend only on ``(seed, num_reals,
block_size)`` and not on how blocks are scheduled. Per-realization scalar
statistics are kept so that term estimates, the sum SE and its bootstrap
error all come from the same draws.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from . import rng as rngmod
from .channel import draw_realization
from .closed_form import PowerAllocation, RateReport, combine_rates, downlink_power
from .config import SystemConfig
from .model import LargeScaleFading

DEFAULT_BLOCK = 256
BOOTSTRAP_RESAMPLES = 200


@dataclass(frozen=True)
class McEstimate:
    """Sample estimate with its standard error. Fields may be arrays."""

    value: np.ndarray | float
    std_error: np.ndarray | float
    num_samples: int

    def within(self, reference, k: float = 3.0, atol: float = 0.0):
        """Whether ``|value - reference| <= k * std_error + atol``."""
        return np.abs(np.asarray(self.value) - reference) <= k * np.asarray(self.std_error) + atol

    def z_score(self, reference):
        se = np.asarray(self.std_error, dtype=float)
        diff = np.abs(np.asarray(self.value) - reference)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 0, np.inf, 0.0))


@dataclass(frozen=True)
class Samples:
    """Per-realization effective scalars, shape ``(R, W)`` or ``(R, W, 2)``.

    The trailing axis of the BC arrays is the receiving side (A, B).
    """

    mac_A: np.ndarray  # v_i^H h_i
    mac_B: np.ndarray  # v_i^H g_i
    mac_iui: np.ndarray  # sum_{j != i} eta_A,j |v_i^H h_j|^2 + eta_B,j |v_i^H g_j|^2
    noise: np.ndarray  # ||v_i||^2
    bc_desired: np.ndarray
    bc_self: np.ndarray
    bc_iui_A: np.ndarray
    bc_iui_B: np.ndarray
    p_u: float
    p_d: float

    @property
    def num_samples(self) -> int:
        return self.mac_A.shape[0]

    def take(self, idx) -> "Samples":
        f = lambda x: x[idx]  # noqa: E731
        return Samples(f(self.mac_A), f(self.mac_B), f(self.mac_iui), f(self.noise),
                       f(self.bc_desired), f(self.bc_self), f(self.bc_iui_A), f(self.bc_iui_B),
                       self.p_u, self.p_d)


def _off_diag_power(x: np.ndarray, weights=None) -> np.ndarray:
    """``sum_{j != i} w_j |x[r, i, j]|^2`` for a (R, W, W) array."""
    p = np.abs(x) ** 2
    if weights is not None:
        p = p * weights[None, None, :]
    diag = np.diagonal(p, axis1=1, axis2=2)
    return p.sum(axis=2) - diag


def _block_samples(ls: LargeScaleFading, pa: PowerAllocation, N: int, seed: int, block: int,
                   size: int, backend: str | None) -> tuple:
    real = draw_realization(ls, N, rngmod.stream(seed, rngmod.CHANNEL, block), num=size)
    mac_h, mac_g, bc_hh, bc_hg, bc_gg, bc_gh, noise = kernels.projections(
        real.h_hat, real.h_err, real.g_hat, real.g_err,
        np.sqrt(pa.eta_A_dl), np.sqrt(pa.eta_B_dl), backend=backend)
    diag = lambda x: np.diagonal(x, axis1=1, axis2=2)  # noqa: E731
    mac_iui = _off_diag_power(mac_h, pa.eta_A_ul) + _off_diag_power(mac_g, pa.eta_B_ul)
    return (diag(mac_h), diag(mac_g), mac_iui, noise,
            np.stack([diag(bc_hh), diag(bc_gg)], axis=-1),
            np.stack([diag(bc_hg), diag(bc_gh)], axis=-1),
            np.stack([_off_diag_power(bc_hg), _off_diag_power(bc_gg)], axis=-1),
            np.stack([_off_diag_power(bc_hh), _off_diag_power(bc_gh)], axis=-1))


def simulate(ls: LargeScaleFading, pa: PowerAllocation, N: int, num_reals: int, seed: int, *,
             block_size: int = DEFAULT_BLOCK, backend: str | None = None,
             jobs: int = 1) -> Samples:
    """Draw ``num_reals`` channel realizations and reduce them to :class:`Samples`.

    Blocks may run on ``jobs`` threads (the compiled kernel releases the
    GIL); results are concatenated in block order, so they do not depend on
    ``jobs``.
    """
    if num_reals < 2:
        raise ValueError("num_reals must be at least 2")
    sizes = [min(block_size, num_reals - s) for s in range(0, num_reals, block_size)]
    work = lambda b: _block_samples(ls, pa, N, seed, b, sizes[b], backend)  # noqa: E731
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(work, range(len(sizes))))
    else:
        parts = [work(b) for b in range(len(sizes))]
    cols = [np.concatenate(c, axis=0) for c in zip(*parts)]
    return Samples(*cols, p_u=pa.p_u, p_d=downlink_power(ls, pa, N))


# --- term estimators -------------------------------------------------------

def _mean(x: np.ndarray) -> McEstimate:
    n = x.shape[0]
    return McEstimate(x.mean(axis=0), x.std(axis=0, ddof=1) / np.sqrt(n), n)


def _squared_mean(x: np.ndarray) -> McEstimate:
    """``|E x|^2`` for complex ``x`` with a delta-method standard error."""
    n = x.shape[0]
    m = x.mean(axis=0)
    mag = np.abs(m)
    unit = np.where(mag > 0, m / np.where(mag > 0, mag, 1.0), 1.0)
    along = np.real(x * np.conj(unit))
    se = 2.0 * mag * along.std(axis=0, ddof=1) / np.sqrt(n)
    # at zero mean the first-order term vanishes; fall back to the second-order size
    se = np.where(mag > 0, se, np.mean(np.abs(x - m) ** 2, axis=0) / n)
    return McEstimate(mag ** 2, se, n)


def _variance(x: np.ndarray) -> McEstimate:
    """Unbiased sample variance of complex ``x`` and its standard error."""
    n = x.shape[0]
    dev = np.abs(x - x.mean(axis=0)) ** 2
    var = dev.sum(axis=0) / (n - 1)
    return McEstimate(var, dev.std(axis=0, ddof=1) / np.sqrt(n), n)


def _scaled(est: McEstimate, factor) -> McEstimate:
    return McEstimate(est.value * factor, est.std_error * np.abs(factor), est.num_samples)


def mac_terms_from_samples(s: Samples, pa: PowerAllocation) -> dict[str, McEstimate]:
    """Same keys and normalization as :func:`cfrelay.closed_form.mac_terms`."""
    inv_pu = 1.0 / s.p_u if s.p_u > 0 else np.inf
    return {
        "DS_A": _scaled(_squared_mean(s.mac_A), pa.eta_A_ul),
        "DS_B": _scaled(_squared_mean(s.mac_B), pa.eta_B_ul),
        "EE_A": _scaled(_variance(s.mac_A), pa.eta_A_ul),
        "EE_B": _scaled(_variance(s.mac_B), pa.eta_B_ul),
        "IUI": _mean(s.mac_iui),
        "N": _scaled(_mean(s.noise), inv_pu),
    }


def bc_terms_from_samples(s: Samples, side: str) -> dict[str, McEstimate]:
    """Same keys and normalization as :func:`cfrelay.closed_form.bc_terms`."""
    if side not in ("A", "B"):
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    k = 0 if side == "A" else 1
    other = "B" if side == "A" else "A"
    n = s.num_samples
    w = s.mac_A.shape[1]
    inv_pd = 1.0 / s.p_d if s.p_d > 0 else np.inf
    return {
        "DS": _squared_mean(s.bc_desired[..., k]),
        f"BU_{side}": _variance(s.bc_desired[..., k]),
        f"BU_{other}": _variance(s.bc_self[..., k]),
        "IUI_A": _mean(s.bc_iui_A[..., k]),
        "IUI_B": _mean(s.bc_iui_B[..., k]),
        "N": McEstimate(np.full(w, inv_pd), np.zeros(w), n),
    }


def estimate_mac_terms(ls: LargeScaleFading, pa: PowerAllocation, cfg: SystemConfig,
                       num_reals: int, seed: int, **kw) -> dict[str, McEstimate]:
    """Monte-Carlo estimates of the MAC terms of every pair."""
    return mac_terms_from_samples(simulate(ls, pa, cfg.antennas_per_ap, num_reals, seed, **kw), pa)


def estimate_bc_terms(ls: LargeScaleFading, pa: PowerAllocation, cfg: SystemConfig,
                      num_reals: int, seed: int, **kw) -> dict[str, dict[str, McEstimate]]:
    """Monte-Carlo estimates of the BC terms, keyed by receiving side."""
    s = simulate(ls, pa, cfg.antennas_per_ap, num_reals, seed, **kw)
    return {"A": bc_terms_from_samples(s, "A"), "B": bc_terms_from_samples(s, "B")}


# --- spectral efficiency ---------------------------------------------------

def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=(den > 0) & np.isfinite(den))
    return out


def _sinrs(s: Samples, pa: PowerAllocation):
    """Bounded-SINR triple from sample moments (cheap path used by the bootstrap)."""
    n = s.num_samples
    mA, mB = s.mac_A.mean(axis=0), s.mac_B.mean(axis=0)
    vA = np.sum(np.abs(s.mac_A - mA) ** 2, axis=0) / (n - 1)
    vB = np.sum(np.abs(s.mac_B - mB) ** 2, axis=0) / (n - 1)
    ds_A, ds_B = pa.eta_A_ul * np.abs(mA) ** 2, pa.eta_B_ul * np.abs(mB) ** 2
    inv_pu = 1.0 / s.p_u if s.p_u > 0 else np.inf
    den = pa.eta_A_ul * vA + pa.eta_B_ul * vB + s.mac_iui.mean(axis=0) + s.noise.mean(axis=0) * inv_pu
    g_pair = _ratio(ds_A + ds_B, den)
    g_mac = np.column_stack([_ratio(ds_A, den), _ratio(ds_B, den)])

    md = s.bc_desired.mean(axis=0)
    vd = np.sum(np.abs(s.bc_desired - md) ** 2, axis=0) / (n - 1)
    vs = np.sum(np.abs(s.bc_self - s.bc_self.mean(axis=0)) ** 2, axis=0) / (n - 1)
    inv_pd = 1.0 / s.p_d if s.p_d > 0 else np.inf
    den_bc = vd + vs + s.bc_iui_A.mean(axis=0) + s.bc_iui_B.mean(axis=0) + inv_pd
    g_bc = _ratio(np.abs(md) ** 2, den_bc)
    return g_pair, g_mac, g_bc


def rate_report_from_samples(s: Samples, pa: PowerAllocation, prelog: float) -> RateReport:
    return combine_rates(prelog, *_sinrs(s, pa))


def bootstrap_sum_se(s: Samples, pa: PowerAllocation, prelog: float, seed: int,
                     resamples: int = BOOTSTRAP_RESAMPLES) -> float:
    """Bootstrap standard error of the sum SE over realization indices."""
    gen = rngmod.stream(seed, rngmod.BOOTSTRAP)
    n = s.num_samples
    vals = np.empty(resamples)
    for b in range(resamples):
        idx = gen.integers(0, n, size=n)
        vals[b] = rate_report_from_samples(s.take(idx), pa, prelog).sum_se
    return float(vals.std(ddof=1))


def mc_sum_se(ls: LargeScaleFading, pa: PowerAllocation, cfg: SystemConfig, num_reals: int,
              seed: int, *, resamples: int = BOOTSTRAP_RESAMPLES, **kw) -> McEstimate:
    """Sum SE with every SINR term replaced by its Monte-Carlo estimate."""
    s = simulate(ls, pa, cfg.antennas_per_ap, num_reals, seed, **kw)
    value = rate_report_from_samples(s, pa, cfg.prelog).sum_se
    se = bootstrap_sum_se(s, pa, cfg.prelog, seed, resamples) if resamples > 1 else 0.0
    return McEstimate(value, se, num_reals)


def genie_rate_report(s: Samples, pa: PowerAllocation, prelog: float) -> RateReport:
    """Rates when the users know their instantaneous effective channels.

    Each user then removes its own back-propagated message exactly and
    decodes with the ergodic rate ``E log2(1 + |desired|^2 / (IUI + 1/p_d))``.
    The MAC side is unchanged.
    """
    g_pair, g_mac, _ = _sinrs(s, pa)
    inv_pd = 1.0 / s.p_d if s.p_d > 0 else np.inf
    inst = _ratio(np.abs(s.bc_desired) ** 2, s.bc_iui_A + s.bc_iui_B + inv_pd)
    r_bc = prelog * np.log2(1.0 + inst).mean(axis=0)
    # feed the ergodic rate back through combine_rates as an equivalent SINR
    g_bc = 2.0 ** (r_bc / prelog) - 1.0
    return combine_rates(prelog, g_pair, g_mac, g_bc)


# --- Rayleigh identities ---------------------------------------------------

@dataclass(frozen=True)
class IdentityCheck:
    name: str
    estimate: McEstimate
    expected: float

    @property
    def passed(self) -> bool:
        return bool(self.estimate.within(self.expected, 3.0))


def verify_identities(phi: float, e: float, alpha: float, N: int, num_reals: int,
                      seed: int) -> list[IdentityCheck]:
    """Check the Gaussian moment identities behind the closed forms.

    ``phi`` and ``e`` are the estimate and error variances of a link
    ``h = h_hat + h_err``; ``alpha`` is the variance of an independent
    vector ``x``. Checks ``E||h_hat||^4 = N(N+1)phi^2``,
    ``var(h_hat^H h) = N(phi+e)phi`` and ``E|h_hat^H x|^2 = N phi alpha``.
    """
    gen = rngmod.stream(seed, rngmod.EXPERIMENT, 1)
    h_hat = rngmod.complex_normal(gen, (num_reals, N), phi)
    h_err = rngmod.complex_normal(gen, (num_reals, N), e)
    x = rngmod.complex_normal(gen, (num_reals, N), alpha)
    norm4 = np.sum(np.abs(h_hat) ** 2, axis=1) ** 2
    proj = np.sum(h_hat.conj() * (h_hat + h_err), axis=1)
    cross = np.abs(np.sum(h_hat.conj() * x, axis=1)) ** 2
    return [
        IdentityCheck("fourth_moment", _mean(norm4), N * (N + 1) * phi ** 2),
        IdentityCheck("gain_variance", _variance(proj), N * (phi + e) * phi),
        IdentityCheck("independent_projection", _mean(cross), N * phi * alpha),
    ]
