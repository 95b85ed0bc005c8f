"""Deployment geometry, large-scale fading and power normalization.

All powers inside the library are SNRs: physical transmit power divided by
the receiver noise power. dBm values only appear at the config boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .config import SystemConfig


@dataclass(frozen=True)
class Topology:
    ap_positions: np.ndarray  # (M, 2)
    user_positions_A: np.ndarray  # (W, 2)
    user_positions_B: np.ndarray  # (W, 2)
    area_side: float

    @property
    def num_aps(self) -> int:
        return self.ap_positions.shape[0]

    @property
    def num_pairs(self) -> int:
        return self.user_positions_A.shape[0]

    @property
    def users(self) -> np.ndarray:
        """All 2W users, A side first."""
        return np.vstack([self.user_positions_A, self.user_positions_B])

    def first_aps(self, m: int) -> "Topology":
        """The same deployment restricted to its first ``m`` APs."""
        if not 1 <= m <= self.num_aps:
            raise ValueError(f"cannot take {m} of {self.num_aps} APs")
        return Topology(self.ap_positions[:m], self.user_positions_A,
                        self.user_positions_B, self.area_side)


@dataclass(frozen=True)
class LargeScaleFading:
    """Per-link gains and MMSE estimate/error variances, each of shape (M, W)."""

    alpha_A: np.ndarray
    alpha_B: np.ndarray
    phi_A: np.ndarray
    phi_B: np.ndarray
    e_A: np.ndarray
    e_B: np.ndarray

    @property
    def num_aps(self) -> int:
        return self.alpha_A.shape[0]

    @property
    def num_pairs(self) -> int:
        return self.alpha_A.shape[1]

    @classmethod
    def from_gains(cls, alpha_A, alpha_B, tau_p: float, p_p: float) -> "LargeScaleFading":
        alpha_A = np.atleast_2d(np.asarray(alpha_A, dtype=float))
        alpha_B = np.atleast_2d(np.asarray(alpha_B, dtype=float))
        if alpha_A.shape != alpha_B.shape:
            raise ValueError("alpha_A and alpha_B must have the same shape")
        if np.any(alpha_A < 0) or np.any(alpha_B < 0):
            raise ValueError("large-scale gains must be non-negative")
        phi_A, e_A = mmse_statistics(alpha_A, tau_p, p_p)
        phi_B, e_B = mmse_statistics(alpha_B, tau_p, p_p)
        return cls(alpha_A, alpha_B, phi_A, phi_B, e_A, e_B)

    def pairs(self, idx) -> "LargeScaleFading":
        """Sub-system made of the user pairs in ``idx``."""
        sl = (slice(None), np.atleast_1d(idx))
        return LargeScaleFading(*(a[sl] for a in
                                  (self.alpha_A, self.alpha_B, self.phi_A,
                                   self.phi_B, self.e_A, self.e_B)))

    def aps(self, m: int) -> "LargeScaleFading":
        return LargeScaleFading(*(a[:m] for a in
                                  (self.alpha_A, self.alpha_B, self.phi_A,
                                   self.phi_B, self.e_A, self.e_B)))

    def swapped(self) -> "LargeScaleFading":
        """Exchange the roles of the A and B sides."""
        return LargeScaleFading(self.alpha_B, self.alpha_A, self.phi_B,
                                self.phi_A, self.e_B, self.e_A)


def mmse_statistics(alpha, tau_p: float, p_p: float):
    """Estimate variance ``phi`` and error variance ``e`` of the MMSE estimator.

    ``e`` is computed as ``alpha - phi`` so that the two add up to ``alpha``
    up to one rounding.
    """
    alpha = np.asarray(alpha, dtype=float)
    snr = tau_p * p_p
    if np.isinf(snr):
        return alpha.copy(), np.zeros_like(alpha)
    phi = np.minimum(snr * alpha**2 / (1.0 + snr * alpha), alpha)  # rounding can overshoot
    return phi, alpha - phi


def generate_topology(cfg: SystemConfig, rng: np.random.Generator | None = None) -> Topology:
    """Uniform i.i.d. drop of M APs and 2W users on the square [0, side)^2."""
    if rng is None:
        rng = _rng.stream(cfg.rng_seed, _rng.TOPOLOGY)
    side = cfg.area_side
    aps = rng.uniform(0.0, side, size=(cfg.num_aps, 2))
    users = rng.uniform(0.0, side, size=(2 * cfg.num_pairs, 2))
    return Topology(aps, users[: cfg.num_pairs], users[cfg.num_pairs:], side)


def torus_distance(p, q, side: float):
    """Minimum-image Euclidean distance on a square torus of the given side.

    Broadcasts over leading dimensions of ``p`` and ``q`` (last axis is x/y).
    """
    d = np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    d = np.minimum(d, side - d)
    return np.hypot(d[..., 0], d[..., 1])


def pairwise_torus_distance(a: np.ndarray, b: np.ndarray, side: float) -> np.ndarray:
    return torus_distance(a[:, None, :], b[None, :, :], side)


def path_loss_umi(d, shadow_db=0.0):
    """3GPP Urban Microcell gain at 2 GHz, linear scale.

    ``-30.5 - 36.7 log10(d / 1 m) + shadow`` in dB.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path loss needs strictly positive distances")
    return 10.0 ** ((-30.5 - 36.7 * np.log10(d) + shadow_db) / 10.0)


def shadow_covariance(user_positions: np.ndarray, side: float,
                      std_db: float = 4.0, decorrelation_m: float = 9.0) -> np.ndarray:
    delta = pairwise_torus_distance(user_positions, user_positions, side)
    return std_db**2 * 2.0 ** (-delta / decorrelation_m)


def psd_factor(cov: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    """Square-root factor ``L`` with ``L @ L.T`` equal to the repaired ``cov``.

    The matrix is symmetrized and its eigenvalues clipped at ``floor``; a set of
    pairwise covariances is not guaranteed to be jointly PSD.
    """
    cov = 0.5 * (cov + cov.T)
    w, v = np.linalg.eigh(cov)
    return v * np.sqrt(np.clip(w, floor, None))


def correlated_shadowing(topology: Topology, rng: np.random.Generator,
                         std_db: float = 4.0, decorrelation_m: float = 9.0,
                         num_sites: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Shadowing in dB, returned as ``(F_A, F_B)`` each of shape (sites, W).

    For a given AP the 2W values are jointly Gaussian with covariance
    ``std^2 * 2^(-delta/decorrelation)``; different APs are independent.
    """
    users = topology.users
    sites = topology.num_aps if num_sites is None else num_sites
    factor = psd_factor(shadow_covariance(users, topology.area_side, std_db, decorrelation_m))
    z = rng.standard_normal((sites, users.shape[0]))
    f = z @ factor.T
    w = topology.num_pairs
    return f[:, :w], f[:, w:]


def noise_power(cfg: SystemConfig) -> float:
    """Thermal noise power in watts, including the noise figure."""
    return cfg.bandwidth * cfg.boltzmann * cfg.noise_temp * 10.0 ** (cfg.noise_figure_db / 10.0)


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def normalize_power(watts, cfg: SystemConfig):
    return np.asarray(watts, dtype=float) / noise_power(cfg)


def dbm_to_snr(dbm, cfg: SystemConfig):
    """Physical power in dBm to the normalized (SNR) scale used internally."""
    return normalize_power(dbm_to_watt(dbm), cfg)


def normalize_powers(cfg: SystemConfig) -> tuple[float, float, float]:
    """Normalized ``(p_p, p_u, p_r)``."""
    p_p = float(dbm_to_snr(cfg.pilot_power_dbm, cfg))
    p_u = float(dbm_to_snr(cfg.uplink_power_dbm, cfg))
    if cfg.relay_power_dbm is None:
        p_r = 2 * cfg.num_pairs * p_u
    else:
        p_r = float(dbm_to_snr(cfg.relay_power_dbm, cfg))
    return p_p, p_u, p_r


def link_distances(topology: Topology, min_distance: float = 0.0):
    d_A = pairwise_torus_distance(topology.ap_positions, topology.user_positions_A, topology.area_side)
    d_B = pairwise_torus_distance(topology.ap_positions, topology.user_positions_B, topology.area_side)
    return np.maximum(d_A, min_distance), np.maximum(d_B, min_distance)


def large_scale(topology: Topology, shadows, cfg: SystemConfig, p_p: float | None = None) -> LargeScaleFading:
    """Gains from torus distances and shadowing, plus their MMSE statistics.

    ``p_p`` defaults to the configured pilot SNR.
    """
    if p_p is None:
        p_p = normalize_powers(cfg)[0]
    F_A, F_B = shadows
    d_A, d_B = link_distances(topology, cfg.min_distance)
    return LargeScaleFading.from_gains(path_loss_umi(d_A, F_A), path_loss_umi(d_B, F_B),
                                       cfg.pilot_symbols, p_p)


def draw_large_scale(cfg: SystemConfig, p_p: float | None = None,
                     topology: Topology | None = None) -> tuple[Topology, LargeScaleFading]:
    """Topology and fading for ``cfg.rng_seed``, using the keyed streams."""
    if topology is None:
        topology = generate_topology(cfg)
    shadows = correlated_shadowing(topology, _rng.stream(cfg.rng_seed, _rng.SHADOWING),
                                   cfg.shadow_std_db, cfg.shadow_decorrelation_m)
    return topology, large_scale(topology, shadows, cfg, p_p)


def collocated_large_scale(topology: Topology, cfg: SystemConfig,
                           p_p: float | None = None) -> LargeScaleFading:
    """Single relay site at the centre of the area, shape (1, W)."""
    if p_p is None:
        p_p = normalize_powers(cfg)[0]
    centre = Topology(np.full((1, 2), topology.area_side / 2.0), topology.user_positions_A,
                      topology.user_positions_B, topology.area_side)
    shadows = correlated_shadowing(centre, _rng.stream(cfg.rng_seed, _rng.COLLOCATED),
                                   cfg.shadow_std_db, cfg.shadow_decorrelation_m)
    return large_scale(centre, shadows, cfg, p_p)


def homogeneous_large_scale(alpha_A_users, alpha_B_users, num_aps: int,
                            tau_p: float, p_p: float) -> LargeScaleFading:
    """Every AP sees user k with the same gain; used for scaling-law studies."""
    a = np.tile(np.asarray(alpha_A_users, dtype=float)[None, :], (num_aps, 1))
    b = np.tile(np.asarray(alpha_B_users, dtype=float)[None, :], (num_aps, 1))
    return LargeScaleFading.from_gains(a, b, tau_p, p_p)
