"""Small-scale Rayleigh channels and their MMSE estimates.

Realizations are sampled directly from the estimate/error statistics, which
is what orthogonal pilots plus MMSE despreading produce. The explicit
despreading path (:func:`despread_estimate`) is kept for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LargeScaleFading
from .rng import complex_normal


@dataclass(frozen=True)
class ChannelRealization:
    """Estimates and estimation errors of every AP-user link.

    Arrays have shape ``(M, W, N)``, or ``(R, M, W, N)`` for a batch of
    ``R`` independent realizations. ``h`` refers to the A-side users and
    ``g`` to the B-side users.
    """

    h_hat: np.ndarray
    h_err: np.ndarray
    g_hat: np.ndarray
    g_err: np.ndarray

    @property
    def h(self) -> np.ndarray:
        return self.h_hat + self.h_err

    @property
    def g(self) -> np.ndarray:
        return self.g_hat + self.g_err


def draw_realization(ls: LargeScaleFading, N: int, rng: np.random.Generator,
                     num: int | None = None) -> ChannelRealization:
    """Draw one realization, or a batch of ``num`` realizations.

    Estimate and error are independent with per-component variances
    ``phi`` and ``e``. The draw order is fixed (h_hat, h_err, g_hat, g_err)
    so a given generator state always gives the same channels.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    lead = () if num is None else (int(num),)
    shape = (*lead, ls.num_aps, ls.num_pairs, N)

    def draw(var):
        return complex_normal(rng, shape, np.asarray(var)[..., None])

    return ChannelRealization(draw(ls.phi_A), draw(ls.e_A), draw(ls.phi_B), draw(ls.e_B))


def orthonormal_pilots(tau_p: int, count: int) -> np.ndarray:
    """``count`` mutually orthonormal length-``tau_p`` pilots as columns (unitary DFT)."""
    if count > tau_p:
        raise ValueError(f"cannot build {count} orthogonal pilots of length {tau_p}")
    k = np.arange(tau_p)
    dft = np.exp(-2j * np.pi * np.outer(k, k) / tau_p) / np.sqrt(tau_p)
    return dft[:, :count]


def pilot_observation(channels: np.ndarray, pilots: np.ndarray, tau_p: int, p_p: float,
                      rng: np.random.Generator | None = None) -> np.ndarray:
    """Received training block ``sqrt(tau_p p_p) sum_k c_k pilot_k^H + noise``.

    Parameters
    ----------
    channels : (K, N) complex
        Channel of every transmitting user at one AP.
    pilots : (tau_p, K) complex
        Pilot of each user, one per column.
    rng : Generator, optional
        Source of the unit-variance receiver noise. ``None`` gives a
        noiseless observation.
    """
    channels = np.atleast_2d(channels)
    y = np.sqrt(tau_p * p_p) * channels.T @ pilots.conj().T
    if rng is not None:
        y = y + complex_normal(rng, y.shape)
    return y


def despread_estimate(pilot_obs: np.ndarray, pilot: np.ndarray, alpha: float, tau_p: int,
                      p_p: float) -> np.ndarray:
    """MMSE channel estimate from a training block.

    Projects the observation onto the user's pilot and applies the scalar
    MMSE gain ``sqrt(tau_p p_p) alpha / (1 + tau_p p_p alpha)``.
    """
    pilot = np.asarray(pilot)
    if pilot.ndim != 1 or pilot.shape[0] != tau_p:
        raise ValueError("pilot must be a length-tau_p vector")
    if not np.isclose(np.linalg.norm(pilot), 1.0, rtol=1e-9, atol=1e-12):
        raise ValueError("pilot must have unit norm")
    snr = tau_p * p_p * alpha
    gain = np.sqrt(tau_p * p_p) * alpha / (1.0 + snr)
    return gain * (np.asarray(pilot_obs) @ pilot)
