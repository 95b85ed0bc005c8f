import numpy as np
import pytest

from cfrelay import rng as rngmod
from cfrelay.channel import (despread_estimate, draw_realization, orthonormal_pilots,
                             pilot_observation)
from cfrelay.model import LargeScaleFading, mmse_statistics


def _fading():
    a = np.array([[0.5, 2.0], [1.0, 0.1], [3.0, 0.7]])
    return LargeScaleFading.from_gains(a, a[:, ::-1], 4, 2.0)


def test_realization_shapes():
    ls = _fading()
    ch = draw_realization(ls, 3, rngmod.stream(0, rngmod.CHANNEL))
    assert ch.h_hat.shape == (3, 2, 3)
    batch = draw_realization(ls, 3, rngmod.stream(0, rngmod.CHANNEL), num=7)
    assert batch.g_err.shape == (7, 3, 2, 3)
    assert np.array_equal(batch.h, batch.h_hat + batch.h_err)


def test_realization_deterministic():
    ls = _fading()
    a = draw_realization(ls, 2, rngmod.stream(5, rngmod.CHANNEL), num=4)
    b = draw_realization(ls, 2, rngmod.stream(5, rngmod.CHANNEL), num=4)
    assert np.array_equal(a.g_hat, b.g_hat)


def test_realization_variances():
    ls = _fading()
    n = 40_000
    ch = draw_realization(ls, 1, rngmod.stream(1, rngmod.CHANNEL), num=n)
    for x, var in ((ch.h_hat, ls.phi_A), (ch.h_err, ls.e_A), (ch.g_hat, ls.phi_B),
                   (ch.g_err, ls.e_B)):
        p = np.abs(x[..., 0]) ** 2  # exponential with mean var
        assert np.all(np.abs(p.mean(axis=0) - var) < 4 * var / np.sqrt(n))
    # estimate and error are uncorrelated
    c = np.mean(ch.h_hat.conj() * ch.h_err, axis=0)[..., 0]
    assert np.all(np.abs(c) < 4 * np.sqrt(ls.phi_A * ls.e_A / n))


def test_invalid_antennas():
    with pytest.raises(ValueError):
        draw_realization(_fading(), 0, rngmod.stream(0, rngmod.CHANNEL))


def test_pilots_orthonormal():
    P = orthonormal_pilots(10, 10)
    assert np.allclose(P.conj().T @ P, np.eye(10))
    with pytest.raises(ValueError):
        orthonormal_pilots(4, 5)


def test_despreading_matches_mmse_statistics():
    # independent route: explicit training + despreading, compared with the
    # closed-form estimate/error variances
    tau_p, p_p, alpha, N, K = 6, 0.8, 1.7, 1, 4
    n = 30_000
    gen = rngmod.stream(3, rngmod.PILOT_NOISE)
    pilots = orthonormal_pilots(tau_p, K)
    est, err = [], []
    for _ in range(n // 1000):
        ch = rngmod.complex_normal(gen, (1000, K, N), alpha)
        for r in range(1000):
            y = pilot_observation(ch[r], pilots, tau_p, p_p, gen)
            h_hat = despread_estimate(y, pilots[:, 0], alpha, tau_p, p_p)
            est.append(h_hat[0])
            err.append(ch[r, 0, 0] - h_hat[0])
    est, err = np.array(est), np.array(err)
    phi, e = mmse_statistics(alpha, tau_p, p_p)
    assert abs(np.mean(np.abs(est) ** 2) - phi) < 4 * phi / np.sqrt(len(est))
    assert abs(np.mean(np.abs(err) ** 2) - e) < 4 * e / np.sqrt(len(err))
    assert abs(np.mean(est.conj() * err)) < 4 * np.sqrt(phi * e / len(est))


def test_noiseless_despreading_scales_channel():
    tau_p, p_p, alpha = 4, 2.0, 0.5
    pilots = orthonormal_pilots(tau_p, 2)
    ch = np.array([[1.0 + 1.0j, 0.5], [2.0, -1.0j]])  # (K=2, N=2)
    y = pilot_observation(ch, pilots, tau_p, p_p)
    h_hat = despread_estimate(y, pilots[:, 1], alpha, tau_p, p_p)
    gain = tau_p * p_p * alpha / (1 + tau_p * p_p * alpha)
    assert np.allclose(h_hat, gain * ch[1])


def test_despread_rejects_bad_pilot():
    with pytest.raises(ValueError):
        despread_estimate(np.zeros((2, 4)), np.ones(4), 1.0, 4, 1.0)
    with pytest.raises(ValueError):
        despread_estimate(np.zeros((2, 4)), np.ones(3) / np.sqrt(3), 1.0, 4, 1.0)
