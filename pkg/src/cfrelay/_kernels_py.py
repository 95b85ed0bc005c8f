"""Pure-numpy implementation of the Monte-Carlo projection kernel.

Reference for the compiled ``_kernels`` extension, and the fallback when the
extension is not built.
"""

from __future__ import annotations

import numpy as np


def projections(h_hat, h_err, g_hat, g_err, s_A, s_B):
    """Effective scalar channels of every realization.

    Parameters
    ----------
    h_hat, h_err, g_hat, g_err : complex ndarray, shape (R, M, W, N)
        Estimates and estimation errors of the A-side and B-side channels.
    s_A, s_B : float ndarray, shape (M, W)
        Square roots of the downlink coefficients eta_A,mi and eta_B,mi.

    Returns
    -------
    tuple
        ``(mac_h, mac_g, bc_hh, bc_hg, bc_gg, bc_gh, noise)`` where the first
        six are complex (R, W, W) and ``noise`` is real (R, W)::

            mac_h[r,i,j] = sum_m (h_hat_mi + g_hat_mi)^H h_mj
            mac_g[r,i,j] = sum_m (h_hat_mi + g_hat_mi)^H g_mj
            bc_hh[r,i,j] = sum_m s_B[m,j] h_hat_mj^H h_mi
            bc_hg[r,i,j] = sum_m s_A[m,j] g_hat_mj^H h_mi
            bc_gg[r,i,j] = sum_m s_A[m,j] g_hat_mj^H g_mi
            bc_gh[r,i,j] = sum_m s_B[m,j] h_hat_mj^H g_mi
            noise[r,i]   = sum_m ||h_hat_mi + g_hat_mi||^2
    """
    R, M, W, N = h_hat.shape
    h = h_hat + h_err
    g = g_hat + g_err
    v = h_hat + g_hat

    def flat(x):
        # (R, M, W, N) -> (R, W, M*N)
        return np.ascontiguousarray(x.transpose(0, 2, 1, 3)).reshape(R, W, M * N)

    hf, gf, vf = flat(h), flat(g), flat(v)
    vH = vf.conj()
    mac_h = vH @ hf.transpose(0, 2, 1)
    mac_g = vH @ gf.transpose(0, 2, 1)

    wh = flat(h_hat * s_B[None, :, :, None]).conj().transpose(0, 2, 1)
    wg = flat(g_hat * s_A[None, :, :, None]).conj().transpose(0, 2, 1)
    bc_hh = hf @ wh
    bc_hg = hf @ wg
    bc_gg = gf @ wg
    bc_gh = gf @ wh
    noise = np.sum(np.abs(vf) ** 2, axis=2)
    return mac_h, mac_g, bc_hh, bc_hg, bc_gg, bc_gh, noise
