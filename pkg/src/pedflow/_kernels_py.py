"""Pure-numpy fallback for the lattice stepping kernel.

Consumes the same uniforms in the same order and applies the same
comparisons as the compiled version in _kernels.pyx, so trajectories are
bit-identical across backends.
"""

import numpy as np


def ca_advance(sigma_plus, sigma_minus, uniforms, ptab, hop_plus=None, hop_minus=None):
    """Advance the paired occupancy arrays in place by uniforms.shape[0] steps.

    See _kernels.pyx for the argument contract; the scratch buffers are
    accepted for signature parity and ignored.
    """
    for s in range(uniforms.shape[0]):
        u_right = uniforms[s, 0]
        u_left = uniforms[s, 1]

        ahead_minus = np.roll(sigma_minus, -1)
        p_right = ptab[sigma_minus + 2 * ahead_minus]
        hop_r = (sigma_plus == 1) & (np.roll(sigma_plus, -1) == 0) & (u_right < p_right)

        behind_plus = np.roll(sigma_plus, 1)
        p_left = ptab[sigma_plus + 2 * behind_plus]
        hop_l = (sigma_minus == 1) & (np.roll(sigma_minus, 1) == 0) & (u_left < p_left)

        hop_r = hop_r.astype(np.int8)
        hop_l = hop_l.astype(np.int8)
        sigma_plus -= hop_r
        sigma_plus += np.roll(hop_r, 1)
        sigma_minus -= hop_l
        sigma_minus += np.roll(hop_l, -1)
