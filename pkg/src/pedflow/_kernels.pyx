# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loop: synchronous stochastic lattice updates.

Must stay decision-for-decision identical to _kernels_py.ca_advance so
that either backend reproduces the other bit for bit.
"""


def ca_advance(signed char[::1] sigma_plus,
               signed char[::1] sigma_minus,
               double[:, :, ::1] uniforms,
               double[::1] ptab,
               signed char[::1] hop_plus,
               signed char[::1] hop_minus):
    """Advance the paired occupancy arrays in place by uniforms.shape[0] steps.

    uniforms[s, 0, k] decides the rightward hop of cell k at substep s,
    uniforms[s, 1, k] the leftward one. ptab[i] is the pre-multiplied hop
    probability for local configuration i (opposite occupant here + 2x
    opposite occupant in the target cell). hop_plus/hop_minus are scratch.
    """
    cdef Py_ssize_t n_steps = uniforms.shape[0]
    cdef Py_ssize_t n = sigma_plus.shape[0]
    cdef Py_ssize_t s, k, ka, kb

    with nogil:
        for s in range(n_steps):
            # decisions for both species from the pre-step state
            for k in range(n):
                ka = k + 1 if k + 1 < n else 0
                if sigma_plus[k] == 1 and sigma_plus[ka] == 0 and \
                        uniforms[s, 0, k] < ptab[sigma_minus[k] + 2 * sigma_minus[ka]]:
                    hop_plus[k] = 1
                else:
                    hop_plus[k] = 0
            for k in range(n):
                kb = k - 1 if k > 0 else n - 1
                if sigma_minus[k] == 1 and sigma_minus[kb] == 0 and \
                        uniforms[s, 1, k] < ptab[sigma_plus[k] + 2 * sigma_plus[kb]]:
                    hop_minus[k] = 1
                else:
                    hop_minus[k] = 0
            for k in range(n):
                ka = k + 1 if k + 1 < n else 0
                kb = k - 1 if k > 0 else n - 1
                sigma_plus[k] = sigma_plus[k] - hop_plus[k] + hop_plus[kb]
                sigma_minus[k] = sigma_minus[k] - hop_minus[k] + hop_minus[ka]
