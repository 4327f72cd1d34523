"""Fixed-step RK4 kernel for sparse single-excitation propagation.

The Hamiltonian is held in CSR form.  Time dependence enters only through
coupling-point envelopes; their CSR data positions and base values are
passed in together with envelope scales pre-tabulated on the half-step grid
t_0 + 0.5*dt*j (RK4 evaluates H at t, t+dt/2 and t+dt).  The loop is strictly
serial so a fixed configuration produces bit-identical trajectories.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _csr_matvec(indptr, indices, data, x, out):
    n = indptr.shape[0] - 1
    for i in range(n):
        acc = 0.0j
        for jj in range(indptr[i], indptr[i + 1]):
            acc += data[jj] * x[indices[jj]]
        out[i] = acc


@njit(cache=True)
def _set_scales(data, sched_pos, sched_base, sched_which, scales, half_idx):
    for p in range(sched_pos.shape[0]):
        data[sched_pos[p]] = sched_base[p] * scales[sched_which[p], half_idx]


@njit(cache=True)
def rk4_run(indptr, indices, data, sched_pos, sched_base, sched_which, scales,
            psi0, dt, n_steps, sample_steps, absorb_idx, absorb_rate,
            absorb_region, n_regions):
    """Integrate i d(psi)/dt = H(t) psi over n_steps of size dt.

    Returns (samples, sample_norms, absorbed) where ``samples`` holds psi at
    the requested step indices, ``sample_norms`` the corresponding norms, and
    ``absorbed`` the probability accumulated per absorber region up to each
    sample (rectangle rule, diagnostic accuracy).
    """
    n = psi0.shape[0]
    psi = psi0.copy()
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    work = np.empty(n, np.complex128)

    n_samples = sample_steps.shape[0]
    samples = np.empty((n_samples, n), np.complex128)
    sample_norms = np.empty(n_samples, np.float64)
    absorbed = np.zeros((n_samples, n_regions), np.float64)
    acc = np.zeros(n_regions, np.float64)

    dynamic = sched_pos.shape[0] > 0
    ptr = 0

    for step in range(n_steps + 1):
        if ptr < n_samples and sample_steps[ptr] == step:
            samples[ptr, :] = psi
            norm2 = 0.0
            for i in range(n):
                norm2 += psi[i].real ** 2 + psi[i].imag ** 2
            sample_norms[ptr] = np.sqrt(norm2)
            for r in range(n_regions):
                absorbed[ptr, r] = acc[r]
            ptr += 1
        if step == n_steps:
            break

        if dynamic:
            _set_scales(data, sched_pos, sched_base, sched_which, scales, 2 * step)
        _csr_matvec(indptr, indices, data, psi, work)
        for i in range(n):
            k1[i] = -1j * work[i]
        for i in range(n):
            work[i] = psi[i] + 0.5 * dt * k1[i]
        if dynamic:
            _set_scales(data, sched_pos, sched_base, sched_which, scales, 2 * step + 1)
        _csr_matvec(indptr, indices, data, work, k2)
        for i in range(n):
            k2[i] = -1j * k2[i]
        for i in range(n):
            work[i] = psi[i] + 0.5 * dt * k2[i]
        _csr_matvec(indptr, indices, data, work, k3)
        for i in range(n):
            k3[i] = -1j * k3[i]
        for i in range(n):
            work[i] = psi[i] + dt * k3[i]
        if dynamic:
            _set_scales(data, sched_pos, sched_base, sched_which, scales, 2 * step + 2)
        _csr_matvec(indptr, indices, data, work, k4)
        for i in range(n):
            k4[i] = -1j * k4[i]
        for i in range(n):
            psi[i] = psi[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

        for a in range(absorb_idx.shape[0]):
            i = absorb_idx[a]
            acc[absorb_region[a]] += (
                absorb_rate[a] * (psi[i].real ** 2 + psi[i].imag ** 2) * dt
            )

    return samples, sample_norms, absorbed
