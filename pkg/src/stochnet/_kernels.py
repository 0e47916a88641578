"""Trajectory stepping kernels.

Both backends advance a batch of single-particle propagators through one
block of piecewise-constant coupling noise.  ``noise`` has shape
(n_traj, n_steps, n_pairs) holding *standard* normals; the per-pair scale
sqrt(gamma/dt) is applied inside the kernel.  The Heun update is the fused
form U <- U - i dt K U - (dt^2/2) K^2 U, algebraically identical to the
predictor-corrector pair with the same noise matrix in both stages.

Set STOCHNET_NO_NUMBA=1 to force the pure-numpy backend (useful for
debugging; results agree to rounding but not bitwise).
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised through the backend flag
    import numba
except ImportError:  # pragma: no cover
    numba = None


def _heun_block_impl(u, ham, noise, sig, rows, cols, dt):
    n_traj, n_steps, n_pairs = noise.shape
    n = u.shape[1]
    k = np.empty((n, n), dtype=np.complex128)
    v = np.empty((n, n), dtype=np.complex128)
    t1 = np.empty((n, n), dtype=np.complex128)
    t2 = np.empty((n, n), dtype=np.complex128)
    c2 = 0.5 * dt * dt
    for tr in range(n_traj):
        for i in range(n):
            for j in range(n):
                v[i, j] = u[tr, i, j]
        for s in range(n_steps):
            for i in range(n):
                for j in range(n):
                    k[i, j] = ham[i, j]
            for p in range(n_pairs):
                w = noise[tr, s, p] * sig[p]
                k[rows[p], cols[p]] += w
                k[cols[p], rows[p]] += w
            for i in range(n):
                for j in range(n):
                    acc = 0.0 + 0.0j
                    for l in range(n):
                        acc += k[i, l] * v[l, j]
                    t1[i, j] = acc
            for i in range(n):
                for j in range(n):
                    acc = 0.0 + 0.0j
                    for l in range(n):
                        acc += k[i, l] * t1[l, j]
                    t2[i, j] = acc
            for i in range(n):
                for j in range(n):
                    v[i, j] = v[i, j] - 1j * dt * t1[i, j] - c2 * t2[i, j]
        for i in range(n):
            for j in range(n):
                u[tr, i, j] = v[i, j]


def _euler_block_impl(u, ham, noise, sig, rows, cols, dt):
    n_traj, n_steps, n_pairs = noise.shape
    n = u.shape[1]
    k = np.empty((n, n), dtype=np.complex128)
    v = np.empty((n, n), dtype=np.complex128)
    t1 = np.empty((n, n), dtype=np.complex128)
    for tr in range(n_traj):
        for i in range(n):
            for j in range(n):
                v[i, j] = u[tr, i, j]
        for s in range(n_steps):
            for i in range(n):
                for j in range(n):
                    k[i, j] = ham[i, j]
            for p in range(n_pairs):
                w = noise[tr, s, p] * sig[p]
                k[rows[p], cols[p]] += w
                k[cols[p], rows[p]] += w
            for i in range(n):
                for j in range(n):
                    acc = 0.0 + 0.0j
                    for l in range(n):
                        acc += k[i, l] * v[l, j]
                    t1[i, j] = acc
            for i in range(n):
                for j in range(n):
                    v[i, j] = v[i, j] - 1j * dt * t1[i, j]
        for i in range(n):
            for j in range(n):
                u[tr, i, j] = v[i, j]


def _heun_block_numpy(u, ham, noise, sig, rows, cols, dt):
    n_traj = u.shape[0]
    k = np.empty_like(u)
    scaled = noise * sig
    for s in range(noise.shape[1]):
        k[:] = ham
        k[:, rows, cols] += scaled[:, s]
        k[:, cols, rows] += scaled[:, s]
        t1 = np.matmul(k, u)
        t2 = np.matmul(k, t1)
        u -= 1j * dt * t1 + (0.5 * dt * dt) * t2
    return u


def _euler_block_numpy(u, ham, noise, sig, rows, cols, dt):
    k = np.empty_like(u)
    scaled = noise * sig
    for s in range(noise.shape[1]):
        k[:] = ham
        k[:, rows, cols] += scaled[:, s]
        k[:, cols, rows] += scaled[:, s]
        u -= 1j * dt * np.matmul(k, u)
    return u


if numba is not None and not os.environ.get("STOCHNET_NO_NUMBA"):
    BACKEND = "numba"
    _heun_jit = numba.njit(cache=True, nogil=True)(_heun_block_impl)
    _euler_jit = numba.njit(cache=True, nogil=True)(_euler_block_impl)

    def step_block(u, ham, noise, sig, rows, cols, dt, scheme):
        if scheme == "heun":
            _heun_jit(u, ham, noise, sig, rows, cols, dt)
        else:
            _euler_jit(u, ham, noise, sig, rows, cols, dt)
        return u
else:  # pragma: no cover - backend fallback
    BACKEND = "numpy"

    def step_block(u, ham, noise, sig, rows, cols, dt, scheme):
        if scheme == "heun":
            return _heun_block_numpy(u, ham, noise, sig, rows, cols, dt)
        return _euler_block_numpy(u, ham, noise, sig, rows, cols, dt)
