"""Direct Monte-Carlo integration of the stochastic coupling dynamics.

This is the ground truth the master equations are validated against.  Each
trajectory propagates the single-particle unitary dU/dt = -i (H + Phi(t)) U
with piecewise-constant Gaussian coupling noise Phi, held fixed over each
step of length dt and drawn with per-pair variance gamma/dt (the noise
intensity calibration gamma = sigma^2 * dt with the correlation time
identified with the step).  The Heun update uses the same sampled noise
matrix in predictor and corrector, which converges to the Stratonovich
solution; an Euler-Maruyama scheme is provided as a deliberately
Ito-converging control.

Trajectory k of an ensemble draws from a Philox counter-based stream keyed
by (base_seed, k), so ensembles are reproducible and partitionable: results
are bitwise identical for any worker count, and trajectory k propagated on
its own reproduces ensemble member k exactly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._kernels import BACKEND, step_block
from .errors import (
    DimensionMismatchError,
    InvariantViolationError,
    NonPositiveInputError,
    UnitarityLostError,
    ZeroAmplitudeError,
)
from .network import validate_network
from .ode import TimeGrid
from .two_particle import (
    BOSON,
    FERMION,
    InputAmplitudeProfile,
    TwoParticleAmplitude,
    compose_two_particle_amplitude,
)

__all__ = [
    "BACKEND", "NoiseRealization", "TrajectoryEnsemble",
    "gamma_from_sigma", "sigma_sq_from_gamma", "trajectory_rng",
    "sample_coupling_noise", "propagate_unitary_trajectory",
    "mc_single_density", "mc_two_density",
]

#: trajectories per reduction chunk; fixed so reductions are order-deterministic
TRAJECTORY_CHUNK = 2500
#: steps per noise block (bounds memory; does not affect the value streams)
NOISE_BLOCK_STEPS = 4096
#: sub-batch for density accumulation (bounds the (c, d, d) temporaries)
ACCUM_BATCH = 256

DEFAULT_UNITARITY_TOL = 1e-4


def gamma_from_sigma(sigma_sq, delta_t):
    """Noise intensity (ps^-1) from variance (ps^-2) and correlation time (ps)."""
    if sigma_sq <= 0 or delta_t <= 0:
        raise NonPositiveInputError(
            f"sigma_sq and delta_t must be positive, got {sigma_sq!r}, {delta_t!r}")
    return sigma_sq * delta_t


def sigma_sq_from_gamma(gamma, delta_t):
    """Inverse calibration: the Gaussian variance reproducing intensity gamma."""
    if gamma <= 0 or delta_t <= 0:
        raise NonPositiveInputError(
            f"gamma and delta_t must be positive, got {gamma!r}, {delta_t!r}")
    return gamma / delta_t


def trajectory_rng(base_seed, index) -> np.random.Generator:
    """Counter-based per-trajectory stream: Philox keyed by (base_seed, index)."""
    key = np.array([int(base_seed) & 0xFFFFFFFFFFFFFFFF, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class NoiseRealization:
    """Sequential reader of one trajectory's coupling-noise increments.

    Increments are identical for (n, m) and (m, n) by construction (only the
    n < m pairs are drawn) and independent across pairs and steps.  Blocks
    may be read in any partition; the value sequence depends only on
    (base_seed, index, dt).
    """

    def __init__(self, net, base_seed, index, dt):
        if dt <= 0:
            raise NonPositiveInputError(f"dt must be positive, got {dt!r}")
        net = validate_network(net)
        self.base_seed = int(base_seed)
        self.index = int(index)
        self.dt = float(dt)
        self.n_sites = net.n_sites
        self.pair_rows = net.pair_rows
        self.pair_cols = net.pair_cols
        self.scale = np.sqrt(net.pair_gammas / dt)
        self._gen = trajectory_rng(base_seed, index)

    @property
    def n_pairs(self):
        return len(self.pair_rows)

    def standard_block(self, n_steps):
        """Next (n_steps, n_pairs) block of standard normals."""
        return self._gen.standard_normal((n_steps, self.n_pairs))

    def coupling_matrices(self, n_steps):
        """Next block as symmetric (n_steps, N, N) coupling offsets, ps^-1."""
        offsets = self.standard_block(n_steps) * self.scale
        out = np.zeros((n_steps, self.n_sites, self.n_sites))
        out[:, self.pair_rows, self.pair_cols] = offsets
        out[:, self.pair_cols, self.pair_rows] = offsets
        return out


def sample_coupling_noise(rng, net, dt):
    """One step's instantaneous coupling offsets: symmetric, zero diagonal.

    Each pair n < m gets a single Gaussian with variance gamma_nm / dt,
    mirrored to (m, n).
    """
    if dt <= 0:
        raise NonPositiveInputError(f"dt must be positive, got {dt!r}")
    net = validate_network(net)
    draw = rng.standard_normal(len(net.pair_rows)) * np.sqrt(net.pair_gammas / dt)
    out = np.zeros((net.n_sites, net.n_sites))
    out[net.pair_rows, net.pair_cols] = draw
    out[net.pair_cols, net.pair_rows] = draw
    return out


def _steps_per_interval(grid: TimeGrid, dt):
    """Step counts between consecutive sample times; all must align with dt."""
    steps = []
    prev = grid.t_start
    for ts in grid.sample_times:
        span = float(ts) - prev
        k = int(round(span / dt))
        if abs(k * dt - span) > 1e-9 * max(1.0, abs(span) / dt):
            raise ValueError(
                f"sample time {ts} is not a whole number of steps dt={dt} "
                f"from {prev}; choose a commensurate grid or dt")
        steps.append(k)
        prev = float(ts)
    return steps


def _unitarity_defects(u_batch):
    n = u_batch.shape[1]
    gram = np.einsum("kji,kjl->kil", u_batch.conj(), u_batch)
    gram[:, np.arange(n), np.arange(n)] -= 1.0
    return np.abs(gram).reshape(u_batch.shape[0], -1).max(axis=1)


def propagate_unitary_trajectory(net, seed, dt, grid: TimeGrid, *, scheme="heun",
                                 unitarity_tol=DEFAULT_UNITARITY_TOL,
                                 trajectory_index=0):
    """Propagate one noisy single-particle propagator from U(0) = identity.

    Returns ``[(t, U), ...]`` at the grid's sample times.  The Heun scheme
    enforces ``max|U^dag U - I| <= unitarity_tol`` at every sample time;
    violation means dt is too large for the configured noise.  The Euler
    scheme is the Ito control and is intentionally not norm-preserving, so
    no defect check applies.
    """
    if scheme not in ("heun", "euler"):
        raise ValueError(f"scheme must be 'heun' or 'euler', got {scheme!r}")
    net = validate_network(net)
    stream = NoiseRealization(net, seed, trajectory_index, dt)
    u = np.eye(net.n_sites, dtype=complex)[None].copy()
    out = []
    for ts, ksteps in zip(grid.sample_times, _steps_per_interval(grid, dt)):
        remaining = ksteps
        while remaining > 0:
            b = min(NOISE_BLOCK_STEPS, remaining)
            noise = stream.standard_block(b)[None]
            step_block(u, net.hamiltonian.astype(complex), noise, stream.scale,
                       net.pair_rows, net.pair_cols, dt, scheme)
            remaining -= b
        if scheme == "heun":
            defect = _unitarity_defects(u)[0]
            if defect > unitarity_tol:
                raise UnitarityLostError(
                    f"trajectory {trajectory_index}: unitarity defect {defect:.2e} > "
                    f"{unitarity_tol:g} at t = {ts:g} ps (dt too large for this gamma)")
        out.append((float(ts), u[0].copy()))
    return out


@dataclass
class TrajectoryEnsemble:
    """Seeded ensemble statistics: per-sample mean and squared-deviation sums."""

    times: np.ndarray      # (S,)
    mean: np.ndarray       # (S, d, d) complex
    m2: np.ndarray         # (S, d, d) real, sum over trajectories of |x - mean|^2
    n_traj: int
    base_seed: int
    dt: float
    scheme: str

    def standard_error(self):
        """Element-wise standard error of the ensemble mean (complex modulus)."""
        if self.n_traj < 2:
            return np.zeros_like(self.m2)
        return np.sqrt(self.m2 / (self.n_traj * (self.n_traj - 1)))


def _run_chunk(net, dt, grid_steps, sample_count, base_seed, start, count,
               scheme, unitarity_tol, make_densities, dim):
    """Propagate trajectories [start, start+count) and return partial sums."""
    streams = [NoiseRealization(net, base_seed, start + k, dt) for k in range(count)]
    n = net.n_sites
    u = np.broadcast_to(np.eye(n, dtype=complex), (count, n, n)).copy()
    ham = net.hamiltonian.astype(complex)
    sums = np.zeros((sample_count, dim, dim), dtype=complex)
    sumsq = np.zeros((sample_count, dim, dim))
    noise = None
    for s_idx, ksteps in enumerate(grid_steps):
        remaining = ksteps
        while remaining > 0:
            b = min(NOISE_BLOCK_STEPS, remaining)
            if noise is None or noise.shape[1] != b:
                noise = np.empty((count, b, len(net.pair_rows)))
            for k, stream in enumerate(streams):
                noise[k] = stream.standard_block(b)
            step_block(u, ham, noise, streams[0].scale,
                       net.pair_rows, net.pair_cols, dt, scheme)
            remaining -= b
        if scheme == "heun":
            defects = _unitarity_defects(u)
            bad = np.nonzero(defects > unitarity_tol)[0]
            if bad.size:
                k = int(bad[0])
                raise UnitarityLostError(
                    f"trajectory {start + k}: unitarity defect {defects[k]:.2e} > "
                    f"{unitarity_tol:g} at sample {s_idx} (dt too large for this gamma)")
        for lo in range(0, count, ACCUM_BATCH):
            dens = make_densities(u[lo:lo + ACCUM_BATCH])
            sums[s_idx] += dens.sum(axis=0)
            sumsq[s_idx] += (dens.real ** 2 + dens.imag ** 2).sum(axis=0)
    return count, sums, sumsq


def _ensemble(net, dt, grid, base_seed, n_traj, scheme, unitarity_tol,
              threads, make_densities, dim):
    if n_traj < 1:
        raise NonPositiveInputError(f"n_traj must be >= 1, got {n_traj}")
    if scheme not in ("heun", "euler"):
        raise ValueError(f"scheme must be 'heun' or 'euler', got {scheme!r}")
    grid_steps = _steps_per_interval(grid, dt)
    sample_count = len(grid.sample_times)
    starts = list(range(0, n_traj, TRAJECTORY_CHUNK))
    jobs = [(start, min(TRAJECTORY_CHUNK, n_traj - start)) for start in starts]

    def work(job):
        start, count = job
        return _run_chunk(net, dt, grid_steps, sample_count, base_seed, start,
                          count, scheme, unitarity_tol, make_densities, dim)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(work, jobs))
    else:
        partials = [work(job) for job in jobs]

    # chunk partials are combined in index order: identical for any thread count
    total = 0
    sums = np.zeros((sample_count, dim, dim), dtype=complex)
    sumsq = np.zeros((sample_count, dim, dim))
    for count, s, sq in partials:
        total += count
        sums += s
        sumsq += sq
    mean = sums / total
    m2 = np.maximum(sumsq - total * (mean.real ** 2 + mean.imag ** 2), 0.0)
    return TrajectoryEnsemble(
        times=np.asarray(grid.sample_times, dtype=float), mean=mean, m2=m2,
        n_traj=total, base_seed=int(base_seed), dt=float(dt), scheme=scheme)


def mc_single_density(net, psi0, n_traj, dt, grid: TimeGrid, base_seed, *,
                      scheme="heun", unitarity_tol=DEFAULT_UNITARITY_TOL,
                      threads=1) -> TrajectoryEnsemble:
    """Ensemble of single-particle densities psi psi^dag from seeded trajectories."""
    net = validate_network(net)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (net.n_sites,):
        raise DimensionMismatchError(
            f"psi0 has shape {psi0.shape}, expected ({net.n_sites},)")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-12:
        raise InvariantViolationError("psi0 must be normalized")

    def make_densities(u_batch):
        psi = np.einsum("kpq,q->kp", u_batch, psi0)
        return psi[:, :, None] * psi.conj()[:, None, :]

    return _ensemble(net, dt, grid, base_seed, n_traj, scheme, unitarity_tol,
                     threads, make_densities, net.n_sites)


def _normalize_two_particle_input(net, initial, statistics):
    """Reduce any accepted input form to [(weight, unit-norm pair amplitude)]."""
    n = net.n_sites
    if isinstance(initial, InputAmplitudeProfile):
        if statistics not in (BOSON, FERMION):
            raise ValueError("an amplitude profile needs statistics='boson' or 'fermion'")
        amp = compose_two_particle_amplitude(np.eye(n, dtype=complex), initial, statistics)
        return [(1.0, amp.psi)]
    if isinstance(initial, TwoParticleAmplitude):
        return [(1.0, initial.psi)]
    if isinstance(initial, np.ndarray):
        psi = np.asarray(initial, dtype=complex)
        if psi.shape != (n, n):
            raise DimensionMismatchError(
                f"explicit amplitude has shape {psi.shape}, expected ({n}, {n})")
        norm = np.linalg.norm(psi)
        if norm < 1e-10:
            raise ZeroAmplitudeError("explicit amplitude has zero norm")
        return [(1.0, psi / norm)]
    components = []
    total = 0.0
    for weight, psi in initial:
        psi = np.asarray(psi, dtype=complex)
        if psi.shape != (n, n):
            raise DimensionMismatchError(
                f"mixture component has shape {psi.shape}, expected ({n}, {n})")
        norm = np.linalg.norm(psi)
        if norm < 1e-10:
            raise ZeroAmplitudeError("mixture component has zero norm")
        components.append((float(weight), psi / norm))
        total += float(weight)
    if abs(total - 1.0) > 1e-9:
        raise InvariantViolationError(f"mixture weights sum to {total!r}, expected 1")
    return components


def mc_two_density(net, initial, n_traj, dt, grid: TimeGrid, base_seed, *,
                   statistics=None, scheme="heun",
                   unitarity_tol=DEFAULT_UNITARITY_TOL,
                   threads=1) -> TrajectoryEnsemble:
    """Ensemble of two-particle densities <psi_pq psi*_p'q'>.

    ``initial`` may be an InputAmplitudeProfile (with ``statistics``), an
    explicit TwoParticleAmplitude or (N, N) array, or a mixture given as an
    iterable of ``(weight, amplitude)`` pairs.  Both particles ride the same
    noise realization: each trajectory propagates one single-particle U and
    composes psi(t) = U psi(0) U^T, which equals re-composing the +/-
    formula at every sample time because U^T U* = (U^dag U)^T = I.  Mixture
    components are averaged within the same realization.
    """
    net = validate_network(net)
    components = _normalize_two_particle_input(net, initial, statistics)
    n = net.n_sites

    def make_densities(u_batch):
        out = None
        for weight, psi0 in components:
            psi = np.einsum("kpm,mn,kqn->kpq", u_batch, psi0, u_batch)
            flat = psi.reshape(psi.shape[0], n * n)
            term = weight * (flat[:, :, None] * flat.conj()[:, None, :])
            out = term if out is None else out + term
        return out

    return _ensemble(net, dt, grid, base_seed, n_traj, scheme, unitarity_tol,
                     threads, make_densities, n * n)
