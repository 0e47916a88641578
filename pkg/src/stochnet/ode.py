"""Fixed- and adaptive-step RK4 integration of complex linear ODE systems.

All right-hand sides in this package are time-independent linear maps, but
the integrator accepts any ``rhs(t, state) -> dstate`` over complex vectors.
Times are in ps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteStateError, StepUnderflowError

#: hard floor for the adaptive step, ps
MIN_STEP = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Output grid: integration window plus strictly increasing sample times."""

    t_start: float
    t_end: float
    sample_times: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.sample_times, dtype=float)
        object.__setattr__(self, "sample_times", ts)
        if self.t_end < self.t_start:
            raise ValueError(f"t_end {self.t_end} < t_start {self.t_start}")
        if ts.size:
            if np.any(np.diff(ts) <= 0):
                raise ValueError("sample_times must be strictly increasing")
            if ts[0] < self.t_start - 1e-12 or ts[-1] > self.t_end + 1e-12:
                raise ValueError("sample_times must lie within [t_start, t_end]")

    @classmethod
    def linspace(cls, t_start, t_end, n_samples):
        return cls(t_start, t_end, np.linspace(t_start, t_end, n_samples))


@dataclass(frozen=True)
class SolverOptions:
    """Step control. ``fixed`` subdivides so the actual step never exceeds dt;
    ``adaptive`` uses RK4 step doubling against rel_tol/abs_tol."""

    dt: float = 1e-3
    mode: str = "fixed"
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.mode not in ("fixed", "adaptive"):
            raise ValueError(f"mode must be 'fixed' or 'adaptive', got {self.mode!r}")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")


def rk4_step(rhs, state, t, dt):
    """One classical Runge-Kutta step; the input state is never mutated."""
    y = np.asarray(state, dtype=complex)
    with np.errstate(invalid="ignore", over="ignore"):  # diagnosed via isfinite below
        k1 = np.asarray(rhs(t, y))
        k2 = np.asarray(rhs(t + dt / 2, y + (dt / 2) * k1))
        k3 = np.asarray(rhs(t + dt / 2, y + (dt / 2) * k2))
        k4 = np.asarray(rhs(t + dt, y + dt * k3))
        out = y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(out.view(float))):
        raise NonFiniteStateError(f"non-finite state after step at t = {t:g} ps")
    return out


def _advance_fixed(rhs, y, t0, t1, dt):
    span = t1 - t0
    n_sub = max(1, int(np.ceil(span / dt - 1e-9)))
    h = span / n_sub
    for i in range(n_sub):
        y = rk4_step(rhs, y, t0 + i * h, h)
    return y


def _advance_adaptive(rhs, y, t0, t1, opts):
    t = t0
    h = min(opts.dt, t1 - t0)
    while t < t1 - 1e-14 * max(1.0, abs(t1)):
        h = min(h, t1 - t)
        if h < MIN_STEP:
            raise StepUnderflowError(f"adaptive step fell below {MIN_STEP} ps at t = {t:g}")
        coarse = rk4_step(rhs, y, t, h)
        half = rk4_step(rhs, y, t, h / 2)
        fine = rk4_step(rhs, half, t + h / 2, h / 2)
        scale = opts.abs_tol + opts.rel_tol * max(np.abs(fine).max(), np.abs(y).max())
        err = np.abs(fine - coarse).max() / 15.0  # Richardson estimate for RK4
        ratio = err / scale
        if ratio <= 1.0:
            y = fine
            t = t + h
            h = h * min(5.0, max(1.0, 0.9 * ratio ** -0.2 if ratio > 0 else 5.0))
        else:
            h = h * max(0.2, 0.9 * ratio ** -0.2)
    return y


def integrate(rhs, state0, grid: TimeGrid, opts: SolverOptions):
    """Integrate from grid.t_start and return ``[(t, state), ...]`` at each sample time."""
    y = np.asarray(state0, dtype=complex)
    if not np.all(np.isfinite(y.view(float))):
        raise NonFiniteStateError("initial state contains NaN or Inf")
    out = []
    t = grid.t_start
    for ts in grid.sample_times:
        if ts > t + 1e-14 * max(1.0, abs(ts)):
            if opts.mode == "fixed":
                y = _advance_fixed(rhs, y, t, ts, opts.dt)
            else:
                y = _advance_adaptive(rhs, y, t, ts, opts)
            t = ts
        out.append((float(ts), y.copy()))
    return out
