"""Trajectory integration and empirical checks that a computed ball traps."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DimensionError, DivergenceError
from .model import LosslessQuadraticSystem, ShiftedForm, energy_rate

BLOWUP_NORM = 1e12
BOUND_RTOL = 1e-3


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), n)
    step_size: float
    method: str = "rk4"

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def integrate(sys: LosslessQuadraticSystem, x0, t_final: float, dt: float,
              *, t0: float = 0.0, backend=None) -> Trajectory:
    """Classical fixed-step RK4 from ``x0`` over ``[t0, t0 + t_final]``.

    Raises :class:`DivergenceError` if the state norm exceeds 1e12 or
    becomes non-finite.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n,):
        raise DimensionError(f"x0 must have shape ({sys.n},)")
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_final < dt:
        raise ValueError("t_final must be at least dt")
    if not np.all(np.isfinite(x0)):
        raise DivergenceError("non-finite initial state", step=0)
    nsteps = int(round(t_final / dt))
    rk4 = backend or kernels.rk4_integrate
    qi, qj, qk, qw = kernels.triplet_weights(sys)
    states, status, step = rk4(sys.c, sys.L, qi, qj, qk, qw, x0, float(dt), nsteps, BLOWUP_NORM)
    if status == 1:
        raise DivergenceError(f"state norm exceeded {BLOWUP_NORM:g} at step {step}", step=step)
    if status == 2:
        raise DivergenceError(f"non-finite state at step {step}", step=step)
    times = t0 + dt * np.arange(nsteps + 1)
    states.setflags(write=False)
    return Trajectory(times, states, float(dt))


def energy_trace(traj: Trajectory, m) -> np.ndarray:
    """``|x(t_i) - m|`` at every sample."""
    m = np.asarray(m, dtype=float)
    if m.shape != (traj.n,):
        raise DimensionError(f"m must have shape ({traj.n},)")
    return np.linalg.norm(traj.states - m, axis=1)


def check_ultimate_bound(traj: Trajectory, m, R: float, settle_time: float) -> bool:
    """True iff every sample at or after ``settle_time`` lies within ``R (1 + 1e-3)`` of ``m``."""
    dist = energy_trace(traj, m)
    late = traj.times >= settle_time
    return bool(np.all(dist[late] <= R * (1.0 + BOUND_RTOL)))


def monotonicity_outside(traj: Trajectory, sf: ShiftedForm, R: float) -> float | None:
    """Largest energy rate among samples outside the ball ``B(m, R)``.

    Negative means energy strictly decreases everywhere the trajectory was
    outside the ball. ``None`` means the trajectory never left the ball.
    """
    y = traj.states - sf.m
    outside = np.linalg.norm(y, axis=1) > R * (1.0 + BOUND_RTOL)
    if not np.any(outside):
        return None
    return float(np.max(energy_rate(sf, y[outside])))


def random_initial_conditions(count: int, low, high, seed: int) -> np.ndarray:
    """Uniform samples in the box ``[low, high]`` (per-axis bounds broadcast)."""
    rng = np.random.default_rng(seed)
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    return rng.uniform(low, high, size=(count,) + np.broadcast(low, high).shape)


def write_trajectory_csv(traj: Trajectory, m, path) -> None:
    """Header ``t,x1,...,xn,dist_to_center``, 17 significant digits."""
    dist = energy_trace(traj, m)
    cols = ["t"] + [f"x{i + 1}" for i in range(traj.n)] + ["dist_to_center"]
    data = np.column_stack([traj.times, traj.states, dist])
    with Path(path).open("w") as fh:
        fh.write(",".join(cols) + "\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.17g")
