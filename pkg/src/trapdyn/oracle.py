"""Brute-force checks that do not touch the convex machinery.

Everything here is deliberately naive: sampling the ellipsoid surface for
the farthest point, and exhaustive lattice search over shifts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEllipsoidError
from .model import EnergyEllipsoid, LosslessQuadraticSystem

_BATCH = 100_000
MAX_LATTICE_DIM = 4


@dataclass(frozen=True, eq=False)
class SampleReport:
    sample_count: int
    max_norm_found: float
    argmax_point: np.ndarray
    # largest |energy rate| on the samples, relative to the peak rate
    max_constraint_violation: float


def _unit_vectors(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    u = rng.standard_normal((count, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def sample_E_boundary(ee: EnergyEllipsoid, count: int, seed: int) -> np.ndarray:
    """``count`` points on the ellipsoid surface, directions uniform on the sphere."""
    if ee.degenerate:
        raise DegenerateEllipsoidError("cannot sample a degenerate ellipsoid")
    if count == 0:
        return np.zeros((0, ee.n))
    rng = np.random.default_rng(seed)
    return ee.boundary_point(_unit_vectors(rng, count, ee.n))


def brute_force_radius(ee: EnergyEllipsoid, count: int, seed: int) -> SampleReport:
    """Largest norm over ``count`` random surface points; a lower bound on the tight radius.

    Samples are drawn in batches from a single generator, so the sample set
    is identical to ``sample_E_boundary(ee, count, seed)``.
    """
    if ee.degenerate:
        raise DegenerateEllipsoidError("cannot sample a degenerate ellipsoid")
    rng = np.random.default_rng(seed)
    # E in its own eigenbasis: rate(y) = (y - c)^T A (y - c) - peak, with
    # A = axes diag(-peak / semi^2) axes^T
    curv = -ee.peak_rate / ee.semi_axes ** 2
    best, arg, worst = -1.0, None, 0.0
    done = 0
    while done < count:
        b = min(_BATCH, count - done)
        u = rng.standard_normal((b, ee.n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        pts = ee.boundary_point(u)
        norms = np.linalg.norm(pts, axis=1)
        i = int(np.argmax(norms))
        if norms[i] > best:
            best, arg = float(norms[i]), pts[i].copy()
        z = (pts - ee.center) @ ee.axes
        rate = z ** 2 @ curv + ee.peak_rate
        worst = max(worst, float(np.max(np.abs(rate))) / ee.peak_rate)
        done += b
    if arg is None:
        return SampleReport(0, 0.0, np.zeros(ee.n), 0.0)
    return SampleReport(count, best, arg, worst)


def lattice_search_shift(sys: LosslessQuadraticSystem, box_halfwidth: float,
                         points_per_axis: int, *, center=None) -> tuple[np.ndarray, float]:
    """Exhaustively minimize ``lambda_max(A_s(m))`` over a cubic lattice of shifts."""
    n = sys.n
    if n > MAX_LATTICE_DIM:
        cost = float(points_per_axis) ** n
        raise ValueError(
            f"lattice search refused for n={n} (> {MAX_LATTICE_DIM}): "
            f"{cost:.3g} eigenvalue problems of size {n}"
        )
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    axis = np.linspace(-box_halfwidth, box_halfwidth, points_per_axis)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    M = np.stack([g.ravel() for g in grids], axis=1) + center

    best_val, best_m = np.inf, None
    for start in range(0, M.shape[0], _BATCH):
        chunk = M[start:start + _BATCH]
        As = sys.L_s[None] - np.einsum("bk,kij->bij", chunk, sys.Q)
        lam1 = np.linalg.eigvalsh(As)[:, -1]
        i = int(np.argmin(lam1))
        if lam1[i] < best_val:
            best_val, best_m = float(lam1[i]), chunk[i].copy()
    return best_m, best_val
