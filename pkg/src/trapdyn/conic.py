"""Thin interface to an interior-point semidefinite solver.

Problems are posed as an affine pencil in cvxopt's standard form::

    minimize    c^T x
    subject to  hl - Gl x >= 0                 (elementwise)
                H_k - sum_j x_j G_kj  >= 0      (PSD, one block per k)

and the solution carries the dual blocks ``Z_k`` alongside the primal point.
Only this module imports cvxopt.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError

log = logging.getLogger(__name__)

# loosest tolerance tried after a breakdown (the solver's own default)
RELAX_FLOOR = 1e-7


@dataclass(frozen=True)
class SolverOptions:
    abstol: float = 1e-10
    reltol: float = 1e-10
    feastol: float = 1e-10
    max_iters: int = 200
    # strict-negativity margin for a*, relative to 1 + ||L_s||
    eps_neg: float = 1e-6
    # results that stop short of the tolerances are still accepted when
    # the duality gap and residuals are below this
    accept_tol: float = 1e-7


@dataclass
class LMIBlock:
    """``H - sum_j x_j G[j] >= 0`` with symmetric ``H`` and ``G[j]``."""

    H: np.ndarray
    G: list[np.ndarray]


@dataclass
class ConicSolution:
    x: np.ndarray
    Z: list[np.ndarray]
    zl: np.ndarray
    status: str
    iterations: int
    primal_objective: float
    dual_objective: float
    gap: float
    wall_time: float
    info: dict = field(default_factory=dict, repr=False)

    def metadata(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "primal_objective": self.primal_objective,
            "dual_objective": self.dual_objective,
            "gap": self.gap,
            "wall_time_s": self.wall_time,
        }


def _attempt(cost, Gs, hs, kwargs, tol, max_iters):
    from cvxopt import solvers

    opts = {"show_progress": False, "abstol": tol, "reltol": tol, "feastol": tol,
            "maxiters": max_iters}
    t0 = time.perf_counter()
    try:
        sol = solvers.sdp(cost, Gs=Gs, hs=hs, options=opts, **kwargs)
    except (ArithmeticError, ValueError) as exc:
        raise SolverError(f"conic solver failed: {exc}", status="exception") from exc
    return sol, time.perf_counter() - t0


def _acceptable(sol, accept_tol: float) -> bool:
    gap = sol.get("relative gap")
    pres, dres = sol.get("primal infeasibility"), sol.get("dual infeasibility")
    return all(v is not None and v <= accept_tol for v in (pres, dres)) and (
        (gap is not None and gap <= accept_tol)
        or (sol.get("gap") is not None and sol["gap"] <= accept_tol)
    )


def solve_sdp(
    cost,
    blocks: list[LMIBlock],
    Gl=None,
    hl=None,
    options: SolverOptions | None = None,
) -> ConicSolution:
    """Solve the pencil problem; see the module docstring for the form.

    Interior-point iterations can break down when asked for more accuracy
    than the problem's conditioning allows. On such a breakdown the solve is
    repeated with tolerances loosened by 100x per attempt, down to
    ``RELAX_FLOOR``; the resulting status is then ``"optimal_relaxed"``.
    """
    from cvxopt import matrix

    options = options or SolverOptions()
    cost = np.asarray(cost, dtype=float)
    nv = cost.shape[0]

    Gs, hs = [], []
    for blk in blocks:
        m = blk.H.shape[0]
        if len(blk.G) != nv:
            raise ValueError(f"block has {len(blk.G)} coefficient matrices, expected {nv}")
        # column-major vec of each coefficient matrix
        cols = np.column_stack([np.asarray(g, dtype=float).reshape(-1, order="F") for g in blk.G])
        Gs.append(matrix(cols.reshape(m * m, nv)))
        hs.append(matrix(np.asarray(blk.H, dtype=float)))

    kwargs = {}
    if Gl is not None:
        kwargs["Gl"] = matrix(np.asarray(Gl, dtype=float).reshape(-1, nv))
        kwargs["hl"] = matrix(np.asarray(hl, dtype=float).reshape(-1, 1))

    tol = min(options.abstol, options.reltol, options.feastol)
    wall = 0.0
    relaxed = False
    while True:
        try:
            sol, dt = _attempt(matrix(cost), Gs, hs, kwargs, tol, options.max_iters)
            wall += dt
            err = None
        except SolverError as exc:
            sol, err = None, exc
        if sol is not None and sol["x"] is not None:
            if sol["status"] == "optimal":
                status = "optimal_relaxed" if relaxed else "optimal"
                break
            if _acceptable(sol, options.accept_tol):
                status = "optimal_inaccurate"
                break
        if tol >= RELAX_FLOOR:
            if err is not None:
                raise err
            if sol is None or sol["x"] is None:
                raise SolverError("conic solver returned no point", status="unknown")
            raise SolverError(
                f"conic solver stopped with status {sol['status']!r} (gap={sol.get('gap')}, "
                f"pres={sol.get('primal infeasibility')}, dres={sol.get('dual infeasibility')})",
                status=sol["status"],
                info=dict(sol),
            )
        tol = min(tol * 100.0, RELAX_FLOOR)
        relaxed = True
        log.info("conic solve did not converge; retrying with tolerance %.1e", tol)

    # dual blocks come back in lower-triangular storage
    Z = [np.tril(np.array(z)) for z in sol["zs"]]
    Z = [z + np.tril(z, -1).T for z in Z]
    return ConicSolution(
        x=np.array(sol["x"]).ravel(),
        Z=Z,
        zl=np.array(sol["zl"]).ravel() if sol.get("zl") is not None else np.zeros(0),
        status=status,
        iterations=int(sol["iterations"]),
        primal_objective=float(sol["primal objective"]),
        dual_objective=float(sol["dual objective"]),
        gap=float(sol["gap"]),
        wall_time=wall,
    )
