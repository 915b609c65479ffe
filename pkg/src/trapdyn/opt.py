"""Existence of trapping regions, tight radii, certificates and critical points.

Two independent routes compute the tight radius at a fixed shift:

* :func:`tight_radius_sdp` solves the dual SDP over ``(lambda, gamma)``;
* :func:`tight_radius_scalar` eliminates ``gamma`` with a generalized Schur
  complement and minimizes the resulting convex function of ``lambda``
  with a golden-section search.

:func:`analyze` runs both and fails loudly when they disagree.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .conic import LMIBlock, SolverOptions, solve_sdp
from .errors import InconsistencyError, NotNegativeDefiniteError, SolverError
from .model import (
    EnergyEllipsoid,
    LosslessQuadraticSystem,
    ShiftedForm,
    ellipsoid_E,
    shift,
)

log = logging.getLogger(__name__)

CERT_PSD_TOL = 1e-8
CERT_ORTH_TOL = 1e-6
CERT_SIGN_TOL = 1e-6
A_STAR_VERIFY_TOL = 1e-7
RANK_RTOL = 1e-8
D_COMPONENT_RTOL = 1e-10
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class TrappingStatus(str, enum.Enum):
    TRAPPING_EXISTS = "TrappingExists"
    NO_TRAPPING_REGION = "NoTrappingRegion"
    NUMERICALLY_MARGINAL = "NumericallyMarginal"


@dataclass(frozen=True, eq=False)
class ExistenceResult:
    a_star: float
    m_star: np.ndarray
    status: TrappingStatus
    certificate: np.ndarray | None = None
    # number of shift directions that leave A_s(m) unchanged; > 0 means the
    # optimal shift is not unique
    free_directions: int = 0
    a_sdp: float = float("nan")
    solver: dict = field(default_factory=dict)

    @property
    def exists(self) -> bool:
        return self.status is TrappingStatus.TRAPPING_EXISTS


@dataclass(frozen=True, eq=False)
class TrappingRegion:
    m: np.ndarray
    R_tight: float
    R_conservative: float
    lambda_star: float | None
    ultimate_bound_original: float
    gamma_star: float | None = None
    R_tight_sdp: float | None = None


@dataclass(frozen=True, eq=False)
class CriticalSphere:
    """Farthest points of non-decreasing energy: ``center + V w`` with ``|w| = radius``."""

    center: np.ndarray
    basis: np.ndarray  # (n, n - rank)
    radius: float
    rank: int

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]

    def point(self, w) -> np.ndarray:
        return self.center + self.basis @ np.asarray(w, dtype=float)

    def extreme_points(self) -> np.ndarray:
        """``center +/- radius * v`` for every basis column (just ``center`` if the basis is empty)."""
        if self.dimension == 0:
            return self.center[None, :].copy()
        pts = []
        for j in range(self.dimension):
            v = self.basis[:, j]
            pts.append(self.center + self.radius * v)
            pts.append(self.center - self.radius * v)
        return np.array(pts)

    def sample(self, count: int, seed: int) -> np.ndarray:
        if self.dimension == 0:
            return np.repeat(self.center[None, :], count, axis=0)
        rng = np.random.default_rng(seed)
        w = rng.standard_normal((count, self.dimension))
        w *= self.radius / np.linalg.norm(w, axis=1, keepdims=True)
        return self.center + w @ self.basis.T


# ---------------------------------------------------------------------------
# existence


def _shift_parametrization(sys: LosslessQuadraticSystem) -> np.ndarray:
    """Orthonormal basis of the shift directions that actually move A_s(m).

    The map ``m -> sum_i m_i Q^(i)`` usually has a null space (e.g. the Lorenz
    ``x1`` direction); dropping it keeps the SDP well posed.
    """
    n = sys.n
    M = sys.Q.reshape(n, n * n).T
    if not np.any(M):
        return np.zeros((n, 0))
    _, s, Vt = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > 1e-12 * s[0]))
    return Vt[:r].T


def certificate_checks(sys: LosslessQuadraticSystem, Z) -> dict:
    """Residuals of the theorem-of-alternatives conditions for ``Z``."""
    Z = np.asarray(Z, dtype=float)
    Zs = 0.5 * (Z + Z.T)
    min_eig = float(np.linalg.eigvalsh(Zs)[0])
    orth = np.einsum("ijk,jk->i", sys.Q, Zs)
    ls = float(np.sum(sys.L_s * Zs))
    norm = float(np.linalg.norm(Zs))
    return {
        "min_eig": min_eig,
        "fro_norm": norm,
        "max_abs_q_inner": float(np.max(np.abs(orth))) if orth.size else 0.0,
        "ls_inner": ls,
        "psd": min_eig >= -CERT_PSD_TOL,
        "normalized": abs(norm - 1.0) <= 1e-9,
        "orthogonal": (float(np.max(np.abs(orth))) if orth.size else 0.0) <= CERT_ORTH_TOL,
        "sign": ls >= -CERT_SIGN_TOL,
    }


def certificate_is_valid(sys: LosslessQuadraticSystem, Z) -> bool:
    chk = certificate_checks(sys, Z)
    return chk["psd"] and chk["normalized"] and chk["orthogonal"] and chk["sign"]


def solve_existence(sys: LosslessQuadraticSystem, opts: SolverOptions | None = None) -> ExistenceResult:
    """Minimize the largest eigenvalue of ``A_s(m)`` over all shifts ``m``.

    The returned ``a_star`` is the directly computed largest eigenvalue at
    ``m_star``, after checking it against the SDP's own optimal value. When
    ``a_star`` is not clearly negative the dual matrix is normalized to unit
    Frobenius norm and, if it passes :func:`certificate_checks`, attached as
    a proof that no trapping region exists.
    """
    opts = opts or SolverOptions()
    n = sys.n
    N = _shift_parametrization(sys)
    r = N.shape[1]
    scale = max(1.0, float(np.linalg.norm(sys.L_s, 2)))

    P = np.einsum("ir,ijk->rjk", N, sys.Q)
    G = [-P[j] / scale for j in range(r)] + [-np.eye(n)]
    cost = np.zeros(r + 1)
    cost[-1] = 1.0
    sol = solve_sdp(cost, [LMIBlock(H=-sys.L_s / scale, G=G)], options=opts)

    m_star = N @ sol.x[:r]
    a_sdp = scale * sol.x[-1]
    sf = shift(sys, m_star)
    a_direct = sf.lambda1
    if abs(a_direct - a_sdp) > A_STAR_VERIFY_TOL * scale:
        raise SolverError(
            f"SDP value {a_sdp:.10g} does not match lambda_max(A_s(m*)) = {a_direct:.10g}",
            status=sol.status,
            info=sol.metadata(),
        )

    eps = opts.eps_neg * (1.0 + float(np.linalg.norm(sys.L_s, 2)))
    meta = sol.metadata()
    if a_direct < -eps:
        return ExistenceResult(a_direct, m_star, TrappingStatus.TRAPPING_EXISTS,
                               free_directions=n - r, a_sdp=a_sdp, solver=meta)

    Z = sol.Z[0]
    nz = np.linalg.norm(Z)
    if nz > 0:
        Z = Z / nz
        if certificate_is_valid(sys, Z):
            return ExistenceResult(a_direct, m_star, TrappingStatus.NO_TRAPPING_REGION, Z,
                                   free_directions=n - r, a_sdp=a_sdp, solver=meta)
    log.warning("a* = %.3g is within the margin and no valid certificate was found", a_direct)
    return ExistenceResult(a_direct, m_star, TrappingStatus.NUMERICALLY_MARGINAL,
                           free_directions=n - r, a_sdp=a_sdp, solver=meta)


# ---------------------------------------------------------------------------
# radii


def conservative_radius(sf: ShiftedForm) -> float:
    sf.require_negative_definite()
    return float(np.linalg.norm(sf.d)) / abs(sf.lambda1)


def _schur_value(lam: float, eigs: np.ndarray, dt2: np.ndarray) -> float:
    """``-(lam^2/4) d^T (I + lam A_s)^+ d`` in the eigenbasis of A_s."""
    mu = 1.0 + lam * eigs
    if np.any(mu >= 0.0):
        return math.inf
    return 0.25 * lam * lam * float(np.sum(dt2 / -mu))


def schur_bound(sf: ShiftedForm, lam: float) -> float:
    """Smallest ``gamma`` feasible for the radius LMI at multiplier ``lam`` (inf if none)."""
    dt = sf.eigvecs.T @ sf.d
    keep = np.abs(dt) > D_COMPONENT_RTOL * float(np.linalg.norm(sf.d))
    return _schur_value(lam, sf.eigs[keep], dt[keep] ** 2)


def tight_radius_scalar(sf: ShiftedForm) -> tuple[float, float | None]:
    """Tight radius by one-dimensional convex minimization over the multiplier.

    Returns ``(R, lambda)``; ``lambda`` is ``None`` on the equilibrium branch
    where ``d(m) = 0`` and the radius is zero.
    """
    sf.require_negative_definite()
    if sf.is_equilibrium:
        return 0.0, None

    dt = sf.eigvecs.T @ sf.d
    # eigen-components of d that are numerically zero are projected out so
    # the boundary multiplier 1/|lambda_1| stays admissible when d has no
    # weight on the top eigenspace
    keep = np.abs(dt) > D_COMPONENT_RTOL * float(np.linalg.norm(sf.d))
    eigs, dt2 = sf.eigs[keep], dt[keep] ** 2

    def g(lam: float) -> float:
        return _schur_value(lam, eigs, dt2)

    lam_b = 1.0 / abs(sf.lambda1)
    lo = lam_b * (1.0 + 1e-12)
    prev, cur = lo, 2.0 * lo
    g_prev, g_cur = g(prev), g(cur)
    left = lo
    while g_cur < g_prev:
        left = prev
        prev, g_prev = cur, g_cur
        cur *= 2.0
        g_cur = g(cur)
    a, b = left, cur

    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = g(x1), g(x2)
    while b - a > 1e-10 * 0.5 * (a + b):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = g(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = g(x2)
    lam = 0.5 * (a + b)
    val = g(lam)
    # the bracket endpoint a = lo itself is admissible and may be best
    if g(lo) < val:
        lam, val = lo, g(lo)
    return math.sqrt(val), lam


def tight_radius_sdp(sf: ShiftedForm, opts: SolverOptions | None = None) -> tuple[float, float, float]:
    """Tight radius from the dual SDP: minimize ``gamma`` over ``lambda >= 0`` with

        [[I + lambda A_s, lambda d / 2], [lambda d^T / 2, -gamma]] <= 0.

    The problem is solved in units where ``|lambda_1| = 1`` and ``|d| = 1``
    and mapped back. Returns ``(sqrt(gamma), lambda, gamma)``.
    """
    sf.require_negative_definite()
    if sf.is_equilibrium:
        raise ValueError("d(m) = 0: the radius is zero and the SDP lacks a Slater point; "
                         "use tight_radius_scalar")
    opts = opts or SolverOptions()
    n = sf.n
    a1 = abs(sf.lambda1)
    dn = float(np.linalg.norm(sf.d))
    Ahat = sf.A_s / a1
    dhat = sf.d / dn

    H = np.zeros((n + 1, n + 1))
    H[:n, :n] = -np.eye(n)
    G_mu = np.zeros((n + 1, n + 1))
    G_mu[:n, :n] = Ahat
    G_mu[:n, n] = G_mu[n, :n] = 0.5 * dhat
    G_g = np.zeros((n + 1, n + 1))
    G_g[n, n] = -1.0
    sol = solve_sdp([0.0, 1.0], [LMIBlock(H=H, G=[G_mu, G_g])],
                    Gl=[[-1.0, 0.0]], hl=[0.0], options=opts)
    mu, ghat = float(sol.x[0]), float(sol.x[1])

    # re-verify feasibility of the returned point
    F = -(H - mu * G_mu - ghat * G_g)
    worst = float(np.linalg.eigvalsh(F)[-1])
    if worst > 1e-6 * (1.0 + mu) or mu < 0:
        raise SolverError(f"radius SDP point infeasible (max eig {worst:.3e})",
                          status=sol.status, info=sol.metadata())

    lam = mu / a1
    gamma = (dn / a1) ** 2 * ghat
    return math.sqrt(max(gamma, 0.0)), lam, gamma


# ---------------------------------------------------------------------------
# critical points


def critical_sphere(sf: ShiftedForm, lambda_star: float, R_tight: float) -> CriticalSphere:
    sf.require_negative_definite()
    if sf.is_equilibrium:
        raise ValueError("d(m) = 0: the only critical point is the origin")
    mu = 1.0 + lambda_star * sf.eigs
    thresh = RANK_RTOL * (1.0 + abs(lambda_star) * float(np.max(np.abs(sf.eigs))))
    null = np.abs(mu) <= thresh
    U = sf.eigvecs
    dt = U.T @ sf.d
    coef = np.zeros_like(dt)
    coef[~null] = dt[~null] / mu[~null]
    center = -0.5 * lambda_star * (U @ coef)
    V = U[:, null]
    r2 = R_tight ** 2 - float(center @ center)
    if r2 < -1e-6 * R_tight ** 2:
        raise InconsistencyError(
            f"critical sphere center lies outside the tight ball (R^2 - |c|^2 = {r2:.3e})"
        )
    radius = math.sqrt(max(r2, 0.0)) if V.shape[1] else 0.0
    return CriticalSphere(center=center, basis=V, radius=radius, rank=int(np.sum(~null)))


def kkt_residuals(sf: ShiftedForm, y, lambda_star: float) -> tuple[float, float]:
    """Stationarity residual ``|2(I + lambda A_s) y + lambda d|`` and constraint value ``f1(y)``."""
    y = np.asarray(y, dtype=float)
    M = np.eye(sf.n) + lambda_star * sf.A_s
    stat = float(np.linalg.norm(2.0 * M @ y + lambda_star * sf.d))
    f1 = float(sf.d @ y + y @ sf.A_s @ y)
    return stat, f1


# ---------------------------------------------------------------------------
# full pipeline


@dataclass(eq=False)
class AnalysisReport:
    system: LosslessQuadraticSystem
    existence: ExistenceResult
    shifted: ShiftedForm | None = None
    region: TrappingRegion | None = None
    sphere: CriticalSphere | None = None
    ellipsoid: EnergyEllipsoid | None = None
    center_policy: str = "auto"
    radius_solver: dict = field(default_factory=dict)
    route_rel_diff: float | None = None

    @property
    def bounded(self) -> bool:
        return self.region is not None

    def to_dict(self) -> dict:
        ex = self.existence
        out = {
            "existence": {
                "status": ex.status.value,
                "a_star": ex.a_star,
                "a_sdp": ex.a_sdp,
                "m_star": ex.m_star.tolist(),
                "free_directions": ex.free_directions,
                "m_star_unique": ex.free_directions == 0,
                "certificate": None if ex.certificate is None else ex.certificate.tolist(),
                "solver": ex.solver,
            },
            "center_policy": self.center_policy,
        }
        if ex.certificate is not None:
            out["existence"]["certificate_checks"] = {
                k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                for k, v in certificate_checks(self.system, ex.certificate).items()
            }
        if self.shifted is not None:
            out["shifted"] = {
                "m": self.shifted.m.tolist(),
                "d": self.shifted.d.tolist(),
                "eigs": self.shifted.eigs.tolist(),
            }
        if self.region is not None:
            rg = self.region
            out["region"] = {
                "m": rg.m.tolist(),
                "R_tight": rg.R_tight,
                "R_tight_sdp": rg.R_tight_sdp,
                "R_conservative": rg.R_conservative,
                "lambda_star": rg.lambda_star,
                "gamma_star": rg.gamma_star,
                "ultimate_bound_original": rg.ultimate_bound_original,
                "route_rel_diff": self.route_rel_diff,
                "solver": self.radius_solver,
            }
        if self.sphere is not None:
            sp = self.sphere
            pts = sp.extreme_points()
            out["critical_sphere"] = {
                "center": sp.center.tolist(),
                "basis": sp.basis.tolist(),
                "radius": sp.radius,
                "rank": sp.rank,
                "points_shifted": pts.tolist(),
                "points_original": (pts + self.region.m).tolist(),
            }
        if self.ellipsoid is not None:
            el = self.ellipsoid
            out["ellipsoid"] = {
                "center": el.center.tolist(),
                "axes": el.axes.tolist(),
                "semi_axes": el.semi_axes.tolist(),
                "peak_rate": el.peak_rate,
                "degenerate": el.degenerate,
            }
        return out


def _resolve_center(policy, ex: ExistenceResult, n: int) -> tuple[np.ndarray, str]:
    if policy is None or (isinstance(policy, str) and policy == "auto"):
        return np.asarray(ex.m_star, dtype=float), "auto"
    if isinstance(policy, str) and policy == "zero":
        return np.zeros(n), "zero"
    m = np.asarray(policy, dtype=float)
    if m.shape != (n,):
        raise ValueError(f"center must have {n} entries")
    return m, "user"


def analyze(
    sys: LosslessQuadraticSystem,
    center_policy="auto",
    opts: SolverOptions | None = None,
    *,
    route_rtol: float = 1e-6,
) -> AnalysisReport:
    """Decide existence, then compute every radius and the critical points.

    ``center_policy`` is ``"auto"`` (the SDP's optimal shift), ``"zero"``, or
    an explicit shift vector.
    """
    opts = opts or SolverOptions()
    ex = solve_existence(sys, opts)
    if not ex.exists:
        return AnalysisReport(sys, ex)

    m, policy = _resolve_center(center_policy, ex, sys.n)
    sf = shift(sys, m)
    if not sf.is_negative_definite:
        raise NotNegativeDefiniteError(
            f"A_s(m) is not negative definite at the requested center (lambda_1 = {sf.lambda1:.6g})"
        )
    R_cons = conservative_radius(sf)
    ell = ellipsoid_E(sf)
    R_scalar, lam = tight_radius_scalar(sf)

    if lam is None:
        region = TrappingRegion(m, 0.0, R_cons, None, float(np.linalg.norm(m)), 0.0, None)
        return AnalysisReport(sys, ex, sf, region, None, ell, policy)

    t0 = time.perf_counter()
    R_sdp, lam_sdp, gamma = tight_radius_sdp(sf, opts)
    wall = time.perf_counter() - t0
    rel = abs(R_sdp - R_scalar) / max(R_scalar, 1e-300)
    if rel > route_rtol:
        raise InconsistencyError(
            f"tight radius routes disagree: scalar {R_scalar:.12g} vs SDP {R_sdp:.12g} (rel {rel:.2e})"
        )
    region = TrappingRegion(
        m=m,
        R_tight=R_scalar,
        R_conservative=R_cons,
        lambda_star=lam,
        ultimate_bound_original=float(np.linalg.norm(m)) + R_scalar,
        gamma_star=gamma,
        R_tight_sdp=R_sdp,
    )
    sphere = critical_sphere(sf, lam, R_scalar)
    return AnalysisReport(sys, ex, sf, region, sphere, ell, policy,
                          radius_solver={"lambda_sdp": lam_sdp, "wall_time_s": wall},
                          route_rel_diff=rel)
