"""Lossless quadratic systems, coordinate shifts and the energy ellipsoid.

A system has the form ``dx/dt = c + L x + f(x)`` with ``f_i(x) = x^T Q^(i) x``.
The quadratic tensor is stored sparsely as upper-triangle triplets
``(i, j, k, v)`` with ``j <= k`` (0-based internally, 1-based on disk) and
symmetrized when a dense view is requested.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    DimensionError,
    LosslessError,
    NotNegativeDefiniteError,
    SystemFormatError,
)

LOSSLESS_RTOL = 1e-12
EQUILIBRIUM_RTOL = 1e-10


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _as_vector(x, n: int, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionError(f"{name} must have shape ({n},), got {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class LosslessQuadraticSystem:
    """``dx/dt = c + L x + f(x)`` with a lossless quadratic part.

    Use :meth:`from_dense` or :meth:`from_triplets` rather than the raw
    constructor; both canonicalize the triplet storage and, unless
    ``check=False``, reject tensors that are not lossless.
    """

    c: np.ndarray
    L: np.ndarray
    q_index: np.ndarray  # (nnz, 3) int, rows (i, j, k) with j <= k
    q_value: np.ndarray  # (nnz,)

    @property
    def n(self) -> int:
        return self.c.shape[0]

    # -- construction -----------------------------------------------------

    @classmethod
    def from_triplets(cls, c, L, triplets, *, check: bool = True) -> "LosslessQuadraticSystem":
        """Build from ``(i, j, k, v)`` triplets with 0-based indices.

        A triplet with ``j > k`` is swapped into canonical order; repeating
        the same canonical position is an error. Exact zeros are dropped.
        """
        c = np.asarray(c, dtype=float)
        L = np.asarray(L, dtype=float)
        if c.ndim != 1:
            raise DimensionError("c must be a vector")
        n = c.shape[0]
        if n < 1:
            raise DimensionError("state dimension must be positive")
        if L.shape != (n, n):
            raise DimensionError(f"L must have shape ({n}, {n}), got {L.shape}")

        entries: dict[tuple[int, int, int], float] = {}
        for t in triplets:
            i, j, k, v = int(t[0]), int(t[1]), int(t[2]), float(t[3])
            if not (0 <= i < n and 0 <= j < n and 0 <= k < n):
                raise DimensionError(f"triplet index ({i}, {j}, {k}) out of range for n={n}")
            if j > k:
                j, k = k, j
            if (i, j, k) in entries:
                raise ValueError(f"duplicate entry Q^({i})[{j},{k}]")
            if v != 0.0:
                entries[(i, j, k)] = v

        keys = sorted(entries)
        idx = np.array(keys, dtype=np.int64).reshape(-1, 3)
        val = np.array([entries[key] for key in keys], dtype=float)
        return cls._build(c, L, idx, val, check)

    @classmethod
    def from_dense(cls, c, L, Q, *, check: bool = True, atol: float = 0.0) -> "LosslessQuadraticSystem":
        """Build from a dense ``(n, n, n)`` tensor with ``Q[i]`` the matrix Q^(i).

        Each slice is symmetrized first; upper-triangle entries with
        magnitude ``<= atol`` are dropped.
        """
        Q = np.asarray(Q, dtype=float)
        c = np.asarray(c, dtype=float)
        n = c.shape[0]
        if Q.shape != (n, n, n):
            raise DimensionError(f"Q must have shape ({n}, {n}, {n}), got {Q.shape}")
        Qs = 0.5 * (Q + Q.transpose(0, 2, 1))
        # np.triu acts on the last two axes
        i, j, k = np.nonzero(np.abs(np.triu(Qs)) > atol)
        idx = np.stack([i, j, k], axis=1).astype(np.int64).reshape(-1, 3)
        val = Qs[i, j, k]
        return cls._build(c, np.asarray(L, dtype=float), idx, val, check)

    @classmethod
    def _build(cls, c, L, idx, val, check):
        if L.shape != (c.shape[0], c.shape[0]):
            raise DimensionError(f"L must have shape ({c.shape[0]}, {c.shape[0]})")
        idx = np.array(idx, dtype=np.int64)
        idx.setflags(write=False)
        sys = cls(_frozen(c), _frozen(L), idx, _frozen(val))
        if check:
            defect = lossless_defect(sys)
            if defect > LOSSLESS_RTOL * (1.0 + sys.max_abs_q):
                raise LosslessError(
                    f"quadratic part is not lossless (defect {defect:.3e}); "
                    "pass check=False to build it anyway"
                )
        return sys

    # -- derived views ----------------------------------------------------

    @cached_property
    def Q(self) -> np.ndarray:
        """Dense symmetric tensor, ``Q[i, j, k] = Q^(i)_{jk}``."""
        n = self.n
        T = np.zeros((n, n, n))
        if len(self.q_value):
            i, j, k = self.q_index.T
            T[i, j, k] = self.q_value
            T[i, k, j] = self.q_value
        T.setflags(write=False)
        return T

    @cached_property
    def L_s(self) -> np.ndarray:
        return _frozen(0.5 * (self.L + self.L.T))

    @property
    def max_abs_q(self) -> float:
        return float(np.max(np.abs(self.q_value))) if len(self.q_value) else 0.0

    def triplets(self):
        """Iterate canonical ``(i, j, k, v)`` triplets (0-based)."""
        for (i, j, k), v in zip(self.q_index.tolist(), self.q_value.tolist()):
            yield i, j, k, v

    def quadratic(self, x) -> np.ndarray:
        """``f(x)``; ``x`` may carry leading batch dimensions."""
        x = np.asarray(x, dtype=float)
        return np.einsum("ijk,...j,...k->...i", self.Q, x, x)


def lossless_defect(sys: LosslessQuadraticSystem) -> float:
    """Largest violation of ``Q^(i)_jk + Q^(j)_ik + Q^(k)_ij = 0`` over all triples."""
    T = sys.Q
    S = T + T.transpose(1, 0, 2) + T.transpose(1, 2, 0)
    return float(np.max(np.abs(S))) if S.size else 0.0


def eval_rhs(sys: LosslessQuadraticSystem, x) -> np.ndarray:
    x = _as_vector(x, sys.n)
    return sys.c + sys.L @ x + sys.quadratic(x)


# ---------------------------------------------------------------------------
# shifted coordinates


@dataclass(frozen=True, eq=False)
class ShiftedForm:
    """Dynamics in ``y = x - m``: ``dy/dt = d + A y + f(y)``."""

    base: LosslessQuadraticSystem
    m: np.ndarray
    d: np.ndarray
    A: np.ndarray
    A_s: np.ndarray
    eigs: np.ndarray  # descending
    eigvecs: np.ndarray = field(repr=False)  # columns match eigs

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def lambda1(self) -> float:
        return float(self.eigs[0])

    @property
    def is_negative_definite(self) -> bool:
        return self.lambda1 < 0.0

    @cached_property
    def drift_scale(self) -> float:
        """Natural magnitude of the terms that make up ``d(m)``."""
        mn = float(np.linalg.norm(self.m))
        Lnorm = float(np.linalg.norm(self.base.L, 2))
        return 1.0 + float(np.linalg.norm(self.base.c)) + Lnorm * mn + self.base.max_abs_q * mn * mn

    @property
    def is_equilibrium(self) -> bool:
        """True when ``d(m)`` is numerically zero, i.e. ``m`` is an equilibrium."""
        return float(np.linalg.norm(self.d)) <= EQUILIBRIUM_RTOL * self.drift_scale

    def require_negative_definite(self) -> None:
        if not self.is_negative_definite:
            raise NotNegativeDefiniteError(
                f"A_s(m) is not negative definite (largest eigenvalue {self.lambda1:.6g})"
            )


def shift(sys: LosslessQuadraticSystem, m) -> ShiftedForm:
    m = _as_vector(m, sys.n, "m")
    T = sys.Q
    d = sys.c + sys.L @ m + sys.quadratic(m)
    A = sys.L + 2.0 * np.einsum("ijk,k->ij", T, m)
    A_s = sys.L_s - np.einsum("kij,k->ij", T, m)
    A_s = 0.5 * (A_s + A_s.T)
    w, U = np.linalg.eigh(A_s)
    order = np.argsort(w)[::-1]
    return ShiftedForm(
        base=sys,
        m=_frozen(m),
        d=_frozen(d),
        A=_frozen(A),
        A_s=_frozen(A_s),
        eigs=_frozen(w[order]),
        eigvecs=_frozen(U[:, order]),
    )


def energy_rate(sf: ShiftedForm, y) -> np.ndarray | float:
    """Rate of change of ``K_m = |y|^2 / 2``: ``d^T y + y^T A_s y``.

    Accepts a single point or an ``(N, n)`` batch.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[-1:] != (sf.n,):
        raise DimensionError(f"y must have trailing dimension {sf.n}, got {y.shape}")
    rate = y @ sf.d + np.einsum("...i,ij,...j->...", y, sf.A_s, y)
    return float(rate) if np.ndim(rate) == 0 else rate


# ---------------------------------------------------------------------------
# the set of non-decreasing energy


@dataclass(frozen=True, eq=False)
class EnergyEllipsoid:
    center: np.ndarray
    axes: np.ndarray  # orthonormal columns
    semi_axes: np.ndarray
    peak_rate: float
    degenerate: bool = False

    @property
    def n(self) -> int:
        return self.center.shape[0]

    def boundary_point(self, u) -> np.ndarray:
        """Map unit vector(s) ``u`` onto the ellipsoid surface."""
        u = np.asarray(u, dtype=float)
        return self.center + (u * self.semi_axes) @ self.axes.T


def ellipsoid_E(sf: ShiftedForm) -> EnergyEllipsoid:
    """Ellipsoid bounding ``{y : energy_rate(y) >= 0}`` (requires ``A_s < 0``).

    When ``d(m)`` vanishes the set collapses to the origin; that case is
    returned flagged ``degenerate`` rather than raised, since the radius
    logic consumes it.
    """
    sf.require_negative_definite()
    lam, U = sf.eigs, sf.eigvecs
    if sf.is_equilibrium:
        n = sf.n
        return EnergyEllipsoid(_frozen(np.zeros(n)), U, _frozen(np.zeros(n)), 0.0, degenerate=True)
    dt = U.T @ sf.d
    # A_s^{-1} d in the eigenbasis
    w = dt / lam
    center = -0.5 * (U @ w)
    q = float(dt @ w)  # d^T A_s^{-1} d  (< 0)
    semi = 0.5 * np.sqrt(q / lam)
    return EnergyEllipsoid(_frozen(center), U, _frozen(semi), -0.25 * q)


# ---------------------------------------------------------------------------
# JSON system format


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def system_to_json(sys: LosslessQuadraticSystem) -> str:
    """Serialize with 1-based triplet indices and 17 significant digits."""
    lines = ["{", f'  "n": {sys.n},']
    lines.append('  "c": [' + ", ".join(_fmt(v) for v in sys.c) + "],")
    rows = ["    [" + ", ".join(_fmt(v) for v in row) + "]" for row in sys.L]
    lines.append('  "L": [\n' + ",\n".join(rows) + "\n  ],")
    q = [
        f'    {{"i": {i + 1}, "j": {j + 1}, "k": {k + 1}, "v": {_fmt(v)}}}'
        for i, j, k, v in sys.triplets()
    ]
    if q:
        lines.append('  "Q": [\n' + ",\n".join(q) + "\n  ]")
    else:
        lines.append('  "Q": []')
    lines.append("}")
    return "\n".join(lines) + "\n"


def system_from_json(text: str, *, check: bool = True) -> LosslessQuadraticSystem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise SystemFormatError(
            f"line {exc.lineno}, column {exc.colno}: {exc.msg}\n  {context}"
        ) from exc
    if not isinstance(doc, dict):
        raise SystemFormatError("top-level JSON value must be an object")
    missing = [key for key in ("n", "c", "L", "Q") if key not in doc]
    if missing:
        raise SystemFormatError(f"missing keys: {', '.join(missing)}")
    try:
        n = int(doc["n"])
        c = np.array(doc["c"], dtype=float)
        L = np.array(doc["L"], dtype=float)
        trip = [(int(e["i"]) - 1, int(e["j"]) - 1, int(e["k"]) - 1, float(e["v"])) for e in doc["Q"]]
    except (TypeError, ValueError, KeyError) as exc:
        raise SystemFormatError(f"bad field: {exc}") from exc
    if c.shape != (n,) or L.shape != (n, n):
        raise SystemFormatError(f"dimension mismatch: n={n}, c{c.shape}, L{L.shape}")
    for i, j, k, _ in trip:
        if j > k:
            raise SystemFormatError(f"triplet (i={i + 1}, j={j + 1}, k={k + 1}) must have j <= k")
    try:
        return LosslessQuadraticSystem.from_triplets(c, L, trip, check=check)
    except (DimensionError, ValueError) as exc:
        if isinstance(exc, LosslessError):
            raise
        raise SystemFormatError(str(exc)) from exc


def load_system(path, *, check: bool = True) -> LosslessQuadraticSystem:
    return system_from_json(Path(path).read_text(), check=check)


def save_system(sys: LosslessQuadraticSystem, path) -> None:
    Path(path).write_text(system_to_json(sys))
