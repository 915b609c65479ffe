"""Constructors for the example systems, plus random lossless systems for tests."""

from __future__ import annotations

import numpy as np

from .model import LosslessQuadraticSystem

SIGMA = 10.0
RHO = 28.0
ALPHA = 8.0 / 3.0


def two_state() -> LosslessQuadraticSystem:
    """``dx/dt = (0, 1) + diag(-1, -4) x + (-x1 x2, x1^2)``."""
    return LosslessQuadraticSystem.from_triplets(
        [0.0, 1.0],
        [[-1.0, 0.0], [0.0, -4.0]],
        [(0, 0, 1, -0.5), (1, 0, 0, 1.0)],
    )


def lorenz(sigma: float = SIGMA, rho: float = RHO, alpha: float = ALPHA) -> LosslessQuadraticSystem:
    params = np.array([sigma, rho, alpha], dtype=float)
    if not np.all(np.isfinite(params)):
        raise ValueError("Lorenz parameters must be finite")
    L = [[-sigma, sigma, 0.0], [rho, -1.0, 0.0], [0.0, 0.0, -alpha]]
    # dx2/dt gets -x1 x3, dx3/dt gets +x1 x2
    return LosslessQuadraticSystem.from_triplets(
        [0.0, 0.0, 0.0], L, [(1, 0, 2, -0.5), (2, 0, 1, 0.5)]
    )


def zero_system(n: int) -> LosslessQuadraticSystem:
    if n < 1:
        raise ValueError("n must be positive")
    return LosslessQuadraticSystem.from_triplets(np.zeros(n), np.zeros((n, n)), [])


def random_orthogonal(n: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix.

    The sign of each column is fixed so that ``R`` has a positive diagonal,
    which is what makes the distribution Haar rather than QR-biased.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    Qm, R = np.linalg.qr(G)
    return Qm * np.sign(np.diag(R))


def rotate_system(sys: LosslessQuadraticSystem, W) -> LosslessQuadraticSystem:
    """The system seen in coordinates ``x = W z`` for orthogonal ``W``.

    ``L -> W L W^T``, ``c -> W c`` and ``f(x) = W f_z(W^T x)``, which gives
    ``Q^(i) = sum_p W_ip W Q_z^(p) W^T``.
    """
    W = np.asarray(W, dtype=float)
    n = sys.n
    if W.shape != (n, n):
        raise ValueError(f"W must be {n}x{n}")
    T = np.einsum("ip,pab->iab", W, sys.Q)
    T = np.einsum("ja,iab->ijb", W, T)
    T = np.einsum("kb,ijb->ijk", W, T)
    return LosslessQuadraticSystem.from_dense(W @ sys.c, W @ sys.L @ W.T, T)


def stacked_lorenz(K: int, seed: int) -> tuple[LosslessQuadraticSystem, np.ndarray]:
    """K default Lorenz copies, block-stacked, then coupled by a random rotation.

    ``seed=0`` is reserved for the identity rotation.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    base = lorenz()
    n = 3 * K
    L = np.zeros((n, n))
    trip = []
    for b in range(K):
        o = 3 * b
        L[o:o + 3, o:o + 3] = base.L
        trip.extend((i + o, j + o, k + o, v) for i, j, k, v in base.triplets())
    stacked = LosslessQuadraticSystem.from_triplets(np.zeros(n), L, trip)
    if seed == 0:
        return stacked, np.eye(n)
    W = random_orthogonal(n, seed)
    return rotate_system(stacked, W), W


def random_lossless_tensor(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random dense tensor satisfying the lossless identity exactly (up to round-off).

    Starts from a tensor symmetric in its last two indices and subtracts a
    third of its fully symmetric cyclic sum.
    """
    T = rng.standard_normal((n, n, n)) * scale
    T = 0.5 * (T + T.transpose(0, 2, 1))
    S = T + T.transpose(1, 0, 2) + T.transpose(1, 2, 0)
    return T - S / 3.0


def random_lossless(n: int, seed: int, *, stable: bool = True) -> LosslessQuadraticSystem:
    """Random lossless system; with ``stable=True`` the linear part has ``L_s < 0``."""
    rng = np.random.default_rng(seed)
    T = random_lossless_tensor(n, rng)
    c = rng.standard_normal(n)
    B = rng.standard_normal((n, n))
    S = rng.standard_normal((n, n))
    skew = S - S.T
    if stable:
        L = -(B @ B.T / n + 0.5 * np.eye(n)) + skew
    else:
        L = B
    return LosslessQuadraticSystem.from_dense(c, L, T)
