"""Matrix-free Hermitian eigensolver: Lanczos, implicit restart, IRL driver.

The IRL path uses full reorthogonalization (modified Gram-Schmidt against
the whole stored basis, twice) and restarts by applying shifted QR steps
to the projected tridiagonal matrix, which is equivalent to restarting
with a polynomial-filtered starting vector.  A standard-Lanczos baseline
(no reorthogonalization, no restart) is kept as the failing comparator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

BREAKDOWN_TOL = 1e-12
SMALL_MATRIX_CAP = 10**3

Matvec = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Symmetric tridiagonal projection T_m plus the residual coupling."""

    alpha: np.ndarray
    beta: np.ndarray
    beta_last: float

    @property
    def order(self) -> int:
        return len(self.alpha)

    def dense(self) -> np.ndarray:
        mat = np.diag(self.alpha)
        if len(self.beta):
            mat += np.diag(self.beta, 1) + np.diag(self.beta, -1)
        return mat


@dataclass(frozen=True)
class KrylovBasis:
    """Orthonormal basis vectors as rows; next_vector is v_{m+1} (or None)."""

    vectors: np.ndarray
    next_vector: np.ndarray | None

    @property
    def order(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class LanczosResult:
    basis: KrylovBasis
    tri: TridiagonalMatrix
    breakdown: bool
    n_matvec: int


@dataclass(frozen=True)
class RitzPair:
    value: float
    vector: np.ndarray
    residual: float
    converged: bool
    n_matvec: int
    n_restarts: int = 0


class _Counter:
    def __init__(self, matvec: Matvec):
        self.matvec = matvec
        self.count = 0

    def __call__(self, v: np.ndarray) -> np.ndarray:
        self.count += 1
        w = np.asarray(self.matvec(v), dtype=float)
        if not np.all(np.isfinite(w)):
            raise ValueError("matvec returned non-finite values")
        return w


def _sweep(matvec, vs, alphas, betas, m, reorthogonalize):
    """Continue the three-term recurrence until order m or breakdown.

    Invariant at entry: len(vs) == len(alphas) + 1 == len(betas) + 1.
    Returns (residual vector f with ||f|| = beta_m, breakdown flag).
    """
    scale = max((abs(a) for a in alphas), default=0.0)
    scale = max(scale, max((abs(b) for b in betas), default=0.0))
    f = np.zeros_like(vs[0])
    while len(alphas) < m:
        v = vs[-1]
        w = matvec(v)
        a = float(v @ w)
        alphas.append(a)
        w = w - a * v
        if len(vs) > 1:
            w = w - betas[-1] * vs[-2]
        if reorthogonalize:
            vmat = np.array(vs)
            for _ in range(2):
                w = w - vmat.T @ (vmat @ w)
        b = float(np.linalg.norm(w))
        scale = max(scale, abs(a), b)
        if len(alphas) == m:
            return w, False
        if b <= BREAKDOWN_TOL * max(1.0, scale):
            return w, True
        betas.append(b)
        vs.append(w / b)
    return f, False


def lanczos(
    matvec: Matvec,
    v1: np.ndarray,
    m: int,
    reorthogonalize: bool = True,
) -> LanczosResult:
    """m-step Lanczos factorization A V_m = V_m T_m + beta_m v_{m+1} e_m^T.

    On breakdown (beta below the relative tolerance) the truncated
    factorization is returned with the breakdown flag set.
    """
    if m < 1:
        raise ValueError("subspace size must be at least 1")
    if abs(np.linalg.norm(v1) - 1.0) > 1e-12:
        raise ValueError("starting vector must be unit norm")
    counter = _Counter(matvec)
    vs = [np.asarray(v1, dtype=float)]
    alphas: list[float] = []
    betas: list[float] = []
    f, breakdown = _sweep(counter, vs, alphas, betas, m, reorthogonalize)
    beta_last = float(np.linalg.norm(f))
    next_vector = f / beta_last if beta_last > 0 and not breakdown else None
    return LanczosResult(
        basis=KrylovBasis(vectors=np.array(vs), next_vector=next_vector),
        tri=TridiagonalMatrix(
            alpha=np.array(alphas), beta=np.array(betas), beta_last=beta_last
        ),
        breakdown=breakdown,
        n_matvec=counter.count,
    )


def tridiag_eigen(tri: TridiagonalMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors of T."""
    if tri.order > SMALL_MATRIX_CAP:
        raise ValueError(f"tridiagonal order {tri.order} above cap {SMALL_MATRIX_CAP}")
    if tri.order == 1:
        return np.array([tri.alpha[0]]), np.array([[1.0]])
    try:
        return eigh_tridiagonal(tri.alpha, tri.beta)
    except np.linalg.LinAlgError:
        # the specialized tridiagonal driver can fail on the extreme
        # element growth produced by unorthogonalized recurrences
        return np.linalg.eigh(tri.dense())


def _qr_shift_step(t: np.ndarray, q: np.ndarray, shift: float):
    """One implicit-shift symmetric QR step with bulge chasing.

    Applies the similarity T <- G^T T G in place, accumulating Q <- Q G.
    """
    n = t.shape[0]
    x = t[0, 0] - shift
    z = t[1, 0]
    for k in range(n - 1):
        r = np.hypot(x, z)
        if r == 0.0:
            c, s = 1.0, 0.0
        else:
            c, s = x / r, z / r
        rows = t[[k, k + 1], :].copy()
        t[k, :] = c * rows[0] + s * rows[1]
        t[k + 1, :] = -s * rows[0] + c * rows[1]
        cols = t[:, [k, k + 1]].copy()
        t[:, k] = c * cols[:, 0] + s * cols[:, 1]
        t[:, k + 1] = -s * cols[:, 0] + c * cols[:, 1]
        qcols = q[:, [k, k + 1]].copy()
        q[:, k] = c * qcols[:, 0] + s * qcols[:, 1]
        q[:, k + 1] = -s * qcols[:, 0] + c * qcols[:, 1]
        if k < n - 2:
            x = t[k + 1, k]
            z = t[k + 2, k]


def implicit_restart(
    basis: KrylovBasis,
    tri: TridiagonalMatrix,
    shifts: np.ndarray,
    k: int,
) -> tuple[KrylovBasis, TridiagonalMatrix]:
    """Compact the factorization to order k via mu = m - k shifted QR steps.

    The new starting vector equals (up to sign and normalization) the
    polynomial filter prod_j (A - shift_j I) applied to v_1.
    """
    m = tri.order
    mu = len(shifts)
    if mu != m - k:
        raise ValueError(f"need m - k = {m - k} shifts, got {mu}")
    if mu == 0:
        return basis, tri

    # a shift coinciding with a kept Ritz value would annihilate it
    ritz, _ = tridiag_eigen(tri)
    spread = float(ritz[-1] - ritz[0]) or 1.0
    kept = np.array([val for val in ritz if np.min(np.abs(shifts - val)) > 0])
    shifts = np.array(shifts, dtype=float)
    for idx, shift in enumerate(shifts):
        if kept.size and np.min(np.abs(kept - shift)) < 1e-14 * spread:
            warnings.warn(
                "restart shift coincides with a kept Ritz value; perturbing",
                stacklevel=2,
            )
            shifts[idx] = shift + 1e-12 * spread

    t = tri.dense()
    q = np.eye(m)
    for shift in shifts:
        _qr_shift_step(t, q, float(shift))

    new_vectors = q.T @ basis.vectors  # rows are the rotated basis
    f_old = (
        tri.beta_last * basis.next_vector
        if basis.next_vector is not None
        else np.zeros(basis.vectors.shape[1])
    )
    f_new = new_vectors[k] * t[k, k - 1] + f_old * q[m - 1, k - 1]
    beta_k = float(np.linalg.norm(f_new))

    alpha = np.diag(t)[:k].copy()
    beta = np.diag(t, -1)[: k - 1].copy()
    kept_vectors = new_vectors[:k].copy()
    v_next = f_new / beta_k if beta_k > 0 else None

    # absorb subdiagonal signs into the basis so beta stays nonnegative
    signs = np.ones(k)
    for i in range(k - 1):
        signs[i + 1] = signs[i] * (1.0 if beta[i] >= 0 else -1.0)
        beta[i] = abs(beta[i])
        kept_vectors[i + 1] *= signs[i + 1]
    # the coupling to v_next follows the sign of the last kept vector
    if signs[-1] < 0 and v_next is not None:
        v_next = -v_next

    return (
        KrylovBasis(vectors=kept_vectors, next_vector=v_next),
        TridiagonalMatrix(alpha=alpha, beta=beta, beta_last=beta_k),
    )


def _ritz_lowest(vs: np.ndarray, alphas, betas) -> tuple[float, np.ndarray, float]:
    tri = TridiagonalMatrix(np.array(alphas), np.array(betas), 0.0)
    values, vectors = tridiag_eigen(tri)
    u = vectors[:, 0]
    y = vs.T @ u
    norm = np.linalg.norm(y)
    return float(values[0]), y / norm, float(abs(u[-1]))


def irl_smallest(
    matvec: Matvec,
    dim: int,
    m: int = 20,
    tol: float = 1e-12,
    max_restarts: int = 300,
    seed: int = 0,
) -> RitzPair:
    """Lowest eigenpair via implicitly restarted Lanczos with k = 1.

    Shifts are the m-1 largest Ritz values each cycle.  The cheap estimate
    beta_m |u_1[m]| controls iteration; the returned residual is the
    explicitly certified ||A y - lambda y||.
    """
    if dim < 1:
        raise ValueError("problem dimension must be positive")
    counter = _Counter(matvec)
    rng = np.random.default_rng(seed)
    v1 = rng.standard_normal(dim)
    v1 /= np.linalg.norm(v1)
    m_eff = min(m, dim)

    vs = [v1]
    alphas: list[float] = []
    betas: list[float] = []
    f, breakdown = _sweep(counter, vs, alphas, betas, m_eff, True)
    best: RitzPair | None = None

    for restart in range(max_restarts + 1):
        vmat = np.array(vs)
        lam, y, u_last = _ritz_lowest(vmat, alphas, betas)
        beta_last = float(np.linalg.norm(f))
        est = beta_last * u_last if not breakdown else 0.0
        if est <= tol or breakdown or restart == max_restarts:
            residual = float(np.linalg.norm(counter(y) - lam * y))
            pair = RitzPair(
                value=lam,
                vector=y,
                residual=residual,
                converged=residual <= tol,
                n_matvec=counter.count,
                n_restarts=restart,
            )
            if best is None or pair.residual < best.residual:
                best = pair
            if pair.converged or restart == max_restarts:
                return pair if pair.converged else best
            if breakdown:
                # invariant subspace missed the target: restart from the
                # best Ritz vector with a fresh random perturbation
                v1 = y + 1e-8 * rng.standard_normal(dim)
                v1 /= np.linalg.norm(v1)
                vs, alphas, betas = [v1], [], []
                f, breakdown = _sweep(counter, vs, alphas, betas, m_eff, True)
                continue

        tri = TridiagonalMatrix(
            np.array(alphas), np.array(betas), float(np.linalg.norm(f))
        )
        basis = KrylovBasis(
            vectors=np.array(vs),
            next_vector=f / tri.beta_last if tri.beta_last > 0 else None,
        )
        values, _ = tridiag_eigen(tri)
        new_basis, new_tri = implicit_restart(basis, tri, values[1:], k=1)
        vs = [new_basis.vectors[0]]
        alphas = [float(new_tri.alpha[0])]
        betas = []
        if new_basis.next_vector is None:
            # filtered residual vanished: the kept Ritz vector is exact
            breakdown = True
            f = np.zeros(dim)
            continue
        vs.append(new_basis.next_vector)
        betas.append(new_tri.beta_last)
        f, breakdown = _sweep(counter, vs, alphas, betas, m_eff, True)

    return best  # pragma: no cover


def sl_smallest(
    matvec: Matvec,
    dim: int,
    budget: int = 100,
    seed: int = 0,
) -> RitzPair:
    """Standard-Lanczos baseline: no reorthogonalization, no restart.

    Runs a fixed iteration budget and returns the lowest Ritz pair; prone
    to loss of orthogonality by design.
    """
    if dim < 1:
        raise ValueError("problem dimension must be positive")
    counter = _Counter(matvec)
    rng = np.random.default_rng(seed)
    v1 = rng.standard_normal(dim)
    v1 /= np.linalg.norm(v1)
    vs = [v1]
    alphas: list[float] = []
    betas: list[float] = []
    f, breakdown = _sweep(counter, vs, alphas, betas, budget, False)
    lam, y, _ = _ritz_lowest(np.array(vs), alphas, betas)
    residual = float(np.linalg.norm(counter(y) - lam * y))
    return RitzPair(
        value=lam,
        vector=y,
        residual=residual,
        converged=breakdown,
        n_matvec=counter.count,
    )
