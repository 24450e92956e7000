"""Symmetric eigenvalues: Householder tridiagonalization + implicit shifted QL.

``backend="lapack"`` calls LAPACK ``dsyev`` (the same two-stage algorithm,
compiled).  ``backend="native"`` runs the in-house implementation below and is
meant for small and medium N.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg as sla

MAX_QL_SWEEPS = 60  # per eigenvalue


class EigenSolverError(RuntimeError):
    pass


def tridiagonalize(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal reduction to tridiagonal form.

    Returns the diagonal ``d`` (length N) and off-diagonal ``e`` (length N-1).
    """
    A = np.array(A, dtype=np.float64, copy=True)
    N = A.shape[0]
    for k in range(N - 2):
        x = A[k + 1 :, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm2 = float(v @ v)
        if vnorm2 == 0.0:
            continue
        # A <- P A P with P = I - 2 v v^T / (v^T v), applied to the trailing block.
        S = A[k + 1 :, k + 1 :]
        p = S @ v * (2.0 / vnorm2)
        K = float(v @ p) / vnorm2
        q = p - K * v
        S -= np.outer(v, q) + np.outer(q, v)
        A[k + 1 :, k] = 0.0
        A[k, k + 1 :] = 0.0
        A[k + 1, k] = A[k, k + 1] = alpha
    d = np.diag(A).copy()
    e = np.diag(A, 1).copy()
    return d, e


def tridiagonal_eigenvalues(d: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix."""
    d = [float(x) for x in d]
    N = len(d)
    e = [float(x) for x in e] + [0.0]
    for l in range(N):
        it = 0
        while True:
            m = l
            while m < N - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= 2.2e-16 * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > MAX_QL_SWEEPS:
                raise EigenSolverError(f"QL iteration did not converge for eigenvalue {l}")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                bb = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * bb
                p = s * r
                d[i + 1] = g + p
                g = c * r - bb
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(np.array(d))


def symmetric_eigenvalues(A: np.ndarray, backend: str = "lapack") -> np.ndarray:
    """All eigenvalues of a real symmetric matrix, sorted ascending."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if A.shape[0] == 0:
        return np.zeros(0)
    if backend == "lapack":
        try:
            w = sla.eigvalsh(A, driver="ev", check_finite=True)
        except sla.LinAlgError as exc:
            raise EigenSolverError(str(exc)) from exc
        return np.sort(w)
    if backend == "native":
        d, e = tridiagonalize(A)
        return tridiagonal_eigenvalues(d, e)
    raise ValueError(f"unknown backend {backend!r}")


def inverse_iteration_residual(A: np.ndarray, lam: float, iters: int = 3, seed: int = 0) -> float:
    """``||A x - lam x||`` for an approximate eigenvector from inverse iteration."""
    N = A.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(N)
    x /= np.linalg.norm(x)
    shift = lam + 1e-10 * max(1.0, abs(lam))
    lu = sla.lu_factor(A - shift * np.eye(N), check_finite=False)
    for _ in range(iters):
        x = sla.lu_solve(lu, x, check_finite=False)
        x /= np.linalg.norm(x)
    return float(np.linalg.norm(A @ x - lam * x))
