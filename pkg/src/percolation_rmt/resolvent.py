"""Stieltjes transforms, resolvents and the finite-n self-consistent system."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .ensemble import SampledMatrix
from .kernels import Kernel, lag_profile
from .spectra import Spectrum

FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAX_ITER = 10_000


class OutsideLambdaError(ValueError):
    """z lies outside the region where the fixed point is known to be unique."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def eta(v2: float) -> float:
    """Lower edge ``2v + 1`` of the admissible |Im z| range."""
    return 2.0 * math.sqrt(v2) + 1.0


def in_lambda(z: complex, v2: float) -> bool:
    return abs(complex(z).imag) >= eta(v2)


def parse_z(text: str) -> complex:
    """Parse ``"re,im"``."""
    re_s, _, im_s = text.partition(",")
    if not im_s:
        raise ValueError(f"z must be given as 're,im', got {text!r}")
    return complex(float(re_s), float(im_s))


def _require_nonreal(z: complex) -> complex:
    z = complex(z)
    if z.imag == 0:
        raise ValueError("spectral parameter must have nonzero imaginary part")
    return z


def semicircle_stieltjes(z: complex, v2: float) -> complex:
    """Root of ``v^2 w^2 + z w + 1 = 0`` with ``Im z * Im w > 0``."""
    z = _require_nonreal(z)
    if v2 == 0:
        return -1.0 / z
    disc = cmath.sqrt(z * z - 4.0 * v2)
    roots = ((-z + disc) / (2.0 * v2), (-z - disc) / (2.0 * v2))
    w = max(roots, key=lambda r: r.imag * math.copysign(1.0, z.imag))
    # One Newton step on w (v^2 w + z) + 1 = 0 to polish the root.
    f = v2 * w * w + z * w + 1.0
    return w - f / (2.0 * v2 * w + z)


def stieltjes_residual(w: complex, z: complex, v2: float) -> float:
    """``|w - 1/(-z - v^2 w)|``."""
    return abs(w - 1.0 / (-z - v2 * w))


def empirical_stieltjes(s: Spectrum | np.ndarray, z: complex) -> complex:
    """``(1/N) sum_j 1/(lambda_j - z)``."""
    z = _require_nonreal(z)
    ev = s.eigenvalues if isinstance(s, Spectrum) else np.asarray(s, dtype=np.float64)
    return complex(np.mean(1.0 / (ev - z)))


def _as_array(m) -> np.ndarray:
    return m.values if isinstance(m, SampledMatrix) else np.asarray(m, dtype=np.float64)


def resolvent(m: SampledMatrix | np.ndarray, z: complex) -> np.ndarray:
    """Full ``(H - zI)^{-1}`` from complex symmetric LDL^T solves against I."""
    z = _require_nonreal(z)
    H = _as_array(m)
    N = H.shape[0]
    A = H.astype(np.complex128) - z * np.eye(N)
    try:
        G = sla.solve(A, np.eye(N, dtype=np.complex128), assume_a="sym", check_finite=True)
    except sla.LinAlgError as exc:
        raise RuntimeError(f"resolvent solve failed: {exc}") from exc
    return G


def resolvent_diagonal(m: SampledMatrix | np.ndarray, z: complex) -> np.ndarray:
    return np.diagonal(resolvent(m, z)).copy()


def row_energies(G: np.ndarray) -> np.ndarray:
    """``sum_p |G(i, p)|^2`` for every row i."""
    return np.sum(np.abs(G) ** 2, axis=1)


def derivative_identity_check(
    m: SampledMatrix | np.ndarray,
    z: complex,
    site: tuple[int, int],
    step: float,
) -> float:
    """Max discrepancy between the analytic resolvent derivative and a central difference.

    ``site`` uses array indices.  The perturbation moves ``H(j, k)`` and
    ``H(k, j)`` together by ``+-step``; the analytic derivative is
    ``-G[s, j] G[k, t]`` on the diagonal and
    ``-G[s, j] G[k, t] - G[s, k] G[j, t]`` off it.
    """
    if not 1e-7 <= step <= 1e-4:
        raise ValueError("step must lie in [1e-7, 1e-4]")
    H = _as_array(m)
    j, k = site
    G = resolvent(H, z)
    if j == k:
        analytic = -np.outer(G[:, j], G[k, :])
    else:
        analytic = -np.outer(G[:, j], G[k, :]) - np.outer(G[:, k], G[j, :])
    E = np.zeros_like(H)
    E[j, k] = E[k, j] = 1.0
    numeric = (resolvent(H + step * E, z) - resolvent(H - step * E, z)) / (2.0 * step)
    return float(np.max(np.abs(numeric - analytic)))


@dataclass(frozen=True, eq=False)
class FixedPointSolution:
    r: np.ndarray
    z: complex
    residual: float
    iterations: int
    ratios: tuple[float, ...] = ()
    guaranteed: bool = True

    @property
    def n(self) -> int:
        return (self.r.size - 1) // 2


class _Smoother:
    """Applies ``U_r(i) = (1/b) sum_p r(p) psi((i - p)/b)``."""

    def __init__(self, kernel: Kernel, b: float, N: int):
        self.N = N
        self.weights = lag_profile(kernel, b, N) / b

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return np.convolve(r, self.weights, mode="valid")


def finite_system_residual(r: np.ndarray, z: complex, v2: float, U: np.ndarray) -> float:
    xi = -1.0 / z
    return float(np.max(np.abs(r - xi - xi * v2 * r * U)))


def solve_finite_system(
    n: int,
    b: float,
    v2: float,
    kernel: Kernel,
    z: complex,
    r0: np.ndarray | None = None,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = FIXED_POINT_MAX_ITER,
    allow_outside: bool = False,
) -> FixedPointSolution:
    """Solve ``r(i) = xi + xi v^2 r(i) U_r(i)``, ``|i| <= n``, with ``xi = -1/z``.

    Iterates ``r <- xi / (1 - xi v^2 U_r)`` from ``r = xi`` (or ``r0``) until the
    sup-norm residual of the raw equation drops below ``tol``.
    """
    z = _require_nonreal(z)
    guaranteed = in_lambda(z, v2)
    if not guaranteed and not allow_outside:
        raise OutsideLambdaError(f"|Im z| = {abs(z.imag):g} < eta = {eta(v2):g}")
    N = 2 * n + 1
    if not 0 < b <= N:
        raise ValueError(f"need 0 < b <= N = {N}")
    xi = -1.0 / z
    smooth = _Smoother(kernel, b, N)
    r = np.full(N, xi, dtype=np.complex128) if r0 is None else np.asarray(r0, dtype=np.complex128).copy()
    if v2 == 0:
        r = np.full(N, xi, dtype=np.complex128)
        return FixedPointSolution(r, z, 0.0, 1, (), guaranteed)
    ratios = []
    prev_step = None
    residual = math.inf
    for it in range(1, max_iter + 1):
        r_new = xi / (1.0 - xi * v2 * smooth(r))
        step = float(np.max(np.abs(r_new - r)))
        if prev_step:
            ratios.append(step / prev_step)
        prev_step = step
        r = r_new
        residual = finite_system_residual(r, z, v2, smooth(r))
        if residual <= tol:
            return FixedPointSolution(r, z, residual, it, tuple(ratios), guaranteed)
    raise ConvergenceError(f"no convergence in {max_iter} iterations (residual {residual:.3e})", residual)


def interior_indices(n: int, b: float, L: float) -> np.ndarray:
    """Array positions of the logical sites ``|i| <= n - bL``."""
    if b * L > n:
        raise ValueError(f"empty interior: bL = {b * L:g} > n = {n}")
    m = int(math.floor(n - b * L + 1e-9))
    return np.arange(-m, m + 1) + n


def interior_deviation(values, reference: complex, b: float, L: float) -> float:
    """``sup_{|i| <= n - bL} |values(i) - reference|`` for values indexed ``-n..n``."""
    values = np.asarray(values)
    n = (values.size - 1) // 2
    idx = interior_indices(n, b, L)
    return float(np.max(np.abs(values[idx] - reference)))
