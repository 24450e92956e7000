"""Spectra of sampled matrices and empirical spectral statistics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .eigensolver import EigenSolverError, inverse_iteration_residual, symmetric_eigenvalues
from .ensemble import EnsembleParams, SampledMatrix

TRACE_RTOL = 1e-9
RESIDUAL_RTOL = 1e-8


class TraceIdentityError(EigenSolverError):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    params: EnsembleParams | None = None

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=np.float64)
        if ev.ndim != 1 or ev.size == 0:
            raise ValueError("spectrum must be a nonempty 1-d sequence")
        object.__setattr__(self, "eigenvalues", np.sort(ev))
        self.eigenvalues.setflags(write=False)

    @property
    def N(self) -> int:
        return self.eigenvalues.size


def check_trace_identities(H: np.ndarray, ev: np.ndarray, rtol: float = TRACE_RTOL) -> None:
    """Raise unless sum(lambda) = tr H and sum(lambda^2) = sum H_ij^2."""
    N = H.shape[0]
    hmax = float(np.max(np.abs(H))) if H.size else 0.0
    lmax = float(np.max(np.abs(ev))) if ev.size else 0.0
    tol1 = rtol * N * max(hmax, 1e-300)
    tol2 = rtol * N * max(hmax, lmax, 1e-300) ** 2
    d1 = abs(math.fsum(ev) - math.fsum(np.diag(H)))
    d2 = abs(math.fsum(ev * ev) - math.fsum((H * H).ravel()))
    if d1 > tol1 or d2 > tol2:
        raise TraceIdentityError(f"trace identities violated: |d tr| = {d1:.3e}, |d tr2| = {d2:.3e}")


def eigenvalues(
    m: SampledMatrix | np.ndarray,
    backend: str = "lapack",
    spot_checks: int = 0,
    seed: int = 0,
) -> Spectrum:
    """Sorted eigenvalues of a symmetric matrix.

    Trace identities are always checked.  ``spot_checks > 0`` additionally
    verifies ``||Hx - lambda x|| <= 1e-8 ||H||`` by inverse iteration on that
    many randomly chosen eigenvalues.
    """
    H = m.values if isinstance(m, SampledMatrix) else np.asarray(m, dtype=np.float64)
    if not np.array_equal(H, H.T):
        raise ValueError("matrix is not exactly symmetric")
    ev = symmetric_eigenvalues(H, backend=backend)
    check_trace_identities(H, ev)
    if spot_checks:
        rng = np.random.default_rng(seed)
        norm = max(float(np.max(np.abs(ev))), 1e-300)
        for k in rng.choice(ev.size, size=min(spot_checks, ev.size), replace=False):
            res = inverse_iteration_residual(H, float(ev[k]), seed=int(k))
            if res > RESIDUAL_RTOL * norm:
                raise EigenSolverError(f"residual {res:.3e} at eigenvalue {ev[k]:.6g}")
    params = m.params if isinstance(m, SampledMatrix) else None
    return Spectrum(ev, params)


def counting_function(s: Spectrum, lam: float) -> float:
    """Fraction of eigenvalues ``<= lam``."""
    return int(np.searchsorted(s.eigenvalues, lam, side="right")) / s.N


def semicircle_density(lam, v2: float):
    lam = np.asarray(lam, dtype=np.float64)
    out = np.sqrt(np.clip(4.0 * v2 - lam * lam, 0.0, None)) / (2.0 * math.pi * v2)
    return float(out) if out.ndim == 0 else out


def semicircle_cdf(lam, v2: float):
    """Closed-form distribution function of the semicircle law on [-2v, 2v]."""
    v = math.sqrt(v2)
    x = np.clip(np.asarray(lam, dtype=np.float64) / (2.0 * v), -1.0, 1.0)
    out = 0.5 + (x * np.sqrt(1.0 - x * x) + np.arcsin(x)) / math.pi
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def esd_moment(s: Spectrum, k: int) -> float:
    if not 1 <= k <= 8:
        raise ValueError("moment order must be in 1..8")
    return math.fsum(s.eigenvalues**k) / s.N


def semicircle_moment(k: int, v2: float) -> float:
    """k-th moment of the semicircle law (Catalan numbers times v^k)."""
    if k % 2:
        return 0.0
    m = k // 2
    return math.comb(2 * m, m) / (m + 1) * v2**m


def ks_distance(s: Spectrum, v2: float) -> float:
    """Sup distance between the empirical and semicircle distribution functions.

    Attained at a jump; both one-sided limits are compared there.
    """
    ev = s.eigenvalues
    N = s.N
    jumps, first = np.unique(ev, return_index=True)
    last = np.searchsorted(ev, jumps, side="right")
    F = semicircle_cdf(jumps, v2)
    below = first / N  # value just left of the jump
    at = last / N
    return float(max(np.max(np.abs(at - F)), np.max(np.abs(F - below))))


def esd_histogram(s: Spectrum, v2: float, bins: int = 101, half_width: float | None = None):
    """Rows ``(bin_left, bin_right, esd_mass, semicircle_mass)``."""
    v = math.sqrt(v2)
    hw = 2.5 * v if half_width is None else half_width
    edges = np.linspace(-hw, hw, bins + 1)
    counts, _ = np.histogram(s.eigenvalues, bins=edges)
    F = semicircle_cdf(edges, v2)
    return [
        (float(edges[k]), float(edges[k + 1]), counts[k] / s.N, float(F[k + 1] - F[k]))
        for k in range(bins)
    ]


def write_histogram_csv(rows, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "esd_mass", "semicircle_mass"])
        for r in rows:
            w.writerow([repr(float(x)) for x in r])
