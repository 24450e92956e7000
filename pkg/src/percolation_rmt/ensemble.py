"""Sampling the long-range percolation matrix and the dense Wigner reference."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import streams
from .entries import EntryDistribution
from .kernels import Kernel, eval_kernel

# Default cap on dense N x N float64 storage, bytes.
MEMORY_CAP = 2 * 1024**3
_ROW_BLOCK = 256


class MemoryCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleParams:
    """Everything that fixes the law of one sampled matrix.

    Logical indices run over ``-n..n``; ``N = 2n + 1``.
    """

    n: int
    b: float
    kernel: Kernel
    dist: EntryDistribution
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        if not (0 < self.b <= self.N):
            raise ValueError(f"need 0 < b <= N = {self.N}, got b = {self.b}")

    @property
    def N(self) -> int:
        return 2 * self.n + 1

    @property
    def v2(self) -> float:
        return self.dist.variance


@dataclass(frozen=True, eq=False)
class SampledMatrix:
    """Dense symmetric matrix; ``values[i + n, j + n]`` is entry (i, j)."""

    values: np.ndarray
    params: EnsembleParams | None = None
    kind: str = "percolation"

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return (self.N - 1) // 2

    def entry(self, i: int, j: int) -> float:
        return float(self.values[i + self.n, j + self.n])


def _check_memory(N: int, cap: int | None) -> None:
    cap = MEMORY_CAP if cap is None else cap
    need = 8 * N * N
    if need > cap:
        raise MemoryCapExceeded(f"N = {N} needs {need / 2**20:.0f} MiB, cap is {cap / 2**20:.0f} MiB")


def _fill_upper(
    N: int,
    key: streams.StreamKey,
    dist: EntryDistribution,
    scale: float,
    prob_of_lag,
    max_lag: int,
) -> np.ndarray:
    n = (N - 1) // 2
    H = np.zeros((N, N))
    for r0 in range(0, N, _ROW_BLOCK):
        r1 = min(N, r0 + _ROW_BLOCK)
        c1 = min(N, r1 + max_lag)
        rows = np.arange(r0, r1)[:, None]
        cols = np.arange(r0, c1)[None, :]
        lag = cols - rows
        upper = (lag >= 0) & (lag <= max_lag)
        i = rows - n
        j = cols - n
        a = dist.transform(
            streams.uniforms_2d(key, streams.ENTRY_A, i, j),
            streams.uniforms_2d(key, streams.ENTRY_B, i, j),
        )
        if prob_of_lag is not None:
            u = streams.uniforms_2d(key, streams.MASK, i, j)
            upper &= u < prob_of_lag(lag)
        H[r0:r1, r0:c1] = np.where(upper, scale * a, 0.0)
    iu = np.triu_indices(N, 1)
    H[iu[1], iu[0]] = H[iu]
    return H


def sample_matrix(p: EnsembleParams, replica: int = 0, memory_cap: int | None = None) -> SampledMatrix:
    """Draw ``H(i, j) = b^{-1/2} a(i, j) d(i, j)`` for ``i <= j`` and symmetrize.

    The mask ``d(i, j)`` is Bernoulli with probability ``psi((i - j)/b)``,
    diagonal included, and uses a stream independent of the ``a`` draws.
    """
    N = p.N
    _check_memory(N, memory_cap)
    key = streams.StreamKey(p.seed, replica)
    psi_of_lag = eval_kernel(p.kernel, np.arange(N) / p.b)
    nz = np.nonzero(psi_of_lag > 0)[0]
    max_lag = int(nz[-1]) if nz.size else 0
    H = _fill_upper(N, key, p.dist, 1.0 / math.sqrt(p.b), lambda lag: psi_of_lag[lag], max_lag)
    return SampledMatrix(H, p, "percolation")


def wigner_reference(
    n: int,
    dist: EntryDistribution,
    seed: int = 0,
    replica: int = 0,
    memory_cap: int | None = None,
) -> SampledMatrix:
    """Dense Wigner matrix ``A(i, j) = N^{-1/2} a(i, j)`` without a mask."""
    N = 2 * n + 1
    _check_memory(N, memory_cap)
    key = streams.StreamKey(seed, replica)
    H = _fill_upper(N, key, dist, 1.0 / math.sqrt(N), None, N - 1)
    return SampledMatrix(H, None, "wigner")


def mean_square_entry(p: EnsembleParams) -> float:
    """Expected ``(1/N) tr H^2 = (v^2 / (N b)) sum_{i,j} psi((i-j)/b)``."""
    N = p.N
    lags = np.arange(1, N)
    psi = eval_kernel(p.kernel, lags / p.b)
    total = N * eval_kernel(p.kernel, 0.0) + 2.0 * float(np.sum((N - lags) * psi))
    return p.v2 * total / (N * p.b)


def dump_matrix(m: SampledMatrix, path: str | Path) -> None:
    """Write upper-triangle nonzeros as ``i j value`` lines (logical indices)."""
    n = m.n
    rows, cols = np.nonzero(np.triu(m.values))
    with open(path, "w") as fh:
        for r, c in zip(rows.tolist(), cols.tolist()):
            fh.write(f"{r - n} {c - n} {m.values[r, c]:.17g}\n")


def load_matrix(path: str | Path, n: int) -> SampledMatrix:
    N = 2 * n + 1
    H = np.zeros((N, N))
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            i, j, val = line.split()
            r, c = int(i) + n, int(j) + n
            H[r, c] = H[c, r] = float(val)
    return SampledMatrix(H, None, "external")
