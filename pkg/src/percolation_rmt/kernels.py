"""Edge-probability profiles psi and their lattice discretization defects."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

# Lattice sums stop once psi drops below this value.
TRUNCATION = 1e-15

FAMILIES = ("band", "exponential", "gaussian")


@dataclass(frozen=True)
class Kernel:
    """Even, nonincreasing profile with unit integral.

    ``psi(t) = f(scale * t)`` with ``f(0) = 1``; ``scale`` is fixed at
    construction so that the integral over the real line is one.
    """

    family: str
    scale: float
    shape: float | None = None

    def __call__(self, t):
        return eval_kernel(self, t)

    @property
    def spec(self) -> str:
        if self.family == "band":
            return "band"
        if self.family == "gaussian":
            return "gauss"
        return f"exp:{self.shape:g}"

    def support_radius(self) -> float:
        """Smallest ``T`` with ``psi(t) < TRUNCATION`` for all ``|t| > T``."""
        if self.family == "band":
            return 0.5
        if self.family == "gaussian":
            return math.sqrt(-math.log(TRUNCATION) / math.pi)
        return (-math.log(TRUNCATION)) ** (1.0 / self.shape) / self.scale

    def sqrt_integral(self) -> float:
        """Integral of sqrt(psi) over the real line."""
        if self.family == "band":
            return 1.0
        if self.family == "gaussian":
            return math.sqrt(2.0)
        s = self.shape
        return 2.0 * math.gamma(1.0 + 1.0 / s) * 2.0 ** (1.0 / s) / self.scale


def make_kernel(family: str, shape: float | None = None) -> Kernel:
    """Build a normalized kernel.

    ``band`` is the indicator of (-1/2, 1/2), ``exponential`` is
    ``exp(-|c t|^s)`` with ``c = 2 Gamma(1 + 1/s)`` and ``gaussian`` is
    ``exp(-pi t^2)``.  Normalization only ever rescales the argument.
    """
    family = family.lower()
    if family in ("exp", "exponential"):
        if shape is None:
            shape = 1.0
        shape = float(shape)
        if not (shape > 0 and math.isfinite(shape)):
            raise ValueError(f"exponential kernel needs shape s > 0, got {shape}")
        return Kernel("exponential", 2.0 * math.gamma(1.0 + 1.0 / shape), shape)
    if family == "band":
        return Kernel("band", 1.0)
    if family in ("gauss", "gaussian"):
        return Kernel("gaussian", math.sqrt(math.pi))
    if family in ("flat", "wigner", "one", "const"):
        raise ValueError(
            "psi == 1 has infinite integral and cannot be normalized by rescaling; "
            "use the Wigner reference mode of the ensemble module instead"
        )
    raise ValueError(f"unknown kernel family {family!r}; expected one of {FAMILIES}")


def parse_kernel(spec: str) -> Kernel:
    """Parse ``band``, ``exp:<s>`` or ``gauss``."""
    head, _, rest = spec.strip().partition(":")
    head = head.lower()
    if head in ("exp", "exponential"):
        if not rest:
            raise ValueError("exponential kernel spec must be 'exp:<s>'")
        return make_kernel("exponential", float(rest))
    if rest:
        raise ValueError(f"kernel {head!r} takes no parameter")
    return make_kernel(head)


def eval_kernel(k: Kernel, t):
    """Evaluate psi at ``t`` (scalar or array)."""
    a = np.abs(np.asarray(t, dtype=np.float64))
    if k.family == "band":
        out = (a < 0.5).astype(np.float64)
    elif k.family == "gaussian":
        out = np.exp(-math.pi * a * a)
    else:
        out = np.exp(-((k.scale * a) ** k.shape))
    if out.ndim == 0:
        return float(out)
    return out


def integral(k: Kernel) -> float:
    """Adaptive quadrature of psi over the real line."""
    if k.family == "band":
        val, _ = integrate.quad(lambda t: eval_kernel(k, t), -1.0, 1.0, points=[-0.5, 0.5])
        return val
    half, _ = integrate.quad(lambda t: eval_kernel(k, t), 0.0, np.inf, epsabs=1e-13, epsrel=1e-13)
    return 2.0 * half


def tail_integral(k: Kernel, a: float) -> float:
    """Integral of psi over ``[a, inf)``."""
    if k.family == "band":
        return max(0.0, 0.5 - max(a, -0.5)) if a < 0.5 else 0.0
    if a <= 0:
        return 0.5 * integral(k) - integrate.quad(lambda t: eval_kernel(k, t), a, 0.0)[0]
    val, _ = integrate.quad(lambda t: eval_kernel(k, t), a, np.inf, epsabs=1e-15)
    return val


def _lattice_cutoff(k: Kernel, b: float) -> int:
    # Largest integer t that can still satisfy psi(t/b) >= TRUNCATION.
    return int(math.floor(k.support_radius() * b)) + 1


def lattice_sum(k: Kernel, b: float) -> float:
    """``(1/b) * sum over all integers t of psi(t/b)``, truncated at TRUNCATION."""
    T = _lattice_cutoff(k, b)
    t = np.arange(1, T + 1, dtype=np.float64)
    vals = eval_kernel(k, t / b)
    vals = vals[vals >= TRUNCATION]
    return (eval_kernel(k, 0.0) + 2.0 * math.fsum(vals)) / b


def riemann_defect(k: Kernel, b: float) -> float:
    """Lattice sum minus integral, the discretization error of psi at scale b."""
    if b < 1:
        raise ValueError("riemann_defect requires b >= 1")
    return lattice_sum(k, b) - 1.0


def window_sum(k: Kernel, b: float, n: int, i: int) -> float:
    """``(1/b) * sum over |t| <= n of psi((t - i)/b)``."""
    t = np.arange(-n, n + 1, dtype=np.float64)
    vals = eval_kernel(k, (t - i) / b)
    vals = vals[vals >= TRUNCATION]
    return math.fsum(vals) / b


def edge_defect(k: Kernel, b: float, n: int, i: int) -> float:
    """Finite-window sum at site ``i`` minus the full lattice sum (always <= 0)."""
    if abs(i) > n:
        raise ValueError(f"site {i} outside -{n}..{n}")
    if b > 2 * n + 1:
        raise ValueError("edge_defect requires b <= 2n+1")
    return min(0.0, window_sum(k, b, n, i) - lattice_sum(k, b))


def lag_profile(k: Kernel, b: float, N: int) -> np.ndarray:
    """psi(lag/b) for lags ``-(N-1) .. N-1`` (length ``2N - 1``)."""
    lags = np.arange(-(N - 1), N, dtype=np.float64)
    return eval_kernel(k, lags / b)
