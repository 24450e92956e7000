"""Zero-mean entry laws for a(i, j), their moments and cumulants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import streams
from .kernels import Kernel

MAX_MOMENT = 10


class CumulantVector(NamedTuple):
    K1: float
    K2: float
    K3: float
    K4: float
    K5: float
    K6: float


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


@dataclass(frozen=True)
class EntryDistribution:
    """A named zero-mean law with its moment table ``moments[r] = E a^r``.

    ``moments[0]`` is 1; entries run through order ``MAX_MOMENT``.
    """

    family: str
    variance: float
    p: float | None = None
    moments: tuple[float, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise ValueError(f"variance must be positive, got {self.variance}")
        if not self.moments:
            object.__setattr__(self, "moments", _moment_table(self))
        m = self.moments
        if abs(m[1]) > 1e-12 * math.sqrt(m[2]):
            raise ValueError("entry law must have zero mean")
        if any(m[r] <= 0 for r in range(2, MAX_MOMENT + 1, 2)):
            raise ValueError("even moments must be positive")
        if m[3] ** 2 > m[2] * m[4] * (1 + 1e-12):
            raise ValueError("moment table violates Cauchy-Schwarz")

    @property
    def spec(self) -> str:
        if self.family == "twopoint":
            return f"twopoint:{self.p:g}:{self.variance:g}"
        name = "gauss" if self.family == "gaussian" else self.family
        return f"{name}:{self.variance:g}"

    @property
    def is_discrete(self) -> bool:
        return self.family in ("rademacher", "twopoint")

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Support points and masses of a finitely supported law."""
        v = math.sqrt(self.variance)
        if self.family == "rademacher":
            return np.array([-v, v]), np.array([0.5, 0.5])
        if self.family == "twopoint":
            p = self.p
            hi = v * math.sqrt((1 - p) / p)
            lo = -v * math.sqrt(p / (1 - p))
            return np.array([hi, lo]), np.array([p, 1 - p])
        raise ValueError(f"{self.family} law is not finitely supported")

    def quadrature(self, order: int = 120) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights reproducing the law.

        Exact enumeration for discrete laws; Gauss-Hermite / Gauss-Legendre
        rules for the continuous ones.
        """
        if self.is_discrete:
            return self.atoms()
        if self.family == "gaussian":
            x, w = np.polynomial.hermite_e.hermegauss(order)
            return x * math.sqrt(self.variance), w / math.sqrt(2 * math.pi)
        x, w = np.polynomial.legendre.leggauss(order)
        return x * math.sqrt(3 * self.variance), w / 2

    def transform(self, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
        """Map two independent uniform arrays on (0, 1) to draws from the law."""
        v = math.sqrt(self.variance)
        if self.family == "gaussian":
            return v * np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)
        if self.family == "rademacher":
            return np.where(u1 < 0.5, -v, v)
        if self.family == "uniform":
            return math.sqrt(3.0) * v * (2.0 * u1 - 1.0)
        hi, lo = self.atoms()[0]
        return np.where(u1 < self.p, hi, lo)


def _moment_table(d: EntryDistribution) -> tuple[float, ...]:
    v2 = d.variance
    m = [0.0] * (MAX_MOMENT + 1)
    m[0] = 1.0
    if d.family == "gaussian":
        for r in range(2, MAX_MOMENT + 1, 2):
            m[r] = _double_factorial(r - 1) * v2 ** (r // 2)
    elif d.family == "rademacher":
        for r in range(2, MAX_MOMENT + 1, 2):
            m[r] = v2 ** (r // 2)
    elif d.family == "uniform":
        a = math.sqrt(3.0 * v2)
        for r in range(2, MAX_MOMENT + 1, 2):
            m[r] = a**r / (r + 1)
    elif d.family == "twopoint":
        p = d.p
        if p is None or not 0 < p < 1:
            raise ValueError(f"two-point law needs 0 < p < 1, got {p}")
        v = math.sqrt(v2)
        hi = v * math.sqrt((1 - p) / p)
        lo = -v * math.sqrt(p / (1 - p))
        for r in range(1, MAX_MOMENT + 1):
            m[r] = p * hi**r + (1 - p) * lo**r
        m[1] = 0.0
        m[2] = v2
    else:
        raise ValueError(f"unknown entry family {d.family!r}")
    return tuple(m)


def make_distribution(family: str, variance: float = 1.0, p: float | None = None) -> EntryDistribution:
    family = family.lower()
    if family in ("gauss", "normal"):
        family = "gaussian"
    if family not in ("gaussian", "rademacher", "uniform", "twopoint"):
        raise ValueError(f"unknown entry family {family!r}")
    if family == "twopoint":
        if p is None:
            raise ValueError("two-point law needs p")
        p = float(p)
    else:
        p = None
    return EntryDistribution(family, float(variance), p)


def parse_distribution(spec: str) -> EntryDistribution:
    """Parse ``gauss:<v2>``, ``rademacher:<v2>``, ``uniform:<v2>`` or ``twopoint:<p>:<v2>``."""
    parts = spec.strip().split(":")
    head = parts[0].lower()
    if head == "twopoint":
        if len(parts) != 3:
            raise ValueError("two-point spec must be 'twopoint:<p>:<v2>'")
        return make_distribution("twopoint", float(parts[2]), float(parts[1]))
    if len(parts) != 2:
        raise ValueError(f"distribution spec must be '<family>:<v2>', got {spec!r}")
    return make_distribution(head, float(parts[1]))


def sample_entry(dist: EntryDistribution, key: streams.StreamKey, counter: int) -> float:
    """One draw, fully determined by the stream key and counter."""
    return float(sample_entries(dist, key, np.array([counter]))[0])


def sample_entries(dist: EntryDistribution, key: streams.StreamKey, counters) -> np.ndarray:
    u1 = streams.uniforms_1d(key, streams.ENTRY_A, counters)
    u2 = streams.uniforms_1d(key, streams.ENTRY_B, counters)
    return dist.transform(u1, u2)


def cumulants_from_moments(mu) -> CumulantVector:
    """Cumulants K1..K6 from raw moments ``mu = (mu1, ..., mu6)`` with ``mu1 = 0``."""
    mu = tuple(float(x) for x in mu)
    if len(mu) < 6:
        raise ValueError("need moments mu1..mu6")
    m1, m2, m3, m4, m5, m6 = mu[:6]
    if abs(m1) > 1e-12 * max(1.0, abs(m2)) ** 0.5:
        raise ValueError(f"first moment must vanish, got {m1}")
    return CumulantVector(
        0.0,
        m2,
        m3,
        m4 - 3 * m2**2,
        m5 - 10 * m3 * m2,
        m6 - 15 * m4 * m2 - 10 * m3**2 + 30 * m2**3,
    )


def moments_from_cumulants(K) -> tuple[float, ...]:
    """Raw moments mu1..mu6 from cumulants with ``K1 = 0`` (inverse map)."""
    _, k2, k3, k4, k5, k6 = (float(x) for x in K)
    return (
        0.0,
        k2,
        k3,
        k4 + 3 * k2**2,
        k5 + 10 * k3 * k2,
        k6 + 15 * k4 * k2 + 10 * k3**2 + 15 * k2**3,
    )


def cumulants(dist: EntryDistribution) -> CumulantVector:
    return cumulants_from_moments(dist.moments[1:7])


def absolute_moment(dist: EntryDistribution, r: int) -> float:
    """E|a|^r; closed form for even r, quadrature / enumeration otherwise."""
    if r % 2 == 0 and r <= MAX_MOMENT:
        return dist.moments[r]
    v = math.sqrt(dist.variance)
    if dist.family == "gaussian":
        return v**r * 2 ** (r / 2) * math.gamma((r + 1) / 2) / math.sqrt(math.pi)
    if dist.family == "uniform":
        return (math.sqrt(3) * v) ** r / (r + 1)
    x, w = dist.atoms()
    return float(np.sum(w * np.abs(x) ** r))


THEOREM_CLASSES = ("thm-5.2", "thm-5.1", "thm-2.1-only", "none")


def classify_theorem(dist: EntryDistribution, k: Kernel, rtol: float = 1e-12) -> str:
    """Strongest variance-rate theorem whose moment hypotheses hold exactly.

    thm-5.1 needs zero odd moments through order 5 and Gaussian-matching
    fourth and sixth moments; thm-5.2 adds a finite tenth moment and a finite
    integral of sqrt(psi).  Every built-in law has a finite third absolute
    moment, so the weakest class always applies.
    """
    m = dist.moments
    v2 = dist.variance
    scale = [math.sqrt(v2) ** r for r in range(MAX_MOMENT + 1)]
    if not math.isfinite(absolute_moment(dist, 3)):
        return "none"
    odd_zero = all(abs(m[r]) <= rtol * scale[r] for r in (1, 3, 5))
    gaussian_like = math.isclose(m[4], 3 * v2**2, rel_tol=rtol) and math.isclose(m[6], 15 * v2**3, rel_tol=rtol)
    if not (odd_zero and gaussian_like and math.isfinite(absolute_moment(dist, 7))):
        return "thm-2.1-only"
    if math.isfinite(m[10]) and math.isfinite(k.sqrt_integral()):
        return "thm-5.2"
    return "thm-5.1"


@dataclass(frozen=True)
class MaskedEntry:
    """Law of a single matrix entry ``b^{-1/2} a d`` with ``P(d = 1) = psi``."""

    dist: EntryDistribution
    b: float
    psi: float

    def __post_init__(self):
        if not 0 <= self.psi <= 1:
            raise ValueError("psi must lie in [0, 1]")
        if self.b <= 0:
            raise ValueError("b must be positive")

    @property
    def moments(self) -> tuple[float, ...]:
        m = self.dist.moments
        return (1.0,) + tuple(m[r] * self.psi / self.b ** (r / 2) for r in range(1, MAX_MOMENT + 1))

    @property
    def is_discrete(self) -> bool:
        return self.dist.is_discrete

    def quadrature(self, order: int = 120) -> tuple[np.ndarray, np.ndarray]:
        x, w = self.dist.quadrature(order)
        x = np.concatenate([x / math.sqrt(self.b), [0.0]])
        w = np.concatenate([w * self.psi, [1.0 - self.psi]])
        return x, w

    def transform(self, u1, u2, u3) -> np.ndarray:
        return np.where(u3 < self.psi, self.dist.transform(u1, u2) / math.sqrt(self.b), 0.0)


def entry_absolute_moment(law, r: int) -> float:
    if isinstance(law, MaskedEntry):
        return absolute_moment(law.dist, r) * law.psi / law.b ** (r / 2)
    return absolute_moment(law, r)
