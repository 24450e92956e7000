"""Numerical checks of the one-variable cumulant expansion

    E[X f(X)] = sum_{r=0}^{q} K_{r+1}/r! E[f^{(r)}(X)] + remainder

and of Taylor-type bounds on the remainder.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import streams
from .entries import (
    EntryDistribution,
    MaskedEntry,
    cumulants_from_moments,
    entry_absolute_moment,
)

MAX_ORDER = 6


@dataclass(frozen=True)
class TestFunction:
    """Scalar test function with closed-form derivatives up to order 6.

    ``resolvent``: ``1/(t - z)``; ``polynomial``: ``sum c_k t^k`` (degree <= 6);
    ``rational``: ``a^2 / (a^2 + t^2)``.
    """

    __test__ = False  # not a pytest class

    family: str
    z: complex | None = None
    coefficients: tuple[float, ...] = ()
    a: float = 1.0

    def __post_init__(self):
        if self.family == "resolvent":
            if self.z is None or complex(self.z).imag == 0:
                raise ValueError("resolvent test function needs a nonreal z")
        elif self.family == "polynomial":
            if not 0 < len(self.coefficients) <= MAX_ORDER + 1:
                raise ValueError("polynomial needs 1..7 coefficients")
        elif self.family == "rational":
            if not self.a > 0:
                raise ValueError("rational test function needs a > 0")
        else:
            raise ValueError(f"unknown test-function family {self.family!r}")

    @property
    def label(self) -> str:
        if self.family == "resolvent":
            return f"resolvent({self.z.real:g},{self.z.imag:g})"
        if self.family == "polynomial":
            return "poly(" + ",".join(f"{c:g}" for c in self.coefficients) + ")"
        return f"rational({self.a:g})"

    def derivative(self, r: int, t) -> np.ndarray:
        """``f^{(r)}(t)`` for ``0 <= r <= 6``."""
        if not 0 <= r <= MAX_ORDER:
            raise ValueError("derivative order must be in 0..6")
        t = np.asarray(t, dtype=np.float64)
        if self.family == "resolvent":
            return (-1) ** r * math.factorial(r) / (t - self.z) ** (r + 1)
        if self.family == "polynomial":
            p = np.polynomial.Polynomial(self.coefficients).deriv(r)
            return p(t).astype(np.complex128)
        a = self.a
        c = (-1) ** r * math.factorial(r) * a / 2j
        return c * ((t - 1j * a) ** (-(r + 1)) - (t + 1j * a) ** (-(r + 1)))

    def __call__(self, t):
        return self.derivative(0, t)

    def sup_derivative(self, r: int) -> float:
        """Upper bound on ``sup_t |f^{(r)}(t)|`` (exact for resolvent and polynomial)."""
        if self.family == "resolvent":
            return math.factorial(r) / abs(self.z.imag) ** (r + 1)
        if self.family == "polynomial":
            p = np.polynomial.Polynomial(self.coefficients).deriv(r)
            coef = np.trim_zeros(p.coef, "b")
            if coef.size == 0:
                return 0.0
            return abs(float(coef[0])) if coef.size == 1 else math.inf
        return math.factorial(r) / self.a**r


def parse_test_function(spec: str) -> TestFunction:
    """``resolvent:<re>,<im>``, ``poly:<c0>,<c1>,...`` or ``rational:<a>``."""
    head, _, rest = spec.partition(":")
    head = head.lower()
    if head == "resolvent":
        re_s, im_s = rest.split(",")
        return TestFunction("resolvent", z=complex(float(re_s), float(im_s)))
    if head in ("poly", "polynomial"):
        return TestFunction("polynomial", coefficients=tuple(float(c) for c in rest.split(",")))
    if head == "rational":
        return TestFunction("rational", a=float(rest) if rest else 1.0)
    raise ValueError(f"unknown test function spec {spec!r}")


def default_library(z: complex = 3j) -> list[TestFunction]:
    return [
        TestFunction("resolvent", z=z),
        TestFunction("resolvent", z=complex(0.5, 1.5)),
        TestFunction("rational", a=1.0),
        TestFunction("rational", a=2.0),
        TestFunction("polynomial", coefficients=(0.0, 1.0, 0.5, -1.0, 0.25)),
        TestFunction("polynomial", coefficients=(1.0, 0.0, 0.0, 1.0)),
    ]


@dataclass
class ExpansionReport:
    law: str
    function: str
    q: int
    method: str
    samples: int
    cumulants: tuple[float, ...]
    lhs: complex
    lhs_stderr: float
    terms: list[complex]
    term_stderrs: list[float]
    remainder: complex
    remainder_stderr: float
    bound: float | None = None

    @property
    def bound_holds(self) -> bool | None:
        if self.bound is None:
            return None
        return abs(self.remainder) <= self.bound + 4.0 * self.remainder_stderr

    def to_dict(self) -> dict:
        def c(x):
            return [float(np.real(x)), float(np.imag(x))]

        d = asdict(self)
        d["lhs"] = c(self.lhs)
        d["terms"] = [c(t) for t in self.terms]
        d["remainder"] = c(self.remainder)
        d["remainder_abs"] = float(abs(self.remainder))
        d["bound_holds"] = self.bound_holds
        return d


def _law_label(law) -> str:
    if isinstance(law, MaskedEntry):
        return f"masked({law.dist.spec},b={law.b:g},psi={law.psi:g})"
    return law.spec


def _law_cumulants(law):
    return cumulants_from_moments(law.moments[1:7])


def _draw(law, n: int, key: streams.StreamKey) -> np.ndarray:
    idx = np.arange(n)
    u1 = streams.uniforms_1d(key, streams.ENTRY_A, idx)
    u2 = streams.uniforms_1d(key, streams.ENTRY_B, idx)
    if isinstance(law, MaskedEntry):
        u3 = streams.uniforms_1d(key, streams.MASK, idx)
        return law.transform(u1, u2, u3)
    return law.transform(u1, u2)


def _mean_and_stderr(vals: np.ndarray) -> tuple[complex, float]:
    m = complex(np.mean(vals))
    if vals.size < 2:
        return m, 0.0
    var = float(np.sum(np.abs(vals - m) ** 2)) / (vals.size - 1)
    return m, math.sqrt(var / vals.size)


def expansion_estimate(
    law: EntryDistribution | MaskedEntry,
    f: TestFunction,
    q: int,
    samples: int = 200_000,
    seed: int = 0,
    method: str = "auto",
) -> ExpansionReport:
    """Estimate both sides of the truncated expansion of ``E[X f(X)]``.

    ``method``: ``monte-carlo``; ``exact`` (enumeration for discrete laws,
    Gaussian quadrature otherwise); ``auto`` picks ``exact`` for discrete laws.
    """
    if q not in (1, 3, 5):
        raise ValueError("q must be 1, 3 or 5")
    if q + 2 > len(law.moments) - 1 or not all(math.isfinite(m) for m in law.moments[: q + 3]):
        raise ValueError(f"law needs finite moments through order {q + 2}")
    K = _law_cumulants(law)
    coeffs = [K[r] / math.factorial(r) for r in range(q + 1)]  # K[r] is K_{r+1}
    if method == "auto":
        method = "exact" if law.is_discrete else "monte-carlo"
    if method == "exact":
        x, w = law.quadrature()
        lhs = complex(np.sum(w * x * f(x)))
        terms = [c * complex(np.sum(w * f.derivative(r, x))) for r, c in enumerate(coeffs)]
        rem = lhs - sum(terms)
        lhs_se, term_se, rem_se = 0.0, [0.0] * len(terms), 0.0
        used = int(x.size)
    elif method == "monte-carlo":
        X = _draw(law, samples, streams.StreamKey(seed, 0))
        lhs_vals = X * f(X)
        term_vals = [c * f.derivative(r, X) for r, c in enumerate(coeffs)]
        lhs, lhs_se = _mean_and_stderr(lhs_vals)
        pairs = [_mean_and_stderr(v) for v in term_vals]
        terms = [p[0] for p in pairs]
        term_se = [p[1] for p in pairs]
        rem, rem_se = _mean_and_stderr(lhs_vals - sum(term_vals))
        used = samples
    else:
        raise ValueError(f"unknown method {method!r}")
    bound = None
    if q in (1, 3) and _bound_applies(law, q) and math.isfinite(f.sup_derivative(q + 1)):
        bound = remainder_bound(law, f, q)
    return ExpansionReport(
        law=_law_label(law),
        function=f.label,
        q=q,
        method=method,
        samples=used,
        cumulants=tuple(float(k) for k in K),
        lhs=lhs,
        lhs_stderr=lhs_se,
        terms=terms,
        term_stderrs=term_se,
        remainder=rem,
        remainder_stderr=rem_se,
        bound=bound,
    )


def _bound_applies(law, q: int) -> bool:
    m = law.moments
    return not (q == 3 and abs(m[3]) > 1e-12 * m[2] ** 1.5)


def remainder_bound(law: EntryDistribution | MaskedEntry, f: TestFunction, q: int) -> float:
    """Sup-norm bound on the expansion remainder.

    q = 1: ``sup|f''| (E|X|^3 / 2 + K2 E|X|)`` from second-order Taylor
    expansions of ``f(X)`` and ``f'(X)`` about 0.

    q = 3 (requires ``E X^3 = 0``): ``sup|f''''| (|K4|/6 E|X| + K2/6 E|X|^3 +
    E|X|^5 / 24)``, one term per Taylor remainder with intermediate points
    bounded by ``|X|``.
    """
    if q not in (1, 3):
        raise ValueError("remainder bounds are available for q = 1 and q = 3 only")
    if not math.isfinite(f.sup_derivative(q + 1)):
        raise ValueError(f"{f.label} has unbounded derivative of order {q + 1}")
    K = _law_cumulants(law)
    k2, k4 = K[1], K[3]
    if q == 1:
        s = f.sup_derivative(2)
        if s == 0:
            return 0.0
        return s * (entry_absolute_moment(law, 3) / 2 + k2 * entry_absolute_moment(law, 1))
    if q == 3:
        if abs(law.moments[3]) > 1e-12 * law.moments[2] ** 1.5:
            raise ValueError("the q = 3 bound needs E X^3 = 0")
        s = f.sup_derivative(4)
        if s == 0:
            return 0.0
        return s * (
            abs(k4) / 6 * entry_absolute_moment(law, 1)
            + k2 / 6 * entry_absolute_moment(law, 3)
            + entry_absolute_moment(law, 5) / 24
        )
