"""Monte Carlo scans over a ladder of band widths and power-law fits."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from . import streams
from .eigensolver import EigenSolverError
from .ensemble import EnsembleParams, sample_matrix, wigner_reference
from .entries import EntryDistribution, classify_theorem, parse_distribution
from .kernels import Kernel, parse_kernel
from .resolvent import empirical_stieltjes, eta, in_lambda, parse_z, semicircle_stieltjes
from .spectra import eigenvalues, ks_distance

CSV_COLUMNS = ("b", "n", "M", "statistic", "estimate", "stderr")
_MEDIAN_SE = math.sqrt(math.pi / 2)


class ConfigError(ValueError):
    pass


def _z_label(z: complex) -> str:
    return f"{z.real:g},{z.imag:g}"


@dataclass(frozen=True)
class ScanConfig:
    """One scan.  Cells are ``(b, n = ceil(aspect * b))`` unless ``n_values`` is set.

    In ``wigner`` mode each ``n`` in ``n_values`` is a cell with ``b = N``.
    """

    dist: str = "gauss:1"
    kernel: str = "exp:1"
    z: tuple[complex, ...] = ()
    b_ladder: tuple[float, ...] = (8.0, 16.0, 32.0, 64.0)
    aspect: float = 16.0
    replicas: int = 200
    seed: int = 0
    n_values: tuple[int, ...] = ()
    ensemble: str = "percolation"
    allow_outside_lambda: bool = False
    vary_replicas: bool = True
    jobs: int = 1
    out: str | None = None

    def __post_init__(self):
        try:
            parse_distribution(self.dist)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        object.__setattr__(self, "z", tuple(complex(z) for z in self.z) or (complex(0.0, eta(self.v2)),))
        object.__setattr__(self, "b_ladder", tuple(float(b) for b in self.b_ladder))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        self.validate()

    @property
    def distribution(self) -> EntryDistribution:
        return parse_distribution(self.dist)

    @property
    def kernel_obj(self) -> Kernel:
        return parse_kernel(self.kernel)

    @property
    def v2(self) -> float:
        return parse_distribution(self.dist).variance

    def cells(self) -> list[tuple[float, int]]:
        if self.ensemble == "wigner":
            return [(float(2 * n + 1), n) for n in self.n_values]
        if self.n_values:
            return list(zip(self.b_ladder, self.n_values))
        return [(b, int(math.ceil(self.aspect * b))) for b in self.b_ladder]

    def validate(self) -> None:
        try:
            d = parse_distribution(self.dist)
            parse_kernel(self.kernel)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.ensemble not in ("percolation", "wigner"):
            raise ConfigError(f"unknown ensemble {self.ensemble!r}")
        if self.ensemble == "wigner" and not self.n_values:
            raise ConfigError("wigner mode needs n_values")
        if self.n_values and self.ensemble == "percolation" and len(self.n_values) != len(self.b_ladder):
            raise ConfigError("n_values must match b_ladder in length")
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        for b, n in self.cells():
            if not 0 < b <= 2 * n + 1:
                raise ConfigError(f"cell (b={b:g}, n={n}) violates 0 < b <= 2n+1")
        for z in self.z:
            if z.imag == 0:
                raise ConfigError("z must be nonreal")
            if not in_lambda(z, d.variance) and not self.allow_outside_lambda:
                raise ConfigError(
                    f"z = {z} has |Im z| < eta = {eta(d.variance):g}; pass allow_outside_lambda to explore"
                )

    def to_json(self) -> dict:
        d = asdict(self)
        d["z"] = [_z_label(z) for z in self.z]
        return d

    @classmethod
    def from_json(cls, data: dict, **overrides) -> "ScanConfig":
        data = {**data, **{k: v for k, v in overrides.items() if v is not None}}
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "z" in data:
            data["z"] = tuple(
                parse_z(z) if isinstance(z, str) else complex(*z) if isinstance(z, (list, tuple)) else complex(z)
                for z in data["z"]
            )
        for key in ("b_ladder", "n_values"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    lo: float
    hi: float
    points: int


@dataclass
class ScanReport:
    rows: list[tuple[float, int, int, str, float, float]]
    fits: dict[str, SlopeFit | None]
    theorem_class: str
    config: ScanConfig
    failures: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for b, n, M, name, est, se in self.rows:
            w.writerow([repr(float(b)), n, M, name, repr(float(est)), repr(float(se))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "theorem_class": self.theorem_class,
            "fits": {k: (asdict(v) if v else None) for k, v in self.fits.items()},
            "failures": self.failures,
            "notes": self.notes,
            "config": self.config.to_json(),
        }

    def to_json(self) -> str:
        d = self.summary()
        d["rows"] = [dict(zip(CSV_COLUMNS, r)) for r in self.rows]
        return json.dumps(d, indent=2, sort_keys=True, default=_json_default)

    def write(self, path: str | Path, fmt: str = "csv") -> None:
        path = Path(path)
        if fmt == "csv":
            path.write_text(self.to_csv())
            path.with_name(path.name + ".summary.json").write_text(
                json.dumps(self.summary(), indent=2, sort_keys=True, default=_json_default)
            )
        elif fmt == "json":
            path.write_text(self.to_json())
        else:
            raise ValueError(f"unknown format {fmt!r}")


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(type(o))


def fit_slope(points) -> SlopeFit:
    """OLS of log2(value) on log2(b) with a 95% t-interval on the slope."""
    pts = [(float(b), float(v)) for b, v in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    if any(v <= 0 or b <= 0 for b, v in pts):
        raise ValueError("values and b must be positive")
    x = np.log2([b for b, _ in pts])
    y = np.log2([v for _, v in pts])
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0:
        raise ValueError("need at least two distinct b values")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    dof = len(pts) - 2
    s2 = float(np.sum(resid**2)) / dof
    half = float(stats.t.ppf(0.975, dof)) * math.sqrt(s2 / sxx)
    return SlopeFit(slope, intercept, slope - half, slope + half, len(pts))


def jackknife_variance(values: np.ndarray) -> tuple[float, float]:
    """Unbiased ``E|g - Eg|^2`` estimate and its jackknife standard error."""
    g = np.asarray(values, dtype=np.complex128)
    M = g.size
    total = complex(np.sum(g))
    mean = total / M
    est = float(np.sum(np.abs(g - mean) ** 2)) / (M - 1) if M > 1 else 0.0
    if M < 3:
        return est, 0.0
    s2 = float(np.sum(np.abs(g) ** 2))
    loo_mean = (total - g) / (M - 1)
    # leave-one-out sum of |g_k - mean_{-i}|^2 = S2_{-i} - (M-1) |mean_{-i}|^2
    loo = ((s2 - np.abs(g) ** 2) - (M - 1) * np.abs(loo_mean) ** 2) / (M - 2)
    se = math.sqrt((M - 1) / M * float(np.sum((loo - loo.mean()) ** 2)))
    return est, se


def median_with_stderr(values) -> tuple[float, float]:
    """Median and its large-sample normal-theory standard error."""
    v = np.asarray(values, dtype=np.float64)
    med = float(np.median(v))
    if v.size < 2:
        return med, 0.0
    return med, _MEDIAN_SE * float(np.std(v, ddof=1)) / math.sqrt(v.size)


def _cell_seed(seed: int, cell: int) -> int:
    return streams.StreamKey(seed, cell).split(cell).seed


def _replica(config: ScanConfig, cell: int, b: float, n: int, replica: int) -> dict:
    """Sample one matrix and return its statistics."""
    dist = config.distribution
    seed = _cell_seed(config.seed, cell)
    rep = replica if config.vary_replicas else 0
    try:
        if config.ensemble == "wigner":
            m = wigner_reference(n, dist, seed=seed, replica=rep)
        else:
            m = sample_matrix(EnsembleParams(n, b, config.kernel_obj, dist, seed), replica=rep)
        s = eigenvalues(m)
    except (EigenSolverError, np.linalg.LinAlgError, MemoryError, ValueError) as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}
    g = [empirical_stieltjes(s, z) for z in config.z]
    return {"g": g, "ks": ks_distance(s, dist.variance)}


def _collect(config: ScanConfig) -> list[tuple[int, float, int, list[dict]]]:
    cells = config.cells()
    tasks = [(c, b, n, r) for c, (b, n) in enumerate(cells) for r in range(config.replicas)]
    if config.jobs == 1:
        results = [_replica(config, *t) for t in tasks]
    else:
        results = Parallel(n_jobs=config.jobs)(delayed(_replica)(config, *t) for t in tasks)
    out = []
    for c, (b, n) in enumerate(cells):
        chunk = results[c * config.replicas : (c + 1) * config.replicas]
        out.append((c, b, n, chunk))
    return out


def _notes(config: ScanConfig) -> list[str]:
    notes = []
    if config.ensemble == "percolation" and not config.n_values:
        notes.append(f"n coupled to b by n = ceil({config.aspect:g} * b)")
    if config.ensemble == "wigner":
        notes.append("wigner reference mode: b reported as N")
    for z in config.z:
        if not in_lambda(z, config.v2):
            notes.append(f"z = {_z_label(z)} outside |Im z| >= {eta(config.v2):g}: no uniqueness/rate guarantee")
    return notes


def _theorem_label(config: ScanConfig) -> str:
    return classify_theorem(config.distribution, config.kernel_obj)


def _cell_failures(b, n, chunk) -> dict | None:
    errors = [r["error"] for r in chunk if "error" in r]
    if errors:
        return {"b": b, "n": n, "failed_replicas": len(errors), "message": errors[0]}
    return None


def run_variance_scan(config: ScanConfig) -> ScanReport:
    """Per cell, the sample variance ``E|g_n(z) - E g_n(z)|^2`` with jackknife errors.

    Slopes of log Var against log b are fitted per z over the cells that
    produced a positive variance.
    """
    rows, failures = [], []
    series: dict[str, list[tuple[float, float]]] = {}
    for _, b, n, chunk in _collect(config):
        fail = _cell_failures(b, n, chunk)
        if fail:
            failures.append(fail)
            rows.append((b, n, config.replicas, "cell_failed", math.nan, math.nan))
            continue
        M = len(chunk)
        for k, z in enumerate(config.z):
            g = np.array([r["g"][k] for r in chunk])
            est, se = jackknife_variance(g)
            name = f"var_g[{_z_label(z)}]"
            rows.append((b, n, M, name, est, se))
            series.setdefault(name, []).append((b, est))
            mean = complex(np.mean(g))
            rows.append((b, n, M, f"re_mean_g[{_z_label(z)}]", mean.real, float(np.std(g.real, ddof=1) / math.sqrt(M)) if M > 1 else 0.0))
            rows.append((b, n, M, f"im_mean_g[{_z_label(z)}]", mean.imag, float(np.std(g.imag, ddof=1) / math.sqrt(M)) if M > 1 else 0.0))
    fits: dict[str, SlopeFit | None] = {}
    for name, pts in series.items():
        usable = [(b, v) for b, v in pts if v > 0]
        fits[name] = fit_slope(usable) if len(usable) >= 3 and len({b for b, _ in usable}) >= 2 else None
    return ScanReport(rows, fits, _theorem_label(config), config, failures, _notes(config))


def run_convergence_scan(config: ScanConfig) -> ScanReport:
    """Per cell, the median KS distance to the semicircle law and the median
    ``|g_n(z) - w_sc(z)|`` over replicas."""
    rows, failures = [], []
    series: dict[str, list[tuple[float, float]]] = {}
    v2 = config.v2
    for _, b, n, chunk in _collect(config):
        fail = _cell_failures(b, n, chunk)
        if fail:
            failures.append(fail)
            rows.append((b, n, config.replicas, "cell_failed", math.nan, math.nan))
            continue
        M = len(chunk)
        med, se = median_with_stderr([r["ks"] for r in chunk])
        rows.append((b, n, M, "ks_median", med, se))
        series.setdefault("ks_median", []).append((b, med))
        for k, z in enumerate(config.z):
            w = semicircle_stieltjes(z, v2)
            dev = [abs(r["g"][k] - w) for r in chunk]
            med, se = median_with_stderr(dev)
            name = f"abs_g_minus_wsc_median[{_z_label(z)}]"
            rows.append((b, n, M, name, med, se))
            series.setdefault(name, []).append((b, med))
    fits = {}
    for name, pts in series.items():
        usable = [(b, v) for b, v in pts if v > 0]
        fits[name] = fit_slope(usable) if len(usable) >= 3 and len({b for b, _ in usable}) >= 2 else None
    return ScanReport(rows, fits, _theorem_label(config), config, failures, _notes(config))
