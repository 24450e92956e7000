"""Command-line entry point: ``percolation-rmt <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .cumulant_expansion import expansion_estimate, parse_test_function
from .ensemble import EnsembleParams, dump_matrix, sample_matrix, wigner_reference
from .entries import MaskedEntry, make_distribution, parse_distribution
from .experiments import ConfigError, ScanConfig, run_convergence_scan, run_variance_scan
from .kernels import eval_kernel, parse_kernel
from .resolvent import (
    ConvergenceError,
    OutsideLambdaError,
    derivative_identity_check,
    empirical_stieltjes,
    eta,
    in_lambda,
    interior_deviation,
    parse_z,
    resolvent,
    row_energies,
    semicircle_stieltjes,
    solve_finite_system,
)
from .spectra import esd_histogram, esd_moment, eigenvalues, ks_distance, semicircle_moment


def _dist_spec(args) -> str:
    spec = args.dist or "gauss:1"
    if args.v2 is not None:
        d = parse_distribution(spec)
        spec = make_distribution(d.family, args.v2, d.p).spec
    return spec


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    def default(o):
        if isinstance(o, complex):
            return [o.real, o.imag]
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(type(o))

    return json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _matrix(args, replica: int = 0):
    dist = parse_distribution(_dist_spec(args))
    n = args.n
    if args.wigner:
        return wigner_reference(n, dist, seed=args.seed, replica=replica), dist
    b = args.b[0] if args.b else 8.0
    p = EnsembleParams(n, b, parse_kernel(args.kernel), dist, args.seed)
    return sample_matrix(p, replica=replica), dist


def _z_list(args, v2: float) -> list[complex]:
    zs = [parse_z(s) for s in args.z] if args.z else [complex(0.0, eta(v2))]
    for z in zs:
        if not in_lambda(z, v2) and not args.allow_outside_lambda:
            raise OutsideLambdaError(f"z = {z} has |Im z| < {eta(v2):g}; pass --allow-outside-lambda")
    return zs


def cmd_sample_spectrum(args) -> int:
    m, dist = _matrix(args, args.replica)
    s = eigenvalues(m)
    if args.dump_matrix:
        dump_matrix(m, args.dump_matrix)
    if args.format == "json":
        _emit(_json({"N": s.N, "eigenvalues": s.eigenvalues.tolist(), "ks": ks_distance(s, dist.variance)}), args.out)
    else:
        _emit(_csv(["index", "eigenvalue"], enumerate(s.eigenvalues.tolist())), args.out)
    return 0


def cmd_esd_report(args) -> int:
    m, dist = _matrix(args, args.replica)
    s = eigenvalues(m)
    v2 = dist.variance
    rows = esd_histogram(s, v2, bins=args.bins)
    summary = {
        "N": s.N,
        "ks": ks_distance(s, v2),
        "moments": [
            {"k": k, "esd": esd_moment(s, k), "semicircle": semicircle_moment(k, v2)} for k in range(1, 9)
        ],
    }
    if args.format == "json":
        summary["histogram"] = [dict(zip(("bin_left", "bin_right", "esd_mass", "semicircle_mass"), r)) for r in rows]
        _emit(_json(summary), args.out)
        return 0
    _emit(_csv(["bin_left", "bin_right", "esd_mass", "semicircle_mass"], rows), args.out)
    if args.out:
        Path(args.out + ".summary.json").write_text(_json(summary))
    else:
        sys.stderr.write(_json(summary))
    return 0


def _scan_config(args) -> ScanConfig:
    data = {}
    if args.config:
        data = json.loads(Path(args.config).read_text())
    overrides = {
        "kernel": args.kernel,
        "z": args.z or None,
        "b_ladder": args.b or None,
        "aspect": args.aspect,
        "replicas": args.replicas,
        "seed": args.seed,
        "jobs": args.jobs,
        "out": args.out,
    }
    if args.dist is not None or args.v2 is not None:
        if args.dist is None:
            args.dist = data.get("dist", "gauss:1")
        overrides["dist"] = _dist_spec(args)
    if args.n_values:
        overrides["n_values"] = args.n_values
    if args.wigner_n:
        overrides["ensemble"] = "wigner"
        overrides["n_values"] = args.wigner_n
    if args.allow_outside_lambda:
        overrides["allow_outside_lambda"] = True
    return ScanConfig.from_json(data, **overrides)


def _run_scan(args, runner) -> int:
    config = _scan_config(args)
    report = runner(config)
    if config.out:
        report.write(config.out, args.format)
    else:
        _emit(report.to_json() if args.format == "json" else report.to_csv(), None)
        if args.format == "csv":
            sys.stderr.write(_json(report.summary()))
    return 1 if report.failures else 0


def cmd_variance_scan(args) -> int:
    return _run_scan(args, run_variance_scan)


def cmd_convergence_scan(args) -> int:
    return _run_scan(args, run_convergence_scan)


def cmd_fixedpoint(args) -> int:
    v2 = parse_distribution(_dist_spec(args)).variance
    b = args.b[0] if args.b else 8.0
    kernel = parse_kernel(args.kernel)
    (z,) = _z_list(args, v2)[:1]
    sol = solve_finite_system(args.n, b, v2, kernel, z, allow_outside=args.allow_outside_lambda)
    w = semicircle_stieltjes(z, v2)
    summary = {
        "n": args.n,
        "b": b,
        "v2": v2,
        "kernel": kernel.spec,
        "z": z,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "max_contraction_ratio": max(sol.ratios) if sol.ratios else 0.0,
        "sup_abs_r": float(np.max(np.abs(sol.r))),
        "ball_radius": 2.0 / abs(z.imag),
        "w_sc": w,
        "deviation_all": interior_deviation(sol.r, w, b, 0),
        "guaranteed": sol.guaranteed,
    }
    L = args.interior_l
    if b * L <= args.n:
        summary[f"deviation_interior_L{L:g}"] = interior_deviation(sol.r, w, b, L)
    if not sol.guaranteed:
        summary["note"] = "z outside the contraction region: no uniqueness guarantee"
    idx = np.arange(-args.n, args.n + 1)
    rows = [(int(i), float(r.real), float(r.imag)) for i, r in zip(idx, sol.r)]
    if args.format == "json":
        summary["r"] = [{"i": i, "re": a, "im": c} for i, a, c in rows]
        _emit(_json(summary), args.out)
        return 0
    _emit(_csv(["i", "re_r", "im_r"], rows), args.out)
    if args.out:
        Path(args.out + ".summary.json").write_text(_json(summary))
    else:
        sys.stderr.write(_json(summary))
    return 0


def cmd_cumulant_check(args) -> int:
    dist = parse_distribution(_dist_spec(args))
    law = dist
    if args.mask_b is not None:
        psi = args.psi
        if psi is None:
            psi = float(eval_kernel(parse_kernel(args.kernel), args.lag / args.mask_b))
        law = MaskedEntry(dist, args.mask_b, psi)
    out = []
    for spec in args.function:
        f = parse_test_function(spec)
        rep = expansion_estimate(law, f, args.q, samples=args.samples, seed=args.seed, method=args.method)
        out.append(rep.to_dict())
    _emit(_json(out[0] if len(out) == 1 else out), args.out)
    return 0 if all(d["bound_holds"] is not False for d in out) else 1


def cmd_resolvent_check(args) -> int:
    m, dist = _matrix(args, args.replica)
    v2 = dist.variance
    zs = _z_list(args, v2)
    s = eigenvalues(m)
    results = []
    worst = 0
    for z in zs:
        G = resolvent(m, z)
        g = empirical_stieltjes(s, z)
        lim = 1.0 / abs(z.imag)
        viol = {
            "stieltjes": int(abs(g) > lim),
            "diagonal": int(np.sum(np.abs(np.diagonal(G)) > lim)),
            "row_energy": int(np.sum(row_energies(G) > lim**2 * (1 + 1e-12))),
        }
        worst += sum(viol.values())
        results.append(
            {
                "z": z,
                "g": g,
                "w_sc": semicircle_stieltjes(z, v2),
                "max_abs_G_ii": float(np.max(np.abs(np.diagonal(G)))),
                "max_row_energy": float(np.max(row_energies(G))),
                "bound": lim,
                "violations": viol,
            }
        )
    N = m.values.shape[0]
    j, k = (N // 2, N // 2) if args.site is None else args.site
    deriv = {
        "site": [j, k],
        "steps": [args.step, args.step / 2],
        "discrepancy": [
            derivative_identity_check(m, zs[0], (j, k), args.step),
            derivative_identity_check(m, zs[0], (j, k), args.step / 2),
        ],
    }
    d0, d1 = deriv["discrepancy"]
    deriv["ratio"] = d0 / d1 if d1 > 0 else math.inf
    _emit(_json({"N": N, "points": results, "derivative": deriv}), args.out)
    return 1 if worst else 0


def _common(p: argparse.ArgumentParser, scan: bool = False) -> None:
    p.add_argument("--kernel", default=None if scan else "exp:1", help="band | exp:<s> | gauss")
    p.add_argument("--dist", default=None if scan else "gauss:1", help="gauss:<v2> | rademacher:<v2> | uniform:<v2> | twopoint:<p>:<v2>")
    p.add_argument("--v2", type=float, help="override the entry variance")
    p.add_argument("--b", type=float, action="append", help="band width (repeatable in scans)")
    p.add_argument("--z", action="append", help="spectral parameter 're,im' (repeatable)")
    p.add_argument("--seed", type=int, default=None if scan else 0)
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--allow-outside-lambda", action="store_true")


def _matrix_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=100, help="matrix is (2n+1) x (2n+1)")
    p.add_argument("--replica", type=int, default=0)
    p.add_argument("--wigner", action="store_true", help="dense Wigner matrix instead of the percolation ensemble")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="percolation-rmt", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-spectrum", help="eigenvalues of one sampled matrix")
    _common(p)
    _matrix_flags(p)
    p.add_argument("--dump-matrix", help="also write the matrix as 'i j value' lines")
    p.set_defaults(func=cmd_sample_spectrum)

    p = sub.add_parser("esd-report", help="ESD histogram against the semicircle law")
    _common(p)
    _matrix_flags(p)
    p.add_argument("--bins", type=int, default=101)
    p.set_defaults(func=cmd_esd_report)

    for name, func, text in (
        ("variance-scan", cmd_variance_scan, "Var g_n(z) along a ladder of band widths"),
        ("convergence-scan", cmd_convergence_scan, "KS and |g_n - w_sc| along a ladder of band widths"),
    ):
        p = sub.add_parser(name, help=text)
        _common(p, scan=True)
        p.add_argument("--config", help="JSON file with ScanConfig fields; flags override it")
        p.add_argument("--n", dest="n_values", type=int, action="append", help="explicit n per ladder cell (repeatable)")
        p.add_argument("--replicas", type=int)
        p.add_argument("--aspect", type=float)
        p.add_argument("--jobs", type=int)
        p.add_argument("--wigner-n", type=int, action="append", help="Wigner reference cell (repeatable)")
        p.set_defaults(func=func)

    p = sub.add_parser("fixedpoint", help="solve the finite-n self-consistent system")
    _common(p)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--interior-l", type=float, default=8.0)
    p.set_defaults(func=cmd_fixedpoint)

    p = sub.add_parser("cumulant-check", help="cumulant expansion remainder and its bound")
    _common(p)
    p.add_argument("--function", action="append", default=None, help="resolvent:<re>,<im> | poly:<c0>,... | rational:<a>")
    p.add_argument("--q", type=int, default=1, choices=(1, 3, 5))
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--method", choices=("auto", "exact", "monte-carlo"), default="auto")
    p.add_argument("--mask-b", type=float, help="check the matrix entry b^{-1/2} a d instead of a")
    p.add_argument("--psi", type=float, help="mask probability (default: kernel at --lag / --mask-b)")
    p.add_argument("--lag", type=float, default=0.0)
    p.set_defaults(func=cmd_cumulant_check)

    p = sub.add_parser("resolvent-check", help="resolvent bounds and derivative identity on one matrix")
    _common(p)
    _matrix_flags(p)
    p.add_argument("--site", type=int, nargs=2, help="array indices (j, k) for the derivative check")
    p.add_argument("--step", type=float, default=1e-4)
    p.set_defaults(func=cmd_resolvent_check)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "function", "") is None:
        args.function = ["resolvent:0,3"]
    try:
        return args.func(args)
    except (ConfigError, OutsideLambdaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc} (residual {exc.residual:.3g})", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
