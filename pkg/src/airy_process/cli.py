"""Command-line front end.  Every subcommand prints CSV or JSON lines.

The Painleve solution is solved once and cached as ``.npz`` under
``$AIRY_PROCESS_CACHE`` (no caching when unset).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .airy_fredholm import KernelSpec, joint_cdf
from .asymptotics import c_constant, covariance_exact, joint_series, phi
from .matrix_mc import CoupledEnsembleConfig, empirical_joint_cdf, empirical_marginal_cdf, sample_batch
from .painleve import PainleveSolution, solve_hastings_mcleod
from .pde_check import build_grid, pde_residual_uv, pde_residual_xy

SCHEMA_VERSION = "1"
CACHE_ENV = "AIRY_PROCESS_CACHE"
_CACHE_FORMAT = 1


def load_solution(alpha_min=-10.0, alpha_max=8.0, n_nodes=4001, tol=1e-13) -> PainleveSolution:
    cache_dir = os.environ.get(CACHE_ENV)
    path = None
    if cache_dir:
        path = Path(cache_dir) / f"painleve-v{_CACHE_FORMAT}_{alpha_min:g}_{alpha_max:g}_{n_nodes}_{tol:g}.npz"
        if path.exists():
            with np.load(path) as data:
                fields = {f.name: data[f.name] for f in dataclasses.fields(PainleveSolution)}
            for name in ("alpha_min", "alpha_max"):
                fields[name] = float(fields[name])
            fields["newton_iterations"] = int(fields["newton_iterations"])
            return PainleveSolution(**fields)
    sol = solve_hastings_mcleod(alpha_min, alpha_max, n_nodes, tol)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, **{f.name: getattr(sol, f.name) for f in dataclasses.fields(sol)})
        os.replace(tmp, path)
    return sol


# ---------------------------------------------------------------------------
# argument types


def _positive(x):
    v = float(x)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {x}")
    return v


def _finite(x):
    v = float(x)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {x}")
    return v


def _count(x):
    v = int(x)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {x}")
    return v


def _seed(x):
    v = int(x)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit nonnegative integer")
    return v


def _kernel_kwargs(args):
    return {"truncation": args.truncation, "quad_order": args.quad_order, "z_quad_order": args.z_quad_order}


# ---------------------------------------------------------------------------
# commands: each returns a list of flat records


def cmd_painleve_table(args):
    lo, hi = args.range
    if not lo < hi:
        raise ValueError("range must satisfy start < stop")
    sol = load_solution()
    if lo < sol.alpha_min or hi > sol.alpha_max:
        raise ValueError(f"range must lie inside [{sol.alpha_min}, {sol.alpha_max}]")
    n = int(math.floor((hi - lo) / args.step + 1e-9))
    alphas = lo + args.step * np.arange(n + 1)
    tails = sol.tails_at(alphas)
    F = sol.f2_cdf(alphas)
    dF = sol.f2_pdf(alphas)
    q = sol.q_at(alphas)
    qp = sol.qp_at(alphas)
    return [
        {"alpha": float(a), "q": float(q[k]), "q_prime": float(qp[k]), "gp": float(tails.gp[k]), "g": float(tails.g[k]),
         "g1p": float(tails.g1p[k]), "g2p": float(tails.g2p[k]), "F2": float(F[k]), "F2_prime": float(dF[k])}
        for k, a in enumerate(alphas)
    ]


def cmd_joint(args):
    t, u, v = args.t, args.u, args.v
    rec = {"method": args.method, "t": t, "u": u, "v": v}
    if args.method == "exact":
        res = joint_cdf(KernelSpec((0.0, t), (u, v), **_kernel_kwargs(args)))
        rec.update(value=res.value, error_estimate=res.refinement_error)
    elif args.method in ("series2", "series4"):
        if t <= 0:
            raise ValueError("series methods need t > 0")
        sol = load_solution()
        order = 2 if args.method == "series2" else 4
        val = float(joint_series(t, u, v, order, sol))
        # size of the first omitted term, or of the last included one for order 4
        nxt = (phi(u, v, sol) + phi(v, u, sol)) / t**4
        err = abs(nxt) if order == 2 else abs(nxt) / t**2
        rec.update(value=val, error_estimate=float(err))
    else:
        if t <= 0:
            raise ValueError("mc needs t > 0")
        batch = sample_batch(CoupledEnsembleConfig(args.n, t, args.samples, args.seed), workers=args.workers)
        est = empirical_joint_cdf(batch, u, v)
        rec.update(value=est.value, error_estimate=est.stderr, n=args.n, samples=args.samples, seed=args.seed)
    return [rec]


def _range_points(lo, hi, mesh):
    n = int(round((hi - lo) / mesh))
    return lo + mesh * np.arange(n + 1)


def cmd_pde_residual(args):
    m = args.mesh
    (ulo, uhi), (vlo, vhi) = args.u_range, args.v_range
    if not (ulo <= uhi and vlo <= vhi):
        raise ValueError("ranges must be ordered")
    if args.t - (args.t_mesh or m) <= 0:
        raise ValueError("t must exceed the time step")
    grid = build_grid(args.t, (ulo - 2 * m, uhi + 2 * m), (vlo - 2 * m, vhi + 2 * m), m, args.t_mesh,
                      source=args.source, sol=load_solution(), **({} if args.source == "series" else _kernel_kwargs(args)))
    fn = pde_residual_uv if args.form == "uv" else pde_residual_xy
    rows = []
    for ia in range(2, grid.u_grid.size - 2):
        for ib in range(2, grid.v_grid.size - 2):
            r = fn(grid, (ia, ib))
            rows.append({"form": args.form, "source": args.source, "t": r.point[0], "u": float(r.point[1]), "v": float(r.point[2]),
                         "mesh": m, "lhs": float(r.lhs), "rhs": float(r.rhs), "residual": float(r.residual),
                         "scale": float(r.scale), "relative_residual": float(r.relative_residual)})
    return rows


def cmd_covariance(args):
    sol = load_solution()
    rows = []
    for t in args.t:
        cov = covariance_exact(t, args.window, args.mesh, sol, **_kernel_kwargs(args))
        rows.append({"t": t, "covariance": cov, "cov_t2": cov * t * t, "remainder_t4": (cov - 1 / t**2) * t**4})
    return rows


def cmd_c_constant(args):
    sol = load_solution()
    c = c_constant(args.window, args.mesh, sol)
    c_half = c_constant(args.window, args.mesh / 2, sol)
    return [{"window": args.window, "mesh": args.mesh, "c": c, "c_half_mesh": c_half, "relative_change": abs(c - c_half) / abs(c_half)}]


def cmd_mc_validate(args):
    sol = load_solution()
    batch = sample_batch(CoupledEnsembleConfig(args.n, args.t, args.samples, args.seed), workers=args.workers)
    x = np.sort(batch.a0)
    ecdf_hi = np.arange(1, x.size + 1) / x.size
    F = sol.f2_cdf(x)
    sup = float(max(np.max(np.abs(ecdf_hi - F)), np.max(np.abs(ecdf_hi - 1 / x.size - F))))
    rows = []
    for u in args.grid:
        for v in args.grid:
            est = empirical_joint_cdf(batch, u, v)
            exact = joint_cdf(KernelSpec((0.0, args.t), (u, v), **_kernel_kwargs(args))).value
            rows.append({"n": args.n, "t": args.t, "samples": args.samples, "seed": args.seed, "u": u, "v": v,
                         "empirical": est.value, "stderr": est.stderr, "exact": exact,
                         "series4": float(joint_series(args.t, u, v, 4, sol)),
                         "within_tolerance": abs(est.value - exact) <= max(3 * est.stderr, 0.03),
                         "marginal_sup_distance": sup})
    return rows


# ---------------------------------------------------------------------------
# output


def _emit(rows, fmt, out):
    rows = [{"spec_version": SCHEMA_VERSION, **r} for r in rows]
    if fmt == "json":
        for r in rows:
            out.write(json.dumps(r) + "\n")
        return
    if not rows:
        return
    w = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="airy-process", description="Airy process distributions and checks")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", "-o", help="output file (default: stdout)")
    kern = argparse.ArgumentParser(add_help=False)
    kern.add_argument("--truncation", type=_positive, default=16.0, help="interval length L")
    kern.add_argument("--quad-order", type=_count, default=64)
    kern.add_argument("--z-quad-order", type=_count, default=20)
    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--n", type=_count, default=100)
    mc.add_argument("--samples", type=_count, default=2000)
    mc.add_argument("--seed", type=_seed, default=2024)
    mc.add_argument("--workers", type=_count, default=1)

    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("painleve-table", parents=[common], help="q, tail integrals and F2 on a range")
    s.add_argument("--range", nargs=2, type=_finite, default=(-8.0, 8.0), metavar=("START", "STOP"))
    s.add_argument("--step", type=_positive, default=0.5)
    s.set_defaults(func=cmd_painleve_table)

    s = sub.add_parser("joint", parents=[common, kern, mc], help="P(A(0) <= u, A(t) <= v)")
    s.add_argument("--t", type=_finite, required=True)
    s.add_argument("--u", type=_finite, required=True)
    s.add_argument("--v", type=_finite, required=True)
    s.add_argument("--method", choices=("exact", "series2", "series4", "mc"), default="exact")
    s.set_defaults(func=cmd_joint)

    s = sub.add_parser("pde-residual", parents=[common, kern], help="finite-difference PDE residuals")
    s.add_argument("--t", type=_positive, required=True)
    s.add_argument("--u-range", nargs=2, type=_finite, default=(0.0, 0.0), metavar=("LO", "HI"))
    s.add_argument("--v-range", nargs=2, type=_finite, default=(0.0, 0.0), metavar=("LO", "HI"))
    s.add_argument("--mesh", type=_positive, default=0.02)
    s.add_argument("--t-mesh", type=_positive, default=None)
    s.add_argument("--form", choices=("uv", "xy"), default="uv")
    s.add_argument("--source", choices=("exact", "series"), default="exact")
    s.set_defaults(func=cmd_pde_residual)

    s = sub.add_parser("covariance", parents=[common, kern], help="Cov(A(0), A(t))")
    s.add_argument("--t", type=_positive, nargs="+", required=True)
    s.add_argument("--window", type=_positive, default=8.0)
    s.add_argument("--mesh", type=_positive, default=0.25)
    s.set_defaults(func=cmd_covariance)

    s = sub.add_parser("c-constant", parents=[common], help="the 1/t^4 covariance coefficient")
    s.add_argument("--window", type=_positive, default=8.0)
    s.add_argument("--mesh", type=_positive, default=0.1)
    s.set_defaults(func=cmd_c_constant)

    s = sub.add_parser("mc-validate", parents=[common, kern, mc], help="Monte Carlo against the Fredholm route")
    s.add_argument("--t", type=_positive, default=1.0)
    s.add_argument("--grid", type=_finite, nargs="+", default=(-1.0, 0.0, 1.0))
    s.set_defaults(func=cmd_mc_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rows = args.func(args)
    except (ValueError, ArithmeticError, RuntimeError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w", newline="") as fh:
            _emit(rows, args.format, fh)
    else:
        _emit(rows, args.format, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
