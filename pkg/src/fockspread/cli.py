"""Command-line entry point: one subcommand per reproduced result.

Every run writes into ``<root>/<subcommand>-<seed>-<hash>/`` a ``manifest.json``
and the CSV (or JSON) tables; ``--plot`` adds SVGs rendered from those tables.
The root defaults to ``$FOCKSPREAD_RUNS`` or ``./runs``.

Exit codes: 0 success, 2 validation failure, 3 check failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import __version__, dual, experiments
from .fockspace import IprSeries, fmt, ipr_series
from .model import CircuitSpec, make_variant, parse_angle, validate
from .statevector import MEMORY_BUDGET_BYTES, required_bytes

log = logging.getLogger("fockspread")

EXIT_OK, EXIT_VALIDATION, EXIT_CHECK = 0, 2, 3
ENV_ROOT = "FOCKSPREAD_RUNS"


class ValidationError(Exception):
    pass


def _int_list(text: str) -> list:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _str_list(text: str) -> list:
    return [x.strip() for x in str(text).split(",") if x.strip()]


def code_version() -> str:
    h = hashlib.sha256()
    for path in sorted(Path(__file__).parent.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return f"{__version__}+{h.hexdigest()[:12]}"


class Run:
    """Output directory plus manifest for one subcommand invocation."""

    def __init__(self, subcommand: str, params: dict, seed: int, root: str | None, fmt_: str):
        self.subcommand = subcommand
        self.params = params
        self.seed = seed
        self.format = fmt_
        canon = json.dumps(params, sort_keys=True, default=str)
        digest = hashlib.sha256(canon.encode()).hexdigest()[:10]
        root = root or os.environ.get(ENV_ROOT, "runs")
        self.dir = Path(root) / f"{subcommand}-{seed}-{digest}"
        self.dir.mkdir(parents=True, exist_ok=True)
        self.outputs: list = []

    def write_text(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text)
        self.outputs.append(name)
        return path

    def write_table(self, stem: str, header: list, rows: list) -> Path:
        """CSV with 17 significant digits, or a JSON list of records."""
        if self.format == "json":
            recs = [dict(zip(header, r)) for r in rows]
            return self.write_text(f"{stem}.json", json.dumps(recs, indent=1, default=float) + "\n")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) if isinstance(x, float) else x for x in r])
        return self.write_text(f"{stem}.csv", buf.getvalue())

    def add_output(self, path: Path):
        self.outputs.append(path.name)

    def finish(self, extra: dict | None = None):
        manifest = {
            "subcommand": self.subcommand,
            "params": self.params,
            "seed": self.seed,
            "code_version": code_version(),
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "outputs": sorted(self.outputs),
        }
        if extra:
            manifest.update(extra)
        (self.dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
        return self.dir


def build_spec(args, L: int | None = None) -> CircuitSpec:
    if getattr(args, "config", None):
        text = Path(args.config).read_text()
        spec = CircuitSpec.from_json(text) if text.lstrip().startswith("{") else CircuitSpec.from_config(text)
    else:
        theta = parse_angle(args.theta) if getattr(args, "theta", None) is not None else None
        variant = make_variant(args.variant, theta=theta, seed=args.seed)
        spec = CircuitSpec.self_dual(L if L is not None else args.L, g=parse_angle(args.g), variant=variant)
    diag = validate(spec)
    for w in diag.warnings:
        log.warning(w)
    if not diag.ok:
        raise ValidationError("; ".join(diag.errors))
    if required_bytes(spec.L) > MEMORY_BUDGET_BYTES:
        raise ValidationError(f"L={spec.L} needs {required_bytes(spec.L)} bytes, budget {MEMORY_BUDGET_BYTES}")
    return spec


# --- subcommands ----------------------------------------------------------------------


def cmd_ipr(args) -> int:
    spec = build_spec(args)
    qs = _int_list(args.q)
    if any(q < 2 for q in qs):
        raise ValidationError("q must be >= 2")
    params = {"spec": spec.to_dict(), "q": qs, "t_max": args.t_max}
    run = Run("ipr", params, args.seed, args.out, args.format)
    series = ipr_series(spec, qs, args.t_max)
    rows = [(r.t, r.q, r.I_q, r.S_q, r.I_q_analytic, r.S_q_analytic, r.haar_ratio) for r in series.rows]
    path = run.write_table("ipr", list(IprSeries.COLUMNS), rows)
    if args.plot and args.format == "csv":
        from .plotting import plot_ipr

        plot_ipr(path, run.dir / "ipr.svg", spec.L)
        run.add_output(run.dir / "ipr.svg")
    print(f"wrote {run.finish()}")
    return EXIT_OK


def cmd_dist(args) -> int:
    spec = build_spec(args)
    ts = _int_list(args.t)
    if args.bins < 10:
        raise ValidationError("--bins must be >= 10")
    params = {"spec": spec.to_dict(), "t": ts, "bins": args.bins, "x_max": args.x_max}
    run = Run("dist", params, args.seed, args.out, args.format)
    ks_rows = []
    for t, hist, ks_ref, ks_pt in experiments.distributions(spec, ts, args.bins, args.x_max):
        path = run.write_table(f"hist_t{t}", ["bin_lo", "bin_hi", "count", "density", "analytic", "porter_thomas"],
                               [(float(a), float(b), int(c), float(d), float(e), float(f))
                                for a, b, c, d, e, f in hist.rows()])
        ks_rows.append((t, ks_ref, ks_pt))
        print(f"t={t}: KS vs analytic = {ks_ref:.5f}, KS vs Porter-Thomas = {ks_pt:.5f}")
        if args.plot and args.format == "csv":
            from .plotting import plot_histogram

            plot_histogram(path, run.dir / f"hist_t{t}.svg", f"L={spec.L}, t={t}")
            run.add_output(run.dir / f"hist_t{t}.svg")
    run.write_table("ks", ["t", "ks_analytic", "ks_porter_thomas"], ks_rows)
    print(f"wrote {run.finish()}")
    return EXIT_OK


def cmd_dual_verify(args) -> int:
    import time

    t0 = time.perf_counter()
    rows = experiments.dual_verify(args.L, args.t_max, parse_angle(args.g))
    elapsed = time.perf_counter() - t0
    ok = True
    for r in rows:
        good = r.max_modulus_dev < args.tol and r.unitarity_error < dual.UNITARY_TOL
        ok &= good
        print(f"L={r.L:2d} t={r.t}: max |amp| dev = {r.max_modulus_dev:.3e}, "
              f"complex dev = {r.max_complex_dev:.3e}, U(z) unitarity = {r.unitarity_error:.3e} "
              f"{'ok' if good else 'FAIL'}")
    print(f"runtime {elapsed:.2f} s; {'PASS' if ok else 'FAIL'}")
    if args.out or os.environ.get(ENV_ROOT):
        run = Run("dual-verify", {"L_max": args.L, "t_max": args.t_max, "g": args.g}, 0, args.out, args.format)
        run.write_table("dual_verify", ["L", "t", "max_modulus_dev", "max_complex_dev", "unitarity_error"],
                        [(r.L, r.t, r.max_modulus_dev, r.max_complex_dev, r.unitarity_error) for r in rows])
        run.finish({"passed": ok})
    return EXIT_OK if ok else EXIT_CHECK


def cmd_haar_check(args) -> int:
    ok = True
    rows = []
    for q in _int_list(args.q):
        est, exact, z, secs = experiments.haar_check(args.d, q, args.samples, args.seed)
        good = abs(z) < 3
        ok &= good
        rows.append((args.d, q, est.mean, est.std_error, exact, z))
        print(f"d={args.d} q={q}: MC {est.mean:.6g} ± {est.std_error:.2g}, closed form {exact:.6g}, "
              f"z = {z:+.2f} ({secs:.1f} s) {'ok' if good else 'FAIL'}")
    if args.out or os.environ.get(ENV_ROOT):
        run = Run("haar-check", {"d": args.d, "q": args.q, "samples": args.samples}, args.seed, args.out, args.format)
        run.write_table("haar_check", ["d", "q", "mc_mean", "std_error", "closed_form", "z_score"], rows)
        run.finish({"passed": ok})
    return EXIT_OK if ok else EXIT_CHECK


def cmd_compare(args) -> int:
    models = _str_list(args.models)
    for m in models:
        if m not in experiments.MODELS:
            raise ValidationError(f"unknown model {m!r}; choose from {experiments.MODELS}")
    Ls = _int_list(args.L)
    params = {"models": models, "L": Ls, "realizations": args.realizations, "t_max": args.t_max,
              "g": args.g, "threshold": args.threshold,
              "geometry": {"random": "even-bond then odd-bond Haar U(4) layers per period, open chain",
                           "mid1": "fixed Haar U(2) on site ceil(L/2) after each dual step",
                           "mid2": "Haar U(4) on bond (L/2, L/2+1), resampled each period"}}
    run = Run("compare", params, args.seed, args.out, args.format)
    results = experiments.compare(models, Ls, args.realizations, args.seed, args.t_max, args.threshold,
                                  args.threads, parse_angle(args.g))
    rows = [(r.model, r.L, t, float(r.mean[t]), float(r.sem[t]), r.realizations)
            for r in results for t in range(len(r.mean))]
    path = run.write_table("compare", ["model", "L", "t", "S_2", "S_2_sem", "realizations"], rows)
    run.write_table("t_star", ["model", "L", "t_star"],
                    [(r.model, r.L, -1 if r.t_star is None else r.t_star) for r in results])
    for r in results:
        print(f"{r.model:>6s} L={r.L:2d}: t* = {r.t_star}")
    if args.plot and args.format == "csv":
        from .plotting import plot_compare

        plot_compare(path, run.dir / "compare.svg")
        run.add_output(run.dir / "compare.svg")
    ok = True
    if args.check:
        checks = compare_checks(results)
        for name, passed in checks.items():
            print(f"{'PASS' if passed else 'FAIL'}: {name}")
        ok = all(checks.values())
    print(f"wrote {run.finish()}")
    return EXIT_OK if ok else EXIT_CHECK


def compare_checks(results) -> dict:
    ts = {(r.model, r.L): r.t_star for r in results}
    Ls = sorted({r.L for r in results})
    out = {}
    dual_t = [ts.get(("dual", L)) for L in Ls]
    if all(("dual", L) in ts for L in Ls):
        out["dual t* constant over L"] = None not in dual_t and len(set(dual_t)) == 1
    rnd = [ts.get(("random", L)) for L in Ls]
    if all(("random", L) in ts for L in Ls):
        out["random t* strictly increasing in L"] = None not in rnd and all(a < b for a, b in zip(rnd, rnd[1:]))
        for m in ("mid1", "mid2"):
            if all((m, L) in ts for L in Ls):
                out[f"{m} reaches ergodic value no later than random"] = all(
                    ts[(m, L)] is not None and ts[("random", L)] is not None and ts[(m, L)] <= ts[("random", L)]
                    for L in Ls)
    return out


# --- parser ------------------------------------------------------------------------------


def _common(p, seed=True):
    p.add_argument("--out", help=f"output root (default ${ENV_ROOT} or ./runs)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=1)
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _model_args(p):
    p.add_argument("--L", type=int, default=14)
    p.add_argument("--g", default="pi/3")
    p.add_argument("--variant", default="dual",
                   help="dual | boundary-kick | mid1 | mid2 | random")
    p.add_argument("--theta", default=None, help="boundary kick angle, e.g. pi/14")
    p.add_argument("--config", help="spec file (key=value or JSON); overrides model flags")
    p.add_argument("--plot", action="store_true", help="render SVGs from the CSVs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fockspread", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ipr", help="IPR and participation entropy dynamics")
    _model_args(p)
    _common(p)
    p.add_argument("--q", default="2,4,6,8")
    p.add_argument("--t-max", type=int, default=10)
    p.set_defaults(func=cmd_ipr)

    p = sub.add_parser("dist", help="overlap distributions and KS statistics")
    _model_args(p)
    _common(p)
    p.add_argument("--t", default="1,2,3,6")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--x-max", type=float, default=None, help="upper histogram edge in N p")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("dual-verify", help="dual factorization vs direct evolution")
    p.add_argument("--L", type=int, default=8, help="largest chain length")
    p.add_argument("--t-max", type=int, default=5)
    p.add_argument("--g", default="pi/3")
    p.add_argument("--tol", type=float, default=1e-10)
    _common(p, seed=False)
    p.set_defaults(func=cmd_dual_verify)

    p = sub.add_parser("haar-check", help="Monte-Carlo Haar moments vs closed form")
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--q", default="2,3")
    p.add_argument("--samples", type=int, default=100_000)
    _common(p)
    p.set_defaults(func=cmd_haar_check)

    p = sub.add_parser("compare", help="S_2(t) for dual, random and locally perturbed circuits")
    p.add_argument("--models", default=",".join(experiments.MODELS))
    p.add_argument("--L", default="10,12,14")
    p.add_argument("--realizations", type=int, default=50)
    p.add_argument("--t-max", type=int, default=20)
    p.add_argument("--g", default="pi/3")
    p.add_argument("--threshold", type=float, default=experiments.ERGODIC_THRESHOLD)
    p.add_argument("--check", action="store_true", help="exit 3 if the size-independence checks fail")
    p.add_argument("--plot", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
