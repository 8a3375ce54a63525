"""Command-line front end: build coefficient tables, run verification suites, emit scans.

    python -m halfsign build --weight 9 --order 10000
    python -m halfsign verify --suite funceq --weight 9 --order 10000
    python -m halfsign scan signs --t-max 1000

Exit codes: 0 success, 2 validation failure, 3 precision or truncation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import mpmath

from . import __version__
from .context import (
    ConvergenceError,
    DomainError,
    EvalContext,
    HalfsignError,
    NeedsMoreCoefficients,
    UnsupportedWeightError,
    ValidationError,
)

EXIT_OK, EXIT_VALIDATION, EXIT_PRECISION = 0, 2, 3
CACHE_ENV = "HALFSIGN_CACHE"
SUITES = ("multiplier", "funceq", "preb", "dr", "contour")
SCANS = ("signs", "smoothed", "mgrid")


@dataclass(frozen=True)
class JobConfig:
    weight: int = 9
    order: int = 10_000
    digits: int = 50
    suite: str = ""
    out: str = "out"
    cache: str = ""
    jobs: int = 1
    t_max: int = 1000
    x_grid: tuple = (100.0, 10**2.5, 1000.0, 10**3.5)

    def validate(self) -> None:
        if self.weight % 2 == 0 or self.weight < 5:
            raise DomainError(f"weight k must be odd and >= 5, got {self.weight}")
        if self.order < 100:
            raise DomainError(f"order N must be >= 100, got {self.order}")
        if self.digits < 30:
            raise DomainError(f"digits must be >= 30, got {self.digits}")
        if self.jobs < 1:
            raise DomainError("jobs must be positive")

    @property
    def cache_dir(self) -> Path:
        if self.cache:
            return Path(self.cache)
        return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "halfsign"))

    def hash(self) -> str:
        """Hash of the fields that determine results (not paths or parallelism)."""
        keep = {k: v for k, v in asdict(self).items() if k not in ("out", "cache", "jobs")}
        blob = json.dumps(keep, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def provenance(self, **extra) -> dict:
        return {"config_hash": self.hash(), "version": __version__, "weight": self.weight, "order": self.order, "digits": self.digits, **extra}


# ---------------------------------------------------------------------------
# build


def _table_paths(cfg: JobConfig, index: int) -> tuple[Path, Path]:
    base = cfg.cache_dir / f"k{cfg.weight}_N{cfg.order}"
    return base / f"form{index}.txt", base / f"lift{index}.txt"


def _lift_order(N: int) -> int:
    return max(2, math.isqrt(N))


def cmd_build(cfg: JobConfig, log=print) -> list[Path]:
    from .lift import extend_eigenvalues, lift_from_eigenvalues
    from .qspace import HalfIntegralForm, eigenbasis
    from .tables import load_form, save_form, save_lift

    base = cfg.cache_dir / f"k{cfg.weight}_N{cfg.order}"
    index_file = base / "index.json"
    if index_file.exists():
        meta = json.loads(index_file.read_text())
        for i in range(meta["count"]):
            form_path, lift_path = _table_paths(cfg, i)
            load_form(form_path)  # checksum
        log(f"cache hit: {base} ({meta['count']} eigenform(s))")
        return [_table_paths(cfg, i)[0] for i in range(meta["count"])]
    forms = eigenbasis(cfg.weight, cfg.order, (3, 5, 7, 11, 13))
    log(f"dim S_{cfg.weight}/2(Gamma_0(4)) = {len(forms)}")
    paths = []
    for i, form in enumerate(forms):
        M = _lift_order(cfg.order)
        eig = extend_eigenvalues(form, M)
        form = HalfIntegralForm(form.k, form.N, form.c, form.coords, eig, form.scale)
        lift = lift_from_eigenvalues(form, M)
        form_path, lift_path = _table_paths(cfg, i)
        save_form(form, form_path)
        save_lift(lift, lift_path)
        shown = ", ".join(f"{p}: {lam}" for p, lam in sorted(form.eigenvalues.items()) if p <= 13)
        log(f"eigenform {i}: first index {form.first_index}, eigenvalues {{{shown}}}")
        paths.append(form_path)
    index_file.write_text(json.dumps({"count": len(forms), "version": __version__}, sort_keys=True) + "\n")
    return paths


def _load(cfg: JobConfig, index: int = 0):
    from .tables import load_form, load_lift

    form_path, lift_path = _table_paths(cfg, index)
    if not form_path.exists():
        cmd_build(cfg, log=lambda *_: None)
    return load_form(form_path), load_lift(lift_path)


# ---------------------------------------------------------------------------
# verify


def suite_multiplier(cfg: JobConfig, count: int = 200) -> dict:
    from .arith import gamma0_4_sample, multiplier_residual

    ctx = EvalContext(digits=cfg.digits)
    pts = [mpmath.mpc(x, y) for x, y in ((0.1, 0.8), (-0.3, 1.1), (0.45, 0.6), (0.0, 1.5), (-0.2, 0.9))]
    cases = []
    for g in gamma0_4_sample(count):
        worst = max(multiplier_residual(g, z, ctx) for z in pts)
        cases.append({"gamma": g, "max_relative_error": worst})
    budget = 1e-30
    return {"budget": budget, "passed": all(c["max_relative_error"] < budget for c in cases), "cases": cases}


def _funceq_chunk(args) -> list:
    from .mellin import MellinEvaluator, functional_equation_residual
    from .tables import load_form

    form_path, digits, pairs, s_grid = args
    form = load_form(form_path)
    ctx = EvalContext(digits=digits)
    ev = MellinEvaluator(form, ctx)
    out = []
    for u, d in pairs:
        for s in s_grid:
            r = functional_equation_residual(form, u, d, mpmath.mpc(*s), ctx, ev)
            out.append({"u": u, "d": d, "case": r.case, "s": list(s), "residual": r.residual, "certified_error": r.certified_error})
    return out


def suite_funceq(cfg: JobConfig, dmax: int = 30) -> dict:
    from .mellin import reduced_fractions

    _load(cfg)
    form_path, _ = _table_paths(cfg, 0)
    s_grid = [(x, y) for x in (0.3, 0.5, 2.0) for y in (0.0, 4.0, 20.0)]
    by_d: dict[int, list] = {}
    for u, d in reduced_fractions(dmax):
        by_d.setdefault(d, []).append((u, d))
    chunks = [(str(form_path), cfg.digits, pairs, s_grid) for _, pairs in sorted(by_d.items())]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            parts = list(pool.map(_funceq_chunk, chunks))
    else:
        parts = [_funceq_chunk(c) for c in chunks]
    cases = [c for part in parts for c in part]
    budget = 1e-35
    return {"budget": budget, "passed": all(c["residual"] < budget for c in cases), "cases": cases}


def suite_preb(cfg: JobConfig, limit: int = 10_000) -> dict:
    from .lift import preb_grid

    form, lift = _load(cfg)
    limit = min(limit, form.N)
    results = preb_grid(form, lift, limit)
    bad = [(r.t, r.n) for r in results if not r.ok]
    return {"limit": limit, "grid_size": len(results), "exact_equalities": len(results) - len(bad), "failures": bad[:50], "passed": not bad}


def suite_dr(cfg: JobConfig, r_max: int = 10) -> dict:
    from .arith import is_squarefree
    from .dirichlet import d_r_direct, d_r_eval
    from .mellin import MellinEvaluator

    form, _ = _load(cfg)
    ctx = EvalContext(digits=cfg.digits)
    ev = MellinEvaluator(form, ctx)
    cases = []
    for r in range(1, r_max + 1):
        if not is_squarefree(r):
            continue
        a = d_r_eval(form, r, 2, ctx, ev)
        b = d_r_direct(form, r, 2, ctx=ctx)
        gap = float(abs(a.value - b.value) / abs(a.value))
        combined = (a.certified_error + b.certified_error) / float(abs(a.value))
        cases.append({"r": r, "entire": a.value, "direct": b.value, "relative_gap": gap, "combined_relative_error": combined, "consistent": gap <= combined})
    budget = 1e-12
    return {"budget": budget, "passed": all(c["relative_gap"] < budget for c in cases), "cases": cases}


def suite_contour(cfg: JobConfig, xs=(10.0, 100.0), r_max: int = 40) -> dict:
    from .dirichlet import HorocycleSeries, contour_check

    form, _ = _load(cfg)
    ev = HorocycleSeries(form, r_max, digits=25)
    cases = [contour_check(form, x, evaluator=ev) for x in xs]
    budget = 1e-6
    return {"budget": budget, "passed": all(c.gap < budget for c in cases), "cases": cases}


def cmd_verify(cfg: JobConfig) -> tuple[int, dict]:
    runners = {"multiplier": suite_multiplier, "funceq": suite_funceq, "preb": suite_preb, "dr": suite_dr, "contour": suite_contour}
    if cfg.suite not in runners:
        raise DomainError(f"unknown suite {cfg.suite!r}; choose from {', '.join(SUITES)}")
    report = runners[cfg.suite](cfg)
    return (EXIT_OK if report["passed"] else EXIT_VALIDATION), report


# ---------------------------------------------------------------------------
# scan


def cmd_scan(cfg: JobConfig, what: str) -> dict[str, str]:
    """Returns {file name: contents}; the caller writes them under --out."""
    from . import dirichlet as dr

    form, _ = _load(cfg)
    prov = cfg.provenance(scan=what)
    if what == "signs":
        rep = dr.sign_changes(form, min(cfg.t_max, form.N))
        if not dr.verify_pairs(form, rep):
            raise ValidationError("sign-change pairs failed re-verification")
        return {"signs.json": dr.to_json(rep, prov)}
    if what == "smoothed":
        rows, first, second = [], [], []
        for x in cfg.x_grid:
            t_max = form.N
            if t_max < 20 * x:
                raise NeedsMoreCoefficients(int(20 * x), form.N, f"table for the smoothed sum at x = {x:g}")
            s1, tail = dr.smoothed_sum_sqfree(form, x, t_max, with_tail=True)
            s2 = dr.smoothed_sum_second_moment(form, x, t_max)
            rows.append((x, s1, tail, s2, s2 / x))
            first.append((x, s1))
            second.append((x, s2 / x))
        fit = dr.growth_exponent_fit(first, min_points=min(4, len(first)))
        prov = {**prov, "t_max": form.N, "first_moment_exponent": fit.exponent, "exponent_stderr": fit.stderr}
        csv_text = dr.to_csv(rows, ("x", "first_moment", "tail_bound", "second_moment", "second_moment_over_x"), prov)
        return {"smoothed.csv": csv_text, "smoothed.json": dr.to_json({"fit": fit, "second_over_x": second}, prov)}
    if what == "mgrid":
        sigma, tau_max, step, r_max = 0.8, 50.0, 2.5, 20
        ev = dr.HorocycleSeries(form, r_max, digits=max(40, cfg.digits - 10), panel=0.1, nodes=32)
        ctx = EvalContext(digits=cfg.digits)
        rows = []
        n = int(round(tau_max / step))
        for i in range(n + 1):
            tau = i * step
            m = dr.m_eval(form, mpmath.mpc(sigma, tau), ctx, r_max, "horocycle", ev)
            rows.append((sigma, tau, abs(complex(m.value)), m.certified_error))
        fit = polynomial_envelope([(t, a) for _, t, a, _ in rows])
        prov = {**prov, "sigma": sigma, "r_max": r_max, "envelope_slope": fit["slope"], "exponential_rate": fit["linear_rate"]}
        return {"mgrid.csv": dr.to_csv(rows, ("sigma", "tau", "abs_M", "error_estimate"), prov), "mgrid.json": dr.to_json(fit, prov)}
    raise DomainError(f"unknown scan {what!r}; choose from {', '.join(SCANS)}")


def polynomial_envelope(points) -> dict:
    """Upper log-log envelope slope of |M| against 1 + tau, and the slope of log |M| against tau."""
    import numpy as np

    t = np.array([p[0] for p in points], dtype=float)
    a = np.array([p[1] for p in points], dtype=float)
    x = np.log1p(t)
    y = np.log(a)
    slope, icpt = np.polyfit(x, y, 1)
    lift = float(np.max(y - (slope * x + icpt)))
    rate = float(np.polyfit(t, y, 1)[0])
    return {"slope": float(slope), "constant": float(math.exp(icpt + lift)), "linear_rate": rate, "points": len(points)}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--weight", type=int, default=9, help="odd k; the forms have weight k/2")
    common.add_argument("--order", type=int, default=10_000, help="coefficient order N")
    common.add_argument("--digits", type=int, default=50)
    common.add_argument("--out", default="out")
    common.add_argument("--cache", default="", help=f"table cache (default ${CACHE_ENV} or ~/.cache/halfsign)")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--t-max", type=int, default=1000)
    common.add_argument("--x-grid", default="100,316.22776601683796,1000,3162.2776601683795", help="comma-separated x values")

    p = argparse.ArgumentParser(prog="halfsign", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="compute and cache eigenform and lift tables")
    v = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    v.add_argument("--suite", required=True, choices=SUITES)
    s = sub.add_parser("scan", parents=[common], help="emit CSV/JSON scans")
    s.add_argument("what", choices=SCANS)
    return p


def config_from_args(args) -> JobConfig:
    xs = tuple(float(x) for x in args.x_grid.split(",") if x.strip())
    cfg = JobConfig(
        weight=args.weight,
        order=args.order,
        digits=args.digits,
        suite=getattr(args, "suite", "") or getattr(args, "what", ""),
        out=args.out,
        cache=args.cache,
        jobs=args.jobs,
        t_max=args.t_max,
        x_grid=xs,
    )
    cfg.validate()
    return cfg


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        t0 = time.perf_counter()
        if args.command == "build":
            cmd_build(cfg)
            return EXIT_OK
        if args.command == "verify":
            from .dirichlet import to_json

            code, report = cmd_verify(cfg)
            path = _write(Path(cfg.out), f"verify_{cfg.suite}.json", to_json(report, cfg.provenance(suite=cfg.suite)))
            print(f"{cfg.suite}: {'PASS' if code == EXIT_OK else 'FAIL'} ({time.perf_counter() - t0:.1f} s) -> {path}")
            return code
        files = cmd_scan(cfg, args.what)
        for name, text in sorted(files.items()):
            print(_write(Path(cfg.out), name, text))
        return EXIT_OK
    except (NeedsMoreCoefficients, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (ValidationError, DomainError, UnsupportedWeightError, HalfsignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
