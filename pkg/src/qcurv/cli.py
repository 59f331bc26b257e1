"""Command line entry point: run verification suites and write reports.

Subcommands: verify-examples, verify-green, neck-scaling, solve, all.
Exit status is 0 when every check passes, 1 when any check fails and 2
for usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from . import conformal_core as cc
from . import exact_models as em
from . import green_paneitz as gp
from . import neck_gluing as ng
from . import solver as sv
from .exceptions import QcurvError

log = logging.getLogger("qcurv")

SCHEMA_VERSION = 1
SUITES = ("verify-examples", "verify-green", "neck-scaling", "solve")


@dataclass
class Check:
    id: str
    description: str
    expected: object
    measured: object
    tolerance: object
    passed: bool
    anchor: str = ""


@dataclass
class RunReport:
    suite: str
    checks: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, *args, **kw):
        self.checks.append(Check(*args, **kw))


def _plain(v):
    """JSON/CSV friendly value: rationals as 'p/q', numpy scalars unwrapped."""
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    return str(v)


# --------------------------------------------------------------------------
# suites


def suite_examples(n: int = 6, seed: int = 0) -> RunReport:
    rep = RunReport("verify-examples", config={"n": n, "seed": seed})
    eps = Fraction(1, 10)
    spec = em.split_model_spectrum(1, 6, eps)
    cs = em.curvature_scalars(spec)
    R_cf, Q_cf = em.split_model_closed_form(1, 6, eps)
    rep.add("split_model.R", "scalar curvature of the k=1, n=6, eps=1/10 model", Fraction(1), cs.R, 0,
            cs.R == 1 and R_cf == 1, "split model closed form")
    rep.add("split_model.Q", "Q-curvature of the same model", Fraction(-79, 100), cs.Q, 0,
            cs.Q == Fraction(-79, 100) and Q_cf == cs.Q, "split model closed form")
    total = ok = 0
    for k in range(1, 6):
        for m in range(2 * k + 1, 13):
            total += 1
            R_end, Q_end = em.split_model_closed_form(k, m, em.split_model_window(k, m))
            ok += int(R_end > 0 and Q_end < 0)
    rep.add("split_model.windows", "rational eps windows with R > 0 and Q < 0", total, ok, 0, ok == total,
            "split model sign window")
    co = cc.einstein_paneitz_coeffs(n)
    q_round = em.q_from_schouten(em.SchoutenSpectrum([(Fraction(1, 2), n)]))
    expected_q = Fraction(n * (n * n - 4), 8)
    rep.add("einstein.Q", f"Q of the round S^{n}", expected_q, co.q_value, 0,
            co.q_value == expected_q == q_round, "Einstein Paneitz factorization")
    prod = Fraction(n * (n - 4) * (n * n - 4), 16)
    rep.add("einstein.c1c2", "product of the Helmholtz constants", prod, co.c1 * co.c2, 0,
            co.c1 * co.c2 == prod, "Einstein Paneitz factorization")
    if n >= 6:
        l0, l1 = cc.linearized_eigenvalue(0, n), cc.linearized_eigenvalue(1, n)
        rep.add("linearized.l0", "L on constants", -4 * co.q_value, l0, 0, l0 == -4 * co.q_value,
                "linearized operator")
        rep.add("linearized.l1", "L on first harmonics", Fraction(0), l1, 0, l1 == 0,
                "linearized operator")
    rng = random.Random(seed)
    agree = 0
    for _ in range(200):
        m = rng.randint(6, 10)
        ric = [Fraction(rng.randint(-50, 50), rng.randint(1, 12)) for _ in range(m)]
        lap = Fraction(rng.randint(-20, 20), rng.randint(1, 7))
        qa, qb = em.q_two_forms(ric, lap, m)
        agree += int(qa == qb)
    rep.add("q.two_forms", "Schouten route equals the R/Ric route on random spectra", 200, agree, 0,
            agree == 200, "two forms of Q")
    cert = em.bochner_certificate(6, Q_cf, 1)
    rep.add("bochner.split_model", "positivity certificate for the split model", True, cert.verdict,
            None, cert.verdict, "Bochner lower bound")
    empty = all(cc.bilaplacian_indicial_roots(m, 8).gap_is_empty for m in range(6, 13))
    rep.add("indicial.gap", "no indicial root in (4-n, 0) for n = 6..12", True, empty, None, empty,
            "indicial roots")
    return rep


def suite_green(n: int = 6) -> RunReport:
    rep = RunReport("verify-green", config={"n": n})
    prof = gp.paneitz_radial_green(n)
    G, F, r = prof.values, prof.companion, prof.r_samples
    rep.add("green.positive", "G > 0 on (0, pi]", True, bool(G.min() > 0), None, bool(G.min() > 0),
            "positive Green's function")
    fit = gp.fit_leading_exponent(prof, (1e-3, 1e-2))
    rep.add("green.slope", "log-log slope of G on [1e-3, 1e-2]", 4 - n, fit.slope, 0.05,
            abs(fit.slope - (4 - n)) <= 0.05 and fit.meaningful, "leading exponent")
    mask = prof.window(1e-3, 1e-2)
    norm = F[mask] * r[mask] ** (n - 2) / (2 * (n - 4))
    dev = float(np.max(np.abs(norm - 1)))
    rep.add("green.F_constant", "F r^{n-2} / (2(n-4)) on [1e-3, 1e-2]", 1.0, 1.0 + dev, 0.01, dev < 0.01,
            "intermediate function constant")
    sub = gp.fit_leading_exponent(gp.subleading_profile(prof), (1e-3, 1e-2))
    if n >= 7:
        rep.add("green.subleading", "slope of G - r^{4-n}", 6 - n, sub.slope, 0.3,
                abs(sub.slope - (6 - n)) <= 0.3, "subleading exponent")
    else:
        bound = 4 - n + 1.3
        rep.add("green.subleading", "slope of G - r^{4-n} beats the leading one by 1.3", f">= {bound}",
                sub.slope, None, sub.slope >= bound, "subleading exponent")
    ops = gp.operator_residuals(prof)
    rep.add("green.operator", "FD composition residual / max|G| on [0.1, pi-0.1]", 0.0,
            ops["composed_over_max_G"], 1e-6, ops["composed_over_max_G"] <= 1e-6, "P G = 0 off the pole")
    interior = int(np.argmin(G))
    rep.add("green.minimum", "min of G attained away from the pole and positive", True,
            bool(r[interior] > 1.0 and G[interior] > 0), None, bool(r[interior] > 1.0 and G[interior] > 0),
            "minimum principle")
    c1 = gp.measure_c1(n)["C1"]
    c1_ref = gp.c1_closed_form(n)
    rep.add("green.C1", "coefficient of r^{2-n} in P(r^{4-n})", c1_ref, c1, 1e-6,
            abs(c1 - float(c1_ref)) <= 1e-6 * max(1.0, abs(float(c1_ref))), "expansion constant")
    return rep


def suite_neck(n: int = 6, b_list=None, delta: float = -0.5) -> RunReport:
    b_list = b_list or [2.0**-k for k in range(5, 10)]
    rep = RunReport("neck-scaling", config={"n": n, "b_list": list(b_list), "delta": delta})
    res = ng.scaling_sweep(ng.NeckMetric.default(n=n), b_list, delta)
    labels = {"dphi": "sup |d phi| on the annulus", "sup_Q_annulus": "sup |Q| on the annulus",
              "weighted_Q_minus_nu": "weighted norm of Q - nu"}
    for k, exp in res.expected.items():
        rep.add(f"neck.{k}", f"log-log slope of {labels[k]} in b", exp, res.slopes[k], res.tolerance,
                res.passed[k], "gluing estimates")
    rep.config["rows"] = res.csv_rows()
    return rep


def suite_solve(n: int = 6, lmax: int = 64, tol: float = 1e-9, amplitude: float = 0.0) -> RunReport:
    rep = RunReport("solve", config={"n": n, "lmax": lmax, "tol": tol, "amplitude": amplitude})
    cfg = sv.SolverConfig(n=n, L_max=lmax, residual_tol=tol)
    f = sv.degree_two_background(amplitude, n, lmax) if amplitude else None
    sol, trace = sv.iterate(cfg, f)
    ver = sv.verify_solution(sol, cfg)
    rep.add("solve.converged", "iteration converged", True, sol.converged, None, sol.converged,
            "contraction map")
    rep.add("solve.residual", "final residual", 0.0, sol.residual, tol, sol.residual < tol, "contraction map")
    rep.add("solve.verify", "recomputed Q deviation", 0.0, ver.sup_q_deviation, 10 * tol, ver.passed,
            "constant Q equation")
    rep.add("solve.ratio", "largest update ratio", "< 1/2", trace.max_ratio(), None,
            trace.max_ratio() < 0.5, "contraction constant")
    rep.add("solve.positive", "min(1 + phi) over all iterations", "> 0", min(trace.min_one_plus_phi), None,
            min(trace.min_one_plus_phi) > 0, "positivity of the factor")
    rep.config["trace"] = trace.rows()
    return rep


# --------------------------------------------------------------------------
# output


def _report_dict(reports) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "passed": all(r.passed for r in reports),
        "suites": [
            {
                "suite": r.suite,
                "passed": r.passed,
                "config": _plain(r.config),
                "checks": [
                    {
                        "id": c.id,
                        "description": c.description,
                        "expected": _plain(c.expected),
                        "measured": _plain(c.measured),
                        "tolerance": _plain(c.tolerance),
                        "passed": bool(c.passed),
                        "anchor": c.anchor,
                    }
                    for c in r.checks
                ],
            }
            for r in reports
        ],
    }


def render_json(reports) -> str:
    return json.dumps(_report_dict(reports), indent=2, sort_keys=False) + "\n"


def render_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "id", "description", "expected", "measured", "tolerance", "passed", "anchor"])
    for r in reports:
        for c in r.checks:
            w.writerow([r.suite, c.id, c.description, _plain(c.expected), _plain(c.measured),
                        _plain(c.tolerance), "true" if c.passed else "false", c.anchor])
    return buf.getvalue()


def write_report(reports, path) -> None:
    text = render_csv(reports) if str(path).lower().endswith(".csv") else render_json(reports)
    with open(path, "w", newline="") as fh:
        fh.write(text)


# --------------------------------------------------------------------------
# argument parsing


def _parse_b_list(text: str):
    try:
        vals = [float(Fraction(t.strip())) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad --b-list {text!r}") from exc
    if len(vals) < 2 or any(not 0 < v < 0.25 for v in vals):
        raise argparse.ArgumentTypeError("--b-list needs two or more values in (0, 1/4)")
    return vals


def _int_at_least(lo):
    def conv(text):
        try:
            v = int(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be at least {lo}")
        return v

    return conv


def _positive_float(text):
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from exc
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcurv", description="Q-curvature gluing verification suites.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n_min=6):
        sp.add_argument("--n", type=_int_at_least(n_min), default=6, help="dimension")
        sp.add_argument("--out", help="report path; .csv for CSV, anything else for JSON")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("verify-examples", help="exact algebra checks"), n_min=5)
    common(sub.add_parser("verify-green", help="Green's function of the Paneitz operator"))
    sp = sub.add_parser("neck-scaling", help="b-sweep of the approximate metric")
    common(sp)
    sp.add_argument("--b-list", type=_parse_b_list, default=None)
    sp.add_argument("--delta", type=float, default=-0.5)
    sp = sub.add_parser("solve", help="fixed-point solver on the sphere")
    common(sp)
    sp.add_argument("--lmax", type=_int_at_least(2), default=64)
    sp.add_argument("--tol", type=_positive_float, default=1e-9)
    sp.add_argument("--amplitude", type=float, default=0.0, help="size of the degree-2 background")
    sp = sub.add_parser("all", help="every suite")
    common(sp)
    sp.add_argument("--b-list", type=_parse_b_list, default=None)
    sp.add_argument("--delta", type=float, default=-0.5)
    sp.add_argument("--lmax", type=_int_at_least(2), default=64)
    sp.add_argument("--tol", type=_positive_float, default=1e-9)
    sp.add_argument("--amplitude", type=float, default=0.0)
    return p


def _jobs(args):
    cmd = args.command
    jobs = []
    if cmd in ("verify-examples", "all"):
        jobs.append(lambda: suite_examples(args.n, args.seed))
    if cmd in ("verify-green", "all"):
        jobs.append(lambda: suite_green(args.n))
    if cmd in ("neck-scaling", "all"):
        jobs.append(lambda: suite_neck(args.n, args.b_list, args.delta))
    if cmd in ("solve", "all"):
        jobs.append(lambda: suite_solve(args.n, args.lmax, args.tol, args.amplitude))
    return jobs


def run(argv=None) -> tuple[list, int]:
    """Parse ``argv``, run the suites and return (reports, exit code)."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.random.seed(args.seed)
    jobs = _jobs(args)
    threads = max(1, int(os.environ.get("QCURV_THREADS", "1") or 1))
    t0 = time.perf_counter()
    try:
        if threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                reports = list(ex.map(lambda j: j(), jobs))
        else:
            reports = [j() for j in jobs]
    except QcurvError as exc:
        print(f"qcurv: error: {exc}", file=sys.stderr)
        return [], 1
    elapsed = time.perf_counter() - t0
    for r in reports:
        r.wall_time = elapsed
        for c in r.checks:
            print(f"[{'PASS' if c.passed else 'FAIL'}] {r.suite}:{c.id} measured={_plain(c.measured)}")
    if args.out:
        write_report(reports, args.out)
    ok = all(r.passed for r in reports)
    print(f"{'PASS' if ok else 'FAIL'} ({elapsed:.2f} s)", file=sys.stderr)
    return reports, 0 if ok else 1


def main(argv=None) -> int:
    try:
        _, code = run(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else 2
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
