"""Command-line front end.

Exit status: 0 when every verdict is the one asked for, 1 when a mathematical
verdict came out negative, 2 on usage, input or parse errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from . import harness
from .dsl import Instance, build_instance, load
from .errors import (
    CRTError,
    ManifestError,
    NormalizationFailure,
    NotASelfMap,
    ValidationFailure,
)
from .jets import DEFAULT_ORDER
from .manifold import finite_type, holo_nondeg, incidence_check, segre, validate
from .mapping import (
    check_sends,
    cr_transversal,
    kernel_report,
    propagation_diagnostic,
    verify_lemma31,
)
from .report import Report

MANIFEST_COMMANDS = (
    "validate", "finite-type", "nondeg", "segre", "check-map", "transversal",
    "lemma31", "propagate", "kernel", "report",
)
SUITE_TRIALS = {
    "theorem-positive": 100,
    "example-negative": 50,
    "lemma31": 100,
    "proposition37": 20,
    "rank-oracle": 50,
}
ORDER_ENV = "CRT_DEFAULT_ORDER"


class UsageError(Exception):
    pass


def default_order() -> int:
    raw = os.environ.get(ORDER_ENV)
    if raw is None or raw == "":
        return DEFAULT_ORDER
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{ORDER_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"{ORDER_ENV} must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="crt",
        description="Formal power series checks for generic submanifolds and CR transversality.",
    )
    p.add_argument("command", choices=MANIFEST_COMMANDS + ("suite",), help="operation to run")
    p.add_argument("input", help="manifest file (.crm), or a family name for 'suite'")
    p.add_argument("--order", type=int, help=f"truncation order D (default: manifest, ${ORDER_ENV}, or {DEFAULT_ORDER})")
    p.add_argument("--max-k", type=int, dest="max_k", help="largest Segre level (default d+1)")
    p.add_argument("--vf-degree", type=int, dest="vf_degree", default=4, help="vector field degree for nondeg (default 4)")
    p.add_argument("--seed", type=int, default=0, help="seed for suites and randomized ranks (default 0)")
    p.add_argument("--trials", type=int, help="number of suite trials (default depends on family)")
    p.add_argument("--json", action="store_true", help="emit one JSON document instead of text")
    p.add_argument("--quiet", action="store_true", help="suppress timing lines")
    return p


def _check_options(args):
    if args.order is not None and args.order < 1:
        raise UsageError("--order must be at least 1")
    if args.max_k is not None and args.max_k < 1:
        raise UsageError("--max-k must be at least 1")
    if args.vf_degree < 0:
        raise UsageError("--vf-degree must be non-negative")
    if args.trials is not None and args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.command == "suite" and args.input not in harness.FAMILIES:
        raise UsageError(f"unknown suite family {args.input!r}; choose from {', '.join(harness.FAMILIES)}")


# ---------------------------------------------------------------------------
# operations


def _need_map(inst: Instance, what: str):
    if inst.map is None:
        raise UsageError(f"'{what}' needs a map statement in the manifest")
    return inst.source, inst.target or inst.source, inst.map


def _segre_report(inst: Instance, max_k: int) -> Report:
    M = inst.source
    levels = []
    ok = True
    for k in range(1, max_k + 1):
        v = segre(M, k)
        entry = {"k": k, "u": [str(u) for u in v.u]}
        if k >= 2:
            inc = incidence_check(M, k)
            entry["incidence"] = inc.verdict
            ok = ok and inc.verdict
        levels.append(entry)
    lines = [f"v^{e['k']}: u = ({', '.join(e['u'])})" for e in levels]
    msg = f"Segre maps of {M.name} for k = 1..{max_k} (D={M.order}); incidence relations " + (
        "hold" if ok else "FAIL") + "\n" + "\n".join(lines)
    return Report("segre", ok, M.order, M.order, msg, {"manifold": M.name, "levels": levels})


def run_task(op: str, inst: Instance, params: dict) -> Report:
    M = inst.source
    max_k = params.get("max_k")
    if op == "validate":
        reps = [validate(M)] + ([validate(inst.target)] if inst.target is not None else [])
        if len(reps) == 1:
            return reps[0]
        ok = all(r.verdict for r in reps)
        return Report("validate", ok, M.order, M.order, "\n".join(r.message for r in reps),
                      {"manifolds": [r.to_dict() for r in reps]})
    if op == "finite-type":
        return finite_type(M, max_k)
    if op == "nondeg":
        vf = params.get("vf_degree", 4)
        if vf > M.order:
            raise UsageError(f"--vf-degree {vf} exceeds the truncation order {M.order}")
        return holo_nondeg(M, vf)
    if op == "segre":
        return _segre_report(inst, max_k or M.d + 1)
    if op == "check-map":
        return check_sends(*_need_map(inst, op))
    if op == "transversal":
        return cr_transversal(*_need_map(inst, op))
    if op == "lemma31":
        return verify_lemma31(*_need_map(inst, op))
    if op == "propagate":
        M, _, H = _need_map(inst, op)
        return propagation_diagnostic(M, H, params.get("j_max", 2))
    if op == "kernel":
        return kernel_report(_need_map(inst, op)[2])
    raise UsageError(f"unknown task {op!r}")


def _refused(op: str, exc: CRTError, order: int) -> Report:
    report = getattr(exc, "report", None)
    details = {"error": type(exc).__name__}
    if report is not None:
        details["cause"] = report.to_dict()
    return Report(op, False, order, report.verified_order if report else 0, str(exc), details)


def run_report(inst: Instance, manifest, args) -> Report:
    tasks = list(manifest.tasks) or []
    if not tasks:
        from .dsl import Task
        names = ["validate", "finite-type", "nondeg"]
        if inst.map is not None:
            names += ["check-map", "transversal", "lemma31", "propagate"]
        tasks = [Task(n) for n in names]
    results = []
    ok = True
    for t in tasks:
        params = dict(t.params)
        expect = params.pop("expect", "true")
        if expect not in ("true", "false"):
            raise UsageError(f"task {t.op}: expect must be true or false")
        if args.max_k is not None:
            params.setdefault("max_k", args.max_k)
        params.setdefault("vf_degree", args.vf_degree)
        try:
            rep = run_task(t.op, inst, params)
        except (NotASelfMap, ValidationFailure) as exc:
            rep = _refused(t.op, exc, inst.order)
        passed = rep.verdict == (expect == "true")
        ok = ok and passed
        results.append({"task": t.op, "expect": expect == "true", "passed": passed, "report": rep.to_dict()})
    lines = [f"[{'pass' if r['passed'] else 'FAIL'}] {r['task']}: {r['report']['message']}" for r in results]
    npass = sum(r["passed"] for r in results)
    msg = "\n".join(lines) + f"\n{npass}/{len(results)} tasks passed"
    return Report("report", ok, inst.order, min(r["report"]["verified_order"] for r in results), msg,
                  {"tasks": results})


# ---------------------------------------------------------------------------
# entry point


def _emit(report: Report, args, elapsed: float, out):
    if args.json:
        out.write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        return
    out.write(report.message + "\n")
    if not args.quiet:
        out.write(f"elapsed: {elapsed:.2f}s\n")


def _diagnostic(path: str, exc: Exception) -> str:
    if isinstance(exc, ManifestError) and exc.line is not None:
        return f"{path}:{exc.line}:{exc.column}: error: {exc.message}"
    if isinstance(exc, UsageError):
        return f"crt: error: {exc}"
    return f"{path}: error: {type(exc).__name__}: {exc}"


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s", stream=err)
    start = time.perf_counter()
    try:
        _check_options(args)
        if args.command == "suite":
            family = args.input
            trials = args.trials or SUITE_TRIALS[family]
            D = args.order if args.order is not None else harness.SUITE_ORDER
            report = harness.run_suite(family, trials, args.seed, D)
        else:
            manifest = load(args.input)
            D = args.order
            if D is None and manifest.order is None:
                D = default_order()
            inst = build_instance(manifest, D, check=args.command != "validate")
            if args.command == "report":
                report = run_report(inst, manifest, args)
            else:
                params = {"vf_degree": args.vf_degree}
                if args.max_k is not None:
                    params["max_k"] = args.max_k
                report = run_task(args.command, inst, params)
    except (UsageError, ManifestError) as exc:
        err.write(_diagnostic(args.input, exc) + "\n")
        return 2
    except OSError as exc:
        err.write(f"{args.input}: cannot read input: {exc.strerror or exc}\n")
        return 2
    except (NotASelfMap, ValidationFailure, NormalizationFailure) as exc:
        report = _refused(args.command, exc, args.order or DEFAULT_ORDER)
        _emit(report, args, time.perf_counter() - start, out)
        return 1
    except CRTError as exc:
        err.write(_diagnostic(args.input, exc) + "\n")
        return 2
    except Exception as exc:  # never show a bare traceback
        err.write(f"{args.input}: internal error: {type(exc).__name__}: {exc}\n")
        return 2
    _emit(report, args, time.perf_counter() - start, out)
    return 0 if report.verdict else 1


if __name__ == "__main__":
    sys.exit(main())
