"""Command-line front end.

Subcommands::

    gramcone check INSTANCE.json      evaluate the six conditions on one instance
    gramcone sweep --seeds 0..999     seeded random instances, aggregate verdicts
    gramcone examples --level 50      the three worked examples at truncation N
    gramcone identities --seeds 0..499  pseudoinverse identity residuals
    gramcone make KIND                write an instance document

Exit status: 0 on success, 1 on a verdict disagreement, identity failure or
example mismatch, 2 on bad usage, 3 on malformed input, 4 when the
hypothesis ``T+ T K ⊆ K`` fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import numlin
from .instances import InstanceSpec, Kind, make, random_matrix, sweep_spec
from .numlin import TolerancePolicy
from .operators import (
    Family,
    MatrixOperator,
    TruncationSpec,
    build_truncation,
    gram,
    spectral_pinv_apply,
    verify_identities,
)
from .serialize import InputError, dump_instance, dumps, load_instance
from .theorem import CONDITIONS, HypothesisError, equivalence_report

log = logging.getLogger("gramcone")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_HYPOTHESIS = 4


def _seed_range(text: str):
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    if hi < lo:
        raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
    return lo, hi


def _dims(text: str):
    try:
        parts = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MxN, got {text!r}") from None
    if len(parts) not in (2, 3) or min(parts) < 1:
        raise argparse.ArgumentTypeError(f"expected MxN, got {text!r}")
    return parts


def _policy(args) -> TolerancePolicy:
    kw = {}
    if getattr(args, "rank_tol", None) is not None:
        kw["rank_rel_tol"] = args.rank_tol
    if getattr(args, "membership_tol", None) is not None:
        kw["membership_tol"] = args.membership_tol
    return TolerancePolicy(**kw)


def _policy_override(args):
    if args.rank_tol is None and args.membership_tol is None:
        return None
    return _policy(args)


def _verdict_str(v) -> str:
    return "true" if v is True else "false" if v is False else str(v)


def _table(header, rows) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _render(payload, fmt, header, rows) -> str:
    if fmt == "json":
        return dumps(payload)
    if fmt == "csv":
        return _csv(header, rows)
    return _table(header, rows)


def _emit(text: str, output):
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------- check


def cmd_check(args) -> int:
    path = args.input or args.path
    if path is None:
        print("check: an instance file is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        inst = load_instance(path, _policy_override(args))
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        report = equivalence_report(inst, strict=args.strict_cond5)
    except HypothesisError as exc:
        print(f"hypothesis failure: {exc}; witness {exc.witness}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    payload = report.to_dict()
    rows = [[k, _verdict_str(report.results[k].verdict), report.results[k].slack] for k in CONDITIONS]
    _emit(_render(payload, args.format, ["condition", "verdict", "slack"], rows), args.output)
    return EXIT_OK if report.agree else EXIT_FAIL


# --------------------------------------------------------------------- sweep


def _sweep_one(job):
    seed, dims, policy, strict = job
    spec = sweep_spec(seed, dims)
    entry = {"seed": seed, "kind": spec.kind.value, "dims": list(spec.level_or_dims)}
    try:
        report = equivalence_report(make(spec, policy), strict=strict, seed=seed)
    except HypothesisError:
        entry.update({"verdicts": None, "outcome": "hypothesis_failure"})
        return entry
    entry["verdicts"] = report.verdicts
    entry["outcome"] = report.outcome
    if strict:
        entry["strict"] = {k: v.verdict for k, v in report.strict.items()}
    return entry


def run_sweep(seeds, dims, policy, workers=1, strict=False) -> dict:
    lo, hi = seeds
    jobs = [(s, tuple(dims[:2]), policy, strict) for s in range(lo, hi + 1)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            entries = list(ex.map(_sweep_one, jobs, chunksize=16))
    else:
        entries = [_sweep_one(j) for j in jobs]
    entries.sort(key=lambda e: e["seed"])
    counts = {k: 0 for k in ("all_true", "all_false", "marginal", "not_evaluated", "disagree", "hypothesis_failure")}
    for e in entries:
        counts[e["outcome"]] += 1
    return {
        "command": "sweep",
        "seeds": [lo, hi],
        "dims": list(dims[:2]),
        "policy": policy.to_dict(),
        "strict": strict,
        "counts": counts,
        "disagreements": [e["seed"] for e in entries if e["outcome"] == "disagree"],
        "instances": entries,
    }


def cmd_sweep(args) -> int:
    payload = run_sweep(args.seeds, args.dims, _policy(args), args.workers, args.strict_cond5)
    rows = [
        [e["seed"], e["kind"], "x".join(map(str, e["dims"]))]
        + [_verdict_str(e["verdicts"][k]) if e["verdicts"] else "-" for k in CONDITIONS]
        + [e["outcome"]]
        for e in payload["instances"]
    ]
    header = ["seed", "kind", "dims", *CONDITIONS, "outcome"]
    if args.format == "pretty":
        text = _table(["outcome", "count"], list(payload["counts"].items()))
        if payload["disagreements"]:
            text += f"disagreements at seeds {payload['disagreements']}\n"
        _emit(text, args.output)
    else:
        _emit(_render(payload, args.format, header, rows), args.output)
    c = payload["counts"]
    log.info("sweep counts %s", c)
    return EXIT_FAIL if c["disagree"] or c["hypothesis_failure"] else EXIT_OK


# ------------------------------------------------------------------ examples


def example_checks(level: int, policy: TolerancePolicy) -> list:
    """Reproduce the three worked examples; returns one entry per example."""
    out = []
    n = np.arange(1, level + 1, dtype=float)
    for kind, family in ((Kind.PAPER41, Family.EXAMPLE41), (Kind.PAPER42, Family.EXAMPLE42), (Kind.PAPER43, Family.EXAMPLE43)):
        inst = make(InstanceSpec(kind, 0, level), policy)
        report = equivalence_report(inst)
        entry = {"example": kind.value, "level": level, "verdicts": report.verdicts, "agree": report.agree}
        T = inst.operator
        if kind is Kind.PAPER41:
            Gp = numlin.pinv(gram(T).matrix, policy)
            entry["gram_pinv_error"] = float(np.max(np.abs(Gp - np.diag(1.0 / n**2))))
        elif kind is Kind.PAPER42:
            Tp = numlin.pinv(T.matrix, policy)
            expected = np.diag(np.r_[0.0, 1.0 / n[1:]])
            entry["pinv_error"] = float(np.max(np.abs(Tp - expected)))
        else:
            _, S = build_truncation(TruncationSpec(family, level), policy)
            Tp = numlin.pinv(S.assemble(), policy)
            Y = np.random.default_rng(level).standard_normal((S.shape[0], 100))
            diff = max(np.max(np.abs(spectral_pinv_apply(S, y) - Tp @ y)) for y in Y.T)
            entry["spectral_vs_matrix"] = float(diff)
        entry["expected"] = "all_true"
        entry["match"] = report.outcome == "all_true"
        out.append(entry)
    return out


def cmd_examples(args) -> int:
    entries = example_checks(args.level, _policy(args))
    payload = {"command": "examples", "level": args.level, "examples": entries}
    rows = [[e["example"], e["level"]] + [_verdict_str(e["verdicts"][k]) for k in CONDITIONS] + [e["expected"], e["match"]] for e in entries]
    _emit(_render(payload, args.format, ["example", "level", *CONDITIONS, "expected", "match"], rows), args.output)
    return EXIT_OK if all(e["match"] for e in entries) else EXIT_FAIL


# ---------------------------------------------------------------- identities


def run_identities(seeds, dims, policy, tol=1e-9) -> dict:
    lo, hi = seeds
    worst = {}
    failures = []
    rows = []
    for s in range(lo, hi + 1):
        A = random_matrix(s, tuple(dims[:2]))
        rep = verify_identities(MatrixOperator(A, policy), tol)
        scale = max(1.0, float(np.linalg.norm(A)))
        for k, v in rep.residuals.items():
            worst[k] = max(worst.get(k, 0.0), v / scale)
        if not rep.ok:
            failures.append(s)
        rows.append({"seed": s, "shape": list(A.shape), "worst": rep.worst, "bound": rep.bound, "ok": rep.ok})
    return {
        "command": "identities",
        "seeds": [lo, hi],
        "dims": list(dims[:2]),
        "tolerance": tol,
        "worst_relative_residual": worst,
        "failures": failures,
        "matrices": rows,
    }


def cmd_identities(args) -> int:
    payload = run_identities(args.seeds, args.dims, _policy(args))
    rows = [[k, v] for k, v in payload["worst_relative_residual"].items()]
    _emit(_render(payload, args.format, ["identity", "worst_relative_residual"], rows), args.output)
    return EXIT_FAIL if payload["failures"] else EXIT_OK


# ---------------------------------------------------------------------- make


def cmd_make(args) -> int:
    kind = Kind(args.kind)
    if kind in (Kind.PAPER41, Kind.PAPER42, Kind.PAPER43):
        lod = args.level
    elif kind is Kind.COUNTEREXAMPLE_2X2:
        lod = None
    else:
        if args.dims is None or len(args.dims) != 3:
            print("make: random kinds need --dims MxNxR", file=sys.stderr)
            return EXIT_USAGE
        lod = tuple(args.dims)
    try:
        inst = make(InstanceSpec(kind, args.seed, lod), _policy(args))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(dump_instance(inst), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "pretty"), default="json")
    common.add_argument("--rank-tol", type=float, help="relative singular-value cutoff")
    common.add_argument("--membership-tol", type=float, help="cone membership slack")
    common.add_argument("--strict-cond5", action="store_true", help="also report the unrestricted forms of c5 and c6")

    p = argparse.ArgumentParser(prog="gramcone", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="evaluate one instance file")
    c.add_argument("path", nargs="?")
    c.add_argument("--input")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("sweep", parents=[common], help="seeded random instances")
    s.add_argument("--seeds", type=_seed_range, default=(0, 999))
    s.add_argument("--dims", type=_dims, default=(6, 6))
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("examples", parents=[common], help="reproduce the worked examples")
    e.add_argument("--level", type=int, default=50)
    e.set_defaults(func=cmd_examples)

    i = sub.add_parser("identities", parents=[common], help="pseudoinverse identity residuals")
    i.add_argument("--seeds", type=_seed_range, default=(0, 499))
    i.add_argument("--dims", type=_dims, default=(12, 12))
    i.set_defaults(func=cmd_identities)

    m = sub.add_parser("make", parents=[common], help="write an instance document")
    m.add_argument("kind", choices=[k.value for k in Kind])
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--level", type=int, default=50)
    m.add_argument("--dims", type=_dims)
    m.set_defaults(func=cmd_make)
    return p


def main(argv=None) -> int:
    level = os.environ.get("GRAMCONE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "level", 2) < 2:
        print("--level must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    try:
        _policy(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
