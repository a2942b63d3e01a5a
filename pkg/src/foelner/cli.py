"""Command-line entry point: deterministic runs, JSON/CSV reports.

Every stochastic command requires an explicit --seed; identical flags always
produce byte-identical payloads (wall time goes to stderr, never into the
report).  Exit codes: 0 success, 2 precondition violation, 3 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from . import __version__
from .boundary import (
    ElementSet,
    GeneratingSet,
    GroupSearchConfig,
    ball_family_ratios,
    exhaustive_min_ratio,
    local_search_min_ratio,
)
from .connes import (
    ProjectionSearchConfig,
    anneal_projection,
    certificate_formula,
    foelner_upper_estimate,
    frame_fingerprint,
    limit_formula,
    random_frame,
    standard_unitaries,
    witness_certificate,
)
from .errors import ConvergenceError, PreconditionError, SeedRequired
from .l2ops import GroupAlgebraElement, commutator_ratio, trace_defect, vec_to_json
from .paradox import chain_audit, contradiction_threshold, make_paper_trace, verify_set_identities
from .words import GroupDescriptor, Word, format_word, free_group, parse_generators

STOCHASTIC_COMMANDS = {"scan", "audit", "identity-check"}


@dataclass
class RunConfig:
    command: str
    params: dict
    seed: int | None
    out: str | None
    fmt: str  # json | csv


@dataclass
class RunReport:
    config: dict
    version: str
    results: Any
    warnings: list
    wall_ms: float

    def payload(self) -> dict:
        # wall time deliberately excluded: identical configs must produce
        # byte-identical payloads
        return {
            "config": self.config,
            "version": self.version,
            "results": self.results,
            "warnings": self.warnings,
        }


def _worker_count() -> int:
    raw = os.environ.get("FOELNER_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _fraction_str(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _element_set_json(s: ElementSet) -> list:
    return [format_word(w) for w in s.sorted_members()]


# ---------------------------------------------------------------------------
# Command handlers.


def _run_group(cfg: RunConfig) -> tuple[Any, list]:
    p = cfg.params
    descriptor = GroupDescriptor.parse(p["group"])
    if p.get("gens"):
        gens = GeneratingSet.of(descriptor, parse_generators(descriptor, p["gens"]))
    else:
        gens = GeneratingSet.standard(descriptor)
    mode = p["mode"]
    base = {
        "group": descriptor.spec(),
        "generators": [format_word(g) for g in gens.generators],
        "mode": mode,
    }
    if mode == "exhaustive":
        best, report = exhaustive_min_ratio(descriptor, gens, p["radius"])
        results = dict(
            base,
            best_set=_element_set_json(best),
            set_size=report.set_size,
            boundary_size=report.boundary_size,
            ratio_rational=_fraction_str(report.ratio),
            ratio_float=report.ratio_float,
            history=[],
        )
    elif mode == "balls":
        fam = ball_family_ratios(descriptor, gens, p["radius"])
        last = fam[-1]
        results = dict(
            base,
            best_set=f"ball(radius={last.radius})",
            set_size=last.report.set_size,
            boundary_size=last.report.boundary_size,
            ratio_rational=_fraction_str(last.report.ratio),
            ratio_float=last.report.ratio_float,
            history=[
                {
                    "radius": fr.radius,
                    "set_size": fr.report.set_size,
                    "boundary_size": fr.report.boundary_size,
                    "ratio_rational": _fraction_str(fr.report.ratio),
                    "ratio_float": fr.report.ratio_float,
                    "method": fr.method,
                }
                for fr in fam
            ],
        )
    else:  # search
        if cfg.seed is None:
            raise SeedRequired("group --mode search requires --seed")
        sc = GroupSearchConfig(
            radius=p["radius"], mode="search", seed=cfg.seed, iterations=p["iters"]
        )
        res = local_search_min_ratio(descriptor, gens, sc)
        results = dict(
            base,
            best_set=_element_set_json(res.best_set),
            set_size=res.report.set_size,
            boundary_size=res.report.boundary_size,
            ratio_rational=_fraction_str(res.report.ratio),
            ratio_float=res.report.ratio_float,
            history=[
                {"iteration": m.iteration, "move": m.move, "boundary_size": m.boundary_size, "set_size": m.set_size}
                for m in res.history
            ],
        )
    return results, []


def _run_witness(cfg: RunConfig) -> tuple[Any, list]:
    p = cfg.params
    n, k, depth = p["n"], p["k"], p["depth"]
    if p.get("k_max"):
        mode = "formula" if p["formula_only"] else "frame"
        est = foelner_upper_estimate(n, p["k_max"], T=depth, mode=mode)
        results = {
            "config": {"n": n, "k_max": p["k_max"], "depth": depth, "mode": mode},
            "sweep": [{"k": kk, "epsilon": eps} for kk, eps in est.sweep],
            "best_k": est.best_k,
            "best_epsilon": est.best_epsilon,
            "limit_epsilon": est.limit_epsilon,
        }
        return results, []
    if p["formula_only"]:
        results = {
            "config": {"n": n, "k": k, "depth": depth, "formula_only": True},
            "per_unitary": [],
            "certified_epsilon": certificate_formula(n, k),
            "formula_epsilon": certificate_formula(n, k),
            "limit_epsilon": limit_formula(n),
        }
        return results, []
    cert = witness_certificate(n, k, depth)
    results = {
        "config": {"n": n, "k": k, "depth": depth, "formula_only": False},
        "per_unitary": [{"label": r.label, "ratio": r.ratio, "defect": r.defect} for r in cert.records],
        "certified_epsilon": cert.certified_epsilon,
        "formula_epsilon": cert.formula_epsilon,
        "limit_epsilon": limit_formula(n),
        "frame_fingerprint": cert.frame_fingerprint,
    }
    return results, []


def _run_scan(cfg: RunConfig) -> tuple[Any, list]:
    p = cfg.params
    descriptor = free_group(p["n"])
    if p.get("unitaries"):
        unitary_words = parse_generators(descriptor, p["unitaries"])
    else:
        unitary_words = tuple(Word(descriptor, (i,)) for i in range(1, descriptor.rank + 1))
    sc = ProjectionSearchConfig(
        descriptor=descriptor,
        rank=p["rank"],
        ambient_radius=p["radius"],
        seed=cfg.seed,
        iterations=p["iters"],
        unitaries=unitary_words,
    )
    res = anneal_projection(sc)
    results = {
        "config": {
            "group": descriptor.spec(),
            "rank": p["rank"],
            "radius": p["radius"],
            "iterations": p["iters"],
            "seed": cfg.seed,
            "unitaries": [format_word(w) for w in unitary_words],
        },
        "per_unitary": [{"label": r.label, "ratio": r.ratio, "defect": r.defect} for r in res.records],
        "best_objective": res.objective,
        "history": [{"iteration": it, "objective": obj} for it, obj in res.history],
        "frame_fingerprint": frame_fingerprint(res.frame),
        "frame": [vec_to_json(col) for col in res.frame.columns],
    }
    return results, []


def _audit_one_frame(frame) -> dict:
    report = chain_audit(frame)
    unitaries = standard_unitaries(frame.descriptor)[:2]
    max_ratio = max(commutator_ratio(op, frame).closed_form for op in unitaries)
    return {
        "c_values": report.c_values,
        "displacement": {
            "measured": max(d["measured"] for d in report.displacements.values()),
            "certified": max(d["certified"] for d in report.displacements.values()),
            "per_unitary": report.displacements,
        },
        "verdict": report.verdict,
        "max_commutator_ratio": max_ratio,
    }


def _run_audit(cfg: RunConfig) -> tuple[Any, list]:
    p = cfg.params
    descriptor = free_group(2)
    identities = verify_set_identities(max(2, p["radius"] + 1))
    rng = np.random.default_rng(cfg.seed)
    frames = [random_frame(descriptor, p["rank"], p["radius"], rng) for _ in range(p["frames"])]
    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            evaluated = list(pool.map(_audit_one_frame, frames))
    else:
        evaluated = [_audit_one_frame(f) for f in frames]
    thr = contradiction_threshold()
    worst = min(range(len(evaluated)), key=lambda i: evaluated[i]["max_commutator_ratio"]) if evaluated else None
    results = {
        "set_identities": {
            "radius": identities.radius,
            "checked_words": identities.checked_words,
            "disjoint_ok": identities.disjoint_ok,
            "corrected_cover_ok": identities.corrected_cover_ok,
            "literal_cover_holds": identities.literal_cover_holds,
            "uncovered_count": identities.uncovered_count,
            "uncovered_examples": list(identities.uncovered_examples),
            "uncovered_equals_first_letter_set": identities.uncovered_equals_first_letter_set,
        },
        "thresholds": {"paper": thr.paper_nominal, "derived": thr.derived},
        "frames_evaluated": len(evaluated),
        "frames": evaluated,
        "c_values": evaluated[worst]["c_values"] if worst is not None else {},
        "displacement": evaluated[worst]["displacement"] if worst is not None else {},
        "verdict": (
            "contradiction"
            if any(e["verdict"] == "contradiction" for e in evaluated)
            else ("consistent" if evaluated else "no-frames")
        ),
        "min_max_commutator_ratio": (
            min(e["max_commutator_ratio"] for e in evaluated) if evaluated else None
        ),
    }
    warnings = [contradiction_threshold().note]
    if p["paper_mode"]:
        t = make_paper_trace()
        results["paper_trace"] = {
            "epsilon": t.epsilon,
            "displacement_constant": t.displacement_constant,
            "pincer_lower": t.pincer_lower,
            "pincer_upper": t.pincer_upper,
            "pincer_threshold": t.pincer_threshold,
            "lower_exceeds_threshold": t.lower_exceeds_threshold,
            "upper_below_threshold": t.upper_below_threshold,
            "chain_closes": t.chain_closes,
            "honest_displacement_constant": t.honest_displacement_constant,
        }
        warnings.append(
            "paper-mode replays the literal constants; verdicts always use the derived regime"
        )
    return results, warnings


def _run_identity_check(cfg: RunConfig) -> tuple[Any, list]:
    p = cfg.params
    descriptor = free_group(2)
    rng = np.random.default_rng(cfg.seed)
    unitary_words = [Word(descriptor, (1,)), Word(descriptor, (2,)), Word(descriptor, (-1,))]
    ops = [GroupAlgebraElement.left_translation(w) for w in unitary_words]
    max_diff = 0.0
    agreements = 0
    ratio_max = 0.0
    defect_max = 0.0
    for _ in range(p["trials"]):
        frame = random_frame(descriptor, int(rng.integers(1, 9)), int(rng.integers(3, 6)), rng)
        for op in ops:
            r = commutator_ratio(op, frame)
            d = trace_defect(op, frame)
            diff = abs(r.direct - r.closed_form)
            max_diff = max(max_diff, diff)
            ratio_max = max(ratio_max, r.direct, r.closed_form)
            defect_max = max(defect_max, d)
            if diff < 1e-9:
                agreements += 1
    results = {
        "trials": p["trials"],
        "unitaries": [format_word(w) for w in unitary_words],
        "checks": p["trials"] * len(ops),
        "agreements_within_1e-9": agreements,
        "max_abs_difference": max_diff,
        "max_ratio": ratio_max,
        "max_defect": defect_max,
        "ratio_upper_bound": float(np.sqrt(2.0)),
    }
    return results, []


_HANDLERS = {
    "group": _run_group,
    "witness": _run_witness,
    "scan": _run_scan,
    "audit": _run_audit,
    "identity-check": _run_identity_check,
}


def run(cfg: RunConfig) -> RunReport:
    """Dispatch a validated RunConfig to its owning module."""
    t0 = time.perf_counter()
    if cfg.command in STOCHASTIC_COMMANDS and cfg.seed is None:
        raise SeedRequired(f"command {cfg.command!r} requires an explicit --seed")
    handler = _HANDLERS[cfg.command]
    results, warnings = handler(cfg)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    config_echo = {"command": cfg.command, "seed": cfg.seed, "format": cfg.fmt, **cfg.params}
    return RunReport(config_echo, __version__, results, warnings, wall_ms)


# ---------------------------------------------------------------------------
# Output rendering.


def render_json(report: RunReport) -> str:
    return json.dumps(report.payload(), indent=2, sort_keys=True) + "\n"


def render_csv(report: RunReport) -> str:
    """CSV for the tabular reports (ball families and certificate sweeps)."""
    results = report.results
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(results, dict) and "history" in results and results.get("mode") == "balls":
        writer.writerow(["radius", "set_size", "boundary_size", "ratio_rational", "ratio_float", "method"])
        for row in results["history"]:
            writer.writerow(
                [row["radius"], row["set_size"], row["boundary_size"], row["ratio_rational"], row["ratio_float"], row["method"]]
            )
    elif isinstance(results, dict) and "sweep" in results:
        writer.writerow(["k", "epsilon"])
        for row in results["sweep"]:
            writer.writerow([row["k"], row["epsilon"]])
    else:
        raise PreconditionError("csv output is only available for ball families and certificate sweeps")
    return buf.getvalue()


def write_report(report: RunReport, out: str | None, fmt: str) -> None:
    text = render_csv(report) if fmt == "csv" else render_json(report)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Argument parsing.


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="foelner",
        description="Folner-type invariants for groups and group von Neumann algebras",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("group", help="boundary-ratio estimators for the group invariant")
    g.add_argument("--group", required=True, help="free:N or abelian:N")
    g.add_argument("--gens", default=None, help="comma-separated generators (default: standard)")
    g.add_argument("--radius", type=int, required=True)
    g.add_argument("--mode", choices=["exhaustive", "balls", "search"], required=True)
    g.add_argument("--iters", type=int, default=10_000)
    g.add_argument("--seed", type=int, default=None)

    w = sub.add_parser("witness", help="explicit upper-bound certificates for L(F_n)")
    w.add_argument("--n", type=int, required=True)
    w.add_argument("--k", type=int, default=8)
    w.add_argument("--depth", type=int, default=6)
    w.add_argument("--k-max", type=int, default=None, help="sweep k = 1..k_max instead of one k")
    w.add_argument("--formula-only", action="store_true")

    s = sub.add_parser("scan", help="annealed projection search for the Q-objective")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--rank", type=int, required=True)
    s.add_argument("--radius", type=int, required=True)
    s.add_argument("--iters", type=int, required=True)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--unitaries", default=None, help="comma-separated words (default: standard generators)")

    a = sub.add_parser("audit", help="paradoxical-decomposition audit over random frames")
    a.add_argument("--rank", type=int, required=True)
    a.add_argument("--radius", type=int, required=True)
    a.add_argument("--seed", type=int, default=None)
    a.add_argument("--frames", type=int, default=100)
    a.add_argument("--paper-mode", action="store_true")

    i = sub.add_parser("identity-check", help="HS-identity property run on random frames")
    i.add_argument("--trials", type=int, default=100)
    i.add_argument("--seed", type=int, default=None)

    for p in (g, w, s, a, i):
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=["json", "csv"], default="json")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    params: dict = {}
    if args.command == "group":
        params = {
            "group": args.group,
            "gens": args.gens,
            "radius": args.radius,
            "mode": args.mode,
            "iters": args.iters,
        }
    elif args.command == "witness":
        params = {
            "n": args.n,
            "k": args.k,
            "depth": args.depth,
            "k_max": args.k_max,
            "formula_only": args.formula_only,
        }
    elif args.command == "scan":
        params = {
            "n": args.n,
            "rank": args.rank,
            "radius": args.radius,
            "iters": args.iters,
            "unitaries": args.unitaries,
        }
    elif args.command == "audit":
        params = {
            "rank": args.rank,
            "radius": args.radius,
            "frames": args.frames,
            "paper_mode": args.paper_mode,
        }
    elif args.command == "identity-check":
        params = {"trials": args.trials}
    seed = getattr(args, "seed", None)
    if args.command == "group" and args.mode == "search" and seed is None:
        raise SeedRequired("group --mode search requires --seed")
    if args.command == "scan" and seed is None:
        raise SeedRequired("scan requires --seed")
    return RunConfig(args.command, params, seed, args.out, args.format)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = run(cfg)
        write_report(report, cfg.out, cfg.fmt)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return 3
    print(f"completed in {report.wall_ms:.1f} ms", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
