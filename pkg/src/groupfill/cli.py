"""Command-line front end.

Subcommands: solve-fixed, solve-fading, sweep, verify, montecarlo.
Exit codes: 0 success, 1 verification failure, 2 input error, 3 numerical
tolerance failure.  All numeric output uses 17 significant digits so results
are bit-stable across runs for fixed inputs and seeds.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__, fixed, oracle
from .ergodic import (
    ChannelEnsemble,
    EnsembleKind,
    ergodic_capacity_closed_form,
    ergodic_capacity_mc,
    jensen_upper_bound,
)
from .errors import GroupfillError, ToleranceNotReached, ValidationError
from .fading import detect_case, opa_fading
from .fixed import (
    DEFAULT_TOL,
    capacity_fixed,
    kkt_residuals,
    opa_fixed,
    waterfill_tpc,
)
from .problem import (
    GainVector,
    GroupPartition,
    PowerAllocation,
    ValidatedProblem,
    expand_allocation,
    load_document,
    partition_from_dict,
    problem_from_dict,
    random_problem,
)

NATS_PER_BIT = math.log(2.0)

#: Tolerances used by the verify suites (margins are printed against these).
VERIFY_OBJECTIVE_TOL = 1e-6
VERIFY_KKT_TOL = 1e-8
VERIFY_SAA_TOL = 5e-3
VERIFY_SAA_ITERS = 5000


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_vec(v) -> str:
    return " ".join(_fmt(x) for x in v)


def _unit(args) -> tuple[float, str]:
    if getattr(args, "bits", False):
        return 1.0 / NATS_PER_BIT, "bits"
    return 1.0, "nats"


def _echo(out, command: str, **kv) -> None:
    parts = [f"# {command}"]
    parts += [f"{k}={v}" for k, v in kv.items() if v is not None]
    print(" ".join(parts), file=out)


def _write_out(path: str | None, doc: dict) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _pgpc_only_allocation(problem: ValidatedProblem) -> PowerAllocation:
    """Independent water-filling of every group cap (no total budget)."""
    p = np.zeros(problem.num_antennas)
    for grp, cap in zip(problem.partition.groups, problem.partition.caps):
        idx = [i - 1 for i in grp]
        sub = waterfill_tpc(GainVector(problem.gains.gains[idx]), cap)
        p[idx] = sub.powers
    return PowerAllocation.for_total(p, sum(problem.partition.caps))


def _with_total(partition: GroupPartition, total: float) -> GroupPartition:
    return GroupPartition(partition.groups, partition.caps, total)


def cmd_solve_fixed(args, out) -> int:
    problem = problem_from_dict(load_document(args.problem))
    scale, unit = _unit(args)
    _echo(out, "solve-fixed", problem=args.problem, tol=_fmt(args.tol),
          units=unit, tpc_only=args.tpc_only or None, pgpc_only=args.pgpc_only or None)

    if args.tpc_only:
        alloc = waterfill_tpc(problem.gains, problem.partition.total)
        capacity = capacity_fixed(problem.gains, alloc)
        duals = None
        kkt = None
    elif args.pgpc_only:
        alloc = _pgpc_only_allocation(problem)
        capacity = capacity_fixed(problem.gains, alloc)
        duals = None
        kkt = None
    else:
        report = opa_fixed(problem, tol=args.tol)
        alloc = report.allocation
        capacity = report.capacity_nats
        duals = report.duals
        kkt = kkt_residuals(problem, report)

    powers = expand_allocation(problem, alloc.powers)
    print(f"antennas: {powers.size}", file=out)
    print(f"powers: {_fmt_vec(powers)}", file=out)
    group_sums = [
        float(alloc.powers[[i - 1 for i in grp]].sum())
        for grp in problem.partition.groups
    ]
    print(f"group_sums: {_fmt_vec(group_sums)}", file=out)
    doc = {"powers": powers.tolist(), f"capacity_{unit}": capacity * scale}
    if duals is not None:
        print(f"mu: {_fmt(duals.mu)}", file=out)
        print(f"lambdas: {_fmt_vec(duals.lambdas)}", file=out)
        print(f"kkt_max_residual: {_fmt(kkt.max_violation)}", file=out)
        doc["mu"] = duals.mu
        doc["lambdas"] = list(duals.lambdas)
        doc["kkt_max_residual"] = kkt.max_violation
    print(f"capacity_{unit}: {_fmt(capacity * scale)}", file=out)
    _write_out(args.out, doc)
    return 0


def cmd_solve_fading(args, out) -> int:
    doc = load_document(args.problem)
    if doc.get("gains"):
        print(
            "warning: gains in the problem file are ignored by the fading "
            "solver (optimality assumes i.i.d. gains)",
            file=sys.stderr,
        )
    partition = partition_from_dict(doc)
    scale, unit = _unit(args)
    _echo(out, "solve-fading", problem=args.problem, units=unit)

    report = opa_fading(partition)
    case = detect_case(partition)
    capacity = ergodic_capacity_closed_form(report.allocation)

    print(f"antennas: {partition.num_antennas}", file=out)
    print(f"powers: {_fmt_vec(report.allocation.powers)}", file=out)
    print(f"case: {case}", file=out)
    print(f"active_groups: {' '.join(str(j) for j in report.active_groups)}", file=out)
    print(f"rounds: {report.rounds}", file=out)
    print(f"ergodic_capacity_{unit}: {_fmt(capacity * scale)}", file=out)
    _write_out(args.out, {
        "powers": report.allocation.powers.tolist(),
        "case": str(case),
        "active_groups": list(report.active_groups),
        "rounds": report.rounds,
        f"ergodic_capacity_{unit}": capacity * scale,
    })
    return 0


def _parse_grid(spec: str) -> list[float]:
    try:
        a, b, step = (float(x) for x in spec.split(":"))
    except ValueError as exc:
        raise ValidationError("grid must be 'start:stop:step'") from exc
    if a <= 0 or step <= 0 or b < a:
        raise ValidationError("grid needs 0 < start <= stop and step > 0")
    values = []
    k = 0
    while True:
        v = a + k * step
        if v > b * (1 + 1e-12):
            break
        values.append(v)
        k += 1
    return values


CURVE_ORDER = ("JOINT", "TPC_ONLY", "PGPC_ONLY", "JENSEN")


def _parse_curves(spec: str | None, mode: str) -> list[str]:
    if spec is None:
        wanted = set(CURVE_ORDER) if mode == "fading" else {"JOINT", "TPC_ONLY", "PGPC_ONLY"}
    else:
        wanted = {c.strip().upper() for c in spec.split(",") if c.strip()}
        unknown = wanted - set(CURVE_ORDER)
        if unknown:
            raise ValidationError(f"unknown curves: {sorted(unknown)}")
        if "JENSEN" in wanted and mode != "fading":
            raise ValidationError("the JENSEN curve exists only in fading mode")
    if not wanted:
        raise ValidationError("at least one curve must be requested")
    return [c for c in CURVE_ORDER if c in wanted]


def cmd_sweep(args, out) -> int:
    doc = load_document(args.problem)
    grid = _parse_grid(args.grid)
    curves = _parse_curves(args.curves, args.mode)
    scale, unit = _unit(args)
    _echo(out, "sweep", problem=args.problem, mode=args.mode, grid=args.grid,
          curves=",".join(curves), units=unit)

    rows = []
    if args.mode == "fixed":
        base = problem_from_dict(doc)
        gains = base.gains
        pgpc_cap = capacity_fixed(gains, _pgpc_only_allocation(base))
        for total in grid:
            problem = ValidatedProblem(
                gains, _with_total(base.partition, total), base.index_map
            )
            row = {"P_T": total}
            if "JOINT" in curves:
                row["JOINT"] = opa_fixed(problem, tol=args.tol).capacity_nats
            if "TPC_ONLY" in curves:
                row["TPC_ONLY"] = capacity_fixed(gains, waterfill_tpc(gains, total))
            if "PGPC_ONLY" in curves:
                row["PGPC_ONLY"] = pgpc_cap
            rows.append(row)
    else:
        base_part = partition_from_dict(doc)
        m = base_part.num_antennas
        caps_alloc = np.zeros(m)
        for grp, cap in zip(base_part.groups, base_part.caps):
            caps_alloc[[i - 1 for i in grp]] = cap / len(grp)
        pgpc_cap = ergodic_capacity_closed_form(
            PowerAllocation.for_total(caps_alloc, sum(base_part.caps))
        )
        ones = np.ones(m)
        for total in grid:
            partition = _with_total(base_part, total)
            report = opa_fading(partition)
            row = {"P_T": total}
            if "JOINT" in curves:
                row["JOINT"] = ergodic_capacity_closed_form(report.allocation)
            if "TPC_ONLY" in curves:
                uniform = PowerAllocation.for_total(np.full(m, total / m), total)
                row["TPC_ONLY"] = ergodic_capacity_closed_form(uniform)
            if "PGPC_ONLY" in curves:
                row["PGPC_ONLY"] = pgpc_cap
            if "JENSEN" in curves:
                row["JENSEN"] = jensen_upper_bound(report.allocation, ones)
            rows.append(row)

    lines = [",".join(["P_T"] + curves)]
    for row in rows:
        lines.append(",".join(
            [_fmt(row["P_T"])] + [_fmt(row[c] * scale) for c in curves]
        ))
    csv_text = "\n".join(lines)
    print(csv_text, file=out)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text + "\n")
    return 0


def _check(out, name: str, detail: str, ok: bool) -> bool:
    print(f"{name}: {detail}  {'PASS' if ok else 'FAIL'}", file=out)
    return ok


def cmd_verify(args, out) -> int:
    if (args.problem is None) == (args.random is None):
        raise ValidationError("verify needs a problem file or --random m s seed count")
    _echo(out, "verify", problem=args.problem,
          random=" ".join(str(x) for x in args.random) if args.random else None,
          seed=args.seed, samples=args.samples, tol=_fmt(args.tol),
          inject_perturbation=(
              _fmt(args.inject_perturbation) if args.inject_perturbation else None
          ))

    if args.problem is not None:
        doc = load_document(args.problem)
        problems = [problem_from_dict(doc)]
        partitions = [partition_from_dict(doc)]
        pair_count = 50
    else:
        max_m, max_s, rand_seed, count = args.random
        if count < 1:
            raise ValidationError("--random count must be positive")
        rng = np.random.default_rng(rand_seed)
        problems = [random_problem(rng, max_m, max_s) for _ in range(count)]
        partitions = [p.partition for p in problems]
        pair_count = count

    ok = True

    # Suite 1: solver capacity matches the independent concave maximizer.
    worst_gap = 0.0
    for problem in problems:
        report = opa_fixed(problem, tol=args.tol)
        result = oracle.oracle_fixed(problem)
        worst_gap = max(worst_gap, abs(report.capacity_nats - result.objective))
    ok &= _check(
        out, "oracle-equivalence",
        f"{len(problems)} problems, max |capacity - oracle| = {_fmt(worst_gap)}"
        f" (tol {_fmt(VERIFY_OBJECTIVE_TOL)})",
        worst_gap <= VERIFY_OBJECTIVE_TOL,
    )

    # Suite 2: KKT residuals of solver output (or of an injected perturbation,
    # which must be flagged).
    worst_kkt = 0.0
    for problem in problems:
        report = opa_fixed(problem, tol=args.tol)
        if args.inject_perturbation:
            p = np.array(report.allocation.powers)
            k = int(np.argmax(p))
            p[k] = max(0.0, p[k] - args.inject_perturbation)
            report = fixed.FixedSolveReport(
                allocation=PowerAllocation.for_partition(p, problem.partition),
                duals=report.duals,
                capacity_nats=capacity_fixed(problem.gains, PowerAllocation(p)),
                group_budgets=report.group_budgets,
                active_tpc=report.active_tpc,
                active_groups=report.active_groups,
            )
        worst_kkt = max(worst_kkt, kkt_residuals(problem, report).max_violation)
    ok &= _check(
        out, "kkt-residual",
        f"{len(problems)} problems, max residual = {_fmt(worst_kkt)}"
        f" (tol {_fmt(VERIFY_KKT_TOL)})",
        worst_kkt <= VERIFY_KKT_TOL,
    )

    # Suites 3-4: every cap-shaving spread of a fading optimum must majorize
    # it, and the fixed-sample objective must rank the pair accordingly.
    rng = np.random.default_rng(args.seed)
    pairs = []
    for k in range(pair_count):
        partition = partitions[k % len(partitions)]
        report = opa_fading(partition)
        competitor = oracle.shave_and_spread(
            partition, report.allocation, report.active_groups, rng
        )
        if competitor is not None:
            pairs.append((partition, report.allocation, competitor))
    maj_fail = sum(
        not oracle.majorizes(best.powers, other.powers)
        for _, best, other in pairs
    )
    ok &= _check(
        out, "majorization",
        f"{len(pairs)} perturbation pairs, {maj_fail} violations",
        maj_fail == 0,
    )

    worst_schur = -math.inf
    for partition, best, other in pairs:
        samples = oracle.saa_gain_samples(partition.num_antennas, args.samples, args.seed)
        mean_best, se_best = oracle.saa_mean_se(samples, best.powers)
        mean_other, se_other = oracle.saa_mean_se(samples, other.powers)
        margin = 3.0 * math.hypot(se_best, se_other)
        worst_schur = max(worst_schur, mean_other - mean_best - margin)
    ok &= _check(
        out, "schur-concavity",
        f"{len(pairs)} pairs, worst excess of spread-out objective = {_fmt(worst_schur)}"
        " (must be <= 0)",
        worst_schur <= 0.0 or not pairs,
    )

    # Suite 5 (file input only): the fading solver against the sample-average
    # maximizer on this partition.
    if args.problem is not None:
        partition = partitions[0]
        report = opa_fading(partition)
        result = oracle.oracle_fading_saa(
            partition, args.samples, seed=args.seed, max_iters=VERIFY_SAA_ITERS
        )
        diff = float(np.abs(report.allocation.powers - result.allocation.powers).max())
        ok &= _check(
            out, "fading-saa",
            f"max |p - oracle p| = {_fmt(diff)} (tol {_fmt(VERIFY_SAA_TOL)})",
            diff <= VERIFY_SAA_TOL,
        )

    print(f"result: {'PASS' if ok else 'FAIL'}", file=out)
    return 0 if ok else 1


def _parse_ensemble(spec: str, m: int, seed: int) -> ChannelEnsemble:
    if spec == "orth-iid":
        return ChannelEnsemble(EnsembleKind.ORTHOGONAL_IID, m, m, seed)
    if spec == "rayleigh-miso":
        return ChannelEnsemble(EnsembleKind.RAYLEIGH_MISO, 1, m, seed)
    if spec.startswith("rayleigh-mimo:"):
        dims = spec.split(":", 1)[1]
        try:
            n_str, m_str = dims.lower().split("x")
            n, m_spec = int(n_str), int(m_str)
        except ValueError as exc:
            raise ValidationError("rayleigh-mimo needs dimensions 'NxM'") from exc
        if m_spec != m:
            raise ValidationError(
                f"ensemble has {m_spec} transmit antennas, problem has {m}"
            )
        return ChannelEnsemble(EnsembleKind.RAYLEIGH_MIMO, n, m, seed)
    raise ValidationError(f"unknown ensemble {spec!r}")


def cmd_montecarlo(args, out) -> int:
    doc = load_document(args.problem)
    partition = partition_from_dict(doc)
    if args.samples < 1:
        raise ValidationError("--samples must be at least 1")
    ensemble = _parse_ensemble(args.ensemble, partition.num_antennas, args.seed)
    scale, unit = _unit(args)
    _echo(out, "montecarlo", problem=args.problem, ensemble=args.ensemble,
          samples=args.samples, seed=args.seed, units=unit)

    report = opa_fading(partition)
    estimate = ergodic_capacity_mc(ensemble, report.allocation, args.samples)
    print(f"powers: {_fmt_vec(report.allocation.powers)}", file=out)
    print(f"mean_{unit}: {_fmt(estimate.mean * scale)}", file=out)
    print(f"std_error_{unit}: {_fmt(estimate.std_error * scale)}", file=out)
    print(f"samples: {estimate.samples}", file=out)
    print(f"seed: {estimate.seed}", file=out)
    _write_out(args.out, {
        f"mean_{unit}": estimate.mean * scale,
        f"std_error_{unit}": estimate.std_error * scale,
        "samples": estimate.samples,
        "seed": estimate.seed,
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupfill",
        description="Capacity-optimal transmit power allocation under joint "
        "total and per-group power budgets.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tol=False):
        p.add_argument("--out", metavar="PATH", help="also write results to this file")
        p.add_argument("--bits", action="store_true", help="report capacities in bits")
        if tol:
            p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                           help="bisection residual tolerance")

    p = sub.add_parser("solve-fixed", help="closed-form solve for a fixed channel")
    p.add_argument("problem", help="problem file (.json or .toml)")
    common(p, tol=True)
    p.add_argument("--tpc-only", action="store_true",
                   help="water-fill the total budget, ignoring group caps")
    p.add_argument("--pgpc-only", action="store_true",
                   help="water-fill each group cap, ignoring the total budget")
    p.set_defaults(func=cmd_solve_fixed)

    p = sub.add_parser("solve-fading", help="optimal allocation for i.i.d. fading")
    p.add_argument("problem", help="problem file (.json or .toml)")
    common(p)
    p.set_defaults(func=cmd_solve_fading)

    p = sub.add_parser("sweep", help="capacity curves over a total-power grid, as CSV")
    p.add_argument("problem", help="problem file (.json or .toml)")
    common(p, tol=True)
    p.add_argument("--grid", required=True, metavar="a:b:step",
                   help="total-power grid start:stop:step")
    p.add_argument("--curves", metavar="LIST",
                   help="comma list from JOINT,TPC_ONLY,PGPC_ONLY,JENSEN")
    p.add_argument("--mode", choices=("fixed", "fading"), default="fixed",
                   help="which solver family to sweep")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the verification suites")
    p.add_argument("problem", nargs="?", help="problem file (.json or .toml)")
    common(p, tol=True)
    p.add_argument("--random", nargs=4, type=int, metavar=("M", "S", "SEED", "COUNT"),
                   help="verify COUNT random problems with up to M antennas, S groups")
    p.add_argument("--seed", type=int, default=0, help="seed for the suite RNG")
    p.add_argument("--samples", type=int, default=oracle.SAA_SAMPLES,
                   help="sample count for the sample-average checks")
    p.add_argument("--inject-perturbation", type=float, metavar="EPS",
                   help="corrupt each allocation by EPS (the suites must fail)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("montecarlo", help="Monte-Carlo estimate of the ergodic capacity")
    p.add_argument("problem", help="problem file (.json or .toml)")
    common(p)
    p.add_argument("--ensemble", default="orth-iid",
                   help="orth-iid | rayleigh-miso | rayleigh-mimo:NxM")
    p.add_argument("--samples", type=int, default=100_000, help="number of channel draws")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.set_defaults(func=cmd_montecarlo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, sys.stdout)
    except ToleranceNotReached as exc:
        print(f"error: {exc} (residual {_fmt(exc.residual)})", file=sys.stderr)
        return 3
    except (GroupfillError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
