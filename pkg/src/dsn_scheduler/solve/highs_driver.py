"""Solve an MPS file with HiGHS and write the exchange solution format.

    python3 -m dsn_scheduler.solve.highs_driver MODEL.mps OUT.sol TIME_LIMIT_S [MIP_REL_GAP]

The objective was negated on export, so the reported ``=obj=`` is flipped
back to the maximization value. The relative MIP gap defaults to zero so
that optimal really means optimal; HiGHS' own default is 1e-4.
"""

from __future__ import annotations

import sys

import highspy


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) not in (3, 4):
        print(__doc__, file=sys.stderr)
        return 2
    mps, sol, limit = args[:3]
    gap = float(args[3]) if len(args) == 4 else 0.0

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", float(limit))
    h.setOptionValue("mip_rel_gap", gap)
    h.setOptionValue("threads", 1)
    if h.readModel(mps) != highspy.HighsStatus.kOk:
        print(f"HiGHS could not read {mps}", file=sys.stderr)
        return 3
    h.run()

    status = h.getModelStatus()
    info = h.getInfo()
    has_point = info.primal_solution_status == 2  # kSolutionStatusFeasible
    S = highspy.HighsModelStatus
    if status == S.kOptimal:
        verdict = "optimal"
    elif status == S.kInfeasible:
        verdict = "infeasible"
    elif has_point and status in (S.kTimeLimit, S.kIterationLimit, S.kSolutionLimit, S.kInterrupt):
        verdict = "feasible_time_limit"
    else:
        verdict = "error"

    lines = [f"# highs {h.version()} status {h.modelStatusToString(status)} gap {gap}", f"=status= {verdict}"]
    if verdict in ("optimal", "feasible_time_limit"):
        names = h.getLp().col_names_
        values = h.getSolution().col_value
        lines.append(f"=obj= {-info.objective_function_value!r}")
        lines.extend(f"{n} {v!r}" for n, v in zip(names, values))
    with open(sol, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
