"""Command-line entry point: ``dsn-schedule <subcommand> ...``.

Exit codes: 0 success, 1 validation failure, 2 usage error or stale
solution, 3 solver backend failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .balance import BalancerConfig, initial_weights, run_balancer
from .evaluate import compute_metrics, validate_schedule
from .exceptions import BalancerError, ConfigurationError, IntegrityError, ModelError, ParseError, SchedulerError
from .ingest import desk_instance, dump_instance, instance_hash, load_instance, summarize, week_instance
from .milp import ModelConfig, build_model, parse_ablation
from .profiles import WEEK_TOTALS
from .reports import REPORT_KINDS, RunManifest, dump_solution, load_solution, render_report, solution_to_dict
from .solve import ExternalSolver, OracleSolver, export_mps
from .solve.external import COMMAND_ENV
from .splitter import expand_splits

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_BACKEND = 0, 1, 2, 3
PRESETS = ("desk", *WEEK_TOTALS)

log = logging.getLogger("dsn_scheduler")


class StageError(Exception):
    def __init__(self, stage: str, message: str, code: int):
        super().__init__(f"[{stage}] {message}")
        self.code = code


def _csv_set(text: str | None) -> frozenset[str]:
    return frozenset(s.strip() for s in (text or "").split(",") if s.strip())


def _solver(spec: str):
    if spec == "oracle":
        return OracleSolver()
    if spec == "highs":
        return ExternalSolver()
    if "{mps}" not in spec:
        raise StageError("solve", f"--solver must be 'oracle', 'highs' or a template containing {{mps}}, got {spec!r}",
                         EXIT_USAGE)
    return ExternalSolver(command=spec)


def _load(path: str):
    try:
        return load_instance(path)
    except (OSError, ParseError, IntegrityError, ConfigurationError, SchedulerError) as exc:
        raise StageError("ingest", str(exc), EXIT_USAGE) from None


def _expand(instance):
    try:
        return expand_splits(instance)
    except SchedulerError as exc:
        raise StageError("splitter", str(exc), EXIT_USAGE) from None


def _model_config(args) -> ModelConfig:
    try:
        return ModelConfig(single_interval=args.single_interval, ablate=parse_ablation(args.ablate))
    except ModelError as exc:
        raise StageError("milp", str(exc), EXIT_USAGE) from None


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _load_matching_solution(instance, path: str):
    try:
        sol = load_solution(path)
    except (OSError, ParseError) as exc:
        raise StageError("ingest", str(exc), EXIT_USAGE) from None
    expected = instance_hash(instance)
    found = sol.manifest.get("instance_hash")
    if found != expected:
        raise StageError("validate", f"solution was made for instance {found}, not {expected}; refusing stale solution",
                         EXIT_USAGE)
    return sol


# -- subcommands ----------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.preset == "desk":
        instance = desk_instance(args.seed)
    else:
        instance = week_instance(args.preset, args.seed)
    data = dump_instance(instance).decode()
    if args.out:
        _write(Path(args.out), data)
    else:
        sys.stdout.write(data)
    row = summarize(instance).table_row()
    print(f"{instance.label}: {row[0]} antennas, {row[1]} activities, {row[2]} h requested, {row[3]} missions",
          file=sys.stderr)
    return EXIT_OK


def cmd_schedule(args) -> int:
    instance = _load(args.instance)
    expanded, registry = _expand(instance)
    prioritized = _csv_set(args.prioritize)
    try:
        config = BalancerConfig(
            eta0=args.threshold,
            incr_threshold=args.threshold_increment,
            k_max=args.iterations,
            k_time=args.time_limit,
            priority_multiplier=args.priority_weight,
            prioritized_missions=prioritized,
            max_solves=args.max_solves,
        )
        initial_weights(expanded, config)
    except ConfigurationError as exc:
        raise StageError("balance", str(exc), EXIT_USAGE) from None
    model_config = _model_config(args)
    solver = _solver(args.solver)
    if model_config.ablate:
        log.warning("experimental: constraints %s are switched off", ",".join(sorted(model_config.ablate)))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "iterations.jsonl", "w") as stream:
        try:
            result = run_balancer(expanded, registry, config, solver, model_config, log_stream=stream)
        except BalancerError as exc:
            raise StageError("solve", str(exc), EXIT_BACKEND) from None
        except ModelError as exc:
            raise StageError("solve", str(exc), EXIT_USAGE) from None

    chosen = result.chosen
    validation = validate_schedule(expanded, registry, chosen.schedule, args.strict_containment)
    metrics = compute_metrics(expanded, registry, chosen.schedule, prioritized, validation)
    manifest = RunManifest(
        instance_label=instance.label,
        instance_hash=instance_hash(instance),
        config={
            "time_limit_s": args.time_limit,
            "iterations": args.iterations,
            "threshold": args.threshold,
            "threshold_increment": args.threshold_increment,
            "prioritize": sorted(prioritized),
            "priority_weight": args.priority_weight,
            "single_interval": args.single_interval,
            "ablate": sorted(model_config.ablate),
            "strict_containment": args.strict_containment,
            "max_solves": args.max_solves,
        },
        solver=getattr(solver, "command", None) or getattr(solver, "name", str(args.solver)),
        seed=args.seed,
    )
    doc = solution_to_dict(expanded, chosen.schedule, manifest, chosen_index=result.chosen_index,
                           n_solves=len(result.solutions), cap_hit=result.cap_hit)
    _write(out / "solution.json", dump_solution(doc))
    metrics_doc = {"manifest_digest": doc["manifest"]["digest"], **metrics.to_dict()}
    _write(out / "metrics.json", json.dumps(metrics_doc, indent=2) + "\n")

    print(f"{instance.label}: {len(result.solutions)} solves, chose #{result.chosen_index}"
          + (" (hard cap reached)" if result.cap_hit else ""))
    for line in metrics.table_lines():
        print(line)
    print(validation.summary())
    return EXIT_OK if validation.ok else EXIT_INVALID


def cmd_validate(args) -> int:
    instance = _load(args.instance)
    expanded, registry = _expand(instance)
    sol = _load_matching_solution(instance, args.solution)
    try:
        report = validate_schedule(expanded, registry, sol.schedule, args.strict_containment)
    except IntegrityError as exc:
        raise StageError("validate", str(exc), EXIT_INVALID) from None
    if args.out:
        _write(Path(args.out), json.dumps(report.to_dict(), indent=2) + "\n")
    print(report.summary())
    for v in report.verdicts:
        if not v.valid:
            t = v.track
            print(f"  {t.activity_id} on {'+'.join(t.resource_ids)} [{t.track[0]},{t.track[1]}): {', '.join(v.violations)}")
    for p in report.global_violations:
        print(f"  {p}")
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_metrics(args) -> int:
    instance = _load(args.instance)
    expanded, registry = _expand(instance)
    sol = _load_matching_solution(instance, args.solution)
    try:
        validation = validate_schedule(expanded, registry, sol.schedule, args.strict_containment)
        metrics = compute_metrics(expanded, registry, sol.schedule, _csv_set(args.prioritize), validation)
    except IntegrityError as exc:
        raise StageError("evaluate", str(exc), EXIT_INVALID) from None
    text = json.dumps(metrics.to_dict(), indent=2) + "\n"
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_export_mps(args) -> int:
    instance = _load(args.instance)
    expanded, registry = _expand(instance)
    try:
        config = BalancerConfig(priority_multiplier=args.priority_weight, prioritized_missions=_csv_set(args.prioritize))
        model = build_model(expanded, registry, initial_weights(expanded, config), _model_config(args))
    except (ConfigurationError, ModelError) as exc:
        raise StageError("milp", str(exc), EXIT_USAGE) from None
    data = export_mps(model)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
    print(f"{model.n_vars} binaries, {model.n_rows} rows", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        sol = load_solution(args.solution)
    except (OSError, ParseError) as exc:
        raise StageError("report", str(exc), EXIT_USAGE) from None
    text = render_report(sol, args.kind)
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--single-interval", action="store_true", help="at most one track per view period")
    p.add_argument("--ablate", default=None, metavar="TAGS",
                   help="experimental: drop constraint families, e.g. 2j,2k-2m")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsn-schedule", description="Weekly antenna scheduling by 0/1 programming.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic instance")
    p.add_argument("--preset", choices=PRESETS, default="desk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("schedule", help="run the balancing loop and write solution, metrics and iteration log")
    p.add_argument("instance")
    p.add_argument("--time-limit", type=float, default=1800.0, help="seconds per solve (default 1800)")
    p.add_argument("--iterations", type=int, default=10, help="k_max (default 10)")
    p.add_argument("--threshold", type=float, default=0.15)
    p.add_argument("--threshold-increment", type=float, default=0.05)
    p.add_argument("--prioritize", default="", help="comma-separated mission ids")
    p.add_argument("--priority-weight", type=float, default=5.0)
    p.add_argument("--solver", default="highs",
                   help=f"'oracle', 'highs' or a command template with {{mps}} {{sol}} {{time_limit_s}}; "
                        f"'highs' honours ${COMMAND_ENV}")
    p.add_argument("--seed", type=int, default=None, help="recorded in the manifest")
    p.add_argument("--max-solves", type=int, default=50)
    p.add_argument("--strict-containment", action="store_true")
    p.add_argument("--out", default="run")
    _model_flags(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("validate", help="check a solution against an instance")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--strict-containment", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("metrics", help="satisfaction metrics of a solution")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--prioritize", default="")
    p.add_argument("--strict-containment", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("export-mps", help="write the model with initial weights as MPS")
    p.add_argument("instance")
    p.add_argument("--prioritize", default="")
    p.add_argument("--priority-weight", type=float, default=5.0)
    p.add_argument("--out")
    _model_flags(p)
    p.set_defaults(func=cmd_export_mps)

    p = sub.add_parser("report", help="CSV data for Gantt, heatmap or antenna usage plots")
    p.add_argument("solution")
    p.add_argument("--kind", choices=REPORT_KINDS, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
