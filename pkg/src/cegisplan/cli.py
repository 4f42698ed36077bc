"""Command-line entry point.

Exit codes: 0 success / valid plan, 2 invalid plan (or unsolved run),
1 domain or I/O error, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import GenConfig, GoalStyle, bench_run, export_report, make_oracle_factory
from .cegis import LoopConfig, RunAborted, cegis_solve
from .corpus import named_corpus
from .generate import gen_problem
from .oracle.base import OracleTransportError
from .oracle.prompts import FeedbackMode
from .pddl import PddlError, parse_problem, print_problem
from .plan import PlanParseError, parse_plan, print_plan
from .semantics import CexKind, Semantics, counterexample, verify
from .smt import EncodingMode, SolverError, cross_check, emit_smtlib

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")

    def exit(self, status=0, message=None):
        if status:
            raise UsageError(message or "")
        if message:
            sys.stderr.write(message)
        raise SystemExit(status)


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise CliError(f"cannot read {what} file {path}: {e.strerror or e}") from e


def _load(args):
    problem = parse_problem(_read(args.problem, "problem"))
    plan = parse_plan(_read(args.plan, "plan"), problem.objects)
    return problem, plan


def _emit(data, args) -> None:
    print(json.dumps(data, indent=None if getattr(args, "json", False) else 2))


def cmd_verify(args) -> int:
    problem, plan = _load(args)
    v = verify(problem, plan, args.mode, args.init)
    _emit(v.to_json(), args)
    return EXIT_OK if v.is_valid else EXIT_INVALID


def cmd_prefix(args) -> int:
    problem, plan = _load(args)
    v = verify(problem, plan, args.mode)
    if v.is_valid:
        print(json.dumps({"status": "valid"}) if args.json else "plan is valid; no counterexample")
        return EXIT_OK
    cex = counterexample(v)
    if args.json:
        print(json.dumps(cex.to_json()))
    elif cex.kind is CexKind.INVALID_PREFIX:
        print(print_plan(cex.plan))
    else:
        print("goal not achieved; missing:\n" + "\n".join(sorted(str(a) for a in cex.missing)))
    return EXIT_INVALID


def _loop_config(args) -> LoopConfig:
    return LoopConfig(max_trials=args.max_trials, feedback_mode=args.feedback, semantics=args.mode)


def _factory(args):
    return make_oracle_factory(
        args.oracle,
        seed=args.seed,
        p_err=args.p_err,
        endpoint_config=args.config,
        url=args.url,
        model=args.model,
        temperature=args.temperature,
    )


def cmd_solve(args) -> int:
    problem = parse_problem(_read(args.problem, "problem"))
    oracle = _factory(args)(problem, 0)
    try:
        record = cegis_solve(problem, oracle, _loop_config(args))
    except RunAborted as e:
        record = e.record
    path = record.write(args.record or f"{problem.name}.run.jsonl")
    if record.solved:
        print(print_plan(record.plan))
    print(f"outcome: {record.outcome} after {record.trials_used} trial(s); record: {path}")
    if record.outcome == "aborted":
        raise CliError(record.error or "run aborted")
    return EXIT_OK if record.solved else EXIT_INVALID


def cmd_gen(args) -> int:
    cfg = GenConfig(args.blocks, args.seed, args.count, GoalStyle(args.goal_style))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(cfg.problem_count):
        p = gen_problem(cfg, i)
        (out / f"{p.name}.pddl").write_text(print_problem(p))
    print(f"wrote {cfg.problem_count} problem(s) to {out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    loop = _loop_config(args)
    problems = None
    gen = GenConfig(args.blocks, args.seed, args.count, GoalStyle(args.goal_style))
    if args.corpus:
        problems = list(named_corpus(args.corpus).problems.values())
    result = bench_run(gen, _factory(args), loop, problems=problems, workers=args.workers, records_dir=args.records)
    result.oracle = args.oracle
    if args.report:
        export_report(result, args.report, timing=not args.no_timing)
    if args.json:
        print(json.dumps(result.to_json()))
    else:
        print(f"solved {result.success_count}/{len(result.runs)}; trials histogram {result.histogram}")
    return EXIT_OK


def cmd_emit_smt(args) -> int:
    problem, plan = _load(args)
    mode = EncodingMode.LITERAL_APPENDIX if args.literal_appendix else EncodingMode.CORRECTED
    enc = emit_smtlib(problem, plan, mode, args.mode)
    if args.out:
        Path(args.out).write_text(enc.script)
        print(f"wrote {args.out} ({enc.step_count} step(s))")
    else:
        sys.stdout.write(enc.script)
    return EXIT_OK


def cmd_cross_check(args) -> int:
    problem, plan = _load(args)
    res = cross_check(problem, plan, args.solver, args.mode or Semantics.STRICT_4OPS, args.timeout)
    _emit(res.to_json(), args)
    if not res.agree:
        raise CliError("native verifier and SMT encoding disagree")
    return EXIT_OK


def cmd_corpus(args) -> int:
    c = named_corpus(args.name)
    if args.out:
        c.export(args.out)
        print(f"exported corpus to {args.out}")
    elif args.show:
        if args.show in c.problems:
            sys.stdout.write(print_problem(c.problems[args.show]))
        elif args.show in c.plans:
            print(print_plan(c.plans[args.show]))
        else:
            raise CliError(f"no problem or plan named {args.show!r}")
    else:
        for kind, names in (("problems", c.problems), ("plans", c.plans), ("transcripts", c.transcripts)):
            print(f"{kind}: {' '.join(names)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cegisplan", description="Counterexample-guided blocksworld plan synthesis.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def pp(sp, mode_default="strict"):
        sp.add_argument("--problem", required=True)
        sp.add_argument("--plan", required=True)
        sp.add_argument("--mode", choices=[s.value for s in Semantics], default=mode_default)
        sp.add_argument("--json", action="store_true", help="compact machine-readable output")

    sp = sub.add_parser("verify", help="verify a plan against a problem")
    pp(sp)
    sp.add_argument("--init", choices=["normalize", "strict"], default="normalize")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("prefix", help="print the minimal infeasible prefix of a plan")
    pp(sp)
    sp.set_defaults(func=cmd_prefix)

    def loop_args(sp, seed=True):
        sp.add_argument("--oracle", required=True, help="perfect | noisy[:P] | scripted:FILE | http")
        sp.add_argument("--max-trials", type=int, default=10)
        sp.add_argument("--feedback", choices=[m.value for m in FeedbackMode], default="rich")
        sp.add_argument("--mode", choices=[s.value for s in Semantics], default="strict")
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--p-err", type=float, default=0.2)
        sp.add_argument("--config", help="oracle endpoint config file ([oracle] section)")
        sp.add_argument("--url")
        sp.add_argument("--model")
        sp.add_argument("--temperature", type=float)

    sp = sub.add_parser("solve", help="run the synthesis loop on one problem")
    sp.add_argument("--problem", required=True)
    loop_args(sp)
    sp.add_argument("--record", help="where to write the JSON-lines run record")
    sp.set_defaults(func=cmd_solve)

    def gen_args(sp, required):
        sp.add_argument("--blocks", type=int, required=required, default=3)
        sp.add_argument("--count", type=int, default=20)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--goal-style", choices=[g.value for g in GoalStyle], default="partial")

    sp = sub.add_parser("gen", help="write seeded random problems")
    gen_args(sp, True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("bench", help="run the loop over a problem family")
    gen_args(sp, False)
    loop_args(sp, seed=False)
    sp.add_argument("--corpus", help="named corpus ('builtin') or corpus directory instead of generation")
    sp.add_argument("--report", help="CSV or JSON report path")
    sp.add_argument("--no-timing", action="store_true", help="leave wall_ms empty for reproducible reports")
    sp.add_argument("--records", help="directory for per-run JSON-lines records")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("emit-smt", help="write the SMT-LIB2 verification query")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--plan", required=True)
    sp.add_argument("--literal-appendix", action="store_true")
    sp.add_argument("--mode", choices=[s.value for s in Semantics], default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_emit_smt)

    sp = sub.add_parser("cross-check", help="compare the native verifier with an SMT solver")
    pp(sp)
    sp.add_argument("--solver", help='command template, e.g. "z3 -smt2 {file}" (default: $SOLVER_CMD)')
    sp.add_argument("--timeout", type=float, default=30.0)
    sp.set_defaults(func=cmd_cross_check)

    sp = sub.add_parser("corpus", help="list, show or export a fixture corpus")
    sp.add_argument("--name", default="builtin")
    sp.add_argument("--show")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_corpus)
    return p


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(str(e).strip() or "usage error", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CliError, PddlError, PlanParseError, SolverError, OracleTransportError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
