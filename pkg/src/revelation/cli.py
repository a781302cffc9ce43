"""Command-line entry point: ``revelation <command> ...``.

Exit codes: 0 success (every property holds), 1 a property failed (witnesses
are printed), 2 usage, parse or validation error.  ``--report PATH`` writes a
machine-readable JSON report with every rational rendered as ``"n/d"``.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from .errors import (
    IncompatibleReportsError,
    InstanceFormatError,
    InstanceTooLargeError,
    RevelationError,
    SpaceValidationError,
)
from .game import (
    MyopicStrategy,
    RevelationSequence,
    TieBreak,
    best_response_dp,
    best_response_witness,
    best_responses,
    play,
)
from .mechanisms import MechanismKind, audit_mechanism, mech_dm, mech_expert
from .oracle import InstanceSpec, random_instance, verify_instance
from .serialization import REPORT_SCHEMA, instance_digest, load_instance, save_instance, to_jsonable
from .spaces import Contract, Instance, Partition, expected_value

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(v: Any) -> str:
    if isinstance(v, (Partition, Contract, RevelationSequence, Fraction)):
        return str(v)
    if isinstance(v, tuple):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    if isinstance(v, list):
        return "[" + "; ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, dict):
        return ", ".join(f"{k}={_fmt(x)}" for k, x in v.items())
    return str(v)


def _resolve(instance: Instance, name: str, flag: str) -> Partition:
    try:
        return instance.named(name)
    except KeyError as exc:
        raise UsageError(f"{flag}: {exc.args[0]}") from None


def _load(args) -> Instance:
    inst = load_instance(args.file)
    args.instance_digest = instance_digest(inst)
    return inst


def cmd_validate(args, out) -> tuple[int, dict]:
    inst = _load(args)
    g = inst.ground
    levels = len(inst.interval())
    print(f"valid: {len(g.states)} states, {len(g.actions)} actions, {levels} awareness levels", file=out)
    print(f"dm partition: {inst.root}", file=out)
    for name, p in sorted(inst.partitions.items()):
        print(f"partition {name}: {p}", file=out)
    print(f"digest: {instance_digest(inst)}", file=out)
    return EXIT_OK, {"states": list(g.states), "actions": list(g.actions), "awareness_levels": levels}


def _solve_game(inst: Instance, args, out) -> dict:
    tb = TieBreak(args.tiebreak)
    expert = _resolve(inst, args.expert, "--expert")
    strategy = MyopicStrategy(tb)
    seq, _ = best_response_witness(inst, strategy, expert)
    t = play(inst, strategy, seq, expert_partition=expert)
    print(f"mode: game, tie-break {tb.value}, expert {expert}", file=out)
    rounds = []
    for k, (p, c) in enumerate(zip(seq.chain, t.proposals)):
        space = inst.space(p)
        vd, ve = expected_value(space, c, "d"), expected_value(space, c, "e")
        print(f"round {k}: revealed {p}  proposal {c}  V_d={vd}  V_e={ve}", file=out)
        rounds.append({"partition": p, "proposal": c, "value_d": vd, "value_e": ve})
    print(f"final: {t.final_contract}  V_d={t.payoff_d}  V_e={t.payoff_e}  rent={t.rent}", file=out)
    return {"mode": "game", "tiebreak": tb, "expert": expert, "rounds": rounds,
            "final_contract": t.final_contract, "payoff_d": t.payoff_d, "payoff_e": t.payoff_e,
            "rent": t.rent}


def cmd_solve(args, out) -> tuple[int, dict]:
    inst = _load(args)
    if args.mode == "game":
        return EXIT_OK, _solve_game(inst, args, out)
    p_d = _resolve(inst, args.dm, "--dm")
    p_e = _resolve(inst, args.expert, "--expert")
    mech = mech_dm if args.mode == "mech-d" else mech_expert
    try:
        o = mech(inst, p_d, p_e)
    except IncompatibleReportsError as exc:
        raise UsageError(str(exc)) from None
    print(f"mode: {args.mode}, reports dm {p_d}, expert {p_e}", file=out)
    print(f"outcome on {o.join}: {o.contract}  V_d={o.value_d}  V_e={o.value_e}", file=out)
    result = {"mode": args.mode, "report_d": p_d, "report_e": p_e, "join": o.join,
              "contract": o.contract, "value_d": o.value_d, "value_e": o.value_e}
    if o.sequence is not None:
        result["sequence"] = o.sequence
    return EXIT_OK, result


def cmd_best_response(args, out) -> tuple[int, dict]:
    inst = _load(args)
    tb = TieBreak(args.tiebreak)
    expert = _resolve(inst, args.expert, "--expert")
    strategy = MyopicStrategy(tb)
    seqs = best_responses(inst, strategy, expert)
    value = best_response_dp(inst, strategy, expert)
    print(f"expert {expert}, tie-break {tb.value}: best value V_e={value}", file=out)
    for s in seqs:
        print(f"  {s}", file=out)
    return EXIT_OK, {"tiebreak": tb, "expert": expert, "value_e": value, "sequences": seqs}


def _print_failures(witnesses: list[dict], out) -> None:
    for w in witnesses:
        print(f"    witness: {_fmt(w)}", file=out)


def cmd_verify(args, out) -> tuple[int, dict]:
    inst = _load(args)
    rep = verify_instance(inst, seed=args.seed)
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} (checked {c.checked})", file=out)
        if not c.passed:
            _print_failures(c.witnesses, out)
    n_fail = len(rep.failures())
    print(f"{len(rep.checks) - n_fail}/{len(rep.checks)} checks passed", file=out)
    return (EXIT_OK if rep.ok else EXIT_FAIL), {"checks": rep.checks, "ok": rep.ok}


def cmd_audit(args, out) -> tuple[int, dict]:
    inst = _load(args)
    kind = MechanismKind.DM_OPTIMAL if args.mech == "dm" else MechanismKind.EXPERT_OPTIMAL
    rep = audit_mechanism(inst, kind)
    print(f"mechanism {kind.value}: {rep.pairs} comparable report pairs", file=out)
    for name in ("ir", "ic_d", "ic_e", "po"):
        ok = getattr(rep, name)
        print(f"{'PASS' if ok else 'FAIL'} {name}", file=out)
        if not ok:
            _print_failures([w for w in rep.witnesses if w["check"] == name], out)
    return (EXIT_OK if rep.ok else EXIT_FAIL), {"mechanism": kind, "audit": rep, "ok": rep.ok}


def cmd_generate(args, out) -> tuple[int, dict]:
    spec = InstanceSpec(seed=args.seed, n_states=args.states, n_actions=args.actions,
                        value_grid=tuple(range(args.grid_max + 1)))
    try:
        inst = random_instance(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    save_instance(inst, args.out)
    digest = instance_digest(inst)
    print(f"wrote {args.out} ({args.states} states, {args.actions} actions, seed {args.seed})", file=out)
    print(f"digest: {digest}", file=out)
    return EXIT_OK, {"seed": args.seed, "out": str(args.out), "digest": digest}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--report", type=Path, help="write a machine-readable JSON report here")

    parser = _Parser(prog="revelation", description="Revelation games under asymmetric awareness.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    tiebreaks = [t.value for t in TieBreak]

    p = sub.add_parser("validate", parents=[common], help="check an instance file")
    p.add_argument("file", type=Path)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", parents=[common], help="play the game or run a mechanism")
    p.add_argument("file", type=Path)
    p.add_argument("--mode", choices=["game", "mech-d", "mech-e"], default="game")
    p.add_argument("--tiebreak", choices=tiebreaks, default=TieBreak.EXPERT_MIN.value)
    p.add_argument("--expert", default="full", help="expert partition name (default: full)")
    p.add_argument("--dm", default="dm", help="decision maker's report for mechanisms (default: dm)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("best-response", parents=[common], help="list the expert's best responses")
    p.add_argument("file", type=Path)
    p.add_argument("--tiebreak", choices=tiebreaks, default=TieBreak.EXPERT_MIN.value)
    p.add_argument("--expert", default="full")
    p.set_defaults(func=cmd_best_response)

    p = sub.add_parser("verify", parents=[common], help="run the full property suite")
    p.add_argument("file", type=Path)
    p.add_argument("--seed", type=int, default=0, help="seed for sampled deviations")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("audit", parents=[common], help="audit a boundary mechanism")
    p.add_argument("file", type=Path)
    p.add_argument("--mech", choices=["dm", "expert"], required=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("generate", parents=[common], help="write a seeded random instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--states", type=int, default=3)
    p.add_argument("--actions", type=int, default=3)
    p.add_argument("--grid-max", type=int, default=6, help="payoffs are drawn from 0..GRID_MAX")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def _write_report(path: Path, argv: Sequence[str], args, code: int, result: dict | None, error: str | None):
    digest = getattr(args, "instance_digest", None)
    if digest is None and result and "digest" in result:
        digest = result["digest"]
    report = {
        "schema": REPORT_SCHEMA,
        "command": list(argv),
        "instance_digest": digest,
        "status": {EXIT_OK: "ok", EXIT_FAIL: "fail"}.get(code, "error"),
        "exit_code": code,
        "result": to_jsonable(result),
        "error": error,
    }
    path.write_text(json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def run_command(argv: Sequence[str], out=None, err=None) -> tuple[int, dict | None]:
    """Run one command; returns the exit code and the (unserialised) result."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    argv = list(argv)
    args = None
    result, error = None, None
    try:
        args = build_parser().parse_args(argv)
        code, result = args.func(args, out)
    except UsageError as exc:
        code, error = EXIT_USAGE, str(exc)
        print(f"usage error: {exc}", file=err)
    except InstanceFormatError as exc:
        code, error = EXIT_USAGE, str(exc)
        print(f"parse error: {exc}", file=err)
    except SpaceValidationError as exc:
        code, error = EXIT_USAGE, str(exc)
        print("validation error:", file=err)
        for msg in exc.errors:
            print(f"  {msg}", file=err)
    except InstanceTooLargeError as exc:
        code, error = EXIT_USAGE, str(exc)
        print(f"instance too large: {exc}", file=err)
    except (OSError, RevelationError) as exc:
        code, error = EXIT_USAGE, str(exc)
        print(f"error: {exc}", file=err)
    except SystemExit as exc:  # --help
        return (exc.code if isinstance(exc.code, int) else EXIT_OK), None
    report_path = getattr(args, "report", None) if args is not None else None
    if report_path is not None:
        _write_report(report_path, argv, args, code, result, error)
    return code, result


def main(argv: Sequence[str] | None = None) -> int:
    code, _ = run_command(sys.argv[1:] if argv is None else argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
