"""Command-line interface.

Exit codes: 0 success, 1 usage or I/O error, 2 parse or type error,
3 proof rule error (including cost overflow), 4 failed side condition,
5 empirical violation (infeasible lifting, failed DP test).

Defaults can be overridden through the environment:

  DPC_RADIUS      Laplace truncation policy, e.g. ``auto(1e-9)`` or ``40``
  DPC_SLACK       additive delta slack for empirical validation
  DPC_MAX_LOOP    loop iteration cap of the interpreter
  DPC_BUDGET      implication enumeration budget
  DPC_RANGES      ``T=-1:3;S=-1:3`` ranges for implication checking
"""

from __future__ import annotations

import argparse
import ast
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .aprhl.checker import (
    CheckConfig, CheckedJudgment, CostOverflow, RuleError, SideConditionError, check_proof,
)
from .aprhl.implication import DEFAULT_BUDGET, ImplicationBudgetExceeded
from .aprhl.proof import parse_proof
from .aprhl.validate import DEFAULT_SLACK, ValidationConfig, validate_empirically
from .distribution import DistributionError, SubDistribution, dp_divergence, parse_value
from .interpreter import InterpConfig, Interpreter
from .lang.errors import EvalError, LangError, ParseError, TypeCheckError
from .lang.parser import parse_program
from .lang.printer import show_expr
from .lang.typing import typecheck
from .lifting import Relation, RelationError, approx_lifting, parse_relation
from .mechanisms.bundles import MechanismBundle
from .mechanisms.catalog import bundle_names, load_bundle
from .mechanisms.dptest import DPTestConfig, empirical_dp_test

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_RULE, EXIT_SIDE, EXIT_EMPIRICAL = range(6)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class Report:
    command: List[str]
    status: str
    exit_code: int = EXIT_OK
    payload: Dict[str, Any] = field(default_factory=dict)
    lines: List[str] = field(default_factory=list)
    duration: float = 0.0
    # human output is just the lines (pipeable data such as a distribution)
    bare: bool = False

    def render(self, fmt: str) -> str:
        if fmt == "json":
            doc = {"command": self.command, "status": self.status, "exit_code": self.exit_code,
                   "duration": round(self.duration, 6), **self.payload}
            return json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"
        if self.bare and self.exit_code == EXIT_OK:
            return "".join(line + "\n" for line in self.lines)
        out = list(self.lines)
        out.append(f"status: {self.status}")
        tol = self.payload.get("tolerances")
        if tol:
            out.append("tolerances: " + ", ".join(f"{k}={v}" for k, v in sorted(tol.items())))
        out.append(f"duration: {self.duration:.3f}s")
        return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------------

def _parse_range(text: str) -> Dict[str, tuple]:
    """``NAME=LO:HI`` or ``NAME=v1,v2,...``; several separated by ``;``."""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(";"))):
        if "=" not in part:
            raise UsageError(f"bad range {part!r}; expected NAME=LO:HI or NAME=v1,v2")
        name, spec = (s.strip() for s in part.split("=", 1))
        try:
            if ":" in spec:
                lo, hi = (int(x) for x in spec.split(":"))
                out[name] = tuple(range(lo, hi + 1))
            else:
                out[name] = tuple(parse_value(v.strip()) for v in spec.split(","))
        except (ValueError, SyntaxError) as err:
            raise UsageError(f"bad range {part!r}") from err
    return out


def _settings(args) -> Dict[str, Any]:
    env = os.environ
    radius = args.radius or env.get("DPC_RADIUS", "auto(1e-9)")
    try:
        radius = int(radius)
    except ValueError:
        pass
    try:
        slack = float(args.slack if args.slack is not None else env.get("DPC_SLACK", DEFAULT_SLACK))
        max_loop = int(args.max_loop if args.max_loop is not None else env.get("DPC_MAX_LOOP", 64))
        budget = int(args.budget if args.budget is not None else env.get("DPC_BUDGET", DEFAULT_BUDGET))
    except ValueError as err:
        raise UsageError(str(err)) from err
    ranges = _parse_range(env.get("DPC_RANGES", ""))
    for r in args.range or ():
        ranges.update(_parse_range(r))
    try:
        InterpConfig(laplace_radius=radius, max_loop_iterations=max_loop)
    except ValueError as err:
        raise UsageError(str(err)) from err
    return dict(radius=radius, slack=slack, max_loop=max_loop, budget=budget,
                ranges=ranges, jobs=max(1, args.jobs))


def _tolerances(s: Dict[str, Any]) -> Dict[str, Any]:
    return {"laplace_radius": s["radius"], "slack": s["slack"],
            "max_loop_iterations": s["max_loop"], "implication_budget": s["budget"],
            "ranges": {k: list(v) for k, v in sorted(s["ranges"].items())}}


def _check_config(s, extra: Optional[Dict[str, Sequence]] = None) -> CheckConfig:
    ranges = dict(extra or {})
    ranges.update(s["ranges"])
    return CheckConfig(ranges=ranges, budget=s["budget"])


def _validation_config(s) -> ValidationConfig:
    return ValidationConfig(laplace_radius=s["radius"], max_loop_iterations=s["max_loop"],
                            slack=s["slack"], jobs=s["jobs"])


def _dptest_config(s) -> DPTestConfig:
    return DPTestConfig(laplace_radius=s["radius"], max_loop_iterations=s["max_loop"],
                        jobs=s["jobs"])


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror}") from err


def _load_program(path: str):
    p = parse_program(_read(path))
    typecheck(p)
    return p


def _load_dist(path: str) -> SubDistribution:
    try:
        return SubDistribution.from_text(_read(path))
    except DistributionError as err:
        raise ParseError(f"{path}: {err}") from err


def _show_memory(m: Dict[str, Any]) -> str:
    return "{" + ", ".join(f"{k}={v}" for k, v in m.items()) + "}"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _judgment_payload(j: CheckedJudgment, cfg: CheckConfig) -> Dict[str, Any]:
    return {
        "pre": show_expr(j.pre), "post": show_expr(j.post),
        "cost": {"eps": str(j.cost.eps), "delta": str(j.cost.delta), "text": str(j.cost)},
        "claimed": str(j.claimed), "implications": j.implications,
        "bounds": {"ranges": {k: [min(v), max(v)] if all(isinstance(x, int) for x in v) else list(v)
                              for k, v in sorted(cfg.ranges.items())},
                   "default_int": [min(cfg.default_int), max(cfg.default_int)],
                   "lvar_probe": [min(cfg.lvar_probe), max(cfg.lvar_probe)],
                   "budget": cfg.budget, "validity": "bounded"},
    }


def _proof_error(rep: Report, err) -> Report:
    rep.payload["error"] = {"kind": type(err).__name__, "path": err.path, "message": err.message}
    rep.lines.append(f"error: {err}")
    if isinstance(err, SideConditionError):
        rep.status, rep.exit_code = "side-condition-failed", EXIT_SIDE
        if err.counterexample:
            rep.payload["error"]["counterexample"] = err.counterexample
            rep.lines.append("counterexample: " + ", ".join(
                f"{k}={v}" for k, v in err.counterexample.items()))
    else:
        rep.status, rep.exit_code = "rule-error", EXIT_RULE
        if isinstance(err, CostOverflow):
            rep.payload["error"].update(derived=str(err.actual), claimed=str(err.claimed),
                                        rule=err.rule)
    return rep


def _check_and_validate(rep: Report, program, proof, cfg: CheckConfig, s,
                        eps_values: Sequence[float]) -> Report:
    try:
        j = check_proof(proof, program, cfg)
    except (RuleError, SideConditionError, CostOverflow) as err:
        return _proof_error(rep, err)
    rep.payload["judgment"] = _judgment_payload(j, cfg)
    rep.lines += [f"pre:  {show_expr(j.pre)}", f"post: {show_expr(j.post)}",
                  f"cost: {j.cost}",
                  f"side conditions: {j.implications} implications, bounded validity"]
    rep.status = "checked"
    reports = []
    for e in eps_values:
        v = validate_empirically(j, e, _validation_config(s))
        reports.append({"eps": e, "pairs": v.pairs, "ok": v.ok,
                        "violations": [x.describe() for x in v.violations]})
        rep.lines.append(f"validation: {v.summary()}")
        for x in v.violations[:5]:
            rep.lines.append(f"  infeasible: {x.describe()}")
        if not v.ok:
            rep.status, rep.exit_code = "validation-failed", EXIT_EMPIRICAL
    if reports:
        rep.payload["validation"] = reports
    return rep


def cmd_check(args, s, rep: Report) -> Report:
    program = _load_program(args.program)
    proof = parse_proof(_read(args.proof))
    eps_values = args.eps if args.validate else []
    if args.validate and not eps_values:
        raise UsageError("--validate needs at least one --eps value")
    return _check_and_validate(rep, program, proof, _check_config(s), s, eps_values)


def _assignment(items: Sequence[str]) -> Dict[str, Any]:
    out = {}
    for it in items or ():
        if "=" not in it:
            raise UsageError(f"bad assignment {it!r}; expected NAME=VALUE")
        name, val = it.split("=", 1)
        try:
            v = ast.literal_eval(val.strip())
        except (ValueError, SyntaxError) as err:
            raise UsageError(f"bad value in {it!r}") from err
        out[name.strip()] = v
    return out


def cmd_run(args, s, rep: Report) -> Report:
    program = _load_program(args.program)
    icfg = InterpConfig(eps=args.eps, max_loop_iterations=s["max_loop"], laplace_radius=s["radius"])
    interp = Interpreter(program.decls, icfg)
    m0 = interp.memory(_assignment(args.set))
    dist = interp.run_projected(program.body, m0, program.returns)
    if len(program.returns) == 1:
        dist = dist.map(lambda t: t[0])
    rep.status = "ok"
    rep.payload.update(mass=dist.mass(),
                       distribution=[[repr(v), p] for v, p in dist.items()])
    rep.lines += dist.to_text().splitlines()
    rep.bare = True
    return rep


def cmd_divergence(args, s, rep: Report) -> Report:
    mu1, mu2 = _load_dist(args.dist1), _load_dist(args.dist2)
    d = dp_divergence(mu1, mu2, args.eps)
    rep.status = "ok"
    rep.payload["divergence"] = d
    rep.lines.append(f"{d:.17g}")
    rep.bare = True
    return rep


def _relation(spec: str) -> Relation:
    try:
        return parse_relation(spec)
    except RelationError:
        pass
    if not Path(spec).exists():
        raise UsageError(f"relation {spec!r} is neither a built-in nor a pair file")
    pairs = []
    for lineno, line in enumerate(_read(spec).splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        try:
            a, b = (parse_value(x.strip()) for x in parts)
        except (ValueError, SyntaxError) as err:
            raise ParseError(f"{spec}: line {lineno}: expected two values") from err
        pairs.append((a, b))
    return Relation.explicit(pairs, Path(spec).name)


def cmd_lifting(args, s, rep: Report) -> Report:
    mu1, mu2 = _load_dist(args.dist1), _load_dist(args.dist2)
    rel = _relation(args.relation)
    w = approx_lifting(mu1, mu2, rel, args.eps, args.delta)
    rep.payload.update(relation=rel.name, eps=args.eps, delta=args.delta, feasible=w is not None)
    if w is None:
        rep.status, rep.exit_code = "INFEASIBLE", EXIT_EMPIRICAL
        return rep
    rep.status = "FEASIBLE"
    if args.witness:
        base = Path(args.witness)
        for side, dist in (("left", w.left), ("right", w.right)):
            path = base.with_name(f"{base.name}.{side}.dist")
            path.write_text(dist.to_text())
            rep.lines.append(f"witness {side}: {path}")
    return rep


def _dptest_payload(r) -> Dict[str, Any]:
    return {"verdict": r.verdict, "max_divergence": r.max_divergence, "eps": r.eps,
            "delta": r.delta, "slack": r.slack, "pairs": r.pairs,
            "witness": None if r.witness is None else [r.witness[0], r.witness[1]]}


def _dptest_report(rep: Report, r) -> Report:
    rep.payload["dptest"] = _dptest_payload(r)
    rep.lines.append(f"dptest: {r.verdict}: max divergence {r.max_divergence:.6g} over "
                     f"{r.pairs} pairs at eps={r.eps:g}, bound {r.delta:g} + {r.slack:.3g}")
    if r.witness is not None:
        rep.lines.append(f"witness: {_show_memory(r.witness[0])} vs {_show_memory(r.witness[1])}")
    if not r.passed:
        rep.exit_code = EXIT_EMPIRICAL
    return rep


def cmd_dptest(args, s, rep: Report) -> Report:
    program = _load_program(args.program)
    r = empirical_dp_test(program, args.adjacency, args.eps, _dptest_config(s),
                          claim_eps=args.claim_eps, delta=args.delta)
    rep.status = r.verdict
    return _dptest_report(rep, r)


def _demo(bundle: MechanismBundle, args, s, rep: Report) -> Report:
    rep.payload["bundle"] = {"name": bundle.name, "description": bundle.description,
                             "claimed": str(bundle.claimed_cost),
                             "expectation": bundle.expectation}
    rep.lines.append(f"{bundle.name}: {bundle.description}")
    eps = args.eps or [1.0]
    if bundle.proof is not None:
        rep = _check_and_validate(rep, bundle.program, bundle.proof,
                                  _check_config(s, bundle.ranges), s,
                                  [] if bundle.expectation == "rejected" else eps)
        if rep.exit_code != EXIT_OK:
            return rep
    else:
        rep.lines.append("no proof script; testing the program directly")
    claim = float(bundle.claimed_cost.eps)
    r = empirical_dp_test(bundle.program, bundle.adjacency, eps[0], _dptest_config(s),
                          claim_eps=claim * eps[0], delta=float(bundle.claimed_cost.delta))
    rep = _dptest_report(rep, r)
    rep.status = r.verdict if bundle.proof is None else rep.status
    if not r.passed:
        rep.status = "FAIL"
    return rep


def cmd_demo(args, s, rep: Report) -> Report:
    try:
        bundle = load_bundle(args.name)
    except KeyError as err:
        raise UsageError(err.args[0]) from err
    return _demo(bundle, args, s, rep)


def cmd_list(args, s, rep: Report) -> Report:
    rep.status = "ok"
    items = []
    for name in bundle_names():
        b = load_bundle(name)
        items.append({"name": name, "claimed": str(b.claimed_cost), "proof": b.proof is not None,
                      "expectation": b.expectation, "description": b.description})
        rep.lines.append(f"{name:<30} {str(b.claimed_cost):<12} {b.expectation:<10} {b.description}")
    rep.payload["mechanisms"] = items
    return rep


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("human", "json"), default="human")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--radius", help="Laplace truncation: N or auto(TOL) [env DPC_RADIUS]")
    common.add_argument("--slack", type=float, help="additive delta slack [env DPC_SLACK]")
    common.add_argument("--max-loop", type=int, help="loop iteration cap [env DPC_MAX_LOOP]")
    common.add_argument("--budget", type=int, help="implication budget [env DPC_BUDGET]")
    common.add_argument("--range", action="append", metavar="NAME=LO:HI",
                        help="implication range for a variable [env DPC_RANGES]")

    ap = _Parser(prog="dpcoupling", description="Coupling proofs of differential privacy.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="check a proof script")
    p.add_argument("program")
    p.add_argument("proof")
    p.add_argument("--validate", action="store_true", help="also validate empirically")
    p.add_argument("--eps", type=float, action="append", help="epsilon for validation")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("run", parents=[common], help="print a program's output distribution")
    p.add_argument("program")
    p.add_argument("--set", action="append", metavar="NAME=VALUE")
    p.add_argument("--eps", type=float, default=1.0)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("divergence", parents=[common], help="eps-divergence of two distributions")
    p.add_argument("dist1")
    p.add_argument("dist2")
    p.add_argument("eps", type=float)
    p.set_defaults(fn=cmd_divergence)

    p = sub.add_parser("lifting", parents=[common], help="decide an approximate lifting")
    p.add_argument("dist1")
    p.add_argument("dist2")
    p.add_argument("relation", help="eq, shift:k, diff:c, impl:b or a pair file")
    p.add_argument("eps", type=float)
    p.add_argument("delta", type=float)
    p.add_argument("--witness", metavar="PREFIX", help="write witness distributions")
    p.set_defaults(fn=cmd_lifting)

    p = sub.add_parser("dptest", parents=[common], help="exhaustive divergence test")
    p.add_argument("program")
    p.add_argument("--eps", type=float, default=1.0, help="value of the program's eps")
    p.add_argument("--claim-eps", type=float, help="epsilon of the claim (default --eps)")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--adjacency", help="relational assertion over the inputs")
    p.set_defaults(fn=cmd_dptest)

    p = sub.add_parser("demo", parents=[common], help="check and test a bundled mechanism")
    p.add_argument("name")
    p.add_argument("--eps", type=float, action="append")
    p.set_defaults(fn=cmd_demo)

    p = sub.add_parser("list-mechanisms", parents=[common], help="list bundled mechanisms")
    p.set_defaults(fn=cmd_list)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    rep = Report(command=argv, status="error")
    start = time.perf_counter()
    try:
        s = _settings(args)
        rep.payload["tolerances"] = _tolerances(s)
        rep = args.fn(args, s, rep)
    except UsageError as err:
        rep.status, rep.exit_code = "usage-error", EXIT_USAGE
        rep.lines.append(f"error: {err}")
    except (ParseError, TypeCheckError) as err:
        rep.status, rep.exit_code = "parse-error", EXIT_PARSE
        rep.lines.append(f"error: {err}")
    except ImplicationBudgetExceeded as err:
        rep.status, rep.exit_code = "side-condition-failed", EXIT_SIDE
        rep.lines.append(f"error: {err}")
    except (EvalError, LangError) as err:
        rep.status, rep.exit_code = "error", EXIT_USAGE
        rep.lines.append(f"error: {err}")
    if rep.exit_code and "error" not in rep.payload and rep.lines:
        rep.payload["error"] = {"message": rep.lines[-1]}
    rep.duration = time.perf_counter() - start
    sys.stdout.write(rep.render(args.format))
    return rep.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
