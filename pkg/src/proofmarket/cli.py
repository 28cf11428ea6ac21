"""Command-line front end.

Every subcommand prints one JSON document by default; ``--format csv``
prints (or writes with ``--out``) a table and ``--format text`` prints
``key: value`` lines.

Exit codes: 0 success, 2 usage, 3 invalid parameters or input, 4 instance
too large, 5 numerical failure, 6 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np

from . import analysis
from .adversary import InstanceTooLarge, exact_loss, ic_check, inner_lp_oracle
from .core import ShapeKind, StrategyProfile, canonicalize_profile, validate_params
from .lower_bound import ShapeOptimum, minimize_g
from .numerics import RootError
from .payment import implementable_designated, implementable_symmetric
from .rules import loads_rule, rule_to_dict

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_TOO_LARGE = 4
EXIT_COMPUTE = 5
EXIT_IO = 6


class UsageError(Exception):
    pass


@dataclass
class CommandResult:
    exit_code: int
    document: Any = None
    output: str = ""
    artifacts: list[str] = field(default_factory=list)
    error: str = ""


# ----------------------------------------------------------------------------
# serialisation helpers


def _plain(obj: Any) -> Any:
    """Convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, Enum):
        return str(v.value)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def export_csv(rows: Sequence[dict], path: Optional[str], columns: Sequence[str]) -> str:
    """Comma-separated table with a header row; writes ``path`` when given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(text)
    return text


def _shape_doc(opt: ShapeOptimum) -> dict:
    return {"kind": opt.kind.value, "k": opt.shape.k, "s": opt.shape.s,
            "honest_committee": opt.honest_committee, "loss": opt.loss,
            "constraint_residual": opt.constraint_residual,
            "profile": list(opt.expand().s) if opt.feasible else None}


def _floats(text: str, name: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"{name} must be a comma-separated list of numbers") from exc


def _need(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"missing required flag(s): {' '.join(missing)}")


def _params(args):
    _need(args, "h", "n", "C")
    return validate_params(args.h, args.n, args.C, float(_floats(args.B, "--B")[0]) if args.B else 0.0)


def _profile(text: Optional[str], n: int) -> StrategyProfile:
    if text is None:
        raise UsageError("missing required flag: --profile")
    prof = canonicalize_profile(_floats(text, "--profile"))
    if prof.n != n:
        raise ValueError(f"profile has {prof.n} entries, expected {n}")
    return prof


# ----------------------------------------------------------------------------
# subcommands; each returns (document, rows, columns)


def cmd_minimize(args):
    p = _params(args)
    opt = minimize_g(p)
    doc = {"params": _params_doc(p), "optimum": _shape_doc(opt)}
    row = {"h": p.h, "n": p.n, "C": p.C, "B": p.B, **{k: v for k, v in doc["optimum"].items() if k != "profile"}}
    return doc, [row], list(row)


def _params_doc(p):
    return {"h": p.h, "n": p.n, "a": p.a, "C": p.C, "B": p.B, "tau": p.tau}


def cmd_implement(args):
    p = _params(args)
    d_opt, d_rule = implementable_designated(p)
    s_opt, s_rule = implementable_symmetric(p)
    best = "symmetric" if s_opt.loss < d_opt.loss else "designated"
    doc = {"params": _params_doc(p), "best": best,
           "designated": {**_shape_doc(d_opt), "rule": rule_to_dict(d_rule)},
           "symmetric": {**_shape_doc(s_opt), "rule": rule_to_dict(s_rule) if s_rule else None}}
    rows = [{"shape": name, **{k: v for k, v in doc[name].items() if k not in ("rule", "profile")}}
            for name in ("designated", "symmetric")]
    return doc, rows, list(rows[0])


def cmd_loss(args):
    p = _params(args)
    if args.rule is None:
        raise UsageError("missing required flag: --rule")
    with open(args.rule, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc_in = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"rule file is not valid JSON: {exc.msg}") from exc
    profile_text = args.profile
    if isinstance(doc_in, dict) and "best" in doc_in:
        entry = doc_in[args.which or doc_in["best"]]
        if entry is None or entry.get("rule") is None:
            raise ValueError("selected rule is absent from the file")
        rule = loads_rule(json.dumps(entry["rule"]))
        if profile_text is None:
            profile_text = ",".join(repr(x) for x in entry["profile"])
    else:
        rule = loads_rule(text)
    prof = _profile(profile_text, p.n)
    rep = exact_loss(rule, prof, p)
    ic = ic_check(rule, prof)
    doc = {"params": _params_doc(p), "profile": list(prof.s), "loss": rep.loss,
           "argmax_corruption": list(rep.argmax_corruption),
           "argmax_delivery": list(rep.argmax_delivery),
           "ic_ok": ic.ok, "ic_max_residual": ic.max_residual}
    row = {k: v for k, v in doc.items() if k not in ("params", "profile")}
    return doc, [row], list(row)


def cmd_oracle(args):
    p = _params(args)
    prof = _profile(args.profile, p.n)
    t, table = inner_lp_oracle(prof, p)
    doc = {"params": _params_doc(p), "profile": list(prof.s), "t": t, "rule": rule_to_dict(table)}
    return doc, [{"t": t}], ["t"]


def cmd_transition(args):
    _need(args, "h", "n")
    B = _floats(args.B, "--B")[0] if args.B else 0.0
    tr = analysis.transition_ct_discrete(args.h, args.n, B)
    doc = {"h": args.h, "n": args.n, "B": B, "C_t": tr.C_t, "method": tr.method,
           "bracket": list(tr.bracket),
           "from_shape": _shape_doc(tr.from_shape) if tr.from_shape else None,
           "to_shape": _shape_doc(tr.to_shape) if tr.to_shape else None}
    return doc, [{"h": args.h, "n": args.n, "B": B, "C_t": tr.C_t}], ["h", "n", "B", "C_t"]


def cmd_transition_limit(args):
    _need(args, "tau")
    B = _floats(args.B, "--B")[0] if args.B else 0.0
    sol = analysis.transition_ct_limit(args.tau, B)
    doc = {"tau": sol.tau, "B": sol.B, "x": sol.x, "C_t": sol.C_t, "t_d": sol.t_d,
           "t_s": sol.t_s, "beta": sol.beta, "residual": sol.residual}
    return doc, [doc], list(doc)


def cmd_regimes(args):
    _need(args, "h", "n")
    C_max = args.C if args.C is not None else 100.0
    B = _floats(args.B, "--B")[0] if args.B else 0.0
    bounds = analysis.regime_boundaries(args.h, args.n, C_max, B)
    rows = [{"C": b.C, "before": b.before.value, "after": b.after.value} for b in bounds]
    return {"h": args.h, "n": args.n, "B": B, "C_max": C_max, "boundaries": rows}, rows, ["C", "before", "after"]


def cmd_stake_table(args):
    if args.h is not None or args.n is not None:
        _need(args, "h", "n", "C")
        Bs = _floats(args.B, "--B") if args.B else [0.0]
        scenarios = [(args.h, args.n, args.C, Bs)]
    else:
        scenarios = analysis.STAKE_TABLE_SCENARIOS
    rows = [{"n": r.n, "a": r.a, "C": r.C, "B": r.B, "B_over_C": r.stake_ratio,
             "designated": r.designated, "symmetric": r.symmetric,
             "reduction_pct": r.reduction_pct}
            for r in analysis.stake_sensitivity_table(scenarios)]
    cols = ["n", "a", "C", "B", "B_over_C", "designated", "symmetric", "reduction_pct"]
    return {"rows": rows}, rows, cols


def cmd_counterexamples(args):
    checks = analysis.counterexample_suite()
    rows = [{"case": c.case, "label": c.label, "expected": c.expected, "actual": c.actual,
             "passed": c.passed} for c in checks]
    doc = {"checks": rows, "passed": sum(c.passed for c in checks), "total": len(checks)}
    return doc, rows, ["case", "label", "expected", "actual", "passed"]


def cmd_sweep_ct(args):
    grid = args.grid or 19
    taus = [i / (grid + 1) for i in range(1, grid + 1)]
    Bs = _floats(args.B, "--B") if args.B else [0.0]
    rows = analysis.sweep_ct(taus, Bs, args.n)
    return {"rows": rows}, rows, ["tau", "B", "C_t"]


def cmd_sweep_loss(args):
    grid = args.grid or 25
    C_max = args.C if args.C is not None else 1e6
    if C_max <= 2.0:
        raise ValueError("--C (largest penalty) must exceed 2")
    Cs = list(np.geomspace(2.0, C_max, grid)) if grid > 1 else [C_max]
    taus = _floats(args.tau_list, "--tau") if args.tau_list else [0.5]
    B = _floats(args.B, "--B")[0] if args.B else 0.0
    rows = analysis.sweep_loss([float(c) for c in Cs], taus, B, args.n or 100)
    return {"rows": rows}, rows, ["C", "tau", "B", "loss", "shape"]


COMMANDS = {
    "minimize": (cmd_minimize, "lower-bound minimiser and its shape"),
    "implement": (cmd_implement, "implementable designated and symmetric optima with rules"),
    "loss": (cmd_loss, "exact worst-case loss of a rule file against a profile"),
    "oracle": (cmd_oracle, "LP over all payment tables for a profile (n <= 8)"),
    "transition": (cmd_transition, "discrete transition value C_t"),
    "transition-limit": (cmd_transition_limit, "continuous-limit transition value"),
    "regimes": (cmd_regimes, "phase boundaries in C up to --C"),
    "stake-table": (cmd_stake_table, "stake sensitivity table"),
    "counterexamples": (cmd_counterexamples, "structural counter-example suite"),
    "sweep-ct": (cmd_sweep_ct, "C_t over a tau grid (CSV columns tau,B,C_t)"),
    "sweep-loss": (cmd_sweep_loss, "optimal loss over a C grid (CSV columns C,tau,B,loss,shape)"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="proofmarket", description="Proof procurement mechanism workbench.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--h", type=int)
        sp.add_argument("--n", type=int)
        sp.add_argument("--C", type=float)
        sp.add_argument("--B", type=str, help="stake (a comma list where several are accepted)")
        if name == "sweep-loss":
            sp.add_argument("--tau", dest="tau_list", type=str, help="comma list of honest fractions")
        else:
            sp.add_argument("--tau", type=float)
        sp.add_argument("--grid", type=int)
        sp.add_argument("--out", type=str)
        sp.add_argument("--format", choices=("json", "csv", "text"), default="json")
        if name in ("loss", "oracle"):
            sp.add_argument("--profile", type=str, help="comma-separated probabilities")
        if name == "loss":
            sp.add_argument("--rule", type=str, help="rule file (a rule or `implement` output)")
            sp.add_argument("--which", choices=("designated", "symmetric"))
    return parser


def _render(fmt: str, doc, rows, cols) -> str:
    if fmt == "csv":
        return export_csv(rows, None, cols)
    if fmt == "text":
        lines = []
        for r in rows:
            lines.append("  ".join(f"{c}: {_cell(r.get(c))}" for c in cols))
        return "\n".join(lines) + ("\n" if lines else "")
    return json.dumps(_plain(doc), sort_keys=True, indent=2) + "\n"


def run(argv: Sequence[str]) -> CommandResult:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        if args.grid is not None and args.grid < 1:
            raise UsageError("--grid must be at least 1")
        doc, rows, cols = COMMANDS[args.command][0](args)
        text = _render(args.format, doc, rows, cols)
        artifacts = []
        if args.out:
            with open(args.out, "w", encoding="ascii", newline="") as fh:
                fh.write(text)
            artifacts.append(args.out)
            text = ""
        return CommandResult(EXIT_OK, doc, text, artifacts)
    except UsageError as exc:
        return CommandResult(EXIT_USAGE, error=f"usage error: {exc}")
    except InstanceTooLarge as exc:
        return CommandResult(EXIT_TOO_LARGE, error=f"instance too large: {exc}")
    except (RootError, ArithmeticError, RuntimeError) as exc:
        return CommandResult(EXIT_COMPUTE, error=f"computation failed: {exc}")
    except OSError as exc:
        return CommandResult(EXIT_IO, error=f"I/O error: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "))
    except ValueError as exc:
        return CommandResult(EXIT_INVALID, error=f"invalid input: {exc}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    res = run(sys.argv[1:] if argv is None else argv)
    if res.output:
        sys.stdout.write(res.output)
    if res.error:
        print(res.error.splitlines()[0], file=sys.stderr)
    return res.exit_code
