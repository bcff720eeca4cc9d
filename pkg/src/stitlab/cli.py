"""``stit``: batch front end to the library.

Exit status is 0 on success, 1 on a negative verdict (false, unsatisfiable,
countermodel, violation, nothing found) and 2 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import frames
from .bisim import (PointedModel, is_bisimulation, load_relation, max_bisimulation)
from .derivations import (derive_axiom4, derive_box_to_stit_box,
                          derive_counterexample, derive_s_counterexample)
from .frames import (Satisfiable, ValidUpTo, check_independence, evaluate, frame_problems,
                     load_frame, sat_search, validity_up_to)
from .paperlab import (build_B, build_M, build_S, build_S_prime,
                       certify_negative, certify_strong_negative, interpolant_search,
                       is_separable_bounded)
from .proof import BOX, check_proof, format_script, parse_script
from .semantics import load_model, satisfies, save_model, truth_set, validate
from .syntax import desugar, modal_depth, parse, size, to_text, vocabulary


class UsageError(Exception):
    pass


def _emit(args, data: dict, text: str) -> None:
    if args.json:
        print(json.dumps(data, indent=1, sort_keys=True))
    else:
        print(text)


def _formula(args, k: int = 0):
    if not args.formula or len(args.formula) <= k:
        raise UsageError(f"--formula is required{' twice' if k else ''}")
    return parse(args.formula[k])


def _vars(args, default=()):
    if args.vars is None:
        return sorted(default)
    return sorted(v for v in args.vars.split(",") if v)


def _one(values, name):
    if not values:
        raise UsageError(f"{name} is required")
    return values[0]


# ---------------------------------------------------------------------------

def cmd_parse(args) -> int:
    f = _formula(args)
    voc = vocabulary(f)
    data = {"text": to_text(f), "core": to_text(desugar(f)), "size": size(f),
            "modal_depth": modal_depth(f), "vars": sorted(voc.vars), "agents": sorted(voc.agents)}
    _emit(args, data, "\n".join(f"{k}: {v}" for k, v in data.items()))
    return 0


def cmd_mc(args) -> int:
    f = _formula(args)
    if args.frame:
        frame = load_frame(args.frame)
        if args.history is None:
            hs = [h for h in frame.histories if evaluate(frame, h, f)]
            _emit(args, {"truth_set": hs}, "\n".join(hs))
            return 0
        if args.history not in frame.histories:
            raise UsageError(f"unknown history {args.history!r}")
        val = evaluate(frame, args.history, f)
    else:
        model = load_model(_one(args.model, "--model"))
        m = _one(args.moment, "--moment")
        if args.history is None:
            hs = sorted(truth_set(model, m, f))
            _emit(args, {"truth_set": hs}, "\n".join(hs))
            return 0
        val = satisfies(model, m, args.history, f)
    _emit(args, {"value": val}, "true" if val else "false")
    return 0 if val else 1


def cmd_validate_model(args) -> int:
    if args.frame:
        frame = load_frame(args.frame)
        probs = frame_problems(frame)
        sel = None if probs else check_independence(frame)
        data = {"ok": not probs and sel is None, "problems": probs,
                "ia_selector": None if sel is None else {str(j): sorted(c) for j, c in sel.items()}}
        text = "ok" if data["ok"] else "\n".join(probs + ([f"IA fails for selector {data['ia_selector']}"]
                                                          if sel else []))
        _emit(args, data, text)
        return 0 if data["ok"] else 1
    vs = validate(load_model(_one(args.model, "--model")))
    data = {"ok": not vs, "violations": [v.to_dict() for v in vs]}
    text = "ok" if not vs else "\n".join(
        f"{v.constraint}: {v.message} {json.dumps(v.to_dict()['witness'], sort_keys=True)}" for v in vs)
    _emit(args, data, text)
    return 0 if not vs else 1


def _frame_out(frame, history) -> dict:
    return {"frame": frame.to_dict(), "history": history}


def cmd_sat(args) -> int:
    f = _formula(args)
    res = sat_search(f, args.bound, variables=_vars(args), workers=args.workers,
                     allow_large=args.bound >= frames.LARGE_BOUND)
    if isinstance(res, Satisfiable):
        data = {"verdict": res.kind, **_frame_out(res.frame, res.history)}
        _emit(args, data, f"satisfiable at history {res.history}\n"
              + json.dumps(res.frame.to_dict(), sort_keys=True))
        return 0
    _emit(args, {"verdict": res.kind, "bound": res.bound}, f"no model with at most {res.bound} histories")
    return 1


def cmd_valid(args) -> int:
    f = _formula(args)
    res = validity_up_to(f, args.bound, variables=_vars(args), workers=args.workers,
                         allow_large=args.bound >= frames.LARGE_BOUND)
    if isinstance(res, ValidUpTo):
        _emit(args, {"verdict": res.kind, "bound": res.bound},
              f"valid on all frames with at most {res.bound} histories")
        return 0
    _emit(args, {"verdict": res.kind, **_frame_out(res.frame, res.history)},
          f"countermodel at history {res.history}\n" + json.dumps(res.frame.to_dict(), sort_keys=True))
    return 1


def _points(args):
    if not args.model or len(args.model) != 2:
        raise UsageError("give --model twice (left, right)")
    if not args.moment or len(args.moment) != 2:
        raise UsageError("give --moment twice (left, right)")
    left, right = (load_model(p) for p in args.model)
    return PointedModel(left, args.moment[0]), PointedModel(right, args.moment[1])


def cmd_bisim(args) -> int:
    left, right = _points(args)
    if not args.relation:
        raise UsageError("--relation is required")
    R = load_relation(args.relation)
    res = is_bisimulation(left, right, R, _vars(args, left.model.variables & right.model.variables))
    text = "ok" if res.ok else "\n".join(
        f"{v.condition}: {v.message} {json.dumps(v.witness, sort_keys=True)}" for v in res.violations)
    _emit(args, res.to_dict(), text)
    return 0 if res.ok else 1


def cmd_maxbisim(args) -> int:
    left, right = _points(args)
    R = max_bisimulation(left, right, _vars(args, left.model.variables & right.model.variables))
    total = R.domain() == left.histories and R.counterdomain() == right.histories
    data = {**R.to_dict(), "total": total}
    _emit(args, data, json.dumps(data, sort_keys=True))
    return 0


def cmd_prove(args) -> int:
    if not args.script:
        raise UsageError("--script is required")
    ps = parse_script(Path(args.script).read_text())
    res = check_proof(ps)
    data = {"ok": res.ok, "line": res.line, "reason": res.reason, "lines": len(ps.lines)}
    if res.ok and ps.lines:
        data["conclusion"] = to_text(ps.conclusion)
    text = f"ok: {data.get('conclusion', '')}" if res.ok else f"line {res.line}: {res.reason}"
    _emit(args, data, text)
    return 0 if res.ok else 1


_DERIVATIONS = {
    "counterexample": "<>([j1]p & [j2](p->q)) -> ~<>([j3]r & [j4](r->~q)); --agents j1,j2,j3,j4",
    "s-counterexample": "<>[j1]p -> ~<>[j2]~p; --agents j1,j2",
    "axiom4": "[m]A -> [m][m]A; --formula A, --agents j (omit for [])",
    "box-to-stit-box": "[]A -> [j][]A; --formula A, --agents j",
}


def cmd_derive(args) -> int:
    agents = [int(x) for x in args.agents.split(",")] if args.agents else []
    name = args.name
    if name == "counterexample":
        ps = derive_counterexample(*(agents or [1, 2, 3, 4]))
    elif name == "s-counterexample":
        ps = derive_s_counterexample(*(agents or [1, 2]))
    elif name == "axiom4":
        ps = derive_axiom4(agents[0] if agents else BOX, _formula(args))
    elif name == "box-to-stit-box":
        ps = derive_box_to_stit_box(_formula(args), agents[0] if agents else 1)
    else:
        raise UsageError(f"unknown derivation {name!r}; choose from {', '.join(_DERIVATIONS)}")
    text = format_script(ps)
    if args.json:
        print(json.dumps({"conclusion": to_text(ps.conclusion), "script": text}, indent=1, sort_keys=True))
    else:
        sys.stdout.write(text)
    return 0


def cmd_interpolate(args) -> int:
    a, b = _formula(args, 0), _formula(args, 1)
    res = interpolant_search(a, b, args.size_bound, args.bound, args.mode)
    d = res.to_dict()
    text = (f"interpolant: {d['formula']} (size {d['size']})" if d["verdict"] == "found" else
            f"no interpolant up to size {res.size_bound} (frames up to {res.frame_bound} histories)")
    _emit(args, d, text)
    return 0 if d["verdict"] == "found" else 1


def cmd_separate(args) -> int:
    if not args.gamma or not args.delta:
        raise UsageError("give at least one --gamma and one --delta formula")
    res = is_separable_bounded([parse(x) for x in args.gamma], [parse(x) for x in args.delta],
                               args.size_bound, args.bound)
    d = res.to_dict()
    text = (f"separating: {d['formula']} (size {d['size']})" if d["verdict"] == "separating" else
            f"no separator up to size {res.size_bound} (frames up to {res.frame_bound} histories)")
    _emit(args, d, text)
    return 0 if d["verdict"] == "separating" else 1


def cmd_reproduce(args) -> int:
    if not (args.all or args.claim):
        raise UsageError("give --all or --claim rcip|srcip")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_model(build_S(), out / "S.json")
        save_model(build_S_prime(), out / "S_prime.json")
        (out / "B.json").write_text(json.dumps(build_B().to_dict(), indent=1) + "\n")
        save_model(build_M(1), out / "M1.json")
        save_model(build_M(2), out / "M2.json")
    claims = ["rcip", "srcip"] if args.all else [args.claim]
    certs = [certify_negative(frame_bound=args.bound) if c == "rcip"
             else certify_strong_negative(frame_bound=args.bound) for c in claims]
    if args.json:
        print(json.dumps([c.to_dict() for c in certs], indent=1, sort_keys=True))
    else:
        for c in certs:
            print(f"== {c.claim}")
            for f in c.facts:
                print(f"  [{'ok' if f.verdict else 'FAIL'}] {f.step}: {f.statement}")
            for n in c.notes:
                print(f"  note: {n}")
            print(f"  verdict: {c.verdict}")
    return 0 if all(c.certified for c in certs) else 1


COMMANDS = {
    "parse": cmd_parse, "mc": cmd_mc, "validate-model": cmd_validate_model, "sat": cmd_sat,
    "valid": cmd_valid, "bisim": cmd_bisim, "maxbisim": cmd_maxbisim, "prove": cmd_prove,
    "derive": cmd_derive, "interpolate": cmd_interpolate, "separate": cmd_separate,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", action="append", metavar="FILE", help="model JSON (twice for bisim)")
    common.add_argument("--frame", metavar="FILE", help="choice frame JSON")
    common.add_argument("--relation", metavar="FILE", help="history relation JSON")
    common.add_argument("--formula", action="append", metavar="STR", help="formula (twice for interpolate)")
    common.add_argument("--script", metavar="FILE", help="proof script")
    common.add_argument("--bound", type=int, default=frames.DEFAULT_BOUND, metavar="N",
                        help="history bound for frame searches (default %(default)s)")
    common.add_argument("--size-bound", type=int, default=9, metavar="N",
                        help="formula size bound for searches (default %(default)s)")
    common.add_argument("--vars", metavar="a,b", help="variable set")
    common.add_argument("--mode", choices=("rcip", "srcip"), default="rcip")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--workers", type=int, default=1, metavar="N")
    common.add_argument("--moment", action="append", metavar="NAME")
    common.add_argument("--history", metavar="NAME")
    common.add_argument("--agents", metavar="1,2", help="agents for derive")
    common.add_argument("--gamma", action="append", metavar="STR", help="left set member for separate")
    common.add_argument("--delta", action="append", metavar="STR", help="right set member for separate")
    common.add_argument("--all", action="store_true", help="reproduce both certificates")
    common.add_argument("--claim", choices=("rcip", "srcip"))
    common.add_argument("--out", metavar="DIR", help="reproduce: also write the witness models here")

    p = argparse.ArgumentParser(prog="stit", description="Multi-agent stit logic toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "derive":
            sp.add_argument("name", help="; ".join(f"{k}: {v}" for k, v in _DERIVATIONS.items()))
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        return COMMANDS[args.command](args)
    except (UsageError, OSError, ValueError) as exc:
        # ValueError covers parse, proof-format, model, derivation and search precondition errors
        print(f"stit: {exc}", file=sys.stderr)
        return 2


def run(argv: list[str]) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
