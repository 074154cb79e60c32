"""Batch front end: build, verify, stats and mc.

Exit codes: 0 success, 1 verification failure (or a failed bound), 2 bad parameters.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional, Sequence

from .circuit import GENERAL, NN, CircuitError, compute_depth, from_text, to_text
from .qarith import (ExponentiationParams, MultiplierParams, build_controlled_modmul,
                     build_exponentiation, default_l0, default_t)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


def _ints(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nnashor", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--a", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--g", type=int)
        p.add_argument("--b", type=int)
        p.add_argument("--c", type=int)
        p.add_argument("--e", type=int)
        p.add_argument("--z", type=int, default=0)
        p.add_argument("--l0", type=int)
        p.add_argument("--l", type=int)
        p.add_argument("--t", type=int)
        p.add_argument("--variant", choices=("nn", "general", "classical"), default="nn")
        p.add_argument("--mode", choices=("exact", "approx"), default="approx")
        p.add_argument("--control-mode", choices=("measured-recycled", "preallocated"),
                       default="measured-recycled")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", "-o")
        p.add_argument("--format", choices=("json", "text", "csv"), default="json")

    common(sub.add_parser("build", help="emit a circuit and its resource report"))
    common(sub.add_parser("verify", help="simulate against the integer oracle"))
    st = sub.add_parser("stats", help="resource sweep over several n")
    st.add_argument("--builder", required=True)
    st.add_argument("--ns", type=_ints, required=True)
    st.add_argument("--l0", type=int)
    st.add_argument("--t", type=int)
    st.add_argument("--output", "-o")
    st.add_argument("--format", choices=("json", "text", "csv"), default="json")
    mc = sub.add_parser("mc", help="Monte Carlo error-bound check")
    mc.add_argument("--kind", choices=("window", "z", "block"), required=True)
    mc.add_argument("--n", type=int, required=True)
    mc.add_argument("--l0", type=int)
    mc.add_argument("--m", type=int)
    mc.add_argument("--t", type=int)
    mc.add_argument("--trials", type=int, default=100_000)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--output", "-o")
    mc.add_argument("--format", choices=("json", "text", "csv"), default="json")
    return ap


# ------------------------------------------------------------ params

def _mult_params(args) -> MultiplierParams:
    if args.a is None or args.m is None:
        raise UsageError("a multiplier needs --a and --m")
    try:
        return MultiplierParams(args.n, args.a, args.m, args.z, args.l0, args.l,
                                args.t, args.variant, args.mode == "exact")
    except CircuitError as exc:
        raise UsageError(str(exc)) from exc


def _exp_params(args, exponent: Optional[int]) -> ExponentiationParams:
    if args.m is None:
        raise UsageError("exponentiation needs --g and --m")
    try:
        p = ExponentiationParams(args.g, args.m, args.n, args.control_mode, exponent,
                                 args.mode == "exact", args.l0, args.z, args.variant)
        p.multiplier(args.g % args.m or 1)
        return p
    except CircuitError as exc:
        raise UsageError(str(exc)) from exc


def _build(args):
    """The circuit the flags describe: an exponentiation when --g is given, else a multiplier."""
    if args.g is not None:
        p = _exp_params(args, args.e)
        if args.variant == "classical":
            from .classical import build_classical_exponentiation
            return build_classical_exponentiation(p, args.t), p
        return build_exponentiation(p).circuit, p
    p = _mult_params(args)
    return build_controlled_modmul(p), p


def _model(args):
    return NN if args.variant == "nn" else GENERAL


def _emit(args, payload: dict, text: Optional[str] = None) -> None:
    if args.format == "json":
        out = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif args.format == "csv":
        rows = payload.get("rows") or [payload]
        keys = sorted({k for r in rows for k in r if not isinstance(r[k], (dict, list))})
        out = ",".join(keys) + "\n" + "".join(
            ",".join(str(r.get(k, "")) for k in keys) + "\n" for r in rows)
    else:
        out = "".join(f"{k}: {v}\n" for k, v in sorted(payload.items()))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text if text is not None else out)
        if text is not None:
            with open(args.output + ".json", "w") as fh:
                fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(out)


# ------------------------------------------------------------ commands

def cmd_build(args) -> int:
    circ, p = _build(args)
    text = to_text(circ)
    if from_text(text).gates != circ.gates:
        raise CircuitError("emitted text does not round-trip")
    report = {"n": args.n, "variant": args.variant, "mode": args.mode,
              "depth": compute_depth(circ, _model(args)), "width": circ.width,
              "size": len(circ.gates)}
    if isinstance(p, MultiplierParams):
        report.update(l0=p.l0, l=p.l, predicted_width=3 * p.n + 2 * p.l + 1)
    _emit(args, report, text if args.format == "text" or args.output else None)
    return EXIT_OK


def _verify_multiplier(args) -> dict:
    from .simulator import decode, encode, simulate_reversible, simulate_sparse, sparse_marginal
    p = _mult_params(args)
    circ = build_controlled_modmul(p)
    bs = [args.b] if args.b is not None else range(p.m)
    cs = [args.c] if args.c is not None else (0, 1)
    checked = failed = 0
    worst = 1.0
    for b in bs:
        for c in cs:
            expect = p.a * b % p.m if c else b
            idx = encode(circ.layout_in, {"B": b, "c": c})
            if args.variant == "classical":
                out = decode(simulate_reversible(circ, idx), circ.layout_out)
                ok = out["B"] == expect and not any(
                    v for k, v in out.items() if k not in ("B", "c"))
                fid = 1.0 if ok else 0.0
            else:
                state, _ = simulate_sparse(circ, idx, seed=args.seed)
                regs = dict(circ.layout_out)
                dist = sparse_marginal(state, regs)
                key = tuple(expect if r == "B" else (c if r == "c" else 0) for r in regs)
                fid = dist.get(key, 0.0)
                ok = fid >= 1 - 1e-6
            worst = min(worst, fid)
            checked += 1
            failed += not ok
    return {"kind": "multiplier", "checked": checked, "failed": failed, "min_fidelity": worst}


def _verify_exponentiation(args) -> dict:
    from .simulator import decode, simulate_reversible, simulate_sparse, sparse_marginal
    es = [args.e] if args.e is not None else range(1 << (2 * args.n))
    checked = failed = 0
    worst = 1.0
    for e in es:
        p = _exp_params(args, e)
        expect = pow(p.g, e, p.m)
        if args.variant == "classical":
            from .classical import build_classical_exponentiation
            circ = build_classical_exponentiation(p)
            out = decode(simulate_reversible(circ, 0), circ.layout_out)
            fid = 1.0 if out["B"] == expect else 0.0
        else:
            circ = build_exponentiation(p).circuit
            state, _ = simulate_sparse(circ, 0, seed=args.seed)
            dist = sparse_marginal(state, {"B": circ.layout_out["B"]})
            fid = dist.get((expect,), 0.0)
        worst = min(worst, fid)
        checked += 1
        failed += fid < 0.99
    return {"kind": "exponentiation", "checked": checked, "failed": failed,
            "min_fidelity": worst}


def cmd_verify(args) -> int:
    if args.n > 4 and args.variant != "classical":
        raise UsageError("statevector verification is limited to n <= 4")
    res = _verify_exponentiation(args) if args.g is not None else _verify_multiplier(args)
    res.update(n=args.n, variant=args.variant, mode=args.mode,
               passed=res["failed"] == 0)
    _emit(args, res)
    return EXIT_OK if res["passed"] else EXIT_FAIL


def cmd_stats(args) -> int:
    from .analysis import sweep_resources
    kw = {k: v for k, v in (("l0", args.l0), ("t", args.t)) if v is not None}
    try:
        sw = sweep_resources(args.builder, args.ns, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(args, sw.to_dict())
    return EXIT_OK


def cmd_mc(args) -> int:
    from . import analysis
    n = args.n
    if args.kind == "window":
        rep = analysis.mc_window_error(n, args.l0 if args.l0 is not None else default_l0(n),
                                       args.trials, args.seed)
    elif args.kind == "z":
        rep = analysis.mc_z_overflow(n, args.m, args.t if args.t is not None else default_t(n),
                                     args.trials, args.seed)
    else:
        rep = analysis.mc_block_carry(n, args.t if args.t is not None else default_t(n),
                                      args.trials, args.seed)
    _emit(args, rep.to_dict())
    return EXIT_OK if rep.passed else EXIT_FAIL


COMMANDS = {"build": cmd_build, "verify": cmd_verify, "stats": cmd_stats, "mc": cmd_mc}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, CircuitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
