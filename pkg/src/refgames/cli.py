"""Command-line front end.

Every command writes one JSON report (schema ``refgames.report/1``) to
``--out`` or standard output, and a short summary to standard error.
Exit codes: 0 success, 1 input error, 2 non-convergence or cap refusal.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .circuits import CircuitError, Mode, ParseError, Referee, parse_referee
from .decision_predicates import PredicateCapError, exists_pp_decide, trace_power_decide
from .game_solver import (DEFAULT_ETA, DEFAULT_MAX_ITER, DEFAULT_TOL, ConvergenceError,
                          Distribution, GameCapError, alice_effects, effect_operators, game_value)
from .gap_functions import CapExceeded
from .gapcheck import SUITES, run_suite
from .sparsify_concentration import (DEFAULT_SEED, AdversarialMarkov, ExperimentConfig,
                                     IIDBernoulli, RefereeInduced, StrategyTuple, aly_sample_size,
                                     check_aly_lemma, check_dependent_hoeffding)

SCHEMA = "refgames.report/1"
SEED_ENV = "REFGAMES_SEED"

EXIT_OK, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2


class InputError(Exception):
    pass


# serialisation -----------------------------------------------------------------

def _encode(obj) -> str:
    """JSON text with floats at 17 significant digits and sorted keys."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return json.dumps(str(x))
        text = format(x, ".17g")
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _digest(path: str) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _emit(report: dict, out: str | None) -> None:
    text = _encode(report) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=".report-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, target)


def _report(command: str, inputs: dict, seed: int | None, results: dict,
            started: float, timing: bool) -> dict:
    rep = {"schema": SCHEMA, "version": __version__, "command": command,
           "inputs": inputs, "seed": seed, "results": results}
    if timing:
        rep["wall_time"] = time.perf_counter() - started
    return rep


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _load_referee(path: str) -> Referee:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    try:
        return parse_referee(text)
    except ParseError as e:
        raise InputError(f"{path}: {e}") from None


# commands ----------------------------------------------------------------------

def cmd_value(args) -> tuple[dict, int]:
    r = _load_referee(args.file)
    if args.mode and Mode(args.mode) is not r.mode:
        raise InputError(f"{args.file} declares mode {r.mode.value}, not {args.mode}")
    rep = game_value(r, args.tol, args.max_iter, args.eta, strict=False)
    _note(f"{r.mode.value} value {rep.value:.6f} in [{rep.lower:.6f}, {rep.upper:.6f}], "
          f"gap {rep.duality_gap:.2e} after {rep.iterations} iterations")
    code = EXIT_OK if rep.converged else EXIT_LIMIT
    if not rep.converged:
        _note("certificate not reached within the iteration limit")
    return {"game": rep.as_dict()}, code


def _alice_distribution(r: Referee, S, tol: float) -> Distribution:
    """The distribution over ``y`` Alice induces with her certified strategy."""
    game = game_value(r, tol, strict=False)
    if r.mode is Mode.CQRG:
        return game.alice_strategy
    A = alice_effects(r)
    rho = game.alice_strategy
    probs = np.array([max(float(np.trace(A[y].to_numpy() @ rho).real), 0.0) for y in S.keys])
    return Distribution.from_vector(S.keys, probs)


def cmd_sparsify(args) -> tuple[dict, int]:
    r = _load_referee(args.file)
    if r.mode is Mode.QRG:
        raise InputError("sparsification needs a cqrg or mqrg referee")
    S = effect_operators(r)
    p = _alice_distribution(r, S, args.tol)
    cfg = ExperimentConfig(trials=args.trials, N=args.N, epsilon=args.epsilon, dim=2 ** r.m,
                           seed=args.seed)
    rep = check_aly_lemma(S, p, cfg)
    warnings = []
    if rep.exploratory:
        warnings.append(f"N = {args.N} is below 72(m+2) = {aly_sample_size(r.m)}; "
                        "the bound is not guaranteed (exploratory run)")
    _note(f"failure rate {rep.failure_rate:.4f} over {rep.trials} trials; "
          f"bound 2^m exp(-N/72) = {rep.bound:.4f}; "
          f"{'not asserted' if rep.passed is None else 'pass' if rep.passed else 'FAIL'}")
    for w in warnings:
        _note("warning: " + w)
    return {"aly": rep.as_dict(), "distribution": dict(p.probs), "warnings": warnings}, EXIT_OK


def cmd_predicate(args) -> tuple[dict, int]:
    r = _load_referee(args.file)
    if r.mode is Mode.QRG:
        raise InputError("the trace-power predicate needs a cqrg or mqrg referee")
    if args.exists:
        if args.N is None:
            raise InputError("--exists needs --N")
        dec = exists_pp_decide(r, args.N)
        results = {"exists": {"decision": "accept" if dec.accept else "reject",
                              "witness": list(dec.witness.strings) if dec.witness else None,
                              "tuples_checked": dec.tuples_checked,
                              "certificate": dec.certificate.as_dict()}}
        _note(f"exists-tuple decision: {'accept' if dec.accept else 'reject'}")
        return results, EXIT_OK
    if not args.tuple:
        raise InputError("give --tuple y1,...,yN or --exists --N k")
    t = StrategyTuple(tuple(s.strip() for s in args.tuple.split(",")))
    try:
        cert = trace_power_decide(r, t)
    except (KeyError, ValueError) as e:
        raise InputError(str(e)) from None
    _note(f"trace-power decision: {'accept' if cert.accept else 'reject'} (K = {cert.K_value})")
    return {"certificate": cert.as_dict(), "tuple": list(t.strings)}, EXIT_OK


def cmd_gap_check(args) -> tuple[dict, int]:
    results = run_suite(args.suite, args.seed)
    for r in results:
        _note(f"{r.name}: {r.instances} checked, {r.mismatches} mismatches, {r.skipped} skipped")
    ok = all(r.passed for r in results)
    return {"suite": args.suite, "checks": [r.as_dict() for r in results], "passed": ok}, \
        EXIT_OK if ok else EXIT_LIMIT


def cmd_tailbound(args) -> tuple[dict, int]:
    cfg = ExperimentConfig(trials=args.trials, N=args.n, epsilon=args.epsilon,
                           gamma=args.gamma, seed=args.seed)
    if args.process == "iid":
        proc = IIDBernoulli(args.gamma)
    elif args.process == "markov":
        proc = AdversarialMarkov(args.gamma)
    else:
        if not args.referee:
            raise InputError("--process referee needs --referee FILE")
        r = _load_referee(args.referee)
        if r.mode is Mode.QRG:
            raise InputError("the referee-induced process needs a cqrg or mqrg referee")
        S = effect_operators(r)
        game = game_value(r, strict=False)
        p = _alice_distribution(r, S, DEFAULT_TOL)
        proc = RefereeInduced.from_effects(S, game.bob_strategy, p)
    rep = check_dependent_hoeffding(proc, cfg)
    _note(f"{rep.process}: empirical {rep.empirical:.5f} vs exp(-2 n eps^2) = {rep.bound:.5f}; "
          f"{'pass' if rep.passed else 'FAIL'}")
    return {"hoeffding": rep.as_dict()}, EXIT_OK


# entry point -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="refgames", description="One-turn referee games: values, "
                                 "sparsification, exact predicates and self-checks.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--timing", action="store_true",
                        help="include wall_time (reports are then no longer byte-identical)")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("value", parents=[common], help="certified game value")
    v.add_argument("file")
    v.add_argument("--mode", choices=[m.value for m in Mode])
    v.add_argument("--tol", type=float, default=DEFAULT_TOL)
    v.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    v.add_argument("--eta", type=float, default=DEFAULT_ETA)
    v.set_defaults(func=cmd_value, seeded=False)

    s = sub.add_parser("sparsify", parents=[common], help="empirical sparsification failure rate")
    s.add_argument("file")
    s.add_argument("--N", type=int, default=216)
    s.add_argument("--trials", type=int, default=2000)
    s.add_argument("--epsilon", type=float, default=1 / 12)
    s.add_argument("--tol", type=float, default=DEFAULT_TOL)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_sparsify, seeded=True)

    p = sub.add_parser("predicate", parents=[common], help="exact trace-power predicate")
    p.add_argument("file")
    p.add_argument("--tuple", help="comma-separated Alice strings y1,...,yN")
    p.add_argument("--exists", action="store_true", help="search all N-tuples")
    p.add_argument("--N", type=int)
    p.set_defaults(func=cmd_predicate, seeded=False)

    g = sub.add_parser("gap-check", parents=[common], help="gap-function self-check suite")
    g.add_argument("--suite", choices=sorted(SUITES), default="default")
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_gap_check, seeded=True)

    t = sub.add_parser("tailbound", parents=[common], help="dependent Hoeffding tail experiment")
    t.add_argument("--process", choices=["iid", "markov", "referee"], default="iid")
    t.add_argument("--referee", help="referee file for --process referee")
    t.add_argument("--n", type=int, default=144)
    t.add_argument("--gamma", type=float, default=0.25)
    t.add_argument("--epsilon", type=float, default=1 / 12)
    t.add_argument("--trials", type=int, default=100_000)
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_tailbound, seeded=True)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        seed = None
        if args.seeded:
            seed = args.seed if args.seed is not None else default_seed()
            args.seed = seed
        results, code = args.func(args)
        inputs = {}
        for attr in ("file", "referee"):
            path = getattr(args, attr, None)
            if path:
                inputs[path] = _digest(path)
        _emit(_report(args.command, inputs, seed, results, started, args.timing), args.out)
        return code
    except (InputError, ParseError, CircuitError) as e:
        _note(f"error: {e}")
        return EXIT_INPUT
    except (ConvergenceError, CapExceeded, GameCapError, PredicateCapError) as e:
        _note(f"refused: {e}")
        return EXIT_LIMIT
    except ValueError as e:
        _note(f"error: {e}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
