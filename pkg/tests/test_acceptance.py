"""Acceptance criteria, one test each, with their runtime limits.

Every criterion prints a single PASS/FAIL line; the lines are repeated in
the pytest terminal summary.  Run directly with ``python3
tests/test_acceptance.py`` for the lines alone.
"""

from __future__ import annotations

import functools
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

from oracles import accept_operator, random_density, simulate  # noqa: E402
from refgames.circuits import (ANC, TR, Circuit, GateKind, Mode, Referee, T, X,  # noqa: E402
                               swap_roles)
from refgames.decision_predicates import (Predicate, exists_pp_decide, floating_max_eig,  # noqa: E402
                                          floating_min_eig, qma_pc_decide, trace_power_decide)
from refgames.decision_predicates import accept_operator as exact_accept  # noqa: E402
from refgames.exact_arith import ExactMatrix, exact_sum, mat_trace_power  # noqa: E402
from refgames.game_solver import (cqrg_value, effect_operators, game_value, max_eigen,  # noqa: E402
                                  minimax_exchange, qrg_value)
from refgames.gapcheck import run_suite  # noqa: E402
from refgames.library import (always_accept, always_reject, bits_equal, ignore_bob,  # noqa: E402
                              random_circuit, random_referee, random_unitary_gates)
from refgames.natural_rep import circuit_rep, gate_rep  # noqa: E402
from refgames.sparsify_concentration import (AdversarialMarkov, ExperimentConfig,  # noqa: E402
                                             IIDBernoulli, RefereeInduced, StrategyTuple,
                                             aly_sample_size, check_aly_lemma,
                                             check_dependent_hoeffding)

RESULTS: list[str] = []


def criterion(label: str, limit: float):
    """Time the wrapped check, enforce ``limit`` seconds and log one line."""
    def wrap(fn):
        @functools.wraps(fn)
        def run():
            start = time.perf_counter()
            detail, ok = "", False
            try:
                detail = fn() or ""
                elapsed = time.perf_counter() - start
                assert elapsed < limit, f"took {elapsed:.1f} s, limit {limit:g} s"
                ok = True
            except AssertionError as e:
                detail = f"{detail} {e}".strip()
                raise
            finally:
                elapsed = time.perf_counter() - start
                line = (f"{'PASS' if ok else 'FAIL'}  {label}  "
                        f"[{elapsed:.1f} s, limit {limit:g} s]  {detail}")
                RESULTS.append(line)
                print(line)
        return run
    return wrap


def _printed(rows) -> ExactMatrix:
    return ExactMatrix.from_entries([[Fraction(v) if not isinstance(v, complex) else v for v in r]
                                     for r in rows])


@criterion("gate-representation fidelity", 1)
def test_gate_representation_fidelity():
    half = Fraction(1, 2)
    perm = [[int(i == j) for j in range(8)] for i in range(8)]
    perm[6][6] = perm[7][7] = 0
    perm[6][7] = perm[7][6] = 1
    tables = {
        GateKind.H: _printed([[half, half, half, half], [half, -half, half, -half],
                              [half, half, -half, -half], [half, -half, -half, half]]),
        GateKind.P: _printed([[1, 0, 0, 0], [0, -1j, 0, 0], [0, 0, 1j, 0], [0, 0, 0, 1]]),
        GateKind.TOFFOLI: _printed(perm).kron(_printed(perm)),
        GateKind.ANCILLA: _printed([[1], [0], [0], [0]]),
        GateKind.ERASURE: _printed([[1, 0, 0, 1]]),
    }
    for kind, want in tables.items():
        assert gate_rep(kind).matrix == want, kind
    return "5/5 gate tables equal entry-for-entry"


@criterion("channel-engine equivalence", 60)
def test_channel_engine_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        c = random_circuit(rng, max_qubits=4, max_gates=8)
        rep = circuit_rep(c)
        K = rep.matrix.to_numpy()
        d_out = 2 ** c.outputs
        for _ in range(3):
            rho = random_density(rng, 2 ** c.inputs)
            got = (K @ rho.reshape(-1)).reshape(d_out, d_out)
            worst = max(worst, float(np.abs(got - simulate(c, rho)).max()))
        assert rep.is_trace_preserving(), c
        cut = int(rng.integers(0, len(c.gates) + 1))
        first = Circuit(c.inputs, c.gates[:cut])
        second = Circuit(first.outputs, c.gates[cut:])
        assert circuit_rep(second).matrix @ circuit_rep(first).matrix == rep.matrix, c
    assert worst <= 1e-10, worst
    return f"200 circuits, max deviation {worst:.1e}; trace preservation and composition exact"


@criterion("GapP two-path agreement", 120)
def test_gapp_two_path_agreement():
    results = run_suite("default")
    summary = []
    for r in results:
        assert r.mismatches == 0, (r.name, r.details)
        summary.append(f"{r.name} {r.instances} ok" + (f"/{r.skipped} over cap" if r.skipped else ""))
    assert all(r.instances >= 100 for r in results[:3])
    return "; ".join(summary)


@criterion("game values", 300)
def test_game_values():
    rep = cqrg_value(bits_equal())
    assert abs(rep.value - 0.5) <= 1e-3 and rep.duality_gap <= 1e-4, rep
    rng = np.random.default_rng(77)
    qma_err = 0.0
    for _ in range(5):
        r = ignore_bob(2, 1, random_unitary_gates(rng, 2, 8))
        want = max_eigen(accept_operator(r.q_circuit)).value
        qma_err = max(qma_err, abs(qrg_value(r).value - want))
    assert qma_err <= 1e-3, qma_err
    swap_err = minimax_err = 0.0
    for _ in range(20):
        r = random_referee(rng, Mode.QRG, 2, 2, gates=40)
        mm = minimax_exchange(r)
        swapped = game_value(swap_roles(r))
        swap_err = max(swap_err, abs(mm.max_min.value + swapped.value - 1))
        minimax_err = max(minimax_err, mm.difference)
    assert swap_err <= 2e-4, swap_err
    assert minimax_err <= 2e-4, minimax_err
    return (f"bits-equal {rep.value:.6f} gap {rep.duality_gap:.1e}; lambda_max err {qma_err:.1e}; "
            f"swap err {swap_err:.1e}; minimax err {minimax_err:.1e}")


@criterion("sparsification", 300)
def test_sparsification():
    r = bits_equal()
    S = effect_operators(r)
    p = cqrg_value(r).alice_strategy
    cfg = ExperimentConfig(trials=2000, N=aly_sample_size(1), epsilon=1 / 12)
    rep = check_aly_lemma(S, p, cfg)
    assert cfg.N == 216 and not rep.exploratory
    assert rep.failure_rate < 1 / 3, rep
    assert rep.exact_match, rep
    lines = [f"diagonal: {rep.failure_rate:.4f} vs exact {rep.exact_failure:.4f}"]
    rng = np.random.default_rng(5)
    for m in (1, 2):
        rr = random_referee(rng, Mode.CQRG, 1, m)
        Sr = effect_operators(rr)
        pr = cqrg_value(rr).alice_strategy
        rep = check_aly_lemma(Sr, pr, ExperimentConfig(trials=2000, N=aly_sample_size(m)))
        assert rep.failure_rate < 1 / 3 and rep.passed, rep
        lines.append(f"m={m}: {rep.failure_rate:.4f}")
    return "; ".join(lines) + f"; bound 2e^-3 = {2 * math.exp(-3):.4f}"


def _trace_power_instances():
    rng = np.random.default_rng(88)
    while True:
        m = int(rng.integers(1, 3))
        r = random_referee(rng, Mode.CQRG, 1, m, gates=int(rng.integers(4, 25)))
        S = effect_operators(r)
        for _ in range(4):
            t = StrategyTuple(tuple(rng.choice(S.keys, size=int(rng.integers(1, 5)))))
            yield r, S, t


@criterion("trace-power predicate", 120)
def test_trace_power_predicate():
    sides = {"accept": 0, "reject": 0}
    for r, S, t in _trace_power_instances():
        lam = floating_min_eig(S, t)
        if 1 / 3 < lam < 2 / 3:
            continue
        cert = trace_power_decide(r, t, S)
        assert cert.check(), cert
        M = exact_sum(S.complement(y).scale(2 ** cert.r) for y in t.strings)
        tr = mat_trace_power(M, 2 * r.m)
        assert tr.im == 0 and tr.denom_log == 0 and tr.re == cert.H_value
        want = lam >= 2 / 3
        assert cert.accept == want, (lam, cert)
        sides["accept" if want else "reject"] += 1
        if sum(sides.values()) == 200:
            break
    assert min(sides.values()) > 0, sides
    return f"200 instances ({sides['accept']} accept side, {sides['reject']} reject side), 0 violations"


@criterion("QMA·C predicate", 120)
def test_qma_c_predicate():
    rng = np.random.default_rng(99)
    for _ in range(5):
        p = random_circuit(rng, 3, 8, inputs=2, outputs=int(rng.integers(1, 3)))
        everything = [format(i, f"0{p.outputs}b") for i in range(2 ** p.outputs)]
        assert qma_pc_decide(p, Predicate.of_set(everything)).accept
        assert not qma_pc_decide(p, Predicate.of_set([])).accept
    sides = {"accept": 0, "reject": 0}
    while sum(sides.values()) < 100:
        p = random_circuit(rng, 3, 8, inputs=2, outputs=int(rng.integers(1, 3)))
        B = Predicate.of_set([format(i, f"0{p.outputs}b") for i in range(2 ** p.outputs)
                              if rng.random() < 0.5])
        lam = floating_max_eig(exact_accept(p, B))
        if 1 / 3 < lam < 2 / 3:
            continue
        want = lam >= 2 / 3
        assert qma_pc_decide(p, B).accept == want, (p, lam)
        sides["accept" if want else "reject"] += 1
    assert min(sides.values()) > 0, sides
    return f"trivial B exact; 100 instances ({sides['accept']}/{sides['reject']}), 0 violations"


@criterion("dependent Hoeffding", 180)
def test_dependent_hoeffding():
    cfg = ExperimentConfig(trials=100_000, N=144, epsilon=1 / 12, gamma=0.25)
    r = bits_equal()
    S = effect_operators(r)
    game = cqrg_value(r)
    referee = RefereeInduced.from_effects(S, game.bob_strategy, game.alice_strategy)
    parts = []
    for proc in (IIDBernoulli(0.25), AdversarialMarkov(0.25), referee):
        rep = check_dependent_hoeffding(proc, cfg)
        assert rep.empirical <= rep.bound + 3 * rep.std_error, rep
        if isinstance(proc, IIDBernoulli):
            assert rep.exact_match, rep
            parts.append(f"iid {rep.empirical:.5f} (exact {rep.exact:.5f})")
        else:
            parts.append(f"{rep.process} {rep.empirical:.5f}")
    return ", ".join(parts) + f" vs exp(-2) = {math.exp(-2):.4f}"


def _cqrg(*gates) -> Referee:
    return Referee(Mode.CQRG, 1, 1, Circuit(2, gates))


def _or():
    return _cqrg(ANC(), *X(0), *X(1), T(0, 1, 2), *X(2), TR(1), TR(0))


def _and():
    return _cqrg(ANC(), T(0, 1, 2), TR(1), TR(0))


@criterion("end-to-end exists-PP pipeline", 60)
def test_exists_pp_pipeline():
    yes = [always_accept(1, 1), _cqrg(TR(1)), _or()]
    no = [always_reject(1, 1), _and(), _cqrg(TR(0))]
    for inst, want in [(r, True) for r in yes] + [(r, False) for r in no]:
        omega = cqrg_value(inst).value
        assert (omega >= 3 / 4) if want else (omega <= 1 / 4), omega
        for N in (1, 2, 3):
            assert exists_pp_decide(inst, N).accept == want, (inst, N)
    return f"{len(yes)} yes and {len(no)} no instances, N = 1..3, all decided correctly"


ALL = [test_gate_representation_fidelity, test_channel_engine_equivalence,
       test_gapp_two_path_agreement, test_game_values, test_sparsification,
       test_trace_power_predicate, test_qma_c_predicate, test_dependent_hoeffding,
       test_exists_pp_pipeline]


if __name__ == "__main__":
    failed = 0
    for fn in ALL:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
