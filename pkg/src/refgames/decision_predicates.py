"""Exact-integer decision predicates: the trace-power eigenvalue test, the
QMA-with-classical-postprocessing sign test, and tiny deciders built on them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .circuits import Circuit, Mode, Referee, circuit_size, validate
from .exact_arith import ExactMatrix, exact_sum, mat_trace_power
from .game_solver import EffectOperatorMap, effect_operators, max_eigen, min_eigen
from .gap_functions import (DEFAULT_CAP, GapFunction, GapMatrixSpec, circuit_amplitude_gap,
                            from_values, gap_eval, gap_matrix_product, gap_sum, pair_decode,
                            reindex, tuple_decode, tuple_encode)
from .natural_rep import MAX_LIVE_QUBITS, heisenberg
from .sparsify_concentration import BRUTE_FORCE_CAP, StrategyTuple


class PredicateCapError(ValueError):
    pass


@dataclass(frozen=True)
class Predicate:
    membership: Callable[[str], bool]
    description: str = ""

    def __call__(self, s: str) -> bool:
        return bool(self.membership(s))

    @classmethod
    def of_set(cls, members: Iterable[str], description: str = "") -> "Predicate":
        ms = frozenset(members)
        return cls(ms.__contains__, description or f"{{{', '.join(sorted(ms))}}}")


@dataclass(frozen=True)
class TracePowerCertificate:
    H_value: int
    K_value: int
    r: int
    m: int
    N: int
    accept: bool

    def recomputed_K(self) -> int:
        return 2 ** (2 * self.r * self.m) * self.N ** (2 * self.m) - 3 ** self.m * self.H_value

    def check(self) -> bool:
        return self.K_value == self.recomputed_K() and self.accept == (self.K_value > 0)

    def as_dict(self) -> dict:
        return {"H": str(self.H_value), "K": str(self.K_value), "r": self.r, "m": self.m,
                "N": self.N, "decision": "accept" if self.accept else "reject"}


@dataclass(frozen=True)
class SignCertificate:
    G_value: int
    H_value: int
    r: int
    n: int
    accept: bool

    def as_dict(self) -> dict:
        return {"G": str(self.G_value), "H": str(self.H_value), "r": self.r, "n": self.n,
                "decision": "accept" if self.accept else "reject"}


def _integral(mat: ExactMatrix, r: int, what: str) -> ExactMatrix:
    scaled = mat.scale(2 ** r)
    if scaled.exp != 0:
        raise ArithmeticError(f"{what} has denominators beyond 2^{r}")
    return scaled


def _check_tuple(S: EffectOperatorMap, t: StrategyTuple):
    if t.N < 1:
        raise ValueError("empty tuple")
    for y in t.strings:
        if y not in S.exact:
            raise KeyError(f"tuple string {y!r} is not a valid Alice string")


def trace_power_decide(r: Referee, t: StrategyTuple, S: EffectOperatorMap | None = None) -> TracePowerCertificate:
    """Accept iff ``K = 2^{2rm} N^{2m} - 3^m H > 0`` with
    ``H = Tr((sum_j 2^r T_{y_j})^{2m})`` and ``T_y = I - S_y``.

    ``r`` here is the decision circuit's size, which bounds every
    denominator of the effect operators.
    """
    S = effect_operators(r) if S is None else S
    _check_tuple(S, t)
    rr, m, N = circuit_size(r.q_circuit), r.m, t.N
    M = exact_sum(_integral(S.complement(y), rr, f"T_{y}") for y in t.strings)
    tr = mat_trace_power(M, 2 * m)
    if tr.im != 0 or tr.denom_log != 0:
        raise ArithmeticError(f"trace power {tr!r} is not an integer")
    H = tr.re
    K = 2 ** (2 * rr * m) * N ** (2 * m) - 3 ** m * H
    return TracePowerCertificate(H, K, rr, m, N, K > 0)


def trace_power_gap(r: Referee, t: StrategyTuple, cap: int = DEFAULT_CAP) -> int:
    """``H`` rebuilt from gap functions alone.

    Entries of ``2^r T_y`` are circuit amplitudes for outcome 0
    (real part ``Re <0|Q(|yz><yw|)|0>``, imaginary part its negated
    imaginary part); the tuple sum is a gap sum over indices ``j``, the
    ``2m``-fold power a gap matrix product, and the trace a gap sum over
    the diagonal.
    """
    q = r.q_circuit
    n1, m, N = r.first_width, r.m, t.N
    rr = circuit_size(q)
    b = max(1, (N - 1).bit_length())
    x = "".join(t.strings)

    def leaf(imag: bool) -> GapFunction:
        def value(s: str) -> int:
            xyzw, j = pair_decode(s)
            xs, _, z, w = tuple_decode(xyzw, 4)
            j = int(j, 2)
            if j >= N:
                return 0
            y = xs[j * n1:(j + 1) * n1]
            f0, f1, _ = circuit_amplitude_gap(q, y + z, y + w, "0", "0", cap=cap)
            return -f1 if imag else f0
        return from_values(value, rr, cap, "Im 2^rT" if imag else "Re 2^rT")

    spec = GapMatrixSpec(gap_sum(leaf(False), b), gap_sum(leaf(True), b), m, 2 * m)
    g0, _ = gap_matrix_product(spec)

    def diagonal(s: str) -> str:
        xs, z = pair_decode(s)
        return tuple_encode(xs, z, z)

    return gap_eval(gap_sum(reindex(g0, diagonal), m), x)


def qma_pc_decide(p_circuit: Circuit, B: Predicate) -> SignCertificate:
    """``R = sum_{u in B} P*(|u><u|)``; accept iff
    ``H = 3^{n+1} 2^{(n+1)r} Tr(R^{n+1}) - 2^{(n+1)r + n} > 0``."""
    validate(p_circuit).raise_if_invalid()
    if max(p_circuit.live_counts()) > MAX_LIVE_QUBITS:
        raise PredicateCapError(f"circuit exceeds the {MAX_LIVE_QUBITS}-qubit exact cap")
    n, k = p_circuit.inputs, p_circuit.outputs
    rr = circuit_size(p_circuit)
    members = [u for u in (format(i, f"0{k}b") if k else "" for i in range(2 ** k)) if B(u)]
    if members:
        R = exact_sum(heisenberg(p_circuit, ExactMatrix.basis_projector(u)) for u in members)
    else:
        R = ExactMatrix.zeros(2 ** n, 2 ** n)
    tr = mat_trace_power(_integral(R, rr, "R"), n + 1)
    if tr.im != 0 or tr.denom_log != 0:
        raise ArithmeticError(f"trace power {tr!r} is not an integer")
    G = tr.re
    H = 3 ** (n + 1) * G - 2 ** ((n + 1) * rr + n)
    return SignCertificate(G, H, rr, n, H > 0)


def accept_operator(p_circuit: Circuit, B: Predicate) -> np.ndarray:
    """Floating ``R`` for eigenvalue oracles."""
    k = p_circuit.outputs
    d = 2 ** p_circuit.inputs
    out = np.zeros((d, d), complex)
    for i in range(2 ** k):
        u = format(i, f"0{k}b") if k else ""
        if B(u):
            out += heisenberg(p_circuit, ExactMatrix.basis_projector(u)).to_numpy()
    return out


@dataclass(frozen=True)
class ExistsDecision:
    accept: bool
    witness: StrategyTuple | None
    certificate: TracePowerCertificate
    tuples_checked: int


def exists_pp_decide(r: Referee, N: int, cap: int = BRUTE_FORCE_CAP) -> ExistsDecision:
    """Accept iff some ``N``-tuple of Alice strings passes the trace-power test.

    Tuples are enumerated as multisets, which have the same averages; the
    cap applies to the ``|Sigma^n|^N`` tuple space.
    """
    if r.mode not in (Mode.CQRG, Mode.MQRG):
        raise ValueError("the exists-tuple decider needs a classical Alice register")
    S = effect_operators(r)
    keys = S.keys
    if len(keys) ** N > cap:
        raise PredicateCapError(f"{len(keys)}^{N} tuples exceed the enumeration cap {cap}")
    last = None
    checked = 0
    for combo in itertools.combinations_with_replacement(keys, N):
        t = StrategyTuple(combo)
        cert = trace_power_decide(r, t, S)
        checked += 1
        last = cert
        if cert.accept:
            return ExistsDecision(True, t, cert, checked)
    return ExistsDecision(False, None, last, checked)


def p_pp_sign_decide(g: GapFunction, x: str) -> bool:
    """Accept iff ``g(x) > 0``."""
    return gap_eval(g, x) > 0


def sign_gap_function(cert_fn: Callable[[str], int], width: int, cap: int = DEFAULT_CAP) -> GapFunction:
    """A gap function realising an integer-valued certificate."""
    return from_values(cert_fn, width, cap, "certificate")


def floating_min_eig(S: EffectOperatorMap, t: StrategyTuple) -> float:
    avg = sum(S[y] for y in t.strings) / t.N
    return min_eigen(avg).value


def floating_max_eig(R: np.ndarray) -> float:
    return max_eigen(R).value
