"""Standard referees and random circuit generators used by tests and the CLI."""

from __future__ import annotations

import numpy as np

from .circuits import ANC, TR, Circuit, Gate, GateKind, Mode, Referee, T, X, validate


def _one_wire(live: int) -> list[Gate]:
    """Append an ancilla and flip it to ``|1>``."""
    return [ANC()] + X(live)


def _finish(gates: list[Gate], live: int, keep: int) -> list[Gate]:
    """Erase every wire except ``keep``."""
    out = list(gates)
    for w in reversed(range(live)):
        if w != keep:
            out.append(TR(w))
    return out


def constant_circuit(inputs: int, bit: int) -> Circuit:
    """Discard the inputs and output a fixed classical bit."""
    gates = [ANC()] + (X(inputs) if bit else [])
    return Circuit(inputs, tuple(_finish(gates, inputs + 1, inputs)))


def always_accept(n: int = 1, m: int = 1, mode: Mode | str = Mode.CQRG) -> Referee:
    return Referee(Mode(mode), n, m, constant_circuit(n + m, 1))


def always_reject(n: int = 1, m: int = 1, mode: Mode | str = Mode.CQRG) -> Referee:
    return Referee(Mode(mode), n, m, constant_circuit(n + m, 0))


def bits_equal_circuit() -> Circuit:
    """Two inputs ``(a, b)``; outputs ``|1>`` iff the bits agree."""
    gates = _one_wire(2) + [ANC(), T(0, 2, 3), T(1, 2, 3)] + X(3)
    return Circuit(2, tuple(_finish(gates, 4, 3)))


def bits_equal(mode: Mode | str = Mode.CQRG) -> Referee:
    return Referee(Mode(mode), 1, 1, bits_equal_circuit())


def ignore_bob(n: int, m: int, alice_gates: list[Gate], mode: Mode | str = Mode.QRG) -> Referee:
    """Apply ``alice_gates`` to Alice's wires and output her first qubit."""
    c = Circuit(n + m, tuple(_finish(alice_gates, n + m, 0)))
    return Referee(Mode(mode), n, m, c)


def mqrg_referee(p_circuit: Circuit, k: int, m: int, q_circuit: Circuit) -> Referee:
    return Referee(Mode.MQRG, p_circuit.inputs, m, q_circuit, k=k, p_circuit=p_circuit)


def identity_circuit(n: int) -> Circuit:
    return Circuit(n, ())


# random generation -------------------------------------------------------------

def random_unitary_gates(rng: np.random.Generator, width: int, count: int,
                         toffoli_weight: float = 0.3) -> list[Gate]:
    """Toffoli with the given probability (when three wires exist), otherwise
    H or P in a 4:3 ratio."""
    gates: list[Gate] = []
    for _ in range(count):
        u = rng.random()
        if width >= 3 and u < toffoli_weight:
            gates.append(T(*(int(w) for w in rng.permutation(width)[:3])))
        else:
            kind = GateKind.H if rng.random() < 4 / 7 else GateKind.P
            gates.append(Gate(kind, (int(rng.integers(width)),)))
    return gates


def random_circuit(rng: np.random.Generator, max_qubits: int = 4, max_gates: int = 8,
                   inputs: int | None = None, outputs: int | None = None) -> Circuit:
    """A valid circuit mixing unitary gates, ancillas and erasures.

    The live width never exceeds ``max_qubits``; ``outputs`` (when given) is
    reached by trailing erasures, which do not count toward ``max_gates``.
    """
    n = int(rng.integers(1, max_qubits + 1)) if inputs is None else inputs
    live = n
    gates: list[Gate] = []
    for _ in range(int(rng.integers(1, max_gates + 1))):
        roll = rng.random()
        if roll < 0.15 and live < max_qubits:
            gates.append(ANC())
            live += 1
        elif roll < 0.3 and live > 1 and (outputs is None or live > outputs):
            gates.append(TR(int(rng.integers(live))))
            live -= 1
        else:
            gates += random_unitary_gates(rng, live, 1)
    if outputs is not None:
        while live < outputs:
            gates.append(ANC())
            live += 1
        while live > outputs:
            gates.append(TR(int(rng.integers(live))))
            live -= 1
    c = Circuit(n, tuple(gates))
    validate(c).raise_if_invalid()
    return c


def random_decision_circuit(rng: np.random.Generator, inputs: int, extra: int = 1,
                            gates: int = 24) -> Circuit:
    """Random circuit on ``inputs`` qubits (plus ``extra`` ancillas) with one output."""
    body = [ANC() for _ in range(extra)]
    body += random_unitary_gates(rng, inputs + extra, gates)
    keep = int(rng.integers(inputs + extra))
    return Circuit(inputs, tuple(_finish(body, inputs + extra, keep)))


def random_referee(rng: np.random.Generator, mode: Mode | str, n: int, m: int,
                   gates: int = 24, k: int | None = None) -> Referee:
    mode = Mode(mode)
    if mode is Mode.MQRG:
        k = n if k is None else k
        p = random_circuit(rng, max_qubits=max(n, k) + 1, max_gates=4, inputs=n, outputs=k)
        return Referee(mode, n, m, random_decision_circuit(rng, k + m, 1, gates), k=k, p_circuit=p)
    return Referee(mode, n, m, random_decision_circuit(rng, n + m, 1, gates))
