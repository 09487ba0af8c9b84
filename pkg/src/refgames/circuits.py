"""Circuit IR over the gate set {H, P, Toffoli, ancilla, erasure}.

Wire convention: live qubits are numbered ``0..l-1``.  An ancilla appends a
fresh ``|0>`` qubit at index ``l``; an erasure traces its wire out and every
higher index shifts down by one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


class GateKind(str, enum.Enum):
    H = "H"
    P = "P"
    TOFFOLI = "T"
    ANCILLA = "ANC"
    ERASURE = "TR"

    @property
    def arity(self) -> int:
        return _ARITY[self]

    @property
    def delta(self) -> int:
        """Change in live-qubit count caused by the gate."""
        return {GateKind.ANCILLA: 1, GateKind.ERASURE: -1}.get(self, 0)


_ARITY = {GateKind.H: 1, GateKind.P: 1, GateKind.TOFFOLI: 3,
          GateKind.ANCILLA: 0, GateKind.ERASURE: 1}


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    wires: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))

    def __str__(self):
        return " ".join([self.kind.value, *map(str, self.wires)])


def H(w: int) -> Gate:
    return Gate(GateKind.H, (w,))


def P(w: int) -> Gate:
    return Gate(GateKind.P, (w,))


def T(a: int, b: int, c: int) -> Gate:
    return Gate(GateKind.TOFFOLI, (a, b, c))


def ANC() -> Gate:
    return Gate(GateKind.ANCILLA, ())


def TR(w: int) -> Gate:
    return Gate(GateKind.ERASURE, (w,))


def X(w: int) -> list[Gate]:
    """NOT gate expanded as H P P H."""
    return [H(w), P(w), P(w), H(w)]


class CircuitError(ValueError):
    """A circuit or referee violates its structural invariants."""


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    outputs: int | None = None
    position: int | None = None
    message: str = ""

    def raise_if_invalid(self):
        if not self.ok:
            where = "" if self.position is None else f" at gate {self.position}"
            raise CircuitError(f"invalid circuit{where}: {self.message}")


@dataclass(frozen=True)
class Circuit:
    inputs: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if self.inputs < 0:
            raise CircuitError("negative input count")
        object.__setattr__(self, "gates", tuple(self.gates))

    @property
    def outputs(self) -> int:
        return self.inputs + sum(g.kind.delta for g in self.gates)

    def live_counts(self) -> list[int]:
        """Live qubits before each gate, followed by the final count."""
        counts = [self.inputs]
        for g in self.gates:
            counts.append(counts[-1] + g.kind.delta)
        return counts

    def then(self, other: "Circuit") -> "Circuit":
        """Sequential composition: ``other`` runs after ``self``."""
        if other.inputs != self.outputs:
            raise CircuitError(f"cannot feed {self.outputs} qubits into a "
                               f"{other.inputs}-input circuit")
        return Circuit(self.inputs, self.gates + other.gates)

    def __len__(self):
        return len(self.gates)


def validate(c: Circuit) -> ValidationReport:
    """Replay the gate list and report the first structural violation."""
    live = c.inputs
    for pos, g in enumerate(c.gates):
        if len(g.wires) != g.kind.arity:
            return ValidationReport(False, None, pos,
                                    f"{g.kind.name} takes {g.kind.arity} wires, got {len(g.wires)}")
        if len(set(g.wires)) != len(g.wires):
            return ValidationReport(False, None, pos, f"duplicate wires {g.wires}")
        for w in g.wires:
            if not 0 <= w < live:
                if g.kind is GateKind.ERASURE and live == 0:
                    msg = "negative live count: erasure with no live qubits"
                else:
                    msg = f"wire {w} out of range for {live} live qubits"
                return ValidationReport(False, None, pos, msg)
        live += g.kind.delta
    return ValidationReport(True, live)


def circuit_size(c: Circuit) -> int:
    """Number of gates plus input and output qubits."""
    validate(c).raise_if_invalid()
    return len(c.gates) + c.inputs + c.outputs


def build_dephasing(n: int, wires: Sequence[int] | None = None, live: int | None = None) -> Circuit:
    """Completely dephasing channel on each of ``wires`` (default: all ``n``).

    Each qubit is copied into a fresh ``|0>`` ancilla by a Toffoli whose
    other control is an ancilla prepared in ``|1>``; both ancillas are then
    erased.
    """
    if n < 0:
        raise CircuitError("qubit count must be non-negative")
    live = n if live is None else live
    wires = range(n) if wires is None else wires
    gates: list[Gate] = []
    for w in wires:
        one, copy = live, live + 1
        gates += [ANC(), *X(one), ANC(), T(w, one, copy), TR(copy), TR(one)]
    return Circuit(live, tuple(gates))


def relabel(c: Circuit, layout: list[int], total: int) -> tuple[list[Gate], list[int], int]:
    """Translate ``c`` onto the first ``c.inputs`` entries of ``layout``.

    ``layout[j]`` is the global wire holding the logical qubit ``j`` of the
    surrounding register (``total`` qubits live globally).  Returns the
    translated gates, the updated layout (``c``'s outputs first, the
    untouched remainder after) and the new global live count.
    """
    validate(c).raise_if_invalid()
    sub = list(layout[:c.inputs])
    rest = list(layout[c.inputs:])
    out: list[Gate] = []
    for g in c.gates:
        if g.kind is GateKind.ANCILLA:
            out.append(ANC())
            sub.append(total)
            total += 1
        elif g.kind is GateKind.ERASURE:
            gw = sub.pop(g.wires[0])
            out.append(TR(gw))
            total -= 1
            sub = [w - (w > gw) for w in sub]
            rest = [w - (w > gw) for w in rest]
        else:
            out.append(Gate(g.kind, tuple(sub[w] for w in g.wires)))
    return out, sub + rest, total


class Mode(str, enum.Enum):
    QRG = "qrg"
    CQRG = "cqrg"
    MQRG = "mqrg"


@dataclass(frozen=True)
class PromiseThresholds:
    alpha: Fraction = Fraction(2, 3)
    beta: Fraction = Fraction(1, 3)

    def __post_init__(self):
        a, b = Fraction(self.alpha), Fraction(self.beta)
        if not (0 <= b < a <= 1):
            raise ValueError("need 0 <= beta < alpha <= 1")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)


@dataclass(frozen=True)
class Referee:
    """A one-turn referee: Alice holds ``n`` qubits, Bob ``m``.

    For MQRG referees ``p_circuit`` maps Alice's ``n`` qubits to a ``k``-bit
    outcome register that is measured before ``q_circuit`` runs on
    ``(outcome, Bob)``.  Otherwise ``q_circuit`` reads ``(Alice, Bob)``.
    """

    mode: Mode
    n: int
    m: int
    q_circuit: Circuit
    k: int | None = None
    p_circuit: Circuit | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        self.check()

    @property
    def first_width(self) -> int:
        """Width of ``q_circuit``'s first register (Alice's or the outcome's)."""
        return self.k if self.mode is Mode.MQRG else self.n

    def check(self):
        if self.n < 0 or self.m < 0:
            raise CircuitError("register widths must be non-negative")
        validate(self.q_circuit).raise_if_invalid()
        if self.q_circuit.outputs != 1:
            raise CircuitError(f"decision circuit must output 1 qubit, has {self.q_circuit.outputs}")
        if self.mode is Mode.MQRG:
            if self.p_circuit is None or self.k is None:
                raise CircuitError("MQRG referee needs p_circuit and outcome width k")
            validate(self.p_circuit).raise_if_invalid()
            if self.p_circuit.inputs != self.n:
                raise CircuitError(f"p_circuit takes {self.p_circuit.inputs} qubits, Alice sends {self.n}")
            if self.p_circuit.outputs != self.k:
                raise CircuitError(f"p_circuit outputs {self.p_circuit.outputs} qubits, "
                                   f"q_circuit expects an outcome register of {self.k}")
        elif self.p_circuit is not None:
            raise CircuitError(f"{self.mode.value} referee has no p_circuit")
        if self.q_circuit.inputs != self.first_width + self.m:
            raise CircuitError(f"q_circuit takes {self.q_circuit.inputs} qubits, expected "
                               f"{self.first_width} + {self.m}")


def compose_referee(r: Referee) -> Circuit:
    """The full referee channel on ``n + m`` inputs with one output qubit."""
    if r.mode is Mode.QRG:
        return r.q_circuit
    total = r.n + r.m
    layout = list(range(total))
    gates: list[Gate] = []
    width = r.n
    if r.mode is Mode.MQRG:
        p_gates, layout, total = relabel(r.p_circuit, layout, total)
        gates += p_gates
        width = r.k
    deph = build_dephasing(width)
    deph_gates, layout, total = relabel(deph, layout, total)
    gates += deph_gates
    q_gates, layout, total = relabel(r.q_circuit, layout, total)
    gates += q_gates
    out = Circuit(r.n + r.m, tuple(gates))
    rep = validate(out)
    rep.raise_if_invalid()
    assert rep.outputs == 1 and layout == [0]
    return out


def swap_roles(r: Referee) -> Referee:
    """Exchange Alice and Bob and negate the output bit (QRG only)."""
    if r.mode is not Mode.QRG:
        raise CircuitError(f"role swap is only defined for QRG referees, not {r.mode.value}")
    n, m = r.n, r.m
    # old Alice wire j sits at new global m + j, old Bob wire j at new global j
    layout = [m + j for j in range(n)] + list(range(m))
    gates, layout, total = relabel(r.q_circuit, layout, n + m)
    gates += X(layout[0])
    return Referee(Mode.QRG, m, n, Circuit(n + m, tuple(gates)))


# text format ------------------------------------------------------------------

class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


_GATE_WORDS = {"H": GateKind.H, "P": GateKind.P, "T": GateKind.TOFFOLI,
               "ANC": GateKind.ANCILLA, "TR": GateKind.ERASURE}


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _parse_gate(words: list[str], lineno: int) -> Gate:
    kind = _GATE_WORDS.get(words[0].upper())
    if kind is None:
        raise ParseError(lineno, f"unknown gate {words[0]!r}")
    try:
        wires = tuple(int(w) for w in words[1:])
    except ValueError:
        raise ParseError(lineno, f"non-integer wire in {' '.join(words)!r}") from None
    if len(wires) != kind.arity:
        raise ParseError(lineno, f"{words[0]} takes {kind.arity} wires, got {len(wires)}")
    if any(w < 0 for w in wires):
        raise ParseError(lineno, "negative wire index")
    return Gate(kind, wires)


def _parse_block(lines: Iterable[tuple[int, str]]) -> Circuit:
    inputs = None
    gates: list[Gate] = []
    first = None
    for lineno, words in lines:
        first = first or lineno
        if words[0] == "inputs":
            if inputs is not None or gates:
                raise ParseError(lineno, "'inputs' must appear once, before any gate")
            if len(words) != 2 or not words[1].isdigit():
                raise ParseError(lineno, "expected 'inputs <n>'")
            inputs = int(words[1])
            continue
        if inputs is None:
            raise ParseError(lineno, "missing 'inputs <n>' header")
        gates.append(_parse_gate(words, lineno))
    if inputs is None:
        raise ParseError(first or 1, "empty circuit block")
    c = Circuit(inputs, tuple(gates))
    rep = validate(c)
    if not rep.ok:
        raise ParseError(lines[rep.position + 1][0], rep.message)
    return c


def _tokenize(text: str) -> list[tuple[int, list[str]]]:
    out = []
    for i, raw in enumerate(text.splitlines(), 1):
        s = _strip(raw)
        if s:
            out.append((i, s.split()))
    return out


def parse_circuit(text: str) -> Circuit:
    return _parse_block(_tokenize(text))


def parse_referee(text: str) -> Referee:
    toks = _tokenize(text)
    header: dict[str, tuple[int, str]] = {}
    blocks: dict[str, list] = {}
    current = None
    for lineno, words in toks:
        if words[0] == "begin":
            if len(words) != 2 or words[1] not in ("p", "q"):
                raise ParseError(lineno, "expected 'begin p' or 'begin q'")
            if words[1] in blocks:
                raise ParseError(lineno, f"duplicate block {words[1]}")
            current = blocks.setdefault(words[1], [])
            continue
        if current is not None:
            current.append((lineno, words))
            continue
        key = words[0]
        if key not in ("mode", "alice", "bob", "outcome") or len(words) != 2:
            raise ParseError(lineno, f"unexpected header line {' '.join(words)!r}")
        header[key] = (lineno, words[1])
    for key in ("mode", "alice", "bob"):
        if key not in header:
            raise ParseError(1, f"missing '{key}' header")
    if "q" not in blocks:
        raise ParseError(toks[-1][0] if toks else 1, "missing 'begin q' block")
    line, mode = header["mode"]
    if mode not in ("qrg", "cqrg", "mqrg"):
        raise ParseError(line, f"unknown mode {mode!r}")

    def num(key):
        line, v = header[key]
        if not v.isdigit():
            raise ParseError(line, f"'{key}' needs a non-negative integer")
        return int(v)

    q = _parse_block(blocks["q"])
    p = _parse_block(blocks["p"]) if "p" in blocks else None
    k = num("outcome") if "outcome" in header else None
    try:
        return Referee(Mode(mode), num("alice"), num("bob"), q, k=k, p_circuit=p)
    except CircuitError as e:
        raise ParseError(header["mode"][0], str(e)) from None


def format_circuit(c: Circuit) -> str:
    return "\n".join([f"inputs {c.inputs}", *map(str, c.gates)]) + "\n"


def format_referee(r: Referee) -> str:
    lines = [f"mode {r.mode.value}", f"alice {r.n}", f"bob {r.m}"]
    if r.k is not None:
        lines.append(f"outcome {r.k}")
    if r.p_circuit is not None:
        lines += ["begin p", format_circuit(r.p_circuit).rstrip()]
    lines += ["begin q", format_circuit(r.q_circuit).rstrip()]
    return "\n".join(lines) + "\n"
