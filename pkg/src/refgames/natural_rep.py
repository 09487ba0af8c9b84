"""Natural (Liouville) representation of circuits on vectorised operators.

Index convention: qubit 0 is the most significant bit of a row or column
string, and ``vec(M)`` puts the entry ``<y|M|z>`` at index ``yz``.  A
channel on ``l`` live qubits is therefore a matrix over ``2l``-bit strings
whose first ``l`` bits are row bits and last ``l`` bits are column bits.

Gates are applied by contracting their small representation into the
matching tensor axes instead of building permuted ``4^l x 4^l`` matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuits import Circuit, Gate, GateKind, validate
from .exact_arith import (DimensionError, ExactMatrix, int_add, int_tensordot)

# Largest live register the tensor engine will hold.
MAX_LIVE_QUBITS = 10


@dataclass(frozen=True)
class NaturalRep:
    matrix: ExactMatrix
    in_qubits: int
    out_qubits: int

    def __post_init__(self):
        if self.matrix.shape != (4 ** self.out_qubits, 4 ** self.in_qubits):
            raise DimensionError(f"matrix {self.matrix.shape} does not match "
                                 f"{self.in_qubits} -> {self.out_qubits} qubits")

    def then(self, other: "NaturalRep") -> "NaturalRep":
        """Representation of ``other`` applied after ``self``."""
        if other.in_qubits != self.out_qubits:
            raise DimensionError("incompatible channel widths")
        return NaturalRep(other.matrix @ self.matrix, self.in_qubits, other.out_qubits)

    def is_trace_preserving(self) -> bool:
        return vec(ExactMatrix.identity(2 ** self.out_qubits)).dagger() @ self.matrix == \
            vec(ExactMatrix.identity(2 ** self.in_qubits)).dagger()


# vectorisation ----------------------------------------------------------------

def vec(m: ExactMatrix) -> ExactMatrix:
    """Stack the rows of a square matrix into one column."""
    if m.rows != m.cols:
        raise DimensionError("vec needs a square matrix")
    n = m.rows * m.cols
    return ExactMatrix(m.re.reshape(n, 1), m.im.reshape(n, 1), m.exp, max_rows=max(n, 4096))


def unvec(v: ExactMatrix) -> ExactMatrix:
    if v.cols != 1 or v.row_bits % 2:
        raise DimensionError("unvec needs a column of length 4^q")
    d = 2 ** (v.row_bits // 2)
    return ExactMatrix(v.re.reshape(d, d), v.im.reshape(d, d), v.exp, max_rows=max(d, 4096))


# gate tables ------------------------------------------------------------------

def _toffoli_perm() -> np.ndarray:
    perm = np.eye(8, dtype=np.int64)
    perm[[6, 7]] = perm[[7, 6]]
    return perm


_GATE_TABLES = {
    GateKind.H: (np.array([[1, 1, 1, 1],
                           [1, -1, 1, -1],
                           [1, 1, -1, -1],
                           [1, -1, -1, 1]]), np.zeros((4, 4), dtype=np.int64), 1, 1, 1),
    GateKind.P: (np.diag([1, 0, 0, 1]), np.diag([0, -1, 1, 0]), 0, 1, 1),
    GateKind.TOFFOLI: (np.kron(_toffoli_perm(), _toffoli_perm()),
                       np.zeros((64, 64), dtype=np.int64), 0, 3, 3),
    GateKind.ANCILLA: (np.array([[1], [0], [0], [0]]), np.zeros((4, 1), dtype=np.int64), 0, 0, 1),
    GateKind.ERASURE: (np.array([[1, 0, 0, 1]]), np.zeros((1, 4), dtype=np.int64), 0, 1, 0),
}


@lru_cache(maxsize=None)
def gate_rep(kind: GateKind | str) -> NaturalRep:
    """Natural representation of a single gate, exactly as tabulated."""
    re, im, exp, qin, qout = _GATE_TABLES[GateKind(kind)]
    return NaturalRep(ExactMatrix(re, im, exp), qin, qout)


# tensor engine ----------------------------------------------------------------

class _Stack:
    """Integer tensor ``(re + i*im) / 2**exp`` with ``2*live`` qubit axes
    (rows then columns) followed by one trailing batch axis."""

    __slots__ = ("re", "im", "exp", "live", "batch")

    def __init__(self, re, im, exp, live, batch):
        self.re, self.im, self.exp, self.live, self.batch = re, im, exp, live, batch

    @classmethod
    def from_matrix(cls, m: ExactMatrix, live: int) -> "_Stack":
        shape = (2,) * (2 * live) + (m.cols,)
        return cls(m.re.reshape(shape), m.im.reshape(shape), m.exp, live, m.cols)

    def to_matrix(self) -> ExactMatrix:
        rows = 4 ** self.live
        return ExactMatrix(self.re.reshape(rows, self.batch), self.im.reshape(rows, self.batch),
                           self.exp, max_rows=max(rows, 4096))

    def apply(self, table: ExactMatrix, in_wires, out_wires, new_live, remap) -> "_Stack":
        """Contract ``table`` (local vec indices, rows then columns) into the
        axes of ``in_wires``; untouched wire ``i`` moves to ``remap[i]`` and
        the table's outputs land on ``out_wires``."""
        if new_live > MAX_LIVE_QUBITS:
            raise DimensionError(f"{new_live} live qubits exceeds the engine cap {MAX_LIVE_QUBITS}")
        a, b = len(out_wires), len(in_wires)
        live = self.live
        g_shape = (2,) * (2 * a) + (2,) * (2 * b)
        g_re = table.re.reshape(g_shape)
        g_im = table.im.reshape(g_shape)
        m_axes = [w for w in in_wires] + [live + w for w in in_wires]
        g_axes = list(range(2 * a, 2 * a + 2 * b))
        rr = int_tensordot(g_re, self.re, (g_axes, m_axes))
        ii = int_tensordot(g_im, self.im, (g_axes, m_axes))
        ri = int_tensordot(g_re, self.im, (g_axes, m_axes))
        ir = int_tensordot(g_im, self.re, (g_axes, m_axes))
        re = int_add(rr, ii, -1)
        im = int_add(ri, ir, 1)
        labels = [("r", w) for w in out_wires] + [("c", w) for w in out_wires]
        for ax in range(2 * live):
            if ax in m_axes:
                continue
            side, w = ("r", ax) if ax < live else ("c", ax - live)
            labels.append((side, remap[w]))
        labels.append(("batch", 0))
        target = [("r", i) for i in range(new_live)] + [("c", i) for i in range(new_live)]
        target.append(("batch", 0))
        perm = [labels.index(t) for t in target]
        return _Stack(np.transpose(re, perm), np.transpose(im, perm),
                      self.exp + table.exp, new_live, self.batch)


def _forward_step(st: _Stack, g: Gate) -> _Stack:
    rep = gate_rep(g.kind).matrix
    live = st.live
    if g.kind is GateKind.ANCILLA:
        return st.apply(rep, (), (live,), live + 1, list(range(live)))
    if g.kind is GateKind.ERASURE:
        w = g.wires[0]
        return st.apply(rep, (w,), (), live - 1, [i - (i > w) for i in range(live)])
    return st.apply(rep, g.wires, g.wires, live, list(range(live)))


def _adjoint_step(st: _Stack, g: Gate) -> _Stack:
    """Apply the conjugate transpose of ``g``'s lifted representation."""
    rep = gate_rep(g.kind).matrix.dagger()
    live = st.live
    if g.kind is GateKind.ANCILLA:
        w = live - 1
        return st.apply(rep, (w,), (), live - 1, list(range(live)))
    if g.kind is GateKind.ERASURE:
        w = g.wires[0]
        return st.apply(rep, (), (w,), live + 1, [i + (i >= w) for i in range(live)])
    return st.apply(rep, g.wires, g.wires, live, list(range(live)))


def lift(rep: NaturalRep, wires, live_in: int, live_out: int | None = None) -> NaturalRep:
    """Full-register representation of a one-gate channel acting on ``wires``.

    Shape-preserving gates act in place, a 0 -> 1 gate appends its qubit at
    index ``live_in`` and a 1 -> 0 gate removes its wire.
    """
    wires = tuple(wires)
    if len(wires) != rep.in_qubits or len(set(wires)) != len(wires):
        raise DimensionError(f"{rep.in_qubits}-qubit gate given wires {wires}")
    if any(not 0 <= w < live_in for w in wires):
        raise DimensionError(f"wires {wires} out of range for {live_in} qubits")
    expected = live_in + rep.out_qubits - rep.in_qubits
    if live_out is not None and live_out != expected:
        raise DimensionError(f"gate maps {live_in} qubits to {expected}, not {live_out}")
    st = _Stack.from_matrix(ExactMatrix.identity(4 ** live_in), live_in)
    if rep.in_qubits == rep.out_qubits:
        st = st.apply(rep.matrix, wires, wires, live_in, list(range(live_in)))
    elif rep.in_qubits == 0:
        st = st.apply(rep.matrix, (), tuple(range(live_in, expected)), expected, list(range(live_in)))
    elif rep.out_qubits == 0 and rep.in_qubits == 1:
        w = wires[0]
        st = st.apply(rep.matrix, wires, (), expected, [i - (i > w) for i in range(live_in)])
    else:
        raise DimensionError("lift supports in-place gates, preparations and single erasures")
    return NaturalRep(st.to_matrix(), live_in, expected)


def circuit_rep(c: Circuit) -> NaturalRep:
    """``K(Q) = K(Q_r) ... K(Q_1)`` built gate by gate."""
    validate(c).raise_if_invalid()
    st = _Stack.from_matrix(ExactMatrix.identity(4 ** c.inputs), c.inputs)
    for g in c.gates:
        st = _forward_step(st, g)
    return NaturalRep(st.to_matrix(), c.inputs, c.outputs)


def run(c: Circuit, rho: ExactMatrix) -> ExactMatrix:
    """Schroedinger picture: ``Q(rho)`` without materialising ``K(Q)``."""
    validate(c).raise_if_invalid()
    if rho.rows != 2 ** c.inputs or rho.cols != rho.rows:
        raise DimensionError(f"state of side {rho.rows} fed to a {c.inputs}-qubit circuit")
    st = _Stack.from_matrix(vec(rho), c.inputs)
    for g in c.gates:
        st = _forward_step(st, g)
    return unvec(st.to_matrix())


def heisenberg(c: Circuit, effect: ExactMatrix) -> ExactMatrix:
    """Heisenberg picture: ``Q*(effect)`` by back-propagating through the gates."""
    validate(c).raise_if_invalid()
    if effect.rows != 2 ** c.outputs or effect.cols != effect.rows:
        raise DimensionError(f"effect of side {effect.rows} for a {c.outputs}-output circuit")
    st = _Stack.from_matrix(vec(effect), c.outputs)
    for g in reversed(c.gates):
        st = _adjoint_step(st, g)
    return unvec(st.to_matrix())


def apply_channel(rep: NaturalRep, rho: ExactMatrix) -> ExactMatrix:
    """``unvec(K vec(rho))``."""
    if rho.rows != 2 ** rep.in_qubits:
        raise DimensionError(f"state of side {rho.rows} for a {rep.in_qubits}-qubit channel")
    return unvec(rep.matrix @ vec(rho))


def adjoint_apply(rep: NaturalRep, effect: ExactMatrix) -> ExactMatrix:
    """``Phi*(effect)`` via the conjugate transpose of the representation."""
    if effect.rows != 2 ** rep.out_qubits or effect.cols != effect.rows:
        raise DimensionError(f"effect of side {effect.rows} for a {rep.out_qubits}-output channel")
    return unvec(rep.matrix.dagger() @ vec(effect))


def choi_matrix(rep: NaturalRep) -> np.ndarray:
    """Floating Choi matrix ``sum_ij |i><j| (x) Phi(|i><j|)``."""
    din, dout = 2 ** rep.in_qubits, 2 ** rep.out_qubits
    k = rep.matrix.to_numpy().reshape(dout, dout, din, din)
    return k.transpose(2, 0, 3, 1).reshape(din * dout, din * dout)


def check_density(rho: np.ndarray, atol: float = 1e-12) -> None:
    """Raise ``ValueError`` unless ``rho`` is a floating density matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise ValueError("density matrix must be Hermitian")
    if abs(np.trace(rho).real - 1) > atol:
        raise ValueError(f"trace {np.trace(rho).real} != 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density matrix has a negative eigenvalue")
