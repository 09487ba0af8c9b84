"""Gap functions as witness-count differences, and their closure combinators.

A :class:`GapFunction` is a pair of predicates over ``(input, witness)``
plus a witness length; its value on ``x`` is the number of witnesses
accepted by the first predicate minus the number accepted by the second.
Predicates are vectorised over witnesses: they receive the input string and
an integer array of witnesses (big-endian bit strings of the current
witness length) and return a boolean array.

Every value is obtained by enumerating all ``2**len`` witnesses.  Lengths
above the cap are refused rather than sampled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .circuits import Circuit, Gate, GateKind, circuit_size, validate
from .exact_arith import DyadicGaussian
from .natural_rep import gate_rep

Predicate = Callable[[str, np.ndarray], np.ndarray]

DEFAULT_CAP = 20
# log2 of the layered path-count work; 19 admits circuits on at most three
# live qubits (with fewer than 16 gates)
AMPLITUDE_CAP = 19
_CHUNK = 1 << 18


class CapExceeded(RuntimeError):
    """Witness enumeration would exceed the configured cap."""

    def __init__(self, required: int, cap: int, what: str = "witness"):
        super().__init__(f"{what} length {required} exceeds cap {cap} "
                         f"(enumeration of 2^{required} strings refused)")
        self.required = required
        self.cap = cap


# pairing -----------------------------------------------------------------------

@lru_cache(maxsize=1 << 16)
def pair_encode(x: str, y: str) -> str:
    """``<x, y> = 0x_1 0x_2 ... 0x_n 1 y``."""
    out = ["0"] * (2 * len(x))
    out[1::2] = x
    return "".join(out) + "1" + y


@lru_cache(maxsize=1 << 16)
def pair_decode(s: str) -> tuple[str, str]:
    k = s[0::2].find("1")
    if k < 0:
        raise ValueError(f"{s!r} is not a pair encoding: no separator")
    if s[1:2 * k:2].strip("01") or s[0:2 * k:2].strip("0"):
        raise ValueError(f"{s!r} is not a pair encoding")
    return s[1:2 * k:2], s[2 * k + 1:]


def tuple_encode(*parts: str) -> str:
    """``<x1, x2, ..., xk> = <<x1, x2>, ..., xk>``."""
    if len(parts) < 2:
        raise ValueError("tuples have at least two components")
    s = pair_encode(parts[0], parts[1])
    for p in parts[2:]:
        s = pair_encode(s, p)
    return s


@lru_cache(maxsize=1 << 16)
def tuple_decode(s: str, k: int) -> tuple[str, ...]:
    out = []
    for _ in range(k - 1):
        s, last = pair_decode(s)
        out.append(last)
    out.append(s)
    return tuple(reversed(out))


def bits(value: int, length: int) -> str:
    return format(value, f"0{length}b") if length else ""


def sigma1(p: int) -> list[str]:
    """Length-``p`` strings with exactly one 1, in lexicographic order."""
    return sorted("0" * i + "1" + "0" * (p - 1 - i) for i in range(p))


# gap functions -------------------------------------------------------------------

@dataclass(frozen=True)
class GapFunction:
    pred_a: Predicate
    pred_b: Predicate
    witness_len: Callable[[str], int]
    cap: int = DEFAULT_CAP
    label: str = ""
    # Optional exact counter over the same witness set, organised so that
    # rejected prefixes are never expanded.
    counter: Callable[[str], int] | None = None

    def with_cap(self, cap: int) -> "GapFunction":
        return replace(self, cap=cap)


def scalar_predicate(fn: Callable[[str, str], bool], length_of: Callable[[str], int]) -> Predicate:
    """Vectorise a predicate written over witness strings."""
    def pred(x: str, ws: np.ndarray) -> np.ndarray:
        n = length_of(x)
        return np.fromiter((bool(fn(x, bits(int(w), n))) for w in ws), dtype=bool, count=len(ws))
    return pred


def from_predicates(a: Callable[[str, str], bool], b: Callable[[str, str], bool],
                    witness_len: int | Callable[[str], int], cap: int = DEFAULT_CAP,
                    label: str = "") -> GapFunction:
    """Build a gap function from predicates over witness strings."""
    wl = (lambda x: witness_len) if isinstance(witness_len, int) else witness_len
    return GapFunction(scalar_predicate(a, wl), scalar_predicate(b, wl), wl, cap, label)


def from_values(value: Callable[[str], int], width: int | Callable[[str], int],
                cap: int = DEFAULT_CAP, label: str = "") -> GapFunction:
    """Realise an integer function with ``|value| <= 2**width``: the first
    ``max(v, 0)`` witnesses count positively, the first ``max(-v, 0)``
    negatively.  ``value`` must be pure; results are memoised."""
    wl = (lambda x: width) if isinstance(width, int) else width

    @lru_cache(maxsize=1 << 16)
    def check(x):
        v = int(value(x))
        if abs(v) > 1 << wl(x):
            raise ValueError(f"value {v} needs more than {wl(x)} witness bits")
        return v

    return GapFunction(lambda x, ws: ws < max(check(x), 0),
                       lambda x, ws: ws < max(-check(x), 0), wl, cap, label)


def constant(v: int, width: int | None = None, cap: int = DEFAULT_CAP) -> GapFunction:
    width = max(abs(v) - 1, 0).bit_length() if width is None else width
    return from_values(lambda x: v, width, cap, label=f"const({v})")


def gap_eval(f: GapFunction, x: str, strategy: str = "auto") -> int:
    """Exact ``#A-witnesses - #B-witnesses``.

    ``"enumerate"`` walks all ``2**len`` witnesses; ``"layered"`` uses the
    function's structured counter; ``"auto"`` prefers the counter when one
    exists.
    """
    if strategy not in ("auto", "enumerate", "layered"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if f.counter is not None and strategy != "enumerate":
        return f.counter(x)
    if strategy == "layered":
        raise ValueError(f"{f.label or 'gap function'} has no layered counter")
    n = f.witness_len(x)
    if n > f.cap:
        raise CapExceeded(n, f.cap)
    total = 0
    size = 1 << n
    for start in range(0, size, _CHUNK):
        ws = np.arange(start, min(size, start + _CHUNK), dtype=np.int64)
        total += int(np.count_nonzero(f.pred_a(x, ws))) - int(np.count_nonzero(f.pred_b(x, ws)))
    return total


def reindex(f: GapFunction, transform: Callable[[str], str], label: str = "") -> GapFunction:
    """``g(x) = f(transform(x))`` for a length-respecting transform."""
    counter = None if f.counter is None else (lambda x: f.counter(transform(x)))
    return GapFunction(lambda x, ws: f.pred_a(transform(x), ws),
                       lambda x, ws: f.pred_b(transform(x), ws),
                       lambda x: f.witness_len(transform(x)), f.cap, label or f.label, counter)


def negate(f: GapFunction) -> GapFunction:
    counter = None if f.counter is None else (lambda x: -f.counter(x))
    return GapFunction(f.pred_b, f.pred_a, f.witness_len, f.cap, f"-{f.label}", counter)


def pad_witness(f: GapFunction, length: Callable[[str], int]) -> GapFunction:
    """Same values with longer witnesses: extra trailing bits must be zero."""
    def wrap(pred):
        def padded(x, ws):
            extra = length(x) - f.witness_len(x)
            if extra < 0:
                raise ValueError("cannot shorten witnesses")
            if extra == 0:
                return pred(x, ws)
            ok = (ws & ((1 << extra) - 1)) == 0
            out = np.zeros(len(ws), dtype=bool)
            if ok.any():
                out[ok] = pred(x, ws[ok] >> extra)
            return out
        return padded
    return GapFunction(wrap(f.pred_a), wrap(f.pred_b), length, f.cap, f.label, f.counter)


def _groups(keys: np.ndarray):
    """Yield ``(key, indices)`` for each distinct key."""
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    uniq, starts = np.unique(sk, return_index=True)
    ends = list(starts[1:]) + [len(sk)]
    for key, s, e in zip(uniq, starts, ends):
        yield int(key), order[s:e]


def _call_unique(pred: Predicate, x: str, zs: np.ndarray) -> np.ndarray:
    uniq, inv = np.unique(zs, return_inverse=True)
    return np.asarray(pred(x, uniq), dtype=bool)[inv]


def gap_sum(f: GapFunction, p: int) -> GapFunction:
    """``g(x) = sum over y in Sigma^p of f(<x, y>)``.

    The witness of ``g`` is ``y`` followed by a witness ``z`` of ``f`` on
    ``<x, y>``.
    """
    def inner_len(x):
        return f.witness_len(pair_encode(x, "0" * p))

    def wlen(x):
        return p + inner_len(x)

    def make(pred):
        def summed(x, ws):
            q = inner_len(x)
            ys = ws >> q
            zs = ws & ((1 << q) - 1)
            out = np.zeros(len(ws), dtype=bool)
            for y, idx in _groups(ys):
                out[idx] = pred(pair_encode(x, bits(y, p)), zs[idx])
            return out
        return summed

    def count(x):
        # witnesses grouped by their y prefix
        return sum(gap_eval(f, pair_encode(x, bits(y, p))) for y in range(1 << p))

    return GapFunction(make(f.pred_a), make(f.pred_b), wlen, f.cap, f"sum[{p}]({f.label})", count)


def gap_product(f: GapFunction, p: int) -> GapFunction:
    """``g(x) = product over y in Sigma^p_1 of f(<x, y>)``.

    The two languages of ``f`` are first made disjoint; a witness
    ``z_1 ... z_p`` then counts for the first language of ``g`` when every
    ``z_i`` is accepted on ``<x, y_i>`` and the pattern of which language
    accepted has even parity, for the second when it has odd parity.
    """
    ys = sigma1(p)

    def per_factor(x):
        return f.witness_len(pair_encode(x, ys[0])) if p else 0

    def wlen(x):
        return p * per_factor(x)

    def parity_pred(want_odd: bool):
        def pred(x, ws):
            r = per_factor(x)
            covered = np.ones(len(ws), dtype=bool)
            odd = np.zeros(len(ws), dtype=bool)
            mask = (1 << r) - 1
            for i, y in enumerate(ys):
                live = np.flatnonzero(covered)
                if live.size == 0:
                    break
                zi = (ws[live] >> ((p - 1 - i) * r)) & mask
                xi = pair_encode(x, y)
                a = _call_unique(f.pred_a, xi, zi)
                b = _call_unique(f.pred_b, xi, zi)
                in0 = a & ~b
                in1 = b & ~a
                covered[live] = in0 | in1
                odd[live] ^= in1
            return covered & (odd if want_odd else ~odd)
        return pred

    def count(x):
        # even minus odd parity factorises as the product of per-factor
        # (A0 \ A1) - (A1 \ A0) counts, which equal the factor values
        out = 1
        for y in ys:
            out *= gap_eval(f, pair_encode(x, y))
            if out == 0:
                break
        return out

    return GapFunction(parity_pred(False), parity_pred(True), wlen, f.cap, f"prod[{p}]({f.label})", count)


@dataclass(frozen=True)
class GapMatrixSpec:
    """Matrices ``M_{x,y}`` (side ``2**side_log``, ``y`` in Sigma^q_1) with
    ``Re <z|M|w> = real_part(<x,y,z,w>)`` and ``Im`` from ``imag_part``."""

    real_part: GapFunction
    imag_part: GapFunction
    side_log: int
    index_len: int


def gap_matrix_product(spec: GapMatrixSpec) -> tuple[GapFunction, GapFunction]:
    """Gap functions for the real and imaginary parts of
    ``<z| M_{x,y_1} ... M_{x,y_q} |w>``, evaluated on ``<x, z, w>``.

    The complex product is carried by the real block matrix
    ``[[Re M, Im M], [-Im M, Re M]]`` indexed by ``p + 1`` bit strings, and
    each entry of the block product is a path sum of products.
    """
    p, q = spec.side_log, spec.index_len
    if q < 1:
        raise ValueError("matrix product needs at least one factor")
    ys = sigma1(q)
    f0, f1 = spec.real_part, spec.imag_part

    @lru_cache(maxsize=1024)
    def part_len(x, y):
        z = "0" * p
        return max(f0.witness_len(tuple_encode(x, y, z, z)),
                   f1.witness_len(tuple_encode(x, y, z, z)))

    def h_len(s):
        x, y, _, _ = tuple_decode(s, 4)
        return part_len(x, y)

    def h_inner(s):
        x, y, u, v = tuple_decode(s, 4)
        return u[0] + v[0], tuple_encode(x, y, u[1:], v[1:])

    g0p = pad_witness(f0, lambda t: _part_len_from_inner(t, part_len))
    g1p = pad_witness(f1, lambda t: _part_len_from_inner(t, part_len))

    def h_pred(positive: bool):
        def pred(s, ws):
            corner, inner = h_inner(s)
            if corner in ("00", "11"):
                fn = g0p.pred_a if positive else g0p.pred_b
            elif corner == "01":
                fn = g1p.pred_a if positive else g1p.pred_b
            else:
                fn = g1p.pred_b if positive else g1p.pred_a
            return fn(inner, ws)
        return pred

    h = GapFunction(h_pred(True), h_pred(False), h_len, f0.cap, "h")
    width = p + 1

    def path_factor(s):
        # <<x, u_0 ... u_q>, y_k>  ->  <x, y_k, u_{k-1}, u_k>
        xp, y = pair_decode(s)
        x, path = pair_decode(xp)
        k = ys.index(y) + 1
        return tuple_encode(x, y, path[(k - 1) * width:k * width], path[k * width:(k + 1) * width])

    F = reindex(h, path_factor, "F")
    G = gap_product(F, q)
    interior = (q - 1) * width

    def endpoints(corner_bit: str):
        def transform(s):
            # <<x, z, w>, u>  ->  <x, 0 z u c w>
            xzw, u = pair_decode(s)
            x, z, w = tuple_decode(xzw, 3)
            return pair_encode(x, "0" + z + u + corner_bit + w)
        return transform

    @lru_cache(maxsize=None)
    def factor_counts(x: str, y: str, a: str, b: str) -> tuple[int, int]:
        # witnesses of factor h(<x, y, a, b>) in the disjointified A0 / A1
        s = tuple_encode(x, y, a, b)
        ws = np.arange(1 << h.witness_len(s), dtype=np.int64)
        pa, pb = h.pred_a(s, ws), h.pred_b(s, ws)
        return int(np.count_nonzero(pa & ~pb)), int(np.count_nonzero(pb & ~pa))

    states = [bits(i, width) for i in range(1 << width)]

    @lru_cache(maxsize=4096)
    def interior_counts(x: str, start: str) -> dict[str, tuple[int, int]]:
        # state after q - 1 factors -> (#even-parity, #odd-parity) witness prefixes
        dp = {start: (1, 0)}
        for y in ys[:-1]:
            nxt: dict[str, tuple[int, int]] = {}
            for a, (e, o) in dp.items():
                for b in states:
                    n0, n1 = factor_counts(x, y, a, b)
                    if n0 or n1:
                        pe, po = nxt.get(b, (0, 0))
                        nxt[b] = (pe + e * n0 + o * n1, po + e * n1 + o * n0)
            dp = nxt
        return dp

    def layered(corner_bit: str):
        def count(s):
            x, z, w = tuple_decode(s, 3)
            r = part_len(x, ys[0])
            work = q.bit_length() + 2 * width + r
            if work > f0.cap:
                raise CapExceeded(work, f0.cap, "layered path count")
            end = corner_bit + w
            total = 0
            for a, (e, o) in interior_counts(x, "0" + z).items():
                n0, n1 = factor_counts(x, ys[-1], a, end)
                total += (e * n0 + o * n1) - (e * n1 + o * n0)
            return total
        return count

    g0 = gap_sum(reindex(G, endpoints("0"), "G"), interior)
    g1 = gap_sum(reindex(G, endpoints("1"), "G"), interior)
    return (replace(g0, label="g0", counter=layered("0")),
            replace(g1, label="g1", counter=layered("1")))


def _part_len_from_inner(t: str, part_len) -> int:
    x, y, _, _ = tuple_decode(t, 4)
    return part_len(x, y)


# circuit amplitudes ------------------------------------------------------------

@lru_cache(maxsize=None)
def _table_entry(kind: GateKind, out: str, inp: str) -> DyadicGaussian:
    return gate_rep(kind).matrix.entry(out if out else 0, inp if inp else 0)


def lifted_gate_entry(g: Gate, live_in: int, out_row: str, out_col: str,
                      in_row: str, in_col: str) -> DyadicGaussian:
    """``<out_row out_col| K(gate on full register) |in_row in_col>`` read
    directly from the gate table by matching untouched bits."""
    if g.kind is GateKind.ANCILLA:
        w = live_in
        if out_row[:w] + out_row[w + 1:] != in_row or out_col[:w] + out_col[w + 1:] != in_col:
            return _ZERO
        return _table_entry(g.kind, out_row[w] + out_col[w], "")
    if g.kind is GateKind.ERASURE:
        w = g.wires[0]
        if in_row[:w] + in_row[w + 1:] != out_row or in_col[:w] + in_col[w + 1:] != out_col:
            return _ZERO
        return _table_entry(g.kind, "", in_row[w] + in_col[w])
    wires = g.wires
    for i in range(live_in):
        if i not in wires and (out_row[i] != in_row[i] or out_col[i] != in_col[i]):
            return _ZERO
    o = "".join(out_row[w] for w in wires) + "".join(out_col[w] for w in wires)
    n = "".join(in_row[w] for w in wires) + "".join(in_col[w] for w in wires)
    return _table_entry(g.kind, o, n)


_ZERO = DyadicGaussian(0)


@lru_cache(maxsize=256)
def _validated(c: Circuit) -> None:
    validate(c).raise_if_invalid()


@lru_cache(maxsize=64)
def circuit_gap_functions(c: Circuit, cap: int = AMPLITUDE_CAP):
    """Gap functions ``(g0, g1)`` with ``(g0 + i g1)(<x, s, t>) =
    2**gates * <s|K(Q)|t>`` for padded vec indices ``s, t``.

    All registers are padded to the widest live count ``L`` with fictitious
    ``|0>`` qubits; representation entries outside the real index set are
    zero.  Returns the two functions and ``L``.
    """
    validate(c).raise_if_invalid()
    live = c.live_counts()
    L = max(live)
    q = len(c.gates)
    order = sigma1(q)

    def unpad(s: str, l: int):
        row, col = s[:L], s[L:]
        if "1" in row[l:] or "1" in col[l:]:
            return None
        return row[:l], col[:l]

    def entry(y: str, s: str, t: str) -> DyadicGaussian:
        k = order.index(y)          # y_1 multiplies last: it is the final gate
        gi = q - 1 - k
        out = unpad(s, live[gi + 1])
        inp = unpad(t, live[gi])
        if out is None or inp is None:
            return DyadicGaussian(0)
        return lifted_gate_entry(c.gates[gi], live[gi], out[0], out[1], inp[0], inp[1])

    def part(imag: bool):
        def value(s: str) -> int:
            _, y, z, w = tuple_decode(s, 4)
            e = entry(y, z, w) * 2
            assert e.denom_log == 0, "gate entries are halves of integers"
            return e.im if imag else e.re
        return from_values(value, 1, cap, "Im(2K)" if imag else "Re(2K)")

    spec = GapMatrixSpec(part(False), part(True), 2 * L, q)
    g0, g1 = gap_matrix_product(spec)
    return g0, g1, L


def circuit_amplitude_gap(c: Circuit, z: str, w: str, u: str, v: str,
                          cap: int = AMPLITUDE_CAP, x: str = "",
                          strategy: str = "auto") -> tuple[int, int, int]:
    """Integers ``(f0, f1, r)`` with ``<u|Q(|z><w|)|v> = (f0 + i f1) / 2**r``.

    ``r`` is the circuit size; the path sum supplies ``2**gates`` and the
    remaining factor of two per input and output qubit is applied exactly.
    ``strategy`` is passed to :func:`gap_eval`.
    """
    _validated(c)
    n, k = c.inputs, c.outputs
    for name, s, width in (("z", z, n), ("w", w, n), ("u", u, k), ("v", v, k)):
        if len(s) != width or set(s) - {"0", "1"}:
            raise ValueError(f"{name} must be a {width}-bit string")
    r = circuit_size(c)
    q = len(c.gates)
    if q == 0:
        one = 1 << r
        return (one if (z, w) == (u, v) else 0), 0, r
    g0, g1, L = circuit_gap_functions(c, cap)
    s = u + "0" * (L - k) + v + "0" * (L - k)
    t = z + "0" * (L - n) + w + "0" * (L - n)
    arg = tuple_encode(x, s, t)
    scale = r - q
    return gap_eval(g0, arg, strategy) << scale, gap_eval(g1, arg, strategy) << scale, r
