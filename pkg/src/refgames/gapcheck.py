"""Self-check suite: combinator witness counts against direct evaluation,
and circuit amplitudes against the natural representation."""

from __future__ import annotations

import itertools
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, H, P, build_dephasing
from .exact_arith import ExactMatrix, mat_mul
from .gap_functions import (AMPLITUDE_CAP, CapExceeded, GapFunction, GapMatrixSpec,
                            circuit_amplitude_gap, from_values, gap_eval, gap_matrix_product, gap_product, gap_sum,
                            pair_encode, sigma1, tuple_decode, tuple_encode)
from .library import random_circuit
from .natural_rep import circuit_rep


def random_gap_function(seed: int, length: int) -> GapFunction:
    """Arbitrary (overlapping) witness languages drawn from a hash of the input."""
    def table(x: str, which: int) -> np.ndarray:
        key = zlib.crc32(f"{seed}:{which}:{x}".encode())
        return np.random.default_rng(key).random(1 << length) < 0.5

    return GapFunction(lambda x, ws: table(x, 0)[ws], lambda x, ws: table(x, 1)[ws],
                       lambda x: length, label=f"rand{seed}")


def direct_value(f: GapFunction, x: str) -> int:
    """Witness count by a plain loop, independent of the combinators."""
    n = f.witness_len(x)
    total = 0
    for w in range(1 << n):
        arr = np.array([w])
        total += int(f.pred_a(x, arr)[0]) - int(f.pred_b(x, arr)[0])
    return total


@dataclass
class CheckResult:
    name: str
    instances: int = 0
    mismatches: int = 0
    skipped: int = 0
    details: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.mismatches == 0 and self.instances > 0

    def as_dict(self) -> dict:
        return {"name": self.name, "instances": self.instances, "mismatches": self.mismatches,
                "skipped": self.skipped, "passed": self.passed, "details": self.details}


def _rand_input(rng) -> str:
    return "".join(rng.choice(["0", "1"], size=int(rng.integers(0, 4))))


def check_sum(instances: int, seed: int) -> CheckResult:
    res = CheckResult("gap_sum")
    rng = np.random.default_rng([seed, 1])
    for i in range(instances):
        p, L = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        f = random_gap_function(seed * 1000 + i, L)
        x = _rand_input(rng)
        got = gap_eval(gap_sum(f, p), x, strategy="enumerate")
        want = sum(direct_value(f, pair_encode(x, "".join(y)))
                   for y in itertools.product("01", repeat=p))
        res.instances += 1
        res.mismatches += got != want
        res.details.append([p, L, x, got, want])
    return res


def check_product(instances: int, seed: int) -> CheckResult:
    res = CheckResult("gap_product")
    rng = np.random.default_rng([seed, 2])
    for i in range(instances):
        p, L = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        f = random_gap_function(seed * 1000 + i, L)
        x = _rand_input(rng)
        got = gap_eval(gap_product(f, p), x, strategy="enumerate")
        want = 1
        for y in sigma1(p):
            want *= direct_value(f, pair_encode(x, y))
        res.instances += 1
        res.mismatches += got != want
        res.details.append([p, L, x, got, want])
    return res


def _matrix_spec(mats: list[ExactMatrix], p: int) -> GapMatrixSpec:
    ys = sigma1(len(mats))

    def part(imag: bool):
        def value(s: str) -> int:
            _, y, z, w = tuple_decode(s, 4)
            e = mats[ys.index(y)].entry(z, w)
            return e.im if imag else e.re
        return from_values(value, 2)

    return GapMatrixSpec(part(False), part(True), p, len(mats))


def check_matrix_product(instances: int, seed: int) -> CheckResult:
    res = CheckResult("gap_matrix_product")
    rng = np.random.default_rng([seed, 3])
    for _ in range(instances):
        p, q = int(rng.integers(1, 3)), int(rng.integers(1, 4))
        d = 2 ** p
        mats = [ExactMatrix(rng.integers(-2, 3, (d, d)), rng.integers(-2, 3, (d, d))) for _ in range(q)]
        prod = mats[0]
        for mtx in mats[1:]:
            prod = mat_mul(prod, mtx)
        g0, g1 = gap_matrix_product(_matrix_spec(mats, p))
        z, w = (format(int(v), f"0{p}b") for v in rng.integers(0, d, 2))
        arg = tuple_encode("", z, w)
        want = prod.entry(z, w)
        for strategy in ("enumerate", "layered"):
            got = (gap_eval(g0, arg, strategy), gap_eval(g1, arg, strategy))
            res.mismatches += got != (want.re, want.im)
        res.instances += 1
        res.details.append([p, q, z, w, [want.re, want.im]])
    return res


def amplitude_corpus(count: int = 200, seed: int = 2024, max_qubits: int = 4,
                     max_gates: int = 8) -> list[Circuit]:
    rng = np.random.default_rng(seed)
    fixed = [Circuit(1, ()), Circuit(1, (H(0),)), Circuit(1, (H(0), P(0), H(0))), build_dephasing(1)]
    return fixed + [random_circuit(rng, max_qubits, max_gates) for _ in range(count)]


def _strings(n: int) -> list[str]:
    return ["".join(b) for b in itertools.product("01", repeat=n)]


def check_amplitudes(corpus: list[Circuit], cap: int = AMPLITUDE_CAP) -> CheckResult:
    """Every representation entry of every circuit whose path count fits the cap."""
    res = CheckResult("circuit_amplitude_gap")
    for c in corpus:
        K = circuit_rep(c).matrix
        entries = 0
        try:
            for z, w in itertools.product(_strings(c.inputs), repeat=2):
                for u, v in itertools.product(_strings(c.outputs), repeat=2):
                    f0, f1, r = circuit_amplitude_gap(c, z, w, u, v, cap=cap)
                    e = K.entry(u + v, z + w)
                    res.mismatches += (e.real * 2 ** r, e.imag * 2 ** r) != (f0, f1)
                    entries += 1
        except CapExceeded as exc:
            res.skipped += 1
            res.details.append({"gates": len(c.gates), "skipped": str(exc)})
            continue
        res.instances += 1
        res.details.append({"gates": len(c.gates), "entries": entries})
    return res


SUITES = {
    "quick": {"combinator_instances": 20, "corpus": 20},
    "default": {"combinator_instances": 100, "corpus": 200},
}


def run_suite(name: str = "default", seed: int = 7) -> list[CheckResult]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    cfg = SUITES[name]
    out = []
    for fn in (check_sum, check_product, check_matrix_product):
        t = time.perf_counter()
        r = fn(cfg["combinator_instances"], seed)
        r.seconds = time.perf_counter() - t
        out.append(r)
    t = time.perf_counter()
    r = check_amplitudes(amplitude_corpus(cfg["corpus"]))
    r.seconds = time.perf_counter() - t
    out.append(r)
    return out
