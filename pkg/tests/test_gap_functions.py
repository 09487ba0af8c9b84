import itertools

import numpy as np
import pytest

from refgames.circuits import ANC, Circuit, H, P, T, X
from refgames.exact_arith import ExactMatrix, mat_mul
from refgames.gap_functions import (CapExceeded, GapMatrixSpec, circuit_amplitude_gap, constant,
                                    from_predicates, from_values, gap_eval, gap_matrix_product,
                                    gap_product, gap_sum, negate, pad_witness, pair_decode,
                                    pair_encode, reindex, sigma1, tuple_decode, tuple_encode)
from refgames.gapcheck import check_matrix_product, check_product, check_sum
from refgames.natural_rep import circuit_rep


def test_pair_examples():
    assert pair_encode("", "") == "1"
    assert pair_encode("1", "0") == "0110"
    assert pair_encode("10", "1") == "010011"
    assert pair_decode("010011") == ("10", "1")
    with pytest.raises(ValueError):
        pair_decode("0000")


def test_pair_length_depends_only_on_lengths():
    for a, b in itertools.product(range(9), repeat=2):
        lengths = {len(pair_encode(x, y))
                   for x in {"0" * a, "1" * a, ("01" * a)[:a]}
                   for y in {"0" * b, "1" * b}}
        assert lengths == {2 * a + 1 + b}


def test_tuple_roundtrip():
    parts = ("10", "", "111", "0")
    assert tuple_decode(tuple_encode(*parts), 4) == parts


def test_sigma1_order():
    assert sigma1(3) == ["001", "010", "100"]


def test_gap_eval_examples():
    always = from_predicates(lambda x, y: True, lambda x, y: False, 3)
    assert gap_eval(always, "") == 8
    even = from_predicates(lambda x, y: y.count("1") % 2 == 0, lambda x, y: y.count("1") % 2 == 1, 4)
    assert gap_eval(even, "") == 0
    same = from_predicates(lambda x, y: y[0] == "1", lambda x, y: y[0] == "1", 4)
    assert gap_eval(same, "101") == 0


def test_cap_refusal_names_length():
    f = from_predicates(lambda x, y: True, lambda x, y: False, 30, cap=20)
    with pytest.raises(CapExceeded) as e:
        gap_eval(f, "")
    assert e.value.required == 30 and "2^30" in str(e.value)


def test_gap_sum_examples():
    assert gap_eval(gap_sum(constant(1), 3), "") == 8
    ends = from_values(lambda s: 1 if pair_decode(s)[1].endswith("0") else -1, 1)
    assert gap_eval(gap_sum(ends, 2), "") == 0


def test_gap_product_examples():
    assert gap_eval(gap_product(constant(2), 2), "") == 4

    def two_then_minus_three(s):
        _, y = pair_decode(s)
        return 2 if y == sigma1(2)[0] else -3

    assert gap_eval(gap_product(from_values(two_then_minus_three, 2), 2), "") == -6

    def zero_factor(s):
        _, y = pair_decode(s)
        return 0 if y == "10" else 5

    assert gap_eval(gap_product(from_values(zero_factor, 3), 2), "") == 0


def _spec(mats, p):
    ys = sigma1(len(mats))

    def part(imag):
        def value(s):
            _, y, z, w = tuple_decode(s, 4)
            e = mats[ys.index(y)].entry(z, w)
            return e.im if imag else e.re
        return from_values(value, 2)

    return GapMatrixSpec(part(False), part(True), p, len(mats))


def test_matrix_product_identity_and_ix():
    g0, g1 = gap_matrix_product(_spec([ExactMatrix.identity(2)] * 2, 1))
    for z, w in itertools.product("01", repeat=2):
        arg = tuple_encode("", z, w)
        assert gap_eval(g0, arg) == (z == w)
        assert gap_eval(g1, arg) == 0
    iX = ExactMatrix(np.zeros((2, 2), dtype=np.int64), np.array([[0, 1], [1, 0]]))
    g0, g1 = gap_matrix_product(_spec([iX, iX], 1))
    for z, w in itertools.product("01", repeat=2):
        arg = tuple_encode("", z, w)
        assert gap_eval(g0, arg, "enumerate") == -(z == w)
        assert gap_eval(g1, arg, "enumerate") == 0


def test_matrix_product_random_q3():
    rng = np.random.default_rng(11)
    for _ in range(5):
        mats = [ExactMatrix(rng.integers(-2, 3, (2, 2)), rng.integers(-2, 3, (2, 2))) for _ in range(3)]
        prod = mat_mul(mat_mul(mats[0], mats[1]), mats[2])
        g0, g1 = gap_matrix_product(_spec(mats, 1))
        for z, w in itertools.product("01", repeat=2):
            e = prod.entry(z, w)
            arg = tuple_encode("", z, w)
            for strategy in ("enumerate", "layered"):
                assert (gap_eval(g0, arg, strategy), gap_eval(g1, arg, strategy)) == (e.re, e.im)


def test_combinator_suites_small():
    for fn in (check_sum, check_product, check_matrix_product):
        res = fn(15, seed=3)
        assert res.passed, res.details


def test_negate_reindex_pad():
    f = from_values(lambda s: len(s) - 2, 3)
    assert gap_eval(negate(f), "00000") == -3
    assert gap_eval(reindex(f, lambda s: s + "0"), "0000") == 3
    padded = pad_witness(f, lambda s: 6)
    assert gap_eval(padded, "00000") == 3


def test_amplitude_identity_and_hadamard():
    c = Circuit(1, ())
    assert circuit_amplitude_gap(c, "0", "0", "0", "0") == (4, 0, 2)
    h = Circuit(1, (H(0),))
    f0, f1, r = circuit_amplitude_gap(h, "0", "0", "0", "0")
    assert (f0, f1) == (2 ** (r - 1), 0)


def test_amplitude_two_qubit_four_gates():
    c = Circuit(2, (H(0), P(1), H(1), P(0)))
    K = circuit_rep(c).matrix
    for z, w, u, v in itertools.product(["00", "01", "10", "11"], repeat=4):
        f0, f1, r = circuit_amplitude_gap(c, z, w, u, v)
        e = K.entry(u + v, z + w)
        assert (f0, f1) == (e.real * 2 ** r, e.imag * 2 ** r)


def test_amplitude_phase_imaginary_part():
    c = Circuit(1, (P(0),))
    f0, f1, r = circuit_amplitude_gap(c, "1", "0", "1", "0")
    # P|1><0|P* = i|1><0|
    assert (f0, f1) == (0, 2 ** r)


def test_amplitude_cap():
    c = Circuit(2, tuple(X(0) + X(1) + [ANC(), ANC(), T(0, 1, 2), T(0, 1, 3)]))
    with pytest.raises(CapExceeded):
        circuit_amplitude_gap(c, "00", "00", "0000", "0000", cap=10, strategy="enumerate")
