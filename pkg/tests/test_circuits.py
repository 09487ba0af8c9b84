import numpy as np
import pytest

from oracles import accept_operator
from refgames.circuits import (ANC, TR, Circuit, CircuitError, Mode, ParseError, PromiseThresholds,
                               Referee, H, T, X, build_dephasing, circuit_size, compose_referee,
                               format_circuit, format_referee, parse_circuit, parse_referee,
                               swap_roles, validate)
from refgames.library import bits_equal, mqrg_referee, random_circuit, random_referee


def test_validation_examples():
    assert validate(Circuit(2, (H(0), T(0, 1, 1)))).ok is False
    rep = validate(Circuit(1, (TR(0), TR(0))))
    assert not rep.ok and rep.position == 1 and "negative live count" in rep.message
    rep = validate(Circuit(1, (ANC(), H(1), TR(0))))
    assert rep.ok and rep.outputs == 1
    assert not validate(Circuit(1, (H(1),))).ok


def test_size_counts_gates_inputs_outputs():
    c = Circuit(2, (ANC(), T(0, 1, 2), TR(0), TR(0)))
    assert circuit_size(c) == 4 + 2 + 1


def test_x_is_hppH():
    assert [g.kind.name for g in X(0)] == ["H", "P", "P", "H"]


def test_dephasing_shape():
    c = build_dephasing(2)
    assert c.inputs == c.outputs == 2
    assert len(c.gates) == 2 * 9
    # dephasing kills coherences and keeps populations
    rho = np.full((4, 4), 0.25)
    from oracles import simulate
    assert np.allclose(simulate(c, rho), np.eye(4) / 4)


def test_circuit_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(30):
        c = random_circuit(rng)
        assert parse_circuit(format_circuit(c)) == c


def test_referee_roundtrip():
    rng = np.random.default_rng(1)
    for mode in Mode:
        r = random_referee(rng, mode, 1, 1, gates=6)
        assert parse_referee(format_referee(r)) == r


def test_parse_errors_name_lines():
    with pytest.raises(ParseError) as e:
        parse_circuit("inputs 1\nH 0\nQ 0\n")
    assert e.value.line == 3
    with pytest.raises(ParseError) as e:
        parse_circuit("# header\ninputs 1\nH 2\n")
    assert e.value.line == 3
    with pytest.raises(ParseError) as e:
        parse_circuit("H 0\n")
    assert e.value.line == 1
    with pytest.raises(ParseError):
        parse_referee("mode qrg\nalice 1\n")
    with pytest.raises(ParseError):
        parse_referee("mode xyz\nalice 1\nbob 1\nbegin q\ninputs 2\nTR 0\n")


def test_referee_width_checks():
    with pytest.raises(CircuitError):
        Referee(Mode.CQRG, 1, 1, Circuit(3, (TR(0), TR(0))))
    with pytest.raises(CircuitError):
        Referee(Mode.QRG, 1, 1, Circuit(2, ()))
    with pytest.raises(CircuitError):
        Referee(Mode.MQRG, 1, 1, Circuit(2, (TR(0),)))
    with pytest.raises(ValueError):
        PromiseThresholds(1 / 3, 2 / 3)


def test_compose_cqrg_dephases_alice():
    r = bits_equal(Mode.CQRG)
    A = accept_operator(compose_referee(r))
    # block diagonal in Alice's bit, and diagonal overall for this referee
    assert np.allclose(A, np.diag([1, 0, 0, 1]))


def test_compose_mqrg_measures_p_output():
    p = Circuit(1, (H(0),))
    r = mqrg_referee(p, 1, 1, bits_equal().q_circuit)
    A = accept_operator(compose_referee(r))
    # Alice's qubit is measured in the Hadamard basis
    Hm = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    plus, minus = Hm[:, 0], Hm[:, 1]
    want = np.kron(np.outer(plus, plus), np.diag([1, 0])) + np.kron(np.outer(minus, minus), np.diag([0, 1]))
    assert np.allclose(A, want)


def test_swap_roles_complements_accept_operator():
    rng = np.random.default_rng(2)
    for _ in range(5):
        r = random_referee(rng, Mode.QRG, 1, 2, gates=10)
        s = swap_roles(r)
        assert (s.n, s.m) == (2, 1)
        A = accept_operator(r.q_circuit).reshape(2, 4, 2, 4)
        B = accept_operator(s.q_circuit).reshape(4, 2, 4, 2)
        assert np.allclose(B, np.eye(8).reshape(4, 2, 4, 2) - A.transpose(1, 0, 3, 2))
    with pytest.raises(CircuitError):
        swap_roles(bits_equal(Mode.CQRG))
