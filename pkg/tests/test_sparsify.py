import math

import numpy as np
import pytest

from refgames.circuits import Mode
from refgames.exact_arith import ExactMatrix
from refgames.game_solver import Distribution, EffectOperatorMap, cqrg_value, effect_operators
from refgames.library import always_accept, bits_equal, random_referee
from refgames.sparsify_concentration import (AdversarialMarkov, ExperimentConfig, IIDBernoulli,
                                             RefereeInduced, StrategyTuple, aly_bound,
                                             aly_sample_size, binomial_upper_tail,
                                             brute_force_best_tuple, check_aly_lemma,
                                             check_dependent_hoeffding, exact_failure_probability,
                                             sample_tuple, sparsified_min_eig, trial_rng,
                                             tuple_distribution)

BITS = effect_operators(bits_equal())


def test_tuple_distribution_examples():
    assert tuple_distribution(StrategyTuple(("0", "0", "1", "1"))).probs == {"0": 0.5, "1": 0.5}
    assert tuple_distribution(StrategyTuple(("1",))).probs == {"1": 1.0}
    q = tuple_distribution(StrategyTuple(("00", "01", "10")))
    assert all(v == pytest.approx(1 / 3) for v in q.probs.values())
    with pytest.raises(ValueError):
        tuple_distribution(StrategyTuple(()))
    with pytest.raises(ValueError):
        StrategyTuple(("0", "01"))


def test_sample_tuple():
    assert sample_tuple(Distribution({"1": 1.0}), 7).strings == ("1",) * 7
    u = Distribution.uniform(["0", "1"])
    t = sample_tuple(u, 10_000, seed=99)
    assert 0.47 <= t.strings.count("1") / 1e4 <= 0.53
    assert sample_tuple(u, 50, seed=5) == sample_tuple(u, 50, seed=5)


def test_total_variation_shrinks():
    p = Distribution({"00": 0.1, "01": 0.2, "10": 0.3, "11": 0.4})
    tv = []
    for N in (100, 1000, 10_000):
        q = tuple_distribution(sample_tuple(p, N, seed=1))
        tv.append(0.5 * sum(abs(q.probs.get(k, 0) - v) for k, v in p.probs.items()))
    assert tv[0] > tv[1] > tv[2]


def test_sparsified_min_eig_examples():
    assert sparsified_min_eig(effect_operators(always_accept()), StrategyTuple(("0", "1"))).value \
        == pytest.approx(1)
    assert sparsified_min_eig(BITS, StrategyTuple(("0", "1"))).value == pytest.approx(0.5)
    assert sparsified_min_eig(BITS, StrategyTuple(("0", "0"))).value == pytest.approx(0)
    with pytest.raises(KeyError):
        sparsified_min_eig(BITS, StrategyTuple(("2",)))


def test_tuples_never_beat_the_game_value():
    rng = np.random.default_rng(31)
    r = random_referee(rng, Mode.CQRG, 1, 1)
    S = effect_operators(r)
    rep = cqrg_value(r)
    for N in (1, 2, 3, 4):
        t, e = brute_force_best_tuple(S, N)
        assert e.value <= rep.upper + 1e-4


def test_brute_force_examples():
    t, e = brute_force_best_tuple(BITS, 2)
    assert sorted(t.strings) == ["0", "1"] and e.value == pytest.approx(0.5)
    t, e = brute_force_best_tuple(effect_operators(always_accept()), 3)
    assert e.value == pytest.approx(1)
    single = EffectOperatorMap({"": ExactMatrix.from_entries([[1, 0], [0, 0.5]])}, 1)
    t, e = brute_force_best_tuple(single, 2)
    assert t.strings == ("", "") and e.value == pytest.approx(0.5)
    with pytest.raises(ValueError):
        brute_force_best_tuple(BITS, 25)


def test_aly_constants():
    assert aly_sample_size(1) == 216
    assert aly_bound(1, 216) == pytest.approx(2 * math.exp(-3))
    assert aly_bound(1, 216) == pytest.approx(0.0996, abs=1e-4)


def test_aly_deterministic_case():
    half = ExactMatrix.from_entries([[0.5, 0], [0, 0.5]])
    S = EffectOperatorMap({"0": half, "1": half}, 1)
    rep = check_aly_lemma(S, Distribution.uniform(["0", "1"]), ExperimentConfig(trials=200))
    assert rep.failures == 0 and rep.passed


def test_aly_exploratory_flag():
    rep = check_aly_lemma(BITS, Distribution.uniform(["0", "1"]), ExperimentConfig(trials=100, N=10))
    assert rep.exploratory and rep.passed is None


def test_exact_failure_probability_by_hand():
    # N = 4, uniform: lambda_min = min(k, 4 - k) / 4 for k ones; below 1/2 - 1/12 unless k = 2
    p = Distribution.uniform(["0", "1"])
    want = 1 - math.comb(4, 2) / 16
    assert exact_failure_probability(BITS, p, 4, 0.5 - 1 / 12) == pytest.approx(want)


def test_trial_rng_independent_of_order():
    a = [trial_rng(7, i).random() for i in range(5)]
    b = [trial_rng(7, i).random() for i in reversed(range(5))]
    assert a == b[::-1]


def test_binomial_tail():
    assert binomial_upper_tail(3, 0.5, 2) == pytest.approx(0.5)
    assert binomial_upper_tail(3, 0.5, 4) == 0
    direct = sum(math.comb(144, j) * 0.25 ** j * 0.75 ** (144 - j) for j in range(48, 145))
    assert binomial_upper_tail(144, 0.25, 48) == pytest.approx(direct, rel=1e-12)


def test_hoeffding_trivial_and_small():
    cfg = ExperimentConfig(trials=500, N=50, epsilon=0.8, gamma=0.25)
    rep = check_dependent_hoeffding(IIDBernoulli(0.25), cfg)
    assert rep.empirical == 0 and rep.passed
    cfg = ExperimentConfig(trials=4000, N=144, epsilon=1 / 12)
    for proc in (IIDBernoulli(0.25), AdversarialMarkov(0.25)):
        rep = check_dependent_hoeffding(proc, cfg)
        assert rep.passed, rep
    assert rep.bound == pytest.approx(math.exp(-2))


def test_processes_respect_conditional_mean():
    rng = np.random.default_rng(3)
    U = rng.random((20_000, 6, 1))
    X = AdversarialMarkov(0.25).run(U)
    after_one = X[:, 1:][X[:, :-1] > 0]
    after_zero = X[:, 1:][X[:, :-1] == 0]
    assert after_one.mean() == pytest.approx(0.25, abs=0.02)
    assert after_zero.mean() == pytest.approx(0.25, abs=0.02)
    proc = RefereeInduced([0.2, 0.25], [0.5, 0.5])
    assert proc.gamma == 0.25
    X = proc.run(rng.random((20_000, 6, 2)))
    assert X.mean() <= 0.25 + 0.01
