"""Sparsifying Alice's distribution to a uniform N-tuple, and empirical
checks of the two concentration bounds behind it.

Randomness: trial ``i`` of an experiment with master seed ``s`` draws from
``numpy.random.Generator(PCG64(SeedSequence([s, i])))``, so results do not
depend on how trials are scheduled.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Protocol, Sequence

import numpy as np

from .game_solver import Distribution, EffectOperatorMap, EigenResult, min_eigen

DEFAULT_SEED = 20240601
BRUTE_FORCE_CAP = 10**6
ALY_FACTOR = 72


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, trial])))


@dataclass(frozen=True)
class StrategyTuple:
    strings: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "strings", tuple(self.strings))
        if self.strings and len({len(s) for s in self.strings}) != 1:
            raise ValueError("tuple strings must share one length")

    @property
    def N(self) -> int:
        return len(self.strings)


@dataclass(frozen=True)
class ExperimentConfig:
    trials: int = 2000
    N: int = 216
    epsilon: float = 1 / 12
    eta: float = 0.5
    dim: int = 2
    gamma: float = 0.25
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.trials < 1 or self.N < 1 or self.dim < 1:
            raise ValueError("trials, N and dim must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not (0 <= self.eta <= 1 and 0 <= self.gamma <= 1):
            raise ValueError("eta and gamma must lie in [0, 1]")


def tuple_distribution(t: StrategyTuple) -> Distribution:
    """``q(y) = |{j : y_j = y}| / N``."""
    if not t.strings:
        raise ValueError("empty tuple")
    counts: dict[str, int] = {}
    for y in t.strings:
        counts[y] = counts.get(y, 0) + 1
    return Distribution({y: c / t.N for y, c in sorted(counts.items())})


def sample_tuple(p: Distribution, N: int, seed: int = DEFAULT_SEED) -> StrategyTuple:
    keys = sorted(p.probs)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(keys), size=N, p=p.vector(keys))
    return StrategyTuple(tuple(keys[i] for i in idx))


def _average(S: EffectOperatorMap, weights: Mapping[str, float]) -> np.ndarray:
    d = 2 ** S.m
    out = np.zeros((d, d), complex)
    for y, w in weights.items():
        if y not in S.exact:
            raise KeyError(f"no effect operator for string {y!r}")
        out += w * S[y]
    return out


def sparsified_min_eig(S: EffectOperatorMap, t: StrategyTuple) -> EigenResult:
    """``lambda_min((S_{y_1} + ... + S_{y_N}) / N)``."""
    return min_eigen(_average(S, tuple_distribution(t).probs))


def distribution_min_eig(S: EffectOperatorMap, p: Distribution) -> EigenResult:
    return min_eigen(_average(S, p.probs))


def aly_sample_size(m: int) -> int:
    return ALY_FACTOR * (m + 2)


def aly_bound(m: int, N: int) -> float:
    """``2^m exp(-N / 72)``."""
    return 2.0 ** m * math.exp(-N / ALY_FACTOR)


def _is_diagonal(S: EffectOperatorMap) -> bool:
    return all(np.count_nonzero(s.re - np.diag(np.diag(s.re))) == 0 and not s.im.any()
               for s in S.exact.values())


def _compositions(N: int, k: int):
    if k == 1:
        yield (N,)
        return
    for first in range(N + 1):
        for rest in _compositions(N - first, k - 1):
            yield (first,) + rest


def exact_failure_probability(S: EffectOperatorMap, p: Distribution, N: int,
                              threshold: float) -> float:
    """``Pr[lambda_min(avg) < threshold]`` for commuting diagonal effects,
    summed exactly over the multinomial law of the counts."""
    if not _is_diagonal(S):
        raise ValueError("exact tail only available for diagonal effect operators")
    keys = [y for y in sorted(p.probs) if p.probs[y] > 0]
    if math.comb(N + len(keys) - 1, len(keys) - 1) > BRUTE_FORCE_CAP:
        raise ValueError("too many count vectors for the exact multinomial sum")
    diag = np.array([np.diag(S[y]).real for y in keys])
    probs = [p.probs[y] for y in keys]
    total = 0.0
    for counts in _compositions(N, len(keys)):
        lam = float(np.min(np.asarray(counts) @ diag)) / N
        if lam < threshold - 1e-12:
            logp = math.lgamma(N + 1) + sum(c * math.log(q) - math.lgamma(c + 1)
                                            for c, q in zip(counts, probs))
            total += math.exp(logp)
    return total


@dataclass
class AlyReport:
    failure_rate: float
    failures: int
    trials: int
    N: int
    m: int
    epsilon: float
    baseline: float
    bound: float
    threshold: float
    std_error: float
    exploratory: bool
    passed: bool | None      # None: precondition unmet, nothing asserted
    seed: int
    exact_failure: float | None = None
    exact_match: bool | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check_aly_lemma(S: EffectOperatorMap, p: Distribution, cfg: ExperimentConfig,
                    failure_threshold: float = 1 / 3) -> AlyReport:
    """Empirical ``Pr[lambda_min(tuple average) < lambda_min(sum p S) - eps]``.

    Passing means the empirical rate is below ``failure_threshold`` plus three
    binomial standard errors; with ``N < 72(m+2)`` the report is marked
    exploratory, the bound carries no guarantee and ``passed`` is ``None``.
    """
    keys = sorted(p.probs)
    stack = np.stack([S[y] for y in keys])
    pv = p.vector(keys)
    baseline = distribution_min_eig(S, p).value
    cut = baseline - cfg.epsilon
    fails = 0
    for i in range(cfg.trials):
        counts = trial_rng(cfg.seed, i).multinomial(cfg.N, pv)
        avg = np.einsum("y,yij->ij", counts / cfg.N, stack)
        if np.linalg.eigvalsh(avg)[0] < cut - 1e-12:
            fails += 1
    rate = fails / cfg.trials
    se = math.sqrt(failure_threshold * (1 - failure_threshold) / cfg.trials)
    exploratory = cfg.N < aly_sample_size(S.m)
    passed = None if exploratory else rate < failure_threshold + 3 * se
    rep = AlyReport(rate, fails, cfg.trials, cfg.N, S.m, cfg.epsilon, baseline,
                    aly_bound(S.m, cfg.N), failure_threshold, se, exploratory, passed, cfg.seed)
    if _is_diagonal(S) and len(keys) <= 4:
        exact = exact_failure_probability(S, p, cfg.N, cut)
        rep.exact_failure = exact
        rep.exact_match = abs(rate - exact) <= 3 * math.sqrt(exact * (1 - exact) / cfg.trials) + 1e-12
    return rep


def brute_force_best_tuple(S: EffectOperatorMap, N: int,
                           cap: int = BRUTE_FORCE_CAP) -> tuple[StrategyTuple, EigenResult]:
    """The tuple maximising ``sparsified_min_eig``.

    Tuples differing by order share an average, so count vectors are
    enumerated; the cap applies to the full ``|Sigma^n|^N`` tuple space.
    """
    keys = S.keys
    if len(keys) ** N > cap:
        raise ValueError(f"{len(keys)}^{N} tuples exceed the enumeration cap {cap}")
    best = None
    for combo in itertools.combinations_with_replacement(keys, N):
        t = StrategyTuple(combo)
        e = sparsified_min_eig(S, t)
        if best is None or e.value > best[1].value + 1e-12:
            best = (t, e)
    return best


# dependent Hoeffding -------------------------------------------------------------

class Process(Protocol):
    """A sequence ``X_1..X_n`` in ``[0, 1]`` with ``E[X_k | past] <= gamma``."""

    name: str
    gamma: float

    def draws_per_step(self) -> int: ...

    def run(self, U: np.ndarray) -> np.ndarray:
        """Map uniforms ``(trials, n, draws)`` to values ``(trials, n)``."""


@dataclass
class IIDBernoulli:
    gamma: float
    name: str = "iid"

    def draws_per_step(self) -> int:
        return 1

    def run(self, U):
        return (U[..., 0] < self.gamma).astype(float)


@dataclass
class AdversarialMarkov:
    """After a 0 the next value is Bernoulli(gamma); after a positive value it
    is 0 or ``2 gamma`` with equal odds (or Bernoulli(gamma) when
    ``2 gamma > 1``).  Every conditional mean equals ``gamma``."""

    gamma: float
    name: str = "markov"

    def draws_per_step(self) -> int:
        return 1

    def run(self, U):
        g = self.gamma
        trials, n, _ = U.shape
        X = np.zeros((trials, n))
        prev = np.zeros(trials)
        for k in range(n):
            u = U[:, k, 0]
            fresh = (u < g).astype(float)
            lumpy = np.where(u < 0.5, 0.0, 2 * g) if 2 * g <= 1 else fresh
            X[:, k] = np.where(prev > 0, lumpy, fresh)
            prev = X[:, k]
        return X


@dataclass
class RefereeInduced:
    """``X_j`` is the accept outcome of measuring ``S_{y_j}`` against a fixed
    ``sigma``; Alice picks ``y_j`` adaptively (her best string after an
    accept, a draw from ``p`` after a reject).  ``gamma = max_y Tr(S_y sigma)``."""

    accept_probs: Sequence[float]
    p: Sequence[float]
    name: str = "referee"
    gamma: float = field(init=False)

    def __post_init__(self):
        self.accept_probs = np.clip(np.asarray(self.accept_probs, dtype=float), 0, 1)
        self.p = np.asarray(self.p, dtype=float)
        self.gamma = float(self.accept_probs.max())

    @classmethod
    def from_effects(cls, S: EffectOperatorMap, sigma: np.ndarray, p: Distribution) -> "RefereeInduced":
        keys = S.keys
        return cls([float(np.trace(S[y] @ sigma).real) for y in keys], p.vector(keys))

    def draws_per_step(self) -> int:
        return 2

    def run(self, U):
        v, cdf = self.accept_probs, np.cumsum(self.p)
        best = int(np.argmax(v))
        trials, n, _ = U.shape
        X = np.zeros((trials, n))
        prev = np.zeros(trials, dtype=bool)
        for k in range(n):
            drawn = np.minimum(np.searchsorted(cdf, U[:, k, 0], side="right"), len(v) - 1)
            y = np.where(prev, best, drawn)
            X[:, k] = (U[:, k, 1] < v[y]).astype(float)
            prev = X[:, k] > 0
        return X


def binomial_upper_tail(n: int, q: float, k: int) -> float:
    """``Pr[Binomial(n, q) >= k]``, summed with exact integer coefficients."""
    k = max(k, 0)
    if k > n:
        return 0.0
    return float(sum(Fraction(math.comb(n, j)) * Fraction(q) ** j * (1 - Fraction(q)) ** (n - j)
                     for j in range(k, n + 1)))


@dataclass
class HoeffdingReport:
    process: str
    n: int
    gamma: float
    epsilon: float
    trials: int
    empirical: float
    bound: float
    std_error: float
    passed: bool
    seed: int
    exact: float | None = None
    exact_match: bool | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def hoeffding_bound(n: int, epsilon: float) -> float:
    return math.exp(-2 * n * epsilon ** 2)


def check_dependent_hoeffding(process: Process, cfg: ExperimentConfig, n: int | None = None,
                              batch: int = 4096) -> HoeffdingReport:
    """Empirical ``Pr[(X_1 + ... + X_n)/n >= gamma + eps]`` against
    ``exp(-2 n eps^2)``, with three binomial standard errors of slack.

    ``n`` defaults to ``cfg.N``; ``gamma`` comes from the process.
    """
    n = cfg.N if n is None else n
    g, eps = process.gamma, cfg.epsilon
    target = n * (Fraction(g) + Fraction(eps))
    hits = 0
    d = process.draws_per_step()
    for start in range(0, cfg.trials, batch):
        idx = range(start, min(cfg.trials, start + batch))
        U = np.stack([trial_rng(cfg.seed, i).random((n, d)) for i in idx])
        sums = process.run(U).sum(axis=1)
        hits += int(np.count_nonzero(sums >= float(target) - 1e-9))
    emp = hits / cfg.trials
    bound = hoeffding_bound(n, eps)
    se = math.sqrt(bound * (1 - bound) / cfg.trials)
    rep = HoeffdingReport(process.name, n, g, eps, cfg.trials, emp, min(bound, 1.0), se,
                          emp <= bound + 3 * se, cfg.seed)
    if isinstance(process, IIDBernoulli):
        exact = binomial_upper_tail(n, g, math.ceil(target - Fraction(1, 10**9)))
        rep.exact = exact
        rep.exact_match = abs(emp - exact) <= 3 * math.sqrt(exact * (1 - exact) / cfg.trials) + 1e-12
    return rep
