"""Game values for one-turn referees, with duality-gap certificates.

Every model reduces to a bilinear zero-sum game
``max_rho min_sigma Tr(E (rho (x) sigma))`` with ``E`` the referee's
accept effect pulled back to the players' registers:

* QRG: ``E = Q*(|1><1|)`` over Alice's and Bob's qubits.
* CQRG: ``E = sum_y |y><y| (x) S_y``; Alice is a distribution over ``y``.
* MQRG: ``E = sum_y P*(|y><y|) (x) S_y``.

The game is solved by optimistic (matrix) multiplicative weights.  Any
strategy of Alice certifies a lower bound (Bob's best response against it)
and any strategy of Bob an upper bound, so the reported gap is honest
whatever the iterates did.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .circuits import Mode, Referee, validate
from .exact_arith import ExactMatrix
from .natural_rep import MAX_LIVE_QUBITS, heisenberg

DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 200_000
DEFAULT_ETA = 4.0
CHECK_EVERY = 50
MAX_QRG_QUBITS = 8


class ConvergenceError(RuntimeError):
    def __init__(self, report: "GameValueReport"):
        super().__init__(f"no certificate within tolerance after {report.iterations} iterations "
                         f"(best gap {report.duality_gap:.3e})")
        self.report = report


class GameCapError(ValueError):
    pass


# data types --------------------------------------------------------------------

@dataclass(frozen=True)
class Distribution:
    probs: Mapping[str, float]

    def __post_init__(self):
        vals = list(self.probs.values())
        if not vals:
            raise ValueError("empty distribution")
        if min(vals) < 0 or abs(sum(vals) - 1) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")

    @classmethod
    def from_vector(cls, keys, p: np.ndarray) -> "Distribution":
        p = np.clip(np.asarray(p, dtype=float), 0, None)
        p = p / p.sum()
        return cls(dict(zip(keys, (float(v) for v in p))))

    @classmethod
    def uniform(cls, keys) -> "Distribution":
        keys = list(keys)
        return cls({k: 1 / len(keys) for k in keys})

    def vector(self, keys) -> np.ndarray:
        return np.array([self.probs.get(k, 0.0) for k in keys])


@dataclass(frozen=True)
class EigenResult:
    value: float
    vector: np.ndarray
    residual: float


@dataclass
class EffectOperatorMap:
    """``S_y`` for every first-register string ``y``, exact and floating."""

    exact: dict[str, ExactMatrix]
    m: int

    @property
    def keys(self) -> list[str]:
        return list(self.exact)

    def __getitem__(self, y: str) -> np.ndarray:
        return self.exact[y].to_numpy()

    def stack(self) -> np.ndarray:
        return np.stack([s.to_numpy() for s in self.exact.values()])

    def complement(self, y: str) -> ExactMatrix:
        """``T_y = I - S_y``."""
        return ExactMatrix.identity(2 ** self.m) - self.exact[y]

    def check(self, atol: float = 1e-9) -> None:
        for y, s in self.exact.items():
            if not s.is_hermitian():
                raise ValueError(f"S_{y} is not Hermitian")
            w = np.linalg.eigvalsh(s.to_numpy())
            if w[0] < -atol or w[-1] > 1 + atol:
                raise ValueError(f"S_{y} has eigenvalues outside [0, 1]")


@dataclass
class GameValueReport:
    value: float
    alice_strategy: Distribution | np.ndarray
    bob_strategy: np.ndarray
    duality_gap: float
    iterations: int
    lower: float
    upper: float
    converged: bool
    tol: float
    mode: str = ""
    history: list[tuple[int, float, float]] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        alice = (dict(self.alice_strategy.probs) if isinstance(self.alice_strategy, Distribution)
                 else _matrix_json(self.alice_strategy))
        return {"mode": self.mode, "value": self.value, "lower": self.lower, "upper": self.upper,
                "duality_gap": self.duality_gap, "tol": self.tol, "iterations": self.iterations,
                "converged": self.converged, "alice_strategy": alice,
                "bob_strategy": _matrix_json(self.bob_strategy)}


def _matrix_json(a: np.ndarray) -> dict:
    return {"re": np.real(a).tolist(), "im": np.imag(a).tolist()}


# eigenvalues -------------------------------------------------------------------

def _as_hermitian(M) -> np.ndarray:
    a = M.to_numpy() if isinstance(M, ExactMatrix) else np.asarray(M, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("eigenvalue input must be a square matrix")
    if np.max(np.abs(a - a.conj().T), initial=0.0) > 1e-10:
        raise ValueError("matrix is not Hermitian within 1e-10")
    return (a + a.conj().T) / 2


def _eigen(M, pick: int) -> EigenResult:
    a = _as_hermitian(M)
    w, v = np.linalg.eigh(a)
    vec = v[:, pick]
    lam = float(w[pick])
    res = float(np.linalg.norm(a @ vec - lam * vec))
    return EigenResult(lam, vec, res)


def min_eigen(M) -> EigenResult:
    return _eigen(M, 0)


def max_eigen(M) -> EigenResult:
    return _eigen(M, -1)


# effect operators ------------------------------------------------------------

def _check_width(total: int, what: str):
    if total > MAX_LIVE_QUBITS:
        raise GameCapError(f"{what} needs {total} qubits; the exact engine is capped at {MAX_LIVE_QUBITS}")


def accept_effect(r: Referee) -> ExactMatrix:
    """``Q*(|1><1|)`` on ``q_circuit``'s input register."""
    _check_width(max(r.q_circuit.live_counts()), "accept effect")
    return heisenberg(r.q_circuit, ExactMatrix.basis_projector("1"))


def _blocks(E: ExactMatrix, first: int, m: int) -> dict[str, ExactMatrix]:
    d = 2 ** m
    out = {}
    for y in range(2 ** first):
        sl = slice(y * d, (y + 1) * d)
        out[format(y, f"0{first}b") if first else ""] = ExactMatrix(E.re[sl, sl], E.im[sl, sl], E.exp)
    return out


def effect_operators(r: Referee) -> EffectOperatorMap:
    """``S_y = (<y| (x) I) Q*(|1><1|) (|y> (x) I)`` for each classical ``y``."""
    if r.mode is Mode.QRG:
        raise ValueError("QRG referees have no classical register to condition on")
    return EffectOperatorMap(_blocks(accept_effect(r), r.first_width, r.m), r.m)


def alice_effects(r: Referee) -> dict[str, ExactMatrix]:
    """``P*(|y><y|)`` for MQRG referees."""
    if r.mode is not Mode.MQRG:
        raise ValueError("only MQRG referees measure a p_circuit outcome")
    validate(r.p_circuit).raise_if_invalid()
    _check_width(max(r.p_circuit.live_counts()), "Alice effects")
    return {format(y, f"0{r.k}b") if r.k else "":
            heisenberg(r.p_circuit, ExactMatrix.basis_projector(format(y, f"0{r.k}b")))
            for y in range(2 ** r.k)}


# solver ------------------------------------------------------------------------

def _gibbs(G: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((G + G.conj().T) / 2)
    e = np.exp(w - w.max())
    x = (v * e) @ v.conj().T
    return x / np.trace(x).real


def _softmax(g: np.ndarray) -> np.ndarray:
    e = np.exp(g - g.max())
    return e / e.sum()


@dataclass(frozen=True)
class _Side:
    """One player's strategy space: density operators or a simplex."""

    simplex: bool
    dim: int

    def play(self, G):
        return _softmax(G.real) if self.simplex else _gibbs(G)

    def zero(self):
        return np.zeros(self.dim) if self.simplex else np.zeros((self.dim, self.dim), complex)

    def one(self):
        return np.ones(self.dim) if self.simplex else np.eye(self.dim)

    def top(self, g) -> float:
        return float(np.max(g.real)) if self.simplex else float(np.linalg.eigvalsh(g)[-1])

    def bottom(self, g) -> float:
        return float(np.min(g.real)) if self.simplex else float(np.linalg.eigvalsh(g)[0])


@dataclass
class _Outcome:
    lower: float
    upper: float
    x: np.ndarray
    y: np.ndarray
    iterations: int
    history: list


def _solve(xs: _Side, ys: _Side, grad_x: Callable, grad_y: Callable, tol: float,
           max_iter: int, eta: float) -> _Outcome:
    """``max_x min_y`` of a bilinear payoff with ``<x, grad_x(y)> = <y, grad_y(x)>``.

    ``grad_x(y)`` is the maximiser's payoff gradient, ``grad_y(x)`` the
    minimiser's.
    """
    Lx, Ly = xs.zero(), ys.zero()
    px, py = xs.zero(), ys.zero()
    sx, sy = xs.zero(), ys.zero()
    best_lo, best_hi = -np.inf, np.inf
    bx = by = None
    history = []
    t = 0
    for t in range(1, max_iter + 1):
        x = xs.play(eta * (Lx + px))
        y = ys.play(-eta * (Ly + py))
        gx, gy = grad_x(y), grad_y(x)
        Lx, Ly, px, py = Lx + gx, Ly + gy, gx, gy
        sx, sy = sx + x, sy + y
        if t == 1 or t % CHECK_EVERY == 0:
            for cx, cy, gcy, gcx in ((x, y, gy, gx), (sx / t, sy / t, None, None)):
                lo = ys.bottom(grad_y(cx) if gcy is None else gcy)
                hi = xs.top(grad_x(cy) if gcx is None else gcx)
                if lo > best_lo:
                    best_lo, bx = lo, cx
                if hi < best_hi:
                    best_hi, by = hi, cy
            history.append((t, best_lo, best_hi))
            if best_hi - best_lo <= tol:
                break
    return _Outcome(best_lo, best_hi, bx, by, t, history)


def _report(out: _Outcome, alice, bob, tol: float, mode: str, strict: bool) -> GameValueReport:
    lo, hi = max(out.lower, 0.0), min(out.upper, 1.0)
    gap = max(hi - lo, 0.0)
    rep = GameValueReport(value=min(max((lo + hi) / 2, 0.0), 1.0), alice_strategy=alice,
                          bob_strategy=bob, duality_gap=gap, iterations=out.iterations,
                          lower=lo, upper=hi, converged=gap <= tol, tol=tol, mode=mode,
                          history=out.history)
    if strict and not rep.converged:
        raise ConvergenceError(rep)
    return rep


def _factored_grads(A: np.ndarray | None, S: np.ndarray):
    """Gradients of ``Tr((sum_y A_y (x) S_y)(rho (x) sigma))``; ``A is None``
    means Alice plays a distribution over ``y``."""
    if A is None:
        ga = lambda sig: np.einsum("ybc,cb->y", S, sig).real
        gb = lambda p: np.einsum("y,ybc->bc", p, S)
    else:
        ga = lambda sig: np.einsum("y,yij->ij", np.einsum("ybc,cb->y", S, sig).real, A)
        gb = lambda rho: np.einsum("y,ybc->bc", np.einsum("yij,ji->y", A, rho).real, S)
    return ga, gb


def _dense_grads(E: np.ndarray, dA: int, dB: int):
    E4 = E.reshape(dA, dB, dA, dB)
    ga = lambda sig: np.einsum("ibjc,cb->ij", E4, sig)
    gb = lambda rho: np.einsum("ibjc,ji->bc", E4, rho)
    return ga, gb


def _game(r: Referee):
    """``(alice side, bob side, grad_alice, grad_bob, keys)`` for a referee."""
    dB = 2 ** r.m
    if r.mode is Mode.QRG:
        if r.n + r.m > MAX_QRG_QUBITS:
            raise GameCapError(f"QRG game on {r.n + r.m} qubits exceeds the cap of {MAX_QRG_QUBITS}")
        dA = 2 ** r.n
        ga, gb = _dense_grads(accept_effect(r).to_numpy(), dA, dB)
        return _Side(False, dA), _Side(False, dB), ga, gb, None
    S = effect_operators(r)
    stack = S.stack()
    if r.mode is Mode.CQRG:
        ga, gb = _factored_grads(None, stack)
        return _Side(True, len(S.keys)), _Side(False, dB), ga, gb, S.keys
    A = np.stack([a.to_numpy() for a in alice_effects(r).values()])
    ga, gb = _factored_grads(A, stack)
    return _Side(False, 2 ** r.n), _Side(False, dB), ga, gb, None


def game_value(r: Referee, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
               eta: float = DEFAULT_ETA, strict: bool = True) -> GameValueReport:
    """``omega(r)`` with certified bounds; dispatches on the referee's mode."""
    xs, ys, ga, gb, keys = _game(r)
    out = _solve(xs, ys, ga, gb, tol, max_iter, eta)
    alice = Distribution.from_vector(keys, out.x) if keys is not None else out.x
    return _report(out, alice, out.y, tol, r.mode.value, strict)


def _require(r: Referee, mode: Mode):
    if r.mode is not mode:
        raise ValueError(f"expected a {mode.value} referee, got {r.mode.value}")


def cqrg_value(r: Referee, tol: float = DEFAULT_TOL, **kw) -> GameValueReport:
    _require(r, Mode.CQRG)
    return game_value(r, tol, **kw)


def mqrg_value(r: Referee, tol: float = DEFAULT_TOL, **kw) -> GameValueReport:
    _require(r, Mode.MQRG)
    return game_value(r, tol, **kw)


def qrg_value(r: Referee, tol: float = DEFAULT_TOL, **kw) -> GameValueReport:
    _require(r, Mode.QRG)
    return game_value(r, tol, **kw)


@dataclass(frozen=True)
class MinimaxReport:
    max_min: GameValueReport
    min_max: float
    min_max_gap: float

    @property
    def difference(self) -> float:
        return abs(self.max_min.value - self.min_max)


def minimax_exchange(r: Referee, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                     eta: float = DEFAULT_ETA) -> MinimaxReport:
    """Solve ``max min`` and, separately, ``min max`` with Bob moving first.

    The second order is the game in which Bob maximises ``1 - payoff``; its
    value is ``1 - min_sigma max_rho payoff``.
    """
    first = game_value(r, tol, max_iter, eta)
    xs, ys, ga, gb, _ = _game(r)
    out = _solve(ys, xs, lambda a: ys.one() - gb(a), lambda b: xs.one() - ga(b), tol, max_iter, eta)
    second = _report(out, out.y, out.x, tol, r.mode.value, True)
    return MinimaxReport(first, 1 - second.value, second.duality_gap)


def best_response_check(r: Referee, rep: GameValueReport) -> float:
    """Alice's payoff gain when Bob swaps to the minimising eigenvector of
    her certified strategy's averaged operator (never positive beyond tol)."""
    xs, ys, ga, gb, keys = _game(r)
    a = rep.alice_strategy.vector(keys) if keys is not None else rep.alice_strategy
    g = gb(a)
    v = min_eigen(g).vector
    swap = float(np.real(v.conj() @ g @ v))
    return swap - rep.lower
