"""Equality testing without a shared frame, and binary state discrimination.

In the equality game a referee prepares ``rho(x)rho``, ``sigma(x)sigma``,
``rho(x)sigma`` or ``sigma(x)rho`` uniformly at random and hides them behind
``U (x) U``.  A strategy is a two-outcome POVM ``(M, I - M)`` where ``M``
means "same".  Rounds are simulated by computing the exact probability of
answering "same" and flipping one biased coin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    density_matrix,
    hermitian,
    positive_part_projector,
    schatten_norm,
    swap_operator,
)
from .montecarlo import run_blocks
from .sampling import RngStream, haar_unitaries, haar_unitary
from .verifiers import twirl_closed_form

__all__ = [
    "PREPARATIONS",
    "GameSpec",
    "GameResult",
    "swap_test_accept_prob",
    "swap_test_operator",
    "strategy_operator",
    "equality_game_success",
    "equality_game_analytic",
    "equality_game_simulate",
    "helstrom_bias",
    "povm_bias",
    "random_basis_povm",
]

# (first, second, same?) with 0 = rho, 1 = sigma
PREPARATIONS = ((0, 0, True), (1, 1, True), (0, 1, False), (1, 0, False))

_POVM_TOL = 1e-9


def _pair(rho, sigma):
    rho, sigma = density_matrix(rho), density_matrix(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"states have different dimensions: {rho.shape} vs {sigma.shape}")
    return rho, sigma


def swap_test_accept_prob(A, B) -> float:
    """``1/2 + tr[AB]/2``."""
    A, B = _pair(A, B)
    return 0.5 + 0.5 * float(np.real(np.trace(A @ B)))


def swap_test_operator(d: int) -> np.ndarray:
    """Accepting POVM element of the swap test, ``(I + F_d)/2``."""
    return (np.eye(d * d) + swap_operator(d)) / 2


def _validate_measurement(M, n):
    M = hermitian(M)
    if M.shape != (n, n):
        raise ValueError(f"measurement operator must be {n}x{n}, got {M.shape}")
    w = np.linalg.eigvalsh(M)
    if w[0] < -_POVM_TOL or w[-1] > 1 + _POVM_TOL:
        raise ValueError(f"measurement operator eigenvalues {w[0]:.3e}..{w[-1]:.3e} outside [0, 1]")
    return M


def strategy_operator(strategy, d: int) -> np.ndarray:
    """The "same" POVM element for ``"swap-test"``, ``"optimal-M"`` or an explicit matrix."""
    if isinstance(strategy, str):
        if strategy == "swap-test":
            return swap_test_operator(d)
        if strategy == "optimal-M":
            return positive_part_projector(swap_operator(d) - np.eye(d * d) / d)
        raise ValueError(f"unknown strategy {strategy!r}")
    return _validate_measurement(strategy, d * d)


def _same_probs(M, rho, sigma, U):
    """Probability of answering "same" for each preparation, under a fixed ``U``."""
    states = [U @ rho @ U.conj().T, U @ sigma @ U.conj().T]
    return np.array([np.real(np.trace(M @ np.kron(states[a], states[b]))) for a, b, _ in PREPARATIONS])


def equality_game_success(rho, sigma, strategy="swap-test", U=None) -> float:
    """Exact success probability against a fixed adversary unitary ``U`` (identity if omitted)."""
    rho, sigma = _pair(rho, sigma)
    d = rho.shape[0]
    M = strategy_operator(strategy, d)
    U = np.eye(d) if U is None else np.asarray(U, dtype=complex)
    p = _same_probs(M, rho, sigma, U)
    return float(0.25 * (p[0] + p[1] + (1 - p[2]) + (1 - p[3])))


def equality_game_analytic(rho, sigma, strategy="swap-test") -> float:
    """Success probability averaged over a Haar-random adversary.

    For the swap test this is ``1/2 + ||rho - sigma||_2^2 / 8`` for every
    ``U``.  Other strategies use the twirl closed form: the average bias
    is ``tr[M T] / 2`` with ``T`` the twirl of ``(rho - sigma)^{(x)2}``.
    """
    rho, sigma = _pair(rho, sigma)
    d = rho.shape[0]
    delta = rho - sigma
    if isinstance(strategy, str) and strategy == "swap-test":
        return 0.5 + schatten_norm(delta, 2) ** 2 / 8
    M = strategy_operator(strategy, d)
    bias = 0.5 * float(np.real(np.trace(M @ twirl_closed_form(delta, d))))
    return 0.5 + bias / 2


@dataclass
class GameSpec:
    rho: np.ndarray
    sigma: np.ndarray
    rounds: int
    adversary: str = "haar-U"
    strategy: object = "swap-test"
    unitary: np.ndarray | None = None

    def __post_init__(self):
        self.rho, self.sigma = _pair(self.rho, self.sigma)
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.adversary not in ("fixed-U", "haar-U"):
            raise ValueError(f"adversary must be 'fixed-U' or 'haar-U', got {self.adversary!r}")
        self.measurement = strategy_operator(self.strategy, self.dim)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]


@dataclass
class GameResult:
    success_rate: float
    std_error: float
    analytic_success: float
    bias: float
    rounds: int
    trace: list = field(default_factory=list, repr=False)


def equality_game_simulate(spec: GameSpec, rng: RngStream, workers: int = 1,
                           keep_trace: bool = False) -> GameResult:
    """Play ``spec.rounds`` rounds and score them.

    With ``adversary="fixed-U"`` one unitary (``spec.unitary``, or a single
    Haar draw) is used for every round; with ``"haar-U"`` each round draws a
    fresh one.  ``analytic_success`` is the Haar-averaged value, which for
    the swap test equals the value at any fixed ``U``.
    """
    d = spec.dim
    M = spec.measurement
    fixed = None
    if spec.adversary == "fixed-U":
        fixed = spec.unitary if spec.unitary is not None else haar_unitary(d, rng.spawn(1 << 32))
        fixed_probs = _same_probs(M, spec.rho, spec.sigma, fixed)
    same_flags = np.array([s for _, _, s in PREPARATIONS])
    Mt = M.reshape(d, d, d, d)
    pair_states = [(spec.rho, spec.rho), (spec.sigma, spec.sigma), (spec.rho, spec.sigma), (spec.sigma, spec.rho)]

    def block(n, stream):
        prep = stream.integers(0, 4, size=n)
        if fixed is not None:
            p_same = fixed_probs[prep]
        else:
            U = haar_unitaries(d, n, stream)
            p_same = np.empty(n)
            for k, (a, b) in enumerate(pair_states):
                idx = np.flatnonzero(prep == k)
                if idx.size == 0:
                    continue
                Uk = U[idx]
                A = Uk @ a @ Uk.conj().transpose(0, 2, 1)
                B = Uk @ b @ Uk.conj().transpose(0, 2, 1)
                # tr[M (A (x) B)] without forming the Kronecker product
                p_same[idx] = np.einsum("ijkl,nki,nlj->n", Mt, A, B, optimize=True).real
        said_same = stream.uniform(n) < np.clip(p_same, 0.0, 1.0)
        correct = said_same == same_flags[prep]
        return prep, said_same, correct

    results = run_blocks(block, spec.rounds, rng, workers=workers)
    prep = np.concatenate([r[0] for r in results])
    said_same = np.concatenate([r[1] for r in results])
    correct = np.concatenate([r[2] for r in results])
    rate = float(correct.mean())
    se = float(correct.std(ddof=1) / np.sqrt(spec.rounds)) if spec.rounds > 1 else float("nan")
    trace = []
    if keep_trace:
        trace = [
            {"round": i, "preparation": int(prep[i]), "outcome": "same" if said_same[i] else "different",
             "correct": bool(correct[i])}
            for i in range(spec.rounds)
        ]
    analytic = equality_game_analytic(spec.rho, spec.sigma, spec.strategy)
    return GameResult(rate, se, analytic, 2 * rate - 1, spec.rounds, trace)


def helstrom_bias(rho, sigma):
    """Optimal bias ``||rho - sigma||_1 / 2`` and the measurement achieving it.

    Returns ``(bias, M)`` where ``M`` is the projector onto the positive
    part of ``rho - sigma``.
    """
    rho, sigma = _pair(rho, sigma)
    delta = rho - sigma
    M = positive_part_projector(delta)
    return schatten_norm(delta, 1) / 2, M


def _validate_povm(povm, d):
    elems = [hermitian(E) for E in povm]
    total = np.zeros((d, d), dtype=complex)
    for E in elems:
        if E.shape != (d, d):
            raise ValueError(f"POVM element must be {d}x{d}, got {E.shape}")
        if np.linalg.eigvalsh(E)[0] < -_POVM_TOL:
            raise ValueError("POVM element is not positive semidefinite")
        total += E
    if np.max(np.abs(total - np.eye(d))) > _POVM_TOL:
        raise ValueError("POVM elements do not sum to the identity")
    return elems


def povm_bias(povm, rho, sigma) -> float:
    """``(1/2) sum_i |tr[M_i (rho - sigma)]|`` for a POVM ``{M_i}``."""
    rho, sigma = _pair(rho, sigma)
    elems = _validate_povm(povm, rho.shape[0])
    delta = rho - sigma
    return 0.5 * float(sum(abs(np.real(np.trace(E @ delta))) for E in elems))


def random_basis_povm(d: int, rng: RngStream) -> list:
    """Projective measurement in a Haar-random basis: ``{U|i><i|U^dag}``."""
    U = haar_unitary(d, rng)
    return [np.outer(U[:, i], U[:, i].conj()) for i in range(d)]
