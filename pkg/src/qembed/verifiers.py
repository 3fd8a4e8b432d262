"""Closed forms and Monte Carlo checks for the Haar-integral identities.

Each ``*_estimate`` function draws its samples in fixed-size blocks on
substreams of the given :class:`~qembed.sampling.RngStream`, so results are
identical for any ``workers`` value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import KrausChannel, apply_batch
from .linalg import (
    hermitian,
    partial_trace_B,
    schatten_norm,
    support_projector,
    swap_operator,
)
from .montecarlo import BoundCheck, MonteCarloEstimate, monte_carlo, run_blocks
from .sampling import RngStream, haar_pure_states, haar_unitaries, random_projector

__all__ = [
    "traceless",
    "twirl_closed_form",
    "twirl_estimate",
    "avg_contraction_bound",
    "avg_contraction_check",
    "second_moment_exact",
    "second_moment_estimate",
    "fourth_moment_exact",
    "fourth_moment_bound",
    "fourth_moment_estimate",
    "UniformPovmResult",
    "uniform_povm_quantity",
    "random_basis_bias",
    "ProjSuppResult",
    "projsupp_violation",
    "projsupp_check",
    "projconc_bound",
    "projconc_tail",
]


def traceless(delta, tol: float = 1e-9) -> np.ndarray:
    """Validate a traceless Hermitian operator such as ``rho - sigma``."""
    D = hermitian(delta)
    tr = np.trace(D).real
    if abs(tr) > tol:
        raise ValueError(f"operator must be traceless, got trace {tr:.3e}")
    return D


def _check_dim(D, d):
    if D.shape != (d, d):
        raise ValueError(f"operator must be {d}x{d}, got {D.shape}")


def _diag_expectations(states: np.ndarray, D: np.ndarray) -> np.ndarray:
    """``<psi|D|psi>`` for each row of ``states``."""
    return np.einsum("ni,ij,nj->n", states.conj(), D, states, optimize=True).real


# -- twirl ------------------------------------------------------------------

def twirl_closed_form(delta, d: int) -> np.ndarray:
    """``(||delta||_2^2 / (d^2 - 1)) (F_d - I/d)``, the Haar twirl of ``delta (x) delta``."""
    D = traceless(delta)
    _check_dim(D, d)
    if d < 2:
        return np.zeros((1, 1), dtype=complex)
    coeff = schatten_norm(D, 2) ** 2 / (d * d - 1)
    return coeff * (swap_operator(d) - np.eye(d * d) / d)


def twirl_estimate(delta, d: int, N: int, rng: RngStream, workers: int = 1) -> MonteCarloEstimate:
    """Entrywise Monte Carlo mean of ``U^{(x)2} delta^{(x)2} U^dag^{(x)2}``."""
    D = traceless(delta)
    _check_dim(D, d)

    def sample(n, stream):
        U = haar_unitaries(d, n, stream)
        X = U @ D @ U.conj().transpose(0, 2, 1)
        return np.einsum("nab,ncd->nacbd", X, X).reshape(n, d * d, d * d)

    return monte_carlo(sample, N, rng, block_size=4096, workers=workers)


# -- average contraction ----------------------------------------------------

def avg_contraction_bound(d: int, e: int) -> float:
    """``d (e^2 - 1) / (e (d^2 - 1))``; equals 1 when ``e == d``."""
    if d < 2:
        return 1.0
    return d * (e * e - 1) / (e * (d * d - 1))


def avg_contraction_check(ch: KrausChannel, rho, sigma, N: int, rng: RngStream,
                          workers: int = 1) -> BoundCheck:
    """Estimate ``int ||E(U rho U^dag) - E(U sigma U^dag)||_2^2 dU`` and compare it to the bound.

    The bound is ``avg_contraction_bound(d, e) * ||rho - sigma||_2^2`` with
    ``e = ch.dim_out``.
    """
    D = hermitian(np.asarray(rho) - np.asarray(sigma))
    d = ch.dim_in
    _check_dim(D, d)

    def sample(n, stream):
        U = haar_unitaries(d, n, stream)
        Y = apply_batch(ch, U @ D @ U.conj().transpose(0, 2, 1))
        return np.sum(np.abs(Y) ** 2, axis=(1, 2))

    est = monte_carlo(sample, N, rng, workers=workers)
    bound = avg_contraction_bound(d, ch.dim_out) * schatten_norm(D, 2) ** 2
    return BoundCheck(est, bound, "<=")


# -- moments over Haar states -----------------------------------------------

def second_moment_exact(delta, d: int) -> float:
    """``tr[delta^2] / (d (d + 1))``."""
    D = traceless(delta)
    _check_dim(D, d)
    return float(np.real(np.trace(D @ D))) / (d * (d + 1))


def _moment_estimate(delta, d, power, N, rng, workers):
    D = traceless(delta)
    _check_dim(D, d)

    def sample(n, stream):
        return _diag_expectations(haar_pure_states(d, n, stream), D) ** power

    return monte_carlo(sample, N, rng, workers=workers)


def second_moment_estimate(delta, d: int, N: int, rng: RngStream, workers: int = 1) -> MonteCarloEstimate:
    return _moment_estimate(delta, d, 2, N, rng, workers)


def fourth_moment_exact(delta, d: int) -> float:
    """``(3 tr[delta^2]^2 + 6 tr[delta^4]) / (d (d+1) (d+2) (d+3))``."""
    D = traceless(delta)
    _check_dim(D, d)
    D2 = D @ D
    t2 = float(np.real(np.trace(D2)))
    t4 = float(np.real(np.trace(D2 @ D2)))
    return (3 * t2 * t2 + 6 * t4) / (d * (d + 1) * (d + 2) * (d + 3))


def fourth_moment_bound(delta, d: int) -> float:
    """``9 tr[delta^2]^2 / (d (d+1) (d+2) (d+3))``."""
    D = traceless(delta)
    _check_dim(D, d)
    t2 = float(np.real(np.trace(D @ D)))
    return 9 * t2 * t2 / (d * (d + 1) * (d + 2) * (d + 3))


def fourth_moment_estimate(delta, d: int, N: int, rng: RngStream, workers: int = 1) -> MonteCarloEstimate:
    return _moment_estimate(delta, d, 4, N, rng, workers)


# -- uniform POVM and random bases ------------------------------------------

@dataclass(frozen=True)
class UniformPovmResult:
    """Estimate of ``Q = d E_psi |<psi|delta|psi>|`` with the checks run on it.

    ``sandwich_lower``/``sandwich_upper`` are ``||delta||_2 / 3`` and
    ``||delta||_2``; the Berger fields are the empirical ``E|X|`` and
    ``E[X^2]^{3/2} / E[X^4]^{1/2}`` over the same sample.
    """

    estimate: MonteCarloEstimate
    sandwich_lower: float
    sandwich_upper: float
    berger_lhs: float
    berger_rhs: float
    sigma_margin: float = 3.0

    @property
    def lower_check(self) -> BoundCheck:
        return BoundCheck(self.estimate, self.sandwich_lower, ">=", self.sigma_margin)

    @property
    def upper_check(self) -> BoundCheck:
        return BoundCheck(self.estimate, self.sandwich_upper, "<=", self.sigma_margin)

    @property
    def sandwich_ok(self) -> bool:
        return self.lower_check.passed and self.upper_check.passed

    @property
    def berger_ok(self) -> bool:
        return self.berger_lhs >= self.berger_rhs * (1 - 1e-12) - 1e-15

    @property
    def verdict(self) -> str:
        return "pass" if self.sandwich_ok and self.berger_ok else "fail"


def uniform_povm_quantity(delta, d: int, N: int, rng: RngStream, workers: int = 1) -> UniformPovmResult:
    """Monte Carlo estimate of ``d E_psi |<psi|delta|psi>|`` over Haar states."""
    D = traceless(delta)
    _check_dim(D, d)

    def block(n, stream):
        x = _diag_expectations(haar_pure_states(d, n, stream), D)
        return x

    xs = np.concatenate(run_blocks(block, N, rng, workers=workers))
    absx = d * np.abs(xs)
    mean = float(absx.mean())
    se = float(absx.std(ddof=1) / math.sqrt(N))
    m1 = float(np.mean(np.abs(xs)))
    m2 = float(np.mean(xs**2))
    m4 = float(np.mean(xs**4))
    berger_rhs = m2**1.5 / math.sqrt(m4) if m4 > 0 else 0.0
    norm2 = schatten_norm(D, 2)
    return UniformPovmResult(MonteCarloEstimate(mean, se, N), norm2 / 3, norm2, m1, berger_rhs)


def random_basis_bias(delta, d: int, N: int, rng: RngStream, workers: int = 1) -> MonteCarloEstimate:
    """Estimate ``(1/2) E_U sum_i |<i|U^dag delta U|i>|``, the expected bias of a random-basis measurement."""
    D = traceless(delta)
    _check_dim(D, d)

    def sample(n, stream):
        U = haar_unitaries(d, n, stream)
        diag = np.einsum("nia,ij,nja->na", U.conj(), D, U, optimize=True).real
        return 0.5 * np.sum(np.abs(diag), axis=1)

    return monte_carlo(sample, N, rng, workers=workers)


# -- projector support and concentration ------------------------------------

@dataclass(frozen=True)
class ProjSuppResult:
    trials: int
    max_violation: float
    slack: float = 1e-10

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.slack

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


def projsupp_violation(P, psi, dimA: int, dimB: int) -> float:
    """``tr[(D(x)I) Pp |psi><psi| Pp] - tr[(D(x)I)|psi><psi|] tr[Pp |psi><psi|]``.

    ``Pp = I - P`` and ``D`` projects onto the support of ``tr_B P``.  The
    inequality being tested says this is never positive.
    """
    P = np.asarray(P, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    D = support_projector(partial_trace_B(P, dimA, dimB))
    DI = np.kron(D, np.eye(dimB))
    perp = psi - P @ psi
    lhs = np.vdot(perp, DI @ perp).real
    rhs = np.vdot(psi, DI @ psi).real * np.vdot(psi, perp).real
    return float(lhs - rhs)


def projsupp_check(dimA: int, dimB: int, rankP: int, rng: RngStream, trials: int = 1) -> ProjSuppResult:
    """Draw random projectors ``P`` of rank ``rankP`` and random states, record the worst violation."""
    n = dimA * dimB
    if not 1 <= rankP <= n:
        raise ValueError(f"rankP must be in [1, {n}], got {rankP}")
    worst = -np.inf
    for t in range(trials):
        stream = rng.spawn(t)
        P = random_projector(n, rankP, stream)
        psi = haar_pure_states(n, 1, stream)[0]
        worst = max(worst, projsupp_violation(P, psi, dimA, dimB))
    return ProjSuppResult(trials, float(worst))


def projconc_bound(t: int, delta: float) -> float:
    """``exp(-t (delta - ln(1 + delta)) / ln 2)``."""
    return math.exp(-t * (delta - math.log1p(delta)) / math.log(2))


def projconc_tail(d: int, t: int, delta: float, N: int, rng: RngStream, workers: int = 1) -> BoundCheck:
    """Empirical ``Pr_U[tr(U P U^dag |psi><psi|) >= (1 + delta) t / d]`` against the exponential bound.

    With ``P`` the projector on the first ``t`` basis vectors and a fixed
    ``psi``, ``tr(U P U^dag |psi><psi|)`` is the weight of a Haar state on
    ``t`` coordinates, which is what is sampled.
    """
    if not 1 <= t <= d:
        raise ValueError(f"t must satisfy 1 <= t <= d, got t={t}, d={d}")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    threshold = (1 + delta) * t / d

    def sample(n, stream):
        psi = haar_pure_states(d, n, stream)
        weight = np.sum(np.abs(psi[:, :t]) ** 2, axis=1)
        return (weight >= threshold - 1e-12).astype(float)

    est = monte_carlo(sample, N, rng, workers=workers)
    return BoundCheck(est, projconc_bound(t, delta), "<=")
