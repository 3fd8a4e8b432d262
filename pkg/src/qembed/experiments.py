"""End-to-end embedding experiments.

Each experiment returns an :class:`~qembed.report.ExperimentReport`.  Trial
``i`` always draws from ``substream(rng, i)``, and aggregates are reduced in
trial order, so reports are reproducible for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .channels import apply, embedding_channel
from .linalg import (
    NumericalFailure,
    density_matrix,
    eig_hermitian,
    partial_trace_B,
    schatten_norm,
    support_projector,
)
from .report import ExperimentReport
from .sampling import RngStream, complex_gaussian, haar_isometry, haar_unitary, random_density, substream
from .verifiers import avg_contraction_bound

__all__ = [
    "K_CONSTANT",
    "STATE_FAMILIES",
    "state_pair",
    "theorem_min_target_dim",
    "auto_target_dim",
    "trace_failure_bound",
    "EmbedParams",
    "EmbedTrialRecord",
    "witness_measurement_check",
    "trace_embed_trial",
    "embed_experiment",
    "two_norm_experiment",
    "standard_pairs",
    "lower_bound_table",
    "lower_bound_report",
    "jl_distortions",
    "jl_baseline",
    "fingerprint_demo",
]

K_CONSTANT = (1 - math.log(2)) / (2 * math.log(2))

STATE_FAMILIES = ("orthogonal-pure", "rank-r-orthogonal-projectors", "random-rank-r-pair", "explicit")

CONTRACTIVE_TOL = 1e-9


def _map_trials(fn, n, rng, workers):
    streams = [substream(rng, i) for i in range(n)]
    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, range(n), streams))
    return [fn(i, s) for i, s in enumerate(streams)]


def _binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n > 0 else float("inf")


def state_pair(family: str, d: int, r: int = 1, rng: RngStream | None = None):
    """A ``(rho, sigma)`` pair from one of the standard families.

    ``orthogonal-pure``: ``|0><0|`` and ``|1><1|``.
    ``rank-r-orthogonal-projectors``: ``P/r`` and ``Q/r`` on disjoint blocks of ``r`` basis vectors.
    ``random-rank-r-pair``: two independent random rank-``r`` states (needs ``rng``).
    """
    if family == "orthogonal-pure":
        if d < 2:
            raise ValueError("orthogonal states need d >= 2")
        rho = np.zeros((d, d), dtype=complex)
        sigma = np.zeros((d, d), dtype=complex)
        rho[0, 0] = sigma[1, 1] = 1.0
        return rho, sigma
    if family == "rank-r-orthogonal-projectors":
        if r < 1 or 2 * r > d:
            raise ValueError(f"need 1 <= r and 2r <= d, got r={r}, d={d}")
        idx = np.arange(d)
        rho = np.diag(np.where(idx < r, 1.0 / r, 0.0)).astype(complex)
        sigma = np.diag(np.where((idx >= r) & (idx < 2 * r), 1.0 / r, 0.0)).astype(complex)
        return rho, sigma
    if family == "random-rank-r-pair":
        if rng is None:
            raise ValueError("random-rank-r-pair needs an rng")
        return random_density(d, r, rng), random_density(d, r, rng)
    raise ValueError(f"unknown state family {family!r}; explicit pairs are passed directly")


# -- trace-norm embedding -----------------------------------------------------

def theorem_min_target_dim(d: int, r: int, epsilon: float) -> float:
    """``2 sqrt(r d / epsilon)``, the smallest target dimension the trace-norm guarantee covers."""
    return 2 * math.sqrt(r * d / epsilon)


def auto_target_dim(d: int, r: int, epsilon: float) -> int:
    return math.ceil(theorem_min_target_dim(d, r, epsilon) - 1e-12)


def trace_failure_bound(d: int, epsilon: float, K: float = K_CONSTANT) -> float:
    """``d exp(-K epsilon d)``."""
    return d * math.exp(-K * epsilon * d)


@dataclass
class EmbedParams:
    d: int
    r: int = 1
    epsilon: float = 0.5
    delta: float = 0.0
    e: int | None = None
    trials: int = 100
    state_family: str = "orthogonal-pure"

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 <= self.delta <= 1:
            raise ValueError("delta must lie in [0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.state_family not in STATE_FAMILIES:
            raise ValueError(f"unknown state family {self.state_family!r}")
        if self.e is None:
            self.e = min(auto_target_dim(self.d, self.r, self.epsilon), self.d)
        if not 1 <= self.e <= self.d:
            raise ValueError(f"target dimension must satisfy 1 <= e <= d, got e={self.e}, d={self.d}")

    @property
    def in_theorem_scope(self) -> bool:
        return theorem_min_target_dim(self.d, self.r, self.epsilon) <= self.e <= self.d


@dataclass
class EmbedTrialRecord:
    trial: int
    stream_id: int
    ratio1: float
    ratio2sq: float
    witness_value: float
    positive_rank: int
    success: bool
    witness_success: bool


def _witness(delta, V, d, e):
    m = math.ceil(d / e)
    ch = embedding_channel(V, d, e)
    out = apply(ch, delta)
    w, Q = eig_hermitian(V @ delta @ V.conj().T)
    pos = Q[:, w > 1e-10]
    P = pos @ pos.conj().T
    D = support_projector(partial_trace_B(P, e, m))
    value = float(np.real(np.trace(D @ out)))
    return value, pos.shape[1], out


def witness_measurement_check(rho, sigma, V, e: int) -> float:
    """Value ``tr[D_V E_V(rho - sigma)]`` of the witness measurement.

    ``P_V`` projects onto the eigenvectors of ``V (rho - sigma) V^dag`` with
    positive eigenvalue and ``D_V`` onto the support of ``tr_B P_V``.  Since
    ``0 <= D_V <= I`` the value can never exceed ``||E_V(rho - sigma)||_1 / 2``;
    a violation raises :class:`NumericalFailure`.
    """
    rho, sigma = density_matrix(rho), density_matrix(sigma)
    d = rho.shape[0]
    value, _, out = _witness(rho - sigma, np.asarray(V, dtype=complex), d, e)
    best = schatten_norm(out, 1) / 2
    if value > best + 1e-9:
        raise NumericalFailure(f"witness value {value!r} exceeds optimal {best!r}", residual=value - best)
    return value


def trace_embed_trial(rho, sigma, e: int, epsilon: float, rng: RngStream, trial: int = 0) -> EmbedTrialRecord:
    """One draw of a random embedding channel ``E_V`` and its effect on ``rho - sigma``."""
    rho, sigma = density_matrix(rho), density_matrix(sigma)
    d = rho.shape[0]
    if not 1 <= e <= d:
        raise ValueError(f"target dimension must satisfy 1 <= e <= d, got e={e}, d={d}")
    m = math.ceil(d / e)
    delta = rho - sigma
    V = haar_isometry(d, e * m, rng)
    value, s, out = _witness(delta, V, d, e)
    n1, n2 = schatten_norm(delta, 1), schatten_norm(delta, 2)
    out1 = schatten_norm(out, 1)
    if value > out1 / 2 + 1e-9:
        raise NumericalFailure("witness value exceeds the optimal measurement", residual=value - out1 / 2)
    ratio1 = out1 / n1 if n1 > 0 else 1.0
    ratio2sq = schatten_norm(out, 2) ** 2 / n2**2 if n2 > 0 else 1.0
    return EmbedTrialRecord(
        trial=trial,
        stream_id=rng.stream_id,
        ratio1=ratio1,
        ratio2sq=ratio2sq,
        witness_value=value,
        positive_rank=s,
        success=ratio1 >= 1 - epsilon,
        witness_success=value >= (1 - epsilon) * n1 / 2 - 1e-12,
    )


def embed_experiment(params: EmbedParams, rng: RngStream, rho=None, sigma=None,
                     workers: int = 1) -> ExperimentReport:
    """Repeated trace-norm embedding trials against the ``d exp(-K eps d)`` failure bound.

    The failure-bound verdict is ``pass`` iff the failure fraction is at most
    the bound plus three binomial standard deviations (computed at the bound),
    or ``outside-theorem-scope`` when ``e`` is below ``2 sqrt(r d / eps)``.
    """
    p = params
    if p.state_family == "explicit":
        if rho is None or sigma is None:
            raise ValueError("explicit state family needs rho and sigma")
        rho, sigma = density_matrix(rho), density_matrix(sigma)
    else:
        rho, sigma = state_pair(p.state_family, p.d, p.r, rng.spawn(1 << 40))
    if rho.shape[0] != p.d:
        raise ValueError(f"states must be {p.d}-dimensional")

    records = _map_trials(
        lambda i, s: trace_embed_trial(rho, sigma, p.e, p.epsilon, s, trial=i), p.trials, rng, workers
    )
    failures = sum(not r.success for r in records)
    frac = failures / p.trials
    bound = trace_failure_bound(p.d, p.epsilon)
    sigma_b = _binomial_sigma(min(bound, 1.0), p.trials)
    ratio1 = np.array([r.ratio1 for r in records])
    ratio2 = np.array([r.ratio2sq for r in records])
    witness = np.array([r.witness_value for r in records])
    half_trace = schatten_norm(rho - sigma, 1) / 2

    def se(x):
        return float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else None

    if p.in_theorem_scope:
        bound_verdict = "pass" if frac <= bound + 3 * sigma_b else "fail"
    else:
        bound_verdict = "outside-theorem-scope"
    witness_ok = all(r.witness_success for r in records if r.success)
    return ExperimentReport(
        experiment_id="embed",
        params={**asdict(p), "rank_rho": int(np.sum(np.linalg.eigvalsh(rho) > 1e-12)),
                "env_dim": math.ceil(p.d / p.e)},
        seed=rng.seed,
        bounds={
            "K": K_CONSTANT,
            "failure_bound": bound,
            "binomial_sigma_at_bound": sigma_b,
            "theorem_min_target_dim": theorem_min_target_dim(p.d, p.r, p.epsilon),
            "in_theorem_scope": p.in_theorem_scope,
            "success_threshold_ratio1": 1 - p.epsilon,
            "witness_threshold": (1 - p.epsilon) * half_trace,
        },
        aggregates={
            "trials": p.trials,
            "failures": failures,
            "failure_fraction": frac,
            "mean_ratio1": float(ratio1.mean()),
            "std_error_ratio1": se(ratio1),
            "min_ratio1": float(ratio1.min()),
            "max_ratio1": float(ratio1.max()),
            "mean_ratio2sq": float(ratio2.mean()),
            "std_error_ratio2sq": se(ratio2),
            "mean_witness_value": float(witness.mean()),
            "std_error_witness_value": se(witness),
            "witness_failures": sum(not r.witness_success for r in records),
            "max_positive_rank": max(r.positive_rank for r in records),
        },
        trials=[asdict(r) for r in records],
        verdicts={
            "failure_bound": bound_verdict,
            "witness_on_success": "pass" if witness_ok else "fail",
            "contractive": "pass" if ratio1.max() <= 1 + CONTRACTIVE_TOL else "fail",
        },
    )


# -- 2-norm average ----------------------------------------------------------

def two_norm_experiment(d: int, e: int, trials: int, state_family: str, rng: RngStream, r: int = 1,
                        grid=None, rho=None, sigma=None, workers: int = 1) -> ExperimentReport:
    """Average 2-norm contraction of random embedding channels, and which ``(eps, delta)`` it rules out.

    Each trial draws a Haar isometry ``V`` and a Haar unitary ``U`` and
    records ``||E_V(U D U^dag)||_2^2 / ||D||_2^2``.  A 2-norm embedding with
    distortion parameter ``eps`` and failure probability ``delta`` into
    dimension ``e`` is ruled out when ``(1 - delta)(1 - eps)^2 d > e``.
    """
    if not 1 <= e <= d:
        raise ValueError(f"target dimension must satisfy 1 <= e <= d, got e={e}, d={d}")
    if trials < 2:
        raise ValueError("need at least 2 trials")
    if state_family == "explicit":
        rho, sigma = density_matrix(rho), density_matrix(sigma)
    else:
        rho, sigma = state_pair(state_family, d, r, rng.spawn(1 << 40))
    delta_op = rho - sigma
    n2sq = schatten_norm(delta_op, 2) ** 2
    m = math.ceil(d / e)

    def trial(i, stream):
        V = haar_isometry(d, e * m, stream)
        U = haar_unitary(d, stream)
        out = apply(embedding_channel(V, d, e), U @ delta_op @ U.conj().T)
        return {"trial": i, "stream_id": stream.stream_id, "ratio2sq": schatten_norm(out, 2) ** 2 / n2sq}

    records = _map_trials(trial, trials, rng, workers)
    ratios = np.array([t["ratio2sq"] for t in records])
    mean = float(ratios.mean())
    se = float(ratios.std(ddof=1) / math.sqrt(trials))
    bound = avg_contraction_bound(d, e)
    if grid is None:
        grid = [(eps, dl) for eps in (0.0, 0.1, 0.25, 0.5) for dl in (0.0, 0.1, 0.25, 0.5)]
    ceiling = e / d
    table = [
        {
            "epsilon": eps,
            "delta": dl,
            "required_e": (1 - dl) * (1 - eps) ** 2 * d,
            "ruled_out": (1 - dl) * (1 - eps) ** 2 > ceiling,
            "empirical_success": float(np.mean(ratios >= (1 - eps) ** 2 - 1e-12)),
        }
        for eps, dl in grid
    ]
    return ExperimentReport(
        experiment_id="two-norm",
        params={"d": d, "e": e, "trials": trials, "state_family": state_family, "r": r, "env_dim": m},
        seed=rng.seed,
        bounds={"avg_contraction_bound": bound, "embedding_ceiling": ceiling},
        aggregates={
            "mean_ratio2sq": mean,
            "std_error_ratio2sq": se,
            "max_ratio2sq": float(ratios.max()),
            "grid": table,
        },
        trials=records,
        verdicts={"avg_contraction": "pass" if mean <= bound + 3 * se + 1e-12 else "fail"},
    )


# -- lower-bound tables ------------------------------------------------------

def standard_pairs(d: int, ranks=()) -> list:
    """Labelled pairs: orthogonal pure, orthogonal ``d/2`` projectors, and rank-``r`` projector pairs."""
    pairs = [("orthogonal-pure", *state_pair("orthogonal-pure", d), 1)]
    if d % 2 == 0:
        pairs.append(("orthogonal-half-projectors", *state_pair("rank-r-orthogonal-projectors", d, d // 2), d // 2))
    for r in ranks:
        pairs.append((f"rank-{r}-orthogonal-projectors", *state_pair("rank-r-orthogonal-projectors", d, r), r))
    return pairs


def lower_bound_table(d: int, epsilon: float, delta: float, pairs) -> list:
    """Target-dimension lower bounds for each ``(label, rho, sigma[, r])`` pair.

    ``trace_norm_bound`` is ``(1-delta)(1-eps) sqrt(d) ||D||_1 / ||D||_2`` and
    ``two_norm_bound`` is ``(1-delta)(1-eps)^2 d``.  When a projector rank
    ``r`` is supplied the row also carries ``sqrt(2 r)``.
    """
    rows = []
    for item in pairs:
        label, rho, sigma = item[:3]
        r = item[3] if len(item) > 3 else None
        rho, sigma = density_matrix(rho), density_matrix(sigma)
        if rho.shape != (d, d) or sigma.shape != (d, d):
            raise ValueError(f"pair {label!r} is not {d}-dimensional")
        n1 = schatten_norm(rho - sigma, 1)
        n2 = schatten_norm(rho - sigma, 2)
        ratio = n1 / n2
        rows.append({
            "label": label,
            "trace_norm": n1,
            "two_norm": n2,
            "norm_ratio": ratio,
            "trace_norm_bound": (1 - delta) * (1 - epsilon) * math.sqrt(d) * ratio,
            "two_norm_bound": (1 - delta) * (1 - epsilon) ** 2 * d,
            "sqrt_2r": math.sqrt(2 * r) if r is not None else None,
        })
    return rows


def lower_bound_report(d: int, epsilon: float, delta: float, pairs, seed: int = 0) -> ExperimentReport:
    rows = lower_bound_table(d, epsilon, delta, pairs)
    verdicts = {}
    for row in rows:
        if row["sqrt_2r"] is not None:
            ok = abs(row["norm_ratio"] - row["sqrt_2r"]) <= 1e-9
            verdicts[f"{row['label']}:norm_ratio"] = "pass" if ok else "fail"
    return ExperimentReport(
        experiment_id="bounds",
        params={"d": d, "epsilon": epsilon, "delta": delta, "pairs": [row["label"] for row in rows]},
        seed=seed,
        bounds={row["label"]: row["trace_norm_bound"] for row in rows},
        aggregates={"table": rows},
        trials=rows,
        verdicts=verdicts,
    )


# -- classical baseline and fingerprinting -----------------------------------

def jl_distortions(points: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``||G(x - y)|| / ||x - y||`` for every unordered pair of rows of ``points``."""
    X = np.asarray(points, dtype=float)
    i, j = np.triu_indices(X.shape[0], k=1)
    diff = X[i] - X[j]
    return np.linalg.norm(diff @ np.asarray(G).T, axis=1) / np.linalg.norm(diff, axis=1)


def jl_baseline(n_points: int, d: int, e_values, epsilon: float, trials: int, rng: RngStream) -> ExperimentReport:
    """Gaussian random projections ``G / sqrt(e)`` on ``n_points`` Gaussian points in ``R^d``.

    A pair fails when its distance ratio leaves ``[1 - eps, 1 + eps]``.
    The ``monotone`` verdict requires the failure fraction to be
    non-increasing along the sorted ``e`` sweep, within two binomial sigmas.
    """
    e_values = sorted(int(e) for e in e_values)
    if any(not 1 <= e <= d for e in e_values):
        raise ValueError("every target dimension must satisfy 1 <= e <= d")
    npairs = n_points * (n_points - 1) // 2
    rows, records = [], []
    for k, e in enumerate(e_values):
        fails = 0
        dist = []
        for t in range(trials):
            stream = substream(substream(rng, k), t)
            X = stream.normal((n_points, d))
            G = stream.normal((e, d)) / math.sqrt(e)
            ratio = jl_distortions(X, G)
            bad = int(np.sum((ratio < 1 - epsilon) | (ratio > 1 + epsilon)))
            fails += bad
            dist.append(float(np.max(np.abs(ratio - 1))))
            records.append({"e": e, "trial": t, "failed_pairs": bad, "max_distortion": dist[-1]})
        total = npairs * trials
        frac = fails / total
        rows.append({"e": e, "failure_fraction": frac, "binomial_sigma": _binomial_sigma(frac, total),
                     "mean_max_distortion": float(np.mean(dist))})
    monotone = all(
        b["failure_fraction"] <= a["failure_fraction"] + 2 * math.hypot(a["binomial_sigma"], b["binomial_sigma"])
        for a, b in zip(rows, rows[1:])
    )
    return ExperimentReport(
        experiment_id="jl",
        params={"points": n_points, "d": d, "target_dims": e_values, "epsilon": epsilon, "trials": trials},
        seed=rng.seed,
        bounds={},
        aggregates={"sweep": rows},
        trials=records,
        verdicts={"monotone": "pass" if monotone else "fail"},
    )


def fingerprint_demo(k_strings: int, dim_compressed: int, rounds: int, rng: RngStream,
                     compress: bool = True) -> ExperimentReport:
    """Compress ``k`` orthonormal fingerprints and compare them with repeated swap tests.

    Each basis vector ``|a>`` of ``C^k`` is mapped through one complex
    Gaussian ``dim_compressed x k`` matrix and renormalised.  For every pair
    the referee runs ``rounds`` swap tests and answers "equal" iff all of
    them accept.  With ``compress=False`` the original basis vectors are used.
    """
    if dim_compressed < 2:
        raise ValueError("dim_compressed must be >= 2")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if compress:
        G = complex_gaussian((dim_compressed, k_strings), rng.spawn(0))
        phi = G / np.linalg.norm(G, axis=0, keepdims=True)
    else:
        phi = np.eye(k_strings, dtype=complex)
    overlap = np.abs(phi.conj().T @ phi) ** 2
    accept = 0.5 + 0.5 * overlap
    i, j = np.triu_indices(k_strings, k=1)
    p_distinct = accept[i, j]
    p_same = np.diag(accept)
    stream = rng.spawn(1)
    said_equal_distinct = np.all(stream.uniform((rounds, p_distinct.size)) < p_distinct, axis=0)
    said_equal_same = np.all(stream.uniform((rounds, p_same.size)) < p_same, axis=0)
    inequality_errors = int(said_equal_distinct.sum())
    equality_errors = int((~said_equal_same).sum())
    expected_false_equal = p_distinct**rounds
    n = max(p_distinct.size, 1)
    expected_rate = float(expected_false_equal.mean()) if p_distinct.size else 0.0
    sigma = math.sqrt(float(np.sum(expected_false_equal * (1 - expected_false_equal)))) / n
    max_ip = float(np.sqrt(overlap[i, j].max())) if p_distinct.size else 0.0
    return ExperimentReport(
        experiment_id="fingerprint",
        params={"strings": k_strings, "compressed_dim": dim_compressed, "rounds": rounds, "compress": compress},
        seed=rng.seed,
        bounds={"expected_inequality_error_rate": expected_rate},
        aggregates={
            "max_abs_inner_product": max_ip,
            "min_accept_prob_identical": float(p_same.min()),
            "mean_accept_prob_distinct": float(p_distinct.mean()) if p_distinct.size else None,
            "equality_error_rate": equality_errors / k_strings,
            "inequality_error_rate": inequality_errors / n,
        },
        trials=[{"a": int(a), "b": int(b), "accept_prob": float(p)} for a, b, p in zip(i, j, p_distinct)],
        verdicts={
            "equality_errors": "pass" if equality_errors == 0 else "fail",
            "inequality_error_rate": "pass"
            if abs(inequality_errors / n - expected_rate) <= 3 * sigma + 1e-12 else "fail",
        },
    )
