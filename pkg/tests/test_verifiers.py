import itertools
import math

import numpy as np
import pytest
from scipy import integrate

from qembed.channels import depolarizing_channel, identity_channel, random_embedding_channel
from qembed.experiments import state_pair
from qembed.linalg import schatten_norm, swap_operator
from qembed.sampling import RngStream, random_density, random_projector
from qembed.verifiers import (
    avg_contraction_bound,
    avg_contraction_check,
    fourth_moment_bound,
    fourth_moment_estimate,
    fourth_moment_exact,
    projconc_bound,
    projconc_tail,
    projsupp_check,
    projsupp_violation,
    random_basis_bias,
    second_moment_estimate,
    second_moment_exact,
    traceless,
    twirl_closed_form,
    twirl_estimate,
    uniform_povm_quantity,
)


def qubit_delta():
    return np.diag([1.0, -1.0]).astype(complex)


def permutation_operator(perm, d):
    """Operator permuting the tensor factors of (C^d)^{x len(perm)}."""
    n = len(perm)
    dim = d**n
    P = np.zeros((dim, dim))
    for idx in itertools.product(range(d), repeat=n):
        src = np.ravel_multi_index(idx, (d,) * n)
        dst = np.ravel_multi_index(tuple(idx[perm[k]] for k in range(n)), (d,) * n)
        P[dst, src] = 1
    return P


def fourth_moment_oracle(delta, d):
    """tr[(delta)^{x4} Pi_sym] with the symmetric projector built from all 24 permutations."""
    Pi = sum(permutation_operator(p, d) for p in itertools.permutations(range(4))) / 24
    D4 = np.kron(np.kron(delta, delta), np.kron(delta, delta))
    dim_sym = math.comb(d + 3, 4)
    return np.trace(D4 @ Pi).real / dim_sym


# -- closed forms ------------------------------------------------------------

def test_traceless_rejects_trace():
    traceless(qubit_delta())
    with pytest.raises(ValueError):
        traceless(np.eye(2))


def test_twirl_closed_form_qubit():
    T = twirl_closed_form(qubit_delta(), 2)
    F = swap_operator(2)
    np.testing.assert_allclose(T, (2 / 3) * (F - np.eye(4) / 2))


def test_twirl_of_zero_is_zero():
    np.testing.assert_array_equal(twirl_closed_form(np.zeros((3, 3)), 3), np.zeros((9, 9)))


def test_second_moment_qubit_and_oracle(rng, random_delta):
    assert second_moment_exact(qubit_delta(), 2) == pytest.approx(1 / 3)
    assert second_moment_exact(np.zeros((4, 4)), 4) == 0
    for d in (2, 3, 4):
        D = random_delta(d, rng)
        sym = (np.eye(d * d) + swap_operator(d)) / (d * (d + 1))
        oracle = np.trace(np.kron(D, D) @ sym).real
        assert second_moment_exact(D, d) == pytest.approx(oracle, abs=1e-12)


def test_fourth_moment_qubit():
    assert fourth_moment_exact(qubit_delta(), 2) == pytest.approx(1 / 5)
    assert fourth_moment_bound(qubit_delta(), 2) == pytest.approx(3 / 10)
    assert fourth_moment_exact(np.zeros((3, 3)), 3) == 0


@pytest.mark.parametrize("d", [2, 3])
def test_fourth_moment_matches_permutation_oracle(d, rng, random_delta):
    for _ in range(3):
        D = random_delta(d, rng)
        assert fourth_moment_exact(D, d) == pytest.approx(fourth_moment_oracle(D, d), abs=1e-12)
        assert fourth_moment_exact(D, d) <= fourth_moment_bound(D, d)


def test_qubit_moments_by_quadrature():
    # <psi|Z|psi> = 2t - 1 with t uniform on [0, 1] for Haar qubit states
    m1, _ = integrate.quad(lambda t: abs(2 * t - 1), 0, 1)
    m2, _ = integrate.quad(lambda t: (2 * t - 1) ** 2, 0, 1)
    m4, _ = integrate.quad(lambda t: (2 * t - 1) ** 4, 0, 1)
    assert m1 == pytest.approx(0.5)
    assert second_moment_exact(qubit_delta(), 2) == pytest.approx(m2)
    assert fourth_moment_exact(qubit_delta(), 2) == pytest.approx(m4)


def test_avg_contraction_bound_values():
    assert avg_contraction_bound(4, 4) == pytest.approx(1.0)
    assert avg_contraction_bound(16, 4) == pytest.approx(0.2353, abs=1e-4)
    for d in range(2, 12):
        for e in range(1, d + 1):
            assert 0 <= avg_contraction_bound(d, e) <= 1 + 1e-15


# -- Monte Carlo estimators -----------------------------------------------------

def test_twirl_estimate_qubit(rng):
    est = twirl_estimate(qubit_delta(), 2, 50_000, rng)
    assert np.abs(est.mean - twirl_closed_form(qubit_delta(), 2)).max() <= 1e-2


def test_moment_estimates_agree(rng, random_delta):
    D = random_delta(3, rng)
    m2 = second_moment_estimate(D, 3, 50_000, rng.spawn(0))
    m4 = fourth_moment_estimate(D, 3, 50_000, rng.spawn(1))
    assert abs(m2.mean - second_moment_exact(D, 3)) <= 4 * m2.std_error
    assert abs(m4.mean - fourth_moment_exact(D, 3)) <= 4 * m4.std_error


def test_estimates_independent_of_workers(random_delta):
    D = random_delta(3, RngStream(3))
    a = second_moment_estimate(D, 3, 20_000, RngStream(8), workers=1)
    b = second_moment_estimate(D, 3, 20_000, RngStream(8), workers=4)
    assert a == b


def test_tiny_sample_count(rng):
    est = second_moment_estimate(qubit_delta(), 2, 2, rng)
    assert est.samples == 2 and math.isfinite(est.std_error)


def test_uniform_povm_qubit(rng):
    res = uniform_povm_quantity(qubit_delta(), 2, 50_000, rng)
    # d E|2t - 1| = 2 * 1/2
    assert abs(res.estimate.mean - 1.0) <= 4 * res.estimate.std_error
    assert res.sandwich_ok and res.berger_ok and res.verdict == "pass"


def test_uniform_povm_sandwich_random(rng, random_delta):
    for d in (3, 5, 8):
        res = uniform_povm_quantity(random_delta(d, rng), d, 5_000, rng.spawn(d))
        assert res.sandwich_ok and res.berger_ok


def test_random_basis_bias_matches_half_q(rng):
    rho, sigma = state_pair("orthogonal-pure", 3)
    D = rho - sigma
    bias = random_basis_bias(D, 3, 40_000, rng.spawn(0))
    q = uniform_povm_quantity(D, 3, 40_000, rng.spawn(1)).estimate
    assert abs(bias.mean - q.mean / 2) <= 4 * math.hypot(bias.std_error, q.std_error / 2)


def test_avg_contraction_identity_and_depolarizing(rng):
    rho, sigma = state_pair("orthogonal-pure", 4)
    n2sq = schatten_norm(rho - sigma, 2) ** 2
    ident = avg_contraction_check(identity_channel(4), rho, sigma, 200, rng)
    assert ident.estimate.mean == pytest.approx(n2sq)
    assert ident.estimate.std_error <= 1e-12
    dep = avg_contraction_check(depolarizing_channel(4, 2), rho, sigma, 200, rng)
    assert dep.estimate.mean <= 1e-12 and dep.passed


def test_avg_contraction_random_embedding(rng):
    rho, sigma = state_pair("orthogonal-pure", 6)
    ch = random_embedding_channel(6, 2, rng.spawn(0))
    chk = avg_contraction_check(ch, rho, sigma, 4_000, rng.spawn(1))
    assert chk.passed


# -- projector support -----------------------------------------------------------

def test_projsupp_state_inside_range(rng):
    P = random_projector(6, 2, rng)
    w, Q = np.linalg.eigh(P)
    psi = Q[:, -1]
    assert projsupp_violation(P, psi, 2, 3) <= 1e-12


def test_projsupp_full_projector(rng):
    psi = rng.normal(6) + 1j * rng.normal(6)
    psi /= np.linalg.norm(psi)
    assert projsupp_violation(np.eye(6), psi, 3, 2) == pytest.approx(0, abs=1e-14)


def test_projsupp_random(rng):
    res = projsupp_check(3, 3, 4, rng, trials=500)
    assert res.passed and res.verdict == "pass"
    with pytest.raises(ValueError):
        projsupp_check(2, 2, 5, rng)


# -- projector concentration ------------------------------------------------------

def test_projconc_bound_values():
    assert projconc_bound(4, 0.0) == 1.0
    assert projconc_bound(4, 1.0) == pytest.approx(0.1702, abs=1e-4)
    assert projconc_bound(8, 1.0) < projconc_bound(4, 1.0)


def test_projconc_edge_cases(rng):
    full = projconc_tail(8, 8, 0.0, 100, rng)
    assert full.estimate.mean == 1.0 and full.passed
    chk = projconc_tail(16, 2, 0.0, 2_000, rng)
    assert chk.passed
    with pytest.raises(ValueError):
        projconc_tail(4, 5, 1.0, 10, rng)
    with pytest.raises(ValueError):
        projconc_tail(4, 2, -0.1, 10, rng)


def test_projconc_tail_under_bound(rng):
    chk = projconc_tail(32, 4, 1.0, 5_000, rng)
    assert chk.passed
    assert chk.estimate.mean < chk.bound_value


def test_dimension_checks():
    with pytest.raises(ValueError):
        second_moment_exact(qubit_delta(), 3)
    with pytest.raises(ValueError):
        uniform_povm_quantity(random_density(2, 2, RngStream(1)), 2, 10, RngStream(1))
