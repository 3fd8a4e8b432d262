import math

import numpy as np
import pytest

from qembed.experiments import (
    K_CONSTANT,
    EmbedParams,
    auto_target_dim,
    embed_experiment,
    fingerprint_demo,
    jl_baseline,
    jl_distortions,
    lower_bound_report,
    lower_bound_table,
    standard_pairs,
    state_pair,
    theorem_min_target_dim,
    trace_embed_trial,
    trace_failure_bound,
    two_norm_experiment,
    witness_measurement_check,
)
from qembed.linalg import schatten_norm
from qembed.sampling import RngStream, haar_isometry, random_density


def test_constant_value():
    assert K_CONSTANT == pytest.approx(0.2213, abs=1e-4)
    assert trace_failure_bound(64, 0.5) == pytest.approx(0.054, abs=5e-4)


def test_state_pairs():
    rho, sigma = state_pair("orthogonal-pure", 4)
    assert schatten_norm(rho - sigma, 1) == pytest.approx(2)
    rho, sigma = state_pair("rank-r-orthogonal-projectors", 6, 3)
    assert np.trace(rho @ sigma) == 0
    with pytest.raises(ValueError):
        state_pair("rank-r-orthogonal-projectors", 5, 3)
    with pytest.raises(ValueError):
        state_pair("random-rank-r-pair", 4, 2)
    with pytest.raises(ValueError):
        state_pair("nope", 4)


def test_auto_target_dim():
    assert theorem_min_target_dim(64, 1, 0.5) == pytest.approx(22.627, abs=1e-3)
    assert auto_target_dim(64, 1, 0.5) == 23
    assert EmbedParams(d=64).e == 23
    # capped at d when the guarantee needs more room than there is
    assert EmbedParams(d=8, epsilon=0.5).e == 8


def test_embed_params_validation():
    for kwargs in ({"epsilon": 0.0}, {"epsilon": 1.0}, {"delta": 2.0}, {"trials": 0}, {"e": 9},
                   {"state_family": "bogus"}):
        with pytest.raises(ValueError):
            EmbedParams(d=8, **kwargs)


def test_full_dimension_embedding_is_isometric(rng):
    rho, sigma = state_pair("orthogonal-pure", 5)
    rec = trace_embed_trial(rho, sigma, 5, 0.5, rng)
    assert rec.ratio1 == pytest.approx(1, abs=1e-10)
    assert rec.ratio2sq == pytest.approx(1, abs=1e-10)
    assert rec.witness_value == pytest.approx(1, abs=1e-10)
    assert rec.success and rec.witness_success


def test_witness_check(rng):
    rho, sigma = random_density(6, 2, rng), random_density(6, 3, rng)
    V = haar_isometry(6, 6, rng)
    assert witness_measurement_check(rho, sigma, V, 6) == pytest.approx(schatten_norm(rho - sigma, 1) / 2, abs=1e-9)
    V = haar_isometry(6, 2 * 3, rng)
    value = witness_measurement_check(rho, sigma, V, 2)
    assert -1e-12 <= value <= schatten_norm(rho - sigma, 1) / 2 + 1e-9


def test_trial_rejects_bad_target(rng):
    rho, sigma = state_pair("orthogonal-pure", 4)
    with pytest.raises(ValueError):
        trace_embed_trial(rho, sigma, 5, 0.5, rng)


def test_out_of_scope_verdict():
    params = EmbedParams(d=8, e=4, epsilon=0.5, trials=5)
    assert not params.in_theorem_scope
    rep = embed_experiment(params, RngStream(3))
    assert rep.verdicts["failure_bound"] == "outside-theorem-scope"
    assert rep.verdicts["contractive"] == "pass"


def test_embed_experiment_deterministic_and_worker_free():
    params = EmbedParams(d=32, r=1, epsilon=0.5, trials=12)
    a = embed_experiment(params, RngStream(11)).to_json()
    b = embed_experiment(params, RngStream(11), workers=4).to_json()
    assert a == b
    rep = embed_experiment(params, RngStream(11))
    assert rep.aggregates["max_ratio1"] <= 1 + 1e-9
    assert len(rep.trials) == 12


def test_embed_experiment_explicit_pair(rng):
    rho, sigma = random_density(16, 2, rng), random_density(16, 2, rng)
    params = EmbedParams(d=16, r=2, epsilon=0.5, e=8, trials=4, state_family="explicit")
    rep = embed_experiment(params, rng, rho, sigma)
    assert rep.params["rank_rho"] == 2
    with pytest.raises(ValueError):
        embed_experiment(params, rng)


def test_two_norm_experiment(rng):
    rep = two_norm_experiment(16, 4, 400, "orthogonal-pure", rng)
    assert rep.bounds["avg_contraction_bound"] == pytest.approx(0.2353, abs=1e-4)
    assert rep.verdicts["avg_contraction"] == "pass"
    grid = {(row["epsilon"], row["delta"]): row for row in rep.aggregates["grid"]}
    assert grid[(0.0, 0.0)]["ruled_out"]
    assert grid[(0.0, 0.0)]["required_e"] == 16
    assert not grid[(0.5, 0.5)]["ruled_out"]
    with pytest.raises(ValueError):
        two_norm_experiment(4, 5, 10, "orthogonal-pure", rng)


def test_two_norm_full_dimension(rng):
    rep = two_norm_experiment(4, 4, 20, "orthogonal-pure", rng)
    assert rep.aggregates["mean_ratio2sq"] == pytest.approx(1, abs=1e-10)
    assert not any(row["ruled_out"] for row in rep.aggregates["grid"])


def test_lower_bound_arithmetic():
    rows = lower_bound_table(8, 0.1, 0.2, standard_pairs(8, ranks=(2,)))
    pure = rows[0]
    assert pure["trace_norm_bound"] == pytest.approx(0.8 * 0.9 * math.sqrt(8) * math.sqrt(2))
    assert pure["two_norm_bound"] == pytest.approx(0.8 * 0.81 * 8)
    rep = lower_bound_report(8, 0.0, 0.0, standard_pairs(8, ranks=(1, 2)))
    assert set(rep.verdicts.values()) == {"pass"}
    with pytest.raises(ValueError):
        lower_bound_table(4, 0, 0, standard_pairs(8))


def test_standard_pairs_odd_dimension():
    labels = [p[0] for p in standard_pairs(5)]
    assert labels == ["orthogonal-pure"]


def test_jl_identity_and_sweep(rng):
    X = rng.normal((10, 6))
    np.testing.assert_allclose(jl_distortions(X, np.eye(6)), 1.0)
    rep = jl_baseline(20, 64, [4, 16, 64], 0.3, 3, rng)
    sweep = rep.aggregates["sweep"]
    assert [row["e"] for row in sweep] == [4, 16, 64]
    assert sweep[0]["failure_fraction"] > sweep[-1]["failure_fraction"]
    assert rep.verdicts["monotone"] == "pass"
    with pytest.raises(ValueError):
        jl_baseline(5, 8, [9], 0.3, 1, rng)


def test_fingerprint_without_compression(rng):
    rep = fingerprint_demo(8, 8, 1, rng, compress=False)
    assert rep.aggregates["max_abs_inner_product"] == 0
    assert rep.aggregates["mean_accept_prob_distinct"] == pytest.approx(0.5)
    assert rep.aggregates["min_accept_prob_identical"] == pytest.approx(1.0)
    assert rep.verdicts["equality_errors"] == "pass"


def test_fingerprint_error_rate(rng):
    rep = fingerprint_demo(64, 32, 10, rng)
    assert rep.verdicts == {"equality_errors": "pass", "inequality_error_rate": "pass"}
    assert rep.aggregates["equality_error_rate"] == 0


def test_fingerprint_small_overlap_frequency():
    # |<a|b>|^2 ~ Beta(1, m - 1); a Poisson count of large pairs gives the frequency
    k, m = 64, 32
    expected = math.exp(-math.comb(k, 2) * 0.75 ** (m - 1))
    runs = 200
    hits = sum(fingerprint_demo(k, m, 1, RngStream(77, i)).aggregates["max_abs_inner_product"] <= 0.5
               for i in range(runs))
    assert expected == pytest.approx(0.765, abs=5e-3)
    assert abs(hits / runs - expected) <= 4 * math.sqrt(expected * (1 - expected) / runs)
