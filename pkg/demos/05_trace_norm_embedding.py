"""Random embeddings preserve the trace distance of low-rank pairs.

With e >= 2 sqrt(r d / eps) a random embedding keeps at least (1 - eps) of
||rho - sigma||_1 except with probability d exp(-K eps d).
"""
from qembed.experiments import EmbedParams, embed_experiment, lower_bound_report, standard_pairs, two_norm_experiment
from qembed.sampling import RngStream

params = EmbedParams(d=64, r=1, epsilon=0.5, trials=100)
rep = embed_experiment(params, RngStream(3))
print(f"d=64 -> e={params.e}: failure fraction {rep.aggregates['failure_fraction']:.3f}"
      f" (bound {rep.bounds['failure_bound']:.4f}), mean ratio {rep.aggregates['mean_ratio1']:.3f}")
print("verdicts:", rep.verdicts)

# The 2-norm shrinks on average by about e/d, which rules out 2-norm embeddings.
# When e divides d the bound is met with equality, so the estimate sits on it.
rep = two_norm_experiment(16, 4, 2_000, "orthogonal-pure", RngStream(4))
agg = rep.aggregates
print(f"2-norm ratio {agg['mean_ratio2sq']:.4f} +- {agg['std_error_ratio2sq']:.4f},"
      f" bound {rep.bounds['avg_contraction_bound']:.4f}: {rep.verdicts['avg_contraction']}")

rep = lower_bound_report(8, 0.0, 0.0, standard_pairs(8, ranks=(1, 2, 4)))
for row in rep.aggregates["table"]:
    print(f"{row['label']:32s} needs e >= {row['trace_norm_bound']:.3f}")
