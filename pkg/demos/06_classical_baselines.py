"""Gaussian random projections and compressed quantum fingerprints."""
from qembed.experiments import fingerprint_demo, jl_baseline
from qembed.sampling import RngStream

rep = jl_baseline(32, 512, [8, 32, 128], 0.5, 3, RngStream(9))
for row in rep.aggregates["sweep"]:
    print(f"e={row['e']:4d}: fraction of pairs distorted beyond 50% = {row['failure_fraction']:.4f}")

rep = fingerprint_demo(64, 32, 8, RngStream(10))
print("largest overlap between compressed fingerprints:", round(rep.aggregates["max_abs_inner_product"], 3))
print(f"false 'equal' rate {rep.aggregates['inequality_error_rate']:.4f}"
      f" (expected {rep.bounds['expected_inequality_error_rate']:.4f})")
