"""Monte Carlo checks of the Haar-integral identities.

Each estimate carries a standard error and is compared against a closed form.
"""
import numpy as np

from qembed.experiments import state_pair
from qembed.sampling import RngStream
from qembed.verifiers import (
    fourth_moment_bound,
    fourth_moment_estimate,
    fourth_moment_exact,
    projconc_tail,
    second_moment_estimate,
    second_moment_exact,
    twirl_closed_form,
    twirl_estimate,
    uniform_povm_quantity,
)

rng = RngStream(5)
rho, sigma = state_pair("orthogonal-pure", 3)
delta = rho - sigma

est = twirl_estimate(delta, 3, 50_000, rng.spawn(0))
print("twirl max deviation:", np.abs(est.mean - twirl_closed_form(delta, 3)).max())

m2 = second_moment_estimate(delta, 3, 50_000, rng.spawn(1))
print(f"E<psi|D|psi>^2 = {m2.mean:.5f} +- {m2.std_error:.5f}, exact {second_moment_exact(delta, 3):.5f}")
m4 = fourth_moment_estimate(delta, 3, 50_000, rng.spawn(2))
print(f"E<psi|D|psi>^4 = {m4.mean:.5f} +- {m4.std_error:.5f}, exact {fourth_moment_exact(delta, 3):.5f},"
      f" bound {fourth_moment_bound(delta, 3):.5f}")

res = uniform_povm_quantity(delta, 3, 50_000, rng.spawn(3))
print(f"uniform POVM: {res.sandwich_lower:.3f} <= {res.estimate.mean:.3f} <= {res.sandwich_upper:.3f}:",
      res.verdict)

chk = projconc_tail(32, 4, 1.0, 20_000, rng.spawn(4))
print(f"tail probability {chk.estimate.mean:.4f} vs bound {chk.bound_value:.4f}:", chk.verdict)
