"""Random embedding channels and the flip functional.

An isometry V from C^d into C^e (x) C^m followed by tracing out the
second factor compresses a d-dimensional state into e dimensions.
"""
import numpy as np

from qembed.channels import (
    canonicalize,
    depolarizing_channel,
    flip_functional,
    flip_functional_kraus,
    identity_channel,
    random_embedding_channel,
)
from qembed.linalg import schatten_norm
from qembed.sampling import RngStream, random_density

rng = RngStream(11)
d, e = 8, 3
ch = random_embedding_channel(d, e, rng)
print(f"channel C^{d} -> C^{e} with {ch.num_kraus} Kraus operators")

rho = random_density(d, 2, rng)
out = ch(rho)
print("trace of output:", np.trace(out).real.round(12))
print("output eigenvalues:", np.linalg.eigvalsh(out).round(4))

# tr[F E(x)E(F)] never exceeds d e; the identity reaches d^2.
print("flip(identity_8) =", flip_functional(identity_channel(8)))
print("flip(depolarizing 8->3) =", flip_functional(depolarizing_channel(8, 3)))
print(f"flip(random) = {flip_functional(ch):.4f} (Kraus form {flip_functional_kraus(ch):.4f}), d e = {d * e}")

# Canonical Kraus operators have an orthogonal Gram matrix and the same action.
can = canonicalize(ch)
print("canonical form matches:", schatten_norm(can(rho) - out, 1) < 1e-10)
