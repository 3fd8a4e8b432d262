"""Haar-random unitaries, states and isometries from a seeded stream.

Run with ``python demos/01_haar_sampling.py``.
"""
import numpy as np

from qembed.sampling import RngStream, haar_isometry, haar_pure_states, haar_unitaries, substream

rng = RngStream(2024)

# A batch of Haar unitaries comes from QR of complex Gaussian matrices.
U = haar_unitaries(3, 5, rng)
print("unitarity error:", np.abs(U.conj().transpose(0, 2, 1) @ U - np.eye(3)).max())

# Averaging U A U^dag over many draws gives tr(A) I / d.
A = np.diag([1.0, 2.0, 6.0])
U = haar_unitaries(3, 50_000, rng)
print("twirled diag(1,2,6):")
print((U @ A @ U.conj().transpose(0, 2, 1)).mean(axis=0).real.round(3))

# States and isometries.
psi = haar_pure_states(4, 3, rng)
print("state norms:", np.linalg.norm(psi, axis=1))
V = haar_isometry(4, 8, rng)
print("isometry V^dag V = I:", np.allclose(V.conj().T @ V, np.eye(4)))

# Substreams are keyed by index, so block b always sees the same numbers.
print("substream 3 draw:", substream(RngStream(7), 3).uniform(), substream(RngStream(7), 3).uniform())
