"""Seeded sampling of Haar-random unitaries, isometries, states and projectors.

All randomness flows through :class:`RngStream`, a thin wrapper around a
counter-based Philox generator keyed by ``(seed, stream_id)``.  Samplers never
touch global random state.
"""

from __future__ import annotations

import numpy as np

from .linalg import density_matrix

__all__ = [
    "RngStream",
    "substream",
    "parse_seed",
    "complex_gaussian",
    "haar_unitary",
    "haar_unitaries",
    "haar_isometry",
    "haar_pure_state",
    "haar_pure_states",
    "random_density",
    "random_projector",
]

_U64 = (1 << 64) - 1


def parse_seed(text) -> int:
    """Parse a 64-bit seed given as decimal or ``0x``-prefixed hex."""
    value = int(text, 0) if isinstance(text, str) else int(text)
    if not 0 <= value <= _U64:
        raise ValueError(f"seed {text!r} is not an unsigned 64-bit integer")
    return value


class RngStream:
    """Deterministic random stream keyed by ``(seed, stream_id)``.

    The underlying bit generator is Philox4x64 with a 128-bit key built from
    the two integers, so the draw sequence depends only on the key and the
    number of values consumed.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = parse_seed(seed)
        self.stream_id = parse_seed(stream_id)
        key = self.seed | (self.stream_id << 64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(seed={self.seed:#x}, stream_id={self.stream_id:#x})"

    def fresh(self) -> "RngStream":
        """A new stream with the same key, rewound to the start."""
        return RngStream(self.seed, self.stream_id)

    def spawn(self, index: int) -> "RngStream":
        return substream(self, index)

    def normal(self, size=None):
        return self.generator.standard_normal(size)

    def uniform(self, size=None):
        return self.generator.random(size)

    def exponential(self, size=None):
        return self.generator.standard_exponential(size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)


def substream(rng_root: RngStream, trial_index: int) -> RngStream:
    """Child stream for trial ``trial_index``; independent of how much ``rng_root`` was consumed."""
    if trial_index < 0:
        raise ValueError("trial_index must be non-negative")
    mixed = np.random.SeedSequence([rng_root.stream_id, trial_index, 0x5EED]).generate_state(
        1, np.uint64
    )[0]
    return RngStream(rng_root.seed, int(mixed))


def complex_gaussian(shape, rng: RngStream) -> np.ndarray:
    """Standard complex Gaussian entries, ``E|z|^2 = 1``."""
    g = rng.normal((2,) + tuple(np.atleast_1d(shape)))
    return (g[0] + 1j * g[1]) / np.sqrt(2.0)


def haar_unitaries(d: int, n: int, rng: RngStream) -> np.ndarray:
    """Stack of ``n`` independent Haar unitaries, shape ``(n, d, d)``.

    QR of a Ginibre matrix, with the columns of ``Q`` rephased by the
    phases of ``diag(R)``; without that step the output is not Haar.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    Z = complex_gaussian((n, d, d), rng)
    Q, R = np.linalg.qr(Z)
    diag = np.diagonal(R, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return Q * phases[:, None, :]


def haar_unitary(d: int, rng: RngStream) -> np.ndarray:
    return haar_unitaries(d, 1, rng)[0]


def haar_isometry(dim_in: int, dim_out: int, rng: RngStream) -> np.ndarray:
    """Haar isometry ``C^dim_in -> C^dim_out``: a Haar unitary restricted to the first columns."""
    if dim_out < dim_in:
        raise ValueError(f"isometry needs dim_out >= dim_in, got {dim_out} < {dim_in}")
    return haar_unitary(dim_out, rng)[:, :dim_in]


def haar_pure_states(d: int, n: int, rng: RngStream) -> np.ndarray:
    """``n`` Haar-random unit vectors in ``C^d``, shape ``(n, d)``."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    z = complex_gaussian((n, d), rng)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_pure_state(d: int, rng: RngStream) -> np.ndarray:
    return haar_pure_states(d, 1, rng)[0]


def random_density(d: int, r: int, rng: RngStream) -> np.ndarray:
    """Rank-``r`` density matrix with Haar eigenbasis and simplex-uniform spectrum."""
    if not 1 <= r <= d:
        raise ValueError(f"rank must satisfy 1 <= r <= d, got r={r}, d={d}")
    while True:
        w = rng.exponential(r)
        w /= w.sum()
        if np.all(w > 1e-12):
            break
    V = haar_unitary(d, rng)[:, :r]
    return density_matrix((V * w) @ V.conj().T)


def random_projector(d: int, s: int, rng: RngStream) -> np.ndarray:
    """Projector onto a Haar-random ``s``-dimensional subspace of ``C^d``."""
    if not 1 <= s <= d:
        raise ValueError(f"subspace dimension must satisfy 1 <= s <= d, got s={s}, d={d}")
    V = haar_isometry(s, d, rng)
    return V @ V.conj().T
