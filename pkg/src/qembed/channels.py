"""Quantum channels in Kraus form.

A channel is stored as a stack of Kraus operators of shape
``(k, dim_out, dim_in)``.  Construction checks trace preservation, so a
:class:`KrausChannel` instance is always CPTP up to ``1e-9``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import hermitian, swap_operator
from .sampling import RngStream, haar_isometry

__all__ = [
    "CPTP_TOL",
    "KrausChannel",
    "identity_channel",
    "depolarizing_channel",
    "embedding_channel",
    "stinespring_channel",
    "random_embedding_channel",
    "apply",
    "apply_batch",
    "apply_tensor_square",
    "flip_functional",
    "flip_functional_kraus",
    "kraus_gram",
    "canonicalize",
]

CPTP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus_ops: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.kraus_ops, dtype=complex)
        if K.ndim == 2:
            K = K[None]
        if K.ndim != 3 or K.shape[0] == 0:
            raise ValueError(f"Kraus operators must have shape (k, dim_out, dim_in), got {K.shape}")
        if not np.all(np.isfinite(K)):
            raise ValueError("Kraus operators have non-finite entries")
        S = np.einsum("kai,kaj->ij", K.conj(), K)
        err = np.max(np.abs(S - np.eye(K.shape[2])))
        if err > CPTP_TOL:
            raise ValueError(f"channel is not trace preserving (max |sum A^dag A - I| = {err:.3e})")
        K.setflags(write=False)
        object.__setattr__(self, "kraus_ops", K)

    @property
    def dim_in(self) -> int:
        return self.kraus_ops.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus_ops.shape[1]

    @property
    def num_kraus(self) -> int:
        return self.kraus_ops.shape[0]

    def __call__(self, X):
        return apply(self, X)


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel(np.eye(d, dtype=complex)[None])


def depolarizing_channel(dim_in: int, dim_out: int | None = None) -> KrausChannel:
    """Completely depolarizing channel ``X -> tr(X) I/dim_out``.

    Kraus operators are ``|i><j| / sqrt(dim_out)`` for all ``i < dim_out``, ``j < dim_in``.
    """
    dim_out = dim_in if dim_out is None else dim_out
    K = np.zeros((dim_out * dim_in, dim_out, dim_in), dtype=complex)
    i, j = np.divmod(np.arange(dim_out * dim_in), dim_in)
    K[np.arange(dim_out * dim_in), i, j] = 1.0 / np.sqrt(dim_out)
    return KrausChannel(K)


def stinespring_channel(V, dim_out: int, dim_env: int) -> KrausChannel:
    """Channel ``X -> tr_env[V X V^dag]`` for an isometry into ``C^dim_out (x) C^dim_env``.

    The Kraus operators are ``(I (x) <k|) V``.
    """
    V = np.asarray(V, dtype=complex)
    if V.ndim != 2 or V.shape[0] != dim_out * dim_env:
        raise ValueError(
            f"isometry must have {dim_out * dim_env} rows for output dims "
            f"({dim_out}, {dim_env}), got shape {V.shape}"
        )
    K = V.reshape(dim_out, dim_env, V.shape[1]).transpose(1, 0, 2)
    return KrausChannel(K)


def embedding_channel(V, d: int, e: int) -> KrausChannel:
    """The embedding channel: apply ``V: C^d -> C^e (x) C^ceil(d/e)``, discard the second factor."""
    if not 1 <= e <= d:
        raise ValueError(f"target dimension must satisfy 1 <= e <= d, got e={e}, d={d}")
    V = np.asarray(V)
    if V.shape != (e * math.ceil(d / e), d):
        raise ValueError(f"isometry for (d, e)=({d}, {e}) must be {e * math.ceil(d / e)}x{d}, got {V.shape}")
    return stinespring_channel(V, e, math.ceil(d / e))


def random_embedding_channel(d: int, e: int, rng: RngStream) -> KrausChannel:
    m = math.ceil(d / e)
    return embedding_channel(haar_isometry(d, e * m, rng), d, e)


def apply(ch: KrausChannel, X) -> np.ndarray:
    """``sum_i A_i X A_i^dag``; Hermitian input gives Hermitian output."""
    M = hermitian(X)
    if M.shape != (ch.dim_in, ch.dim_in):
        raise ValueError(f"channel input must be {ch.dim_in}x{ch.dim_in}, got {M.shape}")
    K = ch.kraus_ops
    Y = np.einsum("kab,bc,kdc->ad", K, M, K.conj())
    return (Y + Y.conj().T) / 2


def apply_batch(ch: KrausChannel, X: np.ndarray) -> np.ndarray:
    """Apply the channel to a stack of operators of shape ``(n, dim_in, dim_in)`` without validation."""
    K = ch.kraus_ops
    return np.einsum("kab,nbc,kdc->nad", K, X, K.conj(), optimize=True)


def apply_tensor_square(ch: KrausChannel, X) -> np.ndarray:
    """``sum_ij (A_i (x) A_j) X (A_i (x) A_j)^dag`` on a ``dim_in^2``-square matrix."""
    d, e = ch.dim_in, ch.dim_out
    X = np.asarray(X, dtype=complex)
    if X.shape != (d * d, d * d):
        raise ValueError(f"input must be {d * d}x{d * d}, got {X.shape}")
    K = ch.kraus_ops
    X4 = X.reshape(d, d, d, d)
    # first factor, then second; each is a plain channel application on one leg
    T = np.einsum("kap,pqrs,kcr->aqcs", K, X4, K.conj(), optimize=True)
    Y = np.einsum("kbq,aqcs,kds->abcd", K, T, K.conj(), optimize=True)
    return Y.reshape(e * e, e * e)


def flip_functional(ch: KrausChannel) -> float:
    """``tr[F_e (E (x) E)(F_d)]``, evaluated from its definition."""
    Y = apply_tensor_square(ch, swap_operator(ch.dim_in))
    return float(np.real(np.trace(swap_operator(ch.dim_out) @ Y)))


def kraus_gram(ch: KrausChannel) -> np.ndarray:
    """Gram matrix ``G_ij = tr[A_i^dag A_j]``."""
    K = ch.kraus_ops
    return np.einsum("iab,jab->ij", K.conj(), K)


def flip_functional_kraus(ch: KrausChannel) -> float:
    """Same quantity as :func:`flip_functional`, as ``sum_i (tr A_i^dag A_i)^2`` in canonical form."""
    g = np.real(np.diagonal(kraus_gram(canonicalize(ch))))
    return float(np.sum(g**2))


def canonicalize(ch: KrausChannel, tol: float = 1e-12) -> KrausChannel:
    """Equivalent channel whose Kraus operators are pairwise trace-orthogonal.

    Diagonalises the Kraus Gram matrix ``G = W diag(g) W^dag`` and mixes the
    operators as ``B_k = sum_i W_ik A_i``.  Operators with ``g_k`` below
    ``tol * max(g)`` are dropped.  Order is by descending ``g_k``; each
    ``B_k`` is rephased so its first entry of magnitude above ``1e-12`` is
    real and positive.
    """
    G = kraus_gram(ch)
    G = (G + G.conj().T) / 2
    g, W = np.linalg.eigh(G)
    g, W = g[::-1], W[:, ::-1]
    keep = g > tol * max(g[0], 1.0)
    B = np.einsum("ik,iab->kab", W[:, keep], ch.kraus_ops)
    flat = B.reshape(B.shape[0], -1)
    for k in range(flat.shape[0]):
        nz = np.flatnonzero(np.abs(flat[k]) > 1e-12)
        if nz.size:
            z = flat[k, nz[0]]
            flat[k] *= np.conj(z) / abs(z)
    return KrausChannel(flat.reshape(B.shape))
