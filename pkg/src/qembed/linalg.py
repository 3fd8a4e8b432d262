"""Dense complex linear algebra on operators.

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
The validating constructors (:func:`hermitian`, :func:`density_matrix`,
:func:`pure_state`) are the single place where operator invariants are
enforced; downstream code assumes their output is well formed.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "NumericalFailure",
    "HERM_TOL",
    "PSD_TOL",
    "ZERO_EIG_TOL",
    "Spectrum",
    "as_matrix",
    "hermitian",
    "density_matrix",
    "pure_state",
    "projector",
    "kron",
    "swap_operator",
    "partial_trace_B",
    "eig_hermitian",
    "schatten_norm",
    "positive_part_projector",
    "support_projector",
    "dump_matrix",
    "parse_matrix_dump",
]

HERM_TOL = 1e-10
PSD_TOL = 1e-9
TRACE_TOL = 1e-9
NORM_TOL = 1e-12
ZERO_EIG_TOL = 1e-10


class NumericalFailure(RuntimeError):
    """A numerical routine did not reach its accuracy target.

    ``residual`` carries the offending residual when one is available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(A) -> np.ndarray:
    """Return ``A`` as a finite 2-d complex array (a copy if conversion was needed)."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def _square(A, name="matrix") -> np.ndarray:
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M


def hermitian(A, tol: float = HERM_TOL) -> np.ndarray:
    """Validate that ``A`` is Hermitian and return ``(A + A^dag)/2``."""
    M = _square(A, "Hermitian operator")
    err = np.max(np.abs(M - M.conj().T), initial=0.0)
    if err > tol:
        raise ValueError(f"operator is not Hermitian (max |A - A^dag| = {err:.3e})")
    return (M + M.conj().T) / 2


def density_matrix(A, psd_tol: float = PSD_TOL, trace_tol: float = TRACE_TOL) -> np.ndarray:
    """Validate a density matrix, clipping tiny negative eigenvalues.

    Eigenvalues in ``[-psd_tol, 0)`` are set to zero and the state is
    renormalised; anything more negative, or a trace further than
    ``trace_tol`` from one, raises ``ValueError``.
    """
    H = hermitian(A)
    tr = np.trace(H).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix has trace {tr!r}, expected 1")
    w, Q = np.linalg.eigh(H)
    if w[0] < -psd_tol:
        raise ValueError(f"density matrix has eigenvalue {w[0]:.3e} < 0")
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        w /= w.sum()
        H = (Q * w) @ Q.conj().T
        H = (H + H.conj().T) / 2
    return H


def pure_state(v, tol: float = NORM_TOL) -> np.ndarray:
    """Validate a state vector of unit Euclidean norm."""
    psi = np.asarray(v, dtype=complex)
    if psi.ndim != 1:
        raise ValueError(f"state vector must be 1-d, got shape {psi.shape}")
    n = np.linalg.norm(psi)
    if abs(n - 1.0) > tol:
        raise ValueError(f"state vector has norm {n!r}, expected 1")
    return psi


def projector(psi) -> np.ndarray:
    """Rank-one projector ``|psi><psi|``."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def kron(A, B) -> np.ndarray:
    return np.kron(as_matrix(A), as_matrix(B))


def swap_operator(d: int) -> np.ndarray:
    """The swap ``F_d`` on ``C^d (x) C^d``, i.e. ``sum_ij |i><j| (x) |j><i|``."""
    if d < 1:
        raise ValueError("swap_operator needs d >= 1")
    F = np.zeros((d * d, d * d), dtype=complex)
    i, j = np.divmod(np.arange(d * d), d)
    F[i * d + j, j * d + i] = 1.0
    return F


def partial_trace_B(X, dimA: int, dimB: int) -> np.ndarray:
    """Trace out the second tensor factor of a ``(dimA*dimB)``-square matrix."""
    M = as_matrix(X)
    n = dimA * dimB
    if M.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix for dims ({dimA}, {dimB}), got {M.shape}")
    return np.trace(M.reshape(dimA, dimB, dimA, dimB), axis1=1, axis2=3)


def eig_hermitian(A) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises
    ------
    NumericalFailure
        If LAPACK does not converge or the reconstruction residual
        ``||A - Q diag(w) Q^dag||_2`` exceeds ``1e-8 * max(1, ||A||_2)``.
    """
    H = hermitian(A)
    try:
        w, Q = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalFailure(f"eigh failed: {exc}") from exc
    w = w[::-1].copy()
    Q = Q[:, ::-1].copy()
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    residual = np.linalg.norm(H - (Q * w) @ Q.conj().T, 2) if H.size else 0.0
    if residual > 1e-8 * scale:
        raise NumericalFailure("eigendecomposition residual too large", residual=residual)
    return Spectrum(w, Q)


def schatten_norm(A, p) -> float:
    """Schatten p-norm of a Hermitian operator for ``p`` in ``{1, 2, inf}``."""
    if p not in (1, 2, np.inf, "inf"):
        raise ValueError(f"unsupported Schatten index p={p!r}; use 1, 2 or inf")
    H = hermitian(A)
    if p == 2:
        return float(np.sqrt(np.sum(np.abs(H) ** 2)))
    w = np.abs(np.linalg.eigvalsh(H))
    if p == 1:
        return float(w.sum())
    return float(w.max(initial=0.0))


def positive_part_projector(A, tol: float = ZERO_EIG_TOL) -> np.ndarray:
    """Projector onto the eigenvectors of ``A`` with eigenvalue ``> tol``."""
    w, Q = eig_hermitian(A)
    Qp = Q[:, w > tol]
    return Qp @ Qp.conj().T


def support_projector(A, tol: float = ZERO_EIG_TOL) -> np.ndarray:
    """Projector onto the support (range) of a positive semidefinite operator."""
    return positive_part_projector(A, tol)


def _fmt_entry(z: complex) -> str:
    return f"{float(z.real)}{float(z.imag):+}i"


def dump_matrix(A) -> str:
    """Debug dump: one line per row, tab-separated ``re+imi`` entries."""
    M = np.asarray(A, dtype=complex)
    if M.ndim == 1:
        M = M[:, None]
    return "\n".join("\t".join(_fmt_entry(z) for z in row) for row in M)


def parse_matrix_dump(text: str) -> np.ndarray:
    """Inverse of :func:`dump_matrix`."""
    rows = []
    for line in text.strip().splitlines():
        rows.append([complex(tok.replace("i", "j")) for tok in line.split("\t")])
    return np.array(rows, dtype=complex)
