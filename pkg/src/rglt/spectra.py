"""Dense eigenvalue and singular value routines.

Everything delegates to LAPACK through numpy/scipy; this module adds input
checks, sorting and the :class:`SpectralSample` container.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

KINDS = ("eig-hermitian", "singular", "eig-general-real-part", "eig-general-modulus")


class NumericalError(RuntimeError):
    pass


def dense(A) -> np.ndarray:
    if sp.issparse(A):
        return A.toarray()
    return np.asarray(A)


def hermitian_defect(A) -> float:
    M = dense(A)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(M - M.conj().T)))


def _check_square(M: np.ndarray) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")


def _check_hermitian(M: np.ndarray) -> None:
    _check_square(M)
    if M.size == 0:
        return
    defect = hermitian_defect(M)
    scale = max(1.0, float(np.max(np.abs(M))))
    if defect > 1e-12 * scale:
        raise ValueError(f"matrix is not Hermitian: max |A - A^H| = {defect:.3e}")


@dataclass
class SpectralSample:
    values: np.ndarray
    kind: str
    size_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.sort(np.asarray(self.values, dtype=float))
        if self.kind not in KINDS:
            raise ValueError(f"unknown spectral kind {self.kind!r}")

    def __len__(self) -> int:
        return len(self.values)

    def to_csv(self) -> str:
        return "value\n" + "".join(f"{v:.17g}\n" for v in self.values)


def _meta(M: np.ndarray, meta: dict | None) -> dict:
    out = {"matrix_size": int(M.shape[0])}
    out.update(meta or {})
    return out


def eigvals_hermitian(A, meta: dict | None = None) -> SpectralSample:
    M = dense(A)
    _check_hermitian(M)
    if M.shape[0] == 0:
        return SpectralSample(np.zeros(0), "eig-hermitian", _meta(M, meta))
    try:
        w = sla.eigvalsh(M, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Hermitian eigensolver failed: {exc}") from exc
    return SpectralSample(w, "eig-hermitian", _meta(M, meta))


def eigvals_general(A) -> np.ndarray:
    """Complex eigenvalues, sorted by real then imaginary part."""
    M = dense(A)
    _check_square(M)
    if M.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    try:
        w = sla.eigvals(M, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"general eigensolver failed: {exc}") from exc
    return np.sort_complex(w.astype(complex))


def eig_general_sample(A, part: str = "real", meta: dict | None = None) -> SpectralSample:
    w = eigvals_general(A)
    M = dense(A)
    if part == "real":
        return SpectralSample(w.real, "eig-general-real-part", _meta(M, meta))
    return SpectralSample(np.abs(w), "eig-general-modulus", _meta(M, meta))


def _is_sparse_diagonal(A) -> bool:
    if not sp.issparse(A) or A.shape[0] != A.shape[1]:
        return False
    C = A.tocoo()
    return bool(np.all(C.row == C.col))


def singvals(A, meta: dict | None = None) -> SpectralSample:
    if _is_sparse_diagonal(A):
        # singular values of a diagonal matrix are the moduli of its entries
        return SpectralSample(np.abs(A.diagonal()), "singular", {"matrix_size": int(A.shape[0]), **(meta or {})})
    M = dense(A)
    if M.ndim != 2:
        raise ValueError("expected a matrix")
    if min(M.shape) == 0:
        return SpectralSample(np.zeros(0), "singular", {"matrix_size": int(M.shape[0]), **(meta or {})})
    try:
        s = sla.svdvals(M, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    return SpectralSample(s, "singular", {"matrix_size": int(M.shape[0]), **(meta or {})})


def pseudoinverse(A) -> np.ndarray:
    M = dense(A)
    if M.size == 0:
        return np.zeros(M.shape[::-1], dtype=M.dtype)
    try:
        U, s, Vh = sla.svd(M, full_matrices=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    cutoff = 1e-12 * (s[0] if s.size else 0.0)
    inv = np.zeros_like(s)
    big = s > cutoff
    inv[big] = 1.0 / s[big]
    return (Vh.conj().T * inv) @ U.conj().T


def matrix_function(A, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """V f(Lambda) V^H for Hermitian A."""
    M = dense(A)
    _check_hermitian(M)
    if M.shape[0] == 0:
        return M.copy()
    try:
        w, V = sla.eigh(M)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Hermitian eigensolver failed: {exc}") from exc
    fw = np.broadcast_to(np.asarray(f(w), dtype=float), w.shape)
    out = (V * fw) @ V.conj().T
    return out.real if np.isrealobj(M) else out
