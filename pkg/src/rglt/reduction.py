"""Restriction to a subdomain: the selection Pi, and Z, R, E as index operations.

Pi is never formed densely; restrict and expand are gather/scatter over the
sorted list of kept flat indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .domain import Domain, GridMask, mask as domain_mask
from .multiindex import GridSize


@dataclass(frozen=True, eq=False)
class Projector:
    """Selection of the grid points of a mask; ``kept`` holds 1-based flat indices."""

    n: GridSize
    mask: GridMask
    kept: np.ndarray

    @classmethod
    def from_mask(cls, m: GridMask) -> "Projector":
        kept = m.indices()
        kept.setflags(write=False)
        return cls(m.n, m, kept)

    @classmethod
    def from_domain(cls, domain: Domain, n: GridSize, closure: bool = False) -> "Projector":
        return cls.from_mask(domain_mask(domain, n, closure))

    @classmethod
    def from_kept(cls, n: GridSize, kept: Sequence[int]) -> "Projector":
        bits = np.zeros(n.N, dtype=bool)
        idx = np.asarray(kept, dtype=np.int64)
        if idx.size and (idx.min() < 1 or idx.max() > n.N):
            raise IndexError("kept index out of range")
        bits[idx - 1] = True
        return cls.from_mask(GridMask(n, bits))

    @property
    def positions(self) -> np.ndarray:
        """0-based kept positions."""
        return self.kept - 1

    @property
    def N(self) -> int:
        return self.n.N

    @property
    def d(self) -> int:
        return int(self.kept.size)

    def complement(self) -> np.ndarray:
        """1-based flat indices of the discarded points."""
        return np.flatnonzero(~self.mask.bits) + 1

    def matrix(self) -> sp.csr_matrix:
        """Pi as an integer sparse d x N matrix."""
        d = self.d
        return sp.csr_matrix((np.ones(d, dtype=np.int64), (np.arange(d), self.positions)),
                             shape=(d, self.N))

    def _check(self, A, size: int, what: str) -> None:
        if A.ndim != 2 or A.shape != (size, size):
            raise ValueError(f"{what}: expected a {size}x{size} matrix, got {A.shape}")


def zero_out(P: Projector, A):
    """I(chi) A I(chi): rows and columns outside the mask set to zero."""
    P._check(A, P.N, "zero_out")
    keep = P.mask.bits
    if sp.issparse(A):
        D = sp.diags(keep.astype(A.dtype if A.dtype.kind in "fc" else float))
        return (D @ A @ D).tocsr()
    out = np.array(A, copy=True)
    out[~keep, :] = 0
    out[:, ~keep] = 0
    return out


def restrict(P: Projector, A):
    """Pi A Pi^T: the principal submatrix at the kept indices."""
    P._check(A, P.N, "restrict")
    pos = P.positions
    if sp.issparse(A):
        return A.tocsr()[pos][:, pos]
    return np.asarray(A)[np.ix_(pos, pos)]


def expand(P: Projector, S):
    """Pi^T S Pi: S placed at the kept indices of an N x N zero matrix."""
    P._check(S, P.d, "expand")
    pos = P.positions
    if sp.issparse(S):
        C = S.tocoo()
        return sp.csr_matrix((C.data, (pos[C.row], pos[C.col])), shape=(P.N, P.N))
    S = np.asarray(S)
    out = np.zeros((P.N, P.N), dtype=S.dtype)
    out[np.ix_(pos, pos)] = S
    return out


def projector_gram_checks(P: Projector) -> dict:
    """Exact checks of Pi^T Pi = I(chi) and Pi Pi^T = I_d in integer arithmetic."""
    Pi = P.matrix()
    report = {"d": P.d, "N": P.N, "passed": True, "first_failure": None}
    checks = [
        ("PiT_Pi", (Pi.T @ Pi).tocsr(), sp.diags(P.mask.bits.astype(np.int64), format="csr")),
        ("Pi_PiT", (Pi @ Pi.T).tocsr(), sp.identity(P.d, dtype=np.int64, format="csr")),
    ]
    for name, got, want in checks:
        diff = (got - want).tocoo()
        bad = np.flatnonzero(diff.data != 0)
        if bad.size:
            k = bad[0]
            report["passed"] = False
            report["first_failure"] = {"check": name, "row": int(diff.row[k]) + 1,
                                       "col": int(diff.col[k]) + 1, "difference": int(diff.data[k])}
            break
    return report


def restricted_grid_equivalence(A_builder: Callable[[GridSize], object], dom1: Domain,
                                dom2_per_n: Callable[[GridSize], GridMask], sweep: Sequence[GridSize],
                                hermitian: bool = True) -> dict:
    """Compare spectra of A restricted by mask(dom1) and by an alternative mask, per n."""
    from . import spectra, symbols

    def one(n):
        n = GridSize.coerce(n, dom1.d)
        A = A_builder(n)
        m1 = domain_mask(dom1, n)
        m2 = dom2_per_n(n)
        P1, P2 = Projector.from_mask(m1), Projector.from_mask(m2)
        symdiff = int(np.count_nonzero(m1.bits ^ m2.bits))
        if hermitian:
            s1 = spectra.eigvals_hermitian(restrict(P1, A))
            s2 = spectra.eigvals_hermitian(restrict(P2, A))
        else:
            s1 = spectra.singvals(restrict(P1, A))
            s2 = spectra.singvals(restrict(P2, A))
        dist = symbols.wasserstein1(s1, s2) if len(s1) and len(s2) else float(len(s1) != len(s2))
        return symdiff, symdiff / n.N, dist

    rows = symbols.map_sweep(one, list(sweep))
    ratios = [r[1] for r in rows]
    dists = [r[2] for r in rows]
    return {
        "n": [list(GridSize.coerce(n, dom1.d).n) for n in sweep],
        "symmetric_difference": [r[0] for r in rows],
        "ratio": ratios,
        "wasserstein1": dists,
        "converged": symbols.trend_ok(dists) and symbols.trend_ok(ratios),
    }
