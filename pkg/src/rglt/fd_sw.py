"""Shortley-Weller finite differences for
-sum_i d/dx_i(a_i du/dx_i) + sum_i b_i du/dx_i + c u = f on a subdomain of [0,1]^d
with homogeneous Dirichlet data.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .domain import Domain, GridMask, grid_coordinates
from .functions import CoefficientFn, Stencil
from .glt_core import DiagI, GltExpr, Sum, Toeplitz, Product, build_matrix
from .multiindex import GridSize, grid_indices, linearize_array
from .reduction import Projector
from .symbols import SeparableSymbol, map_sweep, skew_ratio

log = logging.getLogger(__name__)

# fractions below this make a point too close to the boundary to keep
MIN_FRACTION = 1e-8


def _coerce_vector(value, d: int) -> list[CoefficientFn]:
    if isinstance(value, (list, tuple)):
        if len(value) != d:
            raise ValueError(f"expected {d} coefficient components, got {len(value)}")
        return [CoefficientFn.coerce(v, d) for v in value]
    return [CoefficientFn.coerce(value, d) for _ in range(d)]


@dataclass(frozen=True, eq=False)
class SWProblem:
    domain: Domain
    a: tuple[CoefficientFn, ...]
    b: tuple[CoefficientFn, ...]
    c: CoefficientFn
    f: CoefficientFn

    @classmethod
    def create(cls, domain: Domain, a=1.0, b=0.0, c=0.0, f=0.0) -> "SWProblem":
        d = domain.d
        return cls(domain, tuple(_coerce_vector(a, d)), tuple(_coerce_vector(b, d)),
                   CoefficientFn.coerce(c, d), CoefficientFn.coerce(f, d))

    @property
    def d(self) -> int:
        return self.domain.d


@dataclass
class SWSystem:
    """Assembled system over the kept interior grid points, lexicographic order."""

    n: GridSize
    matrix: sp.csr_matrix
    projector: Projector
    rhs: np.ndarray
    points: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    dropped: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def neighbor_fraction(domain: Domain, x, axis: int, sign: int, h: float) -> float:
    """sup{t in [0,1] : x + sign*r*h*e_axis in the open domain for all r <= t}."""
    x = np.asarray(x, dtype=float).reshape(1, domain.d)
    if not domain.inside(x)[0]:
        raise ValueError(f"point {x[0].tolist()} is not in the open domain")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return float(domain.ray_reach(x, axis, sign, h, 1.0)[0])


def neighbor_fractions(domain: Domain, n: GridSize, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(P, d) arrays of s^+ and s^- at the given interior points."""
    h = n.h
    sp_, sm = np.empty((len(points), n.d)), np.empty((len(points), n.d))
    for i in range(n.d):
        sp_[:, i] = domain.ray_reach(points, i, 1, h[i], 1.0)
        sm[:, i] = domain.ray_reach(points, i, -1, h[i], 1.0)
    return sp_, sm


def assemble_sw(prob: SWProblem, n: GridSize) -> SWSystem:
    n = GridSize.coerce(n, prob.d)
    if n.d != prob.d:
        raise ValueError("grid dimension does not match the problem")
    idx_all = grid_indices(n)
    pts_all = grid_coordinates(n)
    inside = prob.domain.inside(pts_all)
    cand = np.flatnonzero(inside)
    s_plus, s_minus = neighbor_fractions(prob.domain, n, pts_all[cand])

    ok = np.all((s_plus >= MIN_FRACTION) & (s_minus >= MIN_FRACTION), axis=1)
    dropped = [tuple(int(c) for c in idx_all[k]) for k in cand[~ok]]
    if dropped:
        log.info("dropping %d grid point(s) closer than %g steps to the boundary at n=%s",
                 len(dropped), MIN_FRACTION, n)
    cand, s_plus, s_minus = cand[ok], s_plus[ok], s_minus[ok]
    if cand.size == 0:
        raise ValueError(f"no interior grid point at n={n}")

    bits = np.zeros(n.N, dtype=bool)
    bits[cand] = True
    P = Projector.from_mask(GridMask(n, bits))
    row_of = np.full(n.N, -1, dtype=np.int64)
    row_of[cand] = np.arange(cand.size)

    x = pts_all[cand]
    idx = idx_all[cand]
    h = n.h
    rows_l, cols_l, vals_l = [], [], []
    diag = prob.c(x).astype(complex)
    for i in range(n.d):
        e = np.zeros(n.d)
        e[i] = 1.0
        sp_i, sm_i = s_plus[:, i], s_minus[:, i]
        ssum = sp_i + sm_i
        hi = h[i]
        a_plus = prob.a[i](x + (sp_i * hi / 2)[:, None] * e)
        a_minus = prob.a[i](x - (sm_i * hi / 2)[:, None] * e)
        diag += a_plus / (0.5 * sp_i * ssum * hi**2) + a_minus / (0.5 * sm_i * ssum * hi**2)
        bx = prob.b[i](x)
        for sign, s_dir in ((1, sp_i), (-1, sm_i)):
            nb_idx = idx.copy()
            nb_idx[:, i] += sign
            valid = (s_dir == 1.0) & (nb_idx[:, i] >= 1) & (nb_idx[:, i] <= n.n[i])
            flat = np.full(len(x), -1, dtype=np.int64)
            flat[valid] = linearize_array(nb_idx[valid], n) - 1
            nb_row = np.where(valid, row_of[np.maximum(flat, 0)], -1)
            valid &= nb_row >= 0
            a_half = prob.a[i](x[valid] + sign * (hi / 2) * e)
            val = -a_half / (0.5 * ssum[valid] * hi**2) + sign * bx[valid] / (ssum[valid] * hi)
            rows_l.append(np.flatnonzero(valid))
            cols_l.append(nb_row[valid])
            vals_l.append(val.astype(complex))

    m = cand.size
    rows = np.concatenate([np.arange(m)] + rows_l)
    cols = np.concatenate([np.arange(m)] + cols_l)
    vals = np.concatenate([diag] + vals_l)
    if not np.any(vals.imag):
        vals = vals.real
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, m))
    A.sum_duplicates()
    rhs = prob.f(x)
    return SWSystem(n, A, P, rhs, x, s_plus, s_minus, dropped)


def central_difference_expr(prob: SWProblem, n: GridSize) -> GltExpr:
    """Classical central differences on the full grid, built from D/T leaves.

    Coefficients are sampled at i/(n+1) shifted by half steps, so the
    expression depends on ``n``.
    """
    n = GridSize.coerce(n, prob.d)
    d = prob.d
    h = n.h
    parts: list[GltExpr] = [DiagI(prob.c)]
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        hi = h[i]
        ai, bi = prob.a[i], prob.b[i]
        a_p = CoefficientFn(lambda x, ai=ai, e=e, hi=hi: ai(x + hi / 2 * e), d, f"{ai.label}(+h/2)")
        a_m = CoefficientFn(lambda x, ai=ai, e=e, hi=hi: ai(x - hi / 2 * e), d, f"{ai.label}(-h/2)")
        fwd = Toeplitz(Stencil({tuple(-e.astype(int)): 1.0}, d))   # column j + e_i
        bwd = Toeplitz(Stencil({tuple(e.astype(int)): 1.0}, d))    # column j - e_i
        parts += [
            DiagI((a_p + a_m) * (1 / hi**2)),
            Product((DiagI(a_p * (-1 / hi**2)), fwd)),
            Product((DiagI(a_m * (-1 / hi**2)), bwd)),
            Product((DiagI(bi * (1 / (2 * hi))), fwd)),
            Product((DiagI(bi * (-1 / (2 * hi))), bwd)),
        ]
    return Sum(tuple(parts))


def central_difference_matrix(prob: SWProblem, n: GridSize) -> sp.csr_matrix:
    n = GridSize.coerce(n, prob.d)
    return build_matrix(central_difference_expr(prob, n), n)


def scale_factor(n: GridSize) -> float:
    """The n^-2 normalization, with n the smallest grid size component."""
    return 1.0 / min(n.n) ** 2


def sw_symbol(prob: SWProblem, nu: Sequence[float] | None = None) -> SeparableSymbol:
    """sum_i nu_i^2 a_i(x) (2 - 2 cos theta_i) over the open domain."""
    d = prob.d
    nu = np.ones(d) if nu is None else np.asarray(nu, dtype=float)
    terms = [(prob.a[i] * float(nu[i] ** 2), Stencil.laplacian(d, [i])) for i in range(d)]
    return SeparableSymbol(d, terms, domain=prob.domain)


def sw_skew_norm_report(prob: SWProblem, sweep: Sequence) -> dict:
    """Per n: ||Im(n^-2 A)||_F^2 / size, with Im(X) = (X - X^H)/2."""

    def one(n):
        n = GridSize.coerce(n, prob.d)
        A = assemble_sw(prob, n).matrix * scale_factor(n)
        return skew_ratio(A)

    ratios = map_sweep(one, list(sweep))
    return {"n": [list(GridSize.coerce(n, prob.d).n) for n in sweep], "ratio": ratios}
