"""Toeplitz and diagonal-sampling generators and a GLT expression tree.

Expressions are immutable trees; :func:`build_matrix` materializes them as
scipy sparse matrices for a grid size and :func:`derive_symbol` produces the
symbol by the usual algebra rules (sum, product, conjugation, restriction).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .domain import Domain, grid_coordinates
from .functions import CoefficientFn, Stencil
from .multiindex import GridSize, grid_indices
from .symbols import SeparableSymbol

MAX_SYMBOL_TERMS = 4096


def toeplitz(stencil: Stencil, n: GridSize) -> sp.csr_matrix:
    """Multilevel Toeplitz matrix with entry (i, j) = f_{i-j}."""
    if stencil.d != n.d:
        raise ValueError(f"stencil dimension {stencil.d} does not match grid dimension {n.d}")
    N = n.N
    out = sp.csr_matrix((N, N), dtype=complex)
    for k, v in stencil.coeffs.items():
        if any(abs(kr) >= nr for kr, nr in zip(k, n.n)):
            continue
        block = sp.identity(1, format="csr")
        for kr, nr in zip(k, n.n):
            block = sp.kron(block, sp.eye(nr, k=-kr, format="csr"), format="csr")
        out = out + v * block
    return _realify(out.tocsr())


def _realify(M):
    if sp.issparse(M):
        if M.dtype.kind == "c" and (M.nnz == 0 or not np.any(M.data.imag)):
            return M.real.tocsr()
        return M
    if np.iscomplexobj(M) and not np.any(M.imag):
        return M.real
    return M


def diag_sampling_D(a: CoefficientFn, n: GridSize) -> sp.csr_matrix:
    """diag(a(i/n)), lexicographic order."""
    pts = grid_indices(n) / np.asarray(n.n, dtype=float)
    return _realify(sp.diags(a(pts).astype(complex), format="csr"))


def diag_sampling_I(a: CoefficientFn, n: GridSize) -> sp.csr_matrix:
    """diag(a(i/(n+1))), lexicographic order."""
    return _realify(sp.diags(a(grid_coordinates(n)).astype(complex), format="csr"))


# --- expression tree ---------------------------------------------------------


class GltExpr:
    d: int

    def __add__(self, other: "GltExpr") -> "GltExpr":
        return Sum((self, other))

    def __sub__(self, other: "GltExpr") -> "GltExpr":
        return Sum((self, Scaled(-1.0, other)))

    def __neg__(self) -> "GltExpr":
        return Scaled(-1.0, self)

    def __mul__(self, other) -> "GltExpr":
        if isinstance(other, GltExpr):
            return Product((self, other))
        return Scaled(complex(other), self)

    def __rmul__(self, other) -> "GltExpr":
        return Scaled(complex(other), self)

    @property
    def H(self) -> "GltExpr":
        return ConjTranspose(self)

    def reduce(self, domain: Domain) -> "GltExpr":
        return Reduce(domain, self)


@dataclass(frozen=True, eq=False)
class Toeplitz(GltExpr):
    stencil: Stencil

    @property
    def d(self) -> int:
        return self.stencil.d


@dataclass(frozen=True, eq=False)
class DiagD(GltExpr):
    a: CoefficientFn

    @property
    def d(self) -> int:
        return self.a.d


@dataclass(frozen=True, eq=False)
class DiagI(GltExpr):
    a: CoefficientFn

    @property
    def d(self) -> int:
        return self.a.d


@dataclass(frozen=True, eq=False)
class Zero(GltExpr):
    d: int


def _common_dim(children: Sequence[GltExpr]) -> int:
    dims = {c.d for c in children}
    if len(dims) != 1:
        raise ValueError(f"expression leaves disagree on dimension: {sorted(dims)}")
    return dims.pop()


@dataclass(frozen=True, eq=False)
class Sum(GltExpr):
    children: tuple[GltExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("empty sum")
        _common_dim(self.children)

    @property
    def d(self) -> int:
        return self.children[0].d


@dataclass(frozen=True, eq=False)
class Product(GltExpr):
    children: tuple[GltExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("empty product")
        _common_dim(self.children)

    @property
    def d(self) -> int:
        return self.children[0].d


@dataclass(frozen=True, eq=False)
class Scaled(GltExpr):
    alpha: complex
    child: GltExpr

    @property
    def d(self) -> int:
        return self.child.d


@dataclass(frozen=True, eq=False)
class ConjTranspose(GltExpr):
    child: GltExpr

    @property
    def d(self) -> int:
        return self.child.d


@dataclass(frozen=True, eq=False)
class Reduce(GltExpr):
    domain: Domain
    child: GltExpr

    def __post_init__(self):
        if self.domain.d != self.child.d:
            raise ValueError("Reduce domain dimension does not match its operand")

    @property
    def d(self) -> int:
        return self.child.d


def build_matrix(expr: GltExpr, n: GridSize) -> sp.csr_matrix:
    """Materialize ``expr`` at grid size ``n`` (always full size N(n))."""
    if expr.d != n.d:
        raise ValueError(f"expression dimension {expr.d} does not match grid dimension {n.d}")
    return _realify(_build(expr, n).tocsr())


def _build(e: GltExpr, n: GridSize):
    if isinstance(e, Toeplitz):
        return toeplitz(e.stencil, n)
    if isinstance(e, DiagD):
        return diag_sampling_D(e.a, n)
    if isinstance(e, DiagI):
        return diag_sampling_I(e.a, n)
    if isinstance(e, Zero):
        return sp.csr_matrix((n.N, n.N))
    if isinstance(e, Sum):
        out = _build(e.children[0], n)
        for c in e.children[1:]:
            out = out + _build(c, n)
        return out
    if isinstance(e, Product):
        out = _build(e.children[0], n)
        for c in e.children[1:]:
            out = out @ _build(c, n)
        return out
    if isinstance(e, Scaled):
        alpha = complex(e.alpha)
        return (alpha.real if alpha.imag == 0 else alpha) * _build(e.child, n)
    if isinstance(e, ConjTranspose):
        return _build(e.child, n).conj().T.tocsr()
    if isinstance(e, Reduce):
        chi = sp.diags(e.domain.inside(grid_coordinates(n)).astype(float), format="csr")
        return chi @ _build(e.child, n) @ chi
    raise TypeError(f"unknown expression node {type(e).__name__}")


def derive_symbol(expr: GltExpr, max_terms: int = MAX_SYMBOL_TERMS) -> SeparableSymbol:
    d = expr.d
    if isinstance(expr, Toeplitz):
        return SeparableSymbol.from_stencil(expr.stencil)
    if isinstance(expr, (DiagD, DiagI)):
        return SeparableSymbol.from_coefficient(expr.a)
    if isinstance(expr, Zero):
        return SeparableSymbol.zero(d)
    if isinstance(expr, Sum):
        out = derive_symbol(expr.children[0], max_terms)
        for c in expr.children[1:]:
            out = out + derive_symbol(c, max_terms)
        return out
    if isinstance(expr, Product):
        out = derive_symbol(expr.children[0], max_terms)
        for c in expr.children[1:]:
            out = out.multiply(derive_symbol(c, max_terms), max_terms)
        return out
    if isinstance(expr, Scaled):
        return derive_symbol(expr.child, max_terms).scaled(complex(expr.alpha))
    if isinstance(expr, ConjTranspose):
        return derive_symbol(expr.child, max_terms).conj()
    if isinstance(expr, Reduce):
        sym = derive_symbol(expr.child, max_terms).times_coefficient(CoefficientFn.indicator(expr.domain))
        return sym.restricted(expr.domain)
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def expr_from_config(node: dict, d: int) -> GltExpr:
    """Build an expression from a JSON tree such as
    ``{"op": "product", "args": [{"op": "D", "a": "x1"}, {"op": "T", "stencil": {"0": 2}}]}``.
    """
    op = node.get("op")
    if op == "T":
        return Toeplitz(Stencil.from_json({"d": d, "coeffs": node["stencil"]}))
    if op in ("D", "I"):
        a = CoefficientFn.coerce(node.get("a", 1.0), d)
        return DiagD(a) if op == "D" else DiagI(a)
    if op == "zero":
        return Zero(d)
    if op in ("sum", "product"):
        kids = tuple(expr_from_config(c, d) for c in node["args"])
        return Sum(kids) if op == "sum" else Product(kids)
    if op == "scale":
        v = node["value"]
        alpha = complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
        return Scaled(alpha, expr_from_config(node["arg"], d))
    if op == "adjoint":
        return ConjTranspose(expr_from_config(node["arg"], d))
    if op == "reduce":
        return Reduce(Domain.from_config(node["domain"], d), expr_from_config(node["arg"], d))
    raise ValueError(f"unknown expression op {op!r}")
