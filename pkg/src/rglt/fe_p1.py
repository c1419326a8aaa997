"""P1 finite elements on the structured triangulation of [0,1]^2.

Each grid cell [i,i+1]x[j,j+1] (in units of h = 1/(n+1)) is cut along the
diagonal joining (i+1,j) and (i,j+1), so every node p couples to the six
neighbours p +- (1,0), p +- (0,1), p + (1,-1), p + (-1,1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .domain import Domain
from .functions import CoefficientFn, Stencil
from .multiindex import GridSize, grid_indices
from .symbols import SeparableSymbol

# the six triangles around a node, as offsets of their other two vertices
HEX_TRIANGLES = (
    ((1, 0), (0, 1)),
    ((1, 0), (1, -1)),
    ((1, -1), (0, -1)),
    ((0, -1), (-1, 0)),
    ((-1, 0), (-1, 1)),
    ((-1, 1), (0, 1)),
)

_B = np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])


Matrix2 = tuple[tuple[CoefficientFn, CoefficientFn], tuple[CoefficientFn, CoefficientFn]]


def _coerce_matrix(A) -> Matrix2:
    if isinstance(A, (int, float, complex, str, CoefficientFn)) or callable(A):
        a = CoefficientFn.coerce(A, 2)
        z = CoefficientFn.const(0.0, 2)
        return ((a, z), (z, a))
    rows = [list(r) for r in A]
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ValueError("diffusion must be a 2x2 matrix of coefficients")
    return tuple(tuple(CoefficientFn.coerce(v, 2) for v in r) for r in rows)  # type: ignore[return-value]


def _coerce_vector(b) -> tuple[CoefficientFn, CoefficientFn]:
    if isinstance(b, (list, tuple)):
        if len(b) != 2:
            raise ValueError("convection must have two components")
        return (CoefficientFn.coerce(b[0], 2), CoefficientFn.coerce(b[1], 2))
    v = CoefficientFn.coerce(b, 2)
    return (v, v)


@dataclass(frozen=True, eq=False)
class P1Problem:
    domain: Domain
    A: Matrix2
    b: tuple[CoefficientFn, CoefficientFn]
    c: CoefficientFn

    @classmethod
    def create(cls, domain: Domain, A=1.0, b=0.0, c=0.0) -> "P1Problem":
        if domain.d != 2:
            raise ValueError("P1 elements are implemented for d = 2 only")
        return cls(domain, _coerce_matrix(A), _coerce_vector(b), CoefficientFn.coerce(c, 2))

    def zero_extended(self) -> "P1Problem":
        """Same coefficients, set to zero outside the closed domain; posed on the square."""
        ext = lambda f: f.zero_extended(self.domain)  # noqa: E731
        A = tuple(tuple(ext(v) for v in row) for row in self.A)
        return P1Problem(Domain.hypercube(2), A, (ext(self.b[0]), ext(self.b[1])), ext(self.c))


# --- node selection ------------------------------------------------------------


def _probe_numerators(refine: bool) -> tuple[np.ndarray, int]:
    """Probe points of a reference triangle in barycentric numerators over ``den``."""
    if not refine:
        bary = [(6, 0, 0), (0, 6, 0), (0, 0, 6), (3, 3, 0), (0, 3, 3), (3, 0, 3), (2, 2, 2)]
        return np.array(bary), 6
    pts = set()
    corners = [(12, 0, 0), (0, 12, 0), (0, 0, 12)]
    mids = [(6, 6, 0), (0, 6, 6), (6, 0, 6)]
    subs = [(corners[0], mids[0], mids[2]), (mids[0], corners[1], mids[1]),
            (mids[2], mids[1], corners[2]), (mids[0], mids[1], mids[2])]
    for tri in subs:
        t = np.array(tri)
        pts.update(tuple(v) for v in t)
        for a, b in ((0, 1), (1, 2), (0, 2)):
            pts.add(tuple((t[a] + t[b]) // 2))
        pts.add(tuple(t.sum(axis=0) // 3))
    return np.array(sorted(pts)), 12


def masked_nodes(domain: Domain, n: int, refine: bool = False) -> np.ndarray:
    """(P, 2) array of 1-based node indices p with T_p inside the closed domain, lex order.

    A triangle counts as contained when its vertices, edge midpoints and
    centroid all lie in the closure (``refine`` also probes the four
    subtriangles). Probe coordinates are integer ratios, so grid lines on
    the boundary are hit exactly.
    """
    if domain.d != 2:
        raise ValueError("P1 elements are implemented for d = 2 only")
    g = GridSize.cube(int(n), 2)
    nodes = grid_indices(g)
    bary, den = _probe_numerators(refine)
    scale = float(den * (n + 1))
    ok = np.ones(len(nodes), dtype=bool)
    for o1, o2 in HEX_TRIANGLES:
        verts = np.stack([nodes, nodes + o1, nodes + o2], axis=1)   # (P, 3, 2)
        num = np.einsum("kv,pvc->pkc", bary, verts)                 # integer numerators
        probes = num.reshape(-1, 2) / scale
        ok &= domain.contains(probes).reshape(len(nodes), -1).all(axis=1)
    return nodes[ok]


# --- assembly ------------------------------------------------------------------


def mesh_triangles(n: int) -> np.ndarray:
    """(2(n+1)^2, 3, 2) integer vertex indices of the triangulation of the closed square."""
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    i, j = i.ravel(), j.ravel()
    lower = np.stack([np.stack([i, j], 1), np.stack([i + 1, j], 1), np.stack([i, j + 1], 1)], axis=1)
    upper = np.stack([np.stack([i + 1, j], 1), np.stack([i + 1, j + 1], 1), np.stack([i, j + 1], 1)], axis=1)
    return np.concatenate([lower, upper])


def local_matrices(coords: np.ndarray, A: Matrix2, b, c: CoefficientFn) -> np.ndarray:
    """(T, 3, 3) element matrices S[q, p] for triangles with vertex coordinates (T, 3, 2).

    Three-point edge-midpoint rule; the weak form is
    grad(psi_p)^T A grad(psi_q) + grad(psi_p)^T b psi_q + c psi_p psi_q.
    """
    T = len(coords)
    E = np.stack([coords[:, 1] - coords[:, 0], coords[:, 2] - coords[:, 0]], axis=2)  # columns
    det = np.linalg.det(E)
    area = 0.5 * np.abs(det)
    Einv = np.linalg.inv(E)                     # rows are grad(lambda_1), grad(lambda_2)
    G = np.empty((T, 3, 2))
    G[:, 1:] = Einv
    G[:, 0] = -Einv.sum(axis=1)
    # midpoints of edges (0,1), (1,2), (0,2) and the basis values there
    pairs = ((0, 1), (1, 2), (0, 2))
    mids = np.stack([(coords[:, a] + coords[:, b_]) / 2 for a, b_ in pairs], axis=1)  # (T, 3, 2)
    psi = np.zeros((3, 3))
    for m, (a, b_) in enumerate(pairs):
        psi[m, a] = psi[m, b_] = 0.5
    flat = mids.reshape(-1, 2)
    Am = np.empty((T, 3, 2, 2), dtype=complex)
    for r in range(2):
        for s in range(2):
            Am[:, :, r, s] = A[r][s](flat).reshape(T, 3)
    bm = np.stack([b[0](flat).reshape(T, 3), b[1](flat).reshape(T, 3)], axis=2)  # (T, 3, 2)
    cm = c(flat).reshape(T, 3)
    w = (area / 3)[:, None]                        # (T, 1), same for all three points

    # diffusion: sum_m w A_m, then G A G^T with entry [p, q] = grad_p^T A grad_q
    Abar = np.einsum("tm,tmrs->trs", np.broadcast_to(w, (T, 3)), Am)
    diff_pq = np.einsum("tpr,trs,tqs->tpq", G, Abar, G)
    # convection [p, q] = sum_m w (grad_p . b_m) psi_q(m)
    conv_pq = np.einsum("tm,tpr,tmr,mq->tpq", np.broadcast_to(w, (T, 3)), G, bm, psi)
    # reaction [p, q] = sum_m w c_m psi_p(m) psi_q(m)
    reac_pq = np.einsum("tm,tm,mp,mq->tpq", np.broadcast_to(w, (T, 3)), cm, psi, psi)
    S_pq = diff_pq + conv_pq + reac_pq
    return np.transpose(S_pq, (0, 2, 1))            # index as [q, p]


@dataclass
class P1System:
    n: int
    matrix: sp.csr_matrix
    nodes: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def assemble_p1(prob: P1Problem, n: int, nodes: np.ndarray | None = None, refine: bool = False) -> P1System:
    """Stiffness matrix over the selected nodes (default: Xi_n(Omega)), lex order."""
    n = int(n)
    if nodes is None:
        nodes = masked_nodes(prob.domain, n, refine)
    nodes = np.asarray(nodes, dtype=np.int64).reshape(-1, 2)
    if len(nodes) == 0:
        raise ValueError(f"no grid node has its six triangles inside the domain at n={n}")
    side = n + 2
    pos = np.full(side * side, -1, dtype=np.int64)
    pos[nodes[:, 0] * side + nodes[:, 1]] = np.arange(len(nodes))

    tris = mesh_triangles(n)
    vpos = pos[tris[..., 0] * side + tris[..., 1]]          # (T, 3)
    active = (vpos >= 0).any(axis=1)
    tris, vpos = tris[active], vpos[active]
    h = 1.0 / (n + 1)
    S = local_matrices(tris * h, prob.A, prob.b, prob.c)
    rows = np.repeat(vpos, 3, axis=1)                       # q index
    cols = np.tile(vpos, (1, 3))                            # p index
    vals = S.reshape(len(S), 9)
    keep = (rows >= 0) & (cols >= 0)
    vals = vals[keep]
    if not np.any(vals.imag):
        vals = vals.real
    M = sp.csr_matrix((vals, (rows[keep], cols[keep])), shape=(len(nodes), len(nodes)))
    M.sum_duplicates()
    return P1System(n, M, nodes)


# --- symbols -------------------------------------------------------------------


def r_coefficients(A: np.ndarray) -> dict[tuple[int, int], complex]:
    """The seven values r_{a,b} for a constant 2x2 matrix A."""
    BAB = lambda k, l: _B[k] @ A @ _B[l]  # noqa: E731
    r00 = sum(BAB(k, k) for k in range(3))
    r01 = -0.5 * (BAB(2, 0) + BAB(0, 2))
    r10 = -0.5 * (BAB(0, 1) + BAB(1, 0))
    r1m1 = 0.5 * (BAB(1, 2) + BAB(2, 1))
    return {(0, 0): r00, (0, 1): r01, (0, -1): r01, (1, 0): r10, (-1, 0): r10,
            (1, -1): r1m1, (-1, 1): r1m1}


def _r_stencil(A: np.ndarray) -> Stencil:
    # r_{a,b} multiplies exp(-i(a theta_1 + b theta_2)), i.e. Fourier offset (-a, -b)
    return Stencil({(-a, -b): v for (a, b), v in r_coefficients(A).items()}, 2)


def fe_symbol_square(A) -> SeparableSymbol:
    A = _coerce_matrix(A)
    terms = []
    for r in range(2):
        for s in range(2):
            E = np.zeros((2, 2))
            E[r, s] = 1.0
            terms.append((A[r][s], _r_stencil(E)))
    return SeparableSymbol(2, terms)


def fe_symbol_subdomain(prob: P1Problem) -> SeparableSymbol:
    ext = prob.zero_extended()
    return fe_symbol_square(ext.A).restricted(prob.domain)


# --- mapped grids --------------------------------------------------------------

MapFn = Callable[[np.ndarray], np.ndarray]


def affine_map(M: Sequence[Sequence[float]], t: Sequence[float]) -> tuple[MapFn, MapFn]:
    """phi(x) = M x + t together with its constant jacobian."""
    M = np.asarray(M, dtype=float)
    t = np.asarray(t, dtype=float)
    return (lambda x: np.asarray(x) @ M.T + t,
            lambda x: np.broadcast_to(M, (len(x), 2, 2)))


def expression_map(components: Sequence[str], jacobian: Sequence[Sequence[str]]) -> tuple[MapFn, MapFn]:
    phi_c = [CoefficientFn.from_expr(s, 2) for s in components]
    jac_c = [[CoefficientFn.from_expr(s, 2) for s in row] for row in jacobian]
    phi = lambda x: np.stack([f(x).real for f in phi_c], axis=1)  # noqa: E731
    jac = lambda x: np.stack([np.stack([f(x).real for f in row], axis=1) for row in jac_c], axis=1)  # noqa: E731
    return phi, jac


def map_coefficients(A, b, c, phi: MapFn, jac: MapFn):
    """Pull (A, b, c) back through phi: J^-1 A(phi) J^-T |det J|, J^-1 b(phi) |det J|, c(phi) |det J|."""
    A, b, c = _coerce_matrix(A), _coerce_vector(b), CoefficientFn.coerce(c, 2)

    def frame(x):
        J = np.asarray(jac(x), dtype=float).reshape(len(x), 2, 2)
        det = np.linalg.det(J)
        bad = np.flatnonzero(np.abs(det) < 1e-14)
        if bad.size:
            raise ValueError(f"singular jacobian at point {np.asarray(x)[bad[0]].tolist()}")
        return np.linalg.inv(J), np.abs(det), np.asarray(phi(x), dtype=float)

    def A_tilde(x):
        Ji, dj, y = frame(x)
        Ay = np.empty((len(x), 2, 2), dtype=complex)
        for r in range(2):
            for s in range(2):
                Ay[:, r, s] = A[r][s](y)
        return np.einsum("prk,pks,pqs->prq", Ji, Ay, Ji) * dj[:, None, None]

    def b_tilde(x):
        Ji, dj, y = frame(x)
        by = np.stack([b[0](y), b[1](y)], axis=1)
        return np.einsum("prk,pk->pr", Ji, by) * dj[:, None]

    def c_tilde(x):
        _, dj, y = frame(x)
        return c(y) * dj

    At = tuple(tuple(CoefficientFn(lambda x, r=r, s=s: A_tilde(x)[:, r, s], 2, f"A~[{r}{s}]")
                     for s in range(2)) for r in range(2))
    bt = tuple(CoefficientFn(lambda x, r=r: b_tilde(x)[:, r], 2, f"b~[{r}]") for r in range(2))
    ct = CoefficientFn(c_tilde, 2, "c~")
    return At, bt, ct
