"""Separable symbols, symbol sampling and finite-n distribution checks.

A symbol is kept as kappa(x, theta) = sum_j a_j(x) f_j(theta) with stencils
f_j, optionally replaced by a generic pointwise evaluator. The verification
helpers compare spectra of matrix sequences against samples of the symbol
and summarize each sweep with a monotone-trend verdict.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .domain import Domain
from .functions import CoefficientFn, Stencil
from .multiindex import GridSize, grid_indices
from . import spectra

log = logging.getLogger(__name__)

TREND_SLACK = 1.1
SAMPLES_FACTOR = 50

GenericEval = Callable[[np.ndarray, np.ndarray], np.ndarray]


def thread_count() -> int:
    raw = os.environ.get("RGLT_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer RGLT_THREADS=%r", raw)
    return os.cpu_count() or 1


def map_sweep(fn, sweep: Sequence) -> list:
    """Apply ``fn`` to every sweep entry, in parallel, keeping sweep order."""
    workers = min(thread_count(), len(sweep)) or 1
    if workers == 1:
        return [fn(n) for n in sweep]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, sweep))


class SeparableSymbol:
    """kappa(x, theta) on domain x [-pi, pi]^d.

    ``domain=None`` means the whole hypercube. Evaluation does not check
    the domain; sampling does.
    """

    def __init__(self, d: int, terms: Sequence[tuple[CoefficientFn, Stencil]] = (),
                 domain: Domain | None = None, generic: GenericEval | None = None):
        self.d = d
        self.terms = [(a, f) for a, f in terms if not a.is_zero and not f.is_zero]
        self.domain = domain
        self.generic = generic
        for a, f in self.terms:
            if a.d != d or f.d != d:
                raise ValueError("symbol term dimension mismatch")
        if domain is not None and domain.d != d:
            raise ValueError("symbol domain dimension mismatch")

    @classmethod
    def zero(cls, d: int) -> "SeparableSymbol":
        return cls(d)

    @classmethod
    def from_stencil(cls, f: Stencil) -> "SeparableSymbol":
        return cls(f.d, [(CoefficientFn.const(1.0, f.d), f)])

    @classmethod
    def from_coefficient(cls, a: CoefficientFn) -> "SeparableSymbol":
        return cls(a.d, [(a, Stencil.identity(a.d))])

    def restricted(self, domain: Domain | None) -> "SeparableSymbol":
        return SeparableSymbol(self.d, self.terms, domain, self.generic)

    @property
    def is_generic(self) -> bool:
        return self.generic is not None

    def __call__(self, x, theta) -> np.ndarray:
        """Pointwise values at matching rows of ``x`` and ``theta``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        if self.d == 1 and x.shape[0] == 1 and x.shape[1] != 1:
            x, theta = x.T, theta.T
        if self.generic is not None:
            return np.asarray(self.generic(x, theta), dtype=complex)
        out = np.zeros(x.shape[0], dtype=complex)
        for a, f in self.terms:
            out += a(x) * f(theta)
        return out

    def grid(self, xs: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        """(P, Q) table of kappa over every pair of P x-points and Q theta-points."""
        P, Q = len(xs), len(thetas)
        if self.generic is not None:
            X = np.repeat(xs, Q, axis=0)
            T = np.tile(thetas, (P, 1))
            return np.asarray(self.generic(X, T), dtype=complex).reshape(P, Q)
        out = np.zeros((P, Q), dtype=complex)
        for a, f in self.terms:
            out += np.outer(a(xs), f(thetas))
        return out

    # algebra used by derive_symbol

    def __add__(self, other: "SeparableSymbol") -> "SeparableSymbol":
        if self.generic is None and other.generic is None:
            return SeparableSymbol(self.d, self.terms + other.terms)
        f, g = self.as_generic(), other.as_generic()
        return SeparableSymbol(self.d, generic=lambda x, t: f(x, t) + g(x, t))

    def scaled(self, alpha: complex) -> "SeparableSymbol":
        if self.generic is None:
            return SeparableSymbol(self.d, [(a * alpha, f) for a, f in self.terms])
        g = self.generic
        return SeparableSymbol(self.d, generic=lambda x, t: alpha * g(x, t))

    def conj(self) -> "SeparableSymbol":
        if self.generic is None:
            return SeparableSymbol(self.d, [(a.conj(), f.conj()) for a, f in self.terms])
        g = self.generic
        return SeparableSymbol(self.d, generic=lambda x, t: np.conj(g(x, t)))

    def times_coefficient(self, c: CoefficientFn) -> "SeparableSymbol":
        if self.generic is None:
            return SeparableSymbol(self.d, [(a * c, f) for a, f in self.terms])
        g = self.generic
        return SeparableSymbol(self.d, generic=lambda x, t: c(x) * g(x, t))

    def multiply(self, other: "SeparableSymbol", max_terms: int = 4096) -> "SeparableSymbol":
        if (self.generic is None and other.generic is None
                and len(self.terms) * len(other.terms) <= max_terms):
            terms = [(a1 * a2, f1 * f2) for a1, f1 in self.terms for a2, f2 in other.terms]
            return SeparableSymbol(self.d, _merge_constant_terms(terms, self.d))
        f, g = self.as_generic(), other.as_generic()
        return SeparableSymbol(self.d, generic=lambda x, t: f(x, t) * g(x, t))

    def as_generic(self) -> GenericEval:
        if self.generic is not None:
            return self.generic
        terms = list(self.terms)

        def ev(x, t):
            out = np.zeros(len(x), dtype=complex)
            for a, f in terms:
                out += a(x) * f(t)
            return out

        return ev

    def __repr__(self) -> str:
        body = "generic" if self.generic else " + ".join(f"{a.label}*{f!r}" for a, f in self.terms) or "0"
        dom = "" if self.domain is None else f" on {self.domain.kind}"
        return f"SeparableSymbol({body}{dom})"


def _merge_constant_terms(terms, d: int):
    merged: Stencil | None = None
    rest = []
    for a, f in terms:
        if a.constant is not None:
            part = f * a.constant
            merged = part if merged is None else merged + part
        else:
            rest.append((a, f))
    if merged is not None and not merged.is_zero:
        rest.insert(0, (CoefficientFn.const(1.0, d), merged))
    return rest


# --- sampling ----------------------------------------------------------------


def _axis_counts(value, d: int) -> tuple[int, ...]:
    counts = (int(value),) * d if np.isscalar(value) else tuple(int(v) for v in value)
    if len(counts) != d or any(c < 1 for c in counts):
        raise ValueError(f"sample counts must be {d} positive integers, got {value!r}")
    return counts


def symbol_x_points(sym: SeparableSymbol, nx) -> np.ndarray:
    """Uniform interior points i/(nx+1) lying in the symbol's open domain."""
    g = GridSize(_axis_counts(nx, sym.d))
    xs = grid_indices(g) / (np.asarray(g.n, dtype=float) + 1.0)
    if sym.domain is not None:
        xs = xs[sym.domain.inside(xs)]
    return xs


def symbol_theta_points(d: int, ntheta) -> np.ndarray:
    """Tensor grid of -pi + 2 pi j / ntheta, j = 0..ntheta-1."""
    counts = _axis_counts(ntheta, d)
    axes = [-np.pi + 2 * np.pi * np.arange(c) / c for c in counts]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def sample_symbol(sym: SeparableSymbol, nx, ntheta, mode: str = "real") -> np.ndarray:
    """Values of the symbol on the tensor grid of admissible x and theta.

    ``mode`` is ``modulus`` or ``real`` (sorted reals) or ``complex``.
    """
    if mode not in ("modulus", "real", "complex"):
        raise ValueError(f"unknown sampling mode {mode!r}")
    xs = symbol_x_points(sym, nx)
    if len(xs) == 0:
        raise ValueError("no sample point of the x-grid lies inside the symbol domain")
    vals = sym.grid(xs, symbol_theta_points(sym.d, ntheta)).ravel()
    if mode == "modulus":
        return np.sort(np.abs(vals))
    if mode == "real":
        return np.sort(vals.real)
    return vals


def sampling_resolution(sym: SeparableSymbol, target: int) -> tuple[int, int]:
    """Smallest isotropic (nx, ntheta) with nx = ntheta giving >= target samples."""
    target = max(int(target), 1)
    m = max(1, int(math.floor(target ** (1.0 / (2 * sym.d)))))
    while True:
        count = len(symbol_x_points(sym, m)) * m**sym.d
        if count >= target:
            return m, m
        m += 1


def sample_symbol_at_least(sym: SeparableSymbol, target: int, mode: str = "real") -> np.ndarray:
    nx, nt = sampling_resolution(sym, target)
    return sample_symbol(sym, nx, nt, mode)


# --- distribution comparison -------------------------------------------------


@dataclass
class DistributionReport:
    wasserstein1: float
    cdf_sup: float
    sample_sizes: tuple[int, int]
    test_functional_gaps: list[tuple[str, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sample_sizes"] = list(self.sample_sizes)
        d["test_functional_gaps"] = [[k, v] for k, v in self.test_functional_gaps]
        return d


def _bump(center: float, width: float):
    def F(x):
        u = (x - center) / width
        out = np.zeros_like(x, dtype=float)
        m = np.abs(u) < 1
        out[m] = np.exp(1.0 - 1.0 / (1.0 - u[m] ** 2))
        return out
    return F


def default_test_functions(lo: float, hi: float) -> list[tuple[str, Callable[[np.ndarray], np.ndarray]]]:
    """Clamped x and x^2 plus three smooth bumps at the quartiles of [lo, hi]."""
    span = hi - lo if hi > lo else 1.0
    fam = [
        ("clamp_x", lambda x: np.clip(x, lo, hi)),
        ("clamp_x2", lambda x: np.clip(x, lo, hi) ** 2),
    ]
    for q in (0.25, 0.5, 0.75):
        fam.append((f"bump_q{int(q * 100)}", _bump(lo + q * span, span / 4)))
    return fam


def _values(s) -> np.ndarray:
    if isinstance(s, spectra.SpectralSample):
        return s.values
    return np.sort(np.asarray(s, dtype=float).ravel())


def wasserstein1(a, b) -> float:
    """Exact W1 between two empirical laws: integral of |F_a - F_b|."""
    a, b = _values(a), _values(b)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    allv = np.concatenate([a, b])
    allv.sort(kind="mergesort")
    Fa = np.searchsorted(a, allv[:-1], side="right") / a.size
    Fb = np.searchsorted(b, allv[:-1], side="right") / b.size
    return float(np.sum(np.abs(Fa - Fb) * np.diff(allv)))


def cdf_sup(a, b) -> float:
    a, b = _values(a), _values(b)
    allv = np.concatenate([a, b])
    Fa = np.searchsorted(a, allv, side="right") / a.size
    Fb = np.searchsorted(b, allv, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))


def compare_distributions(spectrum, symbol_samples, F_family=None) -> DistributionReport:
    a, b = _values(spectrum), _values(symbol_samples)
    if a.size == 0 or b.size == 0:
        raise ValueError("compare_distributions needs two nonempty samples")
    if F_family is None:
        F_family = default_test_functions(min(a[0], b[0]), max(a[-1], b[-1]))
    gaps = [(name, float(abs(np.mean(F(a)) - np.mean(F(b))))) for name, F in F_family]
    return DistributionReport(wasserstein1(a, b), cdf_sup(a, b), (int(a.size), int(b.size)), gaps)


# --- approximating classes and convergence in measure ------------------------


def acs_p(C) -> float:
    """min over i = 1..N+1 of (i-1)/N + sigma_i, with sigma_{N+1} = 0."""
    M = spectra.dense(C)
    N = M.shape[0]
    if N == 0:
        return 0.0
    s = spectra.singvals(M).values[::-1]
    s = np.concatenate([s, np.zeros(N + 1 - s.size)])
    return float(np.min(np.arange(N + 1) / N + s))


def pmea(f_samples) -> float:
    """Empirical inf over L >= 0 of fraction{|f| > L} + L."""
    v = np.sort(np.abs(np.asarray(f_samples).ravel()))
    if v.size == 0:
        raise ValueError("pmea needs at least one sample")
    L = np.concatenate([[0.0], v])
    exceed = (v.size - np.searchsorted(v, L, side="right")) / v.size
    return float(np.min(exceed + L))


def dacs_estimate(seqA, seqB, sweep: Sequence) -> dict:
    def one(n):
        A, B = spectra.dense(seqA(n)), spectra.dense(seqB(n))
        if A.shape != B.shape:
            raise ValueError(f"size mismatch at n={n}: {A.shape} vs {B.shape}")
        return acs_p(A - B)

    values = map_sweep(one, list(sweep))
    return {
        "n": [_n_label(n) for n in sweep],
        "p": values,
        "estimate": values[-1] if values else None,
        "note": "estimate is p at the largest n, a finite-n proxy for the limsup",
    }


# --- sequence verification ---------------------------------------------------


def _n_label(n):
    if isinstance(n, GridSize):
        return list(n.n)
    return n if np.isscalar(n) else list(n)


def trend_ok(values: Sequence[float], slack: float = TREND_SLACK) -> bool:
    """Non-increasing up to a multiplicative slack between consecutive levels."""
    return all(b <= slack * a + 1e-15 for a, b in zip(values, values[1:]))


def strictly_decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


@dataclass
class ConvergenceReport:
    n: list
    sizes: list[int]
    reports: list[DistributionReport]
    extra: dict = field(default_factory=dict)

    @property
    def distances(self) -> list[float]:
        return [r.wasserstein1 for r in self.reports]

    @property
    def trend_ok(self) -> bool:
        return trend_ok(self.distances)

    @property
    def final(self) -> float:
        return self.distances[-1]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "sizes": self.sizes,
            "wasserstein1": self.distances,
            "trend_ok": self.trend_ok,
            "reports": [r.to_dict() for r in self.reports],
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _symbol_for_size(sym: SeparableSymbol, use_reduced_size: bool) -> SeparableSymbol:
    if use_reduced_size or sym.domain is None:
        return sym
    chi = CoefficientFn.indicator(sym.domain)
    g = sym.as_generic()
    return SeparableSymbol(sym.d, generic=lambda x, t: chi(x) * g(x, t))


def verify_sigma(seq, sym: SeparableSymbol, sweep: Sequence, use_reduced_size: bool = True,
                 samples_factor: int = SAMPLES_FACTOR, min_samples: int = 0, F_family=None) -> ConvergenceReport:
    """Singular values of seq(n) against |kappa| over the sweep."""
    target_sym = _symbol_for_size(sym, use_reduced_size)

    def one(n):
        sv = spectra.singvals(seq(n))
        target = max(min_samples, samples_factor * max(len(sv), 1))
        samples = sample_symbol_at_least(target_sym, target, "modulus")
        if len(sv) == 0:
            raise ValueError(f"empty matrix at n={n}")
        return len(sv), compare_distributions(sv, samples, F_family)

    out = map_sweep(one, list(sweep))
    return ConvergenceReport([_n_label(n) for n in sweep], [s for s, _ in out], [r for _, r in out])


def hermitian_split(A):
    """(X, Y) with X = (A + A^H)/2 and Y = (A - A^H)/2."""
    M = spectra.dense(A)
    MH = M.conj().T
    return (M + MH) / 2, (M - MH) / 2


def skew_ratio(A) -> float:
    """||Y||_F^2 / size for the skew-Hermitian part Y of A."""
    M = spectra.dense(A)
    if M.shape[0] == 0:
        return 0.0
    _, Y = hermitian_split(M)
    return float(np.sum(np.abs(Y) ** 2) / M.shape[0])


def verify_lambda(seq, sym: SeparableSymbol, sweep: Sequence, hermitian_part: bool = False,
                  samples_factor: int = SAMPLES_FACTOR, min_samples: int = 0, F_family=None) -> ConvergenceReport:
    """Eigenvalues of seq(n) (or of its Hermitian part) against Re kappa."""

    def one(n):
        A = spectra.dense(seq(n))
        if hermitian_part:
            X, _ = hermitian_split(A)
            ratio = skew_ratio(A)
        else:
            X, ratio = A, 0.0
        ev = spectra.eigvals_hermitian(X)
        if len(ev) == 0:
            raise ValueError(f"empty matrix at n={n}")
        target = max(min_samples, samples_factor * len(ev))
        samples = sample_symbol_at_least(sym, target, "real")
        return len(ev), compare_distributions(ev, samples, F_family), ratio, float(np.mean(ev.values))

    out = map_sweep(one, list(sweep))
    return ConvergenceReport(
        [_n_label(n) for n in sweep], [o[0] for o in out], [o[1] for o in out],
        {"skew_ratio": [o[2] for o in out], "mean_eigenvalue": [o[3] for o in out]},
    )


def zero_distribution_score(seq, sweep: Sequence) -> dict:
    """Per n: fraction of singular values above 1e-6 sigma_max, and mean singular value."""

    def one(n):
        s = spectra.singvals(seq(n)).values
        if s.size == 0:
            return 0.0, 0.0
        eps = 1e-6 * s[-1]
        return float(np.count_nonzero(s > eps) / s.size), float(s.sum() / s.size)

    out = map_sweep(one, list(sweep))
    return {"n": [_n_label(n) for n in sweep],
            "fraction": [o[0] for o in out], "mean": [o[1] for o in out]}


def samples_to_csv(values) -> str:
    return "value\n" + "".join(f"{v:.17g}\n" for v in _values(values))
