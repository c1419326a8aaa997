"""Coefficient functions a(x) on [0,1]^d and trigonometric-polynomial stencils f(theta)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import exprlang

Offset = tuple[int, ...]


def _as_points(x, d: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, d) if d == 1 and pts.shape[0] != 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got shape {np.shape(x)}")
    return pts


class CoefficientFn:
    """A deterministic function a: [0,1]^d -> C evaluated on point arrays.

    ``fn`` receives an (M, d) float array and returns M values. ``label`` is
    a human-readable description used in reports.
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], d: int, label: str = "<fn>",
                 constant: complex | None = None, provenance: str = "builtin"):
        self.fn = fn
        self.d = d
        self.label = label
        self.constant = constant
        self.provenance = provenance

    @classmethod
    def const(cls, value: complex, d: int) -> "CoefficientFn":
        value = complex(value)
        v = value.real if value.imag == 0 else value
        return cls(lambda x: np.full(x.shape[0], v), d, label=repr(v), constant=value)

    @classmethod
    def from_expr(cls, src: str, d: int) -> "CoefficientFn":
        node = exprlang.parse(src, exprlang.SCALAR)
        if exprlang.max_variable(node) > d:
            raise exprlang.ExprEvalError(f"expression {src!r} uses variables beyond x{d}")
        return cls(lambda x: exprlang.evaluate(node, x), d, label=src, provenance="expression")

    @classmethod
    def coerce(cls, value, d: int) -> "CoefficientFn":
        if isinstance(value, CoefficientFn):
            if value.d != d:
                raise ValueError(f"coefficient dimension {value.d} != {d}")
            return value
        if isinstance(value, str):
            return cls.from_expr(value, d)
        if isinstance(value, (int, float, complex, np.number)):
            return cls.const(value, d)
        if callable(value):
            return cls(value, d, label=getattr(value, "__name__", "<fn>"))
        raise TypeError(f"cannot build a coefficient function from {value!r}")

    @classmethod
    def indicator(cls, domain, closure: bool = False) -> "CoefficientFn":
        """chi_Omega on the open set (default) or on its closure."""
        member = domain.contains if closure else domain.inside
        return cls(lambda x: member(x).astype(float), domain.d, label=f"chi[{domain.kind}]")

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x, self.d)
        out = np.asarray(self.fn(pts))
        return np.broadcast_to(out, (pts.shape[0],)).copy()

    @property
    def is_zero(self) -> bool:
        return self.constant is not None and self.constant == 0

    def __mul__(self, other) -> "CoefficientFn":
        if not isinstance(other, CoefficientFn):
            other = CoefficientFn.const(other, self.d)
        if self.constant is not None and other.constant is not None:
            return CoefficientFn.const(self.constant * other.constant, self.d)
        f, g = self.fn, other.fn
        return CoefficientFn(lambda x: f(x) * g(x), self.d, label=f"({self.label})*({other.label})")

    __rmul__ = __mul__

    def __add__(self, other) -> "CoefficientFn":
        if not isinstance(other, CoefficientFn):
            other = CoefficientFn.const(other, self.d)
        if self.constant is not None and other.constant is not None:
            return CoefficientFn.const(self.constant + other.constant, self.d)
        f, g = self.fn, other.fn
        return CoefficientFn(lambda x: f(x) + g(x), self.d, label=f"({self.label})+({other.label})")

    def conj(self) -> "CoefficientFn":
        if self.constant is not None:
            return CoefficientFn.const(self.constant.conjugate(), self.d)
        f = self.fn
        return CoefficientFn(lambda x: np.conj(f(x)), self.d, label=f"conj({self.label})")

    def zero_extended(self, domain) -> "CoefficientFn":
        """Equal to self on the closed domain, zero outside it."""
        f, member = self.fn, domain.contains
        return CoefficientFn(lambda x: np.where(member(x), f(x), 0.0), self.d,
                             label=f"({self.label})|{domain.kind}")

    def __repr__(self) -> str:
        return f"CoefficientFn({self.label!r}, d={self.d})"


def _parse_offset(key) -> Offset:
    if isinstance(key, tuple):
        return tuple(int(k) for k in key)
    if isinstance(key, (int, np.integer)):
        return (int(key),)
    text = str(key).strip().strip("()[]")
    return tuple(int(p) for p in text.split(",") if p.strip())


@dataclass(frozen=True)
class Stencil:
    """Finite Fourier-coefficient map k -> f_k of f(theta) = sum_k f_k exp(i k.theta)."""

    coeffs: Mapping[Offset, complex]
    d: int = field(default=0)

    def __post_init__(self):
        clean: dict[Offset, complex] = {}
        dims = set()
        for k, v in dict(self.coeffs).items():
            k = _parse_offset(k)
            dims.add(len(k))
            v = complex(v)
            if v != 0:
                clean[k] = clean.get(k, 0) + v
        d = self.d or (dims.pop() if len(dims) == 1 else 0)
        if dims - {d} or d < 1:
            raise ValueError(f"inconsistent stencil offsets {sorted(dims | {d})}")
        object.__setattr__(self, "coeffs", {k: v for k, v in clean.items() if v != 0})
        object.__setattr__(self, "d", d)

    @classmethod
    def identity(cls, d: int) -> "Stencil":
        return cls({(0,) * d: 1.0}, d)

    @classmethod
    def laplacian(cls, d: int, axes=None) -> "Stencil":
        """Stencil of sum over axes of 2 - 2cos(theta_i)."""
        axes = range(d) if axes is None else axes
        coeffs: dict[Offset, complex] = {}
        zero = (0,) * d
        for i in axes:
            e = [0] * d
            e[i] = 1
            coeffs[zero] = coeffs.get(zero, 0) + 2
            coeffs[tuple(e)] = -1
            e[i] = -1
            coeffs[tuple(e)] = -1
        return cls(coeffs, d)

    def __call__(self, theta) -> np.ndarray:
        th = _as_points(theta, self.d)
        out = np.zeros(th.shape[0], dtype=complex)
        for k, v in self.coeffs.items():
            out += v * np.exp(1j * (th @ np.asarray(k, dtype=float)))
        return out

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_hermitian(self) -> bool:
        """True when f is real valued, i.e. f_{-k} = conj(f_k)."""
        for k, v in self.coeffs.items():
            mk = tuple(-c for c in k)
            if not np.isclose(self.coeffs.get(mk, 0), np.conj(v), rtol=0, atol=1e-14):
                return False
        return True

    @property
    def is_real(self) -> bool:
        return all(v.imag == 0 for v in self.coeffs.values())

    def __mul__(self, other) -> "Stencil":
        if isinstance(other, Stencil):
            if other.d != self.d:
                raise ValueError("stencil dimension mismatch")
            out: dict[Offset, complex] = {}
            for k1, v1 in self.coeffs.items():
                for k2, v2 in other.coeffs.items():
                    k = tuple(a + b for a, b in zip(k1, k2))
                    out[k] = out.get(k, 0) + v1 * v2
            return Stencil(out, self.d)
        return Stencil({k: v * complex(other) for k, v in self.coeffs.items()}, self.d)

    __rmul__ = __mul__

    def __add__(self, other: "Stencil") -> "Stencil":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return Stencil(out, self.d)

    def conj(self) -> "Stencil":
        """Stencil of conj(f(theta))."""
        return Stencil({tuple(-c for c in k): np.conj(v) for k, v in self.coeffs.items()}, self.d)

    def to_json(self) -> str:
        payload = {",".join(map(str, k)): [v.real, v.imag] for k, v in sorted(self.coeffs.items())}
        return json.dumps({"d": self.d, "coeffs": payload})

    @classmethod
    def from_json(cls, text_or_obj) -> "Stencil":
        obj = json.loads(text_or_obj) if isinstance(text_or_obj, str) else text_or_obj
        raw = obj.get("coeffs", obj) if isinstance(obj, dict) else obj
        d = obj.get("d", 0) if isinstance(obj, dict) and "coeffs" in obj else 0
        coeffs = {}
        for k, v in raw.items():
            if isinstance(v, (list, tuple)):
                v = complex(v[0], v[1] if len(v) > 1 else 0.0)
            coeffs[_parse_offset(k)] = v
        return cls(coeffs, d)

    def __repr__(self) -> str:
        return f"Stencil({self.coeffs!r})"
