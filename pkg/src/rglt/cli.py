"""Command-line front end: ``rglt counts|spectrum|compare|acs --config f.json --out dir``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import domain as dom
from . import exprlang, spectra, symbols
from .domain import Domain, DomainError
from .export import fmt, write_triplets
from .fd_sw import SWProblem, assemble_sw, scale_factor, sw_symbol
from .fe_p1 import P1Problem, assemble_p1, fe_symbol_subdomain
from .functions import Stencil
from .glt_core import build_matrix, derive_symbol, expr_from_config, toeplitz
from .multiindex import GridSize
from .reduction import Projector, restrict

log = logging.getLogger("rglt")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_TREND = 0, 2, 3, 4
METHODS = ("toeplitz", "glt-expr", "shortley-weller", "fe-p1")


class ConfigError(ValueError):
    pass


@dataclass
class Method:
    """A configured matrix sequence with its reduced symbol."""

    name: str
    domain: Domain
    d: int
    matrix: Callable[[GridSize], object]
    symbol: Callable[[], symbols.SeparableSymbol]
    hermitian_part: bool
    meta: Callable[[GridSize], dict]


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"missing config key {key!r}")
    return cfg[key]


def parse_sweep(raw, d: int) -> list[GridSize]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("sweep must be a nonempty list")
    sweep = [GridSize.coerce(v, d) for v in raw]
    if any(g.d != d for g in sweep):
        raise ConfigError("sweep entries must match the dimension")
    mins = [min(g.n) for g in sweep]
    if any(b <= a for a, b in zip(mins, mins[1:])):
        raise ConfigError("sweep must be strictly increasing in min(n)")
    return sweep


def build_method(cfg: dict) -> Method:
    name = cfg.get("method", "toeplitz")
    if name not in METHODS:
        raise ConfigError(f"unknown method {name!r}; expected one of {METHODS}")
    d = int(cfg.get("dimension", cfg.get("domain", {}).get("dimension", 2)))
    domain = Domain.from_config(cfg.get("domain", {"kind": "hypercube"}), d)
    if domain.d != d:
        raise ConfigError(f"domain dimension {domain.d} does not match dimension {d}")
    opts = cfg.get("options", {})
    closure = bool(opts.get("closure", False))
    coeffs = cfg.get("coefficients", {})

    def projector(n):
        return Projector.from_domain(domain, n, closure)

    def mask_meta(n):
        P = projector(n)
        return {"n": list(n.n), "N": n.N, "d_n_omega": P.d, "domain": domain.kind}

    if name == "toeplitz":
        stencil = Stencil.from_json({"d": d, "coeffs": _require(cfg, "stencil")})
        return Method(name, domain, d,
                      lambda n: restrict(projector(n), toeplitz(stencil, n)),
                      lambda: symbols.SeparableSymbol.from_stencil(stencil).restricted(domain),
                      bool(opts.get("hermitian_part", False)), mask_meta)
    if name == "glt-expr":
        expr = expr_from_config(_require(cfg, "expr"), d)
        return Method(name, domain, d,
                      lambda n: restrict(projector(n), build_matrix(expr, n)),
                      lambda: derive_symbol(expr).restricted(domain),
                      bool(opts.get("hermitian_part", False)), mask_meta)
    if name == "shortley-weller":
        prob = SWProblem.create(domain, coeffs.get("a", 1.0), coeffs.get("b", 0.0),
                                coeffs.get("c", 0.0), coeffs.get("f", 0.0))

        def sw_meta(n):
            return {"n": list(n.n), "N": n.N, "domain": domain.kind, "scaling": "n^-2"}

        return Method(name, domain, d,
                      lambda n: assemble_sw(prob, n).matrix * scale_factor(n),
                      lambda: sw_symbol(prob),
                      bool(opts.get("hermitian_part", True)), sw_meta)
    if d != 2:
        raise ConfigError("fe-p1 requires dimension 2")
    prob = P1Problem.create(domain, coeffs.get("A", 1.0), coeffs.get("b", 0.0), coeffs.get("c", 0.0))
    refine = bool(opts.get("refine", False))

    def fe_matrix(n):
        if len(set(n.n)) != 1:
            raise ConfigError("fe-p1 needs isotropic grid sizes")
        return assemble_p1(prob, n.n[0], refine=refine).matrix

    def fe_meta(n):
        return {"n": list(n.n), "N": n.N, "domain": domain.kind}

    return Method(name, domain, d, fe_matrix, lambda: fe_symbol_subdomain(prob),
                  bool(opts.get("hermitian_part", False)), fe_meta)


def _spectrum(A, kind: str, hermitian_part: bool) -> spectra.SpectralSample:
    if kind == "singular":
        return spectra.singvals(A)
    M = spectra.dense(A)
    if hermitian_part:
        M = symbols.hermitian_split(M)[0]
    if kind == "eig-general":
        return spectra.eig_general_sample(M, "real")
    return spectra.eigvals_hermitian(M)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default))


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _label(n: GridSize) -> str:
    return str(n.n[0]) if len(set(n.n)) == 1 else "x".join(map(str, n.n))


# --- commands ------------------------------------------------------------------


def cmd_counts(cfg: dict, out: Path) -> int:
    d = int(cfg.get("dimension", cfg.get("domain", {}).get("dimension", 2)))
    domain = Domain.from_config(cfg.get("domain", {"kind": "hypercube"}), d)
    sweep = parse_sweep(_require(cfg, "sweep"), domain.d)
    closure = bool(cfg.get("options", {}).get("closure", False))
    warnings = []

    def one(n):
        m = dom.mask(domain, n, closure)
        try:
            band = dom.boundary_band_count(domain, n, 2 * float(n.h.max()))
        except DomainError as exc:
            band = None
            warnings.append(str(exc))
        near = int(np.count_nonzero(dom.near_boundary_flags(domain, n, 2)))
        return {"n": _label(n), "N": n.N, "d_omega": m.count, "ratio": m.count / n.N,
                "band_count_2h": band, "near_boundary_k2": near}

    rows = symbols.map_sweep(one, sweep)
    target = out / "counts"
    target.mkdir(parents=True, exist_ok=True)
    lines = ["n,N,d_omega,ratio,band_count_2h,near_boundary_k2"]
    for r in rows:
        band = "" if r["band_count_2h"] is None else str(r["band_count_2h"])
        lines.append(f"{r['n']},{r['N']},{r['d_omega']},{fmt(r['ratio'])},{band},{r['near_boundary_k2']}")
    (target / "counts.csv").write_text("\n".join(lines) + "\n")
    _write_json(target / "summary.json", {"command": "counts", "domain": domain.kind,
                                          "measure": domain.measure, "rows": rows,
                                          "warnings": sorted(set(warnings))})
    return EXIT_OK


def cmd_spectrum(cfg: dict, out: Path) -> int:
    method = build_method(cfg)
    sweep = parse_sweep(_require(cfg, "sweep"), method.d)
    opts = cfg.get("options", {})
    kind = opts.get("spectrum", "eig")
    if kind not in ("eig", "singular", "eig-general"):
        raise ConfigError(f"unknown spectrum kind {kind!r}")
    export = bool(opts.get("export_matrix", False))

    def one(n):
        A = method.matrix(n)
        return A, _spectrum(A, kind, method.hermitian_part)

    results = symbols.map_sweep(one, sweep)
    summary = {"command": "spectrum", "method": method.name, "kind": kind, "levels": []}
    for n, (A, s) in zip(sweep, results):
        target = out / "spectrum" / _label(n)
        target.mkdir(parents=True, exist_ok=True)
        (target / "spectrum.csv").write_text(s.to_csv())
        meta = {**method.meta(n), "kind": s.kind, "matrix_size": len(s)}
        _write_json(target / "spectrum.json", meta)
        if export:
            write_triplets(target / "matrix.txt", A, {"domain": method.domain.kind, "n": list(n.n),
                                                      "d_n_omega": int(A.shape[0])})
        summary["levels"].append(meta)
    _write_json(out / "spectrum" / "summary.json", summary)
    return EXIT_OK


def cmd_compare(cfg: dict, out: Path) -> int:
    method = build_method(cfg)
    sweep = parse_sweep(_require(cfg, "sweep"), method.d)
    opts = cfg.get("options", {})
    kind = opts.get("spectrum", "eig")
    min_samples = int(opts.get("symbol_samples", 0))
    factor = int(opts.get("samples_factor", symbols.SAMPLES_FACTOR))
    sym = method.symbol()
    if kind == "singular":
        rep = symbols.verify_sigma(method.matrix, sym, sweep, True, factor, min_samples)
    else:
        rep = symbols.verify_lambda(method.matrix, sym, sweep, method.hermitian_part, factor, min_samples)
    for n, r in zip(sweep, rep.reports):
        _write_json(out / "compare" / _label(n) / "report.json", r.to_dict())
    summary = {"command": "compare", "method": method.name, "symbol": repr(sym), **rep.to_dict()}
    _write_json(out / "compare" / "summary.json", summary)
    return EXIT_OK if rep.trend_ok else EXIT_TREND


def cmd_acs(cfg_a: dict, cfg_b: dict, out: Path) -> int:
    ma, mb = build_method(cfg_a), build_method(cfg_b)
    if ma.d != mb.d:
        raise ConfigError("the two configs have different dimensions")
    sweep = parse_sweep(_require(cfg_a, "sweep"), ma.d)
    rep = symbols.dacs_estimate(ma.matrix, mb.matrix, sweep)
    diff = ma.symbol() + mb.symbol().scaled(-1.0)
    diff = diff.restricted(ma.domain)
    target = int(cfg_a.get("options", {}).get("symbol_samples", 10000))
    samples = symbols.sample_symbol_at_least(diff, target, "complex")
    pm = symbols.pmea(samples)
    for n, p in zip(sweep, rep["p"]):
        _write_json(out / "acs" / _label(n) / "p.json", {"n": list(n.n), "p": p})
    summary = {"command": "acs", "per_n_p": rep["p"], "n": rep["n"], "dacs_estimate": rep["estimate"],
               "pmea_of_symbol_difference": pm, "symbol_samples": int(samples.size), "note": rep["note"]}
    _write_json(out / "acs" / "summary.json", summary)
    return EXIT_OK


# --- entry point -----------------------------------------------------------------


def _load(path: str) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rglt", description="Reduced GLT matrix sequences and their spectral symbols.")
    p.add_argument("command", choices=("counts", "spectrum", "compare", "acs"))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--config-b", help="second configuration (acs only)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        cfg = _load(args.config)
        if args.command == "acs":
            if not args.config_b:
                raise ConfigError("acs needs --config-b")
            cfg_b = _load(args.config_b)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "counts":
            return cmd_counts(cfg, out)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, out)
        if args.command == "compare":
            return cmd_compare(cfg, out)
        return cmd_acs(cfg, cfg_b, out)
    except (ConfigError, DomainError, KeyError, TypeError, exprlang.ExprSyntaxError,
            exprlang.ExprTypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (spectra.NumericalError, np.linalg.LinAlgError, exprlang.ExprEvalError,
            ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
