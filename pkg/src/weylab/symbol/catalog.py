"""Catalog of ready-made dispersive symbols.

Every entry returns a SympySymbol with exact derivative closures, a populated
principal/lower-order split, and (where the structure allows) a separable
f(x) g(xi) term list usable by the fast application and evolution paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp

from .core import SeparableTerm, SympySymbol, phase_symbols, zero_symbol

__all__ = ["catalog", "catalog_names", "CatalogEntry", "CATALOG"]


def _lambdify_spatial(expr, xs):
    fn = sp.lambdify(xs, expr, modules="numpy")

    def call(X):
        out = fn(*[X[..., i] for i in range(len(xs))])
        out = np.asarray(out, dtype=complex)
        return np.broadcast_to(out, np.broadcast_shapes(X[..., 0].shape, out.shape))

    return call


def _lambdify_frequency(expr, xis):
    fn = sp.lambdify(xis, expr, modules="numpy")

    def call(XI):
        out = fn(*[XI[..., i] for i in range(len(xis))])
        out = np.asarray(out, dtype=complex)
        return np.broadcast_to(out, np.broadcast_shapes(XI[..., 0].shape, out.shape))

    return call


def _multiplier_terms(g_expr, xis):
    return [SeparableTerm(g=_lambdify_frequency(g_expr, xis), f_const=1.0)]


def _airy() -> SympySymbol:
    xs, xis = phase_symbols(1)
    expr = xis[0] ** 3
    sym = SympySymbol(
        expr,
        1,
        3.0,
        real_valued=True,
        separable_terms=_multiplier_terms(expr, xis),
        label="airy",
    )
    sym.parts = (sym, zero_symbol(1, 2.0))
    return sym


def _zk() -> SympySymbol:
    xs, xis = phase_symbols(2)
    expr = xis[0] * (xis[0] ** 2 + xis[1] ** 2)
    sym = SympySymbol(
        expr,
        2,
        3.0,
        real_valued=True,
        separable_terms=_multiplier_terms(expr, xis),
        label="zk",
    )
    sym.parts = (sym, zero_symbol(2, 2.0))
    return sym


def _kdv_sum(n: int = 2) -> SympySymbol:
    n = int(n)
    if n < 1:
        raise ValueError("kdv_sum requires n >= 1")
    xs, xis = phase_symbols(n)
    expr = sum(xis) * sum(v**2 for v in xis)
    sym = SympySymbol(
        expr,
        n,
        3.0,
        real_valued=True,
        separable_terms=_multiplier_terms(expr, xis),
        label=f"kdv_sum(n={n})",
    )
    sym.parts = (sym, zero_symbol(n, 2.0))
    return sym


def _gaussian_kdv(eps: float = 0.05) -> SympySymbol:
    eps = float(eps)
    if eps < 0:
        raise ValueError("gaussian_kdv amplitude eps must be nonnegative")
    xs, xis = phase_symbols(1)
    bump = sp.exp(-xs[0] ** 2)
    expr = (1 + eps * bump) * xis[0] ** 3
    terms = [
        SeparableTerm(g=_lambdify_frequency(xis[0] ** 3, xis), f_const=1.0),
        SeparableTerm(
            g=_lambdify_frequency(xis[0] ** 3, xis),
            f=_lambdify_spatial(eps * bump, xs),
        ),
    ]
    sym = SympySymbol(
        expr,
        1,
        3.0,
        real_valued=True,
        separable_terms=terms,
        label=f"gaussian_kdv(eps={eps})",
    )
    sym.parts = (sym, zero_symbol(1, 2.0))
    return sym


def _ultrahyperbolic(matrix=None, eps: float = 0.0) -> SympySymbol:
    if matrix is None:
        matrix = [[1.0, 0.0], [0.0, -1.0]]
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("ultrahyperbolic coefficient matrix must be square")
    if not np.allclose(M, M.T, atol=1e-12):
        raise ValueError("ultrahyperbolic coefficient matrix must be symmetric")
    eigs = np.linalg.eigvalsh(M)
    if np.min(np.abs(eigs)) < 1e-12:
        raise ValueError("ultrahyperbolic coefficient matrix must be non-degenerate")
    eps = float(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    n = M.shape[0]
    xs, xis = phase_symbols(n)
    quad = sum(sp.nsimplify(M[i, j]) * xis[i] * xis[j] for i in range(n) for j in range(n))
    bump = sp.exp(-sum(v**2 for v in xs))
    expr = (1 + eps * bump) * quad
    terms = [SeparableTerm(g=_lambdify_frequency(quad, xis), f_const=1.0)]
    if eps > 0:
        terms.append(
            SeparableTerm(
                g=_lambdify_frequency(quad, xis),
                f=_lambdify_spatial(eps * bump, xs),
            )
        )
    sym = SympySymbol(
        expr,
        n,
        2.0,
        real_valued=True,
        zero_nyquist=False,
        separable_terms=terms,
        label=f"ultrahyperbolic(eps={eps})",
    )
    sym.parts = (sym, zero_symbol(n, 1.0))
    return sym


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    build: Callable[..., SympySymbol]
    summary: str
    params: dict


CATALOG: dict[str, CatalogEntry] = {
    "airy": CatalogEntry(
        "airy",
        _airy,
        "xi^3 on R; constant-coefficient linear KdV generator (n=1, order 3)",
        {},
    ),
    "zk": CatalogEntry(
        "zk",
        _zk,
        "xi1 (xi1^2 + xi2^2); Zakharov-Kuznetsov generator (n=2, order 3)",
        {},
    ),
    "kdv_sum": CatalogEntry(
        "kdv_sum",
        _kdv_sum,
        "(sum_j xi_j) |xi|^2; dimension-robust KdV-type generator (order 3)",
        {"n": "ambient dimension (default 2)"},
    ),
    "gaussian_kdv": CatalogEntry(
        "gaussian_kdv",
        _gaussian_kdv,
        "(1 + eps exp(-x^2)) xi^3; variable-coefficient KdV generator (n=1, order 3)",
        {"eps": "bump amplitude (default 0.05)"},
    ),
    "ultrahyperbolic": CatalogEntry(
        "ultrahyperbolic",
        _ultrahyperbolic,
        "(1 + eps exp(-|x|^2)) xi.M xi with symmetric non-degenerate M (order 2)",
        {
            "matrix": "symmetric non-degenerate coefficient matrix (default diag(1,-1))",
            "eps": "bump amplitude (default 0)",
        },
    ),
}


def catalog_names() -> list[str]:
    return sorted(CATALOG)


def catalog(name: str, **params) -> SympySymbol:
    """Build a catalog symbol by name; raises KeyError on unknown names."""
    if name not in CATALOG:
        raise KeyError(f"unknown catalog symbol {name!r}; known: {catalog_names()}")
    return CATALOG[name].build(**params)
