"""Quadrature settings and small helpers shared by the numerical modules."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import QuadratureError


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances for adaptive quadrature and for truncating infinite windows.

    ``tail_tol`` is the largest analytic tail contribution allowed outside a
    truncation window.
    """

    epsrel: float = 1e-9
    epsabs: float = 1e-13
    tail_tol: float = 1e-12
    limit: int = 500
    # an error estimate above this multiple of the requested tolerance is a failure
    fail_factor: float = 1e3
    # fixed-rule integration over kernel sections
    nodes: int = 16
    panel_fraction: float = 0.25


DEFAULT_QUAD = QuadSpec()
TIGHT_QUAD = QuadSpec(epsrel=1e-12, epsabs=1e-14, tail_tol=1e-13)


def quad_real(func, lo: float, hi: float, spec: QuadSpec = DEFAULT_QUAD, points=None):
    """scipy.integrate.quad with non-convergence turned into QuadratureError."""
    if lo == hi:
        return 0.0, 0.0
    kwargs = dict(epsabs=spec.epsabs, epsrel=spec.epsrel, limit=spec.limit)
    if points is not None and np.isfinite(lo) and np.isfinite(hi):
        pts = [p for p in points if lo < p < hi]
        if pts:
            kwargs["points"] = pts
            kwargs["limit"] = max(spec.limit, 50 * len(pts))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(func, lo, hi, **kwargs)
    allowed = spec.fail_factor * max(spec.epsabs, spec.epsrel * abs(val))
    if not np.isfinite(val) or err > allowed:
        raise QuadratureError(f"quadrature on [{lo}, {hi}] did not converge", err)
    return float(val), float(err)


def quad_complex(func, lo: float, hi: float, spec: QuadSpec = DEFAULT_QUAD, points=None):
    re, e1 = quad_real(lambda x: func(x).real, lo, hi, spec, points)
    im, e2 = quad_real(lambda x: func(x).imag, lo, hi, spec, points)
    return complex(re, im), float(np.hypot(e1, e2))


@lru_cache(maxsize=16)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def panel_nodes(edges, n: int = 16):
    """Composite Gauss-Legendre nodes/weights for consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x0, w0 = gauss_legendre(n)
    widths = np.diff(edges)
    nodes = edges[:-1, None] + widths[:, None] * x0[None, :]
    weights = widths[:, None] * w0[None, :]
    return nodes.ravel(), weights.ravel()


def subdivide(edges, max_width: float):
    """Insert points so that no panel is wider than ``max_width``."""
    edges = np.unique(np.asarray(edges, dtype=float))
    out = [edges[:1]]
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(1, int(np.ceil((b - a) / max_width)))
        out.append(np.linspace(a, b, k + 1)[1:])
    return np.concatenate(out)
