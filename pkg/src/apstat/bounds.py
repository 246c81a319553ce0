"""Explicit bounds on exponent differences and Ky-Fan distances, checked against direct values."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ApstatError
from .kernels import Section
from .kernels import combine
from .levy import LevyTriplet, integrate_exponent
from .metrics import dkw_halfwidth, ky_fan_from_gaps
from .quad import DEFAULT_QUAD, QuadSpec
from .rearrange import dist_fn, level_difference_integral, tail_functional


@dataclass
class BoundReport:
    lhs: float
    rhs: float
    terms: dict
    R: float
    hypotheses_met: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def holds(self, rel: float = 1e-8) -> bool:
        return (not self.hypotheses_met) or self.margin >= -rel * (1.0 + abs(self.rhs))

    def row(self, case_id) -> list:
        return [case_id, self.lhs, self.rhs, self.margin, self.R] + list(self.terms.values())


def _as_section(k, t: float = 0.0) -> Section:
    return k if isinstance(k, Section) else k.section(t)


def _tail_sum(d, rs, ws) -> float:
    if rs.size == 0 or d.is_zero:
        return 0.0
    return float(sum(w * abs(r) * tail_functional(d, r) for r, w in zip(rs, ws)))


def exponent_diff_terms(F: Section, G: Section, triplet: LevyTriplet, R: float) -> dict:
    """The five additive terms bounding |psi_F - psi_G| for real sections F = z^T f, G = z^T g."""
    if not R > 1:
        raise ValueError("R must exceed 1")
    nu = triplet.nu
    dFp, dGp = dist_fn(F, part="pos"), dist_fn(G, part="pos")
    dFn, dGn = dist_fn(F, part="neg"), dist_fn(G, part="neg")
    s2 = nu.small_second_moment()
    m1 = nu.mid_first_moment(R)
    t1 = s2 * (level_difference_integral(dFp, dGp, 2) + level_difference_integral(dFn, dGn, 2)) \
        if s2 > 0 else 0.0
    t4 = m1 * (level_difference_integral(dFp, dGp, 1) + level_difference_integral(dFn, dGn, 1)) \
        if m1 > 0 else 0.0
    t2 = 0.5 * triplet.a * abs(F.integrate(np.square) - G.integrate(np.square)) if triplet.a else 0.0
    t3 = abs(triplet.gamma * (F.integrate() - G.integrate())) if triplet.gamma else 0.0
    rs, ws = nu.nodes(R, math.inf)
    t5 = 0.0
    if rs.size:
        t5 = 3.0 * (_tail_sum(dist_fn(F), rs, ws) + _tail_sum(dist_fn(G), rs, ws))
    return {"small_jumps": t1, "gauss": t2, "drift": t3, "mid_jumps": t4, "large_jumps": t5}


def exponent_diff_bound(f, g, triplet: LevyTriplet, z, R: float, t_f=None, t_g=None,
                        spec: QuadSpec = DEFAULT_QUAD) -> BoundReport:
    """Compare |psi_f(z) - psi_g(z)| with the five-term rearrangement bound.

    ``f`` and ``g`` are kernels, sections, or lists of either (vector-valued
    integrands); ``t_f``/``t_g`` are the times at which kernels are sectioned.
    """
    F = _stack(f, t_f, z)
    G = _stack(g, t_g, z)
    met, why = _hypotheses(F, G)
    if not met:
        return BoundReport(math.nan, math.nan, {}, R, False, {"reason": why})
    terms = exponent_diff_terms(F, G, triplet, R)
    pf = integrate_exponent(F, triplet, spec)
    pg = integrate_exponent(G, triplet, spec)
    lhs = abs(pf.value - pg.value)
    return BoundReport(lhs, sum(terms.values()), terms, R,
                       extra={"quad_tail": pf.tail_bound + pg.tail_bound})


def _stack(f, t, z) -> Section:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    items = f if isinstance(f, (list, tuple)) else [f]
    ts = [0.0] * len(items) if t is None else list(np.atleast_1d(t))
    if len(ts) == 1 and len(items) > 1:
        ts = ts * len(items)
    secs = [_as_section(k, tt) for k, tt in zip(items, ts)]
    return _combine(secs, z)


def _combine(secs, z):
    if len(secs) != z.size:
        raise ValueError("z must have one entry per component")
    return combine(list(zip(z, secs)))


def _hypotheses(F: Section, G: Section) -> tuple[bool, str]:
    for s in (F, G):
        if not s.decays:
            return False, f"{s.label}: no decay, not in L1 and L2"
    return True, ""


# ---------------------------------------------------------------------------
# Ky-Fan bounds


def kyfan_bound_finite_var(sigma2: float, l2_dist2: float) -> float:
    """min(1, (sigma^2 ||f - g||_2^2)^(1/3))."""
    if sigma2 < 0 or l2_dist2 < 0:
        raise ValueError("arguments must be non-negative")
    return min(1.0, (sigma2 * l2_dist2) ** (1.0 / 3.0))


def ir_terms(f: Section, g: Section, triplet: LevyTriplet, R: float) -> dict:
    """Terms of I_R(f - g)."""
    if not R > 1:
        raise ValueError("R must exceed 1")
    nu = triplet.nu
    diff = f - g
    l1 = diff.lp_norm(1)
    l22 = diff.lp_norm(2) ** 2
    rs, ws = nu.nodes(R, math.inf)
    tail = 0.0
    if rs.size:
        tail = 4.0 * (_tail_sum(dist_fn(f), rs, ws) + _tail_sum(dist_fn(g), rs, ws))
    return {
        "small_jumps": 0.5 * l22 * nu.small_second_moment(),
        "gauss": 0.5 * triplet.a * l22,
        "drift": abs(triplet.gamma) * l1,
        "mid_jumps": l1 * nu.mid_first_moment(R),
        "large_jumps": tail,
    }


def ir_tilde_terms(f: Section, g: Section, triplet: LevyTriplet, R: float) -> dict:
    """Terms of the finite-first-moment variant of I_R."""
    terms = ir_terms(f, g, triplet, R)
    l1 = (f - g).lp_norm(1)
    m = triplet.nu.large_first_moment()
    if not math.isfinite(m):
        raise ApstatError("the variant needs int_{|r|>1} |r| nu(dr) < inf")
    terms["large_jumps"] = 2.0 * l1 * m
    return terms


def kyfan_rhs(I: float) -> float:
    return min(1.0, (14.0 * I) ** (1.0 / 3.0))


def coupled_gaps(f: Section, g: Section, triplet: LevyTriplet, n_paths: int, seed: int,
                 dt: float = 1e-2, threads: int = 1) -> np.ndarray:
    """|X - Y| for X = int f dL, Y = int g dL driven by the same increments."""
    from .simulate import stochastic_integral

    xy = stochastic_integral([f, g], triplet, dt, n_paths, seed, threads=threads)
    return np.abs(xy[:, 0] - xy[:, 1])


def ky_fan_upper(gaps, delta: float = 0.01) -> tuple[float, float, float]:
    """Estimate, DKW half-width, and the Ky-Fan value with the tail raised by the half-width."""
    gaps = np.asarray(gaps, dtype=float)
    n = gaps.size
    h = dkw_halfwidth(n, delta)
    est = ky_fan_from_gaps(gaps)
    d = np.sort(gaps)[::-1]
    nxt = np.concatenate([d, [0.0]])
    upper = float(np.min(np.maximum(nxt, np.minimum(1.0, np.arange(n + 1) / n + h))))
    return est, h, upper


def kyfan_bound_IR(f, g, triplet: LevyTriplet, R: float, n_paths: int = 10_000, seed: int = 0,
                   dt: float = 1e-2, variant: str = "I_R", t_f: float = 0.0, t_g: float = 0.0,
                   threads: int = 1, simulate: bool = True) -> BoundReport:
    """Compare the coupled-simulation Ky-Fan estimate with min(1, (14 I_R)^(1/3))."""
    fs, gs = _as_section(f, t_f), _as_section(g, t_g)
    met, why = _hypotheses(fs, gs)
    if not met:
        return BoundReport(math.nan, math.nan, {}, R, False, {"reason": why})
    terms = ir_tilde_terms(fs, gs, triplet, R) if variant == "tilde" else ir_terms(fs, gs, triplet, R)
    I = sum(terms.values())
    rhs = kyfan_rhs(I)
    extra = {"I": I}
    lhs = math.nan
    if simulate:
        gaps = coupled_gaps(fs, gs, triplet, n_paths, seed, dt, threads)
        lhs, h, upper = ky_fan_upper(gaps)
        extra.update({"halfwidth": h, "ky_fan_upper": upper, "n_paths": n_paths})
    return BoundReport(lhs, rhs, terms, R, True, extra)
