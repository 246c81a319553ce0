"""Deterministic integrands f(t, x) and their x-sections.

A :class:`Section` is a real function of x that is smooth on the cells cut out
by a finite list of breakpoints, optionally with exponentially decaying tails
beyond the outer breakpoints. Kernel families produce one section per time t.
Everything downstream (distribution functions, truncation windows, norms)
works on sections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import optimize

from .errors import HypothesisError, UnboundedTailError
from .quad import QuadSpec, TIGHT_QUAD, quad_real
from .trig import TrigPolynomial


@dataclass(frozen=True)
class Tail:
    """Envelope |f(x)| <= amp * exp(-rate * dist) at distance ``dist`` past a break.

    ``rate == 0`` means the section does not decay on that side.
    """

    amp: float
    rate: float
    monotone: bool = True

    @property
    def decays(self) -> bool:
        return self.rate > 0 or self.amp == 0

    def lp_mass(self, dist: float, p: float) -> float:
        """Bound on int_dist^inf |f|^p along the tail."""
        if self.amp == 0:
            return 0.0
        if self.rate <= 0:
            return math.inf
        return self.amp ** p * math.exp(-p * self.rate * dist) / (p * self.rate)

    def extent(self, level: float) -> float:
        """Distance past the break beyond which the envelope is below ``level``."""
        if self.amp <= level:
            return 0.0
        if self.rate <= 0:
            return math.inf
        return math.log(self.amp / level) / self.rate


def _edge_delta(lo: float, hi: float) -> float:
    scale = max(1.0, abs(lo) if np.isfinite(lo) else 0.0, abs(hi) if np.isfinite(hi) else 0.0)
    d = 1e-12 * scale
    if np.isfinite(lo) and np.isfinite(hi):
        d = min(d, 1e-6 * (hi - lo))
    return d


class Section:
    """A piecewise-smooth real function on the line.

    Parameters
    ----------
    func
        Vectorized callable. Must return 0 outside the breaks unless a tail is
        declared on that side.
    breaks
        Sorted finite breakpoints; ``f`` is smooth on each open cell between
        consecutive breaks and on the tail cells.
    left, right
        Tail envelopes beyond the first/last break, or ``None`` when ``f``
        vanishes there.
    monotone
        Whether ``f`` is monotone on every cell. Non-monotone smooth sections
        are split at numerically located extrema before level sets are taken.
    length_scale
        Typical length over which ``f`` varies; sets sampling density when
        searching for extrema.
    """

    def __init__(self, func, breaks, left: Tail | None = None, right: Tail | None = None,
                 monotone: bool = True, smooth: bool = True, length_scale: float = 1.0,
                 label: str = ""):
        breaks = tuple(sorted(float(b) for b in breaks))
        if not breaks:
            raise ValueError("a section needs at least one breakpoint")
        self.func = func
        self.breaks = breaks
        self.left = left
        self.right = right
        self.monotone = monotone
        self.smooth = smooth
        self.length_scale = float(length_scale)
        self.label = label
        self._extrema: list[float] = []

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def __repr__(self):
        return f"Section({self.label or 'anonymous'}, breaks={self.breaks})"

    # -- structure -----------------------------------------------------------

    @property
    def decays(self) -> bool:
        return all(t is None or t.decays for t in (self.left, self.right))

    def cells(self) -> list[tuple[float, float]]:
        b = self.breaks
        out = []
        if self.left is not None:
            out.append((-math.inf, b[0]))
        out.extend(zip(b[:-1], b[1:]))
        if self.right is not None:
            out.append((b[-1], math.inf))
        return out

    def window(self, tol: float, p_list=(1, 2)) -> tuple[float, float]:
        """Finite [lo, hi] outside which every tail L^p mass is below ``tol``."""
        if not self.decays:
            raise UnboundedTailError(f"{self!r} has no declared decay")
        lo, hi = self.breaks[0], self.breaks[-1]
        for tail, sign in ((self.left, -1), (self.right, 1)):
            if tail is None or tail.amp == 0:
                continue
            dist = 0.0
            for p in p_list:
                # tail.amp**p exp(-p r d)/(p r) <= tol
                need = (p * math.log(tail.amp) - math.log(tol * p * tail.rate)) / (p * tail.rate)
                dist = max(dist, need, tail.extent(1.0))
            if sign < 0:
                lo -= dist
            else:
                hi += dist
        return lo, hi

    def tail_mass(self, lo: float, hi: float, p: float) -> float:
        """Analytic bound on int over (-inf, lo) U (hi, inf) of |f|^p."""
        total = 0.0
        if self.left is not None:
            if lo > self.breaks[0]:
                raise ValueError("window must contain all breakpoints")
            total += self.left.lp_mass(self.breaks[0] - lo, p)
        if self.right is not None:
            if hi < self.breaks[-1]:
                raise ValueError("window must contain all breakpoints")
            total += self.right.lp_mass(hi - self.breaks[-1], p)
        return total

    # -- transforms ----------------------------------------------------------

    def scaled(self, c: float) -> "Section":
        c = float(c)
        f = self.func

        def tail(t):
            return None if t is None else Tail(abs(c) * t.amp, t.rate, t.monotone)

        return Section(lambda x: c * f(x), self.breaks, tail(self.left), tail(self.right),
                       self.monotone, self.smooth, self.length_scale,
                       label=f"{c:g}*{self.label}")

    def affine(self, a: float, b: float) -> "Section":
        """x -> f(a x + b)."""
        a, b = float(a), float(b)
        if a == 0:
            raise ValueError("dilation factor must be nonzero")
        f = self.func
        breaks = [(br - b) / a for br in self.breaks]

        def tail(t):
            return None if t is None else Tail(t.amp, t.rate * abs(a), t.monotone)

        left, right = tail(self.left), tail(self.right)
        if a < 0:
            left, right = right, left
        return Section(lambda x: f(a * x + b), breaks, left, right, self.monotone,
                       self.smooth, self.length_scale / abs(a),
                       label=f"{self.label}({a:g}x+{b:g})")

    def shifted(self, s: float) -> "Section":
        """x -> f(x + s)."""
        return self.affine(1.0, s)

    def positive_part(self) -> "Section":
        f = self.func
        sec = Section(lambda x: np.maximum(f(x), 0.0), self.breaks, self.left, self.right,
                      self.monotone, self.smooth, self.length_scale, f"({self.label})+")
        return sec

    def negative_part(self) -> "Section":
        f = self.func
        return Section(lambda x: np.maximum(-f(x), 0.0), self.breaks, self.left, self.right,
                       self.monotone, self.smooth, self.length_scale, f"({self.label})-")

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        return combine([(1.0, self), (-1.0, other)])

    def __add__(self, other):
        return combine([(1.0, self), (1.0, other)])

    # -- norms ---------------------------------------------------------------

    def integrate(self, func=None, spec: QuadSpec = TIGHT_QUAD) -> float:
        """int phi(f(x)) dx over the line (phi = identity by default)."""
        phi = (lambda v: v) if func is None else func
        total = 0.0
        for lo, hi in self.cells():
            if not np.isfinite(lo) or not np.isfinite(hi):
                tail = self.left if not np.isfinite(lo) else self.right
                if not tail.decays:
                    val0 = phi(self(np.array([hi - 1.0 if np.isfinite(hi) else lo + 1.0])))[0]
                    if val0 == 0:
                        continue
                    return math.inf if val0 > 0 else -math.inf
            total += quad_real(lambda x: float(phi(self(np.array([x])))[0]), lo, hi, spec)[0]
        return total

    def lp_norm(self, p: float, spec: QuadSpec = TIGHT_QUAD) -> float:
        """||f||_p by direct quadrature."""
        val = self.integrate(lambda v: np.abs(v) ** p, spec)
        return val ** (1.0 / p)

    # -- monotone decomposition ----------------------------------------------

    @cached_property
    def monotone_cells(self) -> list[tuple[float, float, str]]:
        """Cells on which f is monotone, tagged 'left', 'mid' or 'right'.

        Tail cells keep infinite endpoints; they are monotone by declaration or
        after splitting off a finite head that carries the extrema.
        """
        out = []
        for lo, hi in self.cells():
            if not np.isfinite(lo):
                head = self._tail_head(self.left, hi, -1)
                if head is None:
                    out.append((lo, hi, "left"))
                else:
                    out.append((lo, head, "left"))
                    out.extend((a, b, "mid") for a, b in self._refine(head, hi))
            elif not np.isfinite(hi):
                head = self._tail_head(self.right, lo, 1)
                if head is None:
                    out.append((lo, hi, "right"))
                else:
                    out.extend((a, b, "mid") for a, b in self._refine(lo, head))
                    out.append((head, hi, "right"))
            else:
                out.extend((a, b, "mid") for a, b in self._refine(lo, hi))
        return out

    def _tail_head(self, tail: Tail, edge: float, direction: int):
        if tail.monotone or self.monotone:
            return None
        if not tail.decays:
            raise UnboundedTailError(f"{self!r}: non-monotone tail without decay")
        dist = tail.extent(1e-15 * max(tail.amp, 1e-300))
        return edge + direction * max(dist, self.length_scale)

    def _refine(self, lo: float, hi: float) -> list[tuple[float, float]]:
        if self.monotone:
            return [(lo, hi)]
        if not self.smooth:
            raise HypothesisError(f"{self!r}: no monotonicity declaration; use approximate mode")
        d = _edge_delta(lo, hi)
        n = int(min(200_000, max(1025, 40 * (hi - lo) / self.length_scale)))
        xs = np.linspace(lo + d, hi - d, n)
        ys = self(xs)
        dy = np.diff(ys)
        sgn = np.sign(dy)
        # carry forward signs across flat stretches
        nz = np.nonzero(sgn)[0]
        if nz.size == 0:
            return [(lo, hi)]
        sgn_f = sgn.copy()
        last = sgn[nz[0]]
        for i in range(sgn_f.size):
            if sgn_f[i] == 0:
                sgn_f[i] = last
            else:
                last = sgn_f[i]
        flips = np.nonzero(sgn_f[1:] != sgn_f[:-1])[0] + 1
        cuts = []
        for i in flips:
            a, b = xs[max(i - 1, 0)], xs[min(i + 1, n - 1)]
            sign = sgn_f[i - 1]  # +1: rising into a maximum
            res = optimize.minimize_scalar(
                lambda x: -sign * float(self(np.array([x]))[0]),
                bounds=(a, b), method="bounded", options={"xatol": 1e-12 * max(1.0, abs(a))})
            cuts.append(float(res.x))
        self._extrema.extend(cuts)
        pts = [lo] + sorted(cuts) + [hi]
        return [(a, b) for a, b in zip(pts[:-1], pts[1:]) if b > a]

    def _tail_bracket(self, cell_kind: str, edge: float, alphas: np.ndarray) -> np.ndarray:
        """Finite far end of a tail cell beyond which |f| <= alpha."""
        tail = self.left if cell_kind == "left" else self.right
        if not tail.decays:
            raise UnboundedTailError(f"{self!r} has no declared decay")
        with np.errstate(divide="ignore"):
            dist = np.maximum(np.log(tail.amp / alphas), 0.0) / max(tail.rate, 1e-300)
        dist = dist + self.length_scale
        return edge - dist if cell_kind == "left" else edge + dist

    def critical_levels(self) -> np.ndarray:
        """Values of |f| at monotone-cell ends: the jump/kink levels of d_f."""
        vals = []
        for lo, hi, kind in self.monotone_cells:
            d = _edge_delta(lo, hi)
            if kind != "left":
                vals.append(self(np.array([lo + d]))[0])
            if kind != "right":
                vals.append(self(np.array([hi - d]))[0])
        vals = np.abs(np.array(vals, dtype=float))
        return np.unique(vals[vals > 0])

    def extremum_levels(self) -> np.ndarray:
        """|f| at interior smooth extrema, where d_f has square-root kinks."""
        self.monotone_cells
        if not self._extrema:
            return np.zeros(0)
        return np.unique(np.abs(self(np.array(self._extrema))))

    @cached_property
    def sup_abs(self) -> float:
        if not self.decays:
            # constant tails: sup at break
            vals = [abs(float(self(np.array([b]))[0])) for b in self.breaks]
            return max(vals + [self.left.amp if self.left else 0.0,
                               self.right.amp if self.right else 0.0])
        levels = self.critical_levels()
        return float(levels.max()) if levels.size else 0.0

    def superlevel_measure(self, alphas, part: str = "abs") -> np.ndarray:
        """Lebesgue measure of {f > a} ('pos'), {f < -a} ('neg') or {|f| > a} ('abs')."""
        alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
        if np.any(alphas <= 0):
            raise ValueError("levels must be positive")
        if part == "abs":
            return self.superlevel_measure(alphas, "pos") + self.superlevel_measure(alphas, "neg")
        sign = 1.0 if part == "pos" else -1.0
        total = np.zeros_like(alphas)
        for lo, hi, kind in self.monotone_cells:
            if kind == "left":
                if not self.left.decays:
                    v = sign * self(np.array([hi - 1.0]))[0]
                    total += np.where(alphas < v, math.inf, 0.0)
                    continue
                lo_arr = self._tail_bracket("left", hi, alphas)
                hi_arr = np.full_like(alphas, hi)
            elif kind == "right":
                if not self.right.decays:
                    v = sign * self(np.array([lo + 1.0]))[0]
                    total += np.where(alphas < v, math.inf, 0.0)
                    continue
                lo_arr = np.full_like(alphas, lo)
                hi_arr = self._tail_bracket("right", lo, alphas)
            else:
                lo_arr = np.full_like(alphas, lo)
                hi_arr = np.full_like(alphas, hi)
            total += _monotone_superlevel(lambda x: sign * self.func(x), lo_arr, hi_arr, alphas)
        return total


def _monotone_superlevel(g, lo, hi, alphas, xtol: float = 1e-13):
    """Measure of {g > alpha} inside [lo, hi] for monotone continuous g (vectorized)."""
    d = np.minimum(1e-12 * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi))), 1e-6 * (hi - lo))
    glo = g(lo + d)
    ghi = g(hi - d)
    inc = ghi >= glo
    gmin = np.minimum(glo, ghi)
    gmax = np.maximum(glo, ghi)
    out = np.where(alphas < gmin, hi - lo, 0.0)
    part = (alphas >= gmin) & (alphas < gmax)
    if not np.any(part):
        return out
    a = lo[part].copy()
    b = hi[part].copy()
    al = alphas[part]
    up = inc[part]
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    for _ in range(200):
        m = 0.5 * (a + b)
        gm = g(m)
        # for increasing g the crossing lies right of m when g(m) <= alpha
        right = np.where(up, gm <= al, gm > al)
        a = np.where(right, m, a)
        b = np.where(right, b, m)
        if np.all(b - a <= xtol * scale):
            break
    r = 0.5 * (a + b)
    out[part] = np.where(up, hi[part] - r, r - lo[part])
    return out


def combine(terms) -> Section:
    """Linear combination sum_i c_i f_i of sections."""
    terms = [(float(c), s) for c, s in terms if c != 0.0]
    if not terms:
        return zero_section()
    if len(terms) == 1:
        c, s = terms[0]
        return s if c == 1.0 else s.scaled(c)
    funcs = [(c, s.func) for c, s in terms]
    breaks = sorted(set().union(*(s.breaks for _, s in terms)))

    def merged(side):
        tails = [(c, s, getattr(s, side)) for c, s in terms if getattr(s, side) is not None]
        if not tails:
            return None
        amp = sum(abs(c) * t.amp for c, _, t in tails)
        rate = min(t.rate for _, _, t in tails)
        return Tail(amp, rate, monotone=len(tails) == 1 and tails[0][2].monotone)

    def f(x):
        out = np.zeros(np.shape(x))
        for c, fn in funcs:
            out = out + c * fn(x)
        return out

    scale = min(s.length_scale for _, s in terms)
    label = " + ".join(f"{c:g}*{s.label}" for c, s in terms)
    return Section(f, breaks, merged("left"), merged("right"), monotone=False,
                   smooth=all(s.smooth for _, s in terms), length_scale=scale, label=label)


def zero_section() -> Section:
    return Section(lambda x: np.zeros(np.shape(x)), (0.0,), label="0")


# ---------------------------------------------------------------------------
# kernel families f(t, x)


class Kernel:
    """A family of sections t -> f(t, .)."""

    name = "kernel"

    def section(self, t: float) -> Section:
        raise NotImplementedError

    def default_t_grid(self, n: int = 512) -> np.ndarray:
        """One almost-period window sampled at ``n`` points."""
        return np.array([0.0])

    def __call__(self, t, x):
        return self.section(float(t))(x)


@dataclass(frozen=True)
class IndicatorKernel(Kernel):
    """height * 1_[a, b](x), independent of t."""

    a: float = 0.0
    b: float = 1.0
    height: float = 1.0
    name = "indicator"

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("indicator needs b > a")

    def section(self, t: float = 0.0) -> Section:
        a, b, h = self.a, self.b, self.height
        return Section(lambda x: np.where((x >= a) & (x <= b), h, 0.0), (a, b),
                       length_scale=b - a, label=f"{h:g}*1[{a:g},{b:g}]")


@dataclass(frozen=True)
class ExpKernel(Kernel):
    """height * exp(-rate (x - start)) 1_{x > start}, independent of t."""

    rate: float = 1.0
    start: float = 0.0
    height: float = 1.0
    name = "exp"

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    def section(self, t: float = 0.0) -> Section:
        lam, s, h = self.rate, self.start, self.height

        def f(x):
            z = np.where(x > s, x - s, 0.0)
            return np.where(x > s, h * np.exp(-lam * z), 0.0)

        return Section(f, (s,), right=Tail(abs(h), lam), length_scale=1.0 / lam,
                       label=f"{h:g}*exp(-{lam:g}(x-{s:g}))")


@dataclass(frozen=True)
class ConstantKernel(Kernel):
    """f == value on the whole line; no decay, never integrable."""

    value: float = 1.0
    name = "constant"

    def section(self, t: float = 0.0) -> Section:
        v = self.value
        tail = Tail(abs(v), 0.0)
        return Section(lambda x: np.full(np.shape(x), v, dtype=float), (0.0,), tail, tail,
                       label=f"const {v:g}")


@dataclass(frozen=True)
class OUKernel(Kernel):
    """exp(int_x^t mu(u) du) 1_{x <= t} for an almost periodic mean-reverting mu."""

    mu: TrigPolynomial
    name = "ou"

    def __post_init__(self):
        if not self.mu.c0 < 0:
            raise HypothesisError("OU kernel needs a negative mean of mu (C = -c0 > 0)")

    @property
    def C(self) -> float:
        return -self.mu.c0

    @property
    def C_prime(self) -> float:
        """Offset in f(t, s) <= exp(C (s - t) / 2 + C')."""
        return self.mu.oscillation_bound()

    @property
    def mu_negative(self) -> bool:
        return self.mu.c0 + float(np.abs(self.mu.amplitudes).sum()) < 0

    def section(self, t: float) -> Section:
        mu, t = self.mu, float(t)
        Zt = float(mu.antiderivative(t))

        def f(x):
            x = np.asarray(x, dtype=float)
            inside = x <= t
            arg = np.where(inside, Zt - mu.antiderivative(np.where(inside, x, t)), -np.inf)
            return np.exp(arg)

        mono = self.mu_negative
        tail = Tail(math.exp(self.C_prime), 0.5 * self.C, monotone=mono)
        scale = min(1.0 / self.C, mu.shortest_period() / 4.0)
        return Section(f, (t,), left=tail, monotone=mono, length_scale=scale,
                       label=f"ou(t={t:g})")

    def default_t_grid(self, n: int = 512) -> np.ndarray:
        if self.mu.is_constant:
            return np.array([0.0])
        return np.linspace(0.0, self.mu.beat_period(), n, endpoint=False)

    def moment_profile(self, times, p: float = 2.0) -> np.ndarray:
        """P(t) = int_{-inf}^t exp(p (Z_t - Z_s)) ds at arbitrary times.

        Uses P(t2) = e^{p (Z2 - Z1)} P(t1) + int_{t1}^{t2} e^{p (Z2 - Z_s)} ds
        between consecutive sorted times.
        """
        from .quad import gauss_legendre

        times = np.atleast_1d(np.asarray(times, dtype=float))
        order = np.argsort(times, kind="stable")
        ts = times[order]
        Z = self.mu.antiderivative
        Zt = Z(ts)
        out = np.empty_like(ts)
        out[0] = self.section(ts[0]).integrate(lambda v: np.abs(v) ** p)
        if ts.size > 1:
            gaps = np.diff(ts)
            width = min(1.0 / self.C, self.mu.shortest_period() / 4.0) / 4.0
            n_sub = np.maximum(1, np.ceil(gaps / width)).astype(int)
            gi = np.repeat(np.arange(gaps.size), n_sub)
            first = np.repeat(np.cumsum(n_sub) - n_sub, n_sub)
            k = np.arange(gi.size) - first
            h = gaps[gi] / n_sub[gi]
            a = ts[gi] + k * h
            x0, w0 = gauss_legendre(16)
            nodes = a[:, None] + h[:, None] * x0[None, :]
            vals = np.exp(p * (Zt[gi + 1][:, None] - Z(nodes))) @ w0 * h
            inc = np.bincount(gi, vals, minlength=gaps.size)
            grow = np.exp(p * np.diff(Zt))
            acc = out[0]
            for i in range(gaps.size):
                acc = grow[i] * acc + inc[i]
                out[i + 1] = acc
        res = np.empty_like(out)
        res[order] = out
        return res

    def variance_profile(self, times) -> np.ndarray:
        """v(t) = int_{-inf}^t exp(2 (Z_t - Z_s)) ds."""
        return self.moment_profile(times, 2.0)

    def mean_profile(self, times) -> np.ndarray:
        """int_{-inf}^t exp(Z_t - Z_s) ds."""
        return self.moment_profile(times, 1.0)


class _Modulated(Kernel):
    u: TrigPolynomial
    base: Kernel

    def default_t_grid(self, n: int = 512) -> np.ndarray:
        if self.u.is_constant:
            return np.array([0.0])
        return np.linspace(0.0, self.u.beat_period(), n, endpoint=False)


@dataclass(frozen=True)
class SeparableKernel(_Modulated):
    """u(t) g(x)."""

    u: TrigPolynomial
    base: Kernel
    name = "separable"

    def section(self, t: float) -> Section:
        return self.base.section(0.0).scaled(float(self.u(t)))


@dataclass(frozen=True)
class TranslateKernel(_Modulated):
    """g(u(t) + x)."""

    u: TrigPolynomial
    base: Kernel
    name = "translate"

    def section(self, t: float) -> Section:
        return self.base.section(0.0).affine(1.0, float(self.u(t)))


@dataclass(frozen=True)
class DilateKernel(_Modulated):
    """g(u(t) x); needs inf |u| > 0."""

    u: TrigPolynomial
    base: Kernel
    name = "dilate"

    def __post_init__(self):
        if abs(self.u.c0) - float(np.abs(self.u.amplitudes).sum()) <= 0:
            raise HypothesisError("dilation kernel needs |u| bounded away from zero")

    def section(self, t: float) -> Section:
        return self.base.section(0.0).affine(float(self.u(t)), 0.0)


@dataclass(frozen=True)
class MovingAverageKernel(Kernel):
    """u(t) h(t - s): a moving average of the driver, optionally modulated."""

    h: Kernel
    u: TrigPolynomial | None = None
    name = "moving_average"

    def section(self, t: float) -> Section:
        sec = self.h.section(0.0).affine(-1.0, float(t))
        if self.u is not None:
            sec = sec.scaled(float(self.u(t)))
        return sec

    def default_t_grid(self, n: int = 512) -> np.ndarray:
        if self.u is None or self.u.is_constant:
            return np.array([0.0])
        return np.linspace(0.0, self.u.beat_period(), n, endpoint=False)


def sections_at(kernel: Kernel | list, times) -> list[Section]:
    """Sections of one kernel at several times, or of a kernel list at matching times."""
    times = list(np.atleast_1d(times))
    if isinstance(kernel, (list, tuple)):
        if len(kernel) != len(times):
            raise ValueError("kernel list and time offsets must have equal length")
        return [k.section(float(t)) for k, t in zip(kernel, times)]
    return [kernel.section(float(t)) for t in times]
