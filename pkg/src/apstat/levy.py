"""Characteristic triplets, Levy-Khintchine and Rajput-Rosinski exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisError, UnboundedTailError
from .kernels import Kernel, Section, combine, sections_at
from .quad import DEFAULT_QUAD, QuadSpec, panel_nodes, quad_real, subdivide


@dataclass(frozen=True)
class LevyDensity:
    """Piecewise-linear density on +-x for x in a positive log-spaced grid.

    The density is zero for |x| < x[0] and |x| > x[-1]. Jumps removed below
    x[0] are accounted for through ``small_jump_var`` (their int x^2 nu) and
    jumps removed above x[-1] through ``large_jump_mass``; both are reported,
    never silently used.
    """

    x: tuple
    pos: tuple
    neg: tuple
    small_jump_var: float = 0.0
    large_jump_mass: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        pos = np.asarray(self.pos, dtype=float)
        neg = np.asarray(self.neg, dtype=float)
        if x.ndim != 1 or x.size < 2 or x[0] <= 0 or np.any(np.diff(x) <= 0):
            raise ValueError("density grid must be positive and strictly increasing")
        if pos.shape != x.shape or neg.shape != x.shape:
            raise ValueError("density values must match the grid")
        if np.any(pos < 0) or np.any(neg < 0):
            raise ValueError("density values must be non-negative")
        for name, arr in (("x", x), ("pos", pos), ("neg", neg)):
            object.__setattr__(self, name, tuple(arr.tolist()))

    @classmethod
    def from_function(cls, func, eps: float, cutoff: float, n: int = 256, **kw) -> "LevyDensity":
        """Tabulate ``func`` (defined on the real line) on eps <= |x| <= cutoff."""
        x = np.geomspace(eps, cutoff, n)
        return cls(tuple(x), tuple(np.asarray(func(x), float)), tuple(np.asarray(func(-x), float)), **kw)

    @property
    def grid(self) -> np.ndarray:
        return np.asarray(self.x)

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        x = self.grid
        a = np.abs(s)
        inside = (a >= x[0]) & (a <= x[-1])
        vp = np.interp(a, x, np.asarray(self.pos))
        vn = np.interp(a, x, np.asarray(self.neg))
        return np.where(inside, np.where(s > 0, vp, vn), 0.0)

    def nodes(self, lo: float = 0.0, hi: float = math.inf, max_width: float | None = None,
              n: int = 16):
        """Quadrature nodes/weights for int phi(s) nu(ds) over lo < |s| <= hi."""
        x = self.grid
        a, b = max(lo, x[0]), min(hi, x[-1])
        if not b > a:
            return np.zeros(0), np.zeros(0)
        edges = np.concatenate([[a], x[(x > a) & (x < b)], [b]])
        if max_width is not None:
            edges = subdivide(edges, max_width)
        u, w = panel_nodes(edges, n)
        s = np.concatenate([u, -u])
        wt = np.concatenate([w * self(u), w * self(-u)])
        keep = wt > 0
        return s[keep], wt[keep]

    def integrate(self, phi, lo: float = 0.0, hi: float = math.inf, spec: QuadSpec = DEFAULT_QUAD):
        """Adaptive quadrature of int phi(s) nu(ds) over lo < |s| <= hi."""
        x = self.grid
        a, b = max(lo, x[0]), min(hi, x[-1])
        if not b > a:
            return 0.0
        pts = list(x[(x > a) & (x < b)])
        total = 0.0
        for sign in (1.0, -1.0):
            total += quad_real(lambda r: phi(sign * r) * float(self(sign * r)), a, b, spec,
                               points=pts)[0]
        return total

    def mass(self) -> float:
        s, w = self.nodes()
        return float(w.sum())


@dataclass(frozen=True)
class JumpMeasure:
    """Finitely many atoms plus an optional tabulated density."""

    atoms: tuple = ()
    density: LevyDensity | None = None

    def __post_init__(self):
        atoms = tuple((float(x), float(m)) for x, m in self.atoms)
        for x, m in atoms:
            if x == 0.0:
                raise ValueError("a Levy measure has no atom at zero")
            if not m > 0:
                raise ValueError("atom masses must be positive")
        locs = [x for x, _ in atoms]
        if len(set(locs)) != len(locs):
            raise ValueError("atom locations must be distinct")
        object.__setattr__(self, "atoms", atoms)
        if not math.isfinite(self.integrate(lambda s: np.minimum(1.0, s * s))):
            raise HypothesisError("int min(1, x^2) nu(dx) is not finite")

    @classmethod
    def empty(cls) -> "JumpMeasure":
        return cls(())

    @property
    def locations(self) -> np.ndarray:
        return np.array([x for x, _ in self.atoms], dtype=float)

    @property
    def masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms], dtype=float)

    @property
    def is_zero(self) -> bool:
        return not self.atoms and (self.density is None or self.density.mass() == 0)

    def nodes(self, lo: float = 0.0, hi: float = math.inf, max_width: float | None = None):
        """Points and weights representing nu restricted to lo < |s| <= hi."""
        x, m = self.locations, self.masses
        sel = (np.abs(x) > lo) & (np.abs(x) <= hi)
        pts, wts = [x[sel]], [m[sel]]
        if self.density is not None:
            s, w = self.density.nodes(lo, hi, max_width)
            pts.append(s)
            wts.append(w)
        return np.concatenate(pts), np.concatenate(wts)

    def integrate(self, phi, lo: float = 0.0, hi: float = math.inf) -> float:
        """int phi(s) nu(ds) over lo < |s| <= hi; atoms exact, density adaptive."""
        x, m = self.locations, self.masses
        sel = (np.abs(x) > lo) & (np.abs(x) <= hi)
        total = float(np.sum(m[sel] * phi(x[sel]))) if np.any(sel) else 0.0
        if self.density is not None:
            total += self.density.integrate(lambda r: float(phi(np.array([r]))[0]), lo, hi)
        return total

    def total_mass(self) -> float:
        return self.integrate(lambda s: np.ones_like(s))

    def small_second_moment(self) -> float:
        """int_{|r|<=1} r^2 nu(dr)."""
        return self.integrate(lambda s: s * s, 0.0, 1.0)

    def mid_first_moment(self, R: float) -> float:
        """int_{1<|r|<=R} |r| nu(dr)."""
        return self.integrate(np.abs, 1.0, R)

    def second_moment(self) -> float:
        return self.integrate(lambda s: s * s)

    def large_first_moment(self) -> float:
        """int_{|r|>1} |r| nu(dr)."""
        return self.integrate(np.abs, 1.0)

    def log_moment(self) -> float:
        """int_{|r|>1} log|r| nu(dr)."""
        return self.integrate(lambda s: np.log(np.abs(s)), 1.0)


@dataclass(frozen=True)
class LevyTriplet:
    a: float = 0.0
    gamma: float = 0.0
    nu: JumpMeasure = field(default_factory=JumpMeasure.empty)

    def __post_init__(self):
        if not self.a >= 0:
            raise ValueError("Gaussian variance must be non-negative")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "gamma", float(self.gamma))

    @classmethod
    def gaussian(cls, a: float = 1.0, gamma: float = 0.0) -> "LevyTriplet":
        return cls(a, gamma)

    @property
    def variance(self) -> float:
        """a + int x^2 nu, the variance of L([0, 1])."""
        return self.a + self.nu.second_moment()

    @property
    def mean(self) -> float:
        """E L([0, 1]) = gamma + int_{|x|>1} x nu(dx)."""
        return self.gamma + self.nu.integrate(lambda s: s, 1.0)

    def growth_constants(self) -> tuple[float, float]:
        """(K1, K2) with Psi(w) <= K1 |w| + K2 w^2 and |psi(w)| <= the same."""
        k1 = abs(self.gamma) + 2.0 * self.nu.large_first_moment()
        k2 = self.a + 2.0 * self.nu.small_second_moment()
        return k1, k2


# ---------------------------------------------------------------------------
# exponents


def eval_exponent(triplet: LevyTriplet, z: float, spec: QuadSpec = DEFAULT_QUAD) -> complex:
    """psi(z) = i gamma z - a z^2 / 2 + int (e^{ixz} - 1 - ixz 1_{|x|<=1}) nu(dx)."""
    z = float(z)
    if z == 0.0:
        return 0j
    val = complex(-0.5 * triplet.a * z * z, triplet.gamma * z)
    nu = triplet.nu
    for x, m in nu.atoms:
        comp = x * z if abs(x) <= 1 else 0.0
        val += m * complex(math.cos(x * z) - 1.0, math.sin(x * z) - comp)
    if nu.density is not None:
        dens = nu.density
        re = dens.integrate(lambda s: math.cos(s * z) - 1.0, spec=spec)
        im_in = dens.integrate(lambda s: math.sin(s * z) - s * z, 0.0, 1.0, spec)
        im_out = dens.integrate(lambda s: math.sin(s * z), 1.0, math.inf, spec)
        val += complex(re, im_in + im_out)
    return val


def exponent_vec(triplet: LevyTriplet, w) -> np.ndarray:
    """Vectorized psi on an array; the density part uses fixed Gauss-Legendre panels."""
    w = np.asarray(w, dtype=float)
    out = -0.5 * triplet.a * w * w + 1j * triplet.gamma * w
    nu = triplet.nu
    if nu.atoms:
        x, m = nu.locations, nu.masses
        comp = np.where(np.abs(x) <= 1, x, 0.0)
        xw = np.multiply.outer(w, x)
        out = out + (np.cos(xw) - 1.0 + 1j * (np.sin(xw) - np.multiply.outer(w, comp))) @ m
    if nu.density is not None:
        wmax = float(np.max(np.abs(w), initial=0.0))
        s, ws = nu.density.nodes(max_width=1.0 / max(wmax, 1.0) if wmax > 0 else None)
        if s.size:
            comp = np.where(np.abs(s) <= 1, s, 0.0)
            for i in range(0, w.size, 2048):
                blk = w.ravel()[i:i + 2048]
                xw = np.multiply.outer(blk, s)
                val = (np.cos(xw) - 1.0 + 1j * (np.sin(xw) - np.multiply.outer(blk, comp))) @ ws
                out.ravel()[i:i + 2048] += val
    return out


def rajput_rosinski_terms(triplet: LevyTriplet, z: float) -> dict:
    """The three pieces U(z), a z^2 and V(z) of the Rajput-Rosinski exponent."""
    z = float(z)
    nu = triplet.nu
    if z == 0.0:
        return {"U": 0.0, "gauss": 0.0, "V": 0.0}

    def u_int(s):
        return s * z * ((np.abs(s * z) <= 1).astype(float) - (np.abs(s) <= 1).astype(float))

    U = triplet.gamma * z
    V = 0.0
    x, m = nu.locations, nu.masses
    if x.size:
        U += float(np.sum(m * u_int(x)))
        V += float(np.sum(m * np.minimum(1.0, (x * z) ** 2)))
    if nu.density is not None:
        dens = nu.density
        cut = 1.0 / abs(z)
        # split at |s| = 1 and |s| = 1/|z| where the integrands have kinks
        edges = sorted({0.0, 1.0, cut, math.inf})
        for lo, hi in zip(edges[:-1], edges[1:]):
            U += dens.integrate(lambda s: float(u_int(np.array([s]))[0]), lo, hi)
            V += dens.integrate(lambda s: min(1.0, (s * z) ** 2), lo, hi)
    return {"U": U, "gauss": triplet.a * z * z, "V": V}


def rajput_rosinski(triplet: LevyTriplet, z: float) -> float:
    t = rajput_rosinski_terms(triplet, z)
    return abs(t["U"]) + t["gauss"] + t["V"]


def rajput_rosinski_vec(triplet: LevyTriplet, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    nu = triplet.nu
    if nu.density is not None:
        return np.vectorize(lambda v: rajput_rosinski(triplet, v))(w)
    x, m = nu.locations, nu.masses
    U = triplet.gamma * w
    V = np.zeros_like(w)
    if x.size:
        xw = np.multiply.outer(w, x)
        ind = (np.abs(xw) <= 1).astype(float) - (np.abs(x) <= 1).astype(float)
        U = U + (xw * ind) @ m
        V = np.minimum(1.0, xw * xw) @ m
    return np.abs(U) + triplet.a * w * w + V


# ---------------------------------------------------------------------------
# integrals over kernel sections


@dataclass(frozen=True)
class IntegralResult:
    value: complex | float
    tail_bound: float
    window: tuple[float, float]
    n_nodes: int


def _section_nodes(sec: Section, window, spec: QuadSpec):
    """Gauss-Legendre nodes over the window, panels split at the section's breaks."""
    lo, hi = window
    edges = [lo, hi] + [b for b in sec.breaks if lo < b < hi]
    edges = subdivide(sorted(edges), spec.panel_fraction * sec.length_scale)
    return panel_nodes(edges, spec.nodes)


def stack_section(kernels, t_offsets, z) -> Section:
    """z^T f(s) with component i the section f_i(t_i, .)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    secs = sections_at(kernels, t_offsets) if isinstance(kernels, (list, tuple)) else \
        sections_at(kernels, t_offsets)
    if len(secs) != z.size:
        raise ValueError("z must have one entry per kernel component")
    return combine(list(zip(z, secs)))


def _window(sec: Section, k1: float, k2: float, tol: float):
    if not sec.decays:
        raise UnboundedTailError(f"{sec!r}: unbounded tail, no truncation window")
    scale = max(k1 + k2, 1e-300)
    return sec.window(tol / (2.0 * scale))


def integrate_exponent(sec: Section, triplet: LevyTriplet, spec: QuadSpec = DEFAULT_QUAD
                       ) -> IntegralResult:
    """int psi(g(s)) ds for a single section g, with an analytic tail bound."""
    k1, k2 = triplet.growth_constants()
    lo, hi = _window(sec, k1, k2, spec.tail_tol)
    tail = k1 * sec.tail_mass(lo, hi, 1) + k2 * sec.tail_mass(lo, hi, 2)
    xs, ws = _section_nodes(sec, (lo, hi), spec)
    vals = exponent_vec(triplet, sec(xs))
    return IntegralResult(complex(np.sum(ws * vals)), tail, (lo, hi), xs.size)


def eval_integral_exponent(kernels, t_offsets, triplet: LevyTriplet, z,
                           spec: QuadSpec = DEFAULT_QUAD) -> IntegralResult:
    """int psi_L(z^T f(s)) ds where f(s) stacks the kernel sections at the offsets."""
    return integrate_exponent(stack_section(kernels, t_offsets, z), triplet, spec)


@dataclass(frozen=True)
class DomainResult:
    status: str  # admissible | inadmissible | indeterminate
    integral: float
    tail_bound: float

    @property
    def admissible(self) -> bool:
        return self.status == "admissible"


def in_domain(kernel: Kernel | Section, triplet: LevyTriplet, spec: QuadSpec = DEFAULT_QUAD,
              t: float = 0.0) -> DomainResult:
    """int Psi(f(s)) ds over a truncation window plus its analytic tail bound."""
    sec = kernel if isinstance(kernel, Section) else kernel.section(t)
    if not sec.decays:
        probe = float(np.max(np.abs(sec(np.array([sec.breaks[0] - 1e3, sec.breaks[-1] + 1e3])))))
        if probe == 0.0:
            sec = Section(sec.func, sec.breaks, label=sec.label)
        else:
            return DomainResult("indeterminate", math.inf, math.inf)
    k1, k2 = triplet.growth_constants()
    lo, hi = _window(sec, k1, k2, spec.tail_tol)
    tail = k1 * sec.tail_mass(lo, hi, 1) + k2 * sec.tail_mass(lo, hi, 2)
    xs, ws = _section_nodes(sec, (lo, hi), spec)
    val = float(np.sum(ws * rajput_rosinski_vec(triplet, sec(xs))))
    status = "admissible" if math.isfinite(val) and math.isfinite(tail) else "inadmissible"
    return DomainResult(status, val, tail)


def default_t_grid(kernel: Kernel, n: int = 512) -> np.ndarray:
    return kernel.default_t_grid(n)


def b_space_value(kernel: Kernel, triplet: LevyTriplet, sup_over_t: bool = True,
                  t_grid=None, t: float = 0.0) -> float:
    """int_{|r|>1} |r| [sup_t] int_0^{1/|r|} d_{f(t,.)}(a) da nu(dr)."""
    from .rearrange import dist_fn, tail_functional

    rs, ws = triplet.nu.nodes(1.0, math.inf)
    if rs.size == 0:
        return 0.0
    times = (kernel.default_t_grid() if t_grid is None else np.atleast_1d(t_grid)) \
        if sup_over_t else np.array([t])
    best = np.zeros(rs.size)
    for tt in times:
        d = dist_fn(kernel.section(float(tt)))
        vals = np.array([tail_functional(d, r) for r in rs])
        best = np.maximum(best, vals)
    return float(np.sum(ws * np.abs(rs) * best))


# ---------------------------------------------------------------------------
# multivariate triplets and the cubed-measure transform


@dataclass(frozen=True)
class RepresentationFn:
    """c(x) = 1 on |x| <= r1, 0 on |x| >= r2, linear in |x| between."""

    r1: float = 1.0
    r2: float = 2.0

    def __post_init__(self):
        if not self.r2 > self.r1 > 0:
            raise ValueError("need r2 > r1 > 0")

    def __call__(self, x) -> np.ndarray:
        """Evaluate at a point of R^d (last axis) or at a scalar."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1) if x.ndim >= 1 else np.abs(x)
        return np.clip((self.r2 - r) / (self.r2 - self.r1), 0.0, 1.0)


@dataclass(frozen=True)
class MultiTriplet:
    A: np.ndarray
    gamma_c: np.ndarray
    atoms: tuple = ()  # (location vector, mass)
    c: RepresentationFn = field(default_factory=RepresentationFn)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        d = A.shape[0]
        if A.shape != (d, d):
            raise ValueError("A must be square")
        if not np.allclose(A, A.T, atol=1e-12):
            raise ValueError("A must be symmetric")
        if d and np.linalg.eigvalsh(A).min() < -1e-10:
            raise ValueError("A must be positive semi-definite")
        g = np.atleast_1d(np.asarray(self.gamma_c, dtype=float))
        if g.shape != (d,):
            raise ValueError("gamma_c has the wrong dimension")
        atoms = []
        for x, m in self.atoms:
            x = np.atleast_1d(np.asarray(x, dtype=float))
            if x.shape != (d,) or not np.any(x != 0):
                raise ValueError("atoms must be nonzero vectors of dimension d")
            if not m > 0:
                raise ValueError("atom masses must be positive")
            atoms.append((tuple(x.tolist()), float(m)))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "gamma_c", g)
        object.__setattr__(self, "atoms", tuple(atoms))

    @property
    def dim(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class TripletTransform:
    gamma_c: np.ndarray
    gauss_plus: np.ndarray
    cubed_points: np.ndarray  # shape (k, d)
    cubed_masses: np.ndarray


def triplet_transform(mt: MultiTriplet) -> TripletTransform:
    """(gamma_c, A + sum x x^T c(x)^2 m, atoms reweighted by min(|x|^3, 1))."""
    d = mt.dim
    gp = mt.A.copy()
    pts = np.zeros((len(mt.atoms), d))
    masses = np.zeros(len(mt.atoms))
    for i, (x, m) in enumerate(mt.atoms):
        x = np.asarray(x)
        cx = float(mt.c(x))
        gp += np.outer(x, x) * cx * cx * m
        pts[i] = x
        masses[i] = min(float(np.linalg.norm(x)) ** 3, 1.0) * m
    return TripletTransform(mt.gamma_c.copy(), gp, pts, masses)
