"""Distribution functions d_f(a) = |{|f| > a}| and the level integrals built on them.

Integrals over levels run in u = log(a) with composite Gauss-Legendre panels
split at every critical level of the section, so the jumps and kinks of d_f
sit on panel edges. Levels below ``1e-14 * sup|f|`` are covered by a remainder
estimate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisError, NumericalError
from .kernels import Section
from .quad import panel_nodes, subdivide

N_LEVELS = 1024
LOW_LEVEL = 1e-8
FLOOR = 1e-14
PANEL_WIDTH = 0.25
GL_NODES = 16
MIN_SAMPLES = 2 ** 14
GRADING = 10


@dataclass
class DistFn:
    """Tabulated distribution function plus, when available, an exact evaluator.

    ``values[i]`` is the measure of the strict super-level set at ``alphas[i]``.
    ``tail_flag`` records that d vanishes at and beyond ``alphas[-1]``.
    """

    alphas: np.ndarray
    values: np.ndarray
    tail_flag: bool = True
    sup: float = 0.0
    critical: np.ndarray = field(default_factory=lambda: np.zeros(0))
    singular: np.ndarray = field(default_factory=lambda: np.zeros(0))
    evaluator: object = None
    approximate: bool = False
    label: str = ""

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.alphas.size and np.any(np.diff(self.alphas) <= 0):
            raise ValueError("level grid must be strictly increasing")
        if np.any(np.diff(self.values) > 1e-9 * max(1.0, float(np.max(self.values, initial=0.0)))):
            raise NumericalError("distribution function is not non-increasing")

    @property
    def is_zero(self) -> bool:
        return self.sup <= 0.0

    def __call__(self, alphas) -> np.ndarray:
        alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
        out = np.zeros(alphas.shape)
        live = alphas < self.sup
        if not np.any(live):
            return out
        if self.evaluator is not None:
            out[live] = self.evaluator(alphas[live])
        else:
            idx = np.searchsorted(self.alphas, alphas[live], side="right") - 1
            vals = np.where(idx >= 0, self.values[np.clip(idx, 0, None)], self.values[0])
            out[live] = vals
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "value"])
            for a, v in zip(self.alphas, self.values):
                w.writerow([repr(float(a)), repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "DistFn":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        alphas, values = data[:, 0], data[:, 1]
        nz = np.nonzero(values > 0)[0]
        sup = float(alphas[nz[-1] + 1]) if nz.size and nz[-1] + 1 < alphas.size else (
            float(alphas[-1]) if nz.size else 0.0)
        return cls(alphas, values, True, sup, alphas.copy())


def level_grid(sup: float, n: int = N_LEVELS, low: float = LOW_LEVEL) -> np.ndarray:
    return np.geomspace(low * sup, sup, n)


def dist_fn(section: Section, level_grid_: np.ndarray | None = None, part: str = "abs",
            approximate: bool = False, n_samples: int = MIN_SAMPLES,
            window: tuple[float, float] | None = None) -> DistFn:
    """Distribution function of ``section`` (or of its positive/negative part).

    The exact route brackets super-level sets cell by cell. ``approximate``
    switches to counting samples on a uniform grid over ``window``; its error
    is of order the grid step times the number of level crossings.
    """
    if approximate:
        return _sampled_dist_fn(section, level_grid_, part, n_samples, window)
    if not section.monotone and not section.smooth:
        raise HypothesisError("section has no monotone partition; pass approximate=True")
    vals = _part_values(section, part)
    sup = float(vals.max()) if vals.size else 0.0
    crit = vals
    if sup <= 0:
        return DistFn(np.array([1.0]), np.array([0.0]), True, 0.0, label=section.label)
    grid = level_grid(sup) if level_grid_ is None else np.asarray(level_grid_, dtype=float)
    grid = np.unique(np.concatenate([grid, crit]))
    grid = grid[grid > 0]

    def evaluator(a):
        return section.superlevel_measure(a, part)

    values = np.where(grid < sup, evaluator(grid), 0.0)
    return DistFn(grid, values, True, sup, crit, evaluator=evaluator, singular=section.extremum_levels(),
                  label=section.label)


def _part_values(section: Section, part: str) -> np.ndarray:
    """Critical levels of the requested part (values of f at monotone-cell ends)."""
    from .kernels import _edge_delta

    vals = []
    for lo, hi, kind in section.monotone_cells:
        d = _edge_delta(lo, hi)
        if kind != "left":
            vals.append(section(np.array([lo + d]))[0])
        if kind != "right":
            vals.append(section(np.array([hi - d]))[0])
    vals = np.array(vals, dtype=float)
    if part == "pos":
        vals = vals[vals > 0]
    elif part == "neg":
        vals = -vals[vals < 0]
    else:
        vals = np.abs(vals)
        vals = vals[vals > 0]
    if section.left is not None and not section.left.decays or (
            section.right is not None and not section.right.decays):
        vals = np.append(vals, [t.amp for t in (section.left, section.right) if t is not None])
    return np.unique(vals)


def _sampled_dist_fn(section, level_grid_, part, n_samples, window):
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"sampled mode needs at least {MIN_SAMPLES} points")
    lo, hi = window if window is not None else section.window(1e-12)
    xs = np.linspace(lo, hi, n_samples)
    dx = xs[1] - xs[0]
    ys = section(xs)
    ys = {"pos": np.maximum(ys, 0.0), "neg": np.maximum(-ys, 0.0), "abs": np.abs(ys)}[part]
    ys_sorted = np.sort(ys)
    sup = float(ys_sorted[-1]) if ys.size else 0.0
    if sup <= 0:
        return DistFn(np.array([1.0]), np.array([0.0]), True, 0.0, approximate=True)

    def evaluator(a):
        return dx * (ys_sorted.size - np.searchsorted(ys_sorted, a, side="right"))

    grid = level_grid(sup) if level_grid_ is None else np.asarray(level_grid_, dtype=float)
    return DistFn(grid, evaluator(grid), True, sup, np.array([sup]), evaluator=evaluator,
                  approximate=True, label=section.label)


# ---------------------------------------------------------------------------
# level integrals


def _panels(lo: float, hi: float, critical, singular=()) -> np.ndarray:
    """Panel edges in log-level between ``lo`` and ``hi``.

    Edges are graded geometrically toward ``singular`` levels, where d_f
    behaves like a square root.
    """
    u_lo, u_hi = math.log(lo), math.log(hi)
    pts = [u_lo, u_hi]
    for c in np.atleast_1d(critical):
        if lo < c < hi:
            pts.append(math.log(c))
    grade = PANEL_WIDTH * 0.5 ** np.arange(1, GRADING + 1)
    for c in np.atleast_1d(singular):
        if c > 0 and c >= 1e-12 * hi:
            uc = math.log(c)
            pts.extend(q for q in np.concatenate([uc - grade, uc + grade]) if u_lo < q < u_hi)
    return subdivide(pts, PANEL_WIDTH)


def _level_integral(funcs, upper: float, p: float, critical, singular=()) -> float:
    """int_0^upper a^(p-1) F(a) da where F is a non-negative combination of dist fns.

    ``funcs`` evaluates F on an array of levels.
    """
    if upper <= 0:
        return 0.0
    a_min = FLOOR * upper
    edges = _panels(a_min, upper, critical, singular)
    u, w = panel_nodes(edges, GL_NODES)
    a = np.exp(u)
    body = float(np.sum(w * a ** p * funcs(a)))
    # below a_min: F is bounded by its value there up to a log factor
    rem = a_min ** p / p * float(funcs(np.array([a_min]))[0]) * (1.0 + 1.0 / p)
    return body + rem


def layer_cake_norm(d: DistFn, p: float) -> float:
    """(p int a^(p-1) d(a) da)^(1/p), the L^p norm of the underlying function."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if d.is_zero:
        return 0.0
    if not np.isfinite(d(np.array([d.sup * 0.5]))[0]):
        raise NumericalError("level integral diverges: infinite super-level set")
    val = p * _level_integral(d, d.sup, p, d.critical, d.singular)
    return val ** (1.0 / p)


def tail_functional(d: DistFn, r: float) -> float:
    """int_0^{1/|r|} d(a) da."""
    if abs(r) <= 1:
        raise ValueError("tail functional needs |r| > 1")
    if d.is_zero:
        return 0.0
    upper = min(1.0 / abs(r), d.sup)
    return _level_integral(d, upper, 1.0, d.critical, d.singular)


@dataclass(frozen=True)
class WeightedL1Result:
    distance: float
    bound: float | None
    p: float

    @property
    def holds(self) -> bool:
        return self.bound is None or self.distance <= self.bound * (1 + 1e-9) + 1e-12


def level_difference_integral(d_f: DistFn, d_g: DistFn, p: float) -> float:
    """int_0^inf a^(p-1) |d_f(a) - d_g(a)| da, with panels split where the sign flips."""
    if d_f.is_zero and d_g.is_zero:
        return 0.0
    if not (np.isfinite(d_f(np.array([d_f.sup * 0.5]))[0]) and
            np.isfinite(d_g(np.array([d_g.sup * 0.5]))[0])):
        raise NumericalError("level integral diverges: infinite super-level set")
    upper = max(d_f.sup, d_g.sup)
    crit = np.concatenate([d_f.critical, d_g.critical, [d_f.sup, d_g.sup]])
    crit = crit[crit > 0]

    def diff(a):
        return d_f(a) - d_g(a)

    a_min = FLOOR * upper
    edges = _panels(a_min, upper, crit, np.concatenate([d_f.singular, d_g.singular]))
    edges = _split_sign_changes(diff, edges)
    u, w = panel_nodes(edges, GL_NODES)
    a = np.exp(u)
    body = float(np.sum(w * a ** p * np.abs(diff(a))))
    rem = a_min ** p / p * abs(float(diff(np.array([a_min]))[0])) * (1.0 + 1.0 / p)
    return body + rem


def _split_sign_changes(diff, edges: np.ndarray, probe: int = 8) -> np.ndarray:
    """Add a panel edge at every sign change of ``diff`` (located in log-level)."""
    pts = np.linspace(0.0, 1.0, probe + 1)
    grid = (edges[:-1, None] + np.diff(edges)[:, None] * pts[None, :]).ravel()
    grid = np.unique(np.append(grid, edges[-1]))
    vals = diff(np.exp(grid))
    s = np.sign(vals)
    flip = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if flip.size == 0:
        return edges
    lo, hi = grid[flip].copy(), grid[flip + 1].copy()
    s_lo = s[flip]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        sm = np.sign(diff(np.exp(mid)))
        same = sm == s_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return np.unique(np.concatenate([edges, 0.5 * (lo + hi)]))


def weighted_l1_distance(d_f: DistFn, d_g: DistFn, p: float,
                         f: Section | None = None, g: Section | None = None) -> WeightedL1Result:
    """Level-integrated distance, with the rearrangement bound when sections are given.

    The bound (||f||_p^(p-1) + ||g||_p^(p-1)) ||f - g||_p uses the pair (f, g)
    itself, which is an upper bound for the infimum over equimeasurable pairs.
    """
    dist = level_difference_integral(d_f, d_g, p)
    bound = None
    if f is not None and g is not None:
        nf, ng = f.lp_norm(p), g.lp_norm(p)
        diff = f - g
        bound = (nf ** (p - 1) + ng ** (p - 1)) * diff.lp_norm(p)
        if dist > bound * (1 + 1e-7) + 1e-10:
            raise NumericalError(f"level distance {dist:.6g} exceeds rearrangement bound {bound:.6g}")
    return WeightedL1Result(dist, bound, p)
