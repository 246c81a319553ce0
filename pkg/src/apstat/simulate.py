"""Levy increments, Riemann-Stieltjes stochastic integrals and almost periodic OU paths.

Every path owns a random stream derived from (seed, path index), so an
ensemble is identical whatever the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import HypothesisError, UnboundedTailError
from .kernels import OUKernel, Section
from .levy import LevyTriplet
from .trig import TrigPolynomial

CHUNK = 256


def path_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


@dataclass(frozen=True)
class Grid:
    """Uniform grid t0, t0 + dt, ..., t0 + n dt."""

    t0: float
    dt: float
    n: int

    def __post_init__(self):
        if not self.dt > 0 or self.n < 1:
            raise ValueError("grid needs dt > 0 and at least one step")

    @classmethod
    def covering(cls, lo: float, hi: float, dt: float, anchor: float | None = None) -> "Grid":
        """Smallest grid of step ``dt`` containing [lo, hi] with a node at ``anchor``."""
        anchor = lo if anchor is None else anchor
        k0 = math.floor((lo - anchor) / dt + 1e-9)
        k1 = math.ceil((hi - anchor) / dt - 1e-9)
        return cls(anchor + k0 * dt, dt, max(k1 - k0, 1))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n + 1)

    @property
    def t_end(self) -> float:
        return self.t0 + self.n * self.dt


@dataclass
class IncrementStream:
    """Increments of L over the cells of a grid, for one or many paths.

    ``gauss`` has shape (paths, n). Jumps are flat arrays tagged with the path
    and the cell they fall in.
    """

    grid: Grid
    drift: float  # per unit time, uncompensated
    gauss: np.ndarray
    jump_path: np.ndarray
    jump_cell: np.ndarray
    jump_time: np.ndarray
    jump_size: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.gauss.shape[0]

    def totals(self) -> np.ndarray:
        """Delta L per cell, shape (paths, n)."""
        out = self.drift * self.grid.dt + self.gauss
        np.add.at(out, (self.jump_path, self.jump_cell), self.jump_size)
        return out

    def path(self, i: int) -> "IncrementStream":
        sel = self.jump_path == i
        return IncrementStream(self.grid, self.drift, self.gauss[i:i + 1], np.zeros(sel.sum(), int),
                               self.jump_cell[sel], self.jump_time[sel], self.jump_size[sel])


def uncompensated_drift(triplet: LevyTriplet) -> float:
    """gamma' = gamma - int_{|x|<=1} x nu(dx)."""
    return triplet.gamma - triplet.nu.integrate(lambda s: s, 0.0, 1.0)


def _check_finite_activity(triplet: LevyTriplet) -> None:
    mass = triplet.nu.total_mass()
    if not math.isfinite(mass):
        raise HypothesisError("infinite-activity jump measure: truncate small jumps first")


def _sample_density_sizes(rng, dens, k: int) -> np.ndarray:
    """Draw ``k`` jump sizes from the piecewise-linear density (both signs)."""
    if k == 0:
        return np.zeros(0)
    x = dens.grid
    pos, neg = np.asarray(dens.pos), np.asarray(dens.neg)
    w = np.diff(x)
    cell_mass = np.concatenate([0.5 * w * (pos[:-1] + pos[1:]), 0.5 * w * (neg[:-1] + neg[1:])])
    prob = cell_mass / cell_mass.sum()
    cells = rng.choice(cell_mass.size, size=k, p=prob)
    u = rng.random(k)
    m = x.size - 1
    side = np.where(cells < m, 1.0, -1.0)
    c = cells % m
    vals = np.where(cells < m, 1, 0)
    f0 = np.where(vals == 1, pos[c], neg[c])
    f1 = np.where(vals == 1, pos[c + 1], neg[c + 1])
    h = x[c + 1] - x[c]
    # inverse CDF of a linear density on [0, h]: f0 y + (f1 - f0) y^2 / (2h) = u * mass
    mass = 0.5 * h * (f0 + f1)
    a = (f1 - f0) / (2 * h)
    target = u * mass
    with np.errstate(invalid="ignore", divide="ignore"):
        y_quad = (-f0 + np.sqrt(f0 * f0 + 4 * a * target)) / (2 * a)
        y_lin = target / f0
    y = np.where(np.abs(a) > 1e-14 * np.maximum(f0, 1e-300) / h, y_quad, y_lin)
    return side * (x[c] + np.clip(y, 0.0, h))


def _one_path(triplet: LevyTriplet, grid: Grid, seed: int, index: int):
    rng = path_rng(seed, index)
    n, dt = grid.n, grid.dt
    gauss = math.sqrt(triplet.a * dt) * rng.standard_normal(n) if triplet.a > 0 else np.zeros(n)
    cells, times, sizes = [], [], []
    for x, m in triplet.nu.atoms:
        counts = rng.poisson(m * dt, n)
        tot = int(counts.sum())
        c = np.repeat(np.arange(n), counts)
        cells.append(c)
        times.append(grid.t0 + dt * (c + rng.random(tot)))
        sizes.append(np.full(tot, x))
    dens = triplet.nu.density
    if dens is not None:
        counts = rng.poisson(dens.mass() * dt, n)
        tot = int(counts.sum())
        c = np.repeat(np.arange(n), counts)
        cells.append(c)
        times.append(grid.t0 + dt * (c + rng.random(tot)))
        sizes.append(_sample_density_sizes(rng, dens, tot))
    if cells:
        return gauss, np.concatenate(cells), np.concatenate(times), np.concatenate(sizes)
    return gauss, np.zeros(0, int), np.zeros(0), np.zeros(0)


def sample_increments(triplet: LevyTriplet, grid: Grid, seed: int, n_paths: int = 1,
                      first_index: int = 0, threads: int = 1) -> IncrementStream:
    """Drift, Gaussian and compound-Poisson parts of L on each grid cell."""
    _check_finite_activity(triplet)
    idx = list(range(first_index, first_index + n_paths))

    def work(chunk):
        return [_one_path(triplet, grid, seed, i) for i in chunk]

    chunks = [idx[i:i + CHUNK] for i in range(0, len(idx), CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    flat = [p for part in parts for p in part]
    gauss = np.stack([p[0] for p in flat]) if flat else np.zeros((0, grid.n))
    jp = np.concatenate([np.full(p[1].size, k, int) for k, p in enumerate(flat)]) if flat else np.zeros(0, int)
    jc = np.concatenate([p[1] for p in flat]).astype(int) if flat else np.zeros(0, int)
    jt = np.concatenate([p[2] for p in flat]) if flat else np.zeros(0)
    js = np.concatenate([p[3] for p in flat]) if flat else np.zeros(0)
    return IncrementStream(grid, uncompensated_drift(triplet), gauss, jp, jc, jt, js)


# ---------------------------------------------------------------------------
# stochastic integrals


def integral_window(sec: Section, triplet: LevyTriplet, tol: float = 1e-6) -> tuple[float, float]:
    """Window outside which the discarded exponent contribution is below ``tol``."""
    if not sec.decays:
        raise UnboundedTailError(f"{sec!r}: no tail bound, cannot truncate the integral")
    k1, k2 = triplet.growth_constants()
    return sec.window(tol / (2.0 * max(k1 + k2, 1e-300)))


def integrate_stream(sections, stream: IncrementStream) -> np.ndarray:
    """Sum of f(s_i) (drift + Gaussian) at left endpoints plus f(tau) J at jump times.

    Returns shape (paths, len(sections)).
    """
    s_left = stream.grid.times[:-1]
    base = stream.drift * stream.grid.dt + stream.gauss
    out = np.empty((stream.n_paths, len(sections)))
    for j, sec in enumerate(sections):
        w = sec(s_left)
        col = base @ w
        if stream.jump_size.size:
            col = col + np.bincount(stream.jump_path, sec(stream.jump_time) * stream.jump_size,
                                    minlength=stream.n_paths)
        out[:, j] = col
    return out


def stochastic_integral(section: Section | list, triplet: LevyTriplet, dt: float, n_paths: int,
                        seed: int, tol: float = 1e-6, threads: int = 1,
                        window: tuple[float, float] | None = None) -> np.ndarray:
    """Samples of int f(s) dL(s); a list of sections gives coupled samples (shape (paths, k))."""
    secs = section if isinstance(section, (list, tuple)) else [section]
    if all(_is_zero(s) for s in secs):
        out = np.zeros((n_paths, len(secs)))
        return out if isinstance(section, (list, tuple)) else out[:, 0]
    if window is None:
        lo = min(integral_window(s, triplet, tol)[0] for s in secs)
        hi = max(integral_window(s, triplet, tol)[1] for s in secs)
    else:
        lo, hi = window
    anchor = min(s.breaks[0] for s in secs)
    grid = Grid.covering(lo, hi, dt, anchor)
    stream = sample_increments(triplet, grid, seed, n_paths, threads=threads)
    out = integrate_stream(secs, stream)
    return out if isinstance(section, (list, tuple)) else out[:, 0]


def _is_zero(sec: Section) -> bool:
    probe = np.linspace(sec.breaks[0] - 1, sec.breaks[-1] + 1, 257)
    return (sec.left is None or sec.left.amp == 0) and (sec.right is None or sec.right.amp == 0) \
        and not np.any(sec(probe))


# ---------------------------------------------------------------------------
# almost periodic Ornstein-Uhlenbeck


def ou_truncation(mu: TrigPolynomial, triplet: LevyTriplet, tol: float = 1e-6) -> float:
    """Past depth T with K1 * 2 e^{C'-CT/2}/C + K2 e^{2C'-CT}/C <= tol."""
    C = -mu.c0
    if not C > 0:
        raise HypothesisError("no almost periodic stationary solution constructed: mean of mu >= 0")
    Cp = mu.oscillation_bound()
    k1, k2 = triplet.growth_constants()

    def excess(T):
        return k1 * 2 * math.exp(Cp - C * T / 2) / C + k2 * math.exp(2 * Cp - C * T) / C

    if k1 == 0 and k2 == 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while excess(hi) > tol:
        hi *= 2
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if excess(mid) > tol:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass
class PathGrid:
    """OU values on a uniform grid; ``increments`` drive the reported window."""

    grid: Grid
    values: np.ndarray  # shape (paths, n + 1)
    seed: int
    T_trunc: float
    increments: IncrementStream | None = None

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def to_csv(self, path, index: int = 0) -> None:
        with open(path, "w") as fh:
            fh.write("t,X\n")
            for t, x in zip(self.times, self.values[index]):
                fh.write(f"{t!r},{x!r}\n")


def _ou_recursion(mu: TrigPolynomial, stream: IncrementStream, x0: np.ndarray) -> np.ndarray:
    """X_{k+1} = e^{dZ} X_k + e^{Z_{k+1}-Z_mid}(drift + gauss) + sum e^{Z_{k+1}-Z_tau} J."""
    g = stream.grid
    times = g.times
    Z = mu.antiderivative(times)
    Zmid = mu.antiderivative(times[:-1] + 0.5 * g.dt)
    growth = np.exp(np.diff(Z))
    wmid = np.exp(Z[1:] - Zmid)
    forcing = (stream.drift * g.dt + stream.gauss) * wmid[None, :]
    if stream.jump_size.size:
        wj = np.exp(Z[stream.jump_cell + 1] - mu.antiderivative(stream.jump_time))
        np.add.at(forcing, (stream.jump_path, stream.jump_cell), wj * stream.jump_size)
    out = np.empty((stream.n_paths, g.n + 1))
    out[:, 0] = x0
    x = x0.astype(float).copy()
    for k in range(g.n):
        x = growth[k] * x + forcing[:, k]
        out[:, k + 1] = x
    return out


def ou_ensemble(mu: TrigPolynomial, triplet: LevyTriplet, grid: Grid, seed: int, n_paths: int = 1,
                tol: float = 1e-6, threads: int = 1, keep_increments: bool = False,
                first_index: int = 0) -> PathGrid:
    """OU paths on ``grid`` started from the truncated stationary integral.

    The past window [t0 - T_trunc, t0] uses the same step and the same per-path
    stream as the reported window, so path k is reproducible in isolation.
    """
    _check_log_moment(triplet)
    T = ou_truncation(mu, triplet, tol)
    n_burn = int(math.ceil(T / grid.dt - 1e-9))
    full = Grid(grid.t0 - n_burn * grid.dt, grid.dt, n_burn + grid.n)
    stream = sample_increments(triplet, full, seed, n_paths, first_index, threads)
    vals = _ou_recursion(mu, stream, np.zeros(n_paths))
    out = vals[:, n_burn:]
    inc = None
    if keep_increments:
        inc = _tail_stream(stream, n_burn, grid)
    return PathGrid(grid, out, seed, n_burn * grid.dt, inc)


def ou_path(mu: TrigPolynomial, triplet: LevyTriplet, grid: Grid, seed: int,
            tol: float = 1e-6) -> PathGrid:
    return ou_ensemble(mu, triplet, grid, seed, 1, tol, keep_increments=True)


def _tail_stream(stream: IncrementStream, n_burn: int, grid: Grid) -> IncrementStream:
    sel = stream.jump_cell >= n_burn
    return IncrementStream(grid, stream.drift, stream.gauss[:, n_burn:], stream.jump_path[sel],
                           stream.jump_cell[sel] - n_burn, stream.jump_time[sel],
                           stream.jump_size[sel])


def _check_log_moment(triplet: LevyTriplet) -> None:
    if not math.isfinite(triplet.nu.log_moment()):
        raise HypothesisError("int_{|s|>1} log|s| nu(ds) is infinite")


def ou_from_stream(mu: TrigPolynomial, stream: IncrementStream, x0=0.0) -> np.ndarray:
    """Run the exact recursion on a given stream (used for crafted or coarsened streams)."""
    return _ou_recursion(mu, stream, np.full(stream.n_paths, float(x0)))


def coarsen(stream: IncrementStream, factor: int) -> IncrementStream:
    """Merge ``factor`` consecutive cells; the same Brownian path on a coarser grid."""
    g = stream.grid
    if g.n % factor:
        raise ValueError("grid length must be divisible by the coarsening factor")
    n = g.n // factor
    gauss = stream.gauss.reshape(stream.n_paths, n, factor).sum(axis=2)
    return IncrementStream(Grid(g.t0, g.dt * factor, n), stream.drift, gauss, stream.jump_path,
                           stream.jump_cell // factor, stream.jump_time, stream.jump_size)


def recursion_residual(values: np.ndarray, mu: TrigPolynomial, stream: IncrementStream) -> float:
    """max_k |X_{k+1} - X_k - trapezoid(int mu X) - Delta L_k| over steps and paths."""
    g = stream.grid
    values = np.atleast_2d(values)
    m = mu(g.times)
    mx = m[None, :] * values
    trap = 0.5 * g.dt * (mx[:, :-1] + mx[:, 1:])
    res = np.diff(values, axis=1) - trap - stream.totals()
    return float(np.max(np.abs(res))) if res.size else 0.0


def ou_stationary_variance(mu: TrigPolynomial, triplet: LevyTriplet, t) -> np.ndarray:
    """sigma_L^2 v(t) with v(t) = int_{-inf}^t e^{2(Z_t - Z_s)} ds."""
    return triplet.variance * OUKernel(mu).variance_profile(t)


def ensemble_summary(paths: PathGrid) -> np.ndarray:
    """Rows (t, mean, var, q05, q95)."""
    v = paths.values
    q = np.quantile(v, [0.05, 0.95], axis=0)
    return np.column_stack([paths.times, v.mean(axis=0), v.var(axis=0, ddof=1) if v.shape[0] > 1
                            else np.zeros(v.shape[1]), q[0], q[1]])
