"""Moving-average processes with finite memory and an empirical check of their central limit theorem."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConfigError, HypothesisError, NumericalError
from .kernels import Kernel
from .levy import LevyTriplet
from .quad import TIGHT_QUAD, quad_real
from .simulate import CHUNK, Grid, sample_increments
from .trig import TrigPolynomial

MEAN_TOL = 1e-9
DEGENERATE_VAR = 1e-10


@dataclass(frozen=True)
class MAProcessSpec:
    """X_t = u(t) int h(t - s) dL(s) with h supported in [0, m]."""

    h: Kernel
    triplet: LevyTriplet
    m: float
    u: TrigPolynomial | None = None

    def __post_init__(self):
        if not self.m > 0:
            raise ConfigError("memory width m must be positive")
        if abs(self.triplet.mean) > MEAN_TOL:
            raise HypothesisError(f"driver must have mean zero, E L([0,1]) = {self.triplet.mean}")
        sec = self.h.section(0.0)
        for probe in (-1e-9 * max(1.0, self.m), self.m * (1 + 1e-9) + 1e-12, -self.m, 2 * self.m):
            if sec(np.array([probe]))[0] != 0:
                raise ConfigError(f"h must vanish outside [0, {self.m}]")

    def h_values(self, x) -> np.ndarray:
        return self.h.section(0.0)(np.asarray(x, dtype=float))

    def modulation(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.ones_like(t) if self.u is None else self.u(t)


def ap_modulated_ma(spec: MAProcessSpec, u: TrigPolynomial) -> MAProcessSpec:
    """The same moving average multiplied by the bounded almost periodic factor u(t)."""
    return MAProcessSpec(spec.h, spec.triplet, spec.m, u)


def _breaks(spec: MAProcessSpec) -> list[float]:
    b = [x for x in spec.h.section(0.0).breaks if 0.0 <= x <= spec.m]
    return sorted(set([0.0, spec.m] + b))


def overlap(spec: MAProcessSpec, s: float) -> float:
    """int h(v) h(v + |s|) dv."""
    s = abs(float(s))
    if s >= spec.m:
        return 0.0
    pts = sorted(set(_breaks(spec) + [b - s for b in _breaks(spec)]))
    f = spec.h.section(0.0)
    val, _ = quad_real(lambda v: float(f(np.array([v]))[0] * f(np.array([v + s]))[0]),
                       0.0, spec.m - s, TIGHT_QUAD, points=pts)
    return val


@dataclass
class CovProfile:
    s: np.ndarray
    g: np.ndarray
    V: float


def asymptotic_cov(spec: MAProcessSpec, s_grid=None, n: int = 2001) -> CovProfile:
    """g(s) = sigma_L^2 M_s[u(t) u(t+s)] int h(v) h(v+|s|) dv and V = int_{-m}^m g by trapezoid."""
    s = np.linspace(-spec.m, spec.m, n) if s_grid is None else np.asarray(s_grid, dtype=float)
    if spec.h.section(0.0).integrate(np.square) == math.inf:
        raise HypothesisError("h is not square integrable")
    ov = np.array([overlap(spec, x) for x in s])
    lag = np.ones_like(s) if spec.u is None else spec.u.mean_lag_product(s)
    g = spec.triplet.variance * lag * ov
    V = float(np.trapezoid(g, s))
    if V < -1e-8:
        raise NumericalError(f"negative asymptotic variance {V}")
    return CovProfile(s, g, V)


# ---------------------------------------------------------------------------
# simulation


def step_for(m: float) -> tuple[float, int]:
    """Delta = min(0.01, m/100), adjusted so that m is a whole number of steps."""
    M = max(100, math.ceil(m / 0.01 - 1e-9))
    return m / M, M


def _weights(spec: MAProcessSpec, dt: float, M: int) -> np.ndarray:
    return spec.h_values((np.arange(1, M + 1) - 0.5) * dt)


def ma_paths(spec: MAProcessSpec, t_lo: float, t_hi: float, n_paths: int, seed: int,
             first_index: int = 0, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """X on a grid over [t_lo, t_hi] with midpoint weights; returns (times, paths x times)."""
    from scipy.signal import fftconvolve

    dt, M = step_for(spec.m)
    N = max(1, round((t_hi - t_lo) / dt))
    grid = Grid(t_lo - spec.m, dt, N + M)
    stream = sample_increments(spec.triplet, grid, seed, n_paths, first_index, threads)
    dL = stream.totals()
    full = fftconvolve(dL, _weights(spec, dt, M)[None, :], axes=1)
    t = t_lo + dt * np.arange(N + 1)
    X = full[:, M - 1:M + N] * spec.modulation(t)[None, :]
    return t, X


def functional_weights(spec: MAProcessSpec, T: float) -> tuple[Grid, np.ndarray]:
    """Weights c with S = sum_j c_j Delta L_j, the trapezoid rule applied to the gridded path."""
    from scipy.signal import fftconvolve

    dt, M = step_for(spec.m)
    N = max(1, round(2 * T / dt))
    grid = Grid(-T - spec.m, dt, N + M)
    t = -T + dt * np.arange(N + 1)
    trap = np.full(N + 1, dt)
    trap[[0, -1]] *= 0.5
    a = trap * spec.modulation(t) / math.sqrt(2 * T)
    # X_i = sum_k w_k dL_{i+M-k}; collect the coefficient of each dL_j
    w = _weights(spec, dt, M)
    c = fftconvolve(a, w[::-1])  # length N + M, index j = i + M - k with k in 1..M
    return grid, c


def sample_S(spec: MAProcessSpec, T: float, n_reps: int, seed: int, threads: int = 1) -> np.ndarray:
    grid, c = functional_weights(spec, T)
    out = np.empty(n_reps)
    for start in range(0, n_reps, CHUNK):
        k = min(CHUNK, n_reps - start)
        stream = sample_increments(spec.triplet, grid, seed, k, start, threads)
        out[start:start + k] = stream.totals() @ c
    return out


@dataclass
class CLTRow:
    T: float
    n_reps: int
    ks_stat: float
    mean_S: float
    var_S: float
    V_inf2: float
    degenerate: bool = False


@dataclass
class CLTResult:
    rows: list
    V_inf2: float
    g_profile: CovProfile
    samples: dict = field(default_factory=dict)

    @property
    def T_list(self) -> list:
        return [r.T for r in self.rows]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("T,n_reps,ks_stat,mean_S,var_S,V_inf2\n")
            for r in self.rows:
                fh.write(f"{r.T!r},{r.n_reps},{r.ks_stat!r},{r.mean_S!r},{r.var_S!r},{r.V_inf2!r}\n")


def clt_experiment(spec: MAProcessSpec, T_list, n_reps: int = 2000, seed: int = 0,
                   threads: int = 1, keep_samples: bool = False) -> CLTResult:
    """KS distance of the normalised time integral from N(0, V) for each horizon T."""
    if n_reps < 2:
        raise ConfigError("need at least two replications")
    prof = asymptotic_cov(spec)
    V = prof.V
    rows, samples = [], {}
    for T in T_list:
        S = sample_S(spec, float(T), n_reps, seed, threads)
        var = float(np.var(S, ddof=1))
        if V <= DEGENERATE_VAR:
            if var > DEGENERATE_VAR:
                raise NumericalError(f"degenerate limit but Var(S) = {var}")
            ks, degenerate = math.nan, True
        else:
            ks, degenerate = float(stats.kstest(S, "norm", args=(0.0, math.sqrt(V))).statistic), False
        rows.append(CLTRow(float(T), n_reps, ks, float(np.mean(S)), var, V, degenerate))
        if keep_samples:
            samples[float(T)] = S
    return CLTResult(rows, V, prof, samples)


def time_average_cov(spec: MAProcessSpec, lags, T: float, n_paths: int, seed: int) -> np.ndarray:
    """Finite-T ensemble estimate of (1/2T) int_{-T}^T E X_{t+s} X_t dt, for validation."""
    dt, _ = step_for(spec.m)
    lags = np.atleast_1d(np.asarray(lags, dtype=float))
    shift = np.rint(np.abs(lags) / dt).astype(int)
    _, X = ma_paths(spec, -T, T + dt * shift.max(), n_paths, seed)
    n = round(2 * T / dt) + 1
    return np.array([np.mean(X[:, k:k + n] * X[:, :n]) for k in shift])


def tail_second_moment(spec: MAProcessSpec, levels, t_grid, n_paths: int, seed: int) -> np.ndarray:
    """max over t_grid of the empirical E[X_t^2 1{X_t^2 > k}] for each level k."""
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    t_grid = np.sort(np.atleast_1d(np.asarray(t_grid, dtype=float)))
    t, X = ma_paths(spec, float(t_grid[0]), float(t_grid[-1]), n_paths, seed)
    idx = np.clip(np.searchsorted(t, t_grid - 1e-12), 0, t.size - 1)
    X2 = X[:, idx] ** 2
    return np.array([float(np.max(np.mean(X2 * (X2 > k), axis=0))) for k in levels])
