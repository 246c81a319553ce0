"""Scans for epsilon-almost periods of functions and of the marginal-law maps of processes.

Suprema over the real line become maxima over documented grids; each result
carries the resolution it was computed at and is a numerical certificate only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisError
from .kernels import Kernel, OUKernel, combine
from .levy import LevyTriplet, eval_integral_exponent
from .quad import DEFAULT_QUAD, QuadSpec
from .trig import TrigPolynomial

N_T = 4096
BEATS = 3
Z_PER_AXIS = 64


@dataclass
class DisplacementProfile:
    tau_grid: np.ndarray
    D: np.ndarray
    epsilon: float
    found: np.ndarray = field(init=False)
    max_gap: float = field(init=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau_grid = np.asarray(self.tau_grid, dtype=float)
        self.D = np.asarray(self.D, dtype=float)
        self.found = np.sort(self.tau_grid[self.D < self.epsilon])
        self.max_gap = max_gap(self.found)

    def clusters(self) -> list[np.ndarray]:
        """Runs of consecutive grid shifts that were found."""
        mask = self.D < self.epsilon
        out, cur = [], []
        for i, m in enumerate(mask):
            if m:
                cur.append(i)
            elif cur:
                out.append(np.array(cur))
                cur = []
        if cur:
            out.append(np.array(cur))
        return out

    def representatives(self) -> np.ndarray:
        """The shift with the smallest displacement in each cluster."""
        return np.array([self.tau_grid[c[np.argmin(self.D[c])]] for c in self.clusters()])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("tau,D\n")
            for t, d in zip(self.tau_grid, self.D):
                fh.write(f"{t!r},{d!r}\n")


def max_gap(found) -> float:
    """Largest gap between consecutive found shifts (inf when fewer than two)."""
    found = np.sort(np.asarray(found, dtype=float))
    if found.size < 2:
        return math.inf
    return float(np.max(np.diff(found)))


def tau_grid(window, tau_step: float) -> np.ndarray:
    lo, hi = window
    k0 = math.ceil(lo / tau_step - 1e-9)
    k1 = math.floor(hi / tau_step + 1e-9)
    return tau_step * np.arange(k0, k1 + 1)


def default_tau_step(mu: TrigPolynomial) -> float:
    return mu.shortest_period() / 50.0


def scan_function(mu: TrigPolynomial, eps: float, window=(0.0, 200.0), tau_step: float | None = None,
                  n_t: int = N_T) -> DisplacementProfile:
    """D(tau) = max over a t-grid of |mu(t + tau) - mu(t)|."""
    tau_step = default_tau_step(mu) if tau_step is None else tau_step
    taus = tau_grid(window, tau_step)
    span = BEATS * mu.beat_period()
    t = np.linspace(0.0, span, n_t)
    base = mu(t)
    D = np.empty(taus.size)
    for i, tau in enumerate(taus):
        D[i] = np.max(np.abs(mu(t + tau) - base))
    return DisplacementProfile(taus, D, eps, meta={"t_span": span, "n_t": n_t,
                                                   "tau_step": tau_step})


def kernel_shift_distance(kernel: Kernel, tau: float, s: float, p: float, t_grid) -> float:
    """sup over t_grid of ||f(t, .) - f(t + tau, . + s)||_p."""
    best = 0.0
    for t in np.atleast_1d(t_grid):
        a = kernel.section(float(t))
        b = kernel.section(float(t) + tau).shifted(s)
        best = max(best, combine([(1.0, a), (-1.0, b)]).lp_norm(p))
    return best


# ---------------------------------------------------------------------------
# marginal laws of stochastic-integral processes


@dataclass(frozen=True)
class IntegralProcess:
    """X_t = int f(t, s) dL(s)."""

    kernel: Kernel
    triplet: LevyTriplet

    @property
    def gaussian(self) -> bool:
        return self.triplet.nu.is_zero

    @property
    def fast(self) -> bool:
        return self.gaussian and isinstance(self.kernel, OUKernel)


def z_nodes(n: int, k: float, per_axis: int = Z_PER_AXIS, half: bool = True) -> np.ndarray:
    """Grid on [-k, k]^n; with ``half`` only one of each pair +-z (phi(-z) = conj phi(z))."""
    ax = np.linspace(-k, k, per_axis)
    grids = np.meshgrid(*([ax] * n), indexing="ij")
    z = np.stack([g.ravel() for g in grids], axis=1)
    if half:
        # keep z whose first nonzero coordinate is positive, plus the origin
        keep = np.zeros(z.shape[0], dtype=bool)
        decided = np.zeros(z.shape[0], dtype=bool)
        for j in range(n):
            pos = (~decided) & (z[:, j] > 0)
            neg = (~decided) & (z[:, j] < 0)
            keep |= pos
            decided |= pos | neg
        keep |= ~decided
        z = z[keep]
    return z


class _GaussianOUField:
    """Mean and covariance of (X_{t_1+x}, ..., X_{t_n+x}) on a uniform x-grid."""

    def __init__(self, kernel: OUKernel, triplet: LevyTriplet, x0: float, h: float, n_x: int,
                 offsets):
        self.offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        self.mu = kernel.mu
        self.a = triplet.a
        self.gamma = triplet.gamma
        xs = x0 + h * np.arange(n_x)
        self.xs = xs
        self.Z = []
        self.v = []
        self.m = []
        for off in self.offsets:
            t = xs + off
            self.Z.append(self.mu.antiderivative(t))
            self.v.append(kernel.variance_profile(t) if self.a else np.zeros(n_x))
            self.m.append(kernel.mean_profile(t) if self.gamma else np.zeros(n_x))

    def params(self, idx: np.ndarray):
        """Mean vectors (len(idx), n) and covariance matrices (len(idx), n, n)."""
        n = self.offsets.size
        mean = np.stack([self.gamma * self.m[j][idx] for j in range(n)], axis=1)
        cov = np.empty((idx.size, n, n))
        for j in range(n):
            for k in range(n):
                # the earlier time carries the shared past
                e = k if self.offsets[k] <= self.offsets[j] else j
                cov[:, j, k] = self.a * np.exp(self.Z[j][idx] + self.Z[k][idx]
                                               - 2.0 * self.Z[e][idx]) * self.v[e][idx]
        return mean, cov

    def phi(self, idx: np.ndarray, z: np.ndarray) -> np.ndarray:
        mean, cov = self.params(idx)
        n = z.shape[1]
        zz = (z[:, :, None] * z[:, None, :]).reshape(z.shape[0], n * n)
        quad = cov.reshape(idx.size, n * n) @ zz.T
        return np.exp(1j * (mean @ z.T) - 0.5 * quad)


def _generic_phi(process: IntegralProcess, xs, offsets, z, spec: QuadSpec) -> np.ndarray:
    out = np.empty((len(xs), z.shape[0]), dtype=complex)
    k = process.kernel
    for i, x in enumerate(xs):
        ts = [x + o for o in offsets]
        for m, zz in enumerate(z):
            if not np.any(zz):
                out[i, m] = 1.0
                continue
            val = eval_integral_exponent([k] * len(ts), ts, process.triplet, zz, spec).value
            out[i, m] = np.exp(val)
    return out


def marginal_displacement(process: IntegralProcess, tau: float, t_grid, offsets=(0.0,),
                          z_grid=None, k: float = 3.0, spec: QuadSpec = DEFAULT_QUAD) -> float:
    """max over t_grid x z_grid of |phi_x(z) - phi_{x+tau}(z)| for (X_{t_j + x})_j."""
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
    z = z_nodes(offsets.size, k) if z_grid is None else np.atleast_2d(np.asarray(z_grid, float))
    xs = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if tau == 0:
        return 0.0
    if process.fast:
        kern = process.kernel
        both = np.concatenate([xs, xs + tau])
        fld = _PointField(kern, process.triplet, both, offsets)
        p1 = fld.phi(np.arange(xs.size), z)
        p2 = fld.phi(np.arange(xs.size, 2 * xs.size), z)
    else:
        p1 = _generic_phi(process, xs, offsets, z, spec)
        p2 = _generic_phi(process, xs + tau, offsets, z, spec)
    return float(np.max(np.abs(p1 - p2)))


class _PointField(_GaussianOUField):
    """Same as the uniform field but at arbitrary x values."""

    def __init__(self, kernel, triplet, xs, offsets):
        self.offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        self.mu = kernel.mu
        self.a = triplet.a
        self.gamma = triplet.gamma
        self.xs = np.asarray(xs, dtype=float)
        self.Z, self.v, self.m = [], [], []
        for off in self.offsets:
            t = self.xs + off
            self.Z.append(self.mu.antiderivative(t))
            self.v.append(kernel.variance_profile(t) if self.a else np.zeros(t.size))
            self.m.append(kernel.mean_profile(t) if self.gamma else np.zeros(t.size))


# ---------------------------------------------------------------------------
# certificate


@dataclass
class APCertificate:
    profiles: dict  # eps -> DisplacementProfile
    gamma_translation: dict  # eps -> list of (tau, gamma upper bound)
    resolution: dict

    def summary(self) -> dict:
        out = {"status": "certified at resolution", "resolution": self.resolution, "levels": []}
        for eps, prof in self.profiles.items():
            out["levels"].append({
                "epsilon": float(eps),
                "n_found": int(prof.found.size),
                "max_gap": float(prof.max_gap),
                "representatives": [float(t) for t in prof.representatives()],
                "gamma_bounds": [[float(t), float(g)] for t, g in self.gamma_translation[eps]],
            })
        return out


def _ou_scan_setup(kernel: OUKernel, window, tau_step, n_t):
    mu = kernel.mu
    tau_step = default_tau_step(mu) if tau_step is None else tau_step
    span = BEATS * mu.beat_period()
    # t-grid step divides tau_step so every shift lands on the grid
    m = max(1, math.ceil(tau_step * (n_t - 1) / span))
    h = tau_step / m
    n_x = max(n_t, math.ceil(span / h) + 1)
    return tau_step, h, m, n_x


def displacement_scan(process: IntegralProcess, window=(0.0, 200.0), tau_step: float | None = None,
                      offsets=(0.0,), k: float = 3.0, n_t: int = N_T, z_per_axis: int = Z_PER_AXIS,
                      n_t_generic: int = 64, spec: QuadSpec = DEFAULT_QUAD):
    """D(tau) on the scan grid; returns (taus, D, resolution dict)."""
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
    z = z_nodes(offsets.size, k, z_per_axis)
    if process.fast:
        kern = process.kernel
        tau_step, h, m, n_x = _ou_scan_setup(kern, window, tau_step, n_t)
        taus = tau_grid(window, tau_step)
        j0 = int(round(taus[0] / tau_step))
        n_total = n_x + m * (int(round(taus[-1] / tau_step)) - min(j0, 0)) + 1
        x0 = min(0.0, taus[0])
        fld = _GaussianOUField(kern, process.triplet, x0, h, n_total, offsets)
        base_idx = np.arange(n_x) + int(round(-x0 / h))
        base = fld.phi(base_idx, z)
        D = np.empty(taus.size)
        for i, tau in enumerate(taus):
            shift = int(round(tau / tau_step)) * m
            D[i] = np.max(np.abs(fld.phi(base_idx + shift, z) - base))
        res = {"t_step": h, "n_t": n_x, "t_span": h * (n_x - 1), "tau_step": tau_step,
               "z_box": k, "z_per_axis": z_per_axis, "window": list(map(float, window))}
        return taus, D, res
    kern = process.kernel
    tau_step = tau_step or (kern.mu.shortest_period() / 50.0 if hasattr(kern, "mu")
                            else (kern.u.shortest_period() / 50.0 if getattr(kern, "u", None)
                                  else 0.1))
    taus = tau_grid(window, tau_step)
    t_grid = kern.default_t_grid(n_t_generic)
    D = np.array([marginal_displacement(process, t, t_grid, offsets, z, spec=spec) for t in taus])
    res = {"t_step": float(t_grid[1] - t_grid[0]) if t_grid.size > 1 else 0.0,
           "n_t": int(t_grid.size), "tau_step": tau_step, "z_box": k, "z_per_axis": z_per_axis,
           "window": list(map(float, window))}
    return taus, D, res


def gamma_translation(process: IntegralProcess, tau: float, t_grid, offsets=(0.0,), K: int = 10,
                      z_per_axis: int = Z_PER_AXIS) -> float:
    """Upper value sum_{k<=K} 2^-k D_k + 2^(1-K), D_k the grid displacement on [-k, k]^n."""
    total = 2.0 ** (1 - K)
    for k in range(1, K + 1):
        z = z_nodes(len(np.atleast_1d(offsets)), float(k), z_per_axis)
        total += 2.0 ** -k * marginal_displacement(process, tau, t_grid, offsets, z)
    return total


def certify_ap(process: IntegralProcess, eps_list, window=(0.0, 200.0), tau_step: float | None = None,
               offsets=(0.0,), k: float = 3.0, n_t: int = N_T, K: int = 10,
               gamma_t_points: int = 256, z_per_axis: int = Z_PER_AXIS) -> APCertificate:
    """Scan epsilon-almost periods of the marginal-law map and translate them to gamma_n."""
    if isinstance(process.kernel, OUKernel) and not process.kernel.mu.c0 < 0:
        raise HypothesisError("OU process needs a negative mean of mu")
    taus, D, res = displacement_scan(process, window, tau_step, offsets, k, n_t, z_per_axis)
    profiles, gam = {}, {}
    span = res.get("t_span") or 1.0
    t_small = np.linspace(0.0, span, gamma_t_points)
    for eps in eps_list:
        prof = DisplacementProfile(taus, D, float(eps), meta=res)
        profiles[float(eps)] = prof
        gam[float(eps)] = [(float(t), gamma_translation(process, float(t), t_small, offsets, K,
                                                        z_per_axis))
                           for t in prof.representatives()[:64]]
    return APCertificate(profiles, gam, res)


def triplet_path_displacement(transforms_a, transforms_b) -> dict:
    """Distances between two triplet-transform records, one per time offset.

    Gaussian parts and drifts by max-norm; cubed jump measures by the Prokhorov
    distance on finite measures.
    """
    from .metrics import EmpiricalMeasure, prokhorov

    out = {"gamma": 0.0, "gauss": 0.0, "cubed": 0.0}
    for ta, tb in zip(transforms_a, transforms_b):
        out["gamma"] = max(out["gamma"], float(np.max(np.abs(ta.gamma_c - tb.gamma_c))))
        out["gauss"] = max(out["gauss"], float(np.max(np.abs(ta.gauss_plus - tb.gauss_plus))))
        ma = EmpiricalMeasure(ta.cubed_points, ta.cubed_masses)
        mb = EmpiricalMeasure(tb.cubed_points, tb.cubed_masses)
        out["cubed"] = max(out["cubed"], prokhorov(ma, mb))
    return out
