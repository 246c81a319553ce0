"""Probability metrics on finite measures, characteristic-function grids and coupled samples."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, sparse
from scipy.spatial.distance import cdist

from .errors import NumericalError, SupportTooLargeError

BL_MAX_SUPPORT = 200
PROKHOROV_MAX_SUPPORT = 50
ENUMERATION_MAX_ATOMS = 12


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted point cloud in R^n. Coincident points are merged."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.size:
            raise ValueError("one weight per support point")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        keep = w > 0
        pts, w = pts[keep], w[keep]
        if pts.shape[0]:
            uniq, inv = np.unique(pts, axis=0, return_inverse=True)
            merged = np.zeros(uniq.shape[0])
            np.add.at(merged, inv.ravel(), w)
            pts, w = uniq, merged
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, x, mass: float = 1.0) -> "EmpiricalMeasure":
        return cls(np.atleast_2d(np.asarray(x, dtype=float)), np.array([mass]))

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalMeasure":
        s = np.asarray(samples, dtype=float)
        n = s.shape[0]
        return cls(s, np.full(n, 1.0 / n))

    @property
    def dim(self) -> int:
        return self.points.shape[1] if self.points.ndim == 2 else 1

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def size(self) -> int:
        return self.weights.size

    def charfn(self, z) -> np.ndarray:
        """Characteristic function at rows of ``z`` (shape (m, n))."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        out = np.zeros(z.shape[0], dtype=complex)
        for i in range(0, self.size, 4096):
            ph = z @ self.points[i:i + 4096].T
            out += np.exp(1j * ph) @ self.weights[i:i + 4096]
        return out

    def first_moment(self) -> float:
        return float(self.weights @ np.linalg.norm(self.points, axis=1)) / max(self.mass, 1e-300)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.dim)] + ["weight"])
            for p, m in zip(self.points, self.weights):
                w.writerow([repr(float(v)) for v in p] + [repr(float(m))])

    @classmethod
    def from_csv(cls, path) -> "EmpiricalMeasure":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, :-1], data[:, -1])


# ---------------------------------------------------------------------------
# characteristic-function grids and gamma_n


def box_nodes(n: int, K_max: int, per_axis: int = 64) -> np.ndarray:
    """Union over k <= K_max of the uniform per-axis grids on [-k, k]^n."""
    blocks = []
    for k in range(1, K_max + 1):
        ax = np.linspace(-k, k, per_axis)
        blocks.append(np.array(list(itertools.product(ax, repeat=n))) if n > 1 else ax[:, None])
    return np.unique(np.concatenate(blocks), axis=0)


@dataclass
class CharFnGrid:
    """Characteristic function tabulated on the nodes of nested boxes [-k, k]^n.

    ``func`` (optional) evaluates phi on arbitrary rows and enables local
    refinement of box maxima. ``first_moment`` (optional) bounds |phi'| and
    yields a resolution correction for the grid maximum.
    """

    nodes: np.ndarray
    values: np.ndarray
    K_max: int
    per_axis: int = 64
    func: object = None
    first_moment: float | None = None
    probability: bool = True

    def __post_init__(self):
        self.nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        self.values = np.asarray(self.values, dtype=complex)
        if self.probability and np.any(np.abs(self.values) > 1 + 1e-9):
            raise ValueError("|phi| exceeds 1 on the grid")

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @classmethod
    def from_function(cls, phi, n: int, K_max: int, per_axis: int = 64,
                      first_moment: float | None = None) -> "CharFnGrid":
        nodes = box_nodes(n, K_max, per_axis)
        return cls(nodes, phi(nodes), K_max, per_axis, phi, first_moment)

    @classmethod
    def from_measure(cls, m: EmpiricalMeasure, K_max: int, per_axis: int = 64) -> "CharFnGrid":
        return cls.from_function(m.charfn, m.dim, K_max, per_axis, m.first_moment())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"z{i}" for i in range(self.dim)] + ["re", "im"])
            for z, v in zip(self.nodes, self.values):
                w.writerow([repr(float(c)) for c in z] + [repr(v.real), repr(v.imag)])


@dataclass(frozen=True)
class GammaResult:
    value: float
    tail_bound: float
    box_max: tuple
    resolution: float  # upper allowance for the grid-vs-sup gap, inf if unknown

    @property
    def upper(self) -> float:
        return self.value + self.tail_bound + self.resolution


def _refine_box_max(diff, z0: np.ndarray, k: float, h: float) -> float:
    lo = np.maximum(z0 - h, -k)
    hi = np.minimum(z0 + h, k)
    if z0.size == 1:
        res = optimize.minimize_scalar(lambda x: -diff(np.array([[x]]))[0], bounds=(lo[0], hi[0]),
                                       method="bounded", options={"xatol": 1e-10})
        return float(-res.fun)
    res = optimize.minimize(lambda x: -diff(x[None, :])[0], z0, method="L-BFGS-B",
                            bounds=list(zip(lo, hi)))
    return float(-res.fun)


def gamma_metric(A: CharFnGrid, B: CharFnGrid, K_max: int | None = None,
                 refine: bool = True) -> GammaResult:
    """sum_{k<=K} 2^-k max|phi_A - phi_B| over [-k, k]^n, plus the 2 * 2^-K tail."""
    if A.nodes.shape != B.nodes.shape or not np.array_equal(A.nodes, B.nodes):
        raise ValueError("characteristic-function grids do not match")
    K = A.K_max if K_max is None else int(K_max)
    if K > A.K_max:
        raise ValueError("K_max exceeds the tabulated boxes")
    gap = np.abs(A.values - B.values)
    radius = np.max(np.abs(A.nodes), axis=1)
    order = np.argsort(radius, kind="stable")
    r_sorted = radius[order]
    g_sorted = gap[order]
    run_max = np.maximum.accumulate(g_sorted)
    run_arg = np.zeros(order.size, dtype=int)
    best = 0
    for i in range(order.size):
        if g_sorted[i] >= g_sorted[best]:
            best = i
        run_arg[i] = best
    can_refine = refine and A.func is not None and B.func is not None

    def diff(z):
        return np.abs(A.func(z) - B.func(z))

    maxima = []
    total = 0.0
    resolution = 0.0
    m1 = None
    if A.first_moment is not None and B.first_moment is not None:
        m1 = A.first_moment + B.first_moment
    for k in range(1, K + 1):
        idx = np.searchsorted(r_sorted, k + 1e-12, side="right") - 1
        val = float(run_max[idx]) if idx >= 0 else 0.0
        h = 2.0 * k / (A.per_axis - 1)
        if can_refine and idx >= 0 and val > 0:
            z0 = A.nodes[order[run_arg[idx]]]
            val = max(val, _refine_box_max(diff, z0, k, h))
        maxima.append(val)
        total += 2.0 ** -k * val
        if m1 is not None:
            resolution += 2.0 ** -k * min(2.0, m1 * h * math.sqrt(A.dim) / 2.0)
        else:
            resolution = math.inf
    if can_refine:
        resolution = 0.0 if A.dim == 1 else resolution
    return GammaResult(total, 2.0 * 2.0 ** -K, tuple(maxima), resolution)


# ---------------------------------------------------------------------------
# bounded-Lipschitz


def _merged_support(mu: EmpiricalMeasure, nu: EmpiricalMeasure):
    pts = np.concatenate([mu.points, nu.points])
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    inv = inv.ravel()
    signed = np.zeros(uniq.shape[0])
    np.add.at(signed, inv[:mu.size], mu.weights)
    np.add.at(signed, inv[mu.size:], -nu.weights)
    return uniq, signed


def bounded_lipschitz(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """sup over ||f||_BL <= 1 of |int f d(mu - nu)| for finite supports.

    The constraints |f_i| <= 1 - l and |f_i - f_j| <= l |s_i - s_j| are jointly
    linear in (f, l), so a single LP gives the exact optimum.
    """
    if abs(mu.mass - 1) > 1e-9 or abs(nu.mass - 1) > 1e-9:
        raise ValueError("bounded-Lipschitz distance needs probability measures")
    pts, signed = _merged_support(mu, nu)
    N = pts.shape[0]
    if N > BL_MAX_SUPPORT:
        raise SupportTooLargeError(f"combined support {N} exceeds {BL_MAX_SUPPORT}")
    if N == 1 or np.all(np.abs(signed) < 1e-15):
        return 0.0
    D = cdist(pts, pts)
    ii, jj = np.nonzero(~np.eye(N, dtype=bool))
    m = ii.size
    rows = np.concatenate([np.arange(m), np.arange(m), np.arange(m)])
    cols = np.concatenate([ii, jj, np.full(m, N)])
    vals = np.concatenate([np.ones(m), -np.ones(m), -D[ii, jj]])
    pair = sparse.csr_matrix((vals, (rows, cols)), shape=(m, N + 1))
    eye = sparse.hstack([sparse.identity(N), np.ones((N, 1))])
    neye = sparse.hstack([-sparse.identity(N), np.ones((N, 1))])
    A_ub = sparse.vstack([pair, eye, neye]).tocsr()
    b_ub = np.concatenate([np.zeros(m), np.ones(2 * N)])
    c = np.concatenate([-signed, [0.0]])
    bounds = [(None, None)] * N + [(0.0, 1.0)]
    res = optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise NumericalError(f"bounded-Lipschitz LP failed: {res.message}")
    return float(max(-res.fun, 0.0))


# ---------------------------------------------------------------------------
# Prokhorov


def _max_flow(mu_w, nu_w, adj) -> float:
    """Largest transport of mu into nu along allowed edges (transportation LP)."""
    ii, jj = np.nonzero(adj)
    if ii.size == 0:
        return 0.0
    n1, n2 = mu_w.size, nu_w.size
    e = ii.size
    A = sparse.vstack([
        sparse.csr_matrix((np.ones(e), (ii, np.arange(e))), shape=(n1, e)),
        sparse.csr_matrix((np.ones(e), (jj, np.arange(e))), shape=(n2, e)),
    ])
    res = optimize.linprog(-np.ones(e), A_ub=A, b_ub=np.concatenate([mu_w, nu_w]),
                           bounds=(0, None), method="highs")
    if res.status != 0:
        raise NumericalError(f"max-flow LP failed: {res.message}")
    return float(-res.fun)


def _deficiency_enum(mu_w, nu_w, adj) -> float:
    """max over subsets A of supp(mu) of mu(A) - nu(N(A)), and the same with roles swapped."""
    def one(a_w, b_w, adj_):
        best = 0.0
        n = a_w.size
        for r in range(1, n + 1):
            for sub in itertools.combinations(range(n), r):
                nb = np.any(adj_[list(sub)], axis=0)
                best = max(best, a_w[list(sub)].sum() - b_w[nb].sum())
        return best
    return max(one(mu_w, nu_w, adj), one(nu_w, mu_w, adj.T))


def prokhorov(mu: EmpiricalMeasure, nu: EmpiricalMeasure, method: str = "auto") -> float:
    """Prokhorov distance between finite measures (masses may differ).

    For e in (d_k, d_{k+1}] the open neighbourhoods A^e see exactly the pairs at
    distance <= d_k, so the worst violation h_k = max_A mu(A) - nu(A^e) is
    constant there and equals the max-flow deficiency. The distance is
    max(d_k, h_k) for the first k with h_k <= d_{k+1}.
    """
    if mu.size > PROKHOROV_MAX_SUPPORT or nu.size > PROKHOROV_MAX_SUPPORT:
        raise SupportTooLargeError(f"Prokhorov solver takes at most {PROKHOROV_MAX_SUPPORT} atoms")
    if mu.size == 0 and nu.size == 0:
        return 0.0
    if mu.size == 0 or nu.size == 0:
        return max(mu.mass, nu.mass)
    D = cdist(mu.points, nu.points)
    levels = np.concatenate([[0.0], np.unique(D)])
    use_enum = method == "enumerate" or (
        method == "auto" and max(mu.size, nu.size) <= ENUMERATION_MAX_ATOMS)
    total = max(mu.mass, nu.mass)

    def h(k):
        adj = D <= levels[k] if k > 0 else np.zeros_like(D, dtype=bool)
        if use_enum:
            return _deficiency_enum(mu.weights, nu.weights, adj)
        return max(total - _max_flow(mu.weights, nu.weights, adj), 0.0)

    def upper(k):
        return levels[k + 1] if k + 1 < levels.size else math.inf

    # h is non-increasing and d increasing: bisect for the first k with h_k <= d_{k+1}
    lo, hi = 0, levels.size - 1
    cache = {}

    def hk(k):
        if k not in cache:
            cache[k] = h(k)
        return cache[k]

    while lo < hi:
        mid = (lo + hi) // 2
        if hk(mid) <= upper(mid) + 1e-15:
            hi = mid
        else:
            lo = mid + 1
    return float(max(levels[lo], hk(lo)))


# ---------------------------------------------------------------------------
# Ky-Fan and Wasserstein


@dataclass(frozen=True)
class PairedSample:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.size == 0 or x.size != y.size:
            raise ValueError("paired sample needs equal, positive lengths")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def size(self) -> int:
        return self.x.size

    def gaps(self) -> np.ndarray:
        return np.abs(self.x - self.y)


def ky_fan_from_gaps(d) -> float:
    """Smallest e with #{D_i > e} / N <= e: min over k of max(D_(k+1), k/N), D sorted down."""
    d = np.sort(np.asarray(d, dtype=float).ravel())[::-1]
    n = d.size
    nxt = np.concatenate([d, [0.0]])  # nxt[k] = (k+1)-th largest
    cand = np.maximum(nxt, np.arange(n + 1) / n)
    return float(cand.min())


def ky_fan(s: PairedSample) -> float:
    return ky_fan_from_gaps(s.gaps())


def dkw_halfwidth(n: int, delta: float = 0.01) -> float:
    """Uniform confidence half-width for an empirical CDF of ``n`` draws."""
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def wasserstein_1d(mu: EmpiricalMeasure, nu: EmpiricalMeasure, p: float = 1.0) -> float:
    """(int_0^1 |F_mu^-1(u) - F_nu^-1(u)|^p du)^(1/p) via the monotone coupling."""
    if mu.dim != 1 or nu.dim != 1:
        raise ValueError("wasserstein_1d needs one-dimensional measures")
    if abs(mu.mass - nu.mass) > 1e-9 * max(1.0, mu.mass):
        raise ValueError("wasserstein_1d needs equal total masses")
    if p < 1:
        raise ValueError("p must be >= 1")
    xa, wa = mu.points[:, 0], mu.weights / mu.mass
    xb, wb = nu.points[:, 0], nu.weights / nu.mass
    oa, ob = np.argsort(xa), np.argsort(xb)
    xa, wa, xb, wb = xa[oa], wa[oa], xb[ob], wb[ob]
    ca, cb = np.cumsum(wa), np.cumsum(wb)
    ca[-1] = cb[-1] = 1.0
    cuts = np.unique(np.concatenate([[0.0], ca, cb]))
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    qa = xa[np.minimum(np.searchsorted(ca, mids), xa.size - 1)]
    qb = xb[np.minimum(np.searchsorted(cb, mids), xb.size - 1)]
    val = float(np.sum(np.diff(cuts) * np.abs(qa - qb) ** p)) * mu.mass
    return val ** (1.0 / p)
