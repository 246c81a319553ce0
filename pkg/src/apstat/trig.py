"""Trigonometric polynomials used as almost periodic coefficients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TrigPolynomial:
    """mu(t) = c0 + sum_k c_k cos(omega_k t + phi_k).

    ``terms`` holds ``(amplitude, frequency, phase)`` triples with frequency > 0.
    """

    c0: float = 0.0
    terms: tuple[tuple[float, float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        terms = tuple((float(c), float(w), float(p)) for c, w, p in self.terms)
        for _, w, _ in terms:
            if not w > 0:
                raise ValueError(f"frequencies must be positive, got {w}")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "c0", float(self.c0))

    @classmethod
    def constant(cls, c0: float) -> "TrigPolynomial":
        return cls(c0, ())

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c for c, _, _ in self.terms], dtype=float)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([w for _, w, _ in self.terms], dtype=float)

    @property
    def phases(self) -> np.ndarray:
        return np.array([p for _, _, p in self.terms], dtype=float)

    @property
    def is_constant(self) -> bool:
        return all(c == 0.0 for c, _, _ in self.terms)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.c0)
        for c, w, p in self.terms:
            out = out + c * np.cos(w * t + p)
        return out

    def antiderivative(self, t):
        """Z(t) = int_0^t mu(s) ds, in closed form."""
        t = np.asarray(t, dtype=float)
        out = self.c0 * t
        for c, w, p in self.terms:
            out = out + (c / w) * (np.sin(w * t + p) - np.sin(p))
        return out

    def sup_bound(self) -> float:
        """|c0| + sum |c_k|, an upper bound for sup |mu|."""
        return abs(self.c0) + float(np.abs(self.amplitudes).sum())

    def mean(self) -> float:
        """Mean value lim (1/2T) int_{-T}^T mu."""
        return self.c0

    def oscillation_bound(self) -> float:
        """Bound B with |Z(t) - Z(s) - c0 (t - s)| <= B for all s, t."""
        amps, freqs = self.amplitudes, self.frequencies
        return float(2.0 * np.sum(np.abs(amps) / freqs)) if amps.size else 0.0

    def shortest_period(self) -> float:
        if not self.terms:
            return 1.0
        return float(2 * np.pi / self.frequencies.max())

    def longest_period(self) -> float:
        if not self.terms:
            return 1.0
        return float(2 * np.pi / self.frequencies.min())

    def beat_period(self) -> float:
        """Longest period among the terms and their pairwise frequency differences."""
        freqs = np.unique(self.frequencies)
        if freqs.size == 0:
            return 1.0
        cands = list(freqs)
        for i in range(freqs.size):
            for j in range(i + 1, freqs.size):
                cands.append(abs(freqs[j] - freqs[i]))
        return float(2 * np.pi / min(cands))

    def displacement_bound(self, tau):
        """sup_t |mu(t + tau) - mu(t)| <= sum_k 2 |c_k sin(omega_k tau / 2)|.

        Equality holds when the frequencies are rationally independent.
        """
        tau = np.asarray(tau, dtype=float)
        out = np.zeros(tau.shape)
        for c, w, _ in self.terms:
            out = out + 2.0 * abs(c) * np.abs(np.sin(0.5 * w * tau))
        return out

    def mean_lag_product(self, s):
        """Mean value in t of mu(t) mu(t + s).

        Only pairs of terms sharing a frequency survive time averaging.
        """
        s = np.asarray(s, dtype=float)
        out = np.full(s.shape, self.c0 ** 2)
        for c1, w1, p1 in self.terms:
            for c2, w2, p2 in self.terms:
                if w1 == w2:
                    out = out + 0.5 * c1 * c2 * np.cos(w1 * s + p2 - p1)
        return out

    def mean_window_T0(self, fraction: float = 0.5, t_max: float | None = None,
                       n_starts: int = 512) -> float:
        """Scan for T0 such that (1/T) int_x^{x+T} mu < -fraction * C for all T >= T0.

        Only meaningful for c0 < 0. The scan covers starts x in one beat
        period and lengths T up to ``t_max``.
        """
        C = -self.c0
        if C <= 0:
            raise ValueError("mean of mu must be negative")
        if self.is_constant:
            return 0.0
        beat = self.beat_period()
        t_max = t_max or 40.0 * beat
        xs = np.linspace(0.0, beat, n_starts)
        Ts = np.linspace(beat / 200.0, t_max, 4000)
        worst = np.empty(Ts.size)
        for i, T in enumerate(Ts):
            avg = (self.antiderivative(xs + T) - self.antiderivative(xs)) / T
            worst[i] = avg.max()
        bad = np.nonzero(worst >= -fraction * C)[0]
        if bad.size == 0:
            return float(Ts[0])
        if bad[-1] == Ts.size - 1:
            raise RuntimeError("window scan did not find T0; increase t_max")
        return float(Ts[bad[-1] + 1])
