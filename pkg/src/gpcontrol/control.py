"""Real control signals u(t) on [0, T] with exact L^r norms and cell averages."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq


class ControlDomainError(ValueError):
    pass


class ControlSignal:
    """Base class; subclasses define ``values``, ``integral`` and ``breaks``."""

    horizon: float | None = None

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        hi = math.inf if self.horizon is None else self.horizon
        if np.any(t < 0) or np.any(t > hi * (1 + 1e-12)):
            raise ControlDomainError(f"t outside [0, {hi}]")
        return t

    def __call__(self, t):
        t = self._check(t)
        v = self.values(t)
        return float(v) if v.ndim == 0 else v

    def eval(self, t):
        return self(t)

    def values(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def integral(self, a: float, b: float) -> float:
        raise NotImplementedError

    def breaks(self) -> list[float]:
        """Points where |u| may fail to be smooth (for adaptive quadrature)."""
        return []

    def cell_average(self, a: float, b: float) -> float:
        return self.integral(a, b) / (b - a)

    def cell_averages(self, times: np.ndarray) -> np.ndarray:
        return np.array([self.cell_average(a, b) for a, b in zip(times[:-1], times[1:])])

    def abs_integral(self, a: float, b: float, r: float = 1.0) -> float:
        """int_a^b |u|^r dt by adaptive quadrature split at breaks."""
        pts = sorted({a, b, *[p for p in self.breaks() if a < p < b]})
        pts = sorted(set(pts) | set(self._sign_changes(pts)))
        total = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            total += quad(lambda s: abs(float(self.values(np.asarray(s)))) ** r, lo, hi,
                          limit=500, epsabs=0.0, epsrel=1e-11)[0]
        return total

    def _sign_changes(self, pts, samples: int = 64):
        """Zeros of u inside each panel, where |u|^r has a kink."""
        out = []
        for lo, hi in zip(pts[:-1], pts[1:]):
            t = np.linspace(lo, hi, samples + 1)[1:-1]
            v = self.values(t)
            for i in np.nonzero(v[:-1] * v[1:] < 0)[0]:
                out.append(brentq(lambda s: float(self.values(np.asarray(s))), t[i], t[i + 1], xtol=1e-15))
        return out

    def lr_norm(self, r: float, horizon: float | None = None) -> float:
        T = self._horizon(horizon)
        if r < 1:
            raise ValueError("r must be >= 1")
        return self.abs_integral(0.0, T, r) ** (1.0 / r)

    def _horizon(self, horizon):
        T = horizon if horizon is not None else self.horizon
        if T is None:
            raise ValueError("an explicit horizon is required for an unbounded signal")
        return T

    def __add__(self, other):
        return Sum(terms=(self, other))

    def __mul__(self, c):
        return scale(self, c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Zero(ControlSignal):
    horizon: float | None = None

    def values(self, t):
        return np.zeros_like(t, dtype=float)

    def integral(self, a, b):
        return 0.0

    def lr_norm(self, r, horizon=None):
        return 0.0

    def to_json(self):
        return {"kind": "zero"}


@dataclass(frozen=True)
class PiecewiseConstant(ControlSignal):
    """values[i] on [breakpoints[i], breakpoints[i+1]), right-continuous."""

    breakpoints: tuple
    values_: tuple

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values_)
        if len(bp) != len(vals) + 1 or len(vals) == 0:
            raise ValueError("need len(breakpoints) == len(values) + 1 >= 2")
        if bp[0] != 0.0 or any(b1 <= b0 for b0, b1 in zip(bp[:-1], bp[1:])):
            raise ValueError("breakpoints must start at 0 and increase strictly")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values_", vals)

    @property
    def horizon(self):
        return self.breakpoints[-1]

    def values(self, t):
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.values_) - 1)
        return np.asarray(self.values_)[idx]

    def integral(self, a, b):
        bp = np.asarray(self.breakpoints)
        lo, hi = np.clip(bp[:-1], a, b), np.clip(bp[1:], a, b)
        return float(np.sum(np.asarray(self.values_) * (hi - lo)))

    def abs_integral(self, a, b, r=1.0):
        bp = np.asarray(self.breakpoints)
        lo, hi = np.clip(bp[:-1], a, b), np.clip(bp[1:], a, b)
        return float(np.sum(np.abs(self.values_) ** r * (hi - lo)))

    def breaks(self):
        return list(self.breakpoints)

    def to_json(self):
        return {"kind": "piecewise_constant", "breakpoints": list(self.breakpoints),
                "values": list(self.values_)}


def piecewise_constant(breakpoints, values) -> PiecewiseConstant:
    return PiecewiseConstant(tuple(breakpoints), tuple(values))


@dataclass(frozen=True)
class Sinusoid(ControlSignal):
    """amplitude * sin(2 pi frequency t + phase)."""

    amplitude: float
    frequency: float
    phase: float = 0.0
    horizon: float | None = None

    def values(self, t):
        return self.amplitude * np.sin(2 * np.pi * self.frequency * t + self.phase)

    def integral(self, a, b):
        w = 2 * np.pi * self.frequency
        if w == 0:
            return self.amplitude * np.sin(self.phase) * (b - a)
        return float(self.amplitude * (np.cos(w * a + self.phase) - np.cos(w * b + self.phase)) / w)

    def abs_integral(self, a, b, r=1.0):
        w = 2 * np.pi * self.frequency
        if r == 2 and w != 0:
            # sin^2 = (1 - cos(2 theta)) / 2
            s = (np.sin(2 * (w * b + self.phase)) - np.sin(2 * (w * a + self.phase))) / (2 * w)
            return float(self.amplitude ** 2 * ((b - a) - s) / 2)
        return super().abs_integral(a, b, r)

    def breaks(self):
        # zeros of the sine inside the domain keep the quadrature panels smooth
        if self.frequency == 0 or self.horizon is None:
            return []
        w = 2 * np.pi * self.frequency
        k0 = math.ceil(self.phase / np.pi)
        k1 = math.floor((w * self.horizon + self.phase) / np.pi)
        if k1 - k0 > 20000:
            return []
        return [(k * np.pi - self.phase) / w for k in range(k0, k1 + 1)]

    def to_json(self):
        return {"kind": "sinusoid", "amplitude": self.amplitude, "frequency": self.frequency,
                "phase": self.phase}


@dataclass(frozen=True)
class Sum(ControlSignal):
    terms: tuple = field(default_factory=tuple)

    @property
    def horizon(self):
        hs = [t.horizon for t in self.terms if t.horizon is not None]
        return min(hs) if hs else None

    def values(self, t):
        out = np.zeros_like(t, dtype=float)
        for term in self.terms:
            out = out + term.values(t)
        return out

    def integral(self, a, b):
        return float(sum(term.integral(a, b) for term in self.terms))

    def breaks(self):
        return sorted({p for term in self.terms for p in term.breaks()})

    def to_json(self):
        return {"kind": "sum", "terms": [t.to_json() for t in self.terms]}


def scale(u: ControlSignal, c: float) -> ControlSignal:
    if isinstance(u, Zero):
        return u
    if isinstance(u, PiecewiseConstant):
        return PiecewiseConstant(u.breakpoints, tuple(c * v for v in u.values_))
    if isinstance(u, Sinusoid):
        return Sinusoid(c * u.amplitude, u.frequency, u.phase, u.horizon)
    if isinstance(u, Sum):
        return Sum(tuple(scale(t, c) for t in u.terms))
    raise TypeError(type(u))


def with_horizon(u: ControlSignal, horizon: float) -> ControlSignal:
    """Attach a domain to signals that carry none (sinusoids, zero, sums of them)."""
    if isinstance(u, (Zero, Sinusoid)):
        return type(u)(**{**u.__dict__, "horizon": horizon})
    if isinstance(u, Sum):
        return Sum(tuple(with_horizon(t, horizon) for t in u.terms))
    return u


def weak_family(base: ControlSignal, n: int) -> ControlSignal:
    """u_n = base + sin(2 pi n t): converges weakly (not strongly) to base."""
    return Sum((base, Sinusoid(1.0, float(n), 0.0, base.horizon)))


def from_json(d: dict, horizon: float | None = None) -> ControlSignal:
    kind = d.get("kind")
    if kind == "zero":
        u = Zero()
    elif kind == "piecewise_constant":
        u = piecewise_constant(d["breakpoints"], d["values"])
    elif kind == "sinusoid":
        u = Sinusoid(float(d["amplitude"]), float(d["frequency"]), float(d.get("phase", 0.0)))
    elif kind == "sum":
        u = Sum(tuple(from_json(t) for t in d["terms"]))
    else:
        raise ValueError(f"unknown control kind {kind!r}")
    return with_horizon(u, horizon) if horizon is not None else u


def random_piecewise(rng: np.random.Generator, horizon: float, pieces: int, l2_bound: float | None = None,
                     scale_: float = 1.0) -> PiecewiseConstant:
    """Equal-width pieces with Gaussian values; optionally rescaled to a random L^2 norm <= l2_bound."""
    vals = scale_ * rng.standard_normal(pieces)
    bp = np.linspace(0.0, horizon, pieces + 1)
    if l2_bound is not None:
        norm = np.sqrt(np.sum(vals ** 2) * horizon / pieces)
        vals = vals * (l2_bound * rng.uniform(0.0, 1.0) / norm)
    return piecewise_constant(bp, vals)
