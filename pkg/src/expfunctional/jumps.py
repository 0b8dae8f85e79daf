"""Parametric Lévy jump measures with closed-form tails and jump integrals.

Every family is of bounded variation, so the jump integral is returned in the
uncompensated form ``J(s) = ∫ (e^{sy} - 1) Π(dy)``; the compensator
``s ∫_{|y|<1} y Π(dy)`` is accounted for by :class:`~expfunctional.exponents.LevyModel`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
from scipy import integrate
from scipy.special import gammainc, gammaincc, ndtr

from .errors import ParameterViolation, SchemaError, Unsupported

INF = math.inf


class JumpSpec:
    """Interface shared by the jump families."""

    family = "abstract"

    def strip(self):
        return (-INF, INF)

    def integral(self, s):
        raise NotImplementedError

    def integral_mp(self, s):
        raise Unsupported(f"{self.family}: no multiprecision jump integral")

    def truncated_mean(self):
        """∫_{|y|<1} y Π(dy)."""
        raise NotImplementedError

    def mean(self):
        """∫ y Π(dy)."""
        raise NotImplementedError

    def tail_pos(self, y):
        """Π̄₊(y) = Π((y, ∞)) for y > 0."""
        return np.zeros_like(np.asarray(y, dtype=float))

    def tail_neg(self, y):
        """Π̄₋(y) = Π((-∞, y)) for y < 0."""
        return np.zeros_like(np.asarray(y, dtype=float))

    def density(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    @property
    def nonincreasing_positive(self):
        """True when the restriction to (0, ∞) has a non-increasing density."""
        return True

    @property
    def has_positive(self):
        return False

    @property
    def has_negative(self):
        return False

    @property
    def finite_activity(self):
        return True

    # --- simulation support -------------------------------------------------
    def rate(self, eps=0.0):
        """Total mass of jumps with |y| >= eps (eps ignored for finite activity)."""
        return 0.0

    def small_moments(self, eps):
        """(∫_{|y|<eps} y Π(dy), ∫_{|y|<eps} y² Π(dy))."""
        return 0.0, 0.0

    def sample(self, rng, n, eps=0.0):
        """Draw ``n`` jump sizes from Π restricted to |y| >= eps, normalised."""
        return np.zeros(n)

    def to_dict(self):
        return {"family": "none"}


@dataclass(frozen=True)
class NoJumps(JumpSpec):
    family = "none"

    def integral(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def integral_mp(self, s):
        return mp.mpf(0)

    def truncated_mean(self):
        return 0.0

    def mean(self):
        return 0.0


@dataclass(frozen=True)
class HyperExponential(JumpSpec):
    """Mixture of exponential jumps on each side.

    ``pos`` and ``neg`` are tuples of ``(rate, decay)`` pairs; the density is
    ``Σ rate·decay·e^{-decay·|y|}`` on the corresponding half-line.
    """

    pos: tuple = ()
    neg: tuple = ()
    family = "hyperexponential"

    def __post_init__(self):
        pos = tuple((float(a), float(b)) for a, b in self.pos if a > 0)
        neg = tuple((float(a), float(b)) for a, b in self.neg if a > 0)
        for lam, eta in pos + neg:
            if lam < 0 or eta <= 0:
                raise ParameterViolation("hyperexponential needs rate >= 0 and decay > 0")
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "neg", neg)

    def strip(self):
        hi = min((eta for _, eta in self.pos), default=INF)
        lo = -min((eta for _, eta in self.neg), default=INF)
        return (lo, hi)

    def integral(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for lam, eta in self.pos:
            out = out + lam * s / (eta - s)
        for lam, eta in self.neg:
            out = out - lam * s / (eta + s)
        return out

    def integral_mp(self, s):
        s = mp.mpf(s)
        out = mp.mpf(0)
        for lam, eta in self.pos:
            out += mp.mpf(lam) * s / (mp.mpf(eta) - s)
        for lam, eta in self.neg:
            out -= mp.mpf(lam) * s / (mp.mpf(eta) + s)
        return out

    @staticmethod
    def _unit_mean(lam, eta):
        return lam * (-math.expm1(-eta) - eta * math.exp(-eta)) / eta

    def truncated_mean(self):
        return sum(self._unit_mean(*p) for p in self.pos) - sum(self._unit_mean(*p) for p in self.neg)

    def mean(self):
        return sum(lam / eta for lam, eta in self.pos) - sum(lam / eta for lam, eta in self.neg)

    def tail_pos(self, y):
        y = np.asarray(y, dtype=float)
        return sum((lam * np.exp(-eta * y) for lam, eta in self.pos), np.zeros_like(y))

    def tail_neg(self, y):
        y = np.asarray(y, dtype=float)
        return sum((lam * np.exp(eta * y) for lam, eta in self.neg), np.zeros_like(y))

    def density(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for lam, eta in self.pos:
            out = out + np.where(y > 0, lam * eta * np.exp(-eta * np.abs(y)), 0.0)
        for lam, eta in self.neg:
            out = out + np.where(y < 0, lam * eta * np.exp(-eta * np.abs(y)), 0.0)
        return out

    @property
    def has_positive(self):
        return bool(self.pos)

    @property
    def has_negative(self):
        return bool(self.neg)

    def rate(self, eps=0.0):
        return sum(lam for lam, _ in self.pos + self.neg)

    def sample(self, rng, n, eps=0.0):
        comps = self.pos + self.neg
        signs = np.array([1.0] * len(self.pos) + [-1.0] * len(self.neg))
        rates = np.array([lam for lam, _ in comps])
        decays = np.array([eta for _, eta in comps])
        k = rng.choice(len(comps), size=n, p=rates / rates.sum())
        return signs[k] * rng.exponential(1.0, size=n) / decays[k]

    def to_dict(self):
        if len(self.pos) <= 1 and len(self.neg) <= 1:
            lp, ep = self.pos[0] if self.pos else (0.0, 1.0)
            lm, em = self.neg[0] if self.neg else (0.0, 1.0)
            return {"family": "exponential-two-sided", "lambda_plus": lp, "eta_plus": ep,
                    "lambda_minus": lm, "eta_minus": em}
        return {"family": "hyperexponential", "pos": [list(p) for p in self.pos],
                "neg": [list(p) for p in self.neg]}


def exponential_two_sided(lambda_plus, eta_plus, lambda_minus, eta_minus):
    """Density λ₊η₊e^{-η₊y}1{y>0} + λ₋η₋e^{η₋y}1{y<0}."""
    return HyperExponential(pos=((lambda_plus, eta_plus),), neg=((lambda_minus, eta_minus),))


@dataclass(frozen=True)
class TiltedStable(JumpSpec):
    """Tempered stable jumps on one side, ``c·α/Γ(1-α)·e^{-γ|y|}|y|^{-α-1}``.

    ``side=+1`` puts mass on (0, ∞); ``side=-1`` mirrors it to (-∞, 0).
    """

    c: float
    alpha: float
    gamma: float
    side: int = 1

    @property
    def family(self):
        return "tilted-stable-tail" if self.side > 0 else "spectrally-negative-parametric"

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ParameterViolation("tilted stable index must lie in (0, 1)")
        if self.c < 0 or self.gamma <= 0:
            raise ParameterViolation("tilted stable needs c >= 0 and gamma > 0")
        if self.side not in (1, -1):
            raise ParameterViolation("side must be +1 or -1")

    @property
    def _norm(self):
        return self.c * self.alpha / math.gamma(1.0 - self.alpha)

    def strip(self):
        return (-INF, self.gamma) if self.side > 0 else (-self.gamma, INF)

    def integral(self, s):
        u = self.side * np.asarray(s, dtype=float)
        a, g = self.alpha, self.gamma
        with np.errstate(invalid="ignore", divide="ignore"):
            return -self.c * g ** a * np.expm1(a * np.log1p(-u / g))

    def integral_mp(self, s):
        u = self.side * mp.mpf(s)
        a, g = mp.mpf(self.alpha), mp.mpf(self.gamma)
        return -mp.mpf(self.c) * g ** a * mp.expm1(a * mp.log1p(-u / g))

    def truncated_mean(self):
        a, g = self.alpha, self.gamma
        return self.side * self.c * a * g ** (a - 1.0) * gammainc(1.0 - a, g)

    def mean(self):
        return self.side * self.c * self.alpha * self.gamma ** (self.alpha - 1.0)

    def _tail(self, r):
        a, g = self.alpha, self.gamma
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return self.c * (r ** (-a) * np.exp(-g * r) / math.gamma(1.0 - a)
                             - g ** a * gammaincc(1.0 - a, g * r))

    def tail_pos(self, y):
        y = np.asarray(y, dtype=float)
        return self._tail(y) if self.side > 0 else np.zeros_like(y)

    def tail_neg(self, y):
        y = np.asarray(y, dtype=float)
        return self._tail(-y) if self.side < 0 else np.zeros_like(y)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        r = self.side * y
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            d = self._norm * np.exp(-self.gamma * r) * r ** (-self.alpha - 1.0)
        return np.where(r > 0, d, 0.0)

    @property
    def has_positive(self):
        return self.side > 0 and self.c > 0

    @property
    def has_negative(self):
        return self.side < 0 and self.c > 0

    @property
    def finite_activity(self):
        return False

    def rate(self, eps=0.0):
        if eps <= 0:
            return INF
        return float(self._tail(eps))

    def small_moments(self, eps):
        a, g = self.alpha, self.gamma
        m1 = self.c * a * g ** (a - 1.0) * gammainc(1.0 - a, g * eps)
        m2 = self.c * a * (1.0 - a) * g ** (a - 2.0) * gammainc(2.0 - a, g * eps)
        return self.side * m1, m2

    def sample(self, rng, n, eps=0.0):
        # Pareto(α, eps) proposal, accept with e^{-γ(y-eps)}
        if eps <= 0:
            raise ParameterViolation("infinite-activity sampling needs eps > 0")
        out = np.empty(n)
        filled = 0
        while filled < n:
            m = max(2 * (n - filled), 64)
            y = eps * rng.random(m) ** (-1.0 / self.alpha)
            keep = y[rng.random(m) < np.exp(-self.gamma * (y - eps))]
            take = min(keep.size, n - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        return self.side * out

    def to_dict(self):
        return {"family": self.family, "c": self.c, "alpha": self.alpha, "gamma": self.gamma}


def _expm1_minus_x(x):
    """e^x - 1 - x, by series where the subtraction would cancel."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-2
    t = np.where(small, x, 0.0)
    series = t * t * (0.5 + t * (1 / 6 + t * (1 / 24 + t * (1 / 120 + t / 720))))
    return np.where(small, series, np.expm1(x) - x)


@dataclass(frozen=True)
class CompoundPoisson(JumpSpec):
    """Finite-rate jumps with a normal or uniform size law."""

    rate_: float
    law: str
    params: tuple
    family = "compound-poisson"

    def __post_init__(self):
        if self.rate_ <= 0:
            raise ParameterViolation("compound-poisson rate must be > 0")
        if self.law == "normal":
            mu, sd = self.params
            if sd <= 0:
                raise ParameterViolation("normal jump sd must be > 0")
        elif self.law == "uniform":
            lo, hi = self.params
            if not lo < hi:
                raise ParameterViolation("uniform jump law needs lo < hi")
        else:
            raise SchemaError(f"unknown compound-poisson law {self.law!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    def _mgf(self, s, lib=np):
        if self.law == "normal":
            mu, sd = self.params
            return lib.exp(mu * s + 0.5 * sd * sd * s * s)
        lo, hi = self.params
        if lib is np:
            s = np.asarray(s, dtype=float)
            with np.errstate(invalid="ignore", divide="ignore"):
                v = (np.exp(s * hi) - np.exp(s * lo)) / (s * (hi - lo))
            return np.where(s == 0, 1.0, v)
        if s == 0:
            return mp.mpf(1)
        return (mp.exp(s * hi) - mp.exp(s * lo)) / (s * (hi - lo))

    def integral(self, s):
        # excess over 1 computed directly, so tiny s keeps its sign
        s = np.asarray(s, dtype=float)
        if self.law == "normal":
            mu, sd = self.params
            return self.rate_ * np.expm1(mu * s + 0.5 * sd * sd * s * s)
        lo, hi = self.params
        a, b = s * lo, s * hi
        with np.errstate(invalid="ignore", divide="ignore"):
            v = (_expm1_minus_x(b) - _expm1_minus_x(a)) / (b - a)
        return self.rate_ * np.where(s == 0, 0.0, v)

    def integral_mp(self, s):
        with mp.extradps(40):
            v = mp.mpf(self.rate_) * (self._mgf(mp.mpf(s), lib=mp) - 1)
        return +v

    def truncated_mean(self):
        if self.law == "normal":
            mu, sd = self.params
            a, b = (-1.0 - mu) / sd, (1.0 - mu) / sd
            phi = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
            return self.rate_ * (mu * (ndtr(b) - ndtr(a)) + sd * (phi(a) - phi(b)))
        lo, hi = self.params
        a, b = max(lo, -1.0), min(hi, 1.0)
        if a >= b:
            return 0.0
        return self.rate_ * (b * b - a * a) / (2.0 * (hi - lo))

    def mean(self):
        if self.law == "normal":
            return self.rate_ * self.params[0]
        return self.rate_ * 0.5 * (self.params[0] + self.params[1])

    def _cdf(self, y):
        y = np.asarray(y, dtype=float)
        if self.law == "normal":
            mu, sd = self.params
            return ndtr((y - mu) / sd)
        lo, hi = self.params
        return np.clip((y - lo) / (hi - lo), 0.0, 1.0)

    def tail_pos(self, y):
        return self.rate_ * (1.0 - self._cdf(y))

    def tail_neg(self, y):
        return self.rate_ * self._cdf(y)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        if self.law == "normal":
            mu, sd = self.params
            return self.rate_ * np.exp(-0.5 * ((y - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
        lo, hi = self.params
        return np.where((y >= lo) & (y <= hi), self.rate_ / (hi - lo), 0.0)

    @property
    def nonincreasing_positive(self):
        if self.law == "normal":
            return self.params[0] <= 0.0
        return self.params[0] <= 0.0 or self.params[1] <= 0.0

    @property
    def has_positive(self):
        return self.law == "normal" or self.params[1] > 0

    @property
    def has_negative(self):
        return self.law == "normal" or self.params[0] < 0

    def rate(self, eps=0.0):
        return self.rate_

    def sample(self, rng, n, eps=0.0):
        if self.law == "normal":
            mu, sd = self.params
            return rng.normal(mu, sd, size=n)
        return rng.uniform(*self.params, size=n)

    def to_dict(self):
        d = {"family": self.family, "rate": self.rate_, "law": self.law}
        if self.law == "normal":
            d.update(mu=self.params[0], sd=self.params[1])
        else:
            d.update(lo=self.params[0], hi=self.params[1])
        return d


@dataclass(frozen=True)
class Composite(JumpSpec):
    """Superposition of independent jump families."""

    parts: tuple = field(default_factory=tuple)
    family = "composite"

    def strip(self):
        lo, hi = -INF, INF
        for p in self.parts:
            a, b = p.strip()
            lo, hi = max(lo, a), min(hi, b)
        return (lo, hi)

    def integral(self, s):
        s = np.asarray(s, dtype=float)
        return sum((p.integral(s) for p in self.parts), np.zeros_like(s))

    def integral_mp(self, s):
        return mp.fsum(p.integral_mp(s) for p in self.parts)

    def truncated_mean(self):
        return sum(p.truncated_mean() for p in self.parts)

    def mean(self):
        return sum(p.mean() for p in self.parts)

    def tail_pos(self, y):
        y = np.asarray(y, dtype=float)
        return sum((p.tail_pos(y) for p in self.parts), np.zeros_like(y))

    def tail_neg(self, y):
        y = np.asarray(y, dtype=float)
        return sum((p.tail_neg(y) for p in self.parts), np.zeros_like(y))

    def density(self, y):
        y = np.asarray(y, dtype=float)
        return sum((p.density(y) for p in self.parts), np.zeros_like(y))

    @property
    def nonincreasing_positive(self):
        # a sum of non-increasing densities is non-increasing
        return all(p.nonincreasing_positive for p in self.parts)

    @property
    def has_positive(self):
        return any(p.has_positive for p in self.parts)

    @property
    def has_negative(self):
        return any(p.has_negative for p in self.parts)

    @property
    def finite_activity(self):
        return all(p.finite_activity for p in self.parts)

    def rate(self, eps=0.0):
        return sum(p.rate(eps) for p in self.parts)

    def small_moments(self, eps):
        m = [p.small_moments(eps) for p in self.parts if not p.finite_activity]
        return sum(a for a, _ in m), sum(b for _, b in m)

    def sample(self, rng, n, eps=0.0):
        rates = np.array([p.rate(eps) for p in self.parts])
        k = rng.choice(len(self.parts), size=n, p=rates / rates.sum())
        out = np.empty(n)
        for i, p in enumerate(self.parts):
            idx = np.flatnonzero(k == i)
            if idx.size:
                out[idx] = p.sample(rng, idx.size, eps)
        return out

    def to_dict(self):
        return {"family": "composite", "parts": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True)
class TransformedJumps(JumpSpec):
    """Jump measure ``e^{βy}(Π(dy) - βΠ̄₊(y)dy + βΠ̄₋(y)dy 1{y<0})`` of a tilted base.

    The killing-induced exponential part is kept separately (see
    :func:`~expfunctional.exponents.transformed_model`).
    """

    base: JumpSpec
    beta: float
    family = "transformed"

    def strip(self):
        lo, hi = self.base.strip()
        return (lo - self.beta, hi - self.beta)

    def integral(self, s):
        s = np.asarray(s, dtype=float)
        u = s + self.beta
        with np.errstate(invalid="ignore", divide="ignore"):
            return s * self.base.integral(u) / u

    def integral_mp(self, s):
        s = mp.mpf(s)
        u = s + self.beta
        return s * self.base.integral_mp(u) / u

    def density(self, y):
        y = np.asarray(y, dtype=float)
        b = self.beta
        pos = self.base.density(y) - b * self.base.tail_pos(np.where(y > 0, y, 1.0))
        neg = self.base.density(y) + b * self.base.tail_neg(np.where(y < 0, y, -1.0))
        with np.errstate(over="ignore"):
            w = np.exp(b * y)
        return np.where(y > 0, w * pos, np.where(y < 0, w * neg, 0.0))

    def tail_pos(self, y):
        y = np.asarray(y, dtype=float)
        return np.exp(self.beta * y) * self.base.tail_pos(y)

    def tail_neg(self, y):
        y = np.asarray(y, dtype=float)
        return np.exp(self.beta * y) * self.base.tail_neg(y)

    def truncated_mean(self):
        # integrate y against -dT by parts, T the transformed tail
        tp = lambda y: float(self.tail_pos(y))
        tn = lambda y: float(self.tail_neg(y))
        opts = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
        pos = -tp(1.0) + integrate.quad(tp, 0.0, 1.0, **opts)[0]
        neg = tn(-1.0) - integrate.quad(tn, -1.0, 0.0, **opts)[0]
        return pos + neg

    def mean(self):
        return float(self.base.integral(self.beta)) / self.beta

    @property
    def nonincreasing_positive(self):
        return self.base.nonincreasing_positive

    @property
    def has_positive(self):
        return self.base.has_positive

    @property
    def has_negative(self):
        return self.base.has_negative

    @property
    def finite_activity(self):
        return self.base.finite_activity

    def to_dict(self):
        return {"family": "transformed", "beta": self.beta, "base": self.base.to_dict()}


def jumps_from_dict(d):
    """Build a jump family from its JSON description."""
    if d is None:
        return NoJumps()
    fam = d.get("family")
    try:
        if fam == "none":
            return NoJumps()
        if fam == "exponential-two-sided":
            return exponential_two_sided(d["lambda_plus"], d["eta_plus"], d["lambda_minus"], d["eta_minus"])
        if fam == "hyperexponential":
            return HyperExponential(pos=tuple(map(tuple, d.get("pos", []))),
                                    neg=tuple(map(tuple, d.get("neg", []))))
        if fam == "tilted-stable-tail":
            return TiltedStable(d["c"], d["alpha"], d["gamma"], 1)
        if fam == "spectrally-negative-parametric":
            return TiltedStable(d["c"], d["alpha"], d["gamma"], -1)
        if fam == "compound-poisson":
            if d["law"] == "normal":
                return CompoundPoisson(d["rate"], "normal", (d["mu"], d["sd"]))
            return CompoundPoisson(d["rate"], d["law"], (d["lo"], d["hi"]))
        if fam == "composite":
            return Composite(tuple(jumps_from_dict(p) for p in d["parts"]))
        if fam == "transformed":
            return TransformedJumps(jumps_from_dict(d["base"]), d["beta"])
    except KeyError as exc:
        raise SchemaError(f"jump family {fam!r} missing parameter {exc}") from exc
    raise SchemaError(f"unknown jump family {fam!r}")
