"""Stable processes: the Lamperti-type exponent and first-passage diagnostics.

Stable variables follow the scale-1 characteristic function
``exp(-|u|^α (1 - iβ sgn(u) tan(πα/2)))``, with skewness β tied to the
positivity parameter by ρ = 1/2 + arctan(β tan(πα/2))/(πα).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
from scipy.special import gammaln, gammasgn

from .errors import Inadmissible, Unsupported
from .exponents import LaplaceExponent, LevyModel
from .jumps import NoJumps
from .ladders import spectrally_onesided_factors
from .simulation import DEFAULT_SEED, rng_for, sample_functional


@dataclass(frozen=True)
class StableParams:
    alpha: float
    rho: float

    def __post_init__(self):
        a, r = self.alpha, self.rho
        if not (0 < a <= 2) or not (0 <= r <= 1):
            raise Inadmissible("need alpha in (0, 2] and rho in [0, 1]")
        if a > 1 and not (1 - 1 / a - 1e-12 <= r <= 1 / a + 1e-12):
            raise Inadmissible("for alpha > 1, rho must lie in [1 - 1/alpha, 1/alpha]")
        if a == 2 and abs(r - 0.5) > 1e-12:
            raise Inadmissible("alpha = 2 forces rho = 1/2")

    @property
    def spectrally_positive(self):
        return self.alpha > 1 and abs(self.rho - (1 - 1 / self.alpha)) < 1e-12

    @property
    def spectrally_negative(self):
        return self.alpha > 1 and abs(self.rho - 1 / self.alpha) < 1e-12

    @property
    def skewness(self):
        a = self.alpha
        if a == 1:
            return 0.0 if abs(self.rho - 0.5) < 1e-12 else math.nan
        if a == 2:
            return 0.0
        return math.tan(math.pi * a * (self.rho - 0.5)) / math.tan(math.pi * a / 2)


def _gamma_ratio(num, den):
    """∏Γ(num)/∏Γ(den) in log space; a pole in the denominator gives 0."""
    logv, sign, zero = 0.0, 1.0, False
    for x in num:
        logv = logv + gammaln(x)
        sign = sign * gammasgn(x)
    for x in den:
        x = np.asarray(x, dtype=float)
        zero = zero | ((x <= 0) & (x == np.round(x)))
        xs = np.where(zero, 0.5, x)
        logv = logv - gammaln(xs)
        sign = sign * gammasgn(xs)
    return np.where(zero, 0.0, sign * np.exp(logv))


def lamperti_kill(p: StableParams) -> float:
    a, ar = p.alpha, p.alpha * p.rho
    return float(_gamma_ratio((a,), (ar, 1 - ar)))


def lamperti_exponent(p: StableParams):
    """(Ψ_q, q) with Ψ_q(s) = Ψ^α(s) - q on (-1/α, 1)."""
    a, ar = p.alpha, p.alpha * p.rho
    if ar > 1 + 1e-12:
        raise Inadmissible("need alpha*rho <= 1")
    q = lamperti_kill(p)

    def fn(s):
        s = np.asarray(s, dtype=float)
        v = -_gamma_ratio((a - a * s, a * s + 1), (ar - a * s, a * s + 1 - ar))
        return float(v) if v.ndim == 0 else v

    def mp_fn(s):
        s = mp.mpf(s)
        return -mp.gamma(a - a * s) * mp.gamma(a * s + 1) * mp.rgamma(ar - a * s) * mp.rgamma(a * s + 1 - ar)

    return LaplaceExponent(fn, (-1.0 / a, 1.0), q, "stable-lamperti", None, mp_fn), q


def lamperti_model(p: StableParams) -> LevyModel:
    """Triplet of the Lamperti process where it is available (α = 2: σ² = 8, b = -2)."""
    if p.alpha == 2:
        return LevyModel(-2.0, 8.0, NoJumps(), 0.0)
    raise Unsupported("Lamperti jump measure not available for this (alpha, rho)")


def gamma_q(p: StableParams) -> float:
    """γ_q for the spectrally positive stable case, from the root-based factors."""
    if not p.spectrally_positive:
        raise Inadmissible("gamma_q is defined here for rho = 1 - 1/alpha")
    psi, _ = lamperti_exponent(p)
    return spectrally_onesided_factors(psi, case="iv")[2]


# --- sampling ---------------------------------------------------------------------

def stable_variates(rng, alpha, beta, size):
    """Chambers–Mallows–Stuck sampler, scale 1."""
    V = rng.uniform(-math.pi / 2, math.pi / 2, size)
    W = rng.exponential(1.0, size)
    if alpha == 1:
        if beta != 0:
            raise Unsupported("asymmetric alpha = 1 is not supported")
        return np.tan(V)
    if alpha == 2:
        return math.sqrt(2.0) * rng.standard_normal(size)
    t = beta * math.tan(math.pi * alpha / 2)
    B = math.atan(t) / alpha
    S = (1 + t * t) ** (1 / (2 * alpha))
    u = alpha * (V + B)
    return S * np.sin(u) / np.cos(V) ** (1 / alpha) * (np.cos(V - u) / W) ** ((1 - alpha) / alpha)


def sample_supremum(p: StableParams, N, seed=DEFAULT_SEED, steps=1000, chunk=2000):
    """S₁ = sup_{t≤1} Z_t on a uniform grid of ``steps`` points."""
    out = np.empty(N)
    beta = p.skewness
    h = (1.0 / steps) ** (1.0 / p.alpha)
    for r, start in enumerate(range(0, N, chunk)):
        n = min(chunk, N - start)
        rng = rng_for(seed, 7, r)
        inc = h * stable_variates(rng, p.alpha, beta, (n, steps))
        path = np.cumsum(inc, axis=1)
        out[start:start + n] = np.maximum(path.max(axis=1), 0.0)
    return out


# --- diagnostics --------------------------------------------------------------------

def histogram_density(x, edges):
    counts, _ = np.histogram(x, bins=edges)
    w = np.diff(edges)
    p = counts / x.size
    return p / w, np.sqrt(p * (1 - p) / x.size) / w


def nonincreasing_test(dens, se, k=3.0):
    """No bin exceeds its left neighbour by more than k combined standard errors."""
    up = dens[1:] - dens[:-1]
    return bool(np.all(up < k * np.hypot(se[1:], se[:-1])))


def logconvex_test(dens, se, k=3.0):
    with np.errstate(divide="ignore", invalid="ignore"):
        ld = np.log(dens)
        sl = se / dens
    d2 = ld[2:] - 2 * ld[1:-1] + ld[:-2]
    tol = k * np.sqrt(sl[2:] ** 2 + 4 * sl[1:-1] ** 2 + sl[:-2] ** 2)
    return bool(np.all(d2 > -tol))


@dataclass
class PassageResult:
    params: StableParams
    T1: np.ndarray
    route: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def S1_alpha(self):
        return 1.0 / self.T1


def passage_time_law(p: StableParams, N, seed=DEFAULT_SEED, steps=1000, bins=20, **kw) -> PassageResult:
    """Law of T₁ (and of S₁^α = 1/T₁) with the monotonicity diagnostics.

    α = 2 goes through the exponential functional of the Lamperti process;
    other indices use a grid simulation of the stable path.
    """
    if p.alpha == 2:
        kw.setdefault("dt", 1e-3)
        T1 = sample_functional(lamperti_model(p), N, seed=seed, **kw).draws
        route = "lamperti"
    else:
        S1 = sample_supremum(p, N, seed=seed, steps=steps)
        with np.errstate(divide="ignore"):
            T1 = np.where(S1 > 0, S1 ** (-p.alpha), np.inf)
        route = f"stable-grid({steps})"
    res = PassageResult(p, T1, route)
    finite = T1[np.isfinite(T1)]
    if p.alpha < 1 and p.rho <= 1 / p.alpha - 1 + 1e-12:
        edges = np.linspace(0.0, np.quantile(finite, 0.9), bins + 1)
        d, se = histogram_density(finite, edges)
        res.diagnostics["T1_nonincreasing"] = nonincreasing_test(d, se)
        res.diagnostics["T1_edges"] = edges
        res.diagnostics["T1_density"] = d
    if p.spectrally_positive:
        s = 1.0 / finite
        edges = np.linspace(0.0, np.quantile(s, 0.9), bins + 1)
        d, se = histogram_density(s, edges)
        res.diagnostics["S1a_nonincreasing"] = nonincreasing_test(d, se)
        res.diagnostics["S1a_logconvex"] = logconvex_test(d, se)
    return res


def brownian_supremum_check(res: PassageResult, points=(0.5, 1.0, 2.0), width=0.05):
    """Compare S₁²/2 with the χ²₁ density through exact bin averages.

    The Lamperti normalisation gives Z = √2·B, so S₁² is twice the squared
    supremum of a standard Brownian motion.
    """
    from scipy.stats import chi2
    y = res.S1_alpha / 2.0
    rows = []
    for x in points:
        lo, hi = x - width / 2, x + width / 2
        p_hat = np.mean((y > lo) & (y <= hi))
        p = chi2.cdf(hi, 1) - chi2.cdf(lo, 1)
        se = math.sqrt(p * (1 - p) / y.size) / width
        est = p_hat / width
        rows.append({"x": x, "estimate": est, "exact_bin": p / width,
                     "density": math.exp(-x / 2) / math.sqrt(2 * math.pi * x),
                     "se": se, "z": (est - p / width) / se})
    return rows
