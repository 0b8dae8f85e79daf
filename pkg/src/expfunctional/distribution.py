"""Analytic laws of exponential functionals.

Moment ladders, Mellin recursion residuals, power-series densities for killed
subordinators (raw and Euler-transformed), multiplicative convolution,
the spectrally negative integral representation and the gamma-family series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import mpmath as mp
import numpy as np
from scipy.special import gammaln, gammasgn

from .errors import (MomentDivergence, ParameterViolation, RadiusViolation, SignViolation,
                     StripViolation, Unsupported)
from .exponents import LaplaceExponent
from .ladders import ASC, DESC, LadderExponent
from .quadrature import quad_halfline

MAX_TERMS = 10_000
REL_STOP = 1e-14
EULER_MAX = 512


@dataclass(frozen=True)
class MomentLadder:
    orders: np.ndarray
    values: np.ndarray
    source: str
    negative: bool = False
    stderr: Optional[np.ndarray] = None

    def __post_init__(self):
        if np.any(~(np.asarray(self.values) > 0)):
            raise SignViolation("moment ladder entries must be strictly positive")

    @property
    def N(self):
        return len(self.values)

    def is_log_convex(self, rtol=1e-12):
        """log M_m convex in m (Cauchy–Schwarz), including M_0 = 1."""
        lv = np.concatenate([[0.0], np.log(self.values)])
        d2 = lv[2:] - 2 * lv[1:-1] + lv[:-2]
        return bool(np.all(d2 >= -rtol * np.maximum(1.0, np.abs(lv[1:-1]))))


def _as_callable(f):
    return f if callable(f) else (lambda s: f)


def moments_descending(phi_minus, N: int) -> MomentLadder:
    """M_m = Γ(m+1)/∏_{k≤m}(-φ₋(k)), in log space."""
    k = np.arange(1, N + 1, dtype=float)
    vals = np.array([float(phi_minus(float(kk))) for kk in k])
    if np.any(~(-vals > 0)):
        bad = int(k[np.argmax(~(-vals > 0))])
        raise SignViolation(f"-phi_minus({bad}) <= 0")
    logs = gammaln(k + 1) - np.cumsum(np.log(-vals))
    return MomentLadder(k.astype(int), np.exp(logs), "subordinator-formula")


def negative_moments_spectrally_positive(psi, N: int, dpsi0: Optional[float] = None) -> MomentLadder:
    """E[I^{-m}] = -ψ'(0⁻)∏_{k=1}^{m-1}ψ(-k)/Γ(m).

    ``psi`` is ψ⁺ (callable or LaplaceExponent) or an ascending ladder factor,
    in which case ψ(s) = sφ₊(s) and -ψ'(0⁻) = q₊ exactly.
    """
    if isinstance(psi, LadderExponent):
        if psi.side != ASC:
            raise ParameterViolation("expected the ascending factor")
        phi = psi
        d0 = -phi.kill
        f = lambda s: s * phi(s)
    else:
        f = psi
        if dpsi0 is None:
            h = 1e-6
            d0 = (float(f(h)) - float(f(-h))) / (2 * h)
            if isinstance(psi, LaplaceExponent) and psi.strip[1] <= h:
                d0 = (float(f(-h)) - float(f(-2 * h))) / h
        else:
            d0 = dpsi0
    if not (-d0 > 0):
        raise SignViolation("need psi'(0-) < 0 (negative mean)")
    logs = [math.log(-d0)]
    for m in range(2, N + 1):
        try:
            v = float(f(-(m - 1.0)))
        except StripViolation:
            raise
        if not math.isfinite(v) or v <= 0:
            raise StripViolation(f"psi(-{m - 1}) is not a finite positive number")
        logs.append(logs[-1] + math.log(v) - math.log(m - 1.0))
    return MomentLadder(np.arange(1, N + 1), np.exp(logs), "spectrally-positive-formula", negative=True)


def mellin_from_density(density, z, scales=(1.0,), rtol=1e-12):
    """E[I^z] = ∫ x^z m(x) dx by quadrature."""
    return quad_halfline(lambda x: _power_times(x, z, float(density(x))), 0.0, scales, rtol=rtol, atol=0.0)


def _power_times(x, p, v):
    """x^p·v without overflow when v vanishes far out."""
    if v == 0.0:
        return 0.0
    return math.copysign(math.exp(p * math.log(x) + math.log(abs(v))), v)


@dataclass(frozen=True)
class MellinCheck:
    z: np.ndarray
    residual: np.ndarray
    zscore: Optional[np.ndarray] = None

    @property
    def max_residual(self):
        r = self.residual[np.isfinite(self.residual)]
        return float(np.max(np.abs(r))) if r.size else math.nan

    @property
    def max_z(self):
        if self.zscore is None:
            return math.nan
        return float(np.nanmax(np.abs(self.zscore)))


def mellin_recursion_check(law, psi, zgrid) -> MellinCheck:
    """Residual of E[I^z] + (z/Ψ_q(z))E[I^{z-1}] relative to E[I^z].

    ``law`` is a MomentLadder (integer orders), a SampleSet / array of draws,
    or a callable z ↦ E[I^z].
    """
    z = np.asarray(zgrid, dtype=float)
    res = np.full(z.shape, np.nan)
    if isinstance(law, MomentLadder):
        M = dict(zip(law.orders.tolist(), law.values.tolist()))
        M[0] = 1.0
        for i, zz in enumerate(z):
            m = int(round(zz))
            if m != zz or m not in M or (m - 1) not in M:
                continue
            res[i] = (M[m] + m / float(psi(zz)) * M[m - 1]) / M[m]
        return MellinCheck(z, res)
    draws = getattr(law, "draws", None)
    if draws is None and not callable(law):
        draws = np.asarray(law, dtype=float)
    if draws is not None:
        x = np.asarray(draws, dtype=float)
        zs = np.full(z.shape, np.nan)
        for i, zz in enumerate(z):
            c = zz / float(psi(zz))
            y = x ** zz + c * x ** (zz - 1.0)
            mean, se = y.mean(), y.std(ddof=1) / math.sqrt(x.size)
            res[i] = mean / np.mean(x ** zz)
            zs[i] = mean / se
        return MellinCheck(z, res, zs)
    for i, zz in enumerate(z):
        a, b = law(zz), law(zz - 1.0)
        res[i] = (a + zz / float(psi(zz)) * b) / a
    return MellinCheck(z, res)


# --- power series ---------------------------------------------------------------

def _sum_series(log_terms, signs):
    """Partial sums with the stopping rule: tiny increment after the peak term."""
    s = 0.0
    peak = -math.inf
    passed = False
    for lt, sg in zip(log_terms, signs):
        t = sg * math.exp(lt) if lt > -745 else 0.0
        s_new = s + t
        if lt < peak:
            passed = True
        peak = max(peak, lt)
        if passed and abs(s_new - s) < REL_STOP * abs(s_new):
            return s_new, True
        s = s_new
    return s, False


@dataclass
class DensitySeries:
    """Power-series density ``Σ a_n (-x)^n / n!`` or its Euler transform."""

    coefficients: np.ndarray
    radius: float
    mode: str
    b: float = 0.0
    q: float = 0.0
    log_a: Optional[Callable] = None
    euler_coeffs: Optional[Callable] = None
    mp_coeffs: Optional[Callable] = None
    converged: dict = field(default_factory=dict)

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([self._eval1(v) for v in xs])
        return out if np.ndim(x) else float(out[0])

    def _eval1(self, x):
        if x < 0:
            raise ParameterViolation("density argument must be >= 0")
        if self.mode == "raw":
            if x >= self.radius:
                raise RadiusViolation(f"x={x} outside the raw radius {self.radius}")
            if x == 0.0:
                return float(self.q)
            n = np.arange(MAX_TERMS)
            la = self.log_a(MAX_TERMS)
            lt = la - gammaln(n + 1) + n * math.log(x)
            sg = np.where(n % 2 == 0, 1.0, -1.0)
            peak = float(np.max(lt))
            if peak > 3.0 and self.mp_coeffs is not None:
                # heavy cancellation: redo the sum with enough digits
                val, ok = self._raw_mp(x, lt, peak)
            else:
                val, ok = _sum_series(lt, sg)
            self.converged[x] = ok
            return val
        # euler: m(x) = (1/(1+bx)) Σ ã_m u^m, u = bx/(1+bx)
        bx = self.b * x
        u = bx / (1.0 + bx)
        if u == 0.0:
            return float(self.q)
        n = 32
        while True:
            at = self.euler_coeffs(n)
            terms = at * u ** np.arange(n)
            val = float(np.sum(terms))
            if np.max(np.abs(terms[-8:])) <= REL_STOP * abs(val):
                self.converged[x] = True
                break
            if n >= EULER_MAX:
                self.converged[x] = False
                break
            n = min(2 * n, EULER_MAX)
        return val / (1.0 + bx)

    def _raw_mp(self, x, lt, peak):
        n_need = int(np.nonzero(lt > peak - 1.0)[0][-1])
        tail = np.nonzero((np.arange(lt.size) > n_need) & (lt < -40.0))[0]
        n = int(tail[0]) if tail.size else lt.size
        with mp.workdps(int(25 + peak / math.log(10))):
            c = self.mp_coeffs(n)
            xm = mp.mpf(x)
            tot = mp.mpf(0)
            p = mp.mpf(1)
            for k in range(n):
                tot += c[k] * p
                p *= -xm
            return float(tot), bool(tail.size)


def _subordinator_params(psi: LaplaceExponent, b=None):
    q = psi.kill
    if b is None:
        if psi.model is None:
            raise ParameterViolation("drift b must be given for an exponent without a triplet")
        m = psi.model
        if m.gaussian != 0.0 or m.jumps.has_negative or m.true_drift < 0:
            raise ParameterViolation("exponent is not that of a killed subordinator")
        if not m.jumps.nonincreasing_positive:
            raise ParameterViolation("jump measure lacks a non-increasing density")
        b = m.true_drift
    if not q > 0:
        raise ParameterViolation("density series needs q > 0")
    return float(b), float(q)


def density_series_subordinator(psi: LaplaceExponent, mode="raw", b=None) -> DensitySeries:
    """Density of I for a killed subordinator as a power series.

    raw: a_n = q∏_{k≤n}(-Ψ_q(-k)), valid for x < 1/b.  euler: coefficients
    ã_m = Σ_k C(m,k)(-1)^k a_k/(k! b^k) in u = bx/(1+bx), computed in
    multiprecision because they are m-th forward differences.
    """
    b, q = _subordinator_params(psi, b)
    radius = 1.0 / b if b > 0 else math.inf
    cache = {"log": np.array([math.log(q)])}

    def log_a(n):
        la = cache["log"]
        if la.size < n:
            k = np.arange(la.size, n, dtype=float)
            v = -np.asarray(psi(-k), dtype=float)
            if np.any(~(v > 0)):
                raise SignViolation("-Psi_q(-k) must be positive for a killed subordinator")
            la = np.concatenate([la, la[-1] + np.cumsum(np.log(v))])
            cache["log"] = la
        return la[:n]

    def mp_coeffs(n):
        # a_k / k! at the current working precision
        c = [mp.mpf(q)]
        for k in range(1, n):
            c.append(c[-1] * (-psi.mp_eval(mp.mpf(-k))) / k)
        return c

    if mode == "raw":
        coeffs = np.exp(log_a(64))
        return DensitySeries(coeffs, radius, "raw", b, q, log_a=log_a, mp_coeffs=mp_coeffs)
    if mode != "euler":
        raise ParameterViolation(f"unknown series mode {mode!r}")
    if not b > 0:
        raise ParameterViolation("Euler transform needs a positive drift")

    ecache = {}

    def euler_coeffs(n):
        if ecache.get("n", 0) >= n:
            return ecache["vals"][:n]
        with mp.workdps(int(30 + 0.31 * n)):
            c = []
            acc = mp.mpf(q)
            bb = mp.mpf(b)
            c.append(acc)
            for k in range(1, n):
                acc = acc * (-psi.mp_eval(mp.mpf(-k))) / (k * bb)
                c.append(acc)
            vals = []
            for m_ in range(n):
                tot = mp.mpf(0)
                binom = mp.mpf(1)
                for k in range(m_ + 1):
                    tot += (binom if k % 2 == 0 else -binom) * c[k]
                    binom = binom * (m_ - k) / (k + 1)
                vals.append(float(tot))
        ecache["n"], ecache["vals"] = n, np.array(vals)
        return ecache["vals"]

    coeffs = euler_coeffs(16)
    return DensitySeries(coeffs, math.inf, "euler", b, q, log_a=log_a, euler_coeffs=euler_coeffs,
                         mp_coeffs=mp_coeffs)


def euler_coefficients_printed(a, n):
    """The alternative normalisation Σ_k a_k/(k!(n-k)!), kept for comparison only."""
    return sum(a[k] / (math.factorial(k) * math.factorial(n - k)) for k in range(n + 1))


# --- integral representations -----------------------------------------------------

def density_product(m1, m2, xgrid, scales=None, rtol=1e-10):
    """∫ m₁(x/y) m₂(y) dy/y on a grid."""
    out = []
    for x in np.atleast_1d(np.asarray(xgrid, dtype=float)):
        sc = [1.0, x] + (list(scales(x)) if callable(scales) else list(scales or []))
        f = lambda y: float(m1(x / y)) * float(m2(y)) / y
        out.append(quad_halfline(f, 0.0, sc, rtol=rtol, atol=0.0))
    return np.array(out)


def factor_density(phi: LadderExponent):
    """Closed-form density of I_{φ₋} (descending) or I_{ψ⁺} (ascending) when one exists.

    Descending, no jumps: e_{q₋} when δ₋ = 0, else (1 - e^{-δ₋e_{q₋}})/δ₋.
    Ascending, no jumps: ψ⁺(s) = δ₊s² - q₊s gives I = 1/(δ₊G), G ~ Gamma(q₊/δ₊).
    """
    if not phi.closed_form or phi.measure.rate() != 0 or phi.measure.has_positive:
        raise Unsupported("factor density is only available without a ladder measure")
    q, d = phi.kill, phi.drift
    if not q > 0:
        raise ParameterViolation("factor density needs a positive killing rate")
    if phi.side == DESC:
        if d == 0.0:
            return lambda y: q * math.exp(-q * y) if y >= 0 else 0.0
        k = q / d
        return lambda y: q * math.exp((k - 1.0) * math.log1p(-d * y)) if 0 <= y < 1.0 / d else 0.0
    if d == 0.0:
        raise Unsupported("I_psi+ is the point mass 1/q+ and has no density")
    k = q / d
    lg = math.lgamma(k)

    def m(x):
        if x <= 0:
            return 0.0
        g = 1.0 / (d * x)
        return math.exp((k - 1.0) * math.log(g) - g - lg) * g / x
    return m


def factor_scales(phi: LadderExponent):
    """Characteristic lengths of :func:`factor_density`, for quadrature splitting."""
    if phi.side == DESC:
        return [1.0 / phi.kill] + ([1.0 / phi.drift] if phi.drift > 0 else [])
    return [phi.drift / phi.kill, 1.0 / phi.kill]


@dataclass(frozen=True)
class SpecNegResult:
    x: np.ndarray
    values: np.ndarray
    tail_constant: float
    tail_ratios: tuple
    tail_ok: bool
    reciprocal_cm: bool


def density_spectrally_negative(m_phi, gamma, xgrid, scales=(1.0,), rtol=1e-11) -> SpecNegResult:
    """m(x) = x^{-γ-1}/Γ(γ)·∫e^{-y/x}y^γ m_φ(y)dy and the tail constant E[I_φ^γ]/Γ(γ)."""
    if not gamma > 0:
        raise ParameterViolation("gamma_q must be > 0")
    lg = math.lgamma(gamma)
    moment = quad_halfline(lambda y: _power_times(y, gamma, float(m_phi(y))), 0.0, scales, rtol=rtol, atol=0.0)
    if not (math.isfinite(moment) and moment > 0):
        raise MomentDivergence("E[I_phi^gamma] is not finite")
    const = moment / math.exp(lg)

    def m(x):
        f = lambda y: _power_times(y, gamma, math.exp(-y / x) * float(m_phi(y)))
        v = quad_halfline(f, 0.0, list(scales) + [x], rtol=rtol, atol=0.0)
        return math.exp(math.log(v) - (gamma + 1) * math.log(x) - lg) if v > 0 else 0.0

    xs = np.atleast_1d(np.asarray(xgrid, dtype=float))
    vals = np.array([m(float(x)) for x in xs])
    ratios = tuple(x ** (gamma + 1) * m(x) / const for x in (1e3, 1e4))
    ok = all(abs(r - 1.0) < 0.01 for r in ratios)
    return SpecNegResult(xs, vals, const, ratios, ok, gamma <= 1.0)


# --- gamma family ----------------------------------------------------------------

def _check_gamma_family(alpha, gamma, alpha_p):
    if not (0 < alpha < 1):
        raise ParameterViolation("alpha must lie in (0, 1)")
    if not gamma > 0 or float(gamma).is_integer():
        raise ParameterViolation("gamma must be positive and not an integer")
    if not (0 < alpha_p < 1 - alpha):
        raise ParameterViolation("alpha' must lie in (0, 1 - alpha)")


def gamma_family_small_x(alpha, gamma, alpha_p, x):
    """Γ^α(γ+1)Σ Γ(α'(n+1)+1)/Γ^α(γ-n)·(-α'x)^n/n!.

    Negative arguments of Γ use the reflection-signed value, raised to the power
    α with its sign kept.
    """
    _check_gamma_family(alpha, gamma, alpha_p)
    n = np.arange(MAX_TERMS, dtype=float)
    base = alpha * gammaln(gamma + 1) + gammaln(alpha_p * (n + 1) + 1) - alpha * gammaln(gamma - n) - gammaln(n + 1)
    sgn = gammasgn(gamma - n) * np.where(n % 2 == 0, 1.0, -1.0)
    out = []
    for v in np.atleast_1d(np.asarray(x, dtype=float)):
        if v == 0.0:
            out.append(math.exp(base[0]))
            continue
        out.append(_sum_series(base + n * math.log(alpha_p * v), sgn)[0])
    return np.array(out) if np.ndim(x) else out[0]


def gamma_family_large_x(alpha, gamma, alpha_p, x, max_terms=400):
    """l x^{-l-1}Σ Γ(l(n+1)+1)Γ^α(γ+1)/Γ^α(l(n+1)+1+γ)·(-1)^n x^{-ln}/n!, l = 1/α'.

    The series is asymptotic; it is summed up to its smallest term.
    """
    _check_gamma_family(alpha, gamma, alpha_p)
    l = 1.0 / alpha_p
    n = np.arange(max_terms, dtype=float)
    base = gammaln(l * (n + 1) + 1) + alpha * gammaln(gamma + 1) - alpha * gammaln(l * (n + 1) + 1 + gamma) - gammaln(n + 1)
    out = []
    for v in np.atleast_1d(np.asarray(x, dtype=float)):
        lt = base - l * n * math.log(v)
        s = 0.0
        for k in range(max_terms):
            if k > 0 and lt[k] > lt[k - 1]:
                break
            t = (-1) ** k * math.exp(lt[k])
            s += t
            if abs(t) < REL_STOP * abs(s):
                break
        out.append(l * v ** (-l - 1) * s)
    return np.array(out) if np.ndim(x) else out[0]


def gamma_family_densities(alpha, gamma, alpha_p, x, regime="small-x"):
    if regime == "small-x":
        return gamma_family_small_x(alpha, gamma, alpha_p, x)
    if regime == "large-x":
        return gamma_family_large_x(alpha, gamma, alpha_p, x)
    raise ParameterViolation(f"unknown regime {regime!r}")


def gamma_family_limits(alpha, gamma, alpha_p):
    """(m(0), lim x^{l+1}m(x)) for the gamma family."""
    _check_gamma_family(alpha, gamma, alpha_p)
    l = 1.0 / alpha_p
    m0 = gamma ** alpha * math.gamma(alpha_p + 1)
    lim = l * math.exp(math.lgamma(l + 1) + alpha * math.lgamma(gamma + 1) - alpha * math.lgamma(l + 1 + gamma))
    return m0, lim


def gamma_family_subordinator(alpha, gamma, x):
    """Density of I for Ψ_q(s) = -(γ-s)^α: (γ^α/Γ^α(γ+1))ΣΓ^α(n+γ+1)(-x)^n/n!."""
    if not (0 < alpha < 1) or not gamma > 0:
        raise ParameterViolation("need alpha in (0,1) and gamma > 0")
    n = np.arange(MAX_TERMS, dtype=float)
    base = alpha * math.log(gamma) - alpha * gammaln(gamma + 1) + alpha * gammaln(n + gamma + 1) - gammaln(n + 1)
    sgn = np.where(n % 2 == 0, 1.0, -1.0)
    out = []
    for v in np.atleast_1d(np.asarray(x, dtype=float)):
        if v == 0.0:
            out.append(gamma ** alpha)
            continue
        out.append(_sum_series(base + n * math.log(v), sgn)[0])
    return np.array(out) if np.ndim(x) else out[0]


# --- qualitative proxies ---------------------------------------------------------

def alternating_derivative_signs(f, grid, orders=4, h=None):
    """True where (-1)^k f^{(k)} >= -tol at interior grid points, k = 1..orders."""
    grid = np.asarray(grid, dtype=float)
    ok = True
    for x in grid:
        hh = h if h is not None else 0.05 * max(x, 1e-3)
        pts = x + hh * np.arange(orders + 1)
        v = np.array([float(f(p)) for p in pts])
        for k in range(1, orders + 1):
            d = np.diff(v, n=k)[0] / hh ** k
            tol = 1e-7 * max(1.0, abs(v[0])) / hh ** k
            if (-1) ** k * d < -tol:
                ok = False
    return ok
