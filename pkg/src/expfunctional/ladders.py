"""Wiener–Hopf ladder factors and the identities they satisfy.

Sign conventions: the ascending factor is ``φ₊(s) = -q₊ + δ₊s + ∫(e^{sy}-1)μ₊(dy)``
and the descending factor is ``φ₋(s) = -q₋ - δ₋s - ∫(1-e^{-sy})μ₋(dy)``, both
measures living on (0, ∞), so that ``Ψ_q = -φ₊·φ₋``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy import optimize

from .errors import BadBeta, NoRoot, NotPhilanthropic, ParameterViolation, StripViolation, Unsupported
from .exponents import STRIP_GUARD, LaplaceExponent, LevyModel, _check_strip
from .jumps import Composite, HyperExponential, JumpSpec, NoJumps, TiltedStable
from .quadrature import quad_halfline

ASC, DESC = "ascending", "descending"


@dataclass(frozen=True)
class LadderExponent:
    """One Wiener–Hopf factor.

    ``measure`` lives on (0, ∞).  When the measure is not available in closed
    form, ``fn`` evaluates the factor directly and ``philanthropic`` certifies
    the class of the (implicit) measure.
    """

    side: str
    kill: float
    drift: float = 0.0
    measure: JumpSpec = field(default_factory=NoJumps)
    fn: Optional[Callable] = None
    philanthropic: Optional[bool] = None
    strip_: Optional[tuple] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.side not in (ASC, DESC):
            raise ParameterViolation(f"side must be {ASC!r} or {DESC!r}")
        if self.kill < -1e-12 or self.drift < -1e-12:
            raise ParameterViolation("ladder kill and drift must be >= 0")
        if self.measure.has_negative:
            raise ParameterViolation("ladder measure must live on the positive half-line")

    @property
    def is_philanthropic(self):
        if self.philanthropic is not None:
            return self.philanthropic
        return self.measure.nonincreasing_positive

    @property
    def closed_form(self):
        return self.fn is None

    @property
    def strip(self):
        if self.strip_ is not None:
            return self.strip_
        lo, hi = self.measure.strip()
        return (-math.inf, hi) if self.side == ASC else (-hi, math.inf)

    def _eval(self, s):
        if self.fn is not None:
            return self.fn(s)
        if self.side == ASC:
            return -self.kill + self.drift * s + self.measure.integral(s)
        return -self.kill - self.drift * s + self.measure.integral(-s)

    def __call__(self, s):
        _check_strip(s, self.strip)
        s_arr = np.asarray(s, dtype=float)
        out = self._eval(s_arr if s_arr.ndim else float(s_arr))
        out = np.where(s_arr == 0.0, -self.kill, out)
        return float(out) if out.ndim == 0 else out

    def exponent(self):
        return LaplaceExponent.from_callable(self.__call__, self.strip, self.kill, f"ladder-{self.side}")

    def functional_model(self):
        """Model of ξ with ``I_φ`` as its exponential functional.

        Descending: ξ = -H for the (killed) subordinator H.  Ascending: the
        spectrally positive ψ⁺(s) = sφ₊(s).
        """
        if not self.closed_form:
            raise Unsupported("factor has no closed-form triplet")
        if self.side == DESC:
            m = self.measure
            if isinstance(m, NoJumps):
                neg = NoJumps()
            elif isinstance(m, HyperExponential):
                neg = HyperExponential(neg=m.pos)
            elif isinstance(m, TiltedStable):
                neg = TiltedStable(m.c, m.alpha, m.gamma, -1)
            else:
                raise Unsupported("descending measure family not mirrorable")
            return LevyModel.from_true_drift(-self.drift, 0.0, neg, self.kill)
        return psi_plus_model(self)

    def potential(self):
        if self.side != DESC:
            raise ParameterViolation("potential measure is defined for the descending factor")
        return PotentialMeasure.from_ladder(self)

    def to_dict(self):
        d = {"role": self.side, "kill": self.kill, "drift": self.drift, "gaussian": 0.0,
             "jumps": self.measure.to_dict()}
        if self.meta:
            d["meta"] = dict(self.meta)
        return d


def psi_plus_model(phi_plus: LadderExponent) -> LevyModel:
    """Triplet of ψ⁺(s) = sφ₊(s).

    The Lévy tail of ψ⁺ is the density of μ₊, which is where the class-𝒫
    requirement enters; σ² = 2δ₊ and the drift absorbs -q₊ - μ₊(0, ∞).
    """
    m = phi_plus.measure
    if isinstance(m, NoJumps):
        jumps, mass = NoJumps(), 0.0
    elif isinstance(m, HyperExponential):
        jumps = HyperExponential(pos=tuple((lam * eta, eta) for lam, eta in m.pos))
        mass = sum(lam for lam, _ in m.pos)
    else:
        raise Unsupported("psi-plus triplet only for exponential-type ascending measures")
    return LevyModel.from_true_drift(-phi_plus.kill - mass, 2.0 * phi_plus.drift, jumps, 0.0)


def psi_plus(phi_plus: LadderExponent) -> LaplaceExponent:
    f = lambda s: np.asarray(s) * phi_plus(s)
    return LaplaceExponent.from_callable(f, phi_plus.strip, 0.0, "psi-plus")


@dataclass(frozen=True)
class PotentialMeasure:
    """Descending potential measure, ``atom·δ₀ + Σ c e^{-a r} dr`` when closed form."""

    laplace: Callable
    atom: float = 0.0
    exps: tuple = ()
    mass: float = math.inf

    def density(self, r):
        r = np.asarray(r, dtype=float)
        out = sum((c * np.exp(-a * r) for c, a in self.exps), np.zeros_like(r))
        return np.where(r >= 0, out, 0.0)

    @property
    def closed_form(self):
        return self.atom > 0 or bool(self.exps)

    @classmethod
    def from_ladder(cls, phi: LadderExponent):
        lt = lambda s: -1.0 / phi(s)
        mass = 1.0 / phi.kill if phi.kill > 0 else math.inf
        rat = phi.meta.get("rational")
        if rat is not None:
            atom, exps = _rational_potential(*rat)
            return cls(lt, atom, exps, mass)
        if not phi.closed_form:
            return cls(lt, 0.0, (), mass)
        m = phi.measure
        if isinstance(m, NoJumps):
            if phi.drift == 0.0:
                return cls(lt, 1.0 / phi.kill, (), mass)
            return cls(lt, 0.0, ((1.0 / phi.drift, phi.kill / phi.drift),), mass)
        if isinstance(m, HyperExponential):
            atom, exps = _polynomial_potential(*_descending_polynomials(phi))
            return cls(lt, atom, exps, mass)
        return cls(lt, 0.0, (), mass)


def _descending_polynomials(phi):
    """-φ₋ = P/Q with Q = ∏(s+η)."""
    Q = Polynomial([1.0])
    for _, eta in phi.measure.pos:
        Q = Q * Polynomial([eta, 1.0])
    P = Polynomial([phi.kill, phi.drift]) * Q
    for i, (lam, eta) in enumerate(phi.measure.pos):
        rest = Polynomial([1.0])
        for j, (_, e) in enumerate(phi.measure.pos):
            if j != i:
                rest = rest * Polynomial([e, 1.0])
        P = P + Polynomial([0.0, lam]) * rest
    return P.trim(), Q


def _polynomial_potential(P, Q):
    """Q/P as atom + Σ c e^{-g r}; a root at zero gives a constant density."""
    roots = np.real(np.real_if_close(P.roots()))
    roots = np.where(np.abs(roots) < 1e-13, 0.0, roots)
    dP = P.deriv()
    exps = tuple((float(Q(r) / dP(r)), abs(float(r))) for r in sorted(roots, reverse=True))
    atom = float(Q.coef[-1] / P.coef[-1]) if P.degree() == Q.degree() else 0.0
    return atom, exps


def _rational_potential(K, gam, eta):
    """Partial fractions of ∏(1+s/η)/(K∏(1+s/γ))."""
    gam = [g for g in gam]
    exps = []
    for j, g in enumerate(gam):
        c = g / K
        for e in eta:
            c *= 1.0 - g / e
        for i, gi in enumerate(gam):
            if i != j:
                c /= 1.0 - g / gi
        exps.append((c, g))
    atom = 0.0
    if len(gam) == len(eta):
        atom = float(np.prod(gam) / (K * np.prod(eta))) if gam else 1.0 / K
    return atom, tuple(exps)


def compose_factors(phi_plus: LadderExponent, phi_minus: LadderExponent) -> LaplaceExponent:
    """Ψ_q = -φ₊·φ₋, kill q₊q₋."""
    if phi_plus.side != ASC or phi_minus.side != DESC:
        raise ParameterViolation("compose_factors expects (ascending, descending)")
    if not (phi_plus.is_philanthropic and phi_minus.is_philanthropic):
        raise NotPhilanthropic("both factor measures need a non-increasing density")
    q = phi_plus.kill * phi_minus.kill
    if not (q > 0 or (phi_plus.kill > 0 and phi_minus.kill == 0)):
        raise ParameterViolation("need q₊q₋ > 0, or q₊ > 0 with q₋ = 0")
    lo = max(phi_plus.strip[0], phi_minus.strip[0])
    hi = min(phi_plus.strip[1], phi_minus.strip[1])

    def fn(s):
        out = -phi_plus(s) * phi_minus(s)
        return out

    return LaplaceExponent(fn, (lo, hi), q, "built-from-factors")


# --- spectrally one-sided ------------------------------------------------------

def _positive_root(f, s_cap, tol=1e-12, unkilled=False):
    """Unique positive root of a convex f with f(0) <= 0, by doubling then brentq.

    When f(0) = 0 the left bracket is pulled off zero by halving.
    """
    s_max = min(1.0, s_cap)
    for _ in range(60):
        if f(s_max) > 0.0:
            a = 0.0
            if unkilled:
                a = s_max / 2
                for _ in range(200):
                    if f(a) < 0.0:
                        break
                    a /= 2
                else:
                    raise NoRoot("no negative value to the right of zero")
            return optimize.brentq(f, a, s_max, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
        if s_max >= s_cap:
            break
        s_max = min(2.0 * s_max, s_cap)
    raise NoRoot("no sign change while bracketing the positive root")


def spectrally_onesided_factors(model, case=None):
    """Root-based factors (φ₊, φ₋, γ_q).

    ``case='iii'`` (no negative jumps): γ_q solves Ψ_q(-s)=0, φ₋ = -(s+γ_q).
    ``case='iv'``  (no positive jumps): γ_q solves Ψ_q(s)=0,  φ₊ = s-γ_q.
    ``model`` is a LevyModel or a LaplaceExponent (then ``case`` is required).
    """
    if isinstance(model, LevyModel):
        psi = model.exponent()
        if case is None and not (model.jumps.has_negative or model.jumps.has_positive):
            # no jumps: both cases apply, take whichever has a root
            try:
                return spectrally_onesided_factors(model, "iii")
            except NoRoot:
                return spectrally_onesided_factors(model, "iv")
        if case is None:
            if not model.jumps.has_negative:
                case = "iii"
            elif not model.jumps.has_positive:
                case = "iv"
            else:
                raise ParameterViolation("model has jumps of both signs")
        if case == "iii" and model.jumps.has_negative:
            raise ParameterViolation("case iii needs no negative jumps")
        if case == "iv" and model.jumps.has_positive:
            raise ParameterViolation("case iv needs no positive jumps")
    else:
        psi, model = model, None
        if case not in ("iii", "iv"):
            raise ParameterViolation("case must be given for a bare exponent")
    q = psi.kill
    if q < 0:
        raise ParameterViolation("negative killing rate")
    lo, hi = psi.strip
    g = 2 * STRIP_GUARD
    unkilled = q == 0
    if unkilled:
        # γ must be a nonzero root, so the process has to drift towards the missing side
        slope = psi.derivative(0.0)
        if (case == "iii" and slope <= 0) or (case == "iv" and slope >= 0):
            raise NoRoot("unkilled process drifts the wrong way: no nonzero root")
    if case == "iii":
        gamma = _positive_root(lambda s: float(psi(-s)), -lo - g, unkilled=unkilled)
    else:
        gamma = _positive_root(lambda s: float(psi(s)), hi - g, unkilled=unkilled)

    drift = 0.5 * model.gaussian if model is not None else 0.0
    meta = {"gamma_q": gamma, "case": case}
    meas = _smoothed_measure(model, gamma, +1 if case == "iii" else -1)
    if case == "iii":
        phi_m = LadderExponent(DESC, gamma, 1.0, meta=meta)
        if meas is not None:
            phi_p = LadderExponent(ASC, q / gamma, drift, meas, meta=meta)
        else:
            flag = True if model is None else model.jumps.nonincreasing_positive
            phi_p = LadderExponent(ASC, q / gamma, drift, NoJumps(),
                                   lambda s: psi.fn(s) / (np.asarray(s) + gamma),
                                   flag, (-gamma, hi), meta=meta)
    else:
        phi_p = LadderExponent(ASC, gamma, 1.0, meta=meta)
        if meas is not None:
            phi_m = LadderExponent(DESC, q / gamma, drift, meas, meta=meta)
        else:
            flag = True if model is None else _mirror_flag(model.jumps)
            phi_m = LadderExponent(DESC, q / gamma, drift, NoJumps(),
                                   lambda s: psi.fn(s) / (gamma - np.asarray(s)),
                                   flag, (lo, gamma), meta=meta)
    return phi_p, phi_m, gamma


def _mirror_flag(jumps):
    # negative-side densities of the shipped one-sided families are monotone
    if isinstance(jumps, (HyperExponential, TiltedStable, NoJumps)):
        return True
    if isinstance(jumps, Composite):
        return all(_mirror_flag(p) for p in jumps.parts)
    return False


def _smoothed_measure(model, gamma, side):
    """Ladder measure with tail ∫Π̄(r+y)e^{-γr}dr, closed form for exponential jumps."""
    if model is None:
        return None
    j = model.jumps
    if isinstance(j, NoJumps):
        return NoJumps()
    if isinstance(j, HyperExponential):
        comps = j.pos if side > 0 else j.neg
        return HyperExponential(pos=tuple((lam / (eta + gamma), eta) for lam, eta in comps))
    return None


# --- rational factors for hyperexponential jumps -------------------------------

def rational_factors(model: LevyModel):
    """Factors of a hyperexponential-jump exponent from the roots of Ψ_q·D.

    Positive roots go to φ₊, negative roots to φ₋.  With q>0 the constants are
    split as K₊ = K₋ = √q; with q=0 the zero root is assigned to φ₋, K₊ = 1.
    """
    j = model.jumps
    if isinstance(j, NoJumps):
        j = HyperExponential()
    if not isinstance(j, HyperExponential):
        raise Unsupported("rational factors need exponential-type jumps")
    eta_p = [eta for _, eta in j.pos]
    eta_m = [eta for _, eta in j.neg]
    D = Polynomial([1.0])
    for e in eta_p:
        D = D * Polynomial([e, -1.0])
    for e in eta_m:
        D = D * Polynomial([e, 1.0])
    P = Polynomial([-model.kill, model.true_drift, 0.5 * model.gaussian]) * D
    for i, (lam, e) in enumerate(j.pos):
        P = P + Polynomial([0.0, lam]) * (D // Polynomial([e, -1.0]))
    for i, (lam, e) in enumerate(j.neg):
        P = P - Polynomial([0.0, lam]) * (D // Polynomial([e, 1.0]))
    P = Polynomial(np.trim_zeros(P.coef, "b") if np.any(P.coef) else [0.0])
    roots = P.roots()
    if np.max(np.abs(np.imag(roots)), initial=0.0) > 1e-8 * max(1.0, np.max(np.abs(roots))):
        raise ParameterViolation("complex roots: exponent is not of rational Lévy type")
    roots = np.sort(np.real(roots))
    q = model.kill
    if q > 0:
        beta = tuple(float(r) for r in roots if r > 0)
        gam = tuple(float(-r) for r in roots if r < 0)
        Kp = Km = math.sqrt(q)
    else:
        mean = model.mean
        if not (mean < 0):
            raise ParameterViolation("unkilled rational factors need negative mean")
        izero = int(np.argmin(np.abs(roots)))
        rest = np.delete(roots, izero)
        beta = tuple(float(r) for r in rest if r > 0)
        gam = tuple(float(-r) for r in rest if r < 0)
        Kp, Km = 1.0, -mean
    phi_p = _rational_ascending(Kp, beta, tuple(eta_p))
    phi_m = _rational_descending(Km, gam, tuple(eta_m), zero_root=(q == 0))
    meta = {"split": "K+=K-=sqrt(q)" if q > 0 else "K+=1", "roots_plus": beta, "roots_minus": gam}
    object.__setattr__(phi_p, "meta", {**phi_p.meta, **meta})
    object.__setattr__(phi_m, "meta", {**phi_m.meta, **meta})
    return phi_p, phi_m


def _rational_ascending(K, beta, eta):
    comps = []
    for i, e in enumerate(eta):
        r = -K
        for b in beta:
            r *= 1.0 - e / b
        for k, ek in enumerate(eta):
            if k != i:
                r /= 1.0 - e / ek
        comps.append((r, e))
    drift = K * float(np.prod(eta)) / float(np.prod(beta)) if len(beta) == len(eta) + 1 else 0.0
    return LadderExponent(ASC, K, drift, HyperExponential(pos=tuple(comps)),
                          meta={"rational": (K, beta, eta)})


def _rational_descending(K, gam, eta, zero_root=False):
    if zero_root:
        # φ₋(s) = -K s ∏(1+s/γ)/∏(1+s/η): no kill; drift and rates from partial fractions
        comps = []
        for jx, e in enumerate(eta):
            r = K * e
            for g in gam:
                r *= 1.0 - e / g
            for k, ek in enumerate(eta):
                if k != jx:
                    r /= 1.0 - e / ek
            comps.append((r, e))
        drift = K * float(np.prod(eta)) / float(np.prod(gam)) if len(gam) == len(eta) else 0.0
        return LadderExponent(DESC, 0.0, drift, HyperExponential(pos=tuple(comps)))
    comps = []
    for jx, e in enumerate(eta):
        r = -K
        for g in gam:
            r *= 1.0 - e / g
        for k, ek in enumerate(eta):
            if k != jx:
                r /= 1.0 - e / ek
        comps.append((r, e))
    drift = K * float(np.prod(eta)) / float(np.prod(gam)) if len(gam) == len(eta) + 1 else 0.0
    return LadderExponent(DESC, K, drift, HyperExponential(pos=tuple(comps)),
                          meta={"rational": (K, gam, eta)})


# --- Vigon and T_β --------------------------------------------------------------

def vigon_check(tail_pos, potential: PotentialMeasure, ygrid, ascending_tail, rtol=1e-11):
    """max_y |μ̄₊(y) - ∫Π̄₊(r+y)𝒰₋(dr)|."""
    if not potential.closed_form:
        raise Unsupported("potential measure density not available in closed form")
    scales = [1.0] + [1.0 / a for _, a in potential.exps if a > 0]
    worst = 0.0
    for y in np.atleast_1d(np.asarray(ygrid, dtype=float)):
        f = lambda r: float(tail_pos(r + y)) * float(potential.density(r))
        val = potential.atom * float(tail_pos(y))
        if potential.exps:
            val += quad_halfline(f, 0.0, scales=scales, rtol=rtol, atol=1e-15)
        worst = max(worst, abs(float(ascending_tail(y)) - val))
    return worst


def tbeta_on_ladder(phi_minus: LadderExponent, beta: float, phi_plus: LadderExponent = None):
    """(s/(s+β))φ₋(s+β), and the shifted ascending factor φ₊(·+β) if given."""
    if not beta > 0:
        raise BadBeta("beta must be > 0")
    if phi_plus is not None and phi_plus(beta) >= 0.0:
        raise BadBeta("beta must lie below beta*: phi_plus(beta) >= 0")
    b = float(beta)
    m = phi_minus.measure
    if phi_minus.closed_form and isinstance(m, (NoJumps, HyperExponential)):
        comps = tuple((lam, eta + b) for lam, eta in (m.pos if isinstance(m, HyperExponential) else ()))
        if phi_minus.kill > 0:
            comps = comps + ((phi_minus.kill, b),)
        t_minus = LadderExponent(DESC, 0.0, phi_minus.drift, HyperExponential(pos=comps))
    else:
        def fn(s):
            s = np.asarray(s, dtype=float)
            return s * phi_minus(s + b) / (s + b)
        lo, hi = phi_minus.strip
        t_minus = LadderExponent(DESC, 0.0, 0.0, NoJumps(), fn, phi_minus.is_philanthropic,
                                 (max(lo - b, -b), hi - b))
    if phi_plus is None:
        return t_minus
    m = phi_plus.measure
    if phi_plus.closed_form and isinstance(m, (NoJumps, HyperExponential)):
        comps = tuple((lam * eta / (eta - b), eta - b) for lam, eta in (m.pos if isinstance(m, HyperExponential) else ()))
        s_plus = LadderExponent(ASC, -float(phi_plus(b)), phi_plus.drift, HyperExponential(pos=comps))
    else:
        lo, hi = phi_plus.strip
        s_plus = LadderExponent(ASC, -float(phi_plus(b)), 0.0, NoJumps(),
                                lambda s: phi_plus(np.asarray(s) + b), phi_plus.is_philanthropic,
                                (lo - b, hi - b))
    return t_minus, s_plus
