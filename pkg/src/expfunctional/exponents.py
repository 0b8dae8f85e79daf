"""Killed Lévy processes with their Laplace exponents and the T_β transform."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import mpmath as mp
import numpy as np

from .errors import BadBeta, NoSolution, ParameterViolation, StripViolation
from .jumps import (Composite, HyperExponential, JumpSpec, NoJumps, TiltedStable,
                    TransformedJumps, jumps_from_dict)

STRIP_GUARD = 1e-9


@dataclass(frozen=True)
class LevyModel:
    """A killed Lévy process.

    ``drift`` is the Lévy–Khintchine drift b (small jumps compensated on |y|<1),
    ``gaussian`` is σ², ``kill`` is q.
    """

    drift: float
    gaussian: float = 0.0
    jumps: JumpSpec = field(default_factory=NoJumps)
    kill: float = 0.0

    def __post_init__(self):
        if not (self.gaussian >= 0.0):
            raise ParameterViolation("gaussian coefficient must be >= 0")
        if not (self.kill >= 0.0):
            raise ParameterViolation("kill rate must be >= 0")
        for name in ("drift", "gaussian", "kill"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ParameterViolation(f"{name} must be finite")
            object.__setattr__(self, name, v)

    @classmethod
    def from_true_drift(cls, d, gaussian=0.0, jumps=None, kill=0.0):
        """Build from the uncompensated drift d (bounded-variation jumps)."""
        jumps = jumps if jumps is not None else NoJumps()
        return cls(d + jumps.truncated_mean(), gaussian, jumps, kill)

    @property
    def true_drift(self):
        return self.drift - self.jumps.truncated_mean()

    @property
    def strip(self):
        return self.jumps.strip()

    @property
    def mean(self):
        """E[ξ₁] of the unkilled process (may be ±inf)."""
        return self.true_drift + self.jumps.mean()

    @property
    def is_subordinator(self):
        return self.gaussian == 0.0 and not self.jumps.has_negative and self.true_drift >= 0.0

    def exponent(self):
        return LaplaceExponent.from_model(self)

    def to_dict(self):
        return {"drift": self.drift, "gaussian": self.gaussian, "kill": self.kill,
                "jumps": self.jumps.to_dict()}

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def hash(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d):
        return cls(float(d.get("drift", 0.0)), float(d.get("gaussian", 0.0)),
                   jumps_from_dict(d.get("jumps")), float(d.get("kill", 0.0)))


def _check_strip(s, strip):
    lo, hi = strip
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= lo + STRIP_GUARD) or np.any(s_arr >= hi - STRIP_GUARD):
        raise StripViolation(f"argument outside finiteness strip ({lo}, {hi})")


def eval_exponent(model: LevyModel, s):
    """Ψ_q(s) = b s + σ²s²/2 + ∫(e^{sy}-1-sy1{|y|<1})Π(dy) - q."""
    _check_strip(s, model.strip)
    s = np.asarray(s, dtype=float)
    out = model.true_drift * s + 0.5 * model.gaussian * s * s + model.jumps.integral(s) - model.kill
    out = np.where(s == 0.0, -model.kill, out)
    return float(out) if out.ndim == 0 else out


def eval_exponent_mp(model: LevyModel, s):
    s = mp.mpf(s)
    return (mp.mpf(model.true_drift) * s + mp.mpf(model.gaussian) * s * s / 2
            + model.jumps.integral_mp(s) - mp.mpf(model.kill))


@dataclass(frozen=True)
class LaplaceExponent:
    """Evaluatable Ψ_q on an open real strip."""

    fn: Callable
    strip: tuple
    kill: float
    provenance: str = "built-from-triplet"
    model: Optional[LevyModel] = None
    mp_fn: Optional[Callable] = None

    @classmethod
    def from_model(cls, model):
        return cls(lambda s: eval_exponent(model, s), model.strip, model.kill,
                   "built-from-triplet", model, lambda s: eval_exponent_mp(model, s))

    @classmethod
    def from_callable(cls, fn, strip=(-math.inf, math.inf), kill=None, provenance="callable", mp_fn=None):
        if kill is None:
            kill = -float(fn(0.0))
        return cls(fn, tuple(strip), float(kill), provenance, None, mp_fn)

    def __call__(self, s):
        _check_strip(s, self.strip)
        s_arr = np.asarray(s, dtype=float)
        v = self.fn(s_arr if s_arr.ndim else float(s_arr))
        return v

    def mp_eval(self, s):
        if self.mp_fn is None:
            return mp.mpf(float(self(float(s))))
        return self.mp_fn(s)

    def derivative(self, s=0.0, h=1e-5):
        return (self(s + h) - self(s - h)) / (2.0 * h)


def transformed_jumps(jumps: JumpSpec, beta: float, kill: float) -> JumpSpec:
    """Jump measure of T_βΨ_q: tails e^{βy}Π̄₊(y) and e^{βy}(Π̄₋(y)+q)."""
    if isinstance(jumps, NoJumps):
        base = NoJumps()
    elif isinstance(jumps, HyperExponential):
        base = HyperExponential(pos=tuple((lam, eta - beta) for lam, eta in jumps.pos),
                                neg=tuple((lam, eta + beta) for lam, eta in jumps.neg))
    elif isinstance(jumps, Composite):
        parts = tuple(transformed_jumps(p, beta, 0.0) for p in jumps.parts)
        base = Composite(parts)
    else:
        base = TransformedJumps(jumps, beta)
    if kill <= 0.0:
        return base
    kill_part = HyperExponential(neg=((kill, beta),))
    if isinstance(base, NoJumps):
        return kill_part
    if isinstance(base, HyperExponential):
        return HyperExponential(pos=base.pos, neg=base.neg + kill_part.neg)
    return Composite((base, kill_part))


def transformed_model(model: LevyModel, beta: float) -> LevyModel:
    """Unkilled triplet of T_βΨ_q; Gaussian part unchanged, true drift d + σ²β/2."""
    lo, hi = model.strip
    if not (0.0 < beta < hi):
        raise BadBeta(f"beta must lie in (0, {hi})")
    jumps = transformed_jumps(model.jumps, beta, model.kill)
    d = model.true_drift + 0.5 * model.gaussian * beta
    return LevyModel.from_true_drift(d, model.gaussian, jumps, 0.0)


def tbeta_transform(psi: LaplaceExponent, beta: float) -> LaplaceExponent:
    """s ↦ (s/(s+β))·Ψ_q(s+β) on (-β, θ_max-β)."""
    lo, hi = psi.strip
    if not (0.0 < beta < hi):
        raise BadBeta(f"beta must lie in (0, {hi})")
    beta = float(beta)

    def fn(s):
        s = np.asarray(s, dtype=float)
        u = s + beta
        out = s * psi.fn(u) / u
        out = np.where(s == 0.0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    mp_fn = None
    if psi.mp_fn is not None:
        def mp_fn(s):
            s = mp.mpf(s)
            return s * psi.mp_fn(s + beta) / (s + beta)

    model = transformed_model(psi.model, beta) if psi.model is not None else None
    return LaplaceExponent(fn, (-beta, hi - beta), 0.0, f"transformed({beta!r})", model, mp_fn)


def transformed_mean(psi: LaplaceExponent, beta: float) -> float:
    """Mean of the T_β-transformed process, Ψ_q(β)/β."""
    return float(psi(beta)) / beta


def beta_star(psi: LaplaceExponent, beta_plus: float, tol=1e-12, max_iter=200) -> float:
    """sup{β>0 : Ψ_q(β) < 0} ∧ β₊ by bisection."""
    hi = min(beta_plus, psi.strip[1] - 2 * STRIP_GUARD)
    if hi <= 0:
        raise NoSolution("empty search interval", )
    if psi(hi) < 0.0:
        return float(min(beta_plus, psi.strip[1]))
    if psi.kill == 0.0 and psi.derivative(0.0) >= 0.0:
        # unkilled with nonnegative mean: Ψ > 0 right of 0, tiny-s values are rounding noise
        err = NoSolution("Psi(beta) >= 0 near 0: the mean is not negative")
        err.value = 0.0
        raise err
    lo = None
    for k in range(1, 61):
        s = hi * 2.0 ** (-k)
        if psi(s) < 0.0:
            lo = s
            break
    if lo is None:
        err = NoSolution("Psi_q(beta) >= 0 on (0, beta_plus)")
        err.value = 0.0
        raise err
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if psi(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def default_beta_plus(model: LevyModel) -> float:
    """η₊ for exponential jumps, γ for tilted-stable tails, otherwise the strip end."""
    j = model.jumps
    if isinstance(j, HyperExponential) and j.pos:
        return min(eta for _, eta in j.pos)
    if isinstance(j, TiltedStable) and j.side > 0:
        return j.gamma
    hi = model.strip[1]
    return hi if math.isfinite(hi) else 1e6
