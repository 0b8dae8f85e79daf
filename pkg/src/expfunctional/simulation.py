"""Monte Carlo for exponential functionals and statistical checks of factorizations.

Paths are advanced event by event.  Between jumps the drift part is integrated in
closed form; with a Gaussian part the step is capped by ``dt`` and the integral
over the step is replaced by its exact conditional mean given the endpoint
(a Brownian-bridge average, evaluated by Gauss–Legendre).  Infinite-activity
jumps below ``eps`` are replaced by their mean drift plus a matched Brownian part.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import (InconsistentFactors, ParameterViolation, UnkilledNonDrifting,
                     Unsupported)
from .exponents import LevyModel, beta_star, default_beta_plus
from .ladders import ASC, DESC, LadderExponent, compose_factors, psi_plus_model

DEFAULT_SEED = 0xC0FFEE
CHUNK = 1 << 16
TAIL_TOL = 1e-6
MAX_STEPS = 2_000_000

_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def rng_for(seed, stream, replica):
    """Counter-based stream keyed by (seed, stream, replica)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream), int(replica)])))


@dataclass
class SampleSet:
    draws: np.ndarray
    scheme: str
    seed: int
    model_hash: str
    params: dict = field(default_factory=dict)

    @property
    def N(self):
        return int(self.draws.size)

    def save(self, path):
        path = Path(path)
        self.draws.astype("<f8").tofile(path)
        meta = {"scheme": self.scheme, "seed": self.seed, "model_hash": self.model_hash,
                "N": self.N, "params": self.params, "dtype": "<f8"}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, sort_keys=True, indent=1))

    @classmethod
    def load(cls, path):
        path = Path(path)
        meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        draws = np.fromfile(path, dtype="<f8")
        if draws.size != meta["N"]:
            raise ParameterViolation("sample file length does not match its sidecar")
        return cls(draws, meta["scheme"], meta["seed"], meta["model_hash"], meta.get("params", {}))


@dataclass
class TestReport:
    statistics: list
    passed: bool
    N: int
    seeds: list

    __test__ = False  # not a pytest class

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=1, default=float)


# --- path engine ---------------------------------------------------------------------

@dataclass(frozen=True)
class _Dynamics:
    drift: float
    var: float
    rate: float
    kill: float
    jumps: object
    eps: float
    tail_coef: float


def _dynamics(model: LevyModel, eps: float) -> _Dynamics:
    j = model.jumps
    d, s2 = model.true_drift, model.gaussian
    if j.finite_activity:
        rate = j.rate()
    else:
        m1, m2 = j.small_moments(eps)
        d += m1
        s2 += m2
        rate = j.rate(eps)
    # bound on E[∫_t^∞ e^{ξ_s - ξ_t} ds 1{s<e_q}] for the stopping rule
    tail = math.inf
    lo, hi = model.strip
    if hi > 1.0 + 1e-6:
        v = float(model.exponent()(1.0))
        if v < 0:
            tail = -1.0 / v
    if not math.isfinite(tail):
        mean = model.mean
        tail = 1.0 / abs(mean) if mean < 0 else math.inf
    return _Dynamics(d, s2, rate, model.kill, j, eps, tail)


def _simulate_chunk(dyn: _Dynamics, n, rng, dt0, dtmax):
    I = np.zeros(n)
    out = np.empty(n)
    x = np.zeros(n)
    t_rem = rng.exponential(1.0 / dyn.kill, n) if dyn.kill > 0 else np.full(n, np.inf)
    idx = np.arange(n)
    d, s2, lam = dyn.drift, dyn.var, dyn.rate
    if dyn.kill == 0 and s2 == 0 and lam == 0:
        if not d < 0:
            raise UnkilledNonDrifting("pure drift must be negative without killing")
        return np.full(n, -1.0 / d)
    steps = 0
    ex = np.ones(n)
    v = _GL_X[:, None]
    bridge = (v * (1.0 - v))
    while idx.size:
        steps += 1
        if steps > MAX_STEPS:
            raise ParameterViolation("path simulation did not terminate")
        k = idx.size
        if lam > 0:
            tau = rng.exponential(1.0 / lam, k)
            h = np.minimum(t_rem, tau)
        else:
            tau = None
            h = t_rem
        if s2 > 0:
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                r = I / ex
                ratio = np.cbrt(r * r)
            ratio[~np.isfinite(ratio)] = np.inf
            h = np.minimum(h, dt0 * np.clip(ratio, 1.0, dtmax / dt0))
        if not np.all(np.isfinite(h)):
            raise UnkilledNonDrifting("unbounded step: process neither killed nor moving")
        if s2 > 0:
            z = rng.standard_normal(k)
            incr = d * h + np.sqrt(s2 * h) * z
            seg = h * (_GL_W @ np.exp(incr * v + (0.5 * s2 * h) * bridge))
        else:
            incr = d * h
            with np.errstate(invalid="ignore", divide="ignore"):
                seg = np.where(incr == 0.0, h, h * np.expm1(incr) / incr)
        I += ex * seg
        x += incr
        killed = h >= t_rem
        t_rem = t_rem - h
        if tau is not None:
            jumped = (tau <= h) & ~killed
            nj = int(jumped.sum())
            if nj:
                x[jumped] += dyn.jumps.sample(rng, nj, dyn.eps)
        ex = np.exp(x)
        done = killed | (dyn.tail_coef * ex < TAIL_TOL * I)
        if done.any():
            out[idx[done]] = I[done]
            keep = ~done
            idx, I, x, t_rem, ex = idx[keep], I[keep], x[keep], t_rem[keep], ex[keep]
    return out


def _scheme_label(model):
    if not model.jumps.finite_activity:
        return "small-jump-substitution"
    if model.gaussian > 0:
        return "euler-grid"
    return "exact-jump-times"


def sample_functional(model: LevyModel, N: int, scheme: str = "auto", seed: int = DEFAULT_SEED,
                      dt: float = 1e-2, eps: float = 1e-3, dtmax: float = 1.0, stream: int = 0,
                      n_jobs: int = 1) -> SampleSet:
    """N draws of I = ∫_0^{e_q} e^{ξ_t} dt."""
    if model.kill == 0 and not model.mean < 0:
        raise UnkilledNonDrifting("q = 0 requires a negative mean")
    label = _scheme_label(model)
    if scheme not in ("auto", label):
        raise ParameterViolation(f"scheme {scheme!r} does not apply; this model needs {label!r}")
    dyn = _dynamics(model, eps)
    if dyn.var > 0:
        dtmax = max(dtmax, dt)
    sizes = [min(CHUNK, N - i) for i in range(0, N, CHUNK)]

    def run(r, n):
        return _simulate_chunk(dyn, n, rng_for(seed, stream, r), dt, dtmax)

    if n_jobs != 1 and len(sizes) > 1:
        from joblib import Parallel, delayed
        parts = Parallel(n_jobs=n_jobs)(delayed(run)(r, n) for r, n in enumerate(sizes))
    else:
        parts = [run(r, n) for r, n in enumerate(sizes)]
    draws = np.concatenate(parts) if parts else np.empty(0)
    params = {"stream": stream}
    if label == "euler-grid":
        params.update(dt=dt, dtmax=dtmax)
    if label == "small-jump-substitution":
        params.update(eps=eps, dt=dt, dtmax=dtmax)
    return SampleSet(draws, label, int(seed), model.hash(), params)


# --- factor right-hand side -------------------------------------------------------------

def _sample_descending(phi, N, seed, stream, **kw):
    rng = rng_for(seed, stream, 0)
    if phi.closed_form and phi.measure.rate() == 0 and not phi.measure.has_positive:
        if phi.drift == 0.0:
            return rng.exponential(1.0 / phi.kill, N), "shortcut:exponential"
        if phi.kill == 0.0:
            raise UnkilledNonDrifting("pure-drift descending factor without killing")
        return rng.beta(1.0, phi.kill / phi.drift, N) / phi.drift, "shortcut:beta"
    return sample_functional(phi.functional_model(), N, seed=seed, stream=stream, **kw).draws, "path"


def _sample_psi_plus(phi, N, seed, stream, **kw):
    rng = rng_for(seed, stream, 0)
    if phi.closed_form and not phi.measure.has_positive:
        if phi.drift == 0.0:
            return np.full(N, 1.0 / phi.kill), "shortcut:deterministic"
        # Brownian ψ⁺(s) = δs² - q₊s: reciprocal gamma law
        return 1.0 / (phi.drift * rng.gamma(phi.kill / phi.drift, 1.0, N)), "shortcut:reciprocal-gamma"
    return sample_functional(psi_plus_model(phi), N, seed=seed, stream=stream, **kw).draws, "path"


def sample_factor_rhs(phi_minus: LadderExponent, phi_plus: LadderExponent, N: int,
                      seed: int = DEFAULT_SEED, **kw) -> SampleSet:
    """N draws of I_{φ₋} × I_{ψ⁺} with independent streams."""
    if phi_minus.side != DESC or phi_plus.side != ASC:
        raise ParameterViolation("expected (descending, ascending) factors")
    a, sa = _sample_descending(phi_minus, N, seed, 1, **kw)
    b, sb = _sample_psi_plus(phi_plus, N, seed, 2, **kw)
    params = {"descending": sa, "psi_plus": sb}
    params.update({k: v for k, v in kw.items() if k in ("dt", "eps", "dtmax")})
    return SampleSet(a * b, "factor-product", int(seed), "rhs", params)


# --- tests ------------------------------------------------------------------------------

def moment_z(a, b, m):
    """Two-sample z-score for E[X^m]."""
    xa, xb = a ** m, b ** m
    se = math.sqrt(xa.var(ddof=1) / xa.size + xb.var(ddof=1) / xb.size)
    return float((xa.mean() - xb.mean()) / se)


def factors_consistent(model, phi_plus, phi_minus, tol=1e-8):
    psi = model.exponent()
    comp = compose_factors(phi_plus, phi_minus)
    lo = max(psi.strip[0], comp.strip[0], -20.0)
    hi = min(psi.strip[1], comp.strip[1], 20.0)
    s = np.linspace(lo, hi, 42)[1:-1]
    a, b = np.asarray(psi(s)), np.asarray(comp(s))
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a)))) < tol


def test_factorization(model: LevyModel, factors, N: int, seed: int = DEFAULT_SEED,
                       check_consistency: bool = True, alpha_ks: float = 0.01, z_max: float = 3.0,
                       **kw) -> TestReport:
    """KS and moment z-tests between I_Ψq and I_{φ₋} × I_{ψ⁺}."""
    phi_plus, phi_minus = factors[0], factors[1]
    if check_consistency and not factors_consistent(model, phi_plus, phi_minus):
        raise InconsistentFactors("-phi_plus*phi_minus does not reproduce the model exponent")
    lhs = sample_functional(model, N, seed=seed, stream=0, **kw)
    rhs = sample_factor_rhs(phi_minus, phi_plus, N, seed=seed, **kw)
    ks = stats.ks_2samp(lhs.draws, rhs.draws)
    rows = [{"name": "KS", "value": float(ks.statistic), "pvalue": float(ks.pvalue),
             "threshold": alpha_ks, "passed": bool(ks.pvalue > alpha_ks)}]
    try:
        bstar = beta_star(model.exponent(), default_beta_plus(model))
    except Exception:
        bstar = 0.0
    for m in (1, 2, 3):
        if 2 * m < bstar:
            z = moment_z(lhs.draws, rhs.draws, m)
            rows.append({"name": f"moment-z{m}", "value": z, "threshold": z_max, "passed": bool(abs(z) < z_max)})
    passed = all(r["passed"] for r in rows)
    return TestReport(rows, passed, N, [int(seed)])


test_factorization.__test__ = False


def weighted_ks(x, w, y):
    """Sup distance between the w-weighted ECDF of x and the ECDF of y, and a 1% critical value."""
    order = np.argsort(x)
    xs, ws = x[order], w[order] / np.sum(w)
    grid = np.concatenate([xs, np.sort(y)])
    grid.sort()
    Fw = np.concatenate([[0.0], np.cumsum(ws)])[np.searchsorted(xs, grid, side="right")]
    Fy = np.searchsorted(np.sort(y), grid, side="right") / y.size
    n_eff = 1.0 / np.sum(ws ** 2)
    crit = 1.63 * math.sqrt(1.0 / n_eff + 1.0 / y.size)
    return float(np.max(np.abs(Fw - Fy))), crit


def length_biased_test(model: LevyModel, beta: float, N: int, seed: int = DEFAULT_SEED, **kw) -> TestReport:
    """Reweight T_β-model draws by x^{-β} and compare with direct draws of I."""
    from .exponents import transformed_model
    direct = sample_functional(model, N, seed=seed, stream=0, **kw).draws
    tilted = sample_functional(transformed_model(model, beta), N, seed=seed, stream=3, **kw).draws
    D, crit = weighted_ks(tilted, tilted ** (-beta), direct)
    rows = [{"name": "weighted-KS", "value": D, "threshold": crit, "passed": bool(D < crit)}]
    return TestReport(rows, bool(D < crit), N, [int(seed)])


length_biased_test.__test__ = False
