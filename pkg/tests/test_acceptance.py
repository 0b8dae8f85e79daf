"""Acceptance gate: one test per criterion, each check recorded for the terminal summary."""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from expfunctional import (LevyModel, NoJumps, beta_star, compose_factors, exponential_two_sided,
                           length_biased_test, rational_factors, sample_functional,
                           spectrally_onesided_factors, tbeta_on_ladder, tbeta_transform, test_factorization,
                           transformed_mean, vigon_check)
from expfunctional.distribution import (density_series_subordinator, density_spectrally_negative,
                                        gamma_family_densities, gamma_family_limits, mellin_from_density,
                                        mellin_recursion_check, moments_descending,
                                        negative_moments_spectrally_positive)
from expfunctional.exponents import default_beta_plus
from expfunctional.ladders import ASC, DESC, LadderExponent, PotentialMeasure
from expfunctional.stable import (StableParams, brownian_supremum_check, gamma_q, lamperti_kill,
                                  passage_time_law)


def record(crit, label, passed, detail):
    passed = bool(passed)
    ACCEPTANCE.setdefault(crit, []).append((label, passed, detail))
    print(f"criterion {crit} [{'PASS' if passed else 'FAIL'}] {label}: {detail}")
    return passed


def check_all(crit):
    bad = [label for label, ok, _ in ACCEPTANCE.get(crit, []) if not ok]
    assert not bad, f"criterion {crit} failed: {bad}"


def closed(x):
    return (1.0 + np.asarray(x)) ** -2


def mc_z(samples, target):
    return abs(samples.mean() - target) / (samples.std(ddof=1) / math.sqrt(samples.size))


def test_criterion_1_drift_series():
    t0 = time.perf_counter()
    psi = LevyModel(1.0, 0.0, NoJumps(), 1.0).exponent()
    raw, eul = density_series_subordinator(psi, "raw"), density_series_subordinator(psi, "euler")
    xr, xe = np.linspace(0.0, 0.9, 91), np.linspace(0.0, 50.0, 501)
    er, ee = np.max(np.abs(raw(xr) - closed(xr))), np.max(np.abs(eul(xe) - closed(xe)))
    m0 = max(abs(raw(0.0) - 1.0), abs(eul(0.0) - 1.0))
    dt = time.perf_counter() - t0
    record(1, "raw series sup-error on [0,0.9]", er < 1e-9, f"{er:.2e} < 1e-9")
    record(1, "Euler series sup-error on [0,50]", ee < 1e-9, f"{ee:.2e} < 1e-9")
    record(1, "m(0) = q", m0 < 1e-12, f"{m0:.2e} < 1e-12")
    record(1, "runtime", dt < 1.0, f"{dt:.2f}s < 1s")
    check_all(1)


def test_criterion_2_moment_ladders():
    t0 = time.perf_counter()
    phi = LadderExponent(DESC, 1.0, 1.0)
    lad = moments_descending(phi, 20)
    err = np.max(np.abs(lad.values - 1.0 / (np.arange(1, 21) + 1.0)) / lad.values)
    record(2, "M_m = 1/(m+1), m <= 20", err < 1e-12, f"rel {err:.2e} < 1e-12")
    u = sample_functional(phi.functional_model(), 100_000, seed=101).draws
    z = max(mc_z(u ** m, 1.0 / (m + 1)) for m in (1, 2, 3, 5, 10))
    record(2, "MC of 1-exp(-e1), N=1e5", z < 3, f"max z {z:.2f} < 3")

    psi = lambda s: s * s / 2 - s / 2
    neg = negative_moments_spectrally_positive(psi, 10, dpsi0=-0.5)
    want = np.array([math.factorial(m) / 2 ** m for m in range(1, 11)])
    err = np.max(np.abs(neg.values - want) / want)
    record(2, "E[I^-m] = m!/2^m, m <= 10", err < 1e-10, f"rel {err:.2e} < 1e-10")
    x = sample_functional(LevyModel(-0.5, 1.0, NoJumps(), 0.0), 1_000_000, seed=102).draws
    z = max(mc_z(x ** -m, want[m - 1]) for m in (1, 2, 3, 5, 10))
    record(2, "MC of unkilled Brownian, N=1e6", z < 3, f"max z {z:.2f} < 3")
    dt = time.perf_counter() - t0
    record(2, "runtime", dt < 30.0, f"{dt:.1f}s < 30s")
    check_all(2)


def perturbed(model, f=1.1):
    _, _, g = spectrally_onesided_factors(model, "iv")
    g2 = f * g
    return LadderExponent(ASC, g2, 1.0), LadderExponent(DESC, model.kill / g2, model.gaussian / 2)


def summary(rep):
    return ", ".join(f"{r['name']}={r.get('pvalue', r['value']):.3g}" for r in rep.statistics)


def test_criterion_3_factorization():
    t0 = time.perf_counter()
    exp2 = LevyModel(0.5, 1.0, exponential_two_sided(1.0, 3.0, 1.0, 2.0), 1.0)
    rep = test_factorization(exp2, rational_factors(exp2), 100_000, seed=301)
    record(3, "exponential two-sided, rational factors", rep.passed, summary(rep))
    bm = LevyModel(-1.0, 1.0, NoJumps(), 1.0)
    pp, pm, _ = spectrally_onesided_factors(bm, "iv")
    rep = test_factorization(bm, (pp, pm), 100_000, seed=302)
    record(3, "killed Brownian, one-sided factors", rep.passed, summary(rep))
    rep = test_factorization(bm, perturbed(bm), 100_000, seed=303, check_consistency=False)
    record(3, "10%-perturbed control is rejected", not rep.passed, summary(rep))
    dt = time.perf_counter() - t0
    record(3, "runtime", dt < 120.0, f"{dt:.1f}s < 120s")
    check_all(3)


def test_criterion_4_mellin_recursion():
    psi = LevyModel(1.0, 0.0, NoJumps(), 1.0).exponent()
    law = lambda z: mellin_from_density(closed, z, scales=(1.0, 10.0, 100.0))
    chk = mellin_recursion_check(law, psi, np.linspace(0.1, 0.9, 9))
    record(4, "quadrature residual, drift model", chk.max_residual < 1e-8, f"{chk.max_residual:.2e} < 1e-8")
    bm = LevyModel(-1.0, 1.0, NoJumps(), 1.0)
    ss = sample_functional(bm, 100_000, seed=401)
    chk = mellin_recursion_check(ss, bm.exponent(), [0.6, 0.8, 1.0, 1.2])
    record(4, "MC residual, killed Brownian", chk.max_z < 3, f"max z {chk.max_z:.2f} < 3")
    check_all(4)


def test_criterion_5_vigon():
    pot = PotentialMeasure.from_ladder(LadderExponent(DESC, 1.0, 1.0))
    y = np.linspace(0.0, 5.0, 21)
    for rate, want, label in [(1.0, lambda v: math.exp(-v) / 2, "e^-y tail"),
                              (2.0, lambda v: math.exp(-2 * v) / 3, "e^-2y tail")]:
        res = vigon_check(lambda v: math.exp(-rate * v), pot, y, want)
        record(5, label, res < 1e-8, f"{res:.2e} < 1e-8")
    check_all(5)


def test_criterion_6_spectrally_negative():
    x = np.geomspace(0.1, 100.0, 31)
    res = density_spectrally_negative(lambda y: math.exp(-y), 1.0, x)
    err = np.max(np.abs(res.values - closed(x)))
    record(6, "density equals (1+x)^-2 on [0.1,100]", err < 1e-8, f"{err:.2e} < 1e-8")
    r = res.tail_ratios[1]
    record(6, "x^2 m(x) at 1e4 vs tail constant", abs(r - 1) < 0.01 and abs(res.tail_constant - 1) < 1e-10,
           f"ratio {r:.6f}, constant {res.tail_constant:.12f}")
    check_all(6)


GAMMA = (0.5, 0.4, 0.3)


def test_criterion_7_boundary_values():
    a, g, ap = GAMMA
    m0, lim = gamma_family_limits(*GAMMA)
    want0 = g ** a * math.gamma(ap + 1)
    l = 1 / ap
    want_lim = l * math.gamma(l + 1) * math.gamma(g + 1) ** a / math.gamma(l + 1 + g) ** a
    e0 = abs(gamma_family_densities(*GAMMA, 0.0) - want0)
    record(7, "m(0) = gamma^alpha Gamma(alpha'+1)", e0 < 1e-8 and abs(m0 - want0) < 1e-12, f"{e0:.2e} < 1e-8")
    x = 2000.0
    el = abs(x ** (l + 1) * gamma_family_densities(*GAMMA, x, "large-x") - want_lim)
    record(7, "large-x limit", el < 1e-8 and abs(lim - want_lim) < 1e-12, f"{el:.2e} < 1e-8")
    assert e0 < 1e-8 and el < 1e-8


@pytest.mark.xfail(strict=True, reason="the printed small-x series does not represent the density; see ledger")
def test_criterion_7_cross_agreement(oracles):
    x = 2.0
    small = gamma_family_densities(*GAMMA, x, "small-x")
    large = gamma_family_densities(*GAMMA, x, "large-x")
    o = oracles["gamma_family_mellin"]
    truth = o["density"][o["x"].index(x)]
    ok = record(7, "small-x and large-x agree at x=2", abs(small - large) < 1e-6,
                f"small {small:.6g}, large {large:.6g}, Mellin inversion {truth:.6g}")
    assert ok


def test_criterion_8_stable(oracles):
    t0 = time.perf_counter()
    q = lamperti_kill(StableParams(0.5, 0.5))
    e = abs(q - 1 / math.sqrt(2 * math.pi))
    record(8, "q(1/2,1/2) = 1/sqrt(2 pi)", e < 1e-12, f"{e:.2e} < 1e-12")
    for a in (1.2, 1.5, 2.0):
        e = abs(gamma_q(StableParams(a, 1 - 1 / a)) - (1 - 1 / a))
        record(8, f"gamma_q = 1 - 1/alpha at alpha={a}", e < 1e-10, f"{e:.2e} < 1e-10")
    res = passage_time_law(StableParams(2.0, 0.5), 1_000_000, seed=801)
    rows = brownian_supremum_check(res)
    for r in rows:
        assert abs(r["exact_bin"] - oracles["chi2_bins"][str(r["x"])]) < 1e-12
    zs = [r["z"] for r in rows]
    record(8, "alpha=2 supremum density at 0.5, 1, 2 (N=1e6)", max(map(abs, zs)) < 3,
           "z = " + ", ".join(f"{z:.2f}" for z in zs))
    res = passage_time_law(StableParams(0.5, 0.5), 100_000, seed=802)
    record(8, "(0.5, 0.5) monotonicity diagnostic", res.diagnostics["T1_nonincreasing"], res.route)
    dt = time.perf_counter() - t0
    record(8, "runtime", dt < 300.0, f"{dt:.1f}s < 300s")
    check_all(8)


def test_criterion_9_tbeta():
    exp2 = LevyModel(0.5, 1.0, exponential_two_sided(1.0, 3.0, 1.0, 2.0), 1.0)
    bm = LevyModel(-1.0, 1.0, NoJumps(), 1.0)
    worst = 0.0
    for m in (exp2, bm):
        psi = m.exponent()
        b1, b2 = 0.3, 0.5
        twice = tbeta_transform(tbeta_transform(psi, b1), b2)
        for s in np.linspace(max(twice.strip[0], -1.5) + 1e-3, min(psi.strip[1], 3.0) - b1 - b2 - 1e-3, 15):
            want = s / (s + b1 + b2) * psi(s + b1 + b2)
            worst = max(worst, abs(twice(s) - want) / max(1.0, abs(want)))
    record(9, "composition law", worst < 1e-12, f"{worst:.2e} < 1e-12")

    worst = 0.0
    for m, (pp, pm) in ((exp2, rational_factors(exp2)), (bm, spectrally_onesided_factors(bm, "iv")[:2])):
        rhs_psi = compose_factors(pp, pm)
        bs = min(beta_star(m.exponent(), default_beta_plus(m)), pp.strip[1])
        for beta in (0.25 * bs, 0.5 * bs, 0.75 * bs):
            tm, sp = tbeta_on_ladder(pm, beta, pp)
            t = tbeta_transform(rhs_psi, beta)
            for s in np.linspace(max(t.strip[0], tm.strip[0], sp.strip[0], -2.0) + 1e-3,
                                 min(t.strip[1], tm.strip[1], sp.strip[1], 3.0) - 1e-3, 12):
                worst = max(worst, abs(-sp(s) * tm(s) - t(s)) / max(1.0, abs(t(s))))
    record(9, "transformed factorization identity", worst < 1e-10, f"{worst:.2e} < 1e-10")

    worst = 0.0
    for m in (exp2, bm):
        psi = m.exponent()
        for beta in (0.3, 0.8, 1.5):
            t = tbeta_transform(psi, beta)
            h = 1e-5
            fd = (t(h) - t(-h)) / (2 * h)
            worst = max(worst, abs(fd - transformed_mean(psi, beta)) / max(1.0, abs(fd)))
    record(9, "transformed mean = derivative at 0", worst < 1e-6, f"{worst:.2e} < 1e-6")

    rep = length_biased_test(LevyModel(1.0, 0.0, NoJumps(), 1.0), 0.5, 100_000, seed=901)
    r = rep.statistics[0]
    record(9, "length-biased reweighting, beta=1/2", rep.passed, f"D {r['value']:.4f} < {r['threshold']:.4f}")
    check_all(9)
