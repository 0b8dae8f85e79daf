"""Command-line front end.

Every subcommand writes one CSV or JSON artifact (``--out``, default stdout)
whose header records the model hash, library version, seed and scheme.
Errors are reported as a JSON object on stderr; schema problems exit with 2,
other library errors with 1.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .distribution import (density_product, density_series_subordinator, density_spectrally_negative,
                           factor_density, factor_scales, gamma_family_densities, gamma_family_limits,
                           gamma_family_subordinator, moments_descending,
                           negative_moments_spectrally_positive)
from .errors import ExpFunctionalError, ParameterViolation, SchemaError
from .exponents import LevyModel, beta_star, default_beta_plus, tbeta_transform, transformed_mean
from .jumps import HyperExponential, NoJumps
from .ladders import (ASC, DESC, LadderExponent, PotentialMeasure, compose_factors, rational_factors,
                      spectrally_onesided_factors, vigon_check)
from .simulation import DEFAULT_SEED, length_biased_test, sample_functional, test_factorization
from .stable import StableParams, passage_time_law

EXIT_SCHEMA = 2
EXIT_ERROR = 1


def parse_grid(spec):
    try:
        a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise SchemaError(f"grid must be start:stop:count, got {spec!r}") from None
    if n < 1 or (n > 1 and not b > a):
        raise SchemaError("grid must be strictly increasing with count >= 1")
    return np.linspace(a, b, n)


# --- helpers ---------------------------------------------------------------------

def _load(args, index=0):
    paths = args.model or []
    if len(paths) <= index:
        raise SchemaError("missing --model")
    return io.load_model(paths[index])


def _levy(args):
    m = _load(args)
    if not isinstance(m, LevyModel):
        raise SchemaError("expected a Levy model document (no 'role')")
    return m


def _factors(model, how="auto"):
    if how == "auto":
        j = model.jumps
        if isinstance(j, HyperExponential) and j.pos and j.neg:
            how = "rational"
        else:
            how = "onesided"
    if how == "rational":
        return rational_factors(model)
    if how == "onesided":
        pp, pm, _ = spectrally_onesided_factors(model)
        return pp, pm
    raise ParameterViolation(f"unknown factor route {how!r}")


def _header(args, model=None, scheme="analytic", **extra):
    h = {"command": " ".join(args.cmd), "version": __version__, "seed": args.seed,
         "scheme": scheme, "model_hash": model.hash() if isinstance(model, LevyModel) else "none"}
    if isinstance(model, LadderExponent):
        h["model_hash"] = hashlib.sha256(io.canonical(model.to_dict()).encode()).hexdigest()[:16]
    h.update(extra)
    return h


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(args, header, columns, rows):
    _emit(args, io.csv_text(header, columns, rows))


def _json(args, header, body):
    _emit(args, io.json_text(header, body))


def _factor_doc(phi):
    d = phi.to_dict()
    d["meta"] = io.jsonable(d.get("meta", {}))
    return d


# --- subcommands -----------------------------------------------------------------

def cmd_exponent_eval(args):
    model = _levy(args)
    s = parse_grid(args.grid)
    psi = model.exponent()
    _csv(args, _header(args, model), ["s", "value"], zip(s, np.atleast_1d(psi(s))))


def cmd_transform_tbeta(args):
    model = _levy(args)
    psi = model.exponent()
    t = tbeta_transform(psi, args.beta)
    s = parse_grid(args.grid)
    extra = {"beta": io.fmt(args.beta), "transformed_mean": io.fmt(transformed_mean(psi, args.beta)),
             "beta_star": io.fmt(beta_star(psi, default_beta_plus(model)))}
    _csv(args, _header(args, model, **extra), ["s", "value"], zip(s, np.atleast_1d(t(s))))


def cmd_factorize_compose(args):
    a, b = _load(args, 0), _load(args, 1)
    by_side = {getattr(x, "side", None): x for x in (a, b)}
    if set(by_side) != {ASC, DESC}:
        raise SchemaError("compose needs one ascending and one descending factor document")
    psi = compose_factors(by_side[ASC], by_side[DESC])
    s = parse_grid(args.grid)
    _csv(args, _header(args, None, kill=io.fmt(psi.kill)), ["s", "value"], zip(s, np.atleast_1d(psi(s))))


def cmd_factorize_onesided(args):
    model = _levy(args)
    pp, pm, g = spectrally_onesided_factors(model)
    _json(args, _header(args, model), {"gamma_q": g, "ascending": _factor_doc(pp),
                                        "descending": _factor_doc(pm)})


def cmd_factorize_rational(args):
    model = _levy(args)
    pp, pm = rational_factors(model)
    _json(args, _header(args, model), {"ascending": _factor_doc(pp), "descending": _factor_doc(pm)})


def cmd_vigon_check(args):
    model = _levy(args)
    pp, pm = _factors(model, args.factors)
    pot = PotentialMeasure.from_ladder(pm)
    y = parse_grid(args.grid)
    res = vigon_check(model.jumps.tail_pos, pot, y, pp.measure.tail_pos)
    _json(args, _header(args, model), {"max_residual": res, "n_points": int(y.size),
                                        "passed": bool(res < args.tol)})


def _descending_of(args):
    m = _load(args)
    if isinstance(m, LadderExponent):
        if m.side != DESC:
            raise SchemaError("expected a descending factor")
        return m, None
    return _factors(m, args.factors)[1], m


def _ascending_of(args):
    m = _load(args)
    if isinstance(m, LadderExponent):
        if m.side != ASC:
            raise SchemaError("expected an ascending factor")
        return m, None
    return _factors(m, args.factors)[0], m


def cmd_moments_desc(args):
    phi, model = _descending_of(args)
    lad = moments_descending(phi, args.n)
    _csv(args, _header(args, model or phi, log_convex=lad.is_log_convex()), ["m", "M_m"],
         zip(lad.orders, lad.values))


def cmd_moments_negpos(args):
    phi, model = _ascending_of(args)
    lad = negative_moments_spectrally_positive(phi, args.n)
    _csv(args, _header(args, model or phi, log_convex=lad.is_log_convex()), ["m", "E[I^-m]"],
         zip(lad.orders, lad.values))


def cmd_density_series(args):
    model = _levy(args)
    mode = args.mode or "raw"
    ser = density_series_subordinator(model.exponent(), mode=mode)
    x = parse_grid(args.grid)
    _csv(args, _header(args, model, mode=mode, radius=io.fmt(ser.radius)), ["x", "value"],
         zip(x, np.atleast_1d(ser(x))))


def cmd_density_product(args):
    model = _levy(args)
    pp, pm = _factors(model, args.factors)
    m1, m2 = factor_density(pm), factor_density(pp)
    sc = factor_scales(pm) + factor_scales(pp)
    x = parse_grid(args.grid)
    vals = density_product(m1, m2, x, scales=lambda xx: sc)
    _csv(args, _header(args, model, mode="product"), ["x", "value"], zip(x, vals))


def cmd_density_specneg(args):
    model = _levy(args)
    _, pm, g = spectrally_onesided_factors(model, "iv")
    x = parse_grid(args.grid)
    r = density_spectrally_negative(factor_density(pm), g, x, scales=factor_scales(pm))
    h = _header(args, model, mode="specneg", gamma_q=io.fmt(g), tail_constant=io.fmt(r.tail_constant),
                tail_ok=r.tail_ok, reciprocal_cm=r.reciprocal_cm)
    _csv(args, h, ["x", "value"], zip(x, r.values))


def cmd_density_gamma(args):
    if args.alpha is None or args.gamma is None:
        raise SchemaError("density gamma needs --alpha and --gamma")
    x = parse_grid(args.grid)
    mode = args.mode or "small-x"
    if mode == "subordinator":
        vals = gamma_family_subordinator(args.alpha, args.gamma, x)
        extra = {}
    else:
        if args.alpha_prime is None:
            raise SchemaError("density gamma needs --alpha-prime for the small-x/large-x series")
        vals = gamma_family_densities(args.alpha, args.gamma, args.alpha_prime, x, mode)
        m0, lim = gamma_family_limits(args.alpha, args.gamma, args.alpha_prime)
        extra = {"m0": io.fmt(m0), "large_x_limit": io.fmt(lim)}
    h = _header(args, None, mode=mode, alpha=io.fmt(args.alpha), gamma=io.fmt(args.gamma), **extra)
    _csv(args, h, ["x", "value"], zip(x, np.atleast_1d(vals)))


def _sim_kw(args):
    kw = {}
    if args.dt is not None:
        kw["dt"] = args.dt
    if args.eps is not None:
        kw["eps"] = args.eps
    return kw


def cmd_simulate(args):
    model = _levy(args)
    ss = sample_functional(model, args.n, scheme=args.scheme or "auto", seed=args.seed, **_sim_kw(args))
    x = ss.draws
    summary = {"N": ss.N, "mean": float(x.mean()), "stderr": float(x.std(ddof=1) / math.sqrt(x.size)),
               "params": ss.params}
    if args.out:
        ss.save(args.out)
        summary["file"] = str(args.out)
        sys.stdout.write(io.json_text(_header(args, model, scheme=ss.scheme), summary))
    else:
        _json(args, _header(args, model, scheme=ss.scheme), summary)


def cmd_test_factorization(args):
    model = _levy(args)
    factors = _factors(model, args.factors)
    rep = test_factorization(model, factors, args.n, seed=args.seed, **_sim_kw(args))
    body = {"pass": rep.passed, "statistics": rep.statistics, "N": rep.N, "seeds": rep.seeds}
    _json(args, _header(args, model, scheme="mc-vs-mc"), body)


def cmd_test_lengthbiased(args):
    model = _levy(args)
    rep = length_biased_test(model, args.beta, args.n, seed=args.seed, **_sim_kw(args))
    body = {"pass": rep.passed, "statistics": rep.statistics, "N": rep.N, "seeds": rep.seeds}
    _json(args, _header(args, model, scheme="reweighted-mc", beta=io.fmt(args.beta)), body)


def cmd_stable_passage(args):
    if args.alpha is None or args.rho is None:
        raise SchemaError("stable passage needs --alpha and --rho")
    p = StableParams(args.alpha, args.rho)
    res = passage_time_law(p, args.n, seed=args.seed, **_sim_kw(args))
    flags = {k: v for k, v in res.diagnostics.items() if isinstance(v, bool)}
    rows = []
    for name, data in (("T1", res.T1), ("S1^alpha", res.S1_alpha)):
        data = data[np.isfinite(data)]
        edges = np.linspace(0.0, np.quantile(data, 0.9), args.bins + 1)
        counts, _ = np.histogram(data, bins=edges)
        w = np.diff(edges)
        prob = counts / res.T1.size
        se = np.sqrt(prob * (1 - prob) / res.T1.size) / w
        mid = 0.5 * (edges[1:] + edges[:-1])
        rows += [(name, x, d, s) for x, d, s in zip(mid, prob / w, se)]
    h = _header(args, None, scheme=res.route, alpha=io.fmt(p.alpha), rho=io.fmt(p.rho), **flags)
    _csv(args, h, ["quantity", "x", "density", "se"], rows)


COMMANDS = {
    ("exponent", "eval"): cmd_exponent_eval,
    ("transform", "tbeta"): cmd_transform_tbeta,
    ("factorize", "compose"): cmd_factorize_compose,
    ("factorize", "onesided"): cmd_factorize_onesided,
    ("factorize", "rational"): cmd_factorize_rational,
    ("vigon", "check"): cmd_vigon_check,
    ("moments", "desc"): cmd_moments_desc,
    ("moments", "negpos"): cmd_moments_negpos,
    ("density", "series"): cmd_density_series,
    ("density", "product"): cmd_density_product,
    ("density", "specneg"): cmd_density_specneg,
    ("density", "gamma"): cmd_density_gamma,
    ("simulate",): cmd_simulate,
    ("test", "factorization"): cmd_test_factorization,
    ("test", "lengthbiased"): cmd_test_lengthbiased,
    ("stable", "passage"): cmd_stable_passage,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SchemaError(message)


def build_parser():
    p = _Parser(prog="expfunctional", description="Exponential functionals of killed Levy processes.")
    p.add_argument("cmd", nargs="+", metavar="COMMAND",
                   help="; ".join(" ".join(k) for k in COMMANDS))
    p.add_argument("--model", action="append", help="model or factor JSON (repeat for compose)")
    p.add_argument("--out")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seed", type=lambda v: int(v, 0), default=DEFAULT_SEED)
    p.add_argument("--grid", default="0:1:11", help="start:stop:count")
    p.add_argument("--beta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha-prime", type=float)
    p.add_argument("--mode")
    p.add_argument("--scheme")
    p.add_argument("--factors", default="auto", choices=["auto", "rational", "onesided"])
    p.add_argument("--eps", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--version", action="version", version=__version__)
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        fn = COMMANDS.get(tuple(args.cmd))
        if fn is None:
            raise SchemaError(f"unknown command {' '.join(args.cmd)!r}")
        if args.beta is None and fn in (cmd_transform_tbeta, cmd_test_lengthbiased):
            raise SchemaError("--beta is required")
        fn(args)
        return 0
    except ExpFunctionalError as exc:
        err = {"error": exc.code, "type": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return EXIT_SCHEMA if isinstance(exc, SchemaError) else EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
