"""Adaptive quadrature on half-lines.

Thin wrapper around QUADPACK (``scipy.integrate.quad``).  Integrals over
``(a, inf)`` are mapped to the whole line with ``y = a + e^t`` so that algebraic
behaviour at the left end and exponential decay at infinity are both resolved.
"""
import math
import warnings

import numpy as np
from scipy import integrate

from .errors import QuadratureFailure


def quad(f, a, b, rtol=1e-10, atol=1e-14, points=None, limit=400):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsrel=rtol, epsabs=atol, points=points, limit=limit)
        except integrate.IntegrationWarning as exc:
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, a, b, epsrel=rtol, epsabs=atol, points=points, limit=limit)
            if not np.isfinite(val) or err > 1e3 * max(atol, rtol * abs(val)):
                raise QuadratureFailure(f"quadrature did not converge: {exc}") from exc
    if not np.isfinite(val):
        raise QuadratureFailure("non-finite integral")
    return val


def quad_halfline(f, a=0.0, scales=(1.0,), rtol=1e-10, atol=1e-14):
    """∫_a^∞ f(y) dy.

    ``scales`` are characteristic lengths; the log-variable axis is split at
    their logarithms so QUADPACK sees each feature.
    """

    def g(t):
        if t > 700.0 or t < -700.0:
            return 0.0
        e = math.exp(t)
        v = f(a + e)
        return v * e if v != 0.0 else 0.0

    cuts = sorted({math.log(s) for s in scales if s > 0})
    edges = [-math.inf] + cuts + [math.inf]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += quad(g, lo, hi, rtol=rtol, atol=atol)
    return total
