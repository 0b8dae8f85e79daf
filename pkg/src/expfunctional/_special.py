"""Gamma-function helpers working in log space with the sign kept apart."""
import math

import numpy as np
from scipy.special import gammaln, gammasgn


def signed_lgamma(x):
    """Return ``(log|Gamma(x)|, sign(Gamma(x)))``; reflection is handled by scipy."""
    return gammaln(x), gammasgn(x)


def log_gamma_ratio(a, b):
    """log|Gamma(a)/Gamma(b)| and its sign."""
    la, sa = signed_lgamma(a)
    lb, sb = signed_lgamma(b)
    return la - lb, sa * sb


def signed_power(value, p):
    """Sign-preserving real power ``sgn(v) |v|**p``."""
    return np.sign(value) * np.abs(value) ** p


def logsumexp_signed(logs, signs):
    """Sum of ``signs * exp(logs)`` computed without overflow."""
    logs = np.asarray(logs, dtype=float)
    signs = np.asarray(signs, dtype=float)
    if logs.size == 0:
        return 0.0
    m = np.max(logs)
    if not np.isfinite(m):
        return 0.0
    return float(math.exp(m) * np.sum(signs * np.exp(logs - m)))
