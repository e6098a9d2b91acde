"""Weibull distribution maths for the probabilistic latent layer.

Density, inverse-CDF sampling, median, the closed-form KL divergence
between two Weibull distributions, and the derivatives needed to
backpropagate through sampling and through the KL term.

All functions broadcast over numpy arrays; scalar inputs give float outputs.
"""

import math
from dataclasses import dataclass

import numpy as np

from .special import EULER_GAMMA, digamma, gamma, log_gamma

EPS_CLAMP = 1e-6
PARAM_FLOOR = 1e-4
_MAX_LOG = math.log(np.finfo(np.float64).max)
_TINY = np.finfo(np.float64).tiny


class WeibullParameterError(ValueError):
    """Raised for non-positive or non-finite shape/scale parameters."""


class PdfDivergence(ArithmeticError):
    """The density is infinite at x = 0 when k < 1."""


@dataclass
class WeibullParams:
    """Per-dimension shape ``k`` and scale ``lam`` of ``q(h | v)``.

    Both arrays share a shape: ``(r,)`` for one point or ``(r, n)`` for a
    batch with one column per data point.
    """

    k: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        self.k = np.asarray(self.k, dtype=np.float64)
        self.lam = np.asarray(self.lam, dtype=np.float64)
        if self.k.shape != self.lam.shape:
            raise WeibullParameterError(
                f"k shape {self.k.shape} != lambda shape {self.lam.shape}"
            )
        _check_params(self.k, self.lam)

    def median(self):
        return median(self.k, self.lam)

    def iqr(self):
        return interquartile_range(self.k, self.lam)


def _check_params(*params):
    for p in params:
        p = np.asarray(p)
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise WeibullParameterError(
                f"Weibull parameters must be finite and > 0, got {p!r}"
            )


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def clamp_eps(eps, delta=EPS_CLAMP):
    """Clamp uniform draws into ``[delta, 1 - delta]``."""
    return np.clip(eps, delta, 1.0 - delta)


def cdf(x, k, lam):
    _check_params(k, lam)
    x = np.asarray(x, dtype=np.float64)
    z = np.maximum(x, 0.0) / lam
    return _out(np.where(x > 0, -np.expm1(-(z**k)), 0.0))


def pdf(x, k, lam):
    """Weibull density.

    Zero for ``x < 0``. At ``x == 0`` the density is 0 for ``k > 1`` and
    ``1/lam`` for ``k == 1``; for ``k < 1`` it diverges and
    :class:`PdfDivergence` is raised.
    """
    _check_params(k, lam)
    x, k, lam = np.broadcast_arrays(
        np.asarray(x, dtype=np.float64),
        np.asarray(k, dtype=np.float64),
        np.asarray(lam, dtype=np.float64),
    )
    if np.any((x == 0) & (k < 1)):
        raise PdfDivergence("Weibull density is infinite at x = 0 for k < 1")
    out = np.zeros(x.shape)
    pos = x > 0
    z = x[pos] / lam[pos]
    kp = k[pos]
    out[pos] = (kp / lam[pos]) * z ** (kp - 1.0) * np.exp(-(z**kp))
    at0 = (x == 0) & (k == 1)
    out[at0] = 1.0 / lam[at0]
    return _out(out)


def inverse_cdf(eps, k, lam, delta=EPS_CLAMP):
    """Inverse-transform sample ``lam * (-ln eps) ** (1 / k)``.

    ``eps`` is clamped into ``[delta, 1 - delta]`` first so the result is
    finite and strictly positive.
    """
    _check_params(k, lam)
    eps = clamp_eps(np.asarray(eps, dtype=np.float64), delta)
    # for k near the floor the power under/overflows; keep h > 0 and let
    # an infinite h surface as a non-finite objective downstream
    with np.errstate(over="ignore", under="ignore"):
        h = lam * (-np.log(eps)) ** (1.0 / np.asarray(k, dtype=np.float64))
    return _out(np.maximum(h, _TINY))


def median(k, lam):
    return inverse_cdf(0.5, k, lam)


def interquartile_range(k, lam):
    return _out(
        np.asarray(inverse_cdf(0.25, k, lam)) - np.asarray(inverse_cdf(0.75, k, lam))
    )


def _scaled_gamma(k1, lam1, k2, lam2):
    """``(lam1/lam2)**k2 * Gamma(k2/k1 + 1)``, refusing to overflow."""
    arg = k2 / k1 + 1.0
    t = k2 * (np.log(lam1) - np.log(lam2)) + log_gamma(arg)
    if np.any(t > _MAX_LOG):
        i = np.argmax(t)
        a, b, c, d = (float(np.broadcast_to(p, np.shape(t)).flat[i]) for p in (k1, lam1, k2, lam2))
        raise OverflowError(
            "KL term (lam1/lam2)**k2 * Gamma(k2/k1 + 1) overflows for "
            f"k1={a!r}, lam1={b!r}, k2={c!r}, lam2={d!r}"
        )
    # direct product is accurate to a few ulps; exp(t) would lose ~|t| ulps
    with np.errstate(over="ignore", under="ignore"):
        g = np.power(lam1 / lam2, k2) * gamma(arg)
    return np.where(np.isfinite(g) & (g > 0), g, np.exp(t))


def kl_divergence(k1, lam1, k2, lam2):
    """KL(Weibull(k1, lam1) || Weibull(k2, lam2)) in closed form.

    Results below zero by rounding are floored at 0.
    """
    _check_params(k1, lam1, k2, lam2)
    k1, lam1, k2, lam2 = (np.asarray(a, dtype=np.float64) for a in (k1, lam1, k2, lam2))
    log_lam1 = np.log(lam1)
    kl = (
        np.log(k1) - k1 * log_lam1
        - (np.log(k2) - k2 * np.log(lam2))
        + (k1 - k2) * (log_lam1 - EULER_GAMMA / k1)
        + _scaled_gamma(k1, lam1, k2, lam2)
        - 1.0
    )
    return _out(np.maximum(kl, 0.0))


def kl_gradients(k1, lam1, k2, lam2):
    """Partial derivatives of :func:`kl_divergence` w.r.t. ``k1`` and ``lam1``.

    Returns
    -------
    d_k1, d_lam1 : float or ndarray
    """
    _check_params(k1, lam1, k2, lam2)
    k1, lam1, k2, lam2 = (np.asarray(a, dtype=np.float64) for a in (k1, lam1, k2, lam2))
    arg = k2 / k1 + 1.0
    g = _scaled_gamma(k1, lam1, k2, lam2)
    d_k1 = 1.0 / k1 - EULER_GAMMA * k2 / k1**2 - g * digamma(arg) * k2 / k1**2
    d_lam1 = (k2 / lam1) * (g - 1.0)
    return _out(d_k1), _out(d_lam1)


def sample_gradients(eps, k, lam, delta=EPS_CLAMP):
    """Derivatives of ``h = inverse_cdf(eps, k, lam)`` w.r.t. ``k`` and ``lam``."""
    _check_params(k, lam)
    eps = clamp_eps(np.asarray(eps, dtype=np.float64), delta)
    k = np.asarray(k, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    neg_log = -np.log(eps)
    h = lam * neg_log ** (1.0 / k)
    dh_dk = -h * np.log(neg_log) / k**2
    dh_dlam = h / lam
    return _out(dh_dk), _out(dh_dlam)
