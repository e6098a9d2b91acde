"""Log-gamma and digamma for positive real arguments.

Both functions accept scalars or arrays and return the same kind.
"""

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061

# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Bernoulli-number coefficients B_2j / (2j) of the digamma asymptotic series.
_DIGAMMA_SERIES = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)
_DIGAMMA_SHIFT = 10.0


def _zeta(k, n_terms=30):
    # Euler-Maclaurin tail; accurate to machine precision for integer k >= 2
    head = math.fsum(n ** -k for n in range(1, n_terms))
    n = float(n_terms)
    tail = n ** (1 - k) / (k - 1) + 0.5 * n ** -k + k * n ** (-k - 1) / 12.0
    tail -= k * (k + 1) * (k + 2) * n ** (-k - 3) / 720.0
    tail += k * (k + 1) * (k + 2) * (k + 3) * (k + 4) * n ** (-k - 5) / 30240.0
    return head + tail


# log Gamma(1 + z) = -gamma*z + sum_k (-1)^k zeta(k)/k z^k, used near the roots
_ROOT_SERIES = tuple((-1) ** k * _zeta(k) / k for k in range(2, 41))
_ROOT_RADIUS = 0.25


def _lanczos_log_gamma(x):
    # valid for x >= 0.5
    z = x - 1.0
    acc = np.full_like(z, _LANCZOS_COEF[0])
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc = acc + c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)


def _log_gamma_1p(z):
    acc = np.zeros_like(z)
    for c in reversed(_ROOT_SERIES):
        acc = (acc + c) * z
    return (acc - EULER_GAMMA) * z


def log_gamma(x):
    """Natural log of the gamma function for ``x > 0``.

    Uses the Lanczos approximation, with the reflection formula for
    ``x < 0.5`` and a Taylor series around the roots at 1 and 2 so the
    result keeps full relative accuracy there.
    """
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0) or np.any(~np.isfinite(x)):
        raise ValueError("log_gamma requires finite x > 0")
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    small = x < 0.5
    big = ~small
    out[big] = _lanczos_log_gamma(x[big])
    if np.any(small):
        xs = x[small]
        out[small] = (
            math.log(math.pi)
            - np.log(np.sin(math.pi * xs))
            - _lanczos_log_gamma(1.0 - xs)
        )
    near1 = np.abs(x - 1.0) < _ROOT_RADIUS
    if np.any(near1):
        out[near1] = _log_gamma_1p(x[near1] - 1.0)
    near2 = np.abs(x - 2.0) < _ROOT_RADIUS
    if np.any(near2):
        z = x[near2] - 2.0
        out[near2] = np.log1p(z) + _log_gamma_1p(z)
    return float(out[0]) if scalar else out


_GAMMA_RECURSE_MAX = 172.0  # beyond this Gamma overflows anyway


def gamma(x):
    """Gamma function for ``x > 0``.

    Arguments are moved into ``[1, 2)`` with ``Gamma(x + 1) = x Gamma(x)``
    so the final ``exp`` sees a log below 0.13; ``exp(log_gamma(x))`` on
    its own loses about ``log_gamma(x)`` ulps.
    """
    scalar = np.ndim(x) == 0
    x = np.array(x, dtype=np.float64, ndmin=1)
    if np.any(x <= 0) or np.any(~np.isfinite(x)):
        raise ValueError("gamma requires finite x > 0")
    far = x >= _GAMMA_RECURSE_MAX
    z = np.where(far, 1.5, x)
    scale = np.ones_like(z)
    small = z < 1.0
    scale[small] = 1.0 / z[small]
    z = np.where(small, z + 1.0, z)
    while True:
        high = z >= 2.0
        if not np.any(high):
            break
        z = np.where(high, z - 1.0, z)
        scale = np.where(high, scale * z, scale)
    out = scale * np.exp(log_gamma(z))
    if np.any(far):
        with np.errstate(over="ignore"):
            out[far] = np.exp(log_gamma(x[far]))
    return float(out[0]) if scalar else out


def digamma(x):
    """Digamma function psi(x) = d/dx log Gamma(x) for ``x > 0``.

    The argument is shifted up with ``psi(x) = psi(x + 1) - 1/x`` until it
    reaches 10, then the asymptotic expansion is summed.
    """
    scalar = np.ndim(x) == 0
    x = np.array(x, dtype=np.float64, ndmin=1)
    if np.any(x <= 0) or np.any(~np.isfinite(x)):
        raise ValueError("digamma requires finite x > 0")
    acc = np.zeros_like(x)
    while True:
        low = x < _DIGAMMA_SHIFT
        if not np.any(low):
            break
        acc[low] -= 1.0 / x[low]
        x = np.where(low, x + 1.0, x)
    inv2 = 1.0 / (x * x)
    series = np.zeros_like(x)
    for c in reversed(_DIGAMMA_SERIES):
        series = (series + c) * inv2
    out = acc + np.log(x) - 0.5 / x - series
    return float(out[0]) if scalar else out
