"""Finite-difference verification of the hand-written backward pass."""

from dataclasses import dataclass, field

import numpy as np

from .model import (
    DecoderWeights,
    EncoderParams,
    ObjectiveWeights,
    backward,
    forward,
    scalar_objective,
)

RTOL = 1e-4
ATOL = 1e-6
STEP = 1e-6


@dataclass
class GradcheckResult:
    max_error: float
    worst: tuple  # (config index, parameter name, entry index)
    n_checked: int
    configs: list = field(default_factory=list)

    @property
    def passed(self):
        return self.max_error < RTOL


def scaled_error(analytic, numeric):
    """Relative error whose denominator is floored at ``ATOL / RTOL``.

    An entry passes (error < RTOL) when it agrees to ``RTOL`` relative or
    to ``ATOL`` absolute.
    """
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), ATOL / RTOL)
    return np.abs(analytic - numeric) / denom


def random_problem(rng):
    """A random small network, batch and objective weighting."""
    m = int(rng.integers(2, 21))
    r = int(rng.integers(1, 5))
    p = int(rng.integers(1, 9))
    n = int(rng.integers(1, 6))
    enc = EncoderParams(
        W_hidden=rng.uniform(-0.5, 0.5, size=(p, m)),
        b_hidden=rng.uniform(0.0, 0.5, size=p),
        W_k=rng.uniform(-0.5, 0.5, size=(r, p)),
        b_k=rng.uniform(-0.5, 1.0, size=r),
        W_lambda=rng.uniform(-0.5, 0.5, size=(r, p)),
        b_lambda=rng.uniform(-0.5, 1.0, size=r),
    )
    dec = DecoderWeights(rng.uniform(0.0, 1.0, size=(m, r)))
    V = rng.uniform(0.0, 1.0, size=(m, n))
    median = bool(rng.integers(0, 2))
    eps = np.full((r, n), 0.5) if median else rng.uniform(0.05, 0.95, size=(r, n))
    weights = ObjectiveWeights(
        sigma_sq=float(rng.uniform(0.5, 2.0)),
        prior_k=float(rng.uniform(0.5, 2.0)),
        prior_lambda=float(rng.uniform(0.5, 2.0)),
    )
    return enc, dec, V, eps, weights


def numeric_gradient(enc, dec, V, eps, weights, step=STEP):
    """Central differences of the objective for every parameter entry."""
    out = {}
    targets = list(enc.arrays().items()) + [("W_f", dec.W_f)]
    for name, arr in targets:
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + step
            f_plus = scalar_objective(forward(enc, dec, V, eps), weights)
            arr[idx] = orig - step
            f_minus = scalar_objective(forward(enc, dec, V, eps), weights)
            arr[idx] = orig
            g[idx] = (f_plus - f_minus) / (2.0 * step)
        out[name] = g
    return out


def run_gradcheck(seed=0, n_configs=5, corrupt=False):
    """Compare analytic and numeric gradients on ``n_configs`` random problems.

    ``corrupt`` perturbs one analytic gradient entry (negative control).
    """
    rng = np.random.default_rng(seed)
    worst_err, worst = -1.0, None
    checked = 0
    summaries = []
    for c in range(n_configs):
        enc, dec, V, eps, weights = random_problem(rng)
        analytic = backward(forward(enc, dec, V, eps), enc, dec, weights).arrays()
        if corrupt and c == 0:
            analytic["W_f"] = analytic["W_f"].copy()
            analytic["W_f"].flat[0] += 1e-2 * (1.0 + abs(analytic["W_f"].flat[0]))
        numeric = numeric_gradient(enc, dec, V, eps, weights)
        cfg_err = 0.0
        for name, a in analytic.items():
            err = scaled_error(a, numeric[name])
            checked += err.size
            i = int(np.argmax(err))
            if err.flat[i] > worst_err:
                worst_err = float(err.flat[i])
                worst = (c, name, tuple(int(j) for j in np.unravel_index(i, err.shape)))
            cfg_err = max(cfg_err, float(err.max()))
        summaries.append({
            "m": enc.m, "p": enc.p, "r": enc.r, "n": V.shape[1],
            "median": bool(np.all(eps == 0.5)), "max_error": cfg_err,
        })
    return GradcheckResult(worst_err, worst, checked, summaries)
