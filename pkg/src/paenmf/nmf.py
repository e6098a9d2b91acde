"""Frobenius-norm NMF by Lee-Seung multiplicative updates.

Used to initialise the PAE-NMF decoder and as the deterministic baseline
that PAE-NMF reconstructions are compared against.
"""

from dataclasses import dataclass, field

import numpy as np

from .matrix import ShapeError, as_nonneg, frobenius_sq

DENOM_EPS = 1e-12


@dataclass
class NmfFactorization:
    """Result of :func:`factorize`.

    Attributes
    ----------
    W : ndarray, shape (m, r)
        Basis directions, one per column.
    H : ndarray, shape (r, n)
        Coefficients, one column per data point.
    objective_trace : list of float
        ``||V - WH||_F^2`` at initialisation and after every update.
    """

    W: np.ndarray
    H: np.ndarray
    objective_trace: list = field(default_factory=list)

    @property
    def objective(self):
        return self.objective_trace[-1]

    def relative_error(self, V):
        return float(np.sqrt(self.objective) / np.linalg.norm(V))


def mu_step(V, W, H):
    """One multiplicative update of ``H`` then ``W``.

    The Frobenius objective is non-increasing and both factors stay
    non-negative.
    """
    m, n = V.shape
    if W.shape[0] != m or H.shape[1] != n or W.shape[1] != H.shape[0]:
        raise ShapeError(
            f"V {V.shape} does not conform with W {W.shape} and H {H.shape}"
        )
    WtW = W.T @ W
    H = H * (W.T @ V) / (WtW @ H + DENOM_EPS)
    HHt = H @ H.T
    W = W * (V @ H.T) / (W @ HHt + DENOM_EPS)
    return W, H


def init_factors(V, r, rng):
    """Strictly positive random start: uniform(0.1, 1.1) times mean(V)."""
    scale = float(V.mean()) or 1.0
    m, n = V.shape
    W = rng.uniform(0.1, 1.1, size=(m, r)) * scale
    H = rng.uniform(0.1, 1.1, size=(r, n)) * scale
    return W, H


def factorize(V, r, iters=2000, seed=0, tol=None, patience=10):
    """Factorise ``V ~= W @ H`` with non-negative factors.

    Parameters
    ----------
    V : array_like, shape (m, n)
        Non-negative data, one data point per column.
    r : int
        Number of basis directions.
    iters : int
        Maximum number of update sweeps.
    seed : int
        Seed for the random initialisation; equal seeds give bit-identical
        results.
    tol : float, optional
        If given, stop once the relative objective change has stayed below
        ``tol`` for ``patience`` consecutive sweeps.

    Returns
    -------
    NmfFactorization
    """
    V = as_nonneg(V, "V")
    if V.size == 0:
        raise ValueError("V is empty")
    if int(r) != r or r < 1:
        raise ValueError(f"r must be a positive integer, got {r!r}")
    if iters < 0:
        raise ValueError(f"iters must be >= 0, got {iters!r}")
    rng = np.random.default_rng(seed)
    W, H = init_factors(V, int(r), rng)
    trace = [frobenius_sq(V, W @ H)]
    quiet = 0
    for _ in range(iters):
        W, H = mu_step(V, W, H)
        trace.append(frobenius_sq(V, W @ H))
        if tol is not None:
            prev, cur = trace[-2], trace[-1]
            # floor keeps round-off jitter of an exact fit from looking like progress
            change = abs(prev - cur) / max(prev, 1e-12 * trace[0], 1e-300)
            quiet = quiet + 1 if change < tol else 0
            if quiet >= patience:
                break
    return NmfFactorization(W=W, H=H, objective_trace=trace)
