"""The PAE-NMF network.

Encoder: one ReLU hidden layer feeding two softplus heads that emit the
Weibull shape ``k`` and scale ``lambda`` of every latent dimension.
Latent draw: ``h = lambda * (-ln eps) ** (1 / k)`` with ``eps`` supplied
from outside (reparameterisation). Decoder: ``v_hat = W_f @ h`` with
``W_f >= 0`` and no bias, so its columns are NMF basis directions.

Every function accepts a single point ``v`` of shape ``(m,)`` or a batch
of shape ``(m, n)`` with one point per column. Gradients of a batch are
sums over its points.
"""

from dataclasses import dataclass, fields

import numpy as np

from . import weibull
from .matrix import ShapeError, as_nonneg

HEAD_FLOOR = weibull.PARAM_FLOOR


def softplus(z):
    return np.logaddexp(0.0, z)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def relu(z):
    return np.maximum(z, 0.0)


def positive_head(z):
    """Strictly positive activation used for both ``k`` and ``lambda``."""
    return softplus(z) + HEAD_FLOOR


def inverse_positive_head(y):
    """Pre-activation ``z`` with ``positive_head(z) == y`` (``y > HEAD_FLOOR``)."""
    y = float(y) - HEAD_FLOOR
    if y <= 0:
        raise ValueError(f"head output must exceed {HEAD_FLOOR}")
    # log(expm1(y)), written to stay finite for large y
    return y + np.log(-np.expm1(-y))


def _glorot(rng, fan_out, fan_in):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_out, fan_in))


@dataclass
class EncoderParams:
    W_hidden: np.ndarray  # (p, m)
    b_hidden: np.ndarray  # (p,)
    W_k: np.ndarray  # (r, p)
    b_k: np.ndarray  # (r,)
    W_lambda: np.ndarray  # (r, p)
    b_lambda: np.ndarray  # (r,)

    def __post_init__(self):
        for f in fields(self):
            setattr(self, f.name, np.array(getattr(self, f.name), dtype=np.float64))
        p, m = self.W_hidden.shape
        r = self.W_k.shape[0]
        expected = {
            "b_hidden": (p,), "W_k": (r, p), "b_k": (r,),
            "W_lambda": (r, p), "b_lambda": (r,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ShapeError(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}"
                )
        if not all(np.all(np.isfinite(a)) for a in self.arrays().values()):
            raise ValueError("encoder parameters must be finite")

    @classmethod
    def init(cls, m, p, r, rng, start_k=1.0, start_lambda=1.0):
        """Glorot-uniform hidden layer with zero bias; constant heads.

        Head weights start at zero and head biases are chosen so every
        input initially maps to ``Weibull(start_k, start_lambda)``.
        """
        return cls(
            W_hidden=_glorot(rng, p, m),
            b_hidden=np.zeros(p),
            W_k=np.zeros((r, p)),
            b_k=np.full(r, inverse_positive_head(start_k)),
            W_lambda=np.zeros((r, p)),
            b_lambda=np.full(r, inverse_positive_head(start_lambda)),
        )

    @property
    def m(self):
        return self.W_hidden.shape[1]

    @property
    def p(self):
        return self.W_hidden.shape[0]

    @property
    def r(self):
        return self.W_k.shape[0]

    def arrays(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self):
        return EncoderParams(**{k: v.copy() for k, v in self.arrays().items()})


@dataclass
class DecoderWeights:
    W_f: np.ndarray  # (m, r), non-negative

    def __post_init__(self):
        self.W_f = as_nonneg(self.W_f, "W_f").copy()

    def copy(self):
        return DecoderWeights(self.W_f.copy())


@dataclass
class ObjectiveWeights:
    """Scalars of the per-point objective

    ``recon_weight * ||v - v_hat||^2 / (2 sigma_sq) + kl_weight * sum_i KL_i``

    where ``KL_i`` is the divergence of latent ``i`` from the prior
    ``Weibull(prior_k, prior_lambda)``.
    """

    sigma_sq: float = 1.0
    recon_weight: float = 1.0
    kl_weight: float = 1.0
    prior_k: float = 1.0
    prior_lambda: float = 1.0


@dataclass
class ForwardTrace:
    v: np.ndarray
    z_hidden: np.ndarray
    hidden: np.ndarray
    z_k: np.ndarray
    z_lambda: np.ndarray
    k: np.ndarray
    lam: np.ndarray
    eps: np.ndarray
    h: np.ndarray
    v_hat: np.ndarray

    @property
    def params(self):
        return weibull.WeibullParams(self.k, self.lam)


@dataclass
class ParameterGradients:
    W_hidden: np.ndarray
    b_hidden: np.ndarray
    W_k: np.ndarray
    b_k: np.ndarray
    W_lambda: np.ndarray
    b_lambda: np.ndarray
    W_f: np.ndarray

    def arrays(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def max_abs(self):
        return max(float(np.max(np.abs(a))) for a in self.arrays().values())


def _as_batch(params, v):
    v = np.asarray(v, dtype=np.float64)
    single = v.ndim == 1
    V = v[:, None] if single else v
    if V.ndim != 2 or V.shape[0] != params.m:
        raise ShapeError(f"input of shape {v.shape} does not match encoder input size m={params.m}")
    return V, single


def _encode_batch(params, V):
    z_hidden = params.W_hidden @ V + params.b_hidden[:, None]
    hidden = relu(z_hidden)
    z_k = params.W_k @ hidden + params.b_k[:, None]
    z_lambda = params.W_lambda @ hidden + params.b_lambda[:, None]
    return z_hidden, hidden, z_k, z_lambda


def encode(params, v):
    """Map data to the Weibull parameters of its latent distribution."""
    V, single = _as_batch(params, v)
    _, _, z_k, z_lambda = _encode_batch(params, V)
    k, lam = positive_head(z_k), positive_head(z_lambda)
    if single:
        k, lam = k[:, 0], lam[:, 0]
    return weibull.WeibullParams(k, lam)


def forward(params, dec, v, eps, delta=weibull.EPS_CLAMP):
    """Full stochastic pass; ``eps`` holds uniform draws, shape like ``h``.

    The returned trace is always batch-shaped (2-D), including for a
    single input vector.
    """
    V, _ = _as_batch(params, v)
    if dec.W_f.shape != (params.m, params.r):
        raise ShapeError(
            f"W_f has shape {dec.W_f.shape}, expected {(params.m, params.r)}"
        )
    eps = np.asarray(eps, dtype=np.float64)
    if eps.ndim == 1:
        eps = eps[:, None]
    if eps.shape != (params.r, V.shape[1]):
        raise ShapeError(f"eps has shape {eps.shape}, expected {(params.r, V.shape[1])}")
    eps = weibull.clamp_eps(eps, delta)
    z_hidden, hidden, z_k, z_lambda = _encode_batch(params, V)
    k, lam = positive_head(z_k), positive_head(z_lambda)
    h = weibull.inverse_cdf(eps, k, lam, delta)
    v_hat = dec.W_f @ h
    return ForwardTrace(V, z_hidden, hidden, z_k, z_lambda, k, lam, eps, h, v_hat)


def forward_median(params, dec, v):
    """Deterministic pass with every latent at its distribution median."""
    V, _ = _as_batch(params, v)
    return forward(params, dec, V, np.full((params.r, V.shape[1]), 0.5))


def objective_terms(trace, weights, with_kl=True):
    """Unweighted summed terms ``(recon, kl)`` of a forward trace.

    ``recon = sum ||v - v_hat||^2 / (2 sigma_sq)``; ``kl`` sums the
    per-latent divergences from the prior over latents and points
    (reported as 0 when ``with_kl`` is false).
    """
    resid = trace.v - trace.v_hat
    recon = float(np.sum(resid * resid)) / (2.0 * weights.sigma_sq)
    if not with_kl:
        return recon, 0.0
    kl = float(np.sum(weibull.kl_divergence(
        trace.k, trace.lam, weights.prior_k, weights.prior_lambda
    )))
    return recon, kl


def scalar_objective(trace, weights):
    recon, kl = objective_terms(trace, weights, with_kl=weights.kl_weight != 0.0)
    return weights.recon_weight * recon + weights.kl_weight * kl


def backward(trace, params, dec, weights):
    """Gradients of :func:`scalar_objective` for the trace's ``eps``.

    Chain rule: decoder -> reparameterised sample -> positive heads ->
    ReLU hidden layer, plus the KL term's direct dependence on ``k`` and
    ``lambda``.
    """
    n = trace.v.shape[1]
    if trace.k.shape != (params.r, n) or dec.W_f.shape != (params.m, params.r):
        raise ShapeError("trace does not match encoder/decoder shapes")

    d_vhat = -(weights.recon_weight / weights.sigma_sq) * (trace.v - trace.v_hat)
    g_W_f = d_vhat @ trace.h.T
    d_h = dec.W_f.T @ d_vhat

    dh_dk, dh_dlam = weibull.sample_gradients(trace.eps, trace.k, trace.lam)
    d_k = d_h * dh_dk
    d_lam = d_h * dh_dlam
    if weights.kl_weight != 0.0:
        kl_dk, kl_dlam = weibull.kl_gradients(
            trace.k, trace.lam, weights.prior_k, weights.prior_lambda
        )
        d_k = d_k + weights.kl_weight * kl_dk
        d_lam = d_lam + weights.kl_weight * kl_dlam

    d_zk = d_k * sigmoid(trace.z_k)
    d_zlam = d_lam * sigmoid(trace.z_lambda)
    d_hidden = params.W_k.T @ d_zk + params.W_lambda.T @ d_zlam
    d_zhidden = d_hidden * (trace.z_hidden > 0)

    return ParameterGradients(
        W_hidden=d_zhidden @ trace.v.T,
        b_hidden=d_zhidden.sum(axis=1),
        W_k=d_zk @ trace.hidden.T,
        b_k=d_zk.sum(axis=1),
        W_lambda=d_zlam @ trace.hidden.T,
        b_lambda=d_zlam.sum(axis=1),
        W_f=g_W_f,
    )


def sample_reconstructions(params, dec, v, n, rng_seed, k_override=None):
    """Generate ``n`` new data points from the latent distribution of ``v``.

    Each column is ``W_f @ h`` for a fresh ``h ~ q(h | v)``. ``k_override``
    replaces every shape parameter (a diagnostic for spread).

    Returns
    -------
    ndarray, shape (m, n)
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"expected a single point of shape (m,), got {v.shape}")
    q = encode(params, v)
    k = np.full_like(q.k, float(k_override)) if k_override is not None else q.k
    rng = np.random.default_rng(rng_seed)
    eps = rng.uniform(size=(params.r, n))
    h = weibull.inverse_cdf(eps, k[:, None], q.lam[:, None])
    return dec.W_f @ h


def lipschitz_bound(params):
    """Upper bound on ``||encode(v) - encode(u)|| / ||v - u||``.

    ReLU and softplus are 1-Lipschitz, so the product of the spectral
    norms of the hidden layer and the stacked heads bounds the map.
    """
    heads = np.vstack([params.W_k, params.W_lambda])
    return float(np.linalg.norm(params.W_hidden, 2) * np.linalg.norm(heads, 2))


@dataclass
class Model:
    """Encoder and decoder of a PAE-NMF network."""

    encoder: EncoderParams
    decoder: DecoderWeights

    @property
    def W_f(self):
        return self.decoder.W_f

    def encode(self, v):
        return encode(self.encoder, v)

    def reconstruct_median(self, V):
        return forward_median(self.encoder, self.decoder, V).v_hat

    def copy(self):
        return Model(self.encoder.copy(), self.decoder.copy())
