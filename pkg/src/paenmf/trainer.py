"""Full-batch training of the PAE-NMF network.

The batch objective is the per-point objective summed over all data
points: ``sum ||v - v_hat||^2 / (2 sigma_sq) + sum_points sum_dims KL``.
Parameters move by Adam (plain gradient descent available); after every
step negative entries of ``W_f`` are set to zero.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import weibull
from .matrix import ShapeError, as_nonneg, project_nonneg, relative_error
from .model import (
    DecoderWeights,
    EncoderParams,
    Model,
    ObjectiveWeights,
    backward,
    forward,
    forward_median,
    objective_terms,
)
from .nmf import factorize
from .special import log_gamma

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e12
OPTIMIZERS = ("gd", "adam")


class DivergenceError(ArithmeticError):
    """Training produced a non-finite or exploding objective."""

    def __init__(self, message, last_finite_epoch):
        super().__init__(message)
        self.last_finite_epoch = last_finite_epoch


@dataclass
class TrainConfig:
    r: int = 5
    hidden_width: int | None = None  # None -> 2 * r
    learning_rate: float = 1e-3
    epochs: int = 5000
    sigma_sq: float = 1.0
    prior_k: float = 1.0
    prior_lambda: float = 1.0
    kl_enabled: bool = True
    stochastic: bool = True
    seed: int = 0
    init_noise_scale: float = 0.01
    eps_clamp: float = weibull.EPS_CLAMP
    n_samples: int = 1
    nmf_iters: int = 1000
    optimizer: str = "adam"

    def __post_init__(self):
        if self.hidden_width is None:
            self.hidden_width = 2 * self.r

    def validate(self):
        problems = []
        if self.r < 1:
            problems.append("r must be >= 1")
        if self.hidden_width < 1:
            problems.append("hidden_width must be >= 1")
        if not self.learning_rate >= 0:
            problems.append("learning_rate must be >= 0")
        if self.epochs < 1:
            problems.append("epochs must be >= 1")
        if not self.sigma_sq > 0:
            problems.append("sigma_sq must be > 0")
        if not (self.prior_k > 0 and self.prior_lambda > 0):
            problems.append("prior parameters must be > 0")
        if not 0 < self.eps_clamp < 0.5:
            problems.append("eps_clamp must lie in (0, 0.5)")
        if self.init_noise_scale < 0:
            problems.append("init_noise_scale must be >= 0")
        if self.n_samples < 1:
            problems.append("n_samples must be >= 1")
        if self.nmf_iters < 1:
            problems.append("nmf_iters must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            problems.append(f"optimizer must be one of {OPTIMIZERS}")
        if problems:
            raise ValueError("invalid TrainConfig: " + "; ".join(problems))
        return self

    def objective_weights(self):
        return ObjectiveWeights(
            sigma_sq=self.sigma_sq,
            recon_weight=1.0,
            kl_weight=1.0 if self.kl_enabled else 0.0,
            prior_k=self.prior_k,
            prior_lambda=self.prior_lambda,
        )

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, values):
        """Build a config from strings or typed values keyed by field name."""
        types = {f.name: _type_name(f.type) for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, types[key], raw)
        return cls(**kwargs)


def _type_name(t):
    return t if isinstance(t, str) else getattr(t, "__name__", str(t))


def _coerce(key, typ, raw):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if "None" in typ and text.lower() in ("", "none"):
        return None
    try:
        if typ.startswith("bool"):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ.startswith("int"):
            return int(text)
        if typ.startswith("float"):
            return float(text)
    except ValueError:
        raise ValueError(f"config key {key!r}: cannot parse {raw!r} as {typ}") from None
    return text


@dataclass
class TrainLogRecord:
    epoch: int
    recon_term: float
    kl_term: float
    total: float


@dataclass
class EvalResult:
    median_recon_error: float
    mean_k: np.ndarray
    mean_lambda: np.ndarray


def _check_data(V, model=None):
    V = as_nonneg(V, "V")
    if model is not None and V.shape[0] != model.encoder.m:
        raise ShapeError(f"data has m={V.shape[0]} rows, model expects m={model.encoder.m}")
    return V


def draw_eps(rng, r, n, delta):
    return weibull.clamp_eps(rng.uniform(size=(r, n)), delta)


def objective(model, V, eps_matrix, config):
    """Batch objective ``(recon, kl, total)`` for one set of uniform draws.

    ``eps_matrix`` (r x n) is ignored when ``config.stochastic`` is false;
    the median pass is used instead.
    """
    V = _check_data(V, model)
    if config.stochastic:
        trace = forward(model.encoder, model.decoder, V, eps_matrix, config.eps_clamp)
    else:
        trace = forward_median(model.encoder, model.decoder, V)
    recon, kl = objective_terms(trace, config.objective_weights())
    total = recon + (kl if config.kl_enabled else 0.0)
    return recon, kl, total


def initial_model(V, config):
    """Starting network for :func:`train`.

    The decoder is the baseline NMF ``W`` plus uniform noise in
    ``[0, init_noise_scale * mean(W)]``. Each column of ``W`` is first
    rescaled (with the inverse scaling absorbed by ``H``, so ``WH`` is
    unchanged) so that its NMF coefficients have the prior's mean. The
    encoder starts by mapping every input to the prior.
    """
    V = _check_data(V)
    nmf_seq, noise_seq, enc_seq = np.random.SeedSequence(config.seed).spawn(3)
    nmf = factorize(V, config.r, iters=config.nmf_iters,
                    seed=int(nmf_seq.generate_state(1)[0]))
    prior_mean = config.prior_lambda * math.exp(log_gamma(1.0 + 1.0 / config.prior_k))
    row_mean = nmf.H.mean(axis=1)
    col_scale = np.where(row_mean > 0, row_mean / prior_mean, 1.0)
    W = nmf.W * col_scale[None, :]
    noise = np.random.default_rng(noise_seq).uniform(
        0.0, config.init_noise_scale * float(W.mean()), size=W.shape
    )
    decoder = DecoderWeights(W + noise)
    encoder = EncoderParams.init(
        V.shape[0], config.hidden_width, config.r, np.random.default_rng(enc_seq),
        start_k=config.prior_k, start_lambda=config.prior_lambda,
    )
    return Model(encoder, decoder)


class _Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {}
        self.v = {}

    def steps(self, grads):
        self.t += 1
        out = {}
        for name, g in grads.items():
            m = self.m.get(name, 0.0) * self.b1 + (1 - self.b1) * g
            v = self.v.get(name, 0.0) * self.b2 + (1 - self.b2) * g * g
            self.m[name], self.v[name] = m, v
            m_hat = m / (1 - self.b1**self.t)
            v_hat = v / (1 - self.b2**self.t)
            out[name] = self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return out


def _epoch_pass(model, V, config, weights, rng):
    """Forward/backward over the whole batch, averaged over ``n_samples`` draws."""
    r, n = config.r, V.shape[1]
    recon = kl = 0.0
    grads = None
    traces = []
    for _ in range(config.n_samples if config.stochastic else 1):
        if config.stochastic:
            eps = draw_eps(rng, r, n, config.eps_clamp)
            trace = forward(model.encoder, model.decoder, V, eps, config.eps_clamp)
        else:
            trace = forward_median(model.encoder, model.decoder, V)
        g = backward(trace, model.encoder, model.decoder, weights).arrays()
        rc, kc = objective_terms(trace, weights, with_kl=config.kl_enabled)
        recon += rc
        kl += kc
        grads = g if grads is None else {k: grads[k] + g[k] for k in grads}
        traces.append(trace)
    s = float(len(traces))
    if s > 1:
        grads = {k: v / s for k, v in grads.items()}
    return recon / s, kl / s, grads, traces[-1]


def train(V, config, step_hook=None):
    """Fit a PAE-NMF model to ``V`` (m x n, one point per column).

    Parameters
    ----------
    V : array_like
        Non-negative data.
    config : TrainConfig
    step_hook : callable, optional
        Called as ``step_hook(epoch, model, trace)`` after every parameter
        update (and projection), where ``trace`` is the forward pass the
        update was computed from.

    Returns
    -------
    model : Model
    history : list of TrainLogRecord
        One record per epoch, holding the objective of the forward pass
        that produced that epoch's update.

    Raises
    ------
    DivergenceError
        If the objective becomes non-finite or exceeds 1e12.
    """
    config.validate()
    V = _check_data(V)
    if V.shape[1] < 2:
        raise ValueError("training needs at least 2 data points")
    model = initial_model(V, config)
    weights = config.objective_weights()
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(4)[3])
    adam = _Adam(config.learning_rate) if config.optimizer == "adam" else None
    history = []
    last_finite = 0
    for epoch in range(1, config.epochs + 1):
        try:
            # non-finite values are caught just below, not via numpy warnings
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                recon, kl, grads, trace = _epoch_pass(model, V, config, weights, rng)
        except (OverflowError, FloatingPointError, weibull.WeibullParameterError) as exc:
            raise DivergenceError(
                f"training diverged at epoch {epoch}: {exc}", last_finite
            ) from exc
        kl_term = kl if config.kl_enabled else 0.0
        total = recon + kl_term
        if not math.isfinite(total) or total > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"objective {total!r} at epoch {epoch} (last finite epoch {last_finite}); "
                "try a smaller learning_rate",
                last_finite,
            )
        last_finite = epoch
        history.append(TrainLogRecord(epoch, float(recon), float(kl_term), float(total)))

        if adam is not None:
            deltas = adam.steps(grads)
        else:
            deltas = {k: config.learning_rate * g for k, g in grads.items()}
        enc = model.encoder
        for name in enc.arrays():
            setattr(enc, name, getattr(enc, name) - deltas[name])
        model.decoder.W_f = project_nonneg(model.decoder.W_f - deltas["W_f"])
        if not all(np.all(np.isfinite(a)) for a in enc.arrays().values()):
            raise DivergenceError(f"non-finite parameters at epoch {epoch}", last_finite)

        if step_hook is not None:
            step_hook(epoch, model, trace)
        if epoch % 500 == 0:
            log.debug("epoch %d recon %.6g kl %.6g total %.6g", epoch, recon, kl_term, total)
    return model, history


def evaluate(model, V, config=None):
    """Median-reconstruction error and per-latent mean encoder outputs."""
    V = _check_data(V, model)
    trace = forward_median(model.encoder, model.decoder, V)
    return EvalResult(
        median_recon_error=relative_error(V, trace.v_hat),
        mean_k=trace.k.mean(axis=1),
        mean_lambda=trace.lam.mean(axis=1),
    )
