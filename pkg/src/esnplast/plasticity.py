"""Unsupervised reservoir pretraining: Oja, BCM, and Gaussian intrinsic plasticity.

The synaptic rules (Oja, BCM) adapt the nonzero recurrent weights while the
sparsity pattern stays frozen; afterwards the recurrent matrix is rescaled
back to its configured spectral radius so the echo state property survives
pretraining. Intrinsic plasticity adapts only the per-neuron gain and bias,
driving each neuron's output distribution toward a target Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import ConfigError, NumericalError
from .reservoir import ReservoirWeights, rescale_spectral_radius

__all__ = [
    "OjaConfig",
    "BcmConfig",
    "IpConfig",
    "PlasticityConfig",
    "oja_step",
    "bcm_step",
    "bcm_threshold_update",
    "ip_step",
    "kl_to_gaussian",
    "pretrain",
]


@dataclass(frozen=True)
class OjaConfig:
    """Hebbian rule with a weight-decay (forgetting) term that bounds growth."""

    learning_rate: float = 1e-4
    epochs: int = 100
    max_steps_per_epoch: int | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be nonnegative, got {self.epochs}")


@dataclass(frozen=True)
class BcmConfig:
    """Hebbian rule stabilized by a sliding per-neuron modification threshold.

    The threshold tracks the running average of squared postsynaptic
    activity with time constant ``threshold_time_constant`` and is floored
    at ``theta_floor`` because the weight update divides by it.
    """

    learning_rate: float = 1e-3
    threshold_time_constant: float = 100.0
    epochs: int = 100
    theta_floor: float = 1e-6
    theta_init: float = 1.0
    max_steps_per_epoch: int | None = None

    def __post_init__(self):
        for name in ("learning_rate", "threshold_time_constant", "theta_floor", "theta_init"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be nonnegative, got {self.epochs}")


@dataclass(frozen=True)
class IpConfig:
    """Gaussian intrinsic plasticity targets and step size."""

    learning_rate: float = 5e-4
    target_mean: float = 0.0
    target_std: float = 0.2
    epochs: int = 10
    max_steps_per_epoch: int | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.target_std <= 0:
            raise ConfigError(f"target_std must be positive, got {self.target_std}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be nonnegative, got {self.epochs}")


PlasticityConfig = OjaConfig | BcmConfig | IpConfig


def oja_step(w, x_pre, y_post, learning_rate: float):
    """Weight increment lr * y * (x - y * w); broadcasts over arrays.

    The subtractive term limits weight growth, pulling the incoming weight
    vector of each neuron toward unit norm instead of letting pure Hebbian
    correlation run away.
    """
    return learning_rate * y_post * (x_pre - y_post * w)


def bcm_step(w, x_pre, y_post, theta, learning_rate: float, theta_floor: float = 1e-6):
    """Weight increment lr * y * (y - theta) * x / theta; broadcasts over arrays.

    Postsynaptic activity above the threshold strengthens the active
    synapse, below weakens it. ``theta`` is clamped to ``theta_floor``
    rather than raising, since silent neurons legitimately drive it to zero.
    """
    theta = np.maximum(theta, theta_floor)
    return learning_rate * y_post * (y_post - theta) * x_pre / theta


def bcm_threshold_update(theta, y_post, time_constant: float):
    """Exponential moving average of squared activity: theta + (y^2 - theta)/tau."""
    if time_constant < 1.0:
        raise ConfigError(f"time constant must be >= 1, got {time_constant}")
    return theta + (y_post * y_post - theta) / time_constant


def ip_step(gain, bias, net, activation, cfg: IpConfig):
    """Gain and bias increments for one intrinsic-plasticity update.

    ``net`` is the pre-gain net input (input drive plus recurrent drive),
    ``activation`` the neuron output after tanh. Returns (d_gain, d_bias);
    broadcasts over arrays. Gain must be strictly positive.
    """
    gain = np.asarray(gain, dtype=float)
    if np.any(gain <= 0):
        raise ConfigError("gain must be strictly positive for the 1/a term")
    eta = cfg.learning_rate
    mu = cfg.target_mean
    var = cfg.target_std ** 2
    x = activation
    d_bias = -eta * (-mu / var + (x / var) * (2.0 * var + 1.0 - x * x + mu * x))
    d_gain = eta / gain + d_bias * net
    return d_gain, d_bias


def kl_to_gaussian(samples, mean: float, std: float, bins: int = 60) -> float:
    """Histogram estimate of the KL divergence from samples to N(mean, std^2).

    Bin probabilities for the Gaussian come from CDF differences, so the
    estimate is insensitive to bin width except through the usual
    discretization bias. Degenerate (constant) samples get an artificial
    width so the result is large but finite.
    """
    if std <= 0:
        raise ConfigError(f"std must be positive, got {std}")
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ConfigError("cannot estimate a divergence from an empty sample set")
    lo, hi = float(samples.min()), float(samples.max())
    if hi - lo < 1e-12:
        pad = max(1e-3, abs(lo) * 1e-3)
        lo, hi = lo - pad, hi + pad
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    p = counts / counts.sum()
    q = np.diff(norm.cdf(edges, loc=mean, scale=std))
    q = np.maximum(q, 1e-300)
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def _validate_sequences(weights: ReservoirWeights, sequences) -> list:
    if not sequences:
        raise ConfigError("pretraining needs at least one input sequence")
    i = weights.w_in.shape[1]
    out = []
    for k, seq in enumerate(sequences):
        seq = np.atleast_2d(np.asarray(seq, dtype=float))
        if seq.shape[1] != i:
            raise ConfigError(
                f"sequence {k} has {seq.shape[1]} input columns, reservoir expects {i}"
            )
        if seq.shape[0] < 1:
            raise ConfigError(f"sequence {k} is empty")
        out.append(seq)
    return out


def _pretrain_synaptic(weights: ReservoirWeights, sequences: list, cfg) -> ReservoirWeights:
    w_res = weights.w_res
    w_res.sort_indices()
    data = w_res.data
    col_idx = w_res.indices
    row_idx = np.repeat(np.arange(w_res.shape[0]), np.diff(w_res.indptr))
    is_bcm = isinstance(cfg, BcmConfig)
    if is_bcm:
        theta = np.full(w_res.shape[0], cfg.theta_init)
    cap = cfg.max_steps_per_epoch or np.inf
    for epoch in range(cfg.epochs):
        steps = 0
        for seq in sequences:
            x = np.zeros(w_res.shape[0])
            for t in range(seq.shape[0]):
                net = weights.w_in @ seq[t] + w_res @ x
                y = np.tanh(weights.gain * net + weights.bias)
                if is_bcm:
                    data += bcm_step(
                        data, x[col_idx], y[row_idx], theta[row_idx],
                        cfg.learning_rate, cfg.theta_floor,
                    )
                    theta = bcm_threshold_update(theta, y, cfg.threshold_time_constant)
                else:
                    data += oja_step(data, x[col_idx], y[row_idx], cfg.learning_rate)
                x = y
                steps += 1
                if steps >= cap:
                    break
            if not np.all(np.isfinite(data)):
                rule = "BCM" if is_bcm else "Oja"
                raise NumericalError(
                    f"{rule} pretraining produced non-finite recurrent weights in "
                    f"epoch {epoch}; reduce the learning rate"
                )
            if steps >= cap:
                break
    # restore the configured spectral radius: unconstrained Hebbian updates can
    # push it past 1 and destroy the echo state property
    weights.w_res = rescale_spectral_radius(w_res, weights.config.spectral_radius)
    return weights


def _pretrain_ip(weights: ReservoirWeights, sequences: list, cfg: IpConfig) -> ReservoirWeights:
    cap = cfg.max_steps_per_epoch or np.inf
    for epoch in range(cfg.epochs):
        steps = 0
        for seq in sequences:
            x = np.zeros(weights.w_res.shape[0])
            for t in range(seq.shape[0]):
                net = weights.w_in @ seq[t] + weights.w_res @ x
                x = np.tanh(weights.gain * net + weights.bias)
                d_gain, d_bias = ip_step(weights.gain, weights.bias, net, x, cfg)
                weights.gain = weights.gain + d_gain
                weights.bias = weights.bias + d_bias
                steps += 1
                if steps >= cap:
                    break
            if not (np.all(np.isfinite(weights.gain)) and np.all(np.isfinite(weights.bias))):
                raise NumericalError(
                    f"intrinsic plasticity produced non-finite gain/bias in epoch "
                    f"{epoch}; reduce the learning rate"
                )
            if np.any(weights.gain <= 0):
                raise NumericalError(
                    f"intrinsic plasticity drove a gain nonpositive in epoch {epoch}; "
                    f"reduce the learning rate"
                )
            if steps >= cap:
                break
    return weights


def pretrain(weights: ReservoirWeights, sequences, rule: PlasticityConfig) -> ReservoirWeights:
    """Run one plasticity rule over the sequences and return adapted weights.

    The input weights is never mutated; a private copy is adapted. Per
    epoch every sequence is replayed from the zero state (subject to the
    rule's optional per-epoch step cap, which truncates deterministically).
    Oja/BCM touch only the recurrent weights, intrinsic plasticity only
    gain and bias. ``epochs=0`` returns an unchanged copy.
    """
    sequences = _validate_sequences(weights, sequences)
    adapted = weights.copy()
    if rule.epochs == 0:
        return adapted
    if isinstance(rule, (OjaConfig, BcmConfig)):
        return _pretrain_synaptic(adapted, sequences, rule)
    if isinstance(rule, IpConfig):
        return _pretrain_ip(adapted, sequences, rule)
    raise ConfigError(f"unknown plasticity rule {type(rule).__name__}")
