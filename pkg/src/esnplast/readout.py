"""Linear readout: offline ridge solve, online delta rule, and the hybrid of both.

Class decisions come from winner-take-all over the linear output scores;
trial decisions in multichannel mode come from a majority vote over the
per-channel decisions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError, NumericalError

__all__ = [
    "ReadoutWeights",
    "TrainingDesign",
    "delta_rule_update",
    "train_offline",
    "train_online",
    "train_hybrid",
    "winner_take_all",
    "majority_vote",
]


@dataclass
class ReadoutWeights:
    """Trained linear decoder: one output row per class."""

    w_out: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        self.w_out = np.asarray(self.w_out, dtype=float)
        self.class_names = tuple(self.class_names)
        if self.w_out.ndim != 2:
            raise ConfigError(f"w_out must be 2-D, got shape {self.w_out.shape}")
        if len(self.class_names) != self.w_out.shape[0]:
            raise ConfigError(
                f"{len(self.class_names)} class names for {self.w_out.shape[0]} output rows"
            )
        if self.w_out.shape[0] < 2:
            raise ConfigError("a classifier readout needs at least 2 outputs")
        if not np.all(np.isfinite(self.w_out)):
            raise NumericalError("readout weights contain non-finite entries")

    def scores(self, states: np.ndarray) -> np.ndarray:
        """Linear class scores for one state vector or a (n, R) batch."""
        return np.asarray(states, dtype=float) @ self.w_out.T


@dataclass
class TrainingDesign:
    """Design matrix (one pooled state per row) with one-hot targets."""

    states: np.ndarray
    targets: np.ndarray
    ridge: float = 1e-6

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.states.ndim != 2 or self.targets.ndim != 2:
            raise ConfigError("states and targets must both be 2-D")
        if self.states.shape[0] != self.targets.shape[0]:
            raise ConfigError(
                f"{self.states.shape[0]} state rows vs {self.targets.shape[0]} target rows"
            )
        if self.ridge < 0:
            raise ConfigError(f"ridge must be nonnegative, got {self.ridge}")
        row_sums = self.targets.sum(axis=1)
        if self.targets.size and not np.allclose(row_sums, 1.0):
            raise ConfigError("each target row must sum to 1 (one-hot)")


def train_offline(design: TrainingDesign, class_names) -> ReadoutWeights:
    """Regularized least squares: W = Y^T X (X^T X + ridge I)^-1.

    With ridge = 0 this is the exact normal-equations solution and
    interpolates square invertible designs; a singular Gram matrix at
    ridge = 0 raises instead of returning garbage.
    """
    x, y = design.states, design.targets
    if not np.all(np.isfinite(x)):
        raise NumericalError("design matrix contains non-finite entries")
    gram = x.T @ x + design.ridge * np.eye(x.shape[1])
    try:
        chol = scipy.linalg.cho_factor(gram, check_finite=False)
        w_out = scipy.linalg.cho_solve(chol, x.T @ y, check_finite=False).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "X^T X is singular; the offline solve needs ridge > 0 on "
            "rank-deficient designs"
        ) from exc
    if not np.all(np.isfinite(w_out)):
        raise NumericalError("offline solve produced non-finite weights")
    return ReadoutWeights(w_out=w_out, class_names=tuple(class_names))


def delta_rule_update(w_out: np.ndarray, x: np.ndarray, y_desired: np.ndarray,
                      learning_rate: float) -> np.ndarray:
    """One delta-rule increment: lr * (y_desired - W x) outer x."""
    y = w_out @ x
    return learning_rate * np.outer(y_desired - y, x)


def train_online(
    weights: ReadoutWeights,
    design: TrainingDesign,
    learning_rate: float,
    epochs: int,
    shuffle: bool = False,
    seed: int = 0,
) -> ReadoutWeights:
    """Delta-rule refinement over the design rows, sample by sample.

    Rows are presented in dataset order each epoch (set ``shuffle`` for a
    seeded permutation per epoch). A non-finite weight aborts with a
    diagnostic since it means the learning rate is too large.
    """
    if learning_rate < 0:
        raise ConfigError(f"learning_rate must be nonnegative, got {learning_rate}")
    if epochs < 0:
        raise ConfigError(f"epochs must be nonnegative, got {epochs}")
    if design.states.shape[1] != weights.w_out.shape[1]:
        raise ConfigError(
            f"design has {design.states.shape[1]} columns, readout expects "
            f"{weights.w_out.shape[1]}"
        )
    w = weights.w_out.copy()
    rng = np.random.default_rng(seed)
    n = design.states.shape[0]
    for epoch in range(epochs):
        order = rng.permutation(n) if shuffle else range(n)
        for i in order:
            w += delta_rule_update(w, design.states[i], design.targets[i], learning_rate)
        if not np.all(np.isfinite(w)):
            raise NumericalError(
                f"delta rule diverged in epoch {epoch} (non-finite weights); "
                f"reduce the learning rate"
            )
    return ReadoutWeights(w_out=w, class_names=weights.class_names)


def train_hybrid(
    design: TrainingDesign,
    class_names,
    learning_rate: float,
    epochs: int,
    shuffle: bool = False,
    seed: int = 0,
) -> ReadoutWeights:
    """Offline least-squares solution used as the delta rule's initial weights."""
    offline = train_offline(design, class_names)
    return train_online(offline, design, learning_rate, epochs, shuffle=shuffle, seed=seed)


def winner_take_all(scores) -> int:
    """Index of the highest output score; ties go to the lowest index."""
    scores = np.asarray(scores, dtype=float).ravel()
    if scores.size == 0:
        raise ConfigError("cannot pick a winner from an empty score vector")
    if not np.all(np.isfinite(scores)):
        raise NumericalError("scores contain non-finite entries")
    return int(np.argmax(scores))


def majority_vote(labels) -> int:
    """Modal class index; ties go to the lowest class index. Order-invariant."""
    labels = np.asarray(labels, dtype=int).ravel()
    if labels.size == 0:
        raise ConfigError("cannot vote over an empty label list")
    if labels.min() < 0:
        raise ConfigError("class indices must be nonnegative")
    return int(np.argmax(np.bincount(labels)))
