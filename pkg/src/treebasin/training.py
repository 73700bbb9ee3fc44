"""Cross-entropy training of soft tree ensembles.

Gradients are computed analytically (closed-form backward pass through
the leaf-flow products), optimized with Adam under its usual defaults.
Mini-batch order is a deterministic function of (seed, epoch), and the
trailing incomplete batch of each epoch is used rather than dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .architecture import ArchitectureSpec, EnsembleParams, init_params, layout_for
from .model import accuracy


@dataclass
class TrainConfig:
    learning_rates: tuple[float, ...] = (0.01, 0.001, 0.0001)
    batch_size: int = 512
    epochs: int = 50
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        self.learning_rates = tuple(float(lr) for lr in self.learning_rates)
        if not self.learning_rates:
            raise ValueError("at least one candidate learning rate is required")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        for beta in (self.adam_beta1, self.adam_beta2):
            if not 0.0 < beta < 1.0:
                raise ValueError("Adam betas must lie strictly in (0, 1)")


@dataclass
class Grads:
    """Gradient arrays shaped like the stacked ensemble parameters."""

    w: np.ndarray
    b: np.ndarray
    pi: np.ndarray


@dataclass
class AdamState:
    m: Grads
    v: Grads
    step: int = 0

    @classmethod
    def zeros(cls, spec: ArchitectureSpec) -> "AdamState":
        def z():
            return Grads(
                w=np.zeros((spec.trees, spec.features, spec.node_count)),
                b=np.zeros((spec.trees, spec.node_count)),
                pi=np.zeros((spec.trees, spec.classes, spec.leaf_count)),
            )

        return cls(m=z(), v=z())


def cross_entropy(logits, label: int) -> float:
    """-log softmax(logits)[label], stabilized with log-sum-exp."""
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= label < logits.shape[0]:
        raise ValueError(f"label {label} out of range for {logits.shape[0]} classes")
    m = logits.max()
    return float(np.log(np.exp(logits - m).sum()) + m - logits[label])


def loss_and_gradients(params: EnsembleParams, X, labels) -> tuple[float, Grads]:
    """Mean cross-entropy over the batch and its gradient."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    if labels.min() < 0 or labels.max() >= params.spec.classes:
        raise ValueError("labels out of range")
    lay = layout_for(params.spec)
    frozen = params.spec.frozen_leaf
    loss, gw, gb, gpi = backend.kernels().loss_and_grads(
        X,
        labels,
        params.w,
        params.b,
        params.pi,
        lay.path_nodes,
        lay.path_sides,
        lay.path_len,
        -1 if frozen is None else frozen,
    )
    return loss, Grads(gw, gb, gpi)


def gradients(params: EnsembleParams, X, labels) -> Grads:
    return loss_and_gradients(params, X, labels)[1]


def adam_step(
    state: AdamState, params: EnsembleParams, grads: Grads, lr: float,
    beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
) -> tuple[AdamState, EnsembleParams]:
    """One bias-corrected Adam update; returns fresh state and params."""
    t = state.step + 1
    new_m, new_v = Grads(None, None, None), Grads(None, None, None)
    new_params = params.copy()
    for name in ("w", "b", "pi"):
        g = getattr(grads, name)
        m = beta1 * getattr(state.m, name) + (1.0 - beta1) * g
        v = beta2 * getattr(state.v, name) + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        setattr(new_m, name, m)
        setattr(new_v, name, v)
        arr = getattr(new_params, name)
        arr -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return AdamState(new_m, new_v, t), new_params


def _epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, epoch]))
    return rng.permutation(n)


def train(
    spec: ArchitectureSpec, train_set, config: TrainConfig, lr: float
) -> tuple[EnsembleParams, list[float]]:
    """Run the full mini-batch loop; returns final parameters and the
    per-epoch training accuracy history."""
    X = np.ascontiguousarray(train_set.features, dtype=np.float64)
    y = np.ascontiguousarray(train_set.labels, dtype=np.int64)
    n = X.shape[0]
    if n == 0:
        raise ValueError("training set must be nonempty")

    params = init_params(spec, config.seed)
    state = AdamState.zeros(spec)
    history: list[float] = []
    for epoch in range(config.epochs):
        order = _epoch_order(config.seed, epoch, n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            _, grads = loss_and_gradients(params, X[batch], y[batch])
            state, params = adam_step(
                state, params, grads, lr,
                config.adam_beta1, config.adam_beta2, config.adam_eps,
            )
        history.append(accuracy(params, train_set))
    return params, history


@dataclass
class LrSelection:
    lr: float
    params: EnsembleParams
    history: list[float]
    final_accuracies: dict[float, float] = field(default_factory=dict)


def select_learning_rate(
    spec: ArchitectureSpec, train_set, config: TrainConfig
) -> LrSelection:
    """Train once per candidate rate and keep the run with the best
    final-epoch training accuracy (ties go to the larger rate)."""
    best: LrSelection | None = None
    finals: dict[float, float] = {}
    for lr in config.learning_rates:
        params, history = train(spec, train_set, config, lr)
        finals[lr] = history[-1]
        if (
            best is None
            or history[-1] > best.history[-1]
            or (history[-1] == best.history[-1] and lr > best.lr)
        ):
            best = LrSelection(lr, params, history)
    best.final_accuracies = finals
    return best
