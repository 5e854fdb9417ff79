"""MSE training by backpropagation through time with early stopping and LR plateau decay."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import CacheMismatch, EmptyBatch, EmptySet, ShapeMismatch
from .frame import WindowSample, stack_windows
from .network import ForwardCache, NetworkWeights, forward_batch, init_weights, predict

log = logging.getLogger(__name__)

Gradients = dict[str, np.ndarray]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def mse_loss(yhat, y) -> float:
    yhat = np.asarray(yhat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if yhat.shape != y.shape:
        raise ShapeMismatch(f"prediction shape {yhat.shape} != target shape {y.shape}")
    if yhat.size == 0:
        raise EmptyBatch("empty batch")
    return float(np.mean((yhat - y) ** 2))


def _gru_grads(dh_ext, Xt, scan, p):
    hs, z, r, n, hn = scan
    dxp, dhp = kernels.gru_backward(np.ascontiguousarray(dh_ext), hs, z, r, n, hn, p.U)
    H3 = dxp.shape[-1]
    dxp2 = dxp.reshape(-1, H3)
    return (
        dxp2.T @ Xt.reshape(-1, Xt.shape[-1]),
        dhp.reshape(-1, H3).T @ hs[:-1].reshape(-1, hs.shape[-1]),
        dxp2.sum(axis=0),
    )


def backward(cache: ForwardCache, targets, w: NetworkWeights) -> Gradients:
    """Gradient of the batch MSE with respect to every parameter of ``w``.

    ``cache`` must come from :func:`forward_batch` on the same batch.
    """
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    B = cache.batch
    if y.shape != (B,):
        raise CacheMismatch(f"cache holds {B} samples, got {y.size} targets")
    if cache.Xt.shape[0] != w.window or cache.Xt.shape[2] != w.input_dim:
        raise CacheMismatch("cache shape does not match the weights")

    dy = 2.0 * (cache.yhat - y) / B
    grads: Gradients = {
        "dense_w": cache.dense_in.T @ dy,
        "dense_b": np.array(dy.sum()),
    }
    dh_last = np.outer(dy, w.dense_w)
    if cache.mask_last is not None:
        dh_last *= cache.mask_last

    hs, cs, gates = cache.lstm
    Hl = w.lstm_hidden
    dh_ext = np.zeros((w.window, B, Hl))
    dh_ext[-1] = dh_last
    dpre = kernels.lstm_backward(dh_ext, hs, cs, gates, w.lstm.U)
    dpre2 = dpre.reshape(-1, 4 * Hl)
    grads["lstm.W"] = dpre2.T @ cache.lstm_in.reshape(-1, cache.lstm_in.shape[-1])
    grads["lstm.U"] = dpre2.T @ hs[:-1].reshape(-1, Hl)
    grads["lstm.b"] = dpre2.sum(axis=0)

    dseq = (dpre2 @ w.lstm.W).reshape(w.window, B, -1)
    if cache.mask_seq is not None:
        dseq *= cache.mask_seq
    Hg = w.gru_hidden
    gW, gU, gb = _gru_grads(dseq[:, :, :Hg], cache.Xt, cache.gru_f, w.gru_fwd)
    grads["gru_fwd.W"], grads["gru_fwd.U"], grads["gru_fwd.b"] = gW, gU, gb
    # backward direction ran over the reversed sequence
    gW, gU, gb = _gru_grads(dseq[::-1, :, Hg:], cache.Xt[::-1], cache.gru_b, w.gru_bwd)
    grads["gru_bwd.W"], grads["gru_bwd.U"], grads["gru_bwd.b"] = gW, gU, gb
    return {name: grads[name] for name in w.parameters()}


def global_norm(grads: Gradients) -> float:
    return math.sqrt(sum(float(np.vdot(g, g)) for g in grads.values()))


def clip_global_norm(grads: Gradients, max_norm: float) -> Gradients:
    if not math.isfinite(max_norm):
        return grads
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, w: NetworkWeights) -> AdamState:
        params = w.parameters()
        return cls(
            {k: np.zeros_like(p) for k, p in params.items()},
            {k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(
    w: NetworkWeights, grads: Gradients, state: AdamState, lr: float, inplace: bool = False
) -> tuple[NetworkWeights, AdamState]:
    """One bias-corrected Adam update.

    By default ``w`` and ``state`` are left untouched and fresh copies are
    returned; ``inplace=True`` overwrites their arrays (the training loop's
    exclusive-owner fast path).
    """
    params = w.parameters()
    if grads.keys() != params.keys():
        raise ShapeMismatch("gradient names do not match the weights")
    if not inplace:
        w = w.copy()
        params = w.parameters()
        state = AdamState(
            {k: a.copy() for k, a in state.m.items()},
            {k: a.copy() for k, a in state.v.items()},
            state.step,
        )
    t = state.step + 1
    c1 = 1.0 - ADAM_BETA1**t
    c2 = 1.0 - ADAM_BETA2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeMismatch(f"{name}: gradient {g.shape} vs parameter {p.shape}")
        if name == "dense_b":
            continue
        kernels.adam_update(
            p.reshape(-1),
            np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
            state.m[name].reshape(-1),
            state.v[name].reshape(-1),
            lr, ADAM_BETA1, ADAM_BETA2, c1, c2, ADAM_EPS,
        )
    # the scalar bias lives outside the arrays
    b = np.array([w.dense_b])
    kernels.adam_update(
        b, np.array([float(grads["dense_b"])]), state.m["dense_b"].reshape(-1),
        state.v["dense_b"].reshape(-1), lr, ADAM_BETA1, ADAM_BETA2, c1, c2, ADAM_EPS,
    )
    state.step = t
    object.__setattr__(w, "dense_b", float(b[0]))
    return w, state


sgd_adam_step = adam_step


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 200
    batch_size: int = 16
    early_stop_patience: int = 5
    lr_plateau_patience: int = 3
    lr_floor: float = 1e-6
    lr_initial: float = 1e-3
    lr_decay_factor: float = 0.5
    rng_seed: int = 0
    clip_norm: float = 5.0
    min_delta: float = 1e-12
    gru_hidden: int = 256
    lstm_hidden: int = 128
    dropout: float = 0.2

    def __post_init__(self):
        for name in ("max_epochs", "batch_size", "early_stop_patience", "lr_plateau_patience"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 < self.lr_floor <= self.lr_initial:
            raise ValueError("need 0 < lr_floor <= lr_initial")
        if not 0.0 < self.lr_decay_factor < 1.0:
            raise ValueError("lr_decay_factor must lie in (0, 1)")
        if not self.clip_norm > 0:
            raise ValueError("clip_norm must be positive")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float


@dataclass
class TrainState:
    """Early-stopping and plateau bookkeeping, updated once per epoch."""

    weights: NetworkWeights
    lr: float
    best_weights: NetworkWeights | None = None
    best_val: float = math.inf
    best_epoch: int = 0
    since_improvement: int = 0
    since_lr_drop: int = 0
    history: list[EpochRecord] = field(default_factory=list)
    stopped_early: bool = False

    def end_epoch(
        self, train_loss: float, val_loss: float, weights: NetworkWeights, cfg: TrainConfig
    ) -> bool:
        """Record one epoch; returns True when training should stop."""
        self.weights = weights
        epoch = len(self.history) + 1
        self.history.append(EpochRecord(epoch, train_loss, val_loss, self.lr))
        if val_loss < self.best_val - cfg.min_delta:
            self.best_val = val_loss
            self.best_epoch = epoch
            self.best_weights = weights
            self.since_improvement = 0
            self.since_lr_drop = 0
        else:
            self.since_improvement += 1
            self.since_lr_drop += 1
        if self.since_lr_drop >= cfg.lr_plateau_patience:
            self.lr = max(self.lr * cfg.lr_decay_factor, cfg.lr_floor)
            self.since_lr_drop = 0
        if self.since_improvement >= cfg.early_stop_patience:
            self.stopped_early = True
            return True
        return False


def _as_arrays(samples) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(samples, tuple) and len(samples) == 2 and isinstance(samples[0], np.ndarray):
        X, y = samples
        return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64)
    return stack_windows(samples)


def fit(
    train: Sequence[WindowSample] | tuple[np.ndarray, np.ndarray],
    val: Sequence[WindowSample] | tuple[np.ndarray, np.ndarray],
    cfg: TrainConfig = TrainConfig(),
    weights: NetworkWeights | None = None,
    val_loss: Callable[[NetworkWeights], float] | None = None,
) -> tuple[NetworkWeights, TrainState]:
    """Train and return the best-validation snapshot together with the final state.

    ``train``/``val`` are window samples or ``(X, y)`` array pairs. ``val_loss``
    overrides the default inference-mode MSE on ``val`` (used to rig the
    stopping logic in tests).
    """
    X, y = _as_arrays(train)
    Xv, yv = _as_arrays(val)
    if len(X) == 0 or len(Xv) == 0:
        raise EmptySet("training and validation sets must be non-empty")
    if X.shape[1:] != Xv.shape[1:] or X.ndim != 3:
        raise ShapeMismatch(f"train windows {X.shape[1:]} vs validation {Xv.shape[1:]}")
    L, D = X.shape[1:]
    if weights is None:
        weights = init_weights(
            D, L, cfg.gru_hidden, cfg.lstm_hidden, cfg.dropout, seed=cfg.rng_seed
        )
    elif (weights.window, weights.input_dim) != (L, D):
        raise ShapeMismatch("initial weights do not match the window shape")
    else:
        weights = weights.copy()
    if val_loss is None:
        def val_loss(w):
            return mse_loss(predict(Xv, w), yv)

    rng = np.random.default_rng(cfg.rng_seed)
    opt = AdamState.zeros_like(weights)
    state = TrainState(weights=weights, lr=cfg.lr_initial)
    n = len(X)
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = order[s : s + cfg.batch_size]
            yhat, cache = forward_batch(X[idx], weights, train=True, rng=rng)
            total += float(np.sum((yhat - y[idx]) ** 2))
            grads = clip_global_norm(backward(cache, y[idx], weights), cfg.clip_norm)
            weights, opt = adam_step(weights, grads, opt, state.lr, inplace=True)
        train_loss = total / n
        vl = float(val_loss(weights))
        stop = state.end_epoch(train_loss, vl, weights.copy(), cfg)
        log.info("epoch %d train %.6g val %.6g lr %.3g", epoch, train_loss, vl, state.history[-1].lr)
        if stop:
            break
    return state.best_weights, state
