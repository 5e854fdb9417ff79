"""Hybrid BiGRU -> dropout -> LSTM -> dropout -> dense forecaster (forward pass).

Conventions, recorded in every weight file under :data:`CONVENTIONS`:

* GRU: ``z, r = sigmoid(.)``, ``n = relu(W_n x + r * (U_n h) + b_n)``,
  ``h = (1 - z) * n + z * h_prev``.
* LSTM: sigmoid gates ``i, f, o``, ``g = relu(.)``, ``c = f * c_prev + i * g``,
  ``h = o * relu(c)``.
* Inverted dropout per time step on the BiGRU output and once on the final
  LSTM state.

Gate blocks are stacked row-wise: GRU ``[z, r, n]``, LSTM ``[i, f, g, o]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import DimensionMismatch
from .kernels._numpy import sigmoid as _sigmoid

CONVENTIONS = "gru:cho-carry-z,reset-after-matmul;act:relu-candidate,relu-cell;dropout:inverted"
GRU_GATES = ("z", "r", "n")
LSTM_GATES = ("i", "f", "g", "o")


def _check_finite(name, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError(f"{name} has non-finite entries")


@dataclass(frozen=True)
class GruParams:
    W: np.ndarray  # (3H, D)
    U: np.ndarray  # (3H, H)
    b: np.ndarray  # (3H,)

    def __post_init__(self):
        for name in ("W", "U", "b"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))
        H3, H = self.U.shape
        if H3 != 3 * H or self.W.shape[0] != H3 or self.b.shape != (H3,):
            raise DimensionMismatch("inconsistent GRU parameter shapes")
        _check_finite("GruParams", self.W, self.U, self.b)

    @property
    def hidden(self) -> int:
        return self.U.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(W_g, U_g, b_g)`` views for one of ``z``, ``r``, ``n``."""
        k = GRU_GATES.index(name)
        sl = slice(k * self.hidden, (k + 1) * self.hidden)
        return self.W[sl], self.U[sl], self.b[sl]


@dataclass(frozen=True)
class LstmParams:
    W: np.ndarray  # (4H, D_in)
    U: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)

    def __post_init__(self):
        for name in ("W", "U", "b"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))
        H4, H = self.U.shape
        if H4 != 4 * H or self.W.shape[0] != H4 or self.b.shape != (H4,):
            raise DimensionMismatch("inconsistent LSTM parameter shapes")
        _check_finite("LstmParams", self.W, self.U, self.b)

    @property
    def hidden(self) -> int:
        return self.U.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = LSTM_GATES.index(name)
        sl = slice(k * self.hidden, (k + 1) * self.hidden)
        return self.W[sl], self.U[sl], self.b[sl]


@dataclass(frozen=True)
class NetworkWeights:
    gru_fwd: GruParams
    gru_bwd: GruParams
    lstm: LstmParams
    dense_w: np.ndarray
    dense_b: float
    dropout: float = 0.2
    window: int = 24

    def __post_init__(self):
        object.__setattr__(self, "dense_w", np.ascontiguousarray(self.dense_w, dtype=np.float64))
        if self.gru_fwd.U.shape != self.gru_bwd.U.shape or self.gru_fwd.W.shape != self.gru_bwd.W.shape:
            raise DimensionMismatch("forward and backward GRU differ in shape")
        if self.lstm.input_dim != 2 * self.gru_fwd.hidden:
            raise DimensionMismatch("LSTM input dim must be twice the GRU hidden size")
        if self.dense_w.shape != (self.lstm.hidden,):
            raise DimensionMismatch("dense weights must match the LSTM hidden size")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout rate must lie in [0, 1)")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        object.__setattr__(self, "dense_b", float(self.dense_b))

    @property
    def input_dim(self) -> int:
        return self.gru_fwd.input_dim

    @property
    def gru_hidden(self) -> int:
        return self.gru_fwd.hidden

    @property
    def lstm_hidden(self) -> int:
        return self.lstm.hidden

    def parameters(self) -> dict[str, np.ndarray]:
        """Name -> array, in the fixed order used by weight files and optimizers."""
        return {
            "gru_fwd.W": self.gru_fwd.W,
            "gru_fwd.U": self.gru_fwd.U,
            "gru_fwd.b": self.gru_fwd.b,
            "gru_bwd.W": self.gru_bwd.W,
            "gru_bwd.U": self.gru_bwd.U,
            "gru_bwd.b": self.gru_bwd.b,
            "lstm.W": self.lstm.W,
            "lstm.U": self.lstm.U,
            "lstm.b": self.lstm.b,
            "dense_w": self.dense_w,
            "dense_b": np.array(self.dense_b),
        }

    def with_parameters(self, params: dict[str, np.ndarray]) -> NetworkWeights:
        p = {**self.parameters(), **params}
        for name, ref in self.parameters().items():
            if np.shape(p[name]) != ref.shape:
                raise DimensionMismatch(f"{name}: expected {ref.shape}, got {np.shape(p[name])}")
        return replace(
            self,
            gru_fwd=GruParams(p["gru_fwd.W"], p["gru_fwd.U"], p["gru_fwd.b"]),
            gru_bwd=GruParams(p["gru_bwd.W"], p["gru_bwd.U"], p["gru_bwd.b"]),
            lstm=LstmParams(p["lstm.W"], p["lstm.U"], p["lstm.b"]),
            dense_w=p["dense_w"],
            dense_b=float(p["dense_b"]),
        )

    def copy(self) -> NetworkWeights:
        return self.with_parameters({k: v.copy() for k, v in self.parameters().items()})

    def header(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "window": self.window,
            "gru_hidden": self.gru_hidden,
            "lstm_hidden": self.lstm_hidden,
            "dropout": self.dropout,
            "conventions": CONVENTIONS,
        }


def _glorot(rng, rows, cols, blocks):
    s = np.sqrt(6.0 / (rows + cols))
    return np.concatenate([rng.uniform(-s, s, size=(rows, cols)) for _ in range(blocks)])


def init_weights(
    input_dim: int,
    window: int = 24,
    gru_hidden: int = 256,
    lstm_hidden: int = 128,
    dropout: float = 0.2,
    seed: int = 0,
) -> NetworkWeights:
    """Glorot-uniform matrices (per gate block), zero biases."""
    rng = np.random.default_rng(seed)

    def gru():
        return GruParams(
            _glorot(rng, gru_hidden, input_dim, 3),
            _glorot(rng, gru_hidden, gru_hidden, 3),
            np.zeros(3 * gru_hidden),
        )

    fwd, bwd = gru(), gru()
    lstm = LstmParams(
        _glorot(rng, lstm_hidden, 2 * gru_hidden, 4),
        _glorot(rng, lstm_hidden, lstm_hidden, 4),
        np.zeros(4 * lstm_hidden),
    )
    s = np.sqrt(6.0 / (lstm_hidden + 1))
    dense_w = rng.uniform(-s, s, size=lstm_hidden)
    return NetworkWeights(fwd, bwd, lstm, dense_w, 0.0, dropout, window)


def zero_weights(
    input_dim: int,
    window: int = 24,
    gru_hidden: int = 256,
    lstm_hidden: int = 128,
    dropout: float = 0.2,
    dense_b: float = 0.0,
) -> NetworkWeights:
    w = init_weights(input_dim, window, gru_hidden, lstm_hidden, dropout)
    zeros = {k: np.zeros_like(v) for k, v in w.parameters().items()}
    zeros["dense_b"] = np.array(dense_b)
    return w.with_parameters(zeros)


# --- single-step cells ------------------------------------------------------


def _relu(x):
    return np.maximum(x, 0.0)


def gru_cell(x: np.ndarray, h_prev: np.ndarray, p: GruParams) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    if x.shape != (p.input_dim,) or h_prev.shape != (p.hidden,):
        raise DimensionMismatch("gru_cell input/state shapes do not match parameters")
    Wz, Uz, bz = p.gate("z")
    Wr, Ur, br = p.gate("r")
    Wn, Un, bn = p.gate("n")
    z = _sigmoid(Wz @ x + Uz @ h_prev + bz)
    r = _sigmoid(Wr @ x + Ur @ h_prev + br)
    n = _relu(Wn @ x + r * (Un @ h_prev) + bn)
    return (1.0 - z) * n + z * h_prev


def lstm_cell(
    x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray, p: LstmParams
) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    if x.shape != (p.input_dim,) or h_prev.shape != (p.hidden,) or c_prev.shape != (p.hidden,):
        raise DimensionMismatch("lstm_cell input/state shapes do not match parameters")
    pre = p.W @ x + p.U @ h_prev + p.b
    H = p.hidden
    i = _sigmoid(pre[:H])
    f = _sigmoid(pre[H : 2 * H])
    g = _relu(pre[2 * H : 3 * H])
    o = _sigmoid(pre[3 * H :])
    c = f * c_prev + i * g
    return o * _relu(c), c


# --- sequence passes --------------------------------------------------------


def _gru_scan(Xt: np.ndarray, p: GruParams):
    # Xt: (L, B, D) time-major
    L, B, D = Xt.shape
    xp = (Xt.reshape(L * B, D) @ p.W.T + p.b).reshape(L, B, -1)
    return kernels.gru_forward(xp, np.ascontiguousarray(p.U.T))


def bigru_forward(seq: np.ndarray, fwd: GruParams, bwd: GruParams) -> np.ndarray:
    """Forward and reversed GRU scans from zero state, concatenated per row: (L, 2H)."""
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[0] < 1 or seq.shape[1] != fwd.input_dim:
        raise DimensionMismatch(f"expected (L, {fwd.input_dim}) sequence, got {seq.shape}")
    Xt = seq[:, None, :]
    hf = _gru_scan(Xt, fwd)[0][1:, 0]
    hb = _gru_scan(Xt[::-1], bwd)[0][1:, 0][::-1]
    return np.concatenate([hf, hb], axis=1)


def _dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    return (rng.random(shape) >= rate) / (1.0 - rate)


@dataclass
class ForwardCache:
    Xt: np.ndarray
    gru_f: tuple = field(repr=False)
    gru_b: tuple = field(repr=False)
    mask_seq: np.ndarray | None = field(repr=False)
    lstm_in: np.ndarray = field(repr=False)
    lstm: tuple = field(repr=False)
    mask_last: np.ndarray | None = field(repr=False)
    dense_in: np.ndarray = field(repr=False)
    yhat: np.ndarray = field(repr=False)

    @property
    def batch(self) -> int:
        return self.Xt.shape[1]


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("training mode needs an rng seed or Generator")
    return np.random.default_rng(rng)


def forward_batch(
    X: np.ndarray, w: NetworkWeights, train: bool = False, rng=None
) -> tuple[np.ndarray, ForwardCache]:
    """Forward pass over a batch ``X`` of shape (B, L, D); returns ``(yhat (B,), cache)``.

    With ``train=True`` inverted dropout is applied using ``rng`` (seed or
    Generator); otherwise dropout is the identity.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[1:] != (w.window, w.input_dim):
        raise DimensionMismatch(
            f"expected (B, {w.window}, {w.input_dim}) input, got {X.shape}"
        )
    Xt = np.ascontiguousarray(X.transpose(1, 0, 2))
    gf = _gru_scan(Xt, w.gru_fwd)
    gb = _gru_scan(Xt[::-1], w.gru_bwd)
    seq = np.concatenate([gf[0][1:], gb[0][1:][::-1]], axis=2)

    dropping = train and w.dropout > 0.0
    gen = _as_rng(rng) if dropping else None
    mask_seq = _dropout_mask(gen, seq.shape, w.dropout) if dropping else None
    lstm_in = seq * mask_seq if dropping else seq

    L, B, _ = lstm_in.shape
    xp = (lstm_in.reshape(L * B, -1) @ w.lstm.W.T + w.lstm.b).reshape(L, B, -1)
    lstm = kernels.lstm_forward(xp, np.ascontiguousarray(w.lstm.U.T))
    h_last = lstm[0][-1]
    mask_last = _dropout_mask(gen, h_last.shape, w.dropout) if dropping else None
    hd = h_last * mask_last if dropping else h_last
    yhat = hd @ w.dense_w + w.dense_b
    cache = ForwardCache(Xt, gf, gb, mask_seq, lstm_in, lstm, mask_last, hd, yhat)
    return yhat, cache


def forward(seq: np.ndarray, w: NetworkWeights, train: bool = False, rng=None):
    """Single-window forward pass; returns ``(yhat: float, cache)``."""
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2:
        raise DimensionMismatch(f"expected an (L, D) window, got shape {seq.shape}")
    yhat, cache = forward_batch(seq[None], w, train=train, rng=rng)
    return float(yhat[0]), cache


def predict(X: np.ndarray, w: NetworkWeights, chunk: int = 256) -> np.ndarray:
    """Inference-mode predictions for many windows, evaluated in chunks."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(len(X))
    for s in range(0, len(X), chunk):
        out[s : s + chunk] = forward_batch(X[s : s + chunk], w)[0]
    return out
