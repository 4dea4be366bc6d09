"""Single-layer LSTM binary classifier trained by backpropagation through time.

The network is plain numpy: one LSTM layer (gate order input, forget,
candidate, output), inverted dropout on the final hidden state during
training, and a dense sigmoid head. Training minimizes class-weighted
binary cross-entropy with mini-batch Adam (or SGD) steps.

Training tensors are float32; the gradient-check harness runs the same
code in float64.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .gbt import sigmoid


@dataclass
class SequenceBatch:
    """Stride-1 sliding windows; each window is labeled by its last row."""

    windows: np.ndarray             # (n_windows, seq_len, d)
    labels: np.ndarray              # (n_windows,)
    end_rows: np.ndarray            # source row index of each window's last step

    def __len__(self) -> int:
        return len(self.labels)


def make_windows(X, y, seq_len: int) -> SequenceBatch:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(X)
    if n < seq_len:
        raise ValueError(f"need at least seq_len={seq_len} rows, got {n}")
    windows = np.lib.stride_tricks.sliding_window_view(X, (seq_len, X.shape[1]))
    windows = windows[:, 0]         # (n - seq_len + 1, seq_len, d)
    end_rows = np.arange(seq_len - 1, n)
    return SequenceBatch(windows=np.ascontiguousarray(windows),
                         labels=y[end_rows], end_rows=end_rows)


@dataclass
class LstmConfig:
    hidden_units: int = 64
    dropout_rate: float = 0.2
    seq_len: int = 10
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 1e-3
    class_weights: tuple | str = "balanced"   # "balanced", "none" or (w0, w1)
    optimizer: str = "adam"                   # "adam" | "sgd"
    input_clip: tuple = (-0.05, 1.05)
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")

    def to_dict(self) -> dict:
        cw = self.class_weights
        return {
            "hidden_units": self.hidden_units,
            "dropout_rate": self.dropout_rate,
            "seq_len": self.seq_len,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "class_weights": list(cw) if isinstance(cw, (tuple, list)) else cw,
            "optimizer": self.optimizer,
            "input_clip": list(self.input_clip),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LstmConfig":
        d = dict(d)
        if isinstance(d.get("class_weights"), list):
            d["class_weights"] = tuple(d["class_weights"])
        d["input_clip"] = tuple(d.get("input_clip", (-0.05, 1.05)))
        return cls(**d)


PARAM_NAMES = ("Wx", "Wh", "b", "w_out", "b_out")


class LstmNetwork:
    """Parameter container plus forward/backward passes.

    ``params`` maps name -> array: Wx (d, 4H), Wh (H, 4H), b (4H,),
    w_out (H,), b_out (1,). Gate block order along the 4H axis is
    [input, forget, candidate, output]; the forget-gate bias starts at 1.
    """

    def __init__(self, n_features: int, hidden_units: int, rng: np.random.Generator,
                 dtype=np.float32):
        d, H = n_features, hidden_units
        bound = 1.0 / np.sqrt(H)
        self.n_features = d
        self.hidden_units = H
        self.dtype = dtype
        self.params = {
            "Wx": rng.uniform(-bound, bound, size=(d, 4 * H)).astype(dtype),
            "Wh": rng.uniform(-bound, bound, size=(H, 4 * H)).astype(dtype),
            "b": np.zeros(4 * H, dtype=dtype),
            "w_out": rng.uniform(-bound, bound, size=H).astype(dtype),
            "b_out": np.zeros(1, dtype=dtype),
        }
        self.params["b"][H:2 * H] = 1.0     # forget gate bias

    def forward(self, X3: np.ndarray, dropout_mask: np.ndarray | None = None):
        """Return (probabilities, cache). X3 shape (B, T, d)."""
        p = self.params
        H = self.hidden_units
        X3 = X3.astype(p["Wx"].dtype, copy=False)
        B, T, _ = X3.shape
        h = np.zeros((B, H), dtype=p["Wx"].dtype)
        c = np.zeros((B, H), dtype=p["Wx"].dtype)
        steps = []
        for t in range(T):
            x_t = X3[:, t, :]
            z = x_t @ p["Wx"] + h @ p["Wh"] + p["b"]
            i = sigmoid(z[:, :H])
            f = sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = sigmoid(z[:, 3 * H:])
            c_new = i * g + f * c
            tanh_c = np.tanh(c_new)
            h_new = o * tanh_c
            steps.append({"x": x_t, "h_prev": h, "c_prev": c, "i": i, "f": f,
                          "g": g, "o": o, "tanh_c": tanh_c})
            h, c = h_new, c_new
        h_top = h if dropout_mask is None else h * dropout_mask
        logit = h_top @ p["w_out"] + p["b_out"][0]
        prob = sigmoid(logit)
        cache = {"steps": steps, "h_top": h_top, "dropout_mask": dropout_mask,
                 "logit": logit, "prob": prob}
        return prob, cache

    def loss_and_grads(self, X3, y, sample_weights=None, dropout_mask=None):
        """Weighted binary cross-entropy (mean over the batch) and gradients."""
        p = self.params
        H = self.hidden_units
        y = np.asarray(y, dtype=p["Wx"].dtype)
        if sample_weights is None:
            sample_weights = np.ones(len(y), dtype=p["Wx"].dtype)
        sample_weights = np.asarray(sample_weights, dtype=p["Wx"].dtype)
        prob, cache = self.forward(X3, dropout_mask)
        logit = cache["logit"]
        losses = np.logaddexp(0.0, logit) - y * logit
        loss = float(np.mean(sample_weights * losses))

        B = len(y)
        grads = {name: np.zeros_like(p[name]) for name in PARAM_NAMES}
        dlogit = sample_weights * (prob - y) / B
        grads["w_out"] = cache["h_top"].T @ dlogit
        grads["b_out"] = np.array([dlogit.sum()], dtype=p["b_out"].dtype)
        dh = dlogit[:, None] * p["w_out"][None, :]
        if cache["dropout_mask"] is not None:
            dh = dh * cache["dropout_mask"]
        dc = np.zeros((B, H), dtype=p["Wx"].dtype)
        for step in reversed(cache["steps"]):
            i, f, g, o = step["i"], step["f"], step["g"], step["o"]
            tanh_c = step["tanh_c"]
            dc = dc + dh * o * (1.0 - tanh_c**2)
            do = dh * tanh_c
            di = dc * g
            dg = dc * i
            df = dc * step["c_prev"]
            dz = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g**2),
                do * o * (1.0 - o),
            ], axis=1)
            grads["Wx"] += step["x"].T @ dz
            grads["Wh"] += step["h_prev"].T @ dz
            grads["b"] += dz.sum(axis=0)
            dh = dz @ p["Wh"].T
            dc = dc * f
        return loss, grads

    def copy_as(self, dtype) -> "LstmNetwork":
        clone = LstmNetwork.__new__(LstmNetwork)
        clone.n_features = self.n_features
        clone.hidden_units = self.hidden_units
        clone.dtype = dtype
        clone.params = {k: v.astype(dtype) for k, v in self.params.items()}
        return clone


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for k in params:
            self.m[k] = b1 * self.m[k] + (1 - b1) * grads[k]
            self.v[k] = b2 * self.v[k] + (1 - b2) * grads[k] ** 2
            m_hat = self.m[k] / (1 - b1**self.t)
            v_hat = self.v[k] / (1 - b2**self.t)
            params[k] -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(params[k].dtype)


class _Sgd:
    def __init__(self, params, lr):
        self.lr = lr

    def step(self, params, grads):
        for k in params:
            params[k] -= (self.lr * grads[k]).astype(params[k].dtype)


def resolve_class_weights(labels: np.ndarray, setting) -> np.ndarray:
    """Per-class loss weights; 'balanced' = N / (2 * N_c)."""
    n = len(labels)
    n1 = int((labels == 1).sum())
    n0 = n - n1
    if setting == "none":
        return np.array([1.0, 1.0])
    if setting == "balanced":
        w0 = n / (2.0 * n0) if n0 else 1.0
        w1 = n / (2.0 * n1) if n1 else 1.0
        return np.array([w0, w1])
    return np.asarray(setting, dtype=np.float64)


def train_lstm(batch: SequenceBatch, config: LstmConfig,
               network: LstmNetwork | None = None) -> LstmNetwork:
    """Mini-batch training over the window batch; deterministic per seed.

    A single-class batch trains anyway (with a warning): the standalone
    recurrent learner can collapse to majority prediction and the wider
    pipeline must survive that.
    """
    labels = batch.labels
    if len(np.unique(labels)) < 2:
        warnings.warn("training batch contains a single class; the model will "
                      "likely collapse to constant prediction", stacklevel=2)
    rng = np.random.default_rng(config.seed)
    d = batch.windows.shape[2]
    if network is None:
        network = LstmNetwork(d, config.hidden_units, rng)
    weights_per_class = resolve_class_weights(labels, config.class_weights)

    X_all = np.clip(batch.windows, *config.input_clip).astype(np.float32)
    y_all = labels.astype(np.float32)
    opt_cls = _Adam if config.optimizer == "adam" else _Sgd
    opt = opt_cls(network.params, config.learning_rate)
    n = len(y_all)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            sel = order[start:start + config.batch_size]
            Xb, yb = X_all[sel], y_all[sel]
            sw = weights_per_class[yb.astype(np.int64)].astype(np.float32)
            if config.dropout_rate > 0:
                keep = 1.0 - config.dropout_rate
                mask = (rng.random((len(sel), config.hidden_units)) < keep) / keep
                mask = mask.astype(np.float32)
            else:
                mask = None
            _, grads = network.loss_and_grads(Xb, yb, sw, mask)
            opt.step(network.params, grads)
    return network


class LstmClassifier(BaseEstimator):
    """Row-aligned wrapper: fit on ordered (already min-max scaled) rows,
    predict one probability per row (left-edge windows padded with the
    first window's probability)."""

    def __init__(self, config: LstmConfig | None = None):
        self.config = config or LstmConfig()

    def fit(self, X, y, row_mask=None, feature_names=None):
        """Train on windows over the ordered rows.

        ``row_mask`` (boolean per row) restricts training to windows whose
        end row is selected, so a fold split never trains on its own
        held-out labels.
        """
        X = np.asarray(X, dtype=np.float64)
        batch = make_windows(X, y, self.config.seq_len)
        if row_mask is not None:
            sel = np.asarray(row_mask)[batch.end_rows]
            batch = SequenceBatch(windows=batch.windows[sel],
                                  labels=batch.labels[sel],
                                  end_rows=batch.end_rows[sel])
        self.feature_names_ = list(feature_names) if feature_names else [f"f{j}" for j in range(X.shape[1])]
        self.network_ = train_lstm(batch, self.config)
        return self

    def _check_fitted(self):
        if not hasattr(self, "network_"):
            raise ValueError("model is not fitted")

    def predict_proba_windows(self, batch: SequenceBatch, chunk: int = 4096) -> np.ndarray:
        self._check_fitted()
        X = np.clip(batch.windows, *self.config.input_clip).astype(np.float32)
        out = np.empty(len(X), dtype=np.float64)
        for start in range(0, len(X), chunk):
            prob, _ = self.network_.forward(X[start:start + chunk])
            out[start:start + chunk] = prob
        return out

    def predict_proba(self, X) -> np.ndarray:
        """One probability per input row; rows before the first full window
        share the first window's probability."""
        X = np.asarray(X, dtype=np.float64)
        batch = make_windows(X, np.zeros(len(X), dtype=np.int64), self.config.seq_len)
        probs = self.predict_proba_windows(batch)
        out = np.empty(len(X), dtype=np.float64)
        out[:self.config.seq_len - 1] = probs[0]
        out[self.config.seq_len - 1:] = probs
        return out

    def to_payload(self) -> dict:
        self._check_fitted()
        net = self.network_
        return {
            "config": self.config.to_dict(),
            "feature_names": self.feature_names_,
            "n_features": net.n_features,
            "hidden_units": net.hidden_units,
            "tensors": {
                name: {"shape": list(net.params[name].shape),
                       "values": net.params[name].astype(np.float64).ravel().tolist()}
                for name in PARAM_NAMES
            },
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "LstmClassifier":
        model = cls(config=LstmConfig.from_dict(payload["config"]))
        model.feature_names_ = list(payload["feature_names"])
        net = LstmNetwork.__new__(LstmNetwork)
        net.n_features = payload["n_features"]
        net.hidden_units = payload["hidden_units"]
        net.dtype = np.float32
        net.params = {}
        for name in PARAM_NAMES:
            t = payload["tensors"][name]
            net.params[name] = np.asarray(t["values"], dtype=np.float64).reshape(t["shape"]).astype(np.float32)
        model.network_ = net
        return model
