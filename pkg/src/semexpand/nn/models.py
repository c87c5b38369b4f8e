"""CNN and LSTM short-text classifiers and their text checkpoint format.

Both models consume pre-embedded inputs of shape (B, max_len, input_width)
with a parallel validity mask; embeddings are static inputs, never trained.
The CNN stacks two valid convolutions with ReLU and width-2 max pooling, then
a fully connected softmax layer. The LSTM runs one recurrent layer, mean-pools
hidden states over valid positions and classifies the pooled state.
"""

from __future__ import annotations

import logging

import numpy as np

from ..errors import ConfigError, DataFormatError
from . import layers

logger = logging.getLogger(__name__)

CHECKPOINT_TAG = "semexpand-model v1"


class _Classifier:
    """Shared parameter bookkeeping for both model kinds."""

    kind: str = ""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}

    def arch(self) -> dict:
        raise NotImplementedError

    def forward(self, x, mask=None):
        raise NotImplementedError

    def loss_and_grads(self, x, mask, y):
        raise NotImplementedError

    def num_params(self) -> int:
        return sum(p.size for p in self.params.values())

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params.values()])

    def set_flat(self, flat) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.num_params():
            raise ValueError(f"expected {self.num_params()} values, got {flat.size}")
        offset = 0
        for name, p in self.params.items():
            self.params[name] = flat[offset : offset + p.size].reshape(p.shape).copy()
            offset += p.size

    def apply_grads(self, grads: dict, learning_rate: float) -> None:
        for name, g in grads.items():
            self.params[name] -= learning_rate * g


def cnn_output_lengths(max_len: int, kernel_width: int, pool_width: int):
    """Sequence lengths after each conv/pool stage."""
    conv1 = max_len - kernel_width + 1
    pool1 = conv1 // pool_width
    conv2 = pool1 - kernel_width + 1
    pool2 = conv2 // pool_width if conv2 >= 1 else 0
    return conv1, pool1, conv2, pool2


class CnnClassifier(_Classifier):
    kind = "cnn"

    def __init__(
        self,
        input_width: int,
        num_classes: int,
        max_len: int = 20,
        kernels: int = 64,
        kernel_width: int = 5,
        pool_width: int = 2,
        seed: int = 0,
    ):
        super().__init__()
        if num_classes < 2:
            raise ConfigError("num_classes must be >= 2")
        lengths = cnn_output_lengths(max_len, kernel_width, pool_width)
        if min(lengths) < 1:
            raise ConfigError(
                f"max_len={max_len} too short for kernel_width={kernel_width}, "
                f"pool_width={pool_width}: stage lengths {lengths} must all be >= 1"
            )
        self.input_width = input_width
        self.num_classes = num_classes
        self.max_len = max_len
        self.kernels = kernels
        self.kernel_width = kernel_width
        self.pool_width = pool_width
        self.flat_width = lengths[3] * kernels
        rng = np.random.default_rng(seed)
        kw = kernel_width
        self.params = {
            "conv1_w": layers.glorot_uniform(rng, kw * input_width, kernels, (kw * input_width, kernels)),
            "conv1_b": np.zeros(kernels),
            "conv2_w": layers.glorot_uniform(rng, kw * kernels, kernels, (kw * kernels, kernels)),
            "conv2_b": np.zeros(kernels),
            "fc_w": layers.glorot_uniform(rng, self.flat_width, num_classes, (self.flat_width, num_classes)),
            "fc_b": np.zeros(num_classes),
        }

    def arch(self) -> dict:
        return {
            "kind": self.kind,
            "input_width": self.input_width,
            "num_classes": self.num_classes,
            "max_len": self.max_len,
            "kernels": self.kernels,
            "kernel_width": self.kernel_width,
            "pool_width": self.pool_width,
        }

    def _forward_cache(self, x):
        p = self.params
        kw = self.kernel_width
        c1, c1_cache = layers.conv1d_forward(x, p["conv1_w"], p["conv1_b"], kw)
        r1, r1_mask = layers.relu_forward(c1)
        p1, p1_cache = layers.maxpool1d_forward(r1, self.pool_width)
        c2, c2_cache = layers.conv1d_forward(p1, p["conv2_w"], p["conv2_b"], kw)
        r2, r2_mask = layers.relu_forward(c2)
        p2, p2_cache = layers.maxpool1d_forward(r2, self.pool_width)
        flat = p2.reshape(len(x), -1)
        logits, fc_cache = layers.dense_forward(flat, p["fc_w"], p["fc_b"])
        probs = layers.softmax(logits)
        cache = (c1_cache, r1_mask, p1_cache, c2_cache, r2_mask, p2_cache, p2.shape, fc_cache)
        return probs, cache

    def forward(self, x, mask=None):
        x = np.asarray(x, dtype=float)
        if x.shape[2] != self.input_width:
            raise ValueError(f"input width {x.shape[2]} != model width {self.input_width}")
        probs, _ = self._forward_cache(x)
        return probs

    def loss_and_grads(self, x, mask, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        probs, cache = self._forward_cache(x)
        c1_cache, r1_mask, p1_cache, c2_cache, r2_mask, p2_cache, p2_shape, fc_cache = cache
        loss = layers.cross_entropy(probs, y)
        p = self.params
        kw = self.kernel_width
        dlogits = layers.softmax_cross_entropy_grad(probs, y)
        dflat, dfc_w, dfc_b = layers.dense_backward(dlogits, fc_cache, p["fc_w"])
        dp2 = dflat.reshape(p2_shape)
        dr2 = layers.maxpool1d_backward(dp2, p2_cache)
        dc2 = layers.relu_backward(dr2, r2_mask)
        dp1, dconv2_w, dconv2_b = layers.conv1d_backward(dc2, c2_cache, p["conv2_w"], kw)
        dr1 = layers.maxpool1d_backward(dp1, p1_cache)
        dc1 = layers.relu_backward(dr1, r1_mask)
        _, dconv1_w, dconv1_b = layers.conv1d_backward(dc1, c1_cache, p["conv1_w"], kw)
        grads = {
            "conv1_w": dconv1_w,
            "conv1_b": dconv1_b,
            "conv2_w": dconv2_w,
            "conv2_b": dconv2_b,
            "fc_w": dfc_w,
            "fc_b": dfc_b,
        }
        return loss, grads, probs


class LstmClassifier(_Classifier):
    kind = "lstm"

    def __init__(self, input_width: int, num_classes: int, hidden: int = 300, seed: int = 0):
        super().__init__()
        if num_classes < 2:
            raise ConfigError("num_classes must be >= 2")
        if hidden < 1:
            raise ConfigError("hidden must be >= 1")
        self.input_width = input_width
        self.num_classes = num_classes
        self.hidden = hidden
        rng = np.random.default_rng(seed)
        gate_b = np.zeros(4 * hidden)
        gate_b[hidden : 2 * hidden] = 1.0  # forget-gate bias
        self.params = {
            "gate_w": layers.glorot_uniform(
                rng, input_width + hidden, 4 * hidden, (input_width + hidden, 4 * hidden)
            ),
            "gate_b": gate_b,
            "fc_w": layers.glorot_uniform(rng, hidden, num_classes, (hidden, num_classes)),
            "fc_b": np.zeros(num_classes),
        }

    def arch(self) -> dict:
        return {
            "kind": self.kind,
            "input_width": self.input_width,
            "num_classes": self.num_classes,
            "hidden": self.hidden,
        }

    def _forward_cache(self, x, mask):
        p = self.params
        h_seq, lstm_cache = layers.lstm_forward(x, p["gate_w"], p["gate_b"], self.hidden)
        pooled, pool_cache = layers.masked_mean_forward(h_seq, mask)
        logits, fc_cache = layers.dense_forward(pooled, p["fc_w"], p["fc_b"])
        probs = layers.softmax(logits)
        valid_rows = pool_cache[2]
        if not valid_rows.all():
            logger.warning(
                "%d sequence(s) have no valid positions; emitting uniform predictions",
                int((~valid_rows).sum()),
            )
            probs[~valid_rows] = 1.0 / self.num_classes
        return probs, (lstm_cache, pool_cache, fc_cache, x.shape[1], valid_rows)

    def forward(self, x, mask=None):
        x = np.asarray(x, dtype=float)
        if x.shape[2] != self.input_width:
            raise ValueError(f"input width {x.shape[2]} != model width {self.input_width}")
        if mask is None:
            mask = np.ones(x.shape[:2])
        probs, _ = self._forward_cache(x, np.asarray(mask, dtype=float))
        return probs

    def loss_and_grads(self, x, mask, y):
        x = np.asarray(x, dtype=float)
        mask = np.asarray(mask, dtype=float)
        y = np.asarray(y, dtype=int)
        probs, cache = self._forward_cache(x, mask)
        lstm_cache, pool_cache, fc_cache, length, valid_rows = cache
        loss = layers.cross_entropy(probs, y)
        p = self.params
        dlogits = layers.softmax_cross_entropy_grad(probs, y)
        dlogits[~valid_rows] = 0.0  # uniform override is constant wrt params
        dpooled, dfc_w, dfc_b = layers.dense_backward(dlogits, fc_cache, p["fc_w"])
        dh_seq = layers.masked_mean_backward(dpooled, pool_cache, length)
        dgate_w, dgate_b = layers.lstm_backward(dh_seq, lstm_cache, p["gate_w"], self.hidden)
        grads = {"gate_w": dgate_w, "gate_b": dgate_b, "fc_w": dfc_w, "fc_b": dfc_b}
        return loss, grads, probs


def forward_cnn(model: CnnClassifier, batch, mask=None):
    """Class probabilities for a batch; the mask is unused (zero padding)."""
    if model.kind != "cnn":
        raise ValueError("forward_cnn needs a CnnClassifier")
    return model.forward(batch, mask)


def forward_lstm(model: LstmClassifier, batch, mask=None):
    """Class probabilities for a batch, mean-pooled over valid positions."""
    if model.kind != "lstm":
        raise ValueError("forward_lstm needs an LstmClassifier")
    return model.forward(batch, mask)


def build_model(arch: dict, seed: int = 0) -> _Classifier:
    """Instantiate a classifier from an architecture descriptor."""
    kind = arch.get("kind")
    if kind == "cnn":
        return CnnClassifier(
            input_width=arch["input_width"],
            num_classes=arch["num_classes"],
            max_len=arch["max_len"],
            kernels=arch["kernels"],
            kernel_width=arch["kernel_width"],
            pool_width=arch["pool_width"],
            seed=seed,
        )
    if kind == "lstm":
        return LstmClassifier(
            input_width=arch["input_width"],
            num_classes=arch["num_classes"],
            hidden=arch["hidden"],
            seed=seed,
        )
    raise ConfigError(f"unknown model kind {kind!r}")


def save_model(model: _Classifier, path) -> None:
    """Write the architecture descriptor and flat parameter arrays as text."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CHECKPOINT_TAG + "\n")
        for key, value in model.arch().items():
            fh.write(f"{key} {value}\n")
        for name, p in model.params.items():
            fh.write(f"param {name} {p.size}\n")
            fh.write(" ".join(f"{v:.17g}" for v in p.ravel()) + "\n")


def load_model(path) -> _Classifier:
    """Rebuild a classifier from a checkpoint file."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_TAG:
        raise DataFormatError(f"{path}:1: expected format tag {CHECKPOINT_TAG!r}")
    arch: dict = {}
    raw_params: dict[str, np.ndarray] = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("param "):
        fields = lines[i].split()
        if len(fields) != 2:
            raise DataFormatError(f"{path}:{i + 1}: expected 'key value'")
        key, value = fields
        arch[key] = value if key == "kind" else int(value)
        i += 1
    while i < len(lines):
        header = lines[i].split()
        if len(header) != 3 or header[0] != "param":
            raise DataFormatError(f"{path}:{i + 1}: expected 'param <name> <size>'")
        name, size = header[1], int(header[2])
        if i + 1 >= len(lines):
            raise DataFormatError(f"{path}:{i + 2}: missing values for param {name!r}")
        try:
            values = np.array(lines[i + 1].split(), dtype=float)
        except ValueError:
            raise DataFormatError(f"{path}:{i + 2}: bad values for param {name!r}") from None
        if values.size != size:
            raise DataFormatError(
                f"{path}:{i + 2}: param {name!r} has {values.size} values, expected {size}"
            )
        raw_params[name] = values
        i += 2
    model = build_model(arch, seed=0)
    for name, p in model.params.items():
        if name not in raw_params:
            raise DataFormatError(f"{path}: missing param {name!r}")
        if raw_params[name].size != p.size:
            raise DataFormatError(f"{path}: param {name!r} size mismatch")
        model.params[name] = raw_params[name].reshape(p.shape)
    extra = set(raw_params) - set(model.params)
    if extra:
        raise DataFormatError(f"{path}: unexpected param {sorted(extra)[0]!r}")
    return model
