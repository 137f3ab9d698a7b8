"""scikit-learn style front-end: fit on waveforms, predict the next level."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .audio.quantize import dequantize, quantize
from .audio.windows import STRIDE, WindowSet
from .models import build_network
from .numerics import log_softmax
from .synthesis import GenerationSpec, generate
from .training import TrainPlan, load_network, save_network, top_k_accuracy, train
from .validation import check_contexts, check_level_array, check_scheme, check_sequences, check_waveform


class Quantizer(TransformerMixin, BaseEstimator):
    """Waveform samples in [-1, 1] to 8-bit levels and back."""

    def __init__(self, scheme: str = "linear"):
        self.scheme = scheme

    def fit(self, X, y=None):
        check_scheme(self.scheme)
        self.n_levels_ = 256
        return self

    def transform(self, X):
        check_is_fitted(self)
        a = np.asarray(X, dtype=np.float64)
        if a.ndim == 1:
            return quantize(check_waveform(a), self.scheme).astype(np.uint8)
        return np.stack([quantize(check_waveform(r), self.scheme) for r in a]).astype(np.uint8)

    def inverse_transform(self, X):
        check_is_fitted(self)
        return dequantize(check_level_array(X), self.scheme)


class WaveformGenerator(BaseEstimator):
    """Next-sample classifier over 256 levels with autoregressive sampling.

    ``model`` is a preset name (``wavenet-vanilla``, ``xf-3``,
    ``xf-3-cond``, ...); ``model_options`` overrides individual config
    fields of the preset.  ``X`` for :meth:`fit` is one waveform or a list of
    them (floats are quantized, integer arrays are taken as levels).
    Rows passed to :meth:`predict` hold ``past_len + context`` levels: the
    conditioning window (if the model has one) followed by the context.
    """

    def __init__(self, model: str = "xf-3", scheme: str = "linear", context: int = 1600,
                 stride: int = STRIDE, batch_size: int = 32, lr_stages=(1e-4, 1e-5, 1e-6),
                 warm_epochs: int = 10, max_epochs: int = 30, max_steps: int | None = None,
                 micro_batch: int | None = None, val_fraction: float = 0.05, augment: bool = False,
                 model_options: dict | None = None, random_state: int = 0):
        self.model = model
        self.scheme = scheme
        self.context = context
        self.stride = stride
        self.batch_size = batch_size
        self.lr_stages = lr_stages
        self.warm_epochs = warm_epochs
        self.max_epochs = max_epochs
        self.max_steps = max_steps
        self.micro_batch = micro_batch
        self.val_fraction = val_fraction
        self.augment = augment
        self.model_options = model_options
        self.random_state = random_state

    def _plan(self) -> TrainPlan:
        return TrainPlan(batch_size=self.batch_size, lr_stages=tuple(self.lr_stages),
                         warm_epochs=self.warm_epochs, max_epochs=self.max_epochs,
                         max_steps=self.max_steps, micro_batch=self.micro_batch,
                         val_fraction=self.val_fraction, augment=self.augment, seed=self.random_state)

    def fit(self, X, y=None, callback=None):
        check_scheme(self.scheme)
        seqs = check_sequences(X, self.scheme)
        net = build_network(self.model, seed=self.random_state, scheme=self.scheme, context=self.context,
                            **(self.model_options or {}))
        windows = WindowSet.from_sequences(seqs, self.context, self.stride, net.past_len, self.scheme)
        result = train(net, windows, self._plan(), callback=callback)
        self.network_ = net
        self.curve_ = result.curve
        self.n_steps_ = result.steps
        return self

    @property
    def row_width_(self) -> int:
        check_is_fitted(self)
        return self.network_.past_len + self.network_.context

    def _logits(self, X) -> np.ndarray:
        check_is_fitted(self)
        rows = check_contexts(X, self.row_width_)
        P = self.network_.past_len
        past = rows[:, :P] if P else None
        return self.network_.logits(rows[:, P:], past)[:, -1]

    def predict_log_proba(self, X) -> np.ndarray:
        """Log-probabilities ``[n, 256]`` of the level following each row."""
        return log_softmax(self._logits(X))

    def predict_proba(self, X) -> np.ndarray:
        return np.exp(self.predict_log_proba(X))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self._logits(X), axis=-1).astype(np.uint8)

    def score(self, X, y) -> float:
        """Top-5 accuracy of the next-level predictions."""
        y = check_level_array(y, ndim=1)
        return top_k_accuracy(self._logits(X), y, k=5)

    def generate(self, n_samples: int, seed_source="noise", temperature: float | None = 1.0,
                 random_state: int = 0, include_seed: bool = True) -> np.ndarray:
        check_is_fitted(self)
        spec = GenerationSpec(n_samples, seed_source, temperature, random_state,
                              seed_length=self.network_.context, include_seed=include_seed)
        return generate(self.network_, spec).waveform.samples

    def save(self, path) -> None:
        check_is_fitted(self)
        save_network(self.network_, path, {"preset": self.model})

    @classmethod
    def load(cls, path) -> "WaveformGenerator":
        net = load_network(path)
        est = cls(model=net.meta.get("preset", "custom"), scheme=net.scheme, context=net.context)
        est.network_ = net
        est.curve_ = []
        est.n_steps_ = 0
        return est
