"""Mini-batch Adam training with a staged, plateau-driven learning rate."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..audio.quantize import dequantize, quantize
from ..audio.windows import WindowSet
from ..exceptions import ConfigurationError, TrainingError
from ..numerics import AdamState, Tape, adam_step, cross_entropy
from ..runtime import limited_threads
from .evaluate import check_compatible, evaluate, model_inputs


@dataclass(frozen=True)
class TrainPlan:
    batch_size: int = 32
    lr_stages: tuple[float, ...] = (1e-4, 1e-5, 1e-6)
    warm_epochs: int = 10
    max_epochs: int = 30
    plateau_window: int = 2
    plateau_tolerance: float = 1e-3
    seed: int = 0
    max_steps: int | None = None
    micro_batch: int | None = None
    val_fraction: float = 0.05
    val_windows: int | None = None
    eval_every: int | None = None
    augment: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lr_stages", tuple(float(x) for x in self.lr_stages))
        if self.batch_size < 1 or self.max_epochs < 0 or self.plateau_window < 1 or self.warm_epochs < 0:
            raise ConfigurationError(f"invalid training plan: {self}")
        if not self.lr_stages or any(b > a for a, b in zip(self.lr_stages, self.lr_stages[1:])):
            raise ConfigurationError(f"lr_stages must be non-empty and non-increasing: {self.lr_stages}")
        if any(lr <= 0 for lr in self.lr_stages):
            raise ConfigurationError("learning rates must be positive")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigurationError(f"val_fraction must be in [0, 1), got {self.val_fraction}")
        if self.micro_batch is not None and self.micro_batch < 1:
            raise ConfigurationError("micro_batch must be positive")
        if self.eval_every is not None and self.eval_every < 1:
            raise ConfigurationError("eval_every must be positive")


class PlateauSchedule:
    """Holds the first stage for ``warm_epochs``, then steps down on plateaus.

    A plateau is declared when the best loss of the last ``window``
    evaluations improves on the best earlier loss by at most ``tolerance``
    (relative).  History restarts after every drop.
    """

    def __init__(self, stages, warm_epochs: int, window: int = 2, tolerance: float = 1e-3):
        self.stages = tuple(stages)
        self.warm_epochs = warm_epochs
        self.window = window
        self.tolerance = tolerance
        self.stage = 0
        self.history: list[float] = []

    @property
    def lr(self) -> float:
        return self.stages[self.stage]

    def update(self, epochs_done: float, loss: float) -> float:
        if epochs_done < self.warm_epochs or self.stage == len(self.stages) - 1:
            return self.lr
        self.history.append(loss)
        if len(self.history) > self.window:
            before = min(self.history[:-self.window])
            recent = min(self.history[-self.window:])
            if (before - recent) <= self.tolerance * abs(before):
                self.stage += 1
                self.history = []
        return self.lr


@dataclass
class CurveRecord:
    step: int
    epoch: int
    lr: float
    train_loss: float
    val_loss: float
    val_top5: float

    def to_line(self) -> str:
        return (f"{self.step}, {self.epoch}, {self.lr:.6g}, {self.train_loss:.6f}, "
                f"{self.val_loss:.6f}, {self.val_top5:.6f}\n")


CURVE_HEADER = "# step, epoch, lr, train_loss, val_loss, val_top5\n"


def read_curve(path) -> list[CurveRecord]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            f = [s.strip() for s in line.split(",")]
            out.append(CurveRecord(int(f[0]), int(f[1]), *map(float, f[2:])))
    return out


@dataclass
class StepInfo:
    """What a training callback sees after every optimizer step."""

    step: int
    epoch: int
    lr: float
    loss: float
    network: object


@dataclass
class TrainResult:
    network: object
    curve: list[CurveRecord] = field(default_factory=list)
    steps: int = 0
    epochs: int = 0
    stop_reason: str = "max_epochs"
    lr_trace: list[float] = field(default_factory=list)


def _augment_spans(spans: np.ndarray, scheme: str, rng: np.random.Generator) -> np.ndarray:
    # random attenuation in the amplitude domain, then requantize
    gain = rng.uniform(0.5, 1.0, size=(len(spans), 1))
    return quantize(dequantize(spans, scheme) * gain, scheme)


def _diagnose(net, step: int, epoch: int, lr: float, rows) -> str:
    worst = max(net.params.items(), key=lambda kv: float(np.max(np.abs(kv[1].data))))
    return (f"non-finite training loss at step {step} (epoch {epoch}, lr {lr:g}); "
            f"batch rows {list(map(int, rows))[:8]}...; largest parameter magnitude "
            f"{np.max(np.abs(worst[1].data)):.3e} in {worst[0]}")


def _gradients(net, windows: WindowSet, rows, chunk: int, rng, augment_rng, scheme):
    """Mean loss and gradient over ``rows``, summed micro-batch by micro-batch in order."""
    total_loss = 0.0
    grads = {name: np.zeros_like(t.data) for name, t in net.params.items()}
    n = len(rows)
    for c0 in range(0, n, chunk):
        part = rows[c0:c0 + chunk]
        x, past, y = model_inputs(net, windows, part)
        if augment_rng is not None:
            span = np.concatenate([past, x, y[:, -1:]], 1) if past is not None else np.concatenate([x, y[:, -1:]], 1)
            span = _augment_spans(span, scheme, augment_rng)
            P = 0 if past is None else past.shape[1]
            past = span[:, :P] if P else None
            x, y = span[:, P:-1], span[:, P + 1:]
        w = len(part) / n
        with Tape() as tape:
            loss = cross_entropy(net.forward(x, past, train=True, rng=rng), y)
        value = loss.item()
        if not math.isfinite(value):
            return value, None
        tape.backward(loss)
        total_loss += w * value
        for name, t in net.params.items():
            grads[name] += w * tape.grad(t)
    return total_loss, grads


def train(net, windows: WindowSet, plan: TrainPlan = TrainPlan(),
          callback: Callable[[StepInfo], bool] | None = None, curve_path=None,
          val_set: WindowSet | None = None) -> TrainResult:
    """Train ``net`` in place on ``windows`` and return the loss curve.

    Every source of randomness (validation split, shuffling, dropout,
    augmentation) derives from ``plan.seed``.  ``callback`` runs after each
    optimizer step; returning True stops training.  Each evaluation appends
    one record to ``curve_path`` if given.
    """
    check_compatible(net, windows)
    if len(windows) == 0:
        raise ConfigurationError("the training corpus yields no windows")
    seed = plan.seed
    if val_set is None and plan.val_fraction > 0:
        windows, val_set = windows.split(plan.val_fraction, np.random.default_rng([seed, 0]))
    shuffle_rng = np.random.default_rng([seed, 1])
    dropout_rng = np.random.default_rng([seed, 2])
    augment_rng = np.random.default_rng([seed, 3]) if plan.augment else None
    chunk = plan.micro_batch or plan.batch_size
    schedule = PlateauSchedule(plan.lr_stages, plan.warm_epochs, plan.plateau_window, plan.plateau_tolerance)
    state = AdamState.for_params(net.params)
    result = TrainResult(net)
    curve_file = None
    if curve_path is not None:
        curve_file = open(curve_path, "a")
        if Path(curve_path).stat().st_size == 0:
            curve_file.write(CURVE_HEADER)

    running: list[float] = []
    step = 0
    n = len(windows)
    steps_per_epoch = math.ceil(n / plan.batch_size)

    def record(epoch: int, epochs_done: float) -> None:
        train_loss = float(np.mean(running)) if running else float("nan")
        if val_set is not None and len(val_set):
            rep = evaluate(net, val_set, batch_size=chunk, max_windows=plan.val_windows,
                           rng=np.random.default_rng([seed, 4]))
            val_loss, val_top5 = rep.nll, rep.top5_accuracy
        else:
            val_loss, val_top5 = train_loss, float("nan")
        rec = CurveRecord(step, epoch, schedule.lr, train_loss, val_loss, val_top5)
        result.curve.append(rec)
        if curve_file is not None:
            curve_file.write(rec.to_line())
            curve_file.flush()
        running.clear()
        if math.isfinite(val_loss):
            schedule.update(epochs_done, val_loss)

    try:
        with limited_threads():
            for epoch in range(plan.max_epochs):
                order = shuffle_rng.permutation(n)
                for b0 in range(0, n, plan.batch_size):
                    rows = order[b0:b0 + plan.batch_size]
                    lr = schedule.lr
                    loss, grads = _gradients(net, windows, rows, chunk, dropout_rng, augment_rng, net.scheme)
                    if grads is None:
                        raise TrainingError(_diagnose(net, step, epoch, lr, rows))
                    adam_step(net.params, grads, state, lr)
                    step += 1
                    running.append(loss)
                    result.lr_trace.append(lr)
                    if plan.eval_every and step % plan.eval_every == 0:
                        record(epoch, epoch + (b0 // plan.batch_size + 1) / steps_per_epoch)
                    stop = None
                    if callback is not None and callback(StepInfo(step, epoch, lr, loss, net)):
                        stop = "callback"
                    elif plan.max_steps is not None and step >= plan.max_steps:
                        stop = "max_steps"
                    if stop:
                        if running:
                            record(epoch, epoch + 1)
                        result.stop_reason = stop
                        result.steps, result.epochs = step, epoch + 1
                        return result
                result.epochs = epoch + 1
                if not plan.eval_every:
                    record(epoch, epoch + 1)
    finally:
        if curve_file is not None:
            curve_file.close()
    result.steps = step
    return result
