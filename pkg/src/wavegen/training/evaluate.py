from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ..audio.windows import WindowSet
from ..exceptions import SchemeMismatchError, ShapeError
from ..runtime import limited_threads, thread_count
from .losses import nll_sum, top_k_hits


@dataclass
class EvalReport:
    model: str
    top5_accuracy: float
    nll: float
    n_samples: int
    scheme: str
    config: str = ""

    def __post_init__(self):
        if not 0.0 <= self.top5_accuracy <= 1.0:
            raise ValueError(f"accuracy {self.top5_accuracy} outside [0, 1]")

    def to_text(self) -> str:
        """Machine-readable ``key=value`` lines."""
        return "".join(f"{k}={v}\n" for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text: str) -> "EvalReport":
        d = dict(line.split("=", 1) for line in text.splitlines() if "=" in line)
        return cls(d["model"], float(d["top5_accuracy"]), float(d["nll"]), int(d["n_samples"]),
                   d["scheme"], d.get("config", ""))


def format_table(reports: list[EvalReport]) -> str:
    """Human table with one row per model, in the order given."""
    head = ("Architecture", "Top-5 accuracy", "NLL (nats/sample)", "Samples", "Scheme")
    rows = [(r.model, f"{100 * r.top5_accuracy:.2f}%", f"{r.nll:.4f}", str(r.n_samples), r.scheme)
            for r in reports]
    widths = [max(len(c) for c in col) for col in zip(head, *rows)]

    def line(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"

    sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([line(head), sep, *map(line, rows)]) + "\n"


def model_inputs(net, windows: WindowSet, idx) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
    """Context, conditioning window (if the model takes one) and targets for rows ``idx``."""
    spans = windows.spans[idx]
    P, T = windows.past_len, windows.context
    x = spans[:, P:P + T]
    y = spans[:, P + 1:]
    past = None
    if net.past_len:
        if P < net.past_len:
            raise ShapeError(f"model needs {net.past_len} past levels, windows carry {P}")
        past = spans[:, P - net.past_len:P]
    return x, past, y


def check_compatible(net, windows: WindowSet) -> None:
    if net.scheme != windows.scheme:
        raise SchemeMismatchError(
            f"model was trained on {net.scheme!r} levels but the corpus is {windows.scheme!r}")
    if windows.context > net.context:
        raise ShapeError(f"windows of {windows.context} exceed the model context {net.context}")


def evaluate(net, windows: WindowSet, batch_size: int = 8, max_windows: int | None = None,
             rng: np.random.Generator | None = None, k: int = 5) -> EvalReport:
    """Top-k accuracy and mean NLL over (a random subsample of) ``windows``.

    Batches are independent, so with ``WAVEGEN_THREADS`` > 1 they are
    scored on a thread pool; totals are still accumulated in batch order.
    """
    check_compatible(net, windows)
    idx = np.arange(len(windows))
    if max_windows is not None and len(idx) > max_windows:
        rng = rng if rng is not None else np.random.default_rng(0)
        idx = np.sort(rng.choice(len(idx), size=max_windows, replace=False))
    batches = [idx[i:i + batch_size] for i in range(0, len(idx), batch_size)]

    def score(b):
        x, past, y = model_inputs(net, windows, b)
        z = net.logits(x, past)
        return int(top_k_hits(z, y, k).sum()), nll_sum(z, y), y.size

    workers = thread_count()
    if workers > 1 and len(batches) > 1:
        with limited_threads(1), ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(score, batches))
    else:
        with limited_threads():
            parts = [score(b) for b in batches]
    hits = sum(p[0] for p in parts)
    nll = math.fsum(p[1] for p in parts)
    n = sum(p[2] for p in parts)
    summary = " ".join(f"{k_}={v}" for k_, v in net.config_dict().items())
    return EvalReport(net.label or net.describe(), hits / n if n else 0.0, nll / n if n else 0.0,
                      n, net.scheme, summary)
