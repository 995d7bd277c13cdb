"""Training loop, configuration files and held-out evaluation."""
from __future__ import annotations

import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import nn
from .checkpoint import Checkpoint
from .nn import ModelConfig
from .optim import AdamState, adam_step, clip_global_norm
from .rng import PortableRNG
from .text import BatchPlan, build_vocabulary, encode, iter_chunks, make_batches, make_examples


class ConfigError(ValueError):
    pass


class TrainingDiverged(RuntimeError):
    def __init__(self, message, checkpoint_path):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path


@dataclass
class TrainConfig:
    corpus: Optional[str] = None
    output_dir: str = "run"
    epochs: int = 40
    embed_dim: int = 256
    hidden_size: int = 1024
    num_layers: int = 3
    seq_len: int = 100
    batch_size: int = 64
    drop_last: bool = True
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    checkpoint_every: int = 1
    base_seed: int = 0
    max_steps: Optional[int] = None
    clip_norm: Optional[float] = None
    dtype: str = "float64"

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.checkpoint_every < 1:
            raise ConfigError(f"checkpoint_every must be >= 1, got {self.checkpoint_every}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.base_seed < 0:
            raise ConfigError(f"base_seed must be >= 0, got {self.base_seed}")

    def model_config(self, vocab_size: int) -> ModelConfig:
        return ModelConfig(vocab_size=vocab_size, embed_dim=self.embed_dim,
                           hidden_size=self.hidden_size, num_layers=self.num_layers,
                           seq_len=self.seq_len, dtype=self.dtype)

    def batch_plan(self, epoch: int) -> BatchPlan:
        return BatchPlan(self.batch_size, self.base_seed + epoch, self.drop_last)

    @classmethod
    def field_types(cls) -> dict[str, type]:
        hints = {"corpus": str, "output_dir": str, "drop_last": bool, "dtype": str,
                 "max_steps": int, "clip_norm": float}
        return {f.name: hints.get(f.name, type(f.default)) for f in dataclasses.fields(cls)}

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> "TrainConfig":
        types = cls.field_types()
        kwargs = {}
        for key, raw in values.items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = parse_value(key, raw, types[key])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path, overrides: dict[str, str] | None = None) -> "TrainConfig":
        return cls.from_mapping({**read_key_values(path), **(overrides or {})})


def parse_value(key: str, raw, typ):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if text.lower() in ("none", "") and key in ("max_steps", "clip_norm", "corpus"):
        return None
    try:
        if typ is bool:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return typ(text)
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for config key {key!r}") from None


def read_key_values(path) -> dict[str, str]:
    """``key=value`` lines; blank lines and ``#`` comments ignored."""
    out = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    elapsed_s: float
    steps: int
    partial: bool = False


@dataclass
class TrainReport:
    epochs: list[EpochRecord] = field(default_factory=list)
    total_elapsed_s: float = 0.0
    final_step: int = 0

    @property
    def final_loss(self) -> float:
        return self.epochs[-1].loss

    @property
    def cumulative_elapsed(self) -> list[float]:
        return list(np.cumsum([e.elapsed_s for e in self.epochs]))

    def to_dict(self) -> dict:
        return {"epochs": [dataclasses.asdict(e) for e in self.epochs],
                "total_elapsed_s": self.total_elapsed_s, "final_step": self.final_step}


def _read_corpus(config: TrainConfig) -> str:
    if config.corpus is None:
        raise ConfigError("no corpus given")
    path = Path(config.corpus)
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read corpus {path}: {exc.strerror or exc}") from exc


def _check_resume(ckpt: Checkpoint, mconf: ModelConfig, config: TrainConfig):
    if ckpt.config != mconf:
        raise ConfigError(f"checkpoint model {ckpt.config} does not match config {mconf}")
    saved = ckpt.meta.get("base_seed")
    if saved is not None and saved != config.base_seed:
        raise ConfigError(f"checkpoint was trained with base_seed={saved}, config has {config.base_seed}")


def train(config: TrainConfig, corpus_text: str | None = None, resume=None,
          echo: bool = True) -> tuple[TrainReport, Checkpoint]:
    """Run (or continue) training until ``config.epochs`` epochs or ``config.max_steps`` steps.

    Epoch ``k`` (1-based) shuffles with seed ``base_seed + k``. Writes
    ``epoch-KKK.ckpt`` every ``checkpoint_every`` epochs, ``final.ckpt`` at the
    end, ``train.log`` and ``report.json`` into ``output_dir``.
    """
    text = corpus_text if corpus_text is not None else _read_corpus(config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    if resume is not None:
        ckpt = resume if isinstance(resume, Checkpoint) else Checkpoint.load(resume)
        vocab = ckpt.vocab
        mconf = config.model_config(len(vocab))
        _check_resume(ckpt, mconf, config)
        ckpt.adam.lr, ckpt.adam.beta1, ckpt.adam.beta2, ckpt.adam.eps = (
            config.lr, config.beta1, config.beta2, config.eps)
    else:
        vocab = build_vocabulary(text)
        mconf = config.model_config(len(vocab))
        rng = PortableRNG(config.base_seed)
        params = nn.init_params(mconf, rng)
        ckpt = Checkpoint(config=mconf, vocab=vocab, params=params,
                          adam=AdamState.fresh(params, lr=config.lr, beta1=config.beta1,
                                               beta2=config.beta2, eps=config.eps),
                          rng_state=rng.state)
    ckpt.meta = {"base_seed": config.base_seed, "batch_size": config.batch_size,
                 "drop_last": config.drop_last}

    examples = make_examples(encode(text, vocab), mconf.seq_len)
    limit = 3.0 * math.log(len(vocab))
    report = TrainReport(epochs=[EpochRecord(**r) for r in ckpt.history],
                         total_elapsed_s=ckpt.elapsed_s, final_step=ckpt.step)
    log = open(out / "train.log", "a", encoding="utf-8")

    def emit(line):
        log.write(line + "\n")
        log.flush()
        if echo:
            print(line, file=sys.stdout, flush=True)

    try:
        while ckpt.epoch < config.epochs:
            k = ckpt.epoch + 1
            batches = make_batches(examples, config.batch_plan(k))
            if not batches:
                raise ConfigError(f"{len(examples)} examples cannot fill one batch of {config.batch_size}")
            start = time.perf_counter() - ckpt.partial["elapsed_s"]
            loss_sum = ckpt.partial["loss_sum"]
            stopped = False
            for b_idx in range(ckpt.batch, len(batches)):
                x, y = batches[b_idx]
                loss, grads = nn.loss_and_grads(x, y, ckpt.params, mconf)
                if not math.isfinite(loss) or loss > limit:
                    path = ckpt.save(out / "diverged.ckpt")
                    raise TrainingDiverged(f"loss {loss} at epoch {k} step {ckpt.step + 1} "
                                           f"exceeds 3*ln(V)={limit:.4f}", path)
                if config.clip_norm is not None:
                    clip_global_norm(grads, config.clip_norm)
                adam_step(ckpt.params, grads, ckpt.adam)
                ckpt.step += 1
                ckpt.batch = b_idx + 1
                loss_sum += loss
                if config.max_steps is not None and ckpt.step >= config.max_steps and ckpt.batch < len(batches):
                    stopped = True
                    break
            elapsed = time.perf_counter() - start
            record = EpochRecord(k, loss_sum / ckpt.batch, elapsed, ckpt.step, partial=stopped)
            emit(f"epoch={k} loss={record.loss:.6f} elapsed_s={elapsed:.3f}")
            if stopped:
                ckpt.partial = {"loss_sum": loss_sum, "elapsed_s": elapsed}
                ckpt.history.append(dataclasses.asdict(record))
                report.epochs.append(record)
                report.total_elapsed_s = ckpt.elapsed_s + elapsed
                break
            ckpt.epoch, ckpt.batch = k, 0
            ckpt.partial = {"loss_sum": 0.0, "elapsed_s": 0.0}
            ckpt.elapsed_s += elapsed
            if ckpt.history and ckpt.history[-1]["epoch"] == k and ckpt.history[-1]["partial"]:
                ckpt.history.pop()
                report.epochs.pop()
            ckpt.history.append(dataclasses.asdict(record))
            report.epochs.append(record)
            report.total_elapsed_s = ckpt.elapsed_s
            if k % config.checkpoint_every == 0:
                ckpt.save(out / f"epoch-{k:03d}.ckpt")
            if config.max_steps is not None and ckpt.step >= config.max_steps:
                break
    finally:
        log.close()

    report.final_step = ckpt.step
    ckpt.save(out / "final.ckpt")
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    return report, ckpt


def evaluate_loss(checkpoint, corpus_text: str, chunk: int = 64) -> float:
    """Mean per-character cross-entropy over the corpus's windows, no updates."""
    ckpt = checkpoint if isinstance(checkpoint, Checkpoint) else Checkpoint.load(checkpoint)
    examples = make_examples(encode(corpus_text, ckpt.vocab), ckpt.config.seq_len)
    total, count = 0.0, 0
    for x, y in iter_chunks(examples, chunk):
        logits, _, _ = nn.forward(x, ckpt.params, ckpt.config)
        total += nn.cross_entropy(logits, y) * y.size
        count += y.size
    return total / count
