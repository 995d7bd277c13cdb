"""Character vocabulary, encoding and training-batch construction."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .rng import PortableRNG

VOCAB_FORMAT_VERSION = 1


class Vocabulary:
    """Bijection between the distinct characters of a corpus and ``0..V-1``.

    Characters are ordered by ascending code point, so the mapping depends only
    on the character set, never on the order characters appear in the text.
    """

    def __init__(self, chars: Iterable[str]):
        chars = list(chars)
        for ch in chars:
            if len(ch) != 1:
                raise ValueError(f"vocabulary entries must be single characters, got {ch!r}")
        if len(set(chars)) != len(chars):
            raise ValueError("vocabulary contains duplicate characters")
        if chars != sorted(chars):
            raise ValueError("vocabulary must be sorted by code point")
        if not chars:
            raise ValueError("vocabulary is empty")
        self.chars: tuple[str, ...] = tuple(chars)
        self.lookup: dict[str, int] = {ch: i for i, ch in enumerate(self.chars)}

    def __len__(self) -> int:
        return len(self.chars)

    def __contains__(self, ch: str) -> bool:
        return ch in self.lookup

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.chars == other.chars

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)})"

    def to_json(self) -> str:
        return json.dumps({"format_version": VOCAB_FORMAT_VERSION, "chars": list(self.chars)},
                          ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        data = json.loads(text)
        if data.get("format_version") != VOCAB_FORMAT_VERSION:
            raise ValueError(f"unsupported vocabulary format_version {data.get('format_version')!r}")
        return cls(data["chars"])

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_vocabulary(corpus: str) -> Vocabulary:
    if not corpus:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    return Vocabulary(sorted(set(corpus)))


def encode(text: str, vocab: Vocabulary) -> np.ndarray:
    lookup = vocab.lookup
    out = np.empty(len(text), dtype=np.int64)
    for i, ch in enumerate(text):
        try:
            out[i] = lookup[ch]
        except KeyError:
            raise ValueError(f"character {ch!r} (U+{ord(ch):04X}) at offset {i} "
                             "is not in the vocabulary") from None
    return out


def decode(ids: Iterable[int], vocab: Vocabulary) -> str:
    chars = vocab.chars
    out = []
    for pos, i in enumerate(ids):
        i = int(i)
        if not 0 <= i < len(chars):
            raise ValueError(f"id {i} at position {pos} is outside [0, {len(chars)})")
        out.append(chars[i])
    return "".join(out)


@dataclass(frozen=True)
class TrainingExample:
    input_ids: np.ndarray
    target_ids: np.ndarray


class Examples(Sequence):
    """Stacked input/target windows: ``inputs[k, t]`` predicts ``targets[k, t]``."""

    def __init__(self, inputs: np.ndarray, targets: np.ndarray):
        if inputs.shape != targets.shape or inputs.ndim != 2:
            raise ValueError("inputs and targets must be equal-shape 2-D arrays")
        self.inputs = inputs
        self.targets = targets

    @property
    def seq_len(self) -> int:
        return self.inputs.shape[1]

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def __getitem__(self, k):
        if isinstance(k, slice):
            return Examples(self.inputs[k], self.targets[k])
        return TrainingExample(self.inputs[k], self.targets[k])


def make_examples(ids, seq_len: int) -> Examples:
    """Cut ``ids`` into non-overlapping windows of ``seq_len + 1`` and shift each by one.

    The tail shorter than a full window is dropped.
    """
    ids = np.asarray(ids, dtype=np.int64)
    if seq_len < 1:
        raise ValueError(f"seq_len must be >= 1, got {seq_len}")
    window = seq_len + 1
    n = len(ids) // window
    if n == 0:
        raise ValueError(f"corpus of {len(ids)} ids is shorter than one window of {window}")
    windows = ids[: n * window].reshape(n, window)
    return Examples(windows[:, :-1].copy(), windows[:, 1:].copy())


@dataclass(frozen=True)
class BatchPlan:
    batch_size: int = 64
    shuffle_seed: int = 0
    drop_last: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def num_batches(num_examples: int, plan: BatchPlan) -> int:
    full, rest = divmod(num_examples, plan.batch_size)
    return full if plan.drop_last or rest == 0 else full + 1


def make_batches(examples: Examples, plan: BatchPlan) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffle with ``PortableRNG(plan.shuffle_seed)`` and group into ``(inputs, targets)`` batches."""
    if len(examples) == 0:
        raise ValueError("no examples to batch")
    order = np.asarray(PortableRNG(plan.shuffle_seed).permutation(len(examples)), dtype=np.int64)
    count = num_batches(len(examples), plan)
    bs = plan.batch_size
    return [(examples.inputs[order[k * bs:(k + 1) * bs]],
             examples.targets[order[k * bs:(k + 1) * bs]]) for k in range(count)]


def iter_chunks(examples: Examples, size: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """In-order, unshuffled chunks; used for evaluation."""
    for start in range(0, len(examples), size):
        yield examples.inputs[start:start + size], examples.targets[start:start + size]
