"""Temperature-controlled, stateful character generation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .checkpoint import Checkpoint
from .rng import PortableRNG
from .text import decode, encode


@dataclass(frozen=True)
class GenerationRequest:
    seed_text: str
    num_chars: int
    temperature: float = 1.0
    rng_seed: int = 0
    greedy: bool = False

    def __post_init__(self):
        if not self.seed_text:
            raise ValueError("seed_text must be non-empty")
        if self.num_chars < 1:
            raise ValueError(f"num_chars must be >= 1, got {self.num_chars}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")


def temperature_probs(logits, temperature: float) -> np.ndarray:
    """softmax(logits / T). The division happens on logits, before normalization."""
    if not temperature > 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    return nn.softmax(np.asarray(logits, dtype=np.float64) / temperature)


def entropy(p) -> float:
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def sample_index(logits, temperature: float, rng: PortableRNG, greedy: bool = False) -> int:
    """Draw from softmax(logits / T) by inverse CDF on one uniform variate.

    ``greedy`` returns the argmax instead (lowest index on ties), the T -> 0 limit.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits must be finite")
    if greedy:
        return int(np.argmax(logits))
    cdf = np.cumsum(temperature_probs(logits, temperature))
    u = rng.uniform() * cdf[-1]
    return min(int(np.searchsorted(cdf, u, side="right")), len(cdf) - 1)


@dataclass
class GenerationResult:
    text: str
    entropies: list[float] = field(default_factory=list)

    @property
    def mean_entropy(self) -> float:
        return float(np.mean(self.entropies))


def run_generation(checkpoint, request: GenerationRequest) -> GenerationResult:
    """Warm up on the full seed, then sample ``num_chars`` characters one at a time.

    Each sampled character is fed back as the next input with the recurrent
    state carried along. ``entropies`` holds the entropy of every sampling
    distribution.
    """
    ckpt = checkpoint if isinstance(checkpoint, Checkpoint) else Checkpoint.load(checkpoint)
    config, params = ckpt.config, ckpt.params
    seed_ids = encode(request.seed_text, ckpt.vocab)
    rng = PortableRNG(request.rng_seed)
    state = nn.RecurrentState.zeros(config, 1)
    for i in seed_ids:
        logits, state = nn.step([i], params, config, state)
    out, entropies = [], []
    for _ in range(request.num_chars):
        row = logits[0]
        entropies.append(entropy(temperature_probs(row, request.temperature)))
        idx = sample_index(row, request.temperature, rng, greedy=request.greedy)
        out.append(idx)
        logits, state = nn.step([idx], params, config, state)
    return GenerationResult(request.seed_text + decode(out, ckpt.vocab), entropies)


def generate(checkpoint, request: GenerationRequest) -> str:
    return run_generation(checkpoint, request).text
