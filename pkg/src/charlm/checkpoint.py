"""Self-describing binary checkpoint.

Layout::

    8 bytes   magic b"CHLMCKPT"
    8 bytes   header length n, unsigned little-endian
    n bytes   UTF-8 JSON header
    ...       raw little-endian float64 blocks

The header lists every block under ``"tensors"`` as ``[section, name, shape]``
in file order. Sections are written as: all parameters, then Adam first
moments, then Adam second moments, each in the canonical tensor order of
:func:`charlm.nn.param_shapes`. PRNG state is stored as the plain integers
described in :mod:`charlm.rng`.
"""
from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .nn import ModelConfig, param_shapes
from .optim import AdamState
from .text import Vocabulary

MAGIC = b"CHLMCKPT"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    config: ModelConfig
    vocab: Vocabulary
    params: dict
    adam: AdamState
    rng_state: dict
    epoch: int = 0           # completed epochs
    step: int = 0            # Adam steps taken
    batch: int = 0           # batches done inside the current, unfinished epoch
    elapsed_s: float = 0.0   # wall-clock of all completed epochs
    partial: dict = field(default_factory=lambda: {"loss_sum": 0.0, "elapsed_s": 0.0})
    history: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def save(self, path) -> Path:
        path = Path(path)
        names = list(param_shapes(self.config))
        blocks = [("param", self.params), ("adam_m", self.adam.m), ("adam_v", self.adam.v)]
        header = {
            "format_version": FORMAT_VERSION,
            "model_config": self.config.to_dict(),
            "vocab": list(self.vocab.chars),
            "adam": {**self.adam.hyperparameters(), "t": self.adam.t},
            "rng_state": self.rng_state,
            "counters": {"epoch": self.epoch, "step": self.step, "batch": self.batch},
            "elapsed_s": self.elapsed_s,
            "partial": self.partial,
            "history": self.history,
            "meta": self.meta,
            "tensors": [[sec, n, list(d[n].shape)] for sec, d in blocks for n in names],
        }
        raw = json.dumps(header, ensure_ascii=False).encode("utf-8")
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<Q", len(raw)))
            fh.write(raw)
            for _, d in blocks:
                for n in names:
                    fh.write(np.ascontiguousarray(d[n], dtype="<f8").tobytes())
        os.replace(tmp, path)
        return path

    @classmethod
    def load(cls, path) -> "Checkpoint":
        path = Path(path)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
        if data[:8] != MAGIC:
            raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
        (n,) = struct.unpack("<Q", data[8:16])
        header = json.loads(data[16:16 + n].decode("utf-8"))
        if header.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported format_version "
                                  f"{header.get('format_version')!r} (expected {FORMAT_VERSION})")
        config = ModelConfig.from_dict(header["model_config"])
        expected = param_shapes(config)
        offset = 16 + n
        sections: dict[str, dict] = {"param": {}, "adam_m": {}, "adam_v": {}}
        for sec, name, shape in header["tensors"]:
            if tuple(shape) != expected.get(name):
                raise CheckpointError(f"{path}: tensor {name!r} has shape {shape}, "
                                      f"config implies {expected.get(name)}")
            size = math.prod(shape) * 8
            if offset + size > len(data):
                raise CheckpointError(f"{path}: truncated at tensor {sec}/{name}")
            arr = np.frombuffer(data, dtype="<f8", count=math.prod(shape), offset=offset)
            sections[sec][name] = arr.reshape(shape).astype(config.np_dtype)
            offset += size
        for sec, d in sections.items():
            if set(d) != set(expected):
                raise CheckpointError(f"{path}: section {sec!r} is incomplete")
        adam_h = header["adam"]
        adam = AdamState(lr=adam_h["lr"], beta1=adam_h["beta1"], beta2=adam_h["beta2"],
                         eps=adam_h["eps"], t=adam_h["t"], m=sections["adam_m"], v=sections["adam_v"])
        c = header["counters"]
        return cls(config=config, vocab=Vocabulary(header["vocab"]), params=sections["param"],
                   adam=adam, rng_state=header["rng_state"], epoch=c["epoch"], step=c["step"],
                   batch=c["batch"], elapsed_s=header["elapsed_s"], partial=header["partial"],
                   history=header["history"], meta=header.get("meta", {}))
