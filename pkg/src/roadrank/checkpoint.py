"""Versioned plain-text checkpoints: every tensor by name with its shape
and row-major values at full float64 precision, plus the metadata needed
to rebuild the pipeline (variant, dims, seed)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .encoder import EmbedParams
from .graph import ValidationError
from .ranker import RankerParams

_CKPT_MAGIC = "roadrank-checkpoint v1"


def save_checkpoint(path, embed: EmbedParams | None, ranker: RankerParams,
                    meta: dict) -> None:
    """Write parameters and metadata; ``embed`` may be None (NoEmb)."""
    tensors: dict[str, np.ndarray] = {}
    if embed is not None:
        tensors.update({f"embed.{k}": v for k, v in embed.tensors().items()})
    tensors.update({f"ranker.{k}": v for k, v in ranker.tensors().items()})
    with open(Path(path), "w") as fh:
        fh.write(_CKPT_MAGIC + "\n")
        for key in sorted(meta):
            fh.write(f"meta {key} {meta[key]}\n")
        for name in sorted(tensors):
            arr = tensors[name]
            shape = " ".join(str(d) for d in arr.shape)
            fh.write(f"tensor {name} {shape}\n")
            fh.write(" ".join(repr(float(v)) for v in arr.reshape(-1)) + "\n")


def load_checkpoint(path) -> tuple[EmbedParams | None, RankerParams, dict]:
    """Read a checkpoint written by :func:`save_checkpoint`."""
    path = Path(path)
    meta: dict[str, str] = {}
    tensors: dict[str, np.ndarray] = {}
    with open(path) as fh:
        magic = fh.readline().rstrip("\n")
        if magic != _CKPT_MAGIC:
            raise ValidationError(f"{path}: unrecognized checkpoint header {magic!r}")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            kind, _, rest = line.partition(" ")
            if kind == "meta":
                key, _, value = rest.partition(" ")
                meta[key] = value
            elif kind == "tensor":
                parts = rest.split(" ")
                name = parts[0]
                shape = tuple(int(d) for d in parts[1:])
                values = fh.readline().split()
                arr = np.array([float(v) for v in values], dtype=np.float64)
                if arr.size != int(np.prod(shape)):
                    raise ValidationError(f"{path}: tensor {name} has wrong value count")
                tensors[name] = arr.reshape(shape)
            else:
                raise ValidationError(f"{path}: unexpected line {line!r}")

    embed = None
    if any(name.startswith("embed.") for name in tensors):
        m = int(meta["m"])
        x = int(meta["x"])
        dim = int(meta["dim"])
        embed = EmbedParams.zeros(m, x, dim)
        for name, arr in embed.tensors().items():
            key = f"embed.{name}"
            if key not in tensors:
                raise ValidationError(f"{path}: missing tensor {key}")
            arr[...] = tensors[key]

    input_dim = int(meta["input_dim"])
    f1 = int(meta.get("f1", 32))
    f2 = int(meta.get("f2", 16))
    rdim = int(meta.get("rdim", 8))
    ranker = RankerParams.zeros(input_dim, f1, f2, rdim)
    for name, arr in ranker.tensors().items():
        key = f"ranker.{name}"
        if key not in tensors:
            raise ValidationError(f"{path}: missing tensor {key}")
        arr[...] = tensors[key]
    return embed, ranker, meta
