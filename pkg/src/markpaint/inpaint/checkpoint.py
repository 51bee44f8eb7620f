"""Self-describing checkpoint container: magic, JSON header, parameters."""

from __future__ import annotations

import io
import json
import struct
from dataclasses import asdict
from pathlib import Path

import torch

from ..errors import CheckpointError
from .model import InpainterModel
from .toy import ToyInpainter, ToyInpainterConfig

MAGIC = b"MPKT1"
FORMAT_VERSION = 1


def save_model(model: InpainterModel, path) -> None:
    """Write a checkpoint that reproduces inpaint() outputs bitwise on load."""
    if not isinstance(model, ToyInpainter):
        raise CheckpointError(f"only toy models serialize natively; "
                              f"{model.identifier!r} adapters manage their own "
                              f"weights")
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "toy",
        "identifier": model.identifier,
        "arch": asdict(model.config),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    buf = io.BytesIO()
    torch.save(model.state_dict(), buf)
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack(">I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(buf.getvalue())


def load_model(path) -> InpainterModel:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"{path}: no such checkpoint")
    try:
        with open(path, "rb") as fh:
            magic = fh.read(len(MAGIC))
            if magic != MAGIC:
                raise CheckpointError(f"{path}: not a model checkpoint "
                                      f"(bad magic {magic!r})")
            (hlen,) = struct.unpack(">I", fh.read(4))
            header = json.loads(fh.read(hlen).decode())
            payload = fh.read()
    except (OSError, struct.error, UnicodeDecodeError,
            json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt checkpoint ({exc})") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version "
                              f"{header.get('format_version')!r}")
    if header.get("kind") != "toy":
        raise CheckpointError(f"{path}: unknown model kind {header.get('kind')!r}")
    model = ToyInpainter(ToyInpainterConfig(**header["arch"]),
                         identifier=header["identifier"])
    try:
        state = torch.load(io.BytesIO(payload), weights_only=True)
        model.load_state_dict(state)
    except Exception as exc:
        raise CheckpointError(f"{path}: corrupt checkpoint payload "
                              f"({exc})") from exc
    return model
