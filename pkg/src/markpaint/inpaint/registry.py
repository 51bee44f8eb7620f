"""Adapter registry: resolve model identifiers to inpainter factories.

Adapters for external pretrained inpainters register a factory here and must
satisfy the full contract (compositing pass-through, [0, 1] outputs, gradient
availability when differentiable). Each adapter documents its own model's
preprocessing convention; nothing is assumed.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Optional

from ..errors import RegistryError
from .checkpoint import load_model
from .model import InpainterModel

Factory = Callable[[Optional[str]], InpainterModel]

_REGISTRY: dict[str, Factory] = {}


def register_adapter(identifier: str, factory: Factory) -> None:
    if identifier in _REGISTRY:
        raise RegistryError(f"adapter {identifier!r} is already registered")
    _REGISTRY[identifier] = factory


def resolve_adapter(identifier: str) -> Factory:
    try:
        return _REGISTRY[identifier]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY)) or "(none)"
        raise RegistryError(f"unknown adapter {identifier!r}; known "
                            f"identifiers: {known}") from None


def registered_adapters() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def load_model_spec(spec: str) -> InpainterModel:
    """Turn a model spec string into a live model.

    Accepted forms: a checkpoint path, a registered identifier, or
    ``identifier:argument`` (the argument is passed to the factory, e.g.
    ``toy:/path/to/model.ckpt``).
    """
    if ":" in spec:
        identifier, arg = spec.split(":", 1)
        if identifier in _REGISTRY:
            return resolve_adapter(identifier)(arg)
    if Path(spec).is_file():
        return load_model(spec)
    return resolve_adapter(spec)(None)


def _toy_factory(arg: Optional[str]) -> InpainterModel:
    if arg is None:
        raise RegistryError("the 'toy' adapter needs a checkpoint path, e.g. "
                            "toy:/path/to/model.ckpt")
    return load_model(arg)


register_adapter("toy", _toy_factory)
