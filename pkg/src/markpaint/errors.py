"""Exception types shared across the toolkit."""


class MarkpaintError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(MarkpaintError, ValueError):
    """An argument violates a documented contract (shape, range, value set)."""


class ImageIOError(MarkpaintError):
    """Reading or writing an image/mask file failed; message carries the path."""


class CheckpointError(MarkpaintError):
    """A model checkpoint is missing, corrupt, or from an incompatible version."""


class ModelCapabilityError(MarkpaintError):
    """The model does not support the requested operation (e.g. gradients)."""


class RegistryError(MarkpaintError):
    """Adapter registry lookup or registration failed."""


class ConfigError(MarkpaintError):
    """An experiment config file failed validation; message carries field paths."""
