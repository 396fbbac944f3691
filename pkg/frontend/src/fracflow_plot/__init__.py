"""Figure generation from fracflow CSV outputs (pure presentation layer)."""

__version__ = "0.1.0"
