"""AoSControl - age-of-semantics aware sampling and relay selection."""

__version__ = "0.1.0"
