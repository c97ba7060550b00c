#!/usr/bin/env python3
"""
Exception hierarchy for flatmoduli.

Every error derives from ValueError so callers that only know about
configuration-style failures keep catching them.
"""

from typing import Optional


class FlatModuliError(ValueError):
    """Base class for all flatmoduli errors."""


# lie

class SpecMismatchError(FlatModuliError):
    """Two operands belong to different group specifications."""


class UnsupportedGroupError(FlatModuliError):
    """Family or rank outside the supported realizations."""


class NonUnipotentError(FlatModuliError):
    """Logarithm requested for a matrix that is not unipotent."""


class SingularElementError(FlatModuliError):
    """Group element is not invertible."""


class UncertifiedGroupError(FlatModuliError):
    """No Hodge-property certificate could be produced or verified."""


# torus

class DegenerateLatticeError(FlatModuliError):
    """Lattice generators are dependent or negatively oriented."""


class BandLimitError(FlatModuliError):
    """Spectral content would alias into the retained band."""


class NotClosedError(FlatModuliError):
    """A form required to be d-closed is not."""


class HarmonicObstructionError(FlatModuliError):
    """Right-hand side of a ddbar equation has a harmonic component."""

    def __init__(self, message: str, norm: float):
        super().__init__(f"{message} (harmonic norm {norm:.3e})")
        self.norm = norm


# derham

class TwistError(FlatModuliError):
    """Twist data is not a constant diagonal (0,1)-form."""


class TwistMismatchError(FlatModuliError):
    """A form's diagonal class disagrees with the declared twist."""


class NonFlatError(FlatModuliError):
    """Connection curvature exceeds the flatness tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (curvature norm {residual:.3e})")
        self.residual = residual


# moduli

class ObstructionError(FlatModuliError):
    """Flatness equation cannot be solved at some filtration level."""

    def __init__(self, message: str, level: int, norm: float):
        super().__init__(f"{message} at level {level} (norm {norm:.3e})")
        self.level = level
        self.norm = norm


# cli

class ConfigError(FlatModuliError):
    """Invalid job configuration."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        where = ""
        if field:
            where += f" at '{field}'"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"Configuration validation error{where}: {message}")
        self.field = field
        self.line = line
