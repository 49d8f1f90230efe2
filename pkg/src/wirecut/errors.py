"""Exception hierarchy for the wirecut pipeline."""


class WirecutError(Exception):
    """Base class for all wirecut errors."""


# --- label / pairing ---

class MalformedLabel(WirecutError):
    """Scan name does not follow the T{tool}{edge}W-L{loc}-R{rep} grammar."""


class IdenticalScan(WirecutError):
    """Attempted to categorize a scan paired with itself."""


# --- x3p / text I/O ---

class NotZip(WirecutError):
    """File is not a zip archive."""


class MissingManifest(WirecutError):
    """Archive has no main.xml manifest."""


class DimensionMismatch(WirecutError):
    """Binary payload length disagrees with the manifest dimensions."""


class UnsupportedDataType(WirecutError):
    """Payload data type is neither float32 nor float64."""


class ParseError(WirecutError):
    """Text matrix file is malformed."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}" + (
                f", column {column})" if column is not None else ")")
        super().__init__(message)
        self.line = line
        self.column = column


# --- geometry / surface processing ---

class EmptySurface(WirecutError):
    """Surface has no usable (non-missing) cells."""


class DegenerateGeometry(WirecutError):
    """Point set too small or collinear for hull construction."""


class RankDeficient(WirecutError):
    """Not enough spread in the data for a full quadratic trend fit."""


class NoSupport(WirecutError):
    """A region inside the boundary polygon has no observed seed values."""


class EmptyMask(WirecutError):
    """Gradient masks contain no points (after downsampling)."""


class AngleOutOfRange(WirecutError):
    """Rotation correction exceeds the plausible range."""


class BaseLengthMismatch(WirecutError):
    """Base signal length does not match the surface width."""


# --- signal comparison ---

class InsufficientOverlap(WirecutError):
    """No lag satisfies the minimum-overlap requirement."""


class ZeroVariance(WirecutError):
    """Every candidate overlap window is constant; correlation undefined."""


class DegenerateClasses(WirecutError):
    """ROC needs at least one positive and one negative result."""
