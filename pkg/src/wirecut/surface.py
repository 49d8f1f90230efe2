"""Surface-matrix data model, scan-label grammar and pipeline parameters.

Heights are stored in micrometers throughout. Missing cells are represented
by NaN in the height grid; stored (non-missing) heights are always finite,
so NaN never collides with a legitimate value. The grid is row-major with
row 0 at the top; physical x of column j is ``origin[0] + j * res_x``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, asdict
from enum import Enum

import numpy as np

from .errors import IdenticalScan, MalformedLabel


@dataclass
class SurfaceMatrix:
    """h x w grid of optional height values (um) with physical resolution."""

    heights: np.ndarray
    res_x: float = 0.645
    res_y: float = 0.645
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=np.float64)
        if self.heights.ndim != 2 or self.heights.shape[0] < 1 or self.heights.shape[1] < 1:
            raise ValueError("heights must be a 2D grid with h >= 1, w >= 1")
        if not (self.res_x > 0 and self.res_y > 0):
            raise ValueError("resolutions must be positive")
        if np.isinf(self.heights).any():
            raise ValueError("stored heights must be finite (use NaN for missing)")
        self.origin = (float(self.origin[0]), float(self.origin[1]))

    @property
    def h(self):
        return self.heights.shape[0]

    @property
    def w(self):
        return self.heights.shape[1]

    @property
    def missing(self):
        """Boolean grid, True where the cell is missing."""
        return np.isnan(self.heights)

    @property
    def n_missing(self):
        return int(np.isnan(self.heights).sum())

    @property
    def n_observed(self):
        return self.heights.size - self.n_missing

    def x_coords(self):
        """Physical x (um) of each column."""
        return self.origin[0] + np.arange(self.w) * self.res_x

    def y_coords(self):
        """Physical y (um) of each row."""
        return self.origin[1] + np.arange(self.h) * self.res_y

    def copy(self):
        return SurfaceMatrix(self.heights.copy(), self.res_x, self.res_y, self.origin)

    def with_heights(self, heights):
        """Same geometry, new height grid."""
        return SurfaceMatrix(heights, self.res_x, self.res_y, self.origin)


EDGES = ("A", "B", "C", "D")
LOCATIONS = ("I", "M", "O")
TOOL_RANGE = range(1, 6)
REP_RANGE = range(1, 3)

_LABEL_RE = re.compile(r"^T(\d+)([A-Z])W-L([A-Z])-R(\d+)$")


@dataclass(frozen=True, order=True)
class ScanLabel:
    """Identity of one scan: tool 1-5, edge A-D, location I/M/O, repetition 1-2."""

    tool: int
    edge: str
    location: str
    repetition: int

    def render(self):
        return f"T{self.tool}{self.edge}W-L{self.location}-R{self.repetition}"

    def __str__(self):
        return self.render()


def parse_label(name):
    """Parse a scan name like ``T1AW-LI-R1`` into a ScanLabel.

    Raises MalformedLabel when any of the four parts is absent or out of
    range. The literal 'W' and 'L' separators are required.
    """
    m = _LABEL_RE.match(name.strip())
    if m is None:
        raise MalformedLabel(f"cannot parse scan name {name!r}")
    tool, edge, location, rep = int(m.group(1)), m.group(2), m.group(3), int(m.group(4))
    if tool not in TOOL_RANGE:
        raise MalformedLabel(f"tool {tool} out of range 1-5 in {name!r}")
    if edge not in EDGES:
        raise MalformedLabel(f"edge {edge!r} not in A-D in {name!r}")
    if location not in LOCATIONS:
        raise MalformedLabel(f"location {location!r} not in I/M/O in {name!r}")
    if rep not in REP_RANGE:
        raise MalformedLabel(f"repetition {rep} out of range 1-2 in {name!r}")
    return ScanLabel(tool, edge, location, rep)


def render_label(label):
    return label.render()


def all_labels():
    """All 120 valid labels of the study design, in sorted order."""
    return [ScanLabel(t, e, l, r)
            for t in TOOL_RANGE for e in EDGES for l in LOCATIONS for r in REP_RANGE]


class PairCategory(Enum):
    SAME_SOURCE = "same_source"
    DIFFERENT_TOOL = "different_tool"
    SAME_TOOL_DIFFERENT_SITE = "same_tool_different_site"
    UNKNOWN = "unknown"


def pair_category(a, b):
    """Classify a pair of scans by shared provenance.

    SameSource when tool, edge and location all match (repetitions differ);
    DifferentTool when the tools differ; SameToolDifferentSite otherwise.
    """
    if a == b:
        raise IdenticalScan(f"{a} paired with itself")
    if a.tool != b.tool:
        return PairCategory.DIFFERENT_TOOL
    if a.edge == b.edge and a.location == b.location:
        return PairCategory.SAME_SOURCE
    return PairCategory.SAME_TOOL_DIFFERENT_SITE


@dataclass
class PipelineParams:
    """All tunables of the processing stages, with their documented defaults."""

    margin_px: int = 16            # boundary erosion width
    concavity: float = 2.0         # concave hull dig threshold
    length_threshold: float = 0.0  # hull edges shorter than this are kept
    fold_radius_scale: float = 1.05
    diff_quantile: float = 0.05    # tail quantile for the gradient masks
    downsample: int = 8            # mask downsampling before the Hough vote
    min_mask_points: int = 100     # halve downsample until this many points vote
    n_theta: int = 720             # angle bins over [0, pi)
    loess_span: float = 0.05
    min_peak_ratio: float = 1.5    # below this the angle estimate is low-confidence
    delta: int = 50                # max per-row shift (px)
    shift_passes: int = 1          # dewarp iterations (recompute base each pass)
    min_overlap_frac: float = 0.1  # CCF minimum overlap fraction
    min_rows: int = 10             # column support needed for the median signal
    signal_stat: str = "median"    # or "mean"

    def __post_init__(self):
        self.validate()

    def validate(self):
        numeric = ["margin_px", "concavity", "fold_radius_scale", "diff_quantile",
                   "downsample", "min_mask_points", "n_theta", "loess_span",
                   "min_peak_ratio",
                   "delta", "shift_passes", "min_overlap_frac", "min_rows"]
        for name in numeric:
            v = getattr(self, name)
            if name == "margin_px":
                if v < 0:
                    raise ValueError("margin_px must be >= 0")
                continue
            if not v > 0:
                raise ValueError(f"{name} must be strictly positive, got {v}")
        if self.length_threshold < 0:
            raise ValueError("length_threshold must be >= 0")
        if self.delta < 1:
            raise ValueError("delta must be >= 1 pixel")
        if not 0 < self.diff_quantile < 0.5:
            raise ValueError("diff_quantile must lie in (0, 0.5)")
        if self.signal_stat not in ("median", "mean"):
            raise ValueError("signal_stat must be 'median' or 'mean'")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown parameters: {sorted(unknown)}")
        return cls(**known)
