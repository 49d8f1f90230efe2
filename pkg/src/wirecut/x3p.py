"""Reading and writing surface containers.

Two formats: the x3p zip container (ISO 25178-72 surface subset) and a
plain-text matrix format used in tests and stage dumps.

x3p layout: ``main.xml`` manifest, ``bindata/data.bin`` raw little-endian
IEEE-754 floats (x varies fastest, i.e. row-major for an h x w grid), and
``md5checksum.hex``. Heights are micrometers in memory; on disk the payload
holds counts whose physical meter value is count times the CZ axis
increment (the writer declares 1e-6, i.e. stores um counts, so round trips
are bit-exact; archives without a CZ increment are read as absolute
meters). Missing cells travel as quiet NaN. The writer always emits
float64; the reader accepts float32 and float64. The reader strips XML namespaces, so
manifests from other toolchains parse as long as the element names match.
"""
from __future__ import annotations

import hashlib
import io
import os
import warnings
import xml.etree.ElementTree as ET
import zipfile
from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionMismatch, MissingManifest, NotZip, ParseError,
                     UnsupportedDataType)
from .surface import SurfaceMatrix

_UM_PER_M = 1e6

_KNOWN_RECORD2 = {"Date", "Creator", "Instrument", "Comment"}


@dataclass
class X3pMeta:
    """Recognized subset of the x3p manifest."""

    size_x: int
    size_y: int
    increment_x: float  # meters / pixel
    increment_y: float
    creator: str = ""
    instrument: str = ""
    comment: str = ""
    data_kind: str = "float64"   # float32 | float64
    raw_extras: list = field(default_factory=list)  # unrecognized XML, verbatim

    def __post_init__(self):
        if self.increment_x <= 0 or self.increment_y <= 0:
            raise ValueError("increments must be positive")
        if self.data_kind not in ("float32", "float64"):
            raise UnsupportedDataType(self.data_kind)


def _localname(tag):
    return tag.rsplit("}", 1)[-1]


def _strip_namespaces(root):
    for el in root.iter():
        el.tag = _localname(el.tag)
    return root


def _find(root, path):
    el = root.find(path)
    if el is None or el.text is None:
        raise MissingManifest(f"manifest missing element {path}")
    return el.text.strip()


def read_x3p(path, transpose=False):
    """Read an x3p archive into a SurfaceMatrix (um) and its metadata.

    ``transpose`` swaps the payload point ordering in case field data was
    written y-fastest.
    """
    try:
        zf = zipfile.ZipFile(path)
    except (zipfile.BadZipFile, IsADirectoryError) as e:
        raise NotZip(f"{path}: not a zip archive") from e
    with zf:
        names = zf.namelist()
        main = next((n for n in names if os.path.basename(n).lower() == "main.xml"), None)
        if main is None:
            raise MissingManifest(f"{path}: no main.xml in archive")
        root = _strip_namespaces(ET.fromstring(zf.read(main)))

        size_x = int(_find(root, ".//Record3/MatrixDimension/SizeX"))
        size_y = int(_find(root, ".//Record3/MatrixDimension/SizeY"))
        inc_x = float(_find(root, ".//Record1/Axes/CX/Increment"))
        inc_y = float(_find(root, ".//Record1/Axes/CY/Increment"))
        inc_z_el = root.find(".//Record1/Axes/CZ/Increment")
        inc_z = float(inc_z_el.text.strip()) if inc_z_el is not None and inc_z_el.text else 1.0
        dtype_el = root.find(".//Record1/Axes/CZ/DataType")
        code = dtype_el.text.strip() if dtype_el is not None and dtype_el.text else "D"
        if code == "D":
            np_dtype, data_kind = "<f8", "float64"
        elif code == "F":
            np_dtype, data_kind = "<f4", "float32"
        else:
            raise UnsupportedDataType(f"{path}: data type code {code!r}")

        link_el = root.find(".//Record3/DataLink/PointDataLink")
        link = link_el.text.strip() if link_el is not None and link_el.text else "bindata/data.bin"
        candidates = [n for n in names if n == link or n.endswith(link)]
        if not candidates:
            raise MissingManifest(f"{path}: payload {link} not found in archive")
        payload = zf.read(candidates[0])

        checksum = next((n for n in names if n.endswith("md5checksum.hex")), None)
        if checksum is not None:
            recorded = zf.read(checksum).decode("ascii", "replace").split()
            if recorded and recorded[0] != hashlib.md5(payload).hexdigest():
                warnings.warn(f"{path}: payload MD5 mismatch; file may be corrupt")

        meta = X3pMeta(size_x=size_x, size_y=size_y,
                       increment_x=inc_x, increment_y=inc_y,
                       data_kind=data_kind,
                       raw_extras=_collect_extras(root))
        r2 = root.find(".//Record2")
        if r2 is not None:
            for tag, attr in (("Creator", "creator"), ("Instrument", "instrument"),
                              ("Comment", "comment")):
                el = r2.find(tag)
                if el is not None and el.text:
                    setattr(meta, attr, el.text.strip())

    values = np.frombuffer(payload, dtype=np_dtype).astype(np.float64)
    if values.size != size_x * size_y:
        raise DimensionMismatch(
            f"{path}: payload has {values.size} points, manifest says "
            f"{size_x} x {size_y} = {size_x * size_y}")
    grid = values.reshape(size_y, size_x)   # x fastest
    if transpose:
        grid = values.reshape(size_x, size_y).T
    # counts -> meters via the CZ increment, then meters -> um; for archives
    # written here the combined factor is exactly 1.0, so heights round-trip
    # bit-for-bit
    heights = grid * (inc_z * _UM_PER_M)
    surface = SurfaceMatrix(heights, res_x=inc_x * _UM_PER_M, res_y=inc_y * _UM_PER_M)
    return surface, meta


def _collect_extras(root):
    """Unrecognized elements, serialized verbatim for re-emission."""
    extras = []
    # Record4 only names the checksum file; the writer regenerates it.
    known_records = {"Record1", "Record2", "Record3", "Record4"}
    for child in list(root):
        if child.tag not in known_records:
            extras.append(ET.tostring(child, encoding="unicode"))
    r2 = root.find("Record2")
    if r2 is not None:
        for child in list(r2):
            if child.tag not in _KNOWN_RECORD2:
                extras.append(ET.tostring(child, encoding="unicode"))
    return extras


def default_meta(surface, creator="", instrument="", comment=""):
    """Metadata matching a SurfaceMatrix (resolution back-converted to meters)."""
    return X3pMeta(size_x=surface.w, size_y=surface.h,
                   increment_x=surface.res_x / _UM_PER_M,
                   increment_y=surface.res_y / _UM_PER_M,
                   creator=creator, instrument=instrument, comment=comment)


def write_x3p(surface, meta=None, path=None):
    """Write a SurfaceMatrix to an x3p archive (always float64 payload)."""
    if meta is None:
        meta = default_meta(surface)
    if (meta.size_x, meta.size_y) != (surface.w, surface.h):
        raise DimensionMismatch(
            f"meta says {meta.size_x} x {meta.size_y}, surface is "
            f"{surface.w} x {surface.h}")

    root = ET.Element("ISO5436_2")
    r1 = ET.SubElement(root, "Record1")
    ET.SubElement(r1, "Revision").text = "ISO5436 - 2000"
    ET.SubElement(r1, "FeatureType").text = "SUR"
    axes = ET.SubElement(r1, "Axes")
    for name, inc in (("CX", meta.increment_x), ("CY", meta.increment_y)):
        ax = ET.SubElement(axes, name)
        ET.SubElement(ax, "AxisType").text = "I"
        ET.SubElement(ax, "DataType").text = "D"
        ET.SubElement(ax, "Increment").text = repr(inc)
        ET.SubElement(ax, "Offset").text = "0"
    cz = ET.SubElement(axes, "CZ")
    ET.SubElement(cz, "AxisType").text = "A"
    ET.SubElement(cz, "DataType").text = "D"
    # payload stores height counts; meters = count * CZ increment. Keeping
    # the counts in um and declaring the scale here makes the round trip
    # bit-exact, which a meters-valued payload cannot be (a /1e6 then *1e6
    # trip loses the last bit whenever the two binades misalign).
    ET.SubElement(cz, "Increment").text = repr(1.0 / _UM_PER_M)
    ET.SubElement(cz, "Offset").text = "0"

    r2 = ET.SubElement(root, "Record2")
    ET.SubElement(r2, "Creator").text = meta.creator or None
    ET.SubElement(r2, "Instrument").text = meta.instrument or None
    ET.SubElement(r2, "Comment").text = meta.comment or None

    r3 = ET.SubElement(root, "Record3")
    dims = ET.SubElement(r3, "MatrixDimension")
    ET.SubElement(dims, "SizeX").text = str(meta.size_x)
    ET.SubElement(dims, "SizeY").text = str(meta.size_y)
    ET.SubElement(dims, "SizeZ").text = "1"
    link = ET.SubElement(r3, "DataLink")
    ET.SubElement(link, "PointDataLink").text = "bindata/data.bin"

    for raw in meta.raw_extras:
        root.append(ET.fromstring(raw))

    payload = np.ascontiguousarray(surface.heights, dtype="<f8").tobytes()
    md5 = hashlib.md5(payload).hexdigest()
    chk = ET.SubElement(ET.SubElement(root, "Record4"), "ChecksumFile")
    chk.text = "md5checksum.hex"

    xml_bytes = ET.tostring(root, encoding="utf-8", xml_declaration=True)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("main.xml", xml_bytes)
        zf.writestr("bindata/data.bin", payload)
        zf.writestr("md5checksum.hex", f"{md5} *bindata/data.bin\n")


# --- plain-text matrix format ------------------------------------------------

def write_matrix_text(surface, path):
    """Header line 'h w res_x res_y', then h rows of w tokens, NA for missing."""
    with open(path, "w") as fh:
        fh.write(f"{surface.h} {surface.w} "
                 f"{surface.res_x:.17g} {surface.res_y:.17g}\n")
        for row in surface.heights:
            fh.write(" ".join(
                "NA" if np.isnan(v) else f"{v:.17g}" for v in row) + "\n")


def read_matrix_text(path):
    with open(path) as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 4:
            raise ParseError("header must be 'h w res_x res_y'", line=1)
        try:
            h, w = int(parts[0]), int(parts[1])
            res_x, res_y = float(parts[2]), float(parts[3])
        except ValueError as e:
            raise ParseError(f"bad header value: {e}", line=1)
        if h < 1 or w < 1 or res_x <= 0 or res_y <= 0:
            raise ParseError("header values out of range", line=1)

        values = np.empty(h * w)
        n = 0
        for lineno, line in enumerate(fh, start=2):
            for col, tok in enumerate(line.split(), start=1):
                if n >= h * w:
                    raise ParseError("more data tokens than h*w",
                                     line=lineno, column=col)
                if tok == "NA":
                    values[n] = np.nan
                else:
                    try:
                        values[n] = float(tok)
                    except ValueError:
                        raise ParseError(f"bad token {tok!r}",
                                         line=lineno, column=col)
                n += 1
        if n != h * w:
            raise ParseError(f"expected {h * w} data tokens, got {n}")
    return SurfaceMatrix(values.reshape(h, w), res_x=res_x, res_y=res_y)
