"""Grayscale images and their normalized gray-level histograms.

Images are 8-bit (256 gray levels). The only mandatory file format is PGM
(P2 ASCII / P5 binary) because it can be read and written bit-exactly.
Images with maxval < 255 are embedded as-is, without rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRAY_LEVELS = 256

_WHITESPACE = frozenset(b" \t\n\r\x0b\x0c")


class PgmError(ValueError):
    """Malformed PGM data. ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass
class GrayImage:
    """8-bit grayscale image; pixels are stored row-major as (height, width)."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 0 or self.height < 0:
            raise ValueError("image dimensions must be non-negative")
        px = np.asarray(self.pixels)
        if px.size != self.width * self.height:
            raise ValueError(
                f"pixel count {px.size} does not match {self.width}x{self.height}"
            )
        if px.size and (px.min() < 0 or px.max() > 255):
            raise ValueError("pixel values must lie in [0, 255]")
        self.pixels = px.astype(np.uint8).reshape(self.height, self.width)


@dataclass
class Histogram:
    """Normalized 256-bin gray-level distribution."""

    bins: np.ndarray
    total_pixels: int

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=float)
        if bins.shape != (GRAY_LEVELS,):
            raise ValueError(f"expected {GRAY_LEVELS} bins, got shape {bins.shape}")
        if np.any(bins < 0):
            raise ValueError("histogram bins must be non-negative")
        if abs(float(bins.sum()) - 1.0) > 1e-12:
            raise ValueError("histogram bins must sum to 1")
        if self.total_pixels <= 0:
            raise ValueError("total_pixels must be positive")
        self.bins = bins


def _next_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Scan the next header token, skipping whitespace and # comments.

    Returns (token, token_start_offset, position_after_token); the token is
    empty when the data ran out.
    """
    n = len(data)
    while pos < n:
        b = data[pos]
        if b in _WHITESPACE:
            pos += 1
        elif b == ord("#"):
            while pos < n and data[pos] not in (0x0A, 0x0D):
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos] not in _WHITESPACE:
        pos += 1
    return data[start:pos], start, pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int, int]:
    token, start, pos = _next_token(data, pos)
    if not token:
        raise PgmError(f"unexpected end of data while reading {what}", len(data))
    try:
        value = int(token)
    except ValueError:
        raise PgmError(f"invalid {what} {token!r}", start) from None
    return value, start, pos


def load_grayscale_image(data: bytes) -> GrayImage:
    """Decode a PGM (P2 or P5, maxval <= 255) byte string into a GrayImage."""
    magic, start, pos = _next_token(data, 0)
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"not a PGM image (expected P2 or P5, got {magic!r})", start)
    width, wstart, pos = _header_int(data, pos, "width")
    height, hstart, pos = _header_int(data, pos, "height")
    if width <= 0:
        raise PgmError(f"width must be positive, got {width}", wstart)
    if height <= 0:
        raise PgmError(f"height must be positive, got {height}", hstart)
    maxval, mstart, pos = _header_int(data, pos, "maxval")
    if maxval > 255:
        raise PgmError(f"unsupported maxval {maxval} (only 8-bit images)", mstart)
    if maxval < 1:
        raise PgmError(f"maxval must be at least 1, got {maxval}", mstart)

    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        if pos >= len(data) or data[pos] not in _WHITESPACE:
            raise PgmError("missing whitespace before binary raster", pos)
        pos += 1
        raster = data[pos : pos + count]
        if len(raster) < count:
            raise PgmError(
                f"truncated pixel data: expected {count} bytes, found {len(raster)}",
                len(data),
            )
        values = np.frombuffer(raster, dtype=np.uint8)
        if maxval < 255 and int(values.max(initial=0)) > maxval:
            bad = int(np.argmax(values > maxval))
            raise PgmError(
                f"pixel value {values[bad]} exceeds maxval {maxval}", pos + bad
            )
    else:
        values = np.empty(count, dtype=np.uint8)
        for i in range(count):
            v, vstart, pos = _header_int(data, pos, "pixel value")
            if v < 0 or v > maxval:
                raise PgmError(f"pixel value {v} outside [0, {maxval}]", vstart)
            values[i] = v
    return GrayImage(width, height, values)


def write_pgm(image: GrayImage, binary: bool = True) -> bytes:
    """Encode a GrayImage as PGM; P5 when ``binary`` else P2. Maxval is 255."""
    header = f"{'P5' if binary else 'P2'}\n{image.width} {image.height}\n255\n"
    if binary:
        return header.encode("ascii") + image.pixels.tobytes()
    flat = image.pixels.ravel()
    lines = []
    for i in range(0, flat.size, 17):  # 17 3-digit values keep lines under 70 chars
        lines.append(" ".join(str(int(v)) for v in flat[i : i + 17]))
    return (header + "\n".join(lines) + "\n").encode("ascii")


def build_histogram(image: GrayImage) -> Histogram:
    """Count gray levels and normalize to a probability distribution."""
    n = image.pixels.size
    if n == 0:
        raise ValueError("cannot build a histogram from an empty image")
    counts = np.bincount(image.pixels.ravel(), minlength=GRAY_LEVELS)
    return Histogram(counts / n, n)


def histogram_to_csv(hist: Histogram) -> str:
    """Render 256 "gray_level,frequency" rows (plus header), levels 0..255."""
    lines = ["gray_level,frequency"]
    lines.extend(f"{g},{float(hist.bins[g])!r}" for g in range(GRAY_LEVELS))
    return "\n".join(lines) + "\n"


def histogram_from_csv(text: str, total_pixels: int = 1) -> Histogram:
    """Parse the CSV produced by :func:`histogram_to_csv`.

    The CSV does not carry the pixel count, so ``total_pixels`` defaults to a
    placeholder of 1.
    """
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    if rows and rows[0].split(",")[0] == "gray_level":
        rows = rows[1:]
    if len(rows) != GRAY_LEVELS:
        raise ValueError(f"expected {GRAY_LEVELS} histogram rows, got {len(rows)}")
    bins = np.empty(GRAY_LEVELS)
    for expected, row in enumerate(rows):
        try:
            level_s, freq_s = row.split(",")
            level, freq = int(level_s), float(freq_s)
        except ValueError:
            raise ValueError(f"malformed histogram row {row!r}") from None
        if level != expected:
            raise ValueError(f"expected gray level {expected}, got {level}")
        bins[expected] = freq
    return Histogram(bins, total_pixels)
