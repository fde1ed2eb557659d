"""Binary PGM (P5) reading and writing, and the frame-sequence container
used by the video separation pipeline.

Frames are grayscale images normalized to [0, 1] and vectorized
column-major (all rows of the first column, then the second column, ...).
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class FrameSequence:
    """Vectorized grayscale frames with optional per-frame foreground masks."""

    width: int
    height: int
    frames: list
    masks: list | None = None

    @property
    def n(self):
        return self.width * self.height


def _parse_header_tokens(data, path):
    """Read the three PGM header tokens (magic handled by caller), skipping
    whitespace and '#' comments; returns (tokens, payload offset)."""
    tokens = []
    i = 2  # past "P5"
    while len(tokens) < 3:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise ValueError(
                f"{path}: malformed header at byte offset {start}"
            )
        try:
            tokens.append(int(data[start:i]))
        except ValueError:
            raise ValueError(
                f"{path}: non-numeric header token at byte offset {start}"
            ) from None
    if i >= len(data) or not data[i : i + 1].isspace():
        raise ValueError(f"{path}: missing header terminator at byte {i}")
    return tokens, i + 1


def read_pgm(path):
    """Read a binary (P5) PGM file.

    Returns (image, maxval) with image a (height, width) float array in
    [0, 1], normalized by maxval. Raises ValueError with the byte offset on
    malformed input.
    """
    path = Path(path)
    data = path.read_bytes()
    if data[:2] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (bad magic at offset 0)")
    (width, height, maxval), offset = _parse_header_tokens(data, path)
    if width < 1 or height < 1:
        raise ValueError(f"{path}: bad dimensions {width}x{height}")
    if not (0 < maxval <= 65535):
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    count = width * height
    if maxval > 255:
        raw = np.frombuffer(data, dtype=">u2", count=count, offset=offset) \
            if len(data) - offset >= 2 * count else None
    else:
        raw = np.frombuffer(data, dtype=np.uint8, count=count, offset=offset) \
            if len(data) - offset >= count else None
    if raw is None:
        raise ValueError(
            f"{path}: truncated pixel payload at byte offset {offset}"
        )
    img = raw.reshape(height, width).astype(float) / maxval
    return img, maxval


def write_pgm(path, image, maxval=255):
    """Write a (height, width) array with values in [0, 1] as binary PGM."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-d image, got shape {image.shape}")
    if not (0 < maxval <= 65535):
        raise ValueError(f"unsupported maxval {maxval}")
    quant = np.rint(np.clip(image, 0.0, 1.0) * maxval)
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n{maxval}\n".encode()
    payload = quant.astype(">u2" if maxval > 255 else np.uint8).tobytes()
    Path(path).write_bytes(header + payload)


def frame_to_vector(image):
    """Column-major vectorization of a (height, width) image."""
    return np.asarray(image, dtype=float).flatten(order="F")


def vector_to_frame(vec, width, height):
    """Inverse of frame_to_vector."""
    return np.asarray(vec, dtype=float).reshape((height, width), order="F")


def load_pgm_sequence(dir_path, pattern="*.pgm"):
    """Load all PGM frames matching pattern under dir_path, sorted by name.

    All frames must share dimensions; raises ValueError naming the offending
    file otherwise, and on an empty match.
    """
    paths = sorted(Path(dir_path).glob(pattern))
    if not paths:
        raise ValueError(
            f"no frames matching {pattern!r} under {dir_path}"
        )
    frames = []
    width = height = None
    for p in paths:
        img, _ = read_pgm(p)
        if width is None:
            height, width = img.shape
        elif img.shape != (height, width):
            raise ValueError(
                f"{p}: frame is {img.shape[1]}x{img.shape[0]}, expected "
                f"{width}x{height}"
            )
        frames.append(frame_to_vector(img))
    return FrameSequence(width=width, height=height, frames=frames)


def load_mask_sequence(dir_path, pattern="*.pgm"):
    """Load foreground masks (nonzero pixel = foreground) as boolean vectors."""
    seq = load_pgm_sequence(dir_path, pattern)
    return [f > 0 for f in seq.frames], seq.width, seq.height
