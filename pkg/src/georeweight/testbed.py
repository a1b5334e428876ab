"""Integrands with known integrals: the piecewise 1D benchmark, grayscale
images read from PGM files, and a few analytic 1D/2D functions."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

@dataclass(frozen=True)
class Integrand:
    """Vectorized function on (0,1)^D.

    ``func`` maps an ``(..., D)`` array of points to an ``(...)`` array.
    """

    name: str
    dimension: int
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    reference_integral: float | None = None

    def evaluate(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        if p.shape[-1] != self.dimension:
            raise ValueError(f"{self.name} expects {self.dimension}-D points, got shape {p.shape}")
        return self.func(p)

    __call__ = evaluate


def _test1d(x: np.ndarray) -> np.ndarray:
    # branches are left-closed, [a, b)
    x = np.asarray(x, dtype=np.float64)
    conds = [
        x < 0.25,
        x < 0.5,
        x < 0.55,
        x < 0.65,
        x < 0.7,
        x < 0.8,
        x < 0.9,
    ]
    branches = [
        np.sqrt(np.maximum(-x * x + 0.5 * x, 0.0)),
        -np.sqrt(np.maximum(-x * x + x - 0.1875, 0.0)) + 0.25,
        20.0 * (x - 0.5),
        np.ones_like(x),
        -20.0 * (x - 0.7),
        0.1 * np.sin(10.0 * np.pi * (x - 0.7)),
        0.25 * np.sin(10.0 * np.pi * (x - 0.8)),
    ]
    last = 0.5 * np.sin(10.0 * np.pi * (x - 0.9))
    return 10.0 * np.select(conds, branches, last)


def eval_test_function_1d(x: float) -> float:
    """The piecewise benchmark at a single point of (0, 1)."""
    if not 0.0 < x < 1.0:
        raise ValueError(f"x={x} outside (0, 1)")
    return float(_test1d(np.array(x)))


def reference_integral_test1d() -> float:
    """Exact integral of the benchmark over (0, 1).

    The two circular branches integrate to 1/16 together (their quarter
    discs cancel), the ramps and plateau to 0.15, and each sine half-period
    of amplitude ``a`` to ``a / (5 pi)``; everything is scaled by 10.
    """
    return 2.125 + 1.7 / math.pi


def benchmark_1d() -> Integrand:
    return Integrand("test1d", 1, lambda p: _test1d(p[..., 0]), reference_integral_test1d())


def square_1d() -> Integrand:
    return Integrand("square1d", 1, lambda p: p[..., 0] ** 2, 1.0 / 3.0)


def product_2d() -> Integrand:
    return Integrand("product2d", 2, lambda p: p[..., 0] * p[..., 1], 0.25)


def constant(c: float, dimension: int = 1) -> Integrand:
    c = float(c)
    return Integrand(f"constant:{c!r}", dimension, lambda p: np.full(p.shape[:-1], c), c)


# ---------------------------------------------------------------------------
# images


class PGMError(ValueError):
    pass


@dataclass(frozen=True)
class ImageFunction2D:
    """Nearest-neighbour lookup into a grayscale image covering (0,1)^2.

    Row 0 is the top of the image, so ``y`` runs upward.
    """

    pixels: np.ndarray  # (height, width), normalized to [0, 1]
    name: str = "image"

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("image must be a non-empty 2-D array")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("normalized pixel values must lie in [0, 1]")
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    dimension = 2

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def reference_integral(self) -> float:
        return float(self.pixels.mean())

    def evaluate(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        if p.shape[-1] != 2:
            raise ValueError(f"image integrand expects 2-D points, got shape {p.shape}")
        col = np.clip(np.floor(p[..., 0] * self.width).astype(np.int64), 0, self.width - 1)
        row = np.clip(np.floor((1.0 - p[..., 1]) * self.height).astype(np.int64), 0, self.height - 1)
        return self.pixels[row, col]

    __call__ = evaluate


_TOKEN = re.compile(rb"(?:\s|#[^\n\r]*)*([^\s#]+)")


def _header(data: bytes, count: int) -> tuple[list[bytes], int]:
    pos = 0
    tokens = []
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise PGMError("malformed PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def parse_pgm(data: bytes) -> tuple[np.ndarray, int]:
    """Decode P2/P5 bytes into ``(raw_pixels (H, W), maxval)``."""
    tokens, pos = _header(data, 4)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise PGMError(f"unsupported magic {magic!r}; expected P2 or P5")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise PGMError("non-integer PGM header field") from exc
    if width <= 0 or height <= 0:
        raise PGMError(f"zero or negative image dimensions {width}x{height}")
    if not 0 < maxval <= 65535:
        raise PGMError(f"maxval {maxval} outside 1..65535")
    count = width * height
    if magic == b"P5":
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise PGMError("missing whitespace after PGM header")
        pos += 1
        dtype = ">u2" if maxval > 255 else "u1"
        nbytes = count * np.dtype(dtype).itemsize
        if len(data) - pos < nbytes:
            raise PGMError("truncated P5 payload")
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    else:
        body = re.sub(rb"#[^\n\r]*", b" ", data[pos:]).split()
        if len(body) < count:
            raise PGMError("truncated P2 payload")
        try:
            raw = np.array([int(t) for t in body[:count]])
        except ValueError as exc:
            raise PGMError("non-integer P2 pixel value") from exc
    raw = raw.reshape(height, width).astype(np.int64)
    if raw.min() < 0 or raw.max() > maxval:
        raise PGMError("pixel value exceeds maxval")
    return raw, maxval


def load_pgm(path) -> ImageFunction2D:
    raw, maxval = parse_pgm(Path(path).read_bytes())
    return ImageFunction2D(raw / maxval, name=f"image:{path}")


def encode_pgm(raw, maxval: int = 255, binary: bool = True) -> bytes:
    raw = np.asarray(raw, dtype=np.int64)
    h, w = raw.shape
    if binary:
        dtype = ">u2" if maxval > 255 else "u1"
        return f"P5\n{w} {h}\n{maxval}\n".encode() + raw.astype(dtype).tobytes()
    lines = [" ".join(str(v) for v in row) for row in raw]
    return (f"P2\n{w} {h}\n{maxval}\n" + "\n".join(lines) + "\n").encode()


def write_pgm(path, raw, maxval: int = 255, binary: bool = True) -> None:
    Path(path).write_bytes(encode_pgm(raw, maxval, binary))


def synthetic_image(width: int = 64, height: int = 64, maxval: int = 255) -> np.ndarray:
    """Raw test picture: a smooth radial gradient with a bright square and
    a dark disc, so it has both edges and slow variation."""
    yy, xx = np.mgrid[0:height, 0:width]
    u = (xx + 0.5) / width
    v = 1.0 - (yy + 0.5) / height
    img = 0.5 + 0.4 * np.cos(3.0 * np.hypot(u - 0.3, v - 0.6))
    img[(np.abs(u - 0.7) < 0.15) & (np.abs(v - 0.3) < 0.15)] = 1.0
    img[np.hypot(u - 0.3, v - 0.25) < 0.12] = 0.05
    return np.rint(np.clip(img, 0.0, 1.0) * maxval).astype(np.int64)


def make_integrand(name: str, dimension: int | None = None):
    """Build an integrand from ``test1d``, ``square1d``, ``product2d``,
    ``constant:C`` or ``image:PATH``."""
    if name == "test1d":
        return benchmark_1d()
    if name == "square1d":
        return square_1d()
    if name == "product2d":
        return product_2d()
    if name.startswith("constant:"):
        try:
            c = float(name.split(":", 1)[1])
        except ValueError as exc:
            raise ValueError(f"bad constant in {name!r}") from exc
        return constant(c, dimension or 1)
    if name.startswith("image:"):
        return load_pgm(name.split(":", 1)[1])
    raise ValueError(f"unknown integrand {name!r}")
