"""Image loading, PNG export and built-in procedural targets."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from ._utils import check_image

BUILTIN_PREFIX = "builtin:"


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.round(255.0 * np.clip(image, 0.0, 1.0)).astype(np.uint8)


def save_png(image: np.ndarray, path) -> Path:
    """Write an 8-bit RGB PNG; identical arrays give identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(check_image(image)), mode="RGB").save(path, format="PNG", optimize=False)
    return path


def load_png(path, width: int, height: int) -> np.ndarray:
    """Load any Pillow-readable image as RGB and resize it bilinearly."""
    with Image.open(path) as im:
        im = im.convert("RGB")
        if im.size != (width, height):
            im = im.resize((width, height), resample=Image.BILINEAR)
        arr = np.asarray(im, dtype=np.float64) / 255.0
    return arr


def sunrise(width: int = 64, height: int = 64) -> np.ndarray:
    """Sky gradient, a sun disc on the horizon and a darker sea below it."""
    ys, xs = np.mgrid[0:height, 0:width]
    u = xs / max(width - 1, 1)
    v = ys / max(height - 1, 1)
    horizon = 0.6
    img = np.empty((height, width, 3))
    sky = v < horizon
    t = v / horizon
    img[..., 0] = np.where(sky, 0.25 + 0.7 * t, 0.10 + 0.15 * (1 - v))
    img[..., 1] = np.where(sky, 0.20 + 0.35 * t, 0.12 + 0.10 * (1 - v))
    img[..., 2] = np.where(sky, 0.55 - 0.25 * t, 0.35 + 0.10 * v)
    r = np.hypot(u - 0.5, (v - horizon) * height / width)
    sun = (r < 0.18) & sky
    img[sun] = (1.0, 0.85, 0.35)
    glow = (~sky) & (np.abs(u - 0.5) < 0.12 * (1 + (v - horizon) * 2))
    img[glow] = 0.6 * img[glow] + 0.4 * np.array([1.0, 0.7, 0.3])
    return np.clip(img, 0.0, 1.0)


def rings(width: int = 64, height: int = 64) -> np.ndarray:
    """Concentric coloured rings; a harder target than :func:`sunrise`."""
    ys, xs = np.mgrid[0:height, 0:width]
    x = 2 * xs / max(width - 1, 1) - 1
    y = 2 * ys / max(height - 1, 1) - 1
    r = np.hypot(x, y)
    img = np.stack([
        0.5 + 0.5 * np.cos(6 * r),
        0.5 + 0.5 * np.sin(4 * r + x),
        np.clip(1 - r, 0, 1),
    ], axis=-1)
    return np.clip(img, 0.0, 1.0)


BUILTIN_TARGETS = {"sunrise": sunrise, "rings": rings}


def target_id(spec: str) -> str:
    """Stable identifier of a target spec (builtin name or file stem)."""
    if spec.startswith(BUILTIN_PREFIX):
        return spec[len(BUILTIN_PREFIX):]
    return Path(spec).stem


def load_target(spec: str, width: int, height: int) -> np.ndarray:
    """Resolve ``builtin:<name>`` or a file path to a target image."""
    if spec.startswith(BUILTIN_PREFIX):
        name = spec[len(BUILTIN_PREFIX):]
        try:
            return BUILTIN_TARGETS[name](width, height)
        except KeyError:
            raise FileNotFoundError(f"unknown builtin target {name!r}") from None
    return load_png(spec, width, height)


def tile(images, columns: int | None = None, pad: int = 1) -> np.ndarray:
    """Arrange equally sized images in a grid, row-major, white padding."""
    images = list(images)
    if not images:
        raise ValueError("nothing to tile")
    h, w, _ = images[0].shape
    n = len(images)
    if columns is None:
        columns = int(np.ceil(np.sqrt(n)))
    columns = max(1, min(columns, n))
    rows = int(np.ceil(n / columns))
    if n == 1:
        return images[0].copy()
    out = np.ones((rows * h + (rows - 1) * pad, columns * w + (columns - 1) * pad, 3))
    for i, im in enumerate(images):
        r, c = divmod(i, columns)
        out[r * (h + pad):r * (h + pad) + h, c * (w + pad):c * (w + pad) + w] = im
    return out
