"""Seeding and input validation helpers."""
from __future__ import annotations

import zlib

import numpy as np

from .exceptions import InvalidArgumentsError, LengthMismatchError

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 output function applied to ``x``."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def trial_seed(base_seed: int, trial: int) -> int:
    """Seed of trial ``trial``: ``base_seed XOR splitmix64(trial)``."""
    return (int(base_seed) & _MASK64) ^ splitmix64(int(trial))


def derive_rng(seed: int, label: str) -> np.random.Generator:
    """Independent generator for one purpose (``label``) of a seeded run.

    Streams are keyed by a CRC of the label, so adding a new purpose or
    changing how much one stream is consumed never perturbs another.
    """
    return np.random.default_rng([int(seed) & _MASK64, zlib.crc32(label.encode())])


def check_image(image, name: str = "image", min_size: int = 2) -> np.ndarray:
    """Validate an RGB image and return it as a float64 ``(H, W, 3)`` array.

    Values must already lie in ``[0, 1]``; nothing is clipped silently.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[-1] != 3:
        raise InvalidArgumentsError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < min_size or arr.shape[1] < min_size:
        raise InvalidArgumentsError(
            f"{name} must be at least {min_size}x{min_size} pixels, got {arr.shape[:2]}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentsError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise InvalidArgumentsError(f"{name} values must lie in [0, 1]")
    return arr


def check_image_batch(images, name: str = "images") -> np.ndarray:
    """Like :func:`check_image` but accepts a leading batch axis."""
    arr = np.asarray(images, dtype=np.float64)
    if arr.ndim < 3 or arr.shape[-1] != 3:
        raise InvalidArgumentsError(f"{name} must have shape (..., H, W, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentsError(f"{name} contains non-finite values")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise InvalidArgumentsError(f"{name} values must lie in [0, 1]")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-3:] != b.shape[-3:]:
        raise LengthMismatchError(
            f"image dimensions differ: {a.shape[-3:-1]} vs {b.shape[-3:-1]}"
        )


def check_subset_args(m: int, n: int, k: int) -> None:
    if k < 1:
        raise InvalidArgumentsError(f"objective count must be >= 1, got {k}")
    if m < 1:
        raise InvalidArgumentsError(f"cell count must be >= 1, got {m}")
    if n < 1 or n % 2 == 0:
        raise InvalidArgumentsError(f"functions per cell must be a positive odd number, got {n}")
    if n > k:
        raise InvalidArgumentsError(f"functions per cell ({n}) exceeds objective count ({k})")
