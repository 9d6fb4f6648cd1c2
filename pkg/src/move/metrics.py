"""Full-reference image quality metrics.

Every function takes ``x`` (evaluated image, optionally with leading batch
axes) and ``y`` (reference, broadcastable) shaped ``(..., H, W, 3)`` with
values in [0, 1], and returns the *raw* metric: dissimilarities are not
negated here, that happens in :mod:`move.objectives`.

All filtering uses "valid" windows, i.e. no padding at the borders.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

LUMA = np.array([0.299, 0.587, 0.114])

SSIM_K1, SSIM_K2 = 0.01, 0.03
SSIM_C1, SSIM_C2 = SSIM_K1 ** 2, SSIM_K2 ** 2
SSIM_WINDOW, SSIM_SIGMA = 11, 1.5

MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
MS_SSIM_MIN_SCALE = 16

GMSD_C = 0.0026
PSNR_CAP_DB = 80.0
PSNR_MSE_FLOOR = 1e-8

MDSI_C1, MDSI_C2, MDSI_C3 = 140.0, 55.0, 550.0
MDSI_ALPHA, MDSI_Q, MDSI_O = 0.6, 0.25, 0.25

HIST_BINS = 32


def luminance(img: np.ndarray) -> np.ndarray:
    return img @ LUMA


@lru_cache(maxsize=8)
def gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    k = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    k /= k.sum()
    k.setflags(write=False)
    return k


@lru_cache(maxsize=64)
def _band(n: int, kernel: tuple) -> np.ndarray:
    # row i holds the kernel at offset i, so band @ v is a valid correlation
    k = len(kernel)
    m = np.zeros((n - k + 1, n))
    for i in range(n - k + 1):
        m[i, i:i + k] = kernel
    m.setflags(write=False)
    return m


def _correlate_short(x: np.ndarray, kernel, axis: int) -> np.ndarray:
    n = x.shape[axis] - len(kernel) + 1
    out = None
    for i, w in enumerate(kernel):
        if w == 0.0:
            continue
        part = x[..., i:i + n] if axis == -1 else x[..., i:i + n, :]
        out = w * part if out is None else out + w * part
    return out


def correlate_valid(x: np.ndarray, k_rows: np.ndarray, k_cols: np.ndarray) -> np.ndarray:
    """Separable 'valid' correlation over the last two axes of ``x``."""
    if len(k_rows) <= 3 and len(k_cols) <= 3:
        return _correlate_short(_correlate_short(x, k_cols, -1), k_rows, -2)
    rows = _band(x.shape[-2], tuple(k_rows))
    cols = _band(x.shape[-1], tuple(k_cols))
    return rows @ (x @ cols.T)


_PREWITT_SMOOTH = np.array([1.0, 1.0, 1.0]) / 3.0
_SOBEL_SMOOTH = np.array([1.0, 2.0, 1.0])
_DIFF = np.array([1.0, 0.0, -1.0])


def gradients(lum: np.ndarray, kind: str = "prewitt"):
    """Horizontal and vertical 3x3 gradients (valid), Prewitt or Sobel."""
    smooth = _PREWITT_SMOOTH if kind == "prewitt" else _SOBEL_SMOOTH
    gx = correlate_valid(lum, smooth, _DIFF)
    gy = correlate_valid(lum, _DIFF, smooth)
    return gx, gy


def avg_pool2(x: np.ndarray) -> np.ndarray:
    """2x2 mean pooling over the last two axes, dropping odd edges."""
    h, w = x.shape[-2] // 2 * 2, x.shape[-1] // 2 * 2
    x = x[..., :h, :w]
    return 0.25 * (x[..., 0::2, 0::2] + x[..., 1::2, 0::2] + x[..., 0::2, 1::2] + x[..., 1::2, 1::2])


def _mean_hw(a: np.ndarray) -> np.ndarray:
    return a.mean(axis=(-2, -1))


def mse(x, y) -> np.ndarray:
    d = np.asarray(x) - np.asarray(y)
    return np.mean(d * d, axis=(-3, -2, -1))


def psnr(x, y) -> np.ndarray:
    """PSNR of the luminance channel in dB, capped for near-exact matches."""
    d = luminance(np.asarray(x)) - luminance(np.asarray(y))
    err = np.mean(d * d, axis=(-2, -1))
    safe = np.maximum(err, PSNR_MSE_FLOOR)
    return np.where(err < PSNR_MSE_FLOOR, PSNR_CAP_DB, 10.0 * np.log10(1.0 / safe))


def _ssim_maps(a: np.ndarray, b: np.ndarray):
    k = gaussian_kernel()
    mu_a = correlate_valid(a, k, k)
    mu_b = correlate_valid(b, k, k)
    aa = mu_a * mu_a
    bb = mu_b * mu_b
    ab = mu_a * mu_b
    s_a = correlate_valid(a * a, k, k) - aa
    s_b = correlate_valid(b * b, k, k) - bb
    s_ab = correlate_valid(a * b, k, k) - ab
    cs = (2.0 * s_ab + SSIM_C2) / (s_a + s_b + SSIM_C2)
    lum = (2.0 * ab + SSIM_C1) / (aa + bb + SSIM_C1)
    return lum * cs, cs


def ssim(x, y) -> np.ndarray:
    """Mean SSIM of the luminance maps (11x11 Gaussian window, sigma 1.5)."""
    a = luminance(np.asarray(x))
    b = luminance(np.asarray(y))
    smap, _ = _ssim_maps(a, b)
    return _mean_hw(smap)


def ms_ssim_scales(height: int, width: int) -> int:
    """Largest scale count (<= 5) whose coarsest level is >= 16 pixels."""
    side = min(height, width)
    scales = 1
    while scales < len(MS_SSIM_WEIGHTS) and side // 2 ** scales >= MS_SSIM_MIN_SCALE:
        scales += 1
    return scales


def ms_ssim(x, y) -> np.ndarray:
    """Multi-scale SSIM on luminance.

    Uses the first ``s`` standard weights, renormalised to sum to one.
    Negative contrast-structure terms are clamped to zero before the
    fractional powers are taken.
    """
    a = luminance(np.asarray(x))
    b = luminance(np.asarray(y))
    scales = ms_ssim_scales(a.shape[-2], a.shape[-1])
    weights = np.array(MS_SSIM_WEIGHTS[:scales])
    weights = weights / weights.sum()
    result = np.ones(np.broadcast_shapes(a.shape, b.shape)[:-2])
    for j in range(scales):
        smap, cs = _ssim_maps(a, b)
        if j < scales - 1:
            term = _mean_hw(cs)
            a, b = avg_pool2(a), avg_pool2(b)
        else:
            term = _mean_hw(smap)
        result = result * np.maximum(term, 0.0) ** weights[j]
    return result


def gmsd(x, y) -> np.ndarray:
    """Gradient magnitude similarity deviation (lower is more similar)."""
    a = avg_pool2(luminance(np.asarray(x)))
    b = avg_pool2(luminance(np.asarray(y)))
    ax, ay = gradients(a)
    bx, by = gradients(b)
    ma = np.sqrt(ax * ax + ay * ay)
    mb = np.sqrt(bx * bx + by * by)
    gms = (2.0 * ma * mb + GMSD_C) / (ma * ma + mb * mb + GMSD_C)
    return np.std(gms, axis=(-2, -1))


_LHM = np.array([
    [0.06, 0.63, 0.27],
    [0.30, 0.04, -0.35],
    [0.34, -0.60, 0.17],
])


def _lhm(img: np.ndarray):
    lhm = np.tensordot(_LHM, img, axes=([1], [-1]))
    return lhm[0], lhm[1], lhm[2]


def mdsi(x, y) -> np.ndarray:
    """Mean deviation similarity index (lower is more similar).

    Computed on the 0-255 scale with the summation combination. The
    gradient-chromaticity map is clamped at zero so the quarter power
    stays real.
    """
    lx, hx, mx = _lhm(255.0 * np.asarray(x))
    ly, hy, my = _lhm(255.0 * np.asarray(y))
    rx, ry = gradients(lx)
    dx, dy = gradients(ly)
    # gradients are linear, so the fused image's gradient is the average
    fx, fy = 0.5 * (rx + dx), 0.5 * (ry + dy)
    r2 = rx * rx + ry * ry
    d2 = dx * dx + dy * dy
    f2 = fx * fx + fy * fy
    # sqrt(a * b) rather than sqrt(a) * sqrt(b): exact when a == b, so x vs x
    # gives a constant map of ones and the quarter-power pooling yields 0
    gs = (2 * np.sqrt(r2 * d2) + MDSI_C1) / (r2 + d2 + MDSI_C1)
    gs += (2 * np.sqrt(d2 * f2) + MDSI_C2) / (d2 + f2 + MDSI_C2)
    gs -= (2 * np.sqrt(r2 * f2) + MDSI_C2) / (r2 + f2 + MDSI_C2)
    inner = (Ellipsis, slice(1, -1), slice(1, -1))
    hx, mx, hy, my = hx[inner], mx[inner], hy[inner], my[inner]
    cs = (2 * (hx * hy + mx * my) + MDSI_C3) / ((hx * hx + mx * mx) + (hy * hy + my * my) + MDSI_C3)
    gcs = np.maximum(MDSI_ALPHA * gs + (1 - MDSI_ALPHA) * cs, 0.0)
    gq = np.sqrt(np.sqrt(gcs))  # MDSI_Q == 0.25
    dev = np.abs(gq - gq.mean(axis=(-2, -1), keepdims=True)).mean(axis=(-2, -1))
    return dev ** MDSI_O


def channel_histograms(img: np.ndarray, bins: int = HIST_BINS) -> np.ndarray:
    """Normalised per-channel histograms, shape ``(..., 3, bins)``."""
    img = np.asarray(img)
    lead = img.shape[:-3]
    flat = img.reshape(-1, img.shape[-3] * img.shape[-2], 3)
    idx = np.minimum((flat * bins).astype(np.intp), bins - 1)
    n_img = flat.shape[0]
    offsets = (np.arange(n_img)[:, None, None] * 3 + np.arange(3)[None, None, :]) * bins
    counts = np.bincount((idx + offsets).ravel(), minlength=n_img * 3 * bins)
    hist = counts.reshape(n_img, 3, bins) / flat.shape[1]
    return hist.reshape(lead + (3, bins))


def histogram_intersection(x, y) -> np.ndarray:
    hx = channel_histograms(x)
    hy = channel_histograms(y)
    return np.minimum(hx, hy).sum(axis=-1).mean(axis=-1)


_ZERO_GRAD = 1e-12


def gradient_cosine(x, y) -> np.ndarray:
    """Mean per-pixel cosine between Sobel gradient vectors of luminance.

    Pixels flat in both images count as 1; flat in only one count as 0.
    """
    ax, ay = gradients(luminance(np.asarray(x)), "sobel")
    bx, by = gradients(luminance(np.asarray(y)), "sobel")
    na = np.sqrt(ax * ax + ay * ay)
    nb = np.sqrt(bx * bx + by * by)
    za, zb = na < _ZERO_GRAD, nb < _ZERO_GRAD
    both = ~za & ~zb
    cos = np.where(both, (ax * bx + ay * by) / np.where(both, na * nb, 1.0), 0.0)
    cos = np.where(za & zb, 1.0, cos)
    return _mean_hw(np.clip(cos, -1.0, 1.0))
