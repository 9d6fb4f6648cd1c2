"""Independent reference implementations used as test oracles.

These are deliberately naive: explicit loops over windows and pixels,
2-D kernels built directly from their formulas, ``math`` scalars and
exact ``Fraction`` arithmetic. They share no code with the package.
"""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

import numpy as np

# --- images ------------------------------------------------------------------


def luma(img):
    h, w, _ = img.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            r, g, b = img[i, j]
            out[i, j] = 0.299 * r + 0.587 * g + 0.114 * b
    return out


def block_mean2(a):
    h, w = a.shape[0] // 2, a.shape[1] // 2
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            out[i, j] = (a[2 * i, 2 * j] + a[2 * i + 1, 2 * j]
                         + a[2 * i, 2 * j + 1] + a[2 * i + 1, 2 * j + 1]) / 4.0
    return out


def correlate2d_valid(a, kernel):
    kh, kw = kernel.shape
    h, w = a.shape[0] - kh + 1, a.shape[1] - kw + 1
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            out[i, j] = float(np.sum(a[i:i + kh, j:j + kw] * kernel))
    return out


def gaussian_window(size=11, sigma=1.5):
    c = (size - 1) / 2.0
    w = np.array([[math.exp(-((r - c) ** 2 + (s - c) ** 2) / (2 * sigma * sigma))
                   for s in range(size)] for r in range(size)])
    return w / w.sum()


def _ssim_window_terms(a, b, c1=1e-4, c2=9e-4):
    win = gaussian_window()
    n = win.shape[0]
    h, w = a.shape[0] - n + 1, a.shape[1] - n + 1
    full, cs = np.zeros((h, w)), np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            pa, pb = a[i:i + n, j:j + n], b[i:i + n, j:j + n]
            mu_a, mu_b = float(np.sum(win * pa)), float(np.sum(win * pb))
            va = float(np.sum(win * (pa - mu_a) ** 2))
            vb = float(np.sum(win * (pb - mu_b) ** 2))
            cov = float(np.sum(win * (pa - mu_a) * (pb - mu_b)))
            lum = (2 * mu_a * mu_b + c1) / (mu_a ** 2 + mu_b ** 2 + c1)
            cs[i, j] = (2 * cov + c2) / (va + vb + c2)
            full[i, j] = lum * cs[i, j]
    return full, cs


def ssim(x, y):
    full, _ = _ssim_window_terms(luma(x), luma(y))
    return float(full.mean())


def uniform_patch_ssim(u, v, c1=1e-4, c2=9e-4):
    """SSIM of two constant images with values ``u`` and ``v``."""
    return (2 * u * v + c1) * (2 * 0.0 + c2) / ((u * u + v * v + c1) * (0.0 + 0.0 + c2))


MS_WEIGHTS = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333]


def ms_ssim(x, y):
    a, b = luma(x), luma(y)
    side = min(a.shape)
    scales = 1
    while scales < 5 and side // (2 ** scales) >= 16:
        scales += 1
    weights = MS_WEIGHTS[:scales]
    total = sum(weights)
    value = 1.0
    for j in range(scales):
        full, cs = _ssim_window_terms(a, b)
        term = full.mean() if j == scales - 1 else cs.mean()
        value *= max(float(term), 0.0) ** (weights[j] / total)
        a, b = block_mean2(a), block_mean2(b)
    return value


PREWITT_X = np.array([[1.0, 0.0, -1.0]] * 3) / 3.0
PREWITT_Y = PREWITT_X.T.copy()


def gmsd(x, y, c=0.0026):
    a, b = block_mean2(luma(x)), block_mean2(luma(y))
    ga = np.hypot(correlate2d_valid(a, PREWITT_X), correlate2d_valid(a, PREWITT_Y))
    gb = np.hypot(correlate2d_valid(b, PREWITT_X), correlate2d_valid(b, PREWITT_Y))
    vals = []
    for i in range(ga.shape[0]):
        for j in range(ga.shape[1]):
            p, q = ga[i, j], gb[i, j]
            vals.append((2 * p * q + c) / (p * p + q * q + c))
    mean = sum(vals) / len(vals)
    return math.sqrt(sum((v - mean) ** 2 for v in vals) / len(vals))


def mdsi(x, y, c1=140.0, c2=55.0, c3=550.0, alpha=0.6):
    def lhm(img):
        img = 255.0 * img
        r, g, b = img[..., 0], img[..., 1], img[..., 2]
        return (0.06 * r + 0.63 * g + 0.27 * b,
                0.30 * r + 0.04 * g - 0.35 * b,
                0.34 * r - 0.60 * g + 0.17 * b)

    lr, hr, mr = lhm(x)
    ld, hd, md = lhm(y)
    lf = 0.5 * (lr + ld)

    def grad(a):
        return np.hypot(correlate2d_valid(a, PREWITT_X), correlate2d_valid(a, PREWITT_Y))

    gr, gd, gf = grad(lr), grad(ld), grad(lf)
    h, w = gr.shape
    vals = []
    for i in range(h):
        for j in range(w):
            R, D, F = gr[i, j], gd[i, j], gf[i, j]
            gs = ((2 * R * D + c1) / (R * R + D * D + c1)
                  + (2 * D * F + c2) / (D * D + F * F + c2)
                  - (2 * R * F + c2) / (R * R + F * F + c2))
            H1, M1 = hr[i + 1, j + 1], mr[i + 1, j + 1]
            H2, M2 = hd[i + 1, j + 1], md[i + 1, j + 1]
            cs = (2 * (H1 * H2 + M1 * M2) + c3) / (H1 ** 2 + H2 ** 2 + M1 ** 2 + M2 ** 2 + c3)
            gcs = max(alpha * gs + (1 - alpha) * cs, 0.0)
            vals.append(gcs ** 0.25)
    mean = sum(vals) / len(vals)
    return (sum(abs(v - mean) for v in vals) / len(vals)) ** 0.25


# --- voting ------------------------------------------------------------------


def majority_oracle(pattern):
    """``pattern`` holds +1 (child better), -1 (worse) or 0 (tie) per objective."""
    wins = sum(1 for p in pattern if p > 0)
    losses = sum(1 for p in pattern if p < 0)
    return wins, losses, len(pattern) - wins - losses, wins * 2 > len(pattern)


# --- rank-sum ----------------------------------------------------------------


def midranks(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [Fraction(0)] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = Fraction(i + 1 + j + 1, 2)
        for t in range(i, j + 1):
            ranks[order[t]] = r
        i = j + 1
    return ranks


def rank_sum_enumeration(a, b, alternative="two-sided"):
    """Exact p-value by listing every assignment of pooled ranks to ``a``."""
    pooled = list(a) + list(b)
    ranks = midranks(pooled)
    n_a, n = len(a), len(pooled)
    observed = sum(ranks[:n_a])
    centre = Fraction(n_a * (n + 1), 2)
    hits = total = 0
    for idx in combinations(range(n), n_a):
        s = sum(ranks[i] for i in idx)
        total += 1
        if alternative == "two-sided":
            hits += abs(s - centre) >= abs(observed - centre)
        elif alternative == "greater":
            hits += s >= observed
        else:
            hits += s <= observed
    return float(observed), Fraction(hits, total)


# --- subsets -----------------------------------------------------------------


def hypergeometric_mean_overlap(n, k):
    """E|A & B| for two independent uniform n-subsets of k items."""
    return Fraction(n * n, k)
