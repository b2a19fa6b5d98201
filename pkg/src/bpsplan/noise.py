"""Seeded gradient (simplex) noise in 2D and 3D.

Classic simplex construction: skew the query point onto a simplicial grid,
pick the d+1 corner gradients from a seed-shuffled permutation table, and
sum the radially attenuated gradient contributions.  Output is bounded in
(-1, 1) for both dimensions, which the world generator relies on when it
thresholds the field.
"""

from __future__ import annotations

import numpy as np

# 12 edge-midpoint directions of a cube; the 2D variant uses the xy
# components of the same table.
_GRAD3 = np.array(
    [
        [1, 1, 0], [-1, 1, 0], [1, -1, 0], [-1, -1, 0],
        [1, 0, 1], [-1, 0, 1], [1, 0, -1], [-1, 0, -1],
        [0, 1, 1], [0, -1, 1], [0, 1, -1], [0, -1, -1],
    ],
    dtype=np.float64,
)

_F2 = 0.5 * (np.sqrt(3.0) - 1.0)
_G2 = (3.0 - np.sqrt(3.0)) / 6.0
_F3 = 1.0 / 3.0
_G3 = 1.0 / 6.0


def permutation_table(seed: int) -> np.ndarray:
    """Seed-shuffled permutation of 0..255, doubled to avoid index wrapping."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(256)
    return np.concatenate([perm, perm]).astype(np.int64)


def simplex2(x, y, perm):
    """Vectorized 2D simplex noise at coordinates (x, y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)

    s = (x + y) * _F2
    i = np.floor(x + s).astype(np.int64)
    j = np.floor(y + s).astype(np.int64)
    t = (i + j) * _G2
    x0 = x - (i - t)
    y0 = y - (j - t)

    # Offsets of the middle corner: lower or upper triangle of the cell.
    lower = x0 > y0
    i1 = lower.astype(np.int64)
    j1 = 1 - i1

    x1 = x0 - i1 + _G2
    y1 = y0 - j1 + _G2
    x2 = x0 - 1.0 + 2.0 * _G2
    y2 = y0 - 1.0 + 2.0 * _G2

    ii = i & 255
    jj = j & 255
    gi0 = perm[ii + perm[jj]] % 12
    gi1 = perm[ii + i1 + perm[jj + j1]] % 12
    gi2 = perm[ii + 1 + perm[jj + 1]] % 12

    total = np.zeros_like(x0)
    for gi, cx, cy in ((gi0, x0, y0), (gi1, x1, y1), (gi2, x2, y2)):
        att = 0.5 - cx * cx - cy * cy
        att = np.maximum(att, 0.0)
        att *= att
        g = _GRAD3[gi]
        total += att * att * (g[..., 0] * cx + g[..., 1] * cy)
    return 70.0 * total


def simplex3(x, y, z, perm):
    """Vectorized 3D simplex noise at coordinates (x, y, z)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)

    s = (x + y + z) * _F3
    i = np.floor(x + s).astype(np.int64)
    j = np.floor(y + s).astype(np.int64)
    k = np.floor(z + s).astype(np.int64)
    t = (i + j + k) * _G3
    x0 = x - (i - t)
    y0 = y - (j - t)
    z0 = z - (k - t)

    # Rank the fractional coordinates to pick the traversal order of the
    # simplex corners.
    xy = x0 >= y0
    yz = y0 >= z0
    xz = x0 >= z0

    i1 = (xy & xz).astype(np.int64)
    j1 = (~xy & yz).astype(np.int64)
    k1 = (~yz & ~xz).astype(np.int64)
    i2 = (xy | xz).astype(np.int64)
    j2 = (~xy | yz).astype(np.int64)
    k2 = (~(yz & xz)).astype(np.int64)

    x1 = x0 - i1 + _G3
    y1 = y0 - j1 + _G3
    z1 = z0 - k1 + _G3
    x2 = x0 - i2 + 2.0 * _G3
    y2 = y0 - j2 + 2.0 * _G3
    z2 = z0 - k2 + 2.0 * _G3
    x3 = x0 - 1.0 + 3.0 * _G3
    y3 = y0 - 1.0 + 3.0 * _G3
    z3 = z0 - 1.0 + 3.0 * _G3

    ii = i & 255
    jj = j & 255
    kk = k & 255
    gi0 = perm[ii + perm[jj + perm[kk]]] % 12
    gi1 = perm[ii + i1 + perm[jj + j1 + perm[kk + k1]]] % 12
    gi2 = perm[ii + i2 + perm[jj + j2 + perm[kk + k2]]] % 12
    gi3 = perm[ii + 1 + perm[jj + 1 + perm[kk + 1]]] % 12

    total = np.zeros_like(x0)
    corners = ((gi0, x0, y0, z0), (gi1, x1, y1, z1), (gi2, x2, y2, z2), (gi3, x3, y3, z3))
    for gi, cx, cy, cz in corners:
        att = 0.6 - cx * cx - cy * cy - cz * cz
        att = np.maximum(att, 0.0)
        att *= att
        g = _GRAD3[gi]
        total += att * att * (g[..., 0] * cx + g[..., 1] * cy + g[..., 2] * cz)
    return 32.0 * total


def sample(points: np.ndarray, seed: int) -> np.ndarray:
    """Noise at an (n, d) array of points, d in {2, 3}."""
    points = np.asarray(points, dtype=np.float64)
    perm = permutation_table(seed)
    if points.shape[-1] == 2:
        return simplex2(points[..., 0], points[..., 1], perm)
    if points.shape[-1] == 3:
        return simplex3(points[..., 0], points[..., 1], points[..., 2], perm)
    raise ValueError(f"noise supports 2D and 3D points, got d={points.shape[-1]}")
