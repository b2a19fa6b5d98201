"""Basis point sets: fixed workspace points encoding a world by distances.

A world is summarized by the (signed) distance from each basis point to the
nearest obstacle.  Basis points are laid out on a hexagonal packing (2D) or
hexagonal close packing (3D) inside the robot's reach ball; a regular-grid
layout exists for the reconstruction study, where it is equivalent to
subsampling the full-resolution distance field.

The conservative reconstruction labels a query cell free only when it lies
strictly inside some positive-distance ball, occupied only when strictly
inside some negative-distance ball, and unknown otherwise; unknown counts
as an obstacle downstream.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DataError
from .worlds import SignedDistanceField

FREE, OCCUPIED, UNKNOWN = 0, 1, 2

_MAGIC = b"BPS1"
# Slack subtracted from ball radii so exact boundary ties never flip a label.
_BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class BasisPointSet:
    points: np.ndarray  # (n_b, d)
    layout: str  # "hex" | "grid" | "custom"
    center: np.ndarray
    reach: float
    spacing: float | None = None

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class BpsFeatures:
    values: np.ndarray  # (n_b,) distances in meters
    signed: bool


def _hex_lattice(center, reach, spacing, d):
    """Hexagonal (2D) or HCP (3D) lattice points inside the reach ball."""
    dy = spacing * np.sqrt(3.0) / 2.0
    ni = int(np.ceil(reach / spacing)) + 1
    nj = int(np.ceil(reach / dy)) + 1
    i = np.arange(-ni, ni + 1)
    j = np.arange(-nj, nj + 1)
    if d == 2:
        jj, ii = np.meshgrid(j, i, indexing="ij")
        x = (ii + 0.5 * (jj % 2)) * spacing
        y = jj * dy
        pts = np.column_stack([x.ravel(), y.ravel()])
    else:
        dz = spacing * np.sqrt(2.0 / 3.0)
        nk = int(np.ceil(reach / dz)) + 1
        k = np.arange(-nk, nk + 1)
        kk, jj, ii = np.meshgrid(k, j, i, indexing="ij")
        x = (ii + 0.5 * (jj % 2) + 0.5 * (kk % 2)) * spacing
        y = (jj + (kk % 2) / 3.0) * dy
        z = kk * dz
        pts = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    pts = pts + np.asarray(center, dtype=np.float64)
    keep = np.linalg.norm(pts - center, axis=1) <= reach
    return pts[keep]


def generate_hex_bps(center, reach: float, target_count: int, d: int,
                     strict: bool = True) -> BasisPointSet:
    """Hex-packed basis points; spacing bisected until the count is within 10%.

    Lattice shells quantize the achievable counts, so very small targets may
    be unreachable within the band; ``strict=False`` returns the closest
    achievable set instead of raising (the size study sweeps tiny encodings).
    """
    if reach <= 0:
        raise ValueError("reach must be positive")
    if target_count < 4:
        raise ValueError("target_count must be >= 4")
    if d not in (2, 3):
        raise ValueError("basis point sets are 2D or 3D")
    center = np.asarray(center, dtype=np.float64)

    if d == 2:
        area = np.pi * reach**2
        s0 = np.sqrt(area / (target_count * np.sqrt(3.0) / 2.0))
    else:
        vol = 4.0 / 3.0 * np.pi * reach**3
        s0 = (vol / (target_count / np.sqrt(2.0)))**(1.0 / 3.0)

    lo, hi = s0 / 8.0, s0 * 8.0  # count(lo) >= target >= count(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if len(_hex_lattice(center, reach, mid, d)) >= target_count:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * s0:
            break
    candidates = [_hex_lattice(center, reach, s, d) for s in (lo, hi)]
    counts = [len(c) for c in candidates]
    pick = int(np.argmin([abs(c - target_count) for c in counts]))
    pts, spacing = candidates[pick], (lo, hi)[pick]
    if strict and abs(len(pts) - target_count) > 0.1 * target_count:
        raise ValueError(
            f"cannot hit target count {target_count} within 10% "
            f"(closest achievable: {len(pts)})")
    order = np.lexsort(pts.T)
    return BasisPointSet(pts[order], "hex", center, float(reach), float(spacing))


def generate_grid_bps(sdf_shape, voxel_size: float, origin, per_axis: int) -> BasisPointSet:
    """Regular grid of basis points on cell centers, one per stride block."""
    origin = np.asarray(origin, dtype=np.float64)
    d = len(sdf_shape)
    axes = []
    for k in range(d):
        stride = sdf_shape[k] // per_axis
        if stride < 1:
            raise ValueError("per_axis exceeds the grid resolution")
        idx = stride // 2 + stride * np.arange(per_axis)
        axes.append(origin[k] + (idx + 0.5) * voxel_size)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    center = origin + np.asarray(sdf_shape) * voxel_size / 2.0
    reach = float(np.linalg.norm(np.asarray(sdf_shape) * voxel_size) / 2.0)
    return BasisPointSet(pts, "grid", center, reach, float(voxel_size))


def encode_sdf(sdf: SignedDistanceField, bps: BasisPointSet) -> BpsFeatures:
    """Signed features: the interpolated field sampled at the basis points."""
    return BpsFeatures(sdf.lookup(bps.points), signed=True)


def encode_pointcloud(cloud: np.ndarray, bps: BasisPointSet) -> BpsFeatures:
    """Unsigned features: distance from each basis point to its nearest cloud point."""
    cloud = np.asarray(cloud, dtype=np.float64)
    if cloud.ndim != 2 or cloud.shape[0] == 0:
        raise ValueError("point cloud must be a non-empty (n, d) array")
    dist, _ = cKDTree(cloud).query(bps.points)
    return BpsFeatures(np.asarray(dist, dtype=np.float64), signed=False)


def reconstruct_conservative(bps: BasisPointSet, features: BpsFeatures,
                             shape, voxel_size: float, origin) -> np.ndarray:
    """Free/occupied/unknown labels on a query grid, never mislabeling a cell.

    A positive feature value v certifies that everything strictly closer than
    v to the basis point is free (v is the distance to the nearest obstacle);
    negative values certify occupancy symmetrically.
    """
    if not features.signed:
        raise ValueError("conservative reconstruction needs signed features")
    origin = np.asarray(origin, dtype=np.float64)
    d = len(shape)
    axes = [origin[k] + (np.arange(shape[k]) + 0.5) * voxel_size for k in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([m.ravel() for m in mesh], axis=-1)

    free = np.zeros(centers.shape[0], dtype=bool)
    occ = np.zeros(centers.shape[0], dtype=bool)
    for b, v in zip(bps.points, features.values):
        if v == 0.0:
            continue
        dist = np.linalg.norm(centers - b, axis=1)
        if v > 0:
            free |= dist <= v - _BOUNDARY_TOL
        else:
            occ |= dist <= -v - _BOUNDARY_TOL
    labels = np.full(centers.shape[0], UNKNOWN, dtype=np.int8)
    labels[occ] = OCCUPIED
    labels[free] = FREE
    return labels.reshape(shape)


def downsample_conservative(cells: np.ndarray, factor: int) -> np.ndarray:
    """Coarse occupancy where a block is an obstacle if any cell in it is."""
    shape = cells.shape
    if any(s % factor for s in shape):
        raise ValueError("grid shape must be divisible by the downsampling factor")
    view = cells
    for ax in range(cells.ndim):
        view = view.reshape(view.shape[:ax] + (shape[ax] // factor, factor)
                            + view.shape[ax + 1:]).any(axis=ax + 1)
        # each reduction collapses one factor axis in place
    return view


def downsample_loss_fraction(cells: np.ndarray, factor: int) -> float:
    """Fraction of truly free cells the conservative coarse grid marks occupied."""
    coarse = downsample_conservative(cells, factor)
    up = coarse
    for ax in range(cells.ndim):
        up = np.repeat(up, factor, axis=ax)
    lost = (~cells) & up
    return float(lost.mean())


def unknown_fraction(labels: np.ndarray) -> float:
    return float((labels == UNKNOWN).mean())


# --- file format -----------------------------------------------------------
#
# Little-endian: magic "BPS1", u32 n_b, u8 d, f64 points row-major, then a
# u32-length-prefixed JSON metadata block with the generation parameters.


def bps_to_bytes(bps: BasisPointSet) -> bytes:
    meta = {
        "layout": bps.layout,
        "center": bps.center.tolist(),
        "reach": bps.reach,
        "spacing": bps.spacing,
    }
    blob = json.dumps(meta, sort_keys=True).encode()
    head = _MAGIC + struct.pack("<IB", bps.n_points, bps.dim)
    return head + bps.points.astype("<f8").tobytes() + struct.pack("<I", len(blob)) + blob


def bps_from_bytes(data: bytes) -> BasisPointSet:
    if data[:4] != _MAGIC:
        raise DataError(f"not a basis point set blob (magic {data[:4]!r})")
    n, d = struct.unpack_from("<IB", data, 4)
    off = 4 + 5
    pts = np.frombuffer(data, dtype="<f8", count=n * d, offset=off).reshape(n, d).copy()
    off += 8 * n * d
    (mlen,) = struct.unpack_from("<I", data, off)
    off += 4
    meta = json.loads(data[off:off + mlen].decode())
    return BasisPointSet(pts, meta["layout"], np.asarray(meta["center"]),
                         float(meta["reach"]), meta.get("spacing"))


def save_bps(path, bps: BasisPointSet):
    with open(path, "wb") as fh:
        fh.write(bps_to_bytes(bps))


def load_bps(path) -> BasisPointSet:
    with open(path, "rb") as fh:
        return bps_from_bytes(fh.read())
