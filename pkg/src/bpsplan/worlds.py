"""Procedural obstacle worlds: occupancy grids, signed distance fields, filters.

A world is a boolean voxel grid produced by thresholding seeded simplex
noise, plus the signed distance field derived from it.  Distances are
measured between cell centers: a free cell's value is the (positive)
distance to the nearest obstacle cell center, an obstacle cell's value is
minus the distance to the nearest free cell center.  Grids and fields are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from . import noise
from .errors import DataError

# Sentinel scale for degenerate grids (all free / all obstacle): the field
# is set to +-(sentinel_factor * max extent).
SENTINEL_FACTOR = 10.0

_MAGIC_WORLD = b"BPW1"


@dataclass(frozen=True)
class WorldSpec:
    """Deterministic recipe for one obstacle world.

    ``rotation`` counts quarter turns about the grid center in the xy plane;
    it exists so spatially augmented worlds stay regenerable from their spec.
    """

    seed: int
    noise_frequency: float
    threshold: float
    shape: tuple[int, ...]
    voxel_size: float
    rotation: int = 0

    def __post_init__(self):
        if any(s < 8 for s in self.shape):
            raise ValueError(f"grid shape components must be >= 8, got {self.shape}")
        if not self.voxel_size > 0:
            raise ValueError("voxel_size must be positive")
        if not -1.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [-1, 1]")
        object.__setattr__(self, "rotation", int(self.rotation) % 4)
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))


@dataclass(frozen=True)
class OccupancyGrid:
    shape: tuple[int, ...]
    voxel_size: float
    origin: np.ndarray
    cells: np.ndarray  # bool, True = obstacle

    def __post_init__(self):
        if any(s < 8 for s in self.shape):
            raise ValueError(f"grid shape components must be >= 8, got {self.shape}")
        if not self.voxel_size > 0:
            raise ValueError("voxel_size must be positive")
        if tuple(self.cells.shape) != tuple(self.shape):
            raise ValueError("cells array does not match declared shape")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def extent(self) -> np.ndarray:
        """Axis-aligned world extent in meters."""
        return np.asarray(self.shape, dtype=np.float64) * self.voxel_size

    def cell_centers(self) -> np.ndarray:
        """(n_cells, d) array of cell-center world coordinates, C order."""
        axes = [
            self.origin[k] + (np.arange(self.shape[k]) + 0.5) * self.voxel_size
            for k in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True)
class SignedDistanceField:
    shape: tuple[int, ...]
    voxel_size: float
    origin: np.ndarray
    values: np.ndarray  # float64, >0 free, <0 obstacle

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.shape, dtype=np.float64) * self.voxel_size

    def lookup(self, points: np.ndarray) -> np.ndarray:
        """Multilinear interpolation of cell-center values at (n, d) points."""
        val, _ = _interpolate(self, np.asarray(points, dtype=np.float64), want_grad=False)
        return val

    def lookup_with_gradient(self, points: np.ndarray):
        """Interpolated values plus the exact spatial gradient of the interpolant.

        Outside the grid the field is clamped, so clamped coordinates get a
        zero gradient component.
        """
        return _interpolate(self, np.asarray(points, dtype=np.float64), want_grad=True)


def generate_world(spec: WorldSpec) -> OccupancyGrid:
    """Threshold seeded simplex noise into an occupancy grid.

    Noise coordinates are normalized by the largest world extent, so
    ``noise_frequency`` reads as cycles per world extent independent of the
    voxel resolution.
    """
    d = len(spec.shape)
    if d not in (2, 3):
        raise ValueError(f"worlds are 2D or 3D, got d={d}")
    origin = np.zeros(d)
    grid = OccupancyGrid(spec.shape, spec.voxel_size, origin, np.zeros(spec.shape, dtype=bool))
    centers = grid.cell_centers()
    u = (centers - origin) / (max(spec.shape) * spec.voxel_size) * spec.noise_frequency
    values = noise.sample(u, spec.seed).reshape(spec.shape)
    cells = values > spec.threshold
    if spec.rotation:
        cells = np.rot90(cells, k=spec.rotation, axes=(0, 1))
    return replace(grid, cells=np.ascontiguousarray(cells))


def compute_sdf(grid: OccupancyGrid, sentinel_factor: float = SENTINEL_FACTOR) -> SignedDistanceField:
    """Exact center-to-center signed Euclidean distance field of a grid."""
    obstacle = grid.cells
    sentinel = sentinel_factor * float(np.max(grid.extent))
    if not obstacle.any():
        values = np.full(grid.shape, sentinel)
    elif obstacle.all():
        values = np.full(grid.shape, -sentinel)
    else:
        free_dist = ndimage.distance_transform_edt(~obstacle, sampling=grid.voxel_size)
        obst_dist = ndimage.distance_transform_edt(obstacle, sampling=grid.voxel_size)
        values = np.where(obstacle, -obst_dist, free_dist)
    return SignedDistanceField(grid.shape, grid.voxel_size, grid.origin.copy(), values)


def sdf_lookup(sdf: SignedDistanceField, x: np.ndarray):
    """Interpolated distance at one point or an (n, d) batch."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    out = sdf.lookup(x[None] if single else x)
    return float(out[0]) if single else out


def _interpolate(sdf: SignedDistanceField, points: np.ndarray, want_grad: bool):
    """Shared multilinear value/gradient kernel with boundary clamping."""
    shape = np.asarray(sdf.shape)
    d = sdf.dim
    if points.ndim != 2 or points.shape[1] != d:
        raise ValueError(f"expected (n, {d}) points, got {points.shape}")

    raw = (points - sdf.origin) / sdf.voxel_size - 0.5
    f = np.clip(raw, 0.0, shape - 1.0)
    i0 = np.minimum(f.astype(np.int64), shape - 2)
    w = f - i0  # in [0, 1]

    flat = sdf.values.ravel()
    strides = np.ones(d, dtype=np.int64)
    for k in range(d - 2, -1, -1):
        strides[k] = strides[k + 1] * sdf.shape[k + 1]
    base = i0 @ strides

    values = np.zeros(points.shape[0])
    grad = np.zeros_like(points) if want_grad else None
    for corner in range(1 << d):
        offs = np.array([(corner >> (d - 1 - k)) & 1 for k in range(d)], dtype=np.int64)
        v = flat[base + offs @ strides]
        weight = np.ones(points.shape[0])
        for k in range(d):
            weight = weight * (w[:, k] if offs[k] else 1.0 - w[:, k])
        values += weight * v
        if want_grad:
            for k in range(d):
                dw = np.ones(points.shape[0])
                for m in range(d):
                    if m == k:
                        dw = dw * (1.0 if offs[m] else -1.0)
                    else:
                        dw = dw * (w[:, m] if offs[m] else 1.0 - w[:, m])
                grad[:, k] += dw * v
    if want_grad:
        grad /= sdf.voxel_size
        # Clamped coordinates are constant in the query point.
        inside = (raw >= 0.0) & (raw <= shape - 1.0)
        grad *= inside
        return values, grad
    return values, None


def world_is_usable(sdf: SignedDistanceField, robot, rng, n_samples: int = 1000,
                    min_feasible: int = 200) -> bool:
    """Keep a world only if enough random configurations are collision-free."""
    from . import robots  # local import to avoid a cycle

    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    q = robots.random_config_batch(robot, rng, n_samples)
    ok = robots.is_config_feasible_batch(robot, sdf, q)
    return int(ok.sum()) >= min_feasible


# --- world file format ------------------------------------------------------
#
# Little-endian binary: magic "BPW1", u8 dim, u32 shape[d], f64 voxel_size,
# f64 origin[d], shape-product occupancy bytes (0/1), shape-product f32 SDF
# values, then a trailing spec record (u64 seed, f64 frequency, f64
# threshold, u8 rotation) when the world came from a WorldSpec.

_SPEC_TRAILER = struct.Struct("<Qddb")


def save_world(path, grid: OccupancyGrid, sdf: SignedDistanceField, spec: WorldSpec | None = None):
    with open(path, "wb") as fh:
        d = grid.dim
        fh.write(_MAGIC_WORLD)
        fh.write(struct.pack("<B", d))
        fh.write(struct.pack(f"<{d}I", *grid.shape))
        fh.write(struct.pack("<d", grid.voxel_size))
        fh.write(struct.pack(f"<{d}d", *grid.origin))
        fh.write(grid.cells.astype(np.uint8).tobytes())
        fh.write(sdf.values.astype("<f4").tobytes())
        if spec is not None:
            fh.write(_SPEC_TRAILER.pack(np.uint64(spec.seed), spec.noise_frequency,
                                        spec.threshold, spec.rotation))


def load_world(path):
    """Returns (grid, sdf, spec-or-None)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC_WORLD:
        raise DataError(f"{path}: not a world file (bad magic {blob[:4]!r})")
    off = 4
    (d,) = struct.unpack_from("<B", blob, off)
    off += 1
    shape = struct.unpack_from(f"<{d}I", blob, off)
    off += 4 * d
    (voxel,) = struct.unpack_from("<d", blob, off)
    off += 8
    origin = np.array(struct.unpack_from(f"<{d}d", blob, off))
    off += 8 * d
    n = int(np.prod(shape))
    cells = np.frombuffer(blob, dtype=np.uint8, count=n, offset=off).reshape(shape).astype(bool)
    off += n
    values = np.frombuffer(blob, dtype="<f4", count=n, offset=off).reshape(shape).astype(np.float64)
    off += 4 * n
    spec = None
    if off + _SPEC_TRAILER.size <= len(blob):
        seed, freq, thr, rot = _SPEC_TRAILER.unpack_from(blob, off)
        spec = WorldSpec(int(seed), freq, thr, tuple(shape), voxel, int(rot))
    grid = OccupancyGrid(tuple(shape), voxel, origin, cells)
    sdf = SignedDistanceField(tuple(shape), voxel, origin, values)
    return grid, sdf, spec
