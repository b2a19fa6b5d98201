"""Experience store: hard-sample generation, symmetry augmentation, and the
clean/boost/extend loop that lets a trained network improve its own data.

Samples keep their motion task, the labeled path, and the label's objective
value.  Worlds live in a table of regenerable specs with a per-world
train/test split; samples reference worlds by index, so no world ever
contributes to both splits.  Paths and endpoints are quantized to f32 at
sample creation, matching the on-disk format, so what is checked is exactly
what is stored.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import net as net_mod
from . import optimizer as opt
from .bps import BasisPointSet, encode_sdf
from .errors import DataError
from .multistart import MotionTask, solve_multistart
from .objective import ObjectiveParams, objective
from .robots import RobotModel, is_config_feasible_batch, random_config_batch
from .worlds import WorldSpec, compute_sdf, generate_world

_MAGIC = b"BPD1"
PROVENANCE = ("multistart", "cleaned", "extended", "augmented")
SPLITS = ("train", "test")


def quantize(arr: np.ndarray) -> np.ndarray:
    """Round through f32, the storage precision of paths and endpoints."""
    return np.asarray(arr, dtype="<f4").astype(np.float64)


@dataclass
class Sample:
    task: MotionTask
    label: np.ndarray  # (n_t, n_dof)
    label_objective: float
    provenance: str = "multistart"
    hardness: float = 0.0

    def __post_init__(self):
        if self.provenance not in PROVENANCE:
            raise DataError(f"unknown provenance {self.provenance!r}")


@dataclass
class Dataset:
    robot_name: str
    n_t: int
    worlds: list[WorldSpec]
    splits: list[str]
    samples: list[Sample] = field(default_factory=list)

    def world_indices(self, split: str) -> list[int]:
        return [i for i, s in enumerate(self.splits) if s == split]

    def sample_indices(self, split: str) -> list[int]:
        keep = {i for i, s in enumerate(self.splits) if s == split}
        return [i for i, s in enumerate(self.samples) if s.task.world in keep]


class WorldCache:
    """Lazily generated grids, fields, and per-world feature vectors."""

    def __init__(self, worlds: list[WorldSpec]):
        self.worlds = worlds
        self._geo: dict[int, tuple] = {}
        self._features: dict[int, np.ndarray] = {}
        self._bps: BasisPointSet | None = None

    def geometry(self, idx: int):
        if idx not in self._geo:
            grid = generate_world(self.worlds[idx])
            self._geo[idx] = (grid, compute_sdf(grid))
        return self._geo[idx]

    def sdf(self, idx: int):
        return self.geometry(idx)[1]

    def features(self, idx: int, bps: BasisPointSet) -> np.ndarray:
        if self._bps is not None and self._bps is not bps:
            self._features.clear()
        self._bps = bps
        if idx not in self._features:
            self._features[idx] = encode_sdf(self.sdf(idx), bps).values
        return self._features[idx]


# --- generation -----------------------------------------------------------------


@dataclass(frozen=True)
class HardSampleParams:
    obj: ObjectiveParams
    descent: opt.DescentParams  # straight-line hardness check (auto substeps)
    label_descent: opt.DescentParams | None = None  # multistart labeling runs
    n_t: int = 20
    n_starts: int = 100
    stop_after_feasible: int | None = None
    endpoint_tries: int = 200
    candidates_per_round: int = 16

    @property
    def labeling(self) -> opt.DescentParams:
        return self.label_descent if self.label_descent is not None else self.descent


def _is_point_robot(robot: RobotModel) -> bool:
    return (robot.n_spheres == 1 and robot.n_dof == robot.dim
            and all(j.kind == "prismatic" for j in robot.joints)
            and np.allclose(robot.sphere_local, 0.0))


def _passable_components(sdf, radius):
    """Connected components of the cells a point robot of this radius can occupy."""
    from scipy import ndimage

    mask = sdf.values > radius
    labels, _ = ndimage.label(mask)
    return labels


def _cell_of(sdf, q):
    idx = np.rint((q - sdf.origin) / sdf.voxel_size - 0.5).astype(np.int64)
    return np.clip(idx, 0, np.asarray(sdf.shape) - 1)


def draw_candidate_tasks(robot: RobotModel, sdf, world: int, rng, k: int,
                         endpoint_tries: int = 200) -> list[MotionTask]:
    """Up to k feasible-endpoint tasks on one world.

    For point robots, both endpoints are additionally required to lie in the
    same passable free-space component, which rejects tasks no planner could
    ever solve before any optimization is spent on them.
    """
    q = quantize(random_config_batch(robot, rng, max(endpoint_tries, 4 * k)))
    good = q[is_config_feasible_batch(robot, sdf, q)]
    if good.shape[0] < 2:
        return []
    tasks = []
    if _is_point_robot(robot):
        labels = _passable_components(sdf, float(robot.sphere_radius[0]))
        cells = _cell_of(sdf, good)
        comp = labels[tuple(cells.T)]
        by_comp: dict[int, list[int]] = {}
        for i, c in enumerate(comp):
            if c > 0:
                by_comp.setdefault(int(c), []).append(i)
        pairs = []
        for ids in by_comp.values():
            pairs.extend((ids[2 * j], ids[2 * j + 1]) for j in range(len(ids) // 2))
        pairs.sort()
        for a, b in pairs[:k]:
            if not np.array_equal(good[a], good[b]):
                tasks.append(MotionTask(world, good[a], good[b]))
    else:
        for j in range(min(k, good.shape[0] // 2)):
            a, b = good[2 * j], good[2 * j + 1]
            if not np.array_equal(a, b):
                tasks.append(MotionTask(world, a, b))
    return tasks


def straight_line_is_solution(task, robot, sdf, params: HardSampleParams) -> bool:
    from .multistart import straight_line_guess

    guess = straight_line_guess(task, params.n_t)
    final, _ = opt.descend(guess, robot, sdf, params.obj, params.descent)
    return opt.feasibility_check(final, robot, sdf, params.descent.n_sub)


def _label_task(task, robot, sdf, params: HardSampleParams, seed: int,
                provenance: str) -> Sample | None:
    result = solve_multistart(task, robot, sdf, params.obj, params.labeling,
                              params.n_t, params.n_starts, seed,
                              params.stop_after_feasible)
    if result.best_path is None:
        return None
    label = quantize(result.best_path)
    label[0], label[-1] = task.q_start, task.q_goal
    if not opt.feasibility_check(label, robot, sdf):
        return None
    value = objective(label, robot, sdf, params.obj).total
    return Sample(task, label, float(value), provenance)


def fill_hard_samples(dataset: Dataset, cache: WorldCache, robot: RobotModel,
                      split: str, count: int, seed: int, params: HardSampleParams,
                      max_attempts: int | None = None) -> dict:
    """Rejection-sample hard tasks on the split's worlds and label them.

    A task qualifies only if descent from the straight line stays infeasible
    and the multistart solver finds a feasible label.  Candidate straight-line
    checks are batched per world, and each world contributes at most its fair
    share per pass so samples spread across the whole split.  Appends up to
    ``count`` samples; an under-filled result is reported, not fatal.
    """
    from .multistart import straight_line_guess

    world_ids = dataset.world_indices(split)
    if not world_ids:
        raise DataError(f"no worlds in split {split!r}")
    if max_attempts is None:
        max_attempts = 40 * count
    per_world_cap = max(1, -(-count // len(world_ids)))
    added = attempts = easy = unlabeled = 0
    round_no = 0
    while added < count and attempts < max_attempts:
        world = world_ids[round_no % len(world_ids)]
        rng = np.random.default_rng(
            np.random.SeedSequence([seed, SPLITS.index(split), round_no]))
        round_no += 1
        sdf = cache.sdf(world)
        tasks = draw_candidate_tasks(robot, sdf, world, rng,
                                     params.candidates_per_round,
                                     params.endpoint_tries)
        if not tasks:
            attempts += 1
            continue
        attempts += len(tasks)
        guesses = np.stack([straight_line_guess(t, params.n_t) for t in tasks])
        finals, _ = opt.descend_batch(guesses, robot, sdf, params.obj, params.descent)
        solvable = opt.feasibility_check_batch(finals, robot, sdf, params.descent.n_sub)
        added_this_world = 0
        for task, is_easy in zip(tasks, solvable):
            if added >= count or added_this_world >= per_world_cap:
                break
            if is_easy:
                easy += 1
                continue
            sample = _label_task(task, robot, sdf, params, seed, "multistart")
            if sample is None:
                unlabeled += 1
                continue
            dataset.samples.append(sample)
            added += 1
            added_this_world += 1
    return {"added": added, "attempts": attempts, "too_easy": easy,
            "label_failures": unlabeled, "requested": count}


def generate_hard_samples(worlds: list[WorldSpec], robot: RobotModel, count: int,
                          seed: int, params: HardSampleParams,
                          split: str = "train") -> Dataset:
    """Fresh dataset of hard samples over the given worlds (single split)."""
    dataset = Dataset(robot.name, params.n_t, list(worlds), [split] * len(worlds))
    cache = WorldCache(dataset.worlds)
    fill_hard_samples(dataset, cache, robot, split, count, seed, params)
    return dataset


# --- symmetry augmentation -------------------------------------------------------


def augment_temporal(sample: Sample) -> Sample:
    """The reversed path solves the swapped task at the identical objective."""
    task = MotionTask(sample.task.world, sample.task.q_goal, sample.task.q_start)
    return Sample(task, sample.label[::-1].copy(), sample.label_objective,
                  "augmented", sample.hardness)


def _rotate_points(points: np.ndarray, quarter_turns: int, center: np.ndarray) -> np.ndarray:
    th = quarter_turns * np.pi / 2.0
    c, s = np.cos(th), np.sin(th)
    rel = points - center
    out = np.empty_like(rel)
    out[..., 0] = c * rel[..., 0] - s * rel[..., 1]
    out[..., 1] = s * rel[..., 0] + c * rel[..., 1]
    return out + center


def _wrap_angle(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def augment_spatial(sample: Sample, quarter_turns: int, robot: RobotModel,
                    grid_center: np.ndarray, rotated_world: int) -> Sample:
    """Rotate the task into the pre-registered rotated copy of its world.

    Grid rotation maps occupancy exactly for multiples of 90 degrees, so the
    transformed label keeps the original objective up to interpolation noise.
    """
    k = quarter_turns % 4
    if robot.spatial_symmetry == "grid_rotation":
        label = quantize(_rotate_points(sample.label, k, grid_center))
    elif robot.spatial_symmetry == "base_revolute":
        label = sample.label.copy()
        label[:, 0] = quantize(_wrap_angle(label[:, 0] + k * np.pi / 2.0))
    else:
        raise DataError(f"robot {robot.name!r} declares no spatial symmetry")
    task = MotionTask(rotated_world, label[0].copy(), label[-1].copy())
    return Sample(task, label, sample.label_objective, "augmented", sample.hardness)


def augment_dataset(dataset: Dataset, cache: WorldCache, robot: RobotModel,
                    temporal: bool = True, rotations: tuple = (1, 2, 3),
                    split: str = "train", verify_rotated: bool = True) -> dict:
    """Append symmetry-augmented copies of the split's samples in place."""
    if rotations and robot.spatial_symmetry == "none":
        raise DataError(f"robot {robot.name!r} declares no spatial symmetry")
    base_ids = dataset.sample_indices(split)
    rot_world: dict[tuple[int, int], int] = {}
    if rotations:
        known = {spec: i for i, spec in enumerate(dataset.worlds)}
        for sid in base_ids:
            w = dataset.samples[sid].task.world
            for k in rotations:
                spec = dataset.worlds[w]
                rspec = replace(spec, rotation=(spec.rotation + k) % 4)
                if rspec not in known:
                    known[rspec] = len(dataset.worlds)
                    dataset.worlds.append(rspec)
                    dataset.splits.append(split)
                rot_world[(w, k)] = known[rspec]

    added = 0
    dropped = 0
    new_samples = []
    for sid in base_ids:
        s = dataset.samples[sid]
        if temporal:
            new_samples.append(augment_temporal(s))
        for k in rotations:
            spec = dataset.worlds[s.task.world]
            center = np.asarray(spec.shape, dtype=np.float64) * spec.voxel_size / 2.0
            aug = augment_spatial(s, k, robot, center, rot_world[(s.task.world, k)])
            if verify_rotated:
                sdf = cache.sdf(aug.task.world)
                if not opt.feasibility_check(aug.label, robot, sdf):
                    dropped += 1
                    continue
            new_samples.append(aug)
            if temporal:
                new_samples.append(augment_temporal(aug))
    dataset.samples.extend(new_samples)
    added = len(new_samples)
    return {"added": added, "dropped_rotated": dropped}


# --- network-guided refinement ----------------------------------------------------


def _predict_for_samples(dataset, cache, ckpt, ids):
    feats = np.stack([cache.features(dataset.samples[i].task.world, ckpt.bps) for i in ids])
    starts = np.stack([dataset.samples[i].task.q_start for i in ids])
    goals = np.stack([dataset.samples[i].task.q_goal for i in ids])
    return ckpt.predict_paths(feats, starts, goals)


def _descend_per_world(dataset, cache, robot, ids, paths, obj_params, descent_params):
    """Descend predictions grouped by world; returns final paths, feasibility, objectives."""
    finals = np.empty_like(paths)
    feas = np.zeros(len(ids), dtype=bool)
    values = np.full(len(ids), np.inf)
    by_world: dict[int, list[int]] = {}
    for pos, sid in enumerate(ids):
        by_world.setdefault(dataset.samples[sid].task.world, []).append(pos)
    for world, rows in by_world.items():
        sdf = cache.sdf(world)
        out, _ = opt.descend_batch(paths[rows], robot, sdf, obj_params, descent_params)
        out = quantize(out)
        for pos, p in zip(rows, out):
            sid = ids[pos]
            p[0] = dataset.samples[sid].task.q_start
            p[-1] = dataset.samples[sid].task.q_goal
        finals[rows] = out
        feas[rows] = opt.feasibility_check_batch(out, robot, sdf, descent_params.n_sub)
        for pos in rows:
            if feas[pos]:
                values[pos] = objective(finals[pos], robot, sdf, obj_params).total
    return finals, feas, values


def refine_predictions(dataset: Dataset, cache: WorldCache, robot: RobotModel,
                       ckpt: net_mod.Checkpoint, obj_params: ObjectiveParams,
                       descent_params: opt.DescentParams, split: str = "train"):
    """Predict every sample's path and re-optimize it; shared by clean/boost."""
    ids = dataset.sample_indices(split)
    paths = _predict_for_samples(dataset, cache, ckpt, ids)
    finals, feas, values = _descend_per_world(dataset, cache, robot, ids, paths,
                                              obj_params, descent_params)
    return {"ids": ids, "predictions": paths, "finals": finals,
            "feasible": feas, "values": values}


def clean(dataset: Dataset, cache: WorldCache, robot: RobotModel,
          ckpt: net_mod.Checkpoint, obj_params: ObjectiveParams,
          descent_params: opt.DescentParams, split: str = "train",
          refined: dict | None = None) -> dict:
    """Re-optimize network predictions; adopt them when strictly better.

    A label is replaced only by a feasible path with a lower objective, so
    mean label objective never increases across clean rounds.
    """
    if refined is None:
        refined = refine_predictions(dataset, cache, robot, ckpt, obj_params,
                                     descent_params, split)
    ids = refined["ids"]
    if not ids:
        return {"n_samples": 0, "replaced": 0}
    before = float(np.mean([dataset.samples[i].label_objective for i in ids]))
    finals, feas, values = refined["finals"], refined["feasible"], refined["values"]
    replaced = 0
    for pos, sid in enumerate(ids):
        s = dataset.samples[sid]
        if feas[pos] and values[pos] < s.label_objective:
            dataset.samples[sid] = Sample(s.task, finals[pos], float(values[pos]),
                                          "cleaned", s.hardness)
            replaced += 1
    after = float(np.mean([dataset.samples[i].label_objective for i in ids]))
    return {"n_samples": len(ids), "replaced": replaced,
            "mean_objective_before": before, "mean_objective_after": after}


def boost_weights(dataset: Dataset, cache: WorldCache, robot: RobotModel,
                  ckpt: net_mod.Checkpoint, obj_params: ObjectiveParams,
                  descent_params: opt.DescentParams, beta: float = 3.0,
                  split: str = "train", refined: dict | None = None) -> np.ndarray:
    """Per-sample training weights from the prediction-vs-label objective gap.

    hardness = max(0, U(short-descend(prediction)) - label objective); weights
    are 1 + beta * hardness / mean(hardness), renormalized to mean one.  Also
    records the hardness on each sample.
    """
    if refined is None:
        refined = refine_predictions(dataset, cache, robot, ckpt, obj_params,
                                     descent_params, split)
    ids = refined["ids"]
    paths, feas, values = refined["predictions"], refined["feasible"], refined["values"]
    hardness = np.zeros(len(ids))
    for pos, sid in enumerate(ids):
        s = dataset.samples[sid]
        achieved = values[pos] if feas[pos] else np.inf
        if not np.isfinite(achieved):
            # Infeasible predictions count their raw clipped objective.
            sdf = cache.sdf(s.task.world)
            achieved = objective(paths[pos], robot, sdf, obj_params).total
        hardness[pos] = max(0.0, achieved - s.label_objective)
        dataset.samples[sid].hardness = float(hardness[pos])
    mean_h = hardness.mean()
    if mean_h > 0:
        weights = 1.0 + beta * hardness / mean_h
        weights /= weights.mean()
    else:
        weights = np.ones(len(ids))
    return weights


def extend(dataset: Dataset, cache: WorldCache, robot: RobotModel,
           ckpt: net_mod.Checkpoint, candidates, budget: int,
           params: HardSampleParams, seed: int) -> dict:
    """Label and append candidate tasks the network cannot already solve.

    ``candidates`` yields MotionTasks on the dataset's train worlds.  A task
    is skipped when the prediction, after a budgeted descent, is already
    feasible; otherwise the multistart solver provides the label.
    """
    added = 0
    skipped = 0
    unlabeled = 0
    scanned = 0
    for task in candidates:
        if added >= budget:
            break
        scanned += 1
        sdf = cache.sdf(task.world)
        feats = cache.features(task.world, ckpt.bps)
        pred = ckpt.predict_path(feats, task.q_start, task.q_goal)
        final, _ = opt.descend(pred, robot, sdf, params.obj, params.descent)
        if opt.feasibility_check(final, robot, sdf, params.descent.n_sub):
            skipped += 1
            continue
        sample = _label_task(task, robot, sdf, params, seed, "extended")
        if sample is None:
            unlabeled += 1
            continue
        dataset.samples.append(sample)
        added += 1
    return {"added": added, "skipped_solved": skipped,
            "label_failures": unlabeled, "scanned": scanned}


def candidate_tasks(dataset: Dataset, cache: WorldCache, robot: RobotModel,
                    seed: int, split: str = "train", endpoint_tries: int = 200):
    """Endless stream of feasible-endpoint tasks on the split's worlds."""
    world_ids = dataset.world_indices(split)
    i = 0
    while True:
        world = world_ids[i % len(world_ids)]
        rng = np.random.default_rng(np.random.SeedSequence([seed, 2, i]))
        i += 1
        tasks = draw_candidate_tasks(robot, cache.sdf(world), world, rng, 4,
                                     endpoint_tries)
        yield from tasks


# --- verification -----------------------------------------------------------------


def verify(dataset: Dataset, cache: WorldCache, robot: RobotModel,
           check_hardness: bool = False,
           params: HardSampleParams | None = None) -> list[tuple[int, str]]:
    """Invariant scan; returns (sample index, reason) for every violation."""
    problems = []
    n_worlds = len(dataset.worlds)
    if len(dataset.splits) != n_worlds:
        problems.append((-1, "split table length does not match world table"))
    for i, s in enumerate(dataset.splits):
        if s not in SPLITS:
            problems.append((-1, f"world {i}: unknown split {s!r}"))
    for idx, s in enumerate(dataset.samples):
        if not (0 <= s.task.world < n_worlds):
            problems.append((idx, "world index out of range"))
            continue
        if s.label.shape != (dataset.n_t, robot.n_dof):
            problems.append((idx, f"label shape {s.label.shape} != ({dataset.n_t}, {robot.n_dof})"))
            continue
        if not (np.array_equal(s.label[0], s.task.q_start)
                and np.array_equal(s.label[-1], s.task.q_goal)):
            problems.append((idx, "label endpoints differ from task endpoints"))
            continue
        if not np.isfinite(s.label_objective):
            problems.append((idx, "non-finite label objective"))
            continue
        sdf = cache.sdf(s.task.world)
        if not opt.feasibility_check(s.label, robot, sdf):
            problems.append((idx, "label fails feasibility check"))
            continue
        if check_hardness and params is not None:
            if straight_line_is_solution(s.task, robot, sdf, params):
                problems.append((idx, "task is solvable from the straight line"))
    return problems


def stats(dataset: Dataset) -> dict:
    by_prov = {p: 0 for p in PROVENANCE}
    for s in dataset.samples:
        by_prov[s.provenance] += 1
    by_split = {sp: len(dataset.sample_indices(sp)) for sp in SPLITS}
    objs = [s.label_objective for s in dataset.samples]
    return {
        "n_worlds": len(dataset.worlds),
        "worlds_per_split": {sp: len(dataset.world_indices(sp)) for sp in SPLITS},
        "n_samples": len(dataset.samples),
        "samples_per_split": by_split,
        "provenance": by_prov,
        "mean_label_objective": float(np.mean(objs)) if objs else float("nan"),
    }


# --- file format --------------------------------------------------------------
#
# Little-endian: magic "BPD1", u16 robot-name length + bytes, u32 n_t,
# u32 n_dof, u32 world count, world records (u64 seed, f64 frequency,
# f64 threshold, u8 d, u32 shape[d], f64 voxel, u8 rotation, u8 split),
# u32 sample count, sample records (u32 world, f32 q_start, f32 q_goal,
# f32 label waypoints, f64 label objective, u8 provenance, f32 hardness).


def save_dataset(path, dataset: Dataset, n_dof: int):
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        name = dataset.robot_name.encode()
        fh.write(struct.pack("<H", len(name)))
        fh.write(name)
        fh.write(struct.pack("<II", dataset.n_t, n_dof))
        fh.write(struct.pack("<I", len(dataset.worlds)))
        for spec, split in zip(dataset.worlds, dataset.splits):
            d = len(spec.shape)
            fh.write(struct.pack("<Qdd", np.uint64(spec.seed), spec.noise_frequency,
                                 spec.threshold))
            fh.write(struct.pack(f"<B{d}I", d, *spec.shape))
            fh.write(struct.pack("<dBB", spec.voxel_size, spec.rotation,
                                 SPLITS.index(split)))
        fh.write(struct.pack("<I", len(dataset.samples)))
        for s in dataset.samples:
            fh.write(struct.pack("<I", s.task.world))
            fh.write(s.task.q_start.astype("<f4").tobytes())
            fh.write(s.task.q_goal.astype("<f4").tobytes())
            fh.write(s.label.astype("<f4").tobytes())
            fh.write(struct.pack("<d", s.label_objective))
            fh.write(struct.pack("<B", PROVENANCE.index(s.provenance)))
            fh.write(struct.pack("<f", s.hardness))


def load_dataset(path) -> tuple[Dataset, int]:
    """Returns (dataset, n_dof)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise DataError(f"{path}: not a dataset file (magic {data[:4]!r})")
    off = 4
    (name_len,) = struct.unpack_from("<H", data, off)
    off += 2
    robot_name = data[off:off + name_len].decode()
    off += name_len
    n_t, n_dof = struct.unpack_from("<II", data, off)
    off += 8
    (n_worlds,) = struct.unpack_from("<I", data, off)
    off += 4
    worlds, splits = [], []
    for _ in range(n_worlds):
        seed, freq, thr = struct.unpack_from("<Qdd", data, off)
        off += 24
        (d,) = struct.unpack_from("<B", data, off)
        off += 1
        shape = struct.unpack_from(f"<{d}I", data, off)
        off += 4 * d
        voxel, rotation, split = struct.unpack_from("<dBB", data, off)
        off += 10
        if split >= len(SPLITS):
            raise DataError(f"{path}: world {len(worlds)}: bad split byte {split}")
        worlds.append(WorldSpec(int(seed), freq, thr, tuple(shape), voxel, rotation))
        splits.append(SPLITS[split])
    (n_samples,) = struct.unpack_from("<I", data, off)
    off += 4
    samples = []
    for idx in range(n_samples):
        try:
            (world,) = struct.unpack_from("<I", data, off)
            off += 4
            qs = np.frombuffer(data, "<f4", n_dof, off).astype(np.float64)
            off += 4 * n_dof
            qg = np.frombuffer(data, "<f4", n_dof, off).astype(np.float64)
            off += 4 * n_dof
            label = np.frombuffer(data, "<f4", n_t * n_dof, off).astype(np.float64)
            off += 4 * n_t * n_dof
            (value,) = struct.unpack_from("<d", data, off)
            off += 8
            (prov,) = struct.unpack_from("<B", data, off)
            off += 1
            (hardness,) = struct.unpack_from("<f", data, off)
            off += 4
            samples.append(Sample(MotionTask(int(world), qs, qg),
                                  label.reshape(n_t, n_dof), float(value),
                                  PROVENANCE[prov], float(hardness)))
        except (struct.error, ValueError, IndexError) as exc:
            raise DataError(f"{path}: corrupt sample {idx}: {exc}") from exc
    return Dataset(robot_name, int(n_t), worlds, splits, samples), int(n_dof)
