"""End-to-end stages: worlds -> hard dataset -> training rounds -> benchmark.

Each stage is a plain function over explicit inputs so the CLI can run them
separately or chained; everything is deterministic given the config.  The
training loop follows the network/dataset interplay: train, then let the
network clean its own labels, reweight hard samples, extend the set with
tasks it cannot solve, and retrain.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import bps as bps_mod
from . import dataset as ds
from . import net as net_mod
from . import report as report_mod
from . import robots as robots_mod
from . import worlds as worlds_mod
from .config import Config, fingerprint
from .errors import DataError

log = logging.getLogger("bpsplan")


def world_table(config: Config, robot) -> tuple[list, list]:
    """Scan seeds for usable worlds until the configured count is reached.

    The last ``test_count`` usable worlds form the test split; their seeds
    never appear in training, and spatial augmentation only ever rotates
    train worlds.
    """
    wc = config.world
    worlds, splits = [], []
    seed = config.seed
    scanned = 0
    while len(worlds) < wc.count and scanned < 50 * wc.count:
        spec = worlds_mod.WorldSpec(seed + scanned, wc.frequency, wc.threshold,
                                    tuple(wc.shape), wc.voxel_size)
        scanned += 1
        sdf = worlds_mod.compute_sdf(worlds_mod.generate_world(spec))
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, spec.seed]))
        if worlds_mod.world_is_usable(sdf, robot, rng, wc.filter_samples,
                                      wc.filter_min_feasible):
            worlds.append(spec)
            splits.append("train")
    if len(worlds) < wc.count:
        raise DataError(f"only {len(worlds)} of {wc.count} worlds usable after "
                        f"scanning {scanned} seeds; loosen the world config")
    for i in range(len(worlds) - wc.test_count, len(worlds)):
        splits[i] = "test"
    return worlds, splits


def stage_worldgen(config: Config, outdir: Path, robot=None) -> tuple[list, list]:
    """Generate, filter, and export the world set; returns (specs, splits)."""
    robot = robot or robots_mod.load_robot(config.robot)
    outdir.mkdir(parents=True, exist_ok=True)
    worlds, splits = world_table(config, robot)
    index = []
    for i, (spec, split) in enumerate(zip(worlds, splits)):
        grid = worlds_mod.generate_world(spec)
        sdf = worlds_mod.compute_sdf(grid)
        name = f"world_{i:05d}.bpw"
        worlds_mod.save_world(outdir / name, grid, sdf, spec)
        index.append({"file": name, "seed": spec.seed, "split": split})
    with open(outdir / "index.json", "w") as fh:
        json.dump({"config_fingerprint": fingerprint(config), "seed": config.seed,
                   "threshold": config.world.threshold,
                   "frequency": config.world.frequency,
                   "worlds": index}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("worldgen: %d usable worlds (%d test)", len(worlds), config.world.test_count)
    return worlds, splits


def hard_sample_params(config: Config) -> ds.HardSampleParams:
    return ds.HardSampleParams(
        obj=config.objective.params(),
        descent=config.descent.params(),
        label_descent=config.label.descent.params(),
        n_t=config.n_t,
        n_starts=config.label.n_starts,
        stop_after_feasible=config.label.stop_after_feasible,
        candidates_per_round=config.data.candidates_per_round,
    )


def stage_dataset(config: Config, worlds: list, splits: list, robot,
                  cache: ds.WorldCache | None = None,
                  augment: bool = True) -> tuple[ds.Dataset, ds.WorldCache]:
    """Hard samples for both splits, optionally symmetry-augmenting the train set."""
    dataset = ds.Dataset(robot.name, config.n_t, list(worlds), list(splits))
    cache = cache or ds.WorldCache(dataset.worlds)
    params = hard_sample_params(config)
    t0 = time.perf_counter()
    rep_train = ds.fill_hard_samples(dataset, cache, robot, "train",
                                     config.data.n_train, config.seed, params)
    rep_test = ds.fill_hard_samples(dataset, cache, robot, "test",
                                    config.data.n_test, config.seed, params)
    log.info("dataset: %d train / %d test hard samples in %.1fs (%s / %s)",
             rep_train["added"], rep_test["added"], time.perf_counter() - t0,
             rep_train, rep_test)
    if augment and (config.data.temporal_augment or config.data.rotations):
        rep_aug = ds.augment_dataset(dataset, cache, robot,
                                     temporal=config.data.temporal_augment,
                                     rotations=tuple(config.data.rotations))
        log.info("augment: %s", rep_aug)
    return dataset, cache


def build_bps(config: Config, robot) -> bps_mod.BasisPointSet:
    return bps_mod.generate_hex_bps(robot.reach_center, robot.reach,
                                    config.bps.count, robot.dim)


def training_matrices(dataset: ds.Dataset, cache: ds.WorldCache,
                      ckpt_shape: tuple, bps, norm, split="train"):
    """(ids, X, Y): network inputs and flattened path-delta targets."""
    n_t, n_dof = ckpt_shape
    ids = dataset.sample_indices(split)
    X = np.empty((len(ids), bps.n_points + 2 * n_dof))
    Y = np.empty((len(ids), (n_t - 2) * n_dof))
    for row, sid in enumerate(ids):
        s = dataset.samples[sid]
        feats = cache.features(s.task.world, bps)
        X[row] = net_mod.build_input(norm, feats, s.task.q_start, s.task.q_goal)
        Y[row] = net_mod.path_to_delta(s.label).ravel()
    return ids, X, Y


def train_network(config: Config, dataset: ds.Dataset, cache: ds.WorldCache,
                  robot, bps, sample_weights=None, epochs=None, init_seed=None):
    """Fresh network trained on the current dataset state."""
    norm = net_mod.Normalization(robot.limits.copy(), robot.reach)
    net = net_mod.Mlp(bps.n_points + 2 * robot.n_dof,
                      (config.n_t - 2) * robot.n_dof,
                      blocks=tuple(tuple(b) for b in config.net.blocks),
                      activation=config.net.activation,
                      seed=config.net.init_seed if init_seed is None else init_seed)
    ckpt = net_mod.Checkpoint(net, bps, robot.name, norm, config.n_t, robot.n_dof)
    ids, X, Y = training_matrices(dataset, cache, (config.n_t, robot.n_dof), bps, norm)
    weights = None
    if sample_weights is not None:
        weights = np.asarray(sample_weights, dtype=np.float64)
        if weights.shape != (len(ids),):
            raise DataError("sample weight vector does not match the train split")
    t0 = time.perf_counter()
    history = net_mod.train(net, X, Y, config.training.params(epochs=epochs), weights)
    log.info("train: %d samples, %d params, %d epochs, loss %.3e -> %.3e (%.1fs)",
             len(ids), net.n_params, len(history), history[0], history[-1],
             time.perf_counter() - t0)
    return ckpt, history


def improvement_rounds(config: Config, dataset: ds.Dataset, cache: ds.WorldCache,
                       robot, ckpt0, phi_eval=True):
    """Clean / boost / extend / retrain cycles; returns per-round records."""
    obj_params = config.objective.params()
    refine_descent = config.descent.params()
    bench_descent = config.descent.params(max_iters=config.bench.max_iters)
    params = hard_sample_params(config)
    records = []
    ckpt = ckpt0

    def phi_of(c):
        if not phi_eval:
            return None
        return bench_mod.evaluate_network_phi(dataset, cache, robot, c,
                                              obj_params, bench_descent)

    phi0 = phi_of(ckpt)
    records.append({"round": 0, "phi": phi0,
                    "mean_label_objective": ds.stats(dataset)["mean_label_objective"]})
    log.info("round 0: phi=%s", phi0)
    for r in range(1, config.rounds.clean_rounds + 1):
        # One prediction+descent pass feeds both the relabeling and the
        # hardness weights for this round.
        refined = ds.refine_predictions(dataset, cache, robot, ckpt, obj_params,
                                        refine_descent)
        rep_clean = ds.clean(dataset, cache, robot, ckpt, obj_params,
                             refine_descent, refined=refined)
        weights = None
        if config.rounds.use_boost:
            weights = ds.boost_weights(dataset, cache, robot, ckpt, obj_params,
                                       refine_descent, beta=config.rounds.boost_beta,
                                       refined=refined)
        rep_extend = None
        if r == config.rounds.clean_rounds and config.rounds.extend_budget > 0:
            stream = ds.candidate_tasks(dataset, cache, robot, seed=config.seed + r)
            capped = (t for t, _ in zip(stream, range(config.rounds.extend_scan_cap)))
            rep_extend = ds.extend(dataset, cache, robot, ckpt, capped,
                                   config.rounds.extend_budget, params,
                                   seed=config.seed + r)
            if rep_extend["added"] and weights is not None:
                weights = np.concatenate([weights, np.ones(rep_extend["added"])])
        ckpt, history = train_network(config, dataset, cache, robot, ckpt.bps,
                                      sample_weights=weights,
                                      epochs=config.rounds.retrain_epochs)
        phi_r = phi_of(ckpt)
        records.append({"round": r, "phi": phi_r, "clean": rep_clean,
                        "extend": rep_extend,
                        "mean_label_objective": ds.stats(dataset)["mean_label_objective"],
                        "final_loss": history[-1]})
        log.info("round %d: phi=%s clean=%s extend=%s", r, phi_r, rep_clean, rep_extend)
    return ckpt, records


def stage_bench(config: Config, dataset: ds.Dataset, cache: ds.WorldCache, robot,
                ckpt, outdir: Path) -> bench_mod.EvalReport:
    outdir.mkdir(parents=True, exist_ok=True)
    report = bench_mod.run_benchmark(
        dataset, cache, robot, ckpt, config.objective.params(),
        config.descent.params(max_iters=config.bench.max_iters),
        config.bench.n_starts, config.seed, fingerprint(config))
    bench_mod.write_rows_csv(outdir / "rows.csv", report)
    bench_mod.write_curves_csv(outdir / "curves.csv", report)
    bench_mod.write_histogram_csv(outdir / "histogram.csv", report)
    bench_mod.write_manifest(outdir / "manifest.json", report)
    with open(outdir / "timings.json", "w") as fh:
        json.dump({k: round(v, 3) for k, v in report.wall_time.items()}, fh, indent=2)
        fh.write("\n")
    report_mod.render_benchmark(outdir, report)
    log.info("bench: %s tasks, phi_final=%s", report.n_tasks,
             {k: round(float(v[-1]), 4) for k, v in report.phi.items()})
    return report


def run_pipeline(config: Config, outdir: Path) -> dict:
    """The whole flow; writes every artifact under ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    robot = robots_mod.load_robot(config.robot)
    t_start = time.perf_counter()

    worlds, splits = stage_worldgen(config, outdir / "worlds", robot)
    dataset, cache = stage_dataset(config, worlds, splits, robot)
    ds.save_dataset(outdir / "dataset.bpd", dataset, robot.n_dof)

    bps = build_bps(config, robot)
    ckpt0, history0 = train_network(config, dataset, cache, robot, bps)
    net_mod.save_checkpoint(outdir / "net_round0.bpn", ckpt0)

    ckpt, records = improvement_rounds(config, dataset, cache, robot, ckpt0)
    ds.save_dataset(outdir / "dataset_final.bpd", dataset, robot.n_dof)
    net_mod.save_checkpoint(outdir / "net.bpn", ckpt)

    report = stage_bench(config, dataset, cache, robot, ckpt, outdir / "bench")

    manifest = {
        "config_fingerprint": fingerprint(config),
        "config": asdict(config),
        "rounds": records,
        "phi_final": {k: float(v[-1]) for k, v in report.phi.items()},
        "n_train_samples": len(dataset.sample_indices("train")),
        "n_test_samples": len(dataset.sample_indices("test")),
    }
    with open(outdir / "pipeline.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    log.info("pipeline done in %.1f min", (time.perf_counter() - t_start) / 60)
    return manifest


def run_bps_size_study(config: Config, dataset: ds.Dataset, cache: ds.WorldCache,
                       robot, sizes, outdir: Path, epochs: int | None = None) -> list:
    """Train one network per encoding size under an identical budget."""
    import csv

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    obj_params = config.objective.params()
    bench_descent = config.descent.params(max_iters=config.bench.max_iters)
    results = []
    for size in sizes:
        bps = bps_mod.generate_hex_bps(robot.reach_center, robot.reach, size,
                                       robot.dim, strict=False)
        cache_fresh = ds.WorldCache(dataset.worlds)  # feature cache is per-bps
        ckpt, _ = train_network(config, dataset, cache_fresh, robot, bps,
                                epochs=epochs)
        phi = bench_mod.evaluate_network_phi(dataset, cache_fresh, robot, ckpt,
                                             obj_params, bench_descent)
        results.append((int(bps.n_points), float(phi)))
        log.info("bps-study: size %d -> phi %.3f", bps.n_points, phi)
    with open(outdir / "bps_study.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_basis_points", "phi"])
        for size, phi in results:
            w.writerow([size, repr(phi)])
    fig = report_mod.bps_size_figure([r[0] for r in results], [r[1] for r in results])
    report_mod.save_figure(fig, outdir / "bps_study.svg")
    return results
