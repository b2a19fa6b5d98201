"""Command-line front end.

Subcommands: worldgen, dataset gen|augment|clean|boost|extend|verify|stats,
train, eval, bench, bps-study, plot, pipeline.  Every subcommand accepts
--config FILE plus repeated --set key.path=value overrides; unknown keys or
flags are rejected.  Exit codes: 0 ok, 1 usage or configuration error,
2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import dataset as ds
from . import net as net_mod
from . import pipeline as pipe
from . import report as report_mod
from . import robots as robots_mod
from . import worlds as worlds_mod
from .config import Config, load_config
from .errors import ConfigError, DataError, NumericError

log = logging.getLogger("bpsplan")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _common(parser):
    parser.add_argument("--config", help="YAML config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY.PATH=VALUE", help="override a config entry")


def build_parser() -> _Parser:
    p = _Parser(prog="bpsplan", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    w = sub.add_parser("worldgen", help="generate filtered obstacle worlds")
    _common(w)
    w.add_argument("--seed", type=int)
    w.add_argument("--count", type=int)
    w.add_argument("--threshold", type=float)
    w.add_argument("--frequency", type=float)
    w.add_argument("--out", required=True)

    d = sub.add_parser("dataset", help="experience store operations")
    dsub = d.add_subparsers(dest="action", required=True)

    g = dsub.add_parser("gen", help="generate hard samples over a world set")
    _common(g)
    g.add_argument("--worlds", required=True, help="directory from `worldgen`")
    g.add_argument("--out", required=True)

    a = dsub.add_parser("augment", help="temporal/spatial symmetry augmentation")
    _common(a)
    a.add_argument("--dataset", required=True)
    a.add_argument("--out", required=True)

    for name, needs_net in (("clean", True), ("boost", True), ("extend", True)):
        sp = dsub.add_parser(name, help=f"{name} the dataset with a trained network")
        _common(sp)
        sp.add_argument("--dataset", required=True)
        sp.add_argument("--net", required=True)
        sp.add_argument("--out", required=True)
        if name == "extend":
            sp.add_argument("--budget", type=int, default=None)

    v = dsub.add_parser("verify", help="check every sample invariant")
    _common(v)
    v.add_argument("--dataset", required=True)
    v.add_argument("--check-hardness", action="store_true")

    st = dsub.add_parser("stats", help="print dataset statistics")
    _common(st)
    st.add_argument("--dataset", required=True)

    t = sub.add_parser("train", help="train the path prediction network")
    _common(t)
    t.add_argument("--dataset", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--use-boost", action="store_true",
                   help="weight samples by their stored hardness")
    t.add_argument("--epochs", type=int)

    e = sub.add_parser("eval", help="feasibility rate of a checkpoint on a test set")
    _common(e)
    e.add_argument("--dataset", required=True)
    e.add_argument("--net", required=True)

    b = sub.add_parser("bench", help="full warm-start benchmark with reports")
    _common(b)
    b.add_argument("--dataset", required=True)
    b.add_argument("--net", required=True)
    b.add_argument("--out", required=True)

    s = sub.add_parser("bps-study", help="feasibility versus encoding size")
    _common(s)
    s.add_argument("--dataset", required=True)
    s.add_argument("--sizes", required=True, help="comma-separated point counts")
    s.add_argument("--out", required=True)
    s.add_argument("--epochs", type=int)

    pl = sub.add_parser("plot", help="re-render figures from report CSVs")
    _common(pl)
    pl.add_argument("--dir", required=True)

    pp = sub.add_parser("pipeline", help="run every stage end to end")
    _common(pp)
    pp.add_argument("--out", required=True)

    return p


def _config_of(args, extra: list[str] | None = None) -> Config:
    overrides = list(args.overrides) + (extra or [])
    return load_config(args.config, overrides)


def _load_dataset_and_robot(path):
    dataset, n_dof = ds.load_dataset(path)
    robot = robots_mod.load_robot(dataset.robot_name)
    if robot.n_dof != n_dof:
        raise DataError(f"{path}: file says {n_dof} joints, robot model has {robot.n_dof}")
    return dataset, ds.WorldCache(dataset.worlds), robot


def _load_checkpoint_for(dataset, path):
    ckpt = net_mod.load_checkpoint(path)
    if ckpt.robot_name != dataset.robot_name:
        raise DataError(f"checkpoint robot {ckpt.robot_name!r} does not match "
                        f"dataset robot {dataset.robot_name!r}")
    return ckpt


def cmd_worldgen(args) -> int:
    extra = []
    if args.seed is not None:
        extra.append(f"seed={args.seed}")
    if args.count is not None:
        extra.append(f"world.count={args.count}")
    if args.threshold is not None:
        extra.append(f"world.threshold={args.threshold}")
    if args.frequency is not None:
        extra.append(f"world.frequency={args.frequency}")
    config = _config_of(args, extra)
    pipe.stage_worldgen(config, Path(args.out))
    return 0


def _worlds_from_dir(path: Path):
    index_file = path / "index.json"
    if not index_file.exists():
        raise DataError(f"{path}: no index.json (not a worldgen output directory)")
    with open(index_file) as fh:
        index = json.load(fh)
    worlds, splits = [], []
    for entry in index["worlds"]:
        _, _, spec = worlds_mod.load_world(path / entry["file"])
        if spec is None:
            raise DataError(f"{entry['file']}: world file carries no spec record")
        worlds.append(spec)
        splits.append(entry["split"])
    return worlds, splits


def cmd_dataset(args) -> int:
    config = _config_of(args)
    if args.action == "gen":
        worlds, splits = _worlds_from_dir(Path(args.worlds))
        robot = robots_mod.load_robot(config.robot)
        dataset, _ = pipe.stage_dataset(config, worlds, splits, robot, augment=False)
        ds.save_dataset(args.out, dataset, robot.n_dof)
        return 0

    dataset, cache, robot = _load_dataset_and_robot(args.dataset)
    params = pipe.hard_sample_params(config)
    if args.action == "augment":
        report = ds.augment_dataset(dataset, cache, robot,
                                    temporal=config.data.temporal_augment,
                                    rotations=tuple(config.data.rotations))
        print(json.dumps(report))
        ds.save_dataset(args.out, dataset, robot.n_dof)
    elif args.action == "clean":
        ckpt = _load_checkpoint_for(dataset, args.net)
        report = ds.clean(dataset, cache, robot, ckpt, config.objective.params(),
                          config.descent.params())
        print(json.dumps(report))
        ds.save_dataset(args.out, dataset, robot.n_dof)
    elif args.action == "boost":
        ckpt = _load_checkpoint_for(dataset, args.net)
        ds.boost_weights(dataset, cache, robot, ckpt, config.objective.params(),
                         config.descent.params(), beta=config.rounds.boost_beta)
        ds.save_dataset(args.out, dataset, robot.n_dof)
        print(json.dumps({"hardness_written": len(dataset.sample_indices('train'))}))
    elif args.action == "extend":
        ckpt = _load_checkpoint_for(dataset, args.net)
        budget = args.budget if args.budget is not None else config.rounds.extend_budget
        stream = ds.candidate_tasks(dataset, cache, robot, seed=config.seed + 1)
        capped = (t for t, _ in zip(stream, range(config.rounds.extend_scan_cap)))
        report = ds.extend(dataset, cache, robot, ckpt, capped, budget, params,
                           seed=config.seed + 1)
        print(json.dumps(report))
        ds.save_dataset(args.out, dataset, robot.n_dof)
    elif args.action == "verify":
        problems = ds.verify(dataset, cache, robot,
                             check_hardness=args.check_hardness, params=params)
        if problems:
            for idx, reason in problems:
                print(f"sample {idx}: {reason}", file=sys.stderr)
            raise DataError(f"{len(problems)} invariant violations "
                            f"(first at sample {problems[0][0]})")
        print(f"ok: {len(dataset.samples)} samples verified")
    elif args.action == "stats":
        print(json.dumps(ds.stats(dataset), indent=2, sort_keys=True))
    return 0


def cmd_train(args) -> int:
    config = _config_of(args)
    dataset, cache, robot = _load_dataset_and_robot(args.dataset)
    bps = pipe.build_bps(config, robot)
    weights = None
    if args.use_boost:
        ids = dataset.sample_indices("train")
        hardness = np.array([dataset.samples[i].hardness for i in ids])
        if hardness.mean() > 0:
            weights = 1.0 + config.rounds.boost_beta * hardness / hardness.mean()
            weights /= weights.mean()
    ckpt, history = pipe.train_network(config, dataset, cache, robot, bps,
                                       sample_weights=weights, epochs=args.epochs)
    net_mod.save_checkpoint(args.out, ckpt)
    print(json.dumps({"epochs": len(history), "final_loss": history[-1],
                      "n_params": ckpt.net.n_params}))
    return 0


def cmd_eval(args) -> int:
    config = _config_of(args)
    dataset, cache, robot = _load_dataset_and_robot(args.dataset)
    ckpt = _load_checkpoint_for(dataset, args.net)
    phi = bench_mod.evaluate_network_phi(
        dataset, cache, robot, ckpt, config.objective.params(),
        config.descent.params(max_iters=config.bench.max_iters))
    print(json.dumps({"phi_network": phi, "budget": config.bench.max_iters,
                      "n_tasks": len(dataset.sample_indices("test"))}))
    return 0


def cmd_bench(args) -> int:
    config = _config_of(args)
    dataset, cache, robot = _load_dataset_and_robot(args.dataset)
    ckpt = _load_checkpoint_for(dataset, args.net)
    report = pipe.stage_bench(config, dataset, cache, robot, ckpt, Path(args.out))
    print(json.dumps({k: float(v[-1]) for k, v in report.phi.items()}))
    return 0


def cmd_bps_study(args) -> int:
    config = _config_of(args)
    dataset, cache, robot = _load_dataset_and_robot(args.dataset)
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
    except ValueError as exc:
        raise ConfigError(f"--sizes must be comma-separated integers: {exc}") from exc
    results = pipe.run_bps_size_study(config, dataset, cache, robot, sizes,
                                      Path(args.out), epochs=args.epochs)
    print(json.dumps(results))
    return 0


def cmd_plot(args) -> int:
    outdir = Path(args.dir)
    rendered = []
    curves_file = outdir / "curves.csv"
    if curves_file.exists():
        with open(curves_file, newline="") as fh:
            rows = list(csv.reader(fh))
        header, data = rows[0], np.array(rows[1:], dtype=np.float64)
        budgets = data[:, 0].astype(int)
        phi = {name[len("phi_"):]: data[:, i]
               for i, name in enumerate(header) if name.startswith("phi_")}
        report_mod.save_figure(report_mod.convergence_figure(budgets, phi),
                               outdir / "convergence.svg")
        rendered.append("convergence.svg")
    hist_file = outdir / "histogram.csv"
    if hist_file.exists():
        with open(hist_file, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        fractions = np.array([float(r[1]) for r in rows])
        report_mod.save_figure(report_mod.multistart_histogram(fractions),
                               outdir / "multistart_histogram.svg")
        rendered.append("multistart_histogram.svg")
    study_file = outdir / "bps_study.csv"
    if study_file.exists():
        with open(study_file, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        sizes = [int(r[0]) for r in rows]
        phis = [float(r[1]) for r in rows]
        report_mod.save_figure(report_mod.bps_size_figure(sizes, phis),
                               outdir / "bps_study.svg")
        rendered.append("bps_study.svg")
    if not rendered:
        raise DataError(f"{outdir}: no report CSVs found to plot")
    print(json.dumps({"rendered": rendered}))
    return 0


def cmd_pipeline(args) -> int:
    config = _config_of(args)
    manifest = pipe.run_pipeline(config, Path(args.out))
    print(json.dumps({"phi_final": manifest["phi_final"],
                      "config_fingerprint": manifest["config_fingerprint"]}))
    return 0


_HANDLERS = {
    "worldgen": cmd_worldgen,
    "dataset": cmd_dataset,
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "bps-study": cmd_bps_study,
    "plot": cmd_plot,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
