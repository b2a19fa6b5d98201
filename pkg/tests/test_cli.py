import json

import pytest

from bpsplan.cli import main
from bpsplan import dataset as ds


SMALL = [
    "--set", "world.count=6", "--set", "world.test_count=2",
    "--set", "data.n_train=8", "--set", "data.n_test=4",
    "--set", "net.blocks=[[32, 16]]", "--set", "bps.count=32",
    "--set", "training.epochs=10", "--set", "bench.n_starts=4",
    "--set", "bench.max_iters=20", "--set", "label.n_starts=48",
    "--set", "label.stop_after_feasible=2",
]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["worldgen", "--out", str(root / "worlds"), *SMALL]) == 0
    assert main(["dataset", "gen", "--worlds", str(root / "worlds"),
                 "--out", str(root / "data.bpd"), *SMALL]) == 0
    assert main(["train", "--dataset", str(root / "data.bpd"),
                 "--out", str(root / "net.bpn"), *SMALL]) == 0
    return root


class TestWorldgen:
    def test_outputs_exist_with_index(self, workdir):
        index = json.loads((workdir / "worlds" / "index.json").read_text())
        assert len(index["worlds"]) == 6
        assert sum(w["split"] == "test" for w in index["worlds"]) == 2
        assert "config_fingerprint" in index
        for entry in index["worlds"]:
            assert (workdir / "worlds" / entry["file"]).exists()

    def test_flag_overrides_apply(self, tmp_path):
        out = tmp_path / "w"
        assert main(["worldgen", "--out", str(out), "--seed", "9", "--count", "3",
                     "--threshold", "0.5", "--frequency", "3.0",
                     "--set", "world.test_count=1"]) == 0
        index = json.loads((out / "index.json").read_text())
        assert len(index["worlds"]) == 3
        assert index["threshold"] == 0.5
        assert index["worlds"][0]["seed"] >= 9

    def test_byte_identical_reruns(self, workdir, tmp_path):
        out = tmp_path / "again"
        assert main(["worldgen", "--out", str(out), *SMALL]) == 0
        for entry in json.loads((out / "index.json").read_text())["worlds"]:
            a = (workdir / "worlds" / entry["file"]).read_bytes()
            b = (out / entry["file"]).read_bytes()
            assert a == b


class TestDataset:
    def test_gen_deterministic(self, workdir, tmp_path):
        out = tmp_path / "data2.bpd"
        assert main(["dataset", "gen", "--worlds", str(workdir / "worlds"),
                     "--out", str(out), *SMALL]) == 0
        assert out.read_bytes() == (workdir / "data.bpd").read_bytes()

    def test_verify_ok(self, workdir):
        assert main(["dataset", "verify", "--dataset",
                     str(workdir / "data.bpd"), *SMALL]) == 0

    def test_verify_corrupted_exits_2(self, workdir, tmp_path, capsys):
        blob = bytearray((workdir / "data.bpd").read_bytes())
        blob[-20] ^= 0xFF  # flip a byte inside the last sample's label
        bad = tmp_path / "bad.bpd"
        bad.write_bytes(bytes(blob))
        code = main(["dataset", "verify", "--dataset", str(bad), *SMALL])
        assert code == 2
        err = capsys.readouterr().err
        assert "sample" in err

    def test_stats_prints_counts(self, workdir, capsys):
        assert main(["dataset", "stats", "--dataset",
                     str(workdir / "data.bpd"), *SMALL]) == 0
        info = json.loads(capsys.readouterr().out)
        assert info["n_samples"] >= 8
        assert info["worlds_per_split"] == {"train": 4, "test": 2}

    def test_augment_grows_dataset(self, workdir, tmp_path):
        out = tmp_path / "aug.bpd"
        assert main(["dataset", "augment", "--dataset", str(workdir / "data.bpd"),
                     "--out", str(out), *SMALL]) == 0
        before, _ = ds.load_dataset(workdir / "data.bpd")
        after, _ = ds.load_dataset(out)
        assert len(after.samples) > len(before.samples)
        assert main(["dataset", "verify", "--dataset", str(out), *SMALL]) == 0

    def test_clean_and_boost_roundtrip(self, workdir, tmp_path):
        cleaned = tmp_path / "clean.bpd"
        assert main(["dataset", "clean", "--dataset", str(workdir / "data.bpd"),
                     "--net", str(workdir / "net.bpn"), "--out", str(cleaned),
                     *SMALL]) == 0
        boosted = tmp_path / "boost.bpd"
        assert main(["dataset", "boost", "--dataset", str(cleaned),
                     "--net", str(workdir / "net.bpn"), "--out", str(boosted),
                     *SMALL]) == 0
        data, _ = ds.load_dataset(boosted)
        assert any(s.hardness > 0 for s in data.samples)


class TestTrainEvalBench:
    def test_eval_prints_phi(self, workdir, capsys):
        assert main(["eval", "--dataset", str(workdir / "data.bpd"),
                     "--net", str(workdir / "net.bpn"), *SMALL]) == 0
        out = json.loads(capsys.readouterr().out)
        assert 0.0 <= out["phi_network"] <= 1.0

    def test_bench_writes_reports_and_figures(self, workdir, capsys):
        out = workdir / "bench"
        assert main(["bench", "--dataset", str(workdir / "data.bpd"),
                     "--net", str(workdir / "net.bpn"), "--out", str(out),
                     *SMALL]) == 0
        for name in ("rows.csv", "curves.csv", "histogram.csv", "manifest.json",
                     "convergence.svg", "multistart_histogram.svg", "timings.json"):
            assert (out / name).exists(), name
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["required_multistarts_for_p10_c90"] == 22
        assert manifest["n_tasks"] == 4

    def test_bench_byte_identical_rerun(self, workdir, tmp_path):
        out2 = tmp_path / "bench2"
        assert main(["bench", "--dataset", str(workdir / "data.bpd"),
                     "--net", str(workdir / "net.bpn"), "--out", str(out2),
                     *SMALL]) == 0
        for name in ("rows.csv", "curves.csv", "histogram.csv", "manifest.json",
                     "convergence.svg"):
            assert (workdir / "bench" / name).read_bytes() == \
                (out2 / name).read_bytes(), name

    def test_plot_rerenders_from_csv(self, workdir, tmp_path, capsys):
        src = workdir / "bench"
        dst = tmp_path / "plotdir"
        dst.mkdir()
        for name in ("rows.csv", "curves.csv", "histogram.csv"):
            (dst / name).write_bytes((src / name).read_bytes())
        assert main(["plot", "--dir", str(dst)]) == 0
        assert (dst / "convergence.svg").read_bytes() == \
            (src / "convergence.svg").read_bytes()

    def test_bps_study_trains_per_size(self, workdir, tmp_path, capsys):
        out = tmp_path / "study"
        assert main(["bps-study", "--dataset", str(workdir / "data.bpd"),
                     "--sizes", "8,24", "--epochs", "5", "--out", str(out),
                     *SMALL]) == 0
        results = json.loads(capsys.readouterr().out)
        assert len(results) == 2
        assert (out / "bps_study.csv").exists()
        assert (out / "bps_study.svg").exists()

    def test_bps_study_bad_sizes_is_usage_error(self, workdir):
        assert main(["bps-study", "--dataset", str(workdir / "data.bpd"),
                     "--sizes", "8,oops", "--out", "x"]) == 1

    def test_missing_checkpoint_is_usage_error(self, workdir):
        assert main(["bench", "--dataset", str(workdir / "data.bpd"),
                     "--out", "x"]) == 1

    def test_unknown_config_key_rejected(self, workdir):
        assert main(["eval", "--dataset", str(workdir / "data.bpd"),
                     "--net", str(workdir / "net.bpn"),
                     "--set", "bogus.knob=1"]) == 1

    def test_missing_data_file_is_data_error(self, tmp_path):
        assert main(["dataset", "stats", "--dataset",
                     str(tmp_path / "nope.bpd")]) == 2
