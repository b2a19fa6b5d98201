import pytest

import bpsplan as bp
from bpsplan import config as cfg


class TestLoading:
    def test_defaults_without_file(self):
        config = cfg.load_config(None)
        assert config.robot == "sphere2"
        assert config.n_t == 20
        assert config.world.shape == (64, 64)

    def test_yaml_file(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text("seed: 42\nworld:\n  count: 10\n  threshold: 0.35\n")
        config = cfg.load_config(str(p))
        assert config.seed == 42
        assert config.world.count == 10
        assert config.world.threshold == 0.35
        assert config.world.frequency == 4.0  # untouched default

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text("wrold:\n  count: 10\n")
        with pytest.raises(bp.ConfigError, match="wrold"):
            cfg.load_config(str(p))

    def test_unknown_nested_key_rejected(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text("world:\n  coutn: 10\n")
        with pytest.raises(bp.ConfigError, match="world.*coutn|coutn"):
            cfg.load_config(str(p))

    def test_type_mismatch_rejected(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text("world:\n  count: lots\n")
        with pytest.raises(bp.ConfigError, match="world.count"):
            cfg.load_config(str(p))


class TestOverrides:
    def test_dotted_override(self):
        config = cfg.load_config(None, ["world.count=7", "training.epochs=3"])
        assert config.world.count == 7
        assert config.training.epochs == 3

    def test_override_list_value(self):
        config = cfg.load_config(None, ["net.blocks=[[32, 16]]"])
        assert config.net.blocks == ((32, 16),)

    def test_override_null(self):
        config = cfg.load_config(None, ["label.stop_after_feasible=null"])
        assert config.label.stop_after_feasible is None

    def test_bad_override_shape_rejected(self):
        with pytest.raises(bp.ConfigError):
            cfg.load_config(None, ["world.count"])

    def test_unknown_override_key_rejected(self):
        with pytest.raises(bp.ConfigError):
            cfg.load_config(None, ["world.nope=3"])


class TestFingerprint:
    def test_stable_and_sensitive(self):
        a = cfg.load_config(None)
        b = cfg.load_config(None)
        c = cfg.load_config(None, ["seed=1"])
        assert cfg.fingerprint(a) == cfg.fingerprint(b)
        assert cfg.fingerprint(a) != cfg.fingerprint(c)
        assert len(cfg.fingerprint(a)) == 16

    def test_params_builders(self):
        config = cfg.load_config(None, ["objective.lam=0.02", "descent.alpha=0.004"])
        assert config.objective.params().lam == 0.02
        assert config.descent.params().alpha == 0.004
        assert config.descent.params(max_iters=7).max_iters == 7
        assert config.label.descent.params().n_sub == 6
