"""Tests for presets and JSON run configurations."""

import json
import math

import pytest

from uwsounder.channel_sim import DelaySway, DopplerShift, PathSpec, RicianFading, Static
from uwsounder.config import (FINE_SOUNDING, SEA_TRIAL_GEOMETRIES, WIDE_SOUNDING,
                              config_from_dict, load_config, path_from_dict, path_to_dict,
                              preset, preset_names)
from uwsounder.errors import ConfigError


class TestPresets:
    @pytest.mark.parametrize("name", preset_names())
    def test_every_preset_builds(self, name):
        cfg = preset(name, seed=3)
        assert cfg.name == name and cfg.seed == 3
        assert cfg.channel is not None and len(cfg.channel.paths) >= 1

    def test_sea_trial_geometry(self):
        cfg = preset("trial-ch8")
        sep, depth = SEA_TRIAL_GEOMETRIES[8]
        assert cfg.geometry.range_m == sep and cfg.geometry.sea_depth == depth
        assert cfg.sounding == WIDE_SOUNDING.replace(duration=10.0)
        assert [p.label for p in cfg.channel.paths] == ["direct", "surface", "bottom",
                                                        "surface-bottom"]
        assert cfg.channel.paths[0].delay == pytest.approx(0.5e-3)
        assert preset("trial-ch8").channel.seed != preset("trial-ch9").channel.seed

    def test_unknown(self):
        for name in ("nope", "trial-ch99", "trial-chx"):
            with pytest.raises(ConfigError):
                preset(name)

    def test_with_seed(self):
        cfg = preset("default").with_seed(9)
        assert cfg.seed == 9 and cfg.channel.seed == 9


class TestPathDicts:
    @pytest.mark.parametrize("model", [Static(), DopplerShift(3.5), RicianFading(2.0, 1.5, seed=4),
                                       DelaySway(1e-5, 0.2)])
    def test_round_trip(self, model):
        p = PathSpec(1e-3, 0.3 - 0.4j, model, shape_filter=(0.5, 0.5), label="x")
        assert path_from_dict(json.loads(json.dumps(path_to_dict(p)))) == p

    @pytest.mark.parametrize("d", [{}, {"delay": 0.0, "doppler": {"model": "warp"}},
                                   {"delay": 0.0, "doppler": {"model": "shift", "speed": 1}},
                                   {"delay": 0.0, "gain": [1, 2, 3]},
                                   {"delay": 0.0, "colour": "red"}])
    def test_rejections(self, d):
        with pytest.raises(ConfigError):
            path_from_dict(d)


class TestConfigFromDict:
    def test_to_dict_round_trip(self):
        cfg = preset("default", seed=2)
        back = config_from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert back.sounding == cfg.sounding
        assert back.channel == cfg.channel
        assert back.processing == cfg.processing

    def test_overrides(self):
        cfg = config_from_dict({"preset": "two-path", "duration": 2.5, "snr_db": 12,
                                "zero_pad_factor": 8, "seed": 5})
        assert cfg.sounding == FINE_SOUNDING.replace(duration=2.5)
        assert cfg.channel.snr_db == 12.0 and cfg.channel.seed == 5
        assert cfg.processing.zero_pad_factor == 8

    def test_named_sounding_and_paths(self):
        cfg = config_from_dict({"sounding": "fine", "paths": [
            {"delay": 2e-3, "gain": 0.5}, {"delay": 1e-3}]})
        assert cfg.sounding.delta_f == 250.0
        assert [p.delay for p in cfg.channel.paths] == [1e-3, 2e-3]

    def test_geometry_builds_channel(self):
        cfg = config_from_dict({"range_m": 100.0, "sea_depth": 20.0})
        assert len(cfg.channel.paths) == 4

    @pytest.mark.parametrize("d", [[], {"bogus": 1}, {"sounding": "huge"},
                                   {"range_m": 100.0}, {"duration": math.inf}])
    def test_rejections(self, d):
        with pytest.raises(ConfigError):
            config_from_dict(d)

    def test_load_config(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"preset": "identity", "duration": 0.2}))
        assert load_config(p).sounding.duration == 0.2
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")
        p.write_text("[1,")
        with pytest.raises(ConfigError):
            load_config(p)
        p.write_text(json.dumps({"k1": 0}))
        with pytest.raises(ConfigError):
            load_config(p)
