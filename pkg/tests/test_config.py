import pytest

from sd_spectral.config import (
    SCHEMA,
    InitialDataSpec,
    ScenarioConfig,
    config_to_text,
    load_config,
    parse_config_text,
    parse_spec,
)
from sd_spectral.errors import ConfigError


class TestSpec:
    def test_bare_kind(self):
        assert parse_spec("debye_equilibrium") == InitialDataSpec("debye_equilibrium")

    def test_arguments(self):
        s = parse_spec("gaussian(amplitude=0.5, width=2, center=[1.0, -1.0])")
        assert s.get("amplitude") == 0.5
        assert s.get("center") == (1.0, -1.0)

    def test_defaults(self):
        assert parse_spec("gaussian(amplitude=2)").get("width") == 1.0

    def test_file_path_left_bare(self):
        assert parse_spec("from_file(path=runs/a/u.snap)").get("path") == "runs/a/u.snap"

    @pytest.mark.parametrize("text", [
        "gaussian(amplitude=0.5, width=2.0, center=(1.0, -1.0))",
        "mode(k=[1, 2], amplitude=0.3)",
        "random_bandlimited(seed=4, cutoff=1.5, amplitude=0.2)",
        "zero",
    ])
    def test_str_round_trip(self, text):
        s = parse_spec(text)
        assert parse_spec(str(s)) == s

    @pytest.mark.parametrize("text", ["bogus", "gaussian(sigma=1)", "gaussian(1.0)", "Gaussian"])
    def test_rejected(self, text):
        with pytest.raises(ConfigError):
            parse_spec(text)


class TestFile:
    def test_comments_and_blank_lines(self):
        raw = parse_config_text("# header\n\ngrid.points = 64\n  params.mu = 0.5  \n")
        assert raw == {"grid.points": "64", "params.mu": "0.5"}

    @pytest.mark.parametrize("text,match", [
        ("grid.pionts = 64\n", "unknown key"),
        ("grid.points = 64\ngrid.points = 32\n", "duplicate key"),
        ("grid.points 64\n", "expected"),
    ])
    def test_malformed(self, text, match):
        with pytest.raises(ConfigError, match=match):
            parse_config_text(text)

    def test_schema_covers_every_field(self):
        attrs = {attr for attr, _, _ in SCHEMA.values()}
        assert attrs == set(ScenarioConfig.__dataclass_fields__)


class TestLayering:
    def test_defaults(self):
        cfg = load_config()
        assert cfg == ScenarioConfig()

    def test_three_layers(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text("grid.points = 64\nparams.mu = 0.5\ntime.dt = 0.01\n")
        cfg = load_config(path, ["params.mu=0.25", "time.t_end = 2"])
        assert cfg.points == 64  # file over default
        assert cfg.mu == 0.25  # override over file
        assert cfg.t_end == 2.0  # override over default
        assert cfg.dt == 0.01
        assert cfg.extent == 20.0  # default

    def test_base_layer_sits_below_file(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text("params.mu = 0.5\n")
        cfg = load_config(path, base={"params.mu": 3, "grid.points": 32})
        assert cfg.mu == 0.5 and cfg.points == 32

    @pytest.mark.parametrize("override", [
        "grid.points=100", "grid.points=abc", "params.lambda=0", "params.lambda=0.5",
        "params.mu=-1", "time.dt=0", "time.dealias=maybe", "grid.dim=4",
        "initial.u=debye_equilibrium", "diagnostics.cadence=0", "nokey=1", "grid.points",
    ])
    def test_type_checked_overrides(self, override):
        with pytest.raises(ConfigError):
            load_config(overrides=[override])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.cfg")

    def test_text_round_trip(self, tmp_path):
        cfg = load_config(overrides=[
            "name=x", "seed=3", "grid.dim=1", "grid.points=32", "params.lambda=-1",
            "time.dealias=true", "diagnostics.beta=0.8", "output.snapshot_times=0, 0.5",
            "initial.u=gaussian(amplitude=0.3, width=2.0, center=[1.0])",
        ])
        path = tmp_path / "c.cfg"
        path.write_text(config_to_text(cfg))
        assert load_config(path) == cfg

    def test_beta_auto(self):
        assert load_config(overrides=["diagnostics.beta=auto"]).beta is None
