# tests/test_config.py
import pytest

from qssmix.core import ConfigError
from qssmix.harness.config import ExperimentConfig


def test_defaults_validate():
    config = ExperimentConfig()
    config.validate()
    assert config.family == "snake"
    assert config.epsilons == (0.1, 0.01, 0.001, 0.0001)


def test_text_round_trip():
    config = ExperimentConfig(epsilons=(0.05, 0.005), m_range=(1,), threads=3)
    assert ExperimentConfig.from_text(config.to_text()) == config
    assert ExperimentConfig.from_text(ExperimentConfig().to_text()) == ExperimentConfig()


def test_parse_comments_lists_and_params():
    text = """
    # coarse run
    family = rotating_circle
    epsilons = 0.05, 0.005   # two values
    m_range = 1
    family_params = radius: 0.2; rate: 1
    output = results
    """
    config = ExperimentConfig.from_text(text)
    assert config.family == "rotating_circle"
    assert config.epsilons == (0.05, 0.005)
    assert config.m_range == (1,)
    assert config.family_params == {"radius": 0.2, "rate": 1.0}
    assert config.output == "results"


@pytest.mark.parametrize("text, field", [
    ("epsilons =", "epsilons"),
    ("epsilons = 0.5", "epsilons"),
    ("colour = red", "colour"),
    ("just words", "line 1"),
    ("n_max = many", "n_max"),
    ("n_max = 9", "n_max"),
    ("m_range = 0, 1", "m_range"),
    ("alphas = 1.0", "alphas"),
    ("tol_energy = 0", "tol_energy"),
    ("tol_norm = 0", "tol_norm"),
    ("supersample = 0", "supersample"),
    ("dissipation_resolution = 120", "dissipation_resolution"),
    ("family = spiral", "family"),
    ("slope_low = 1.2", "slope_low"),
    ("threads = 0", "threads"),
])
def test_bad_values_name_their_field(text, field):
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_text(text)
    assert info.value.field == field
    assert str(info.value).startswith(field)


def test_load(tmp_path):
    path = tmp_path / "lab.cfg"
    path.write_text("seed = 11\nthreads = 2\n")
    config = ExperimentConfig.load(path)
    assert config.seed == 11 and config.threads == 2
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.load(tmp_path / "missing.cfg")
    assert info.value.field == "config"


def test_override_skips_unset_values():
    config = ExperimentConfig(seed=5).override(seed=None, threads=4, output="elsewhere")
    assert config.seed == 5
    assert config.threads == 4
    assert config.output == "elsewhere"
    with pytest.raises(ConfigError):
        config.override(n_max=99)
