import pytest

from lenscue.config import ConfigError, PipelineConfig, load_config
from lenscue.records import AwarenessWeights

FULL = """
[providers]
detections = "dets.jsonl"
landmarks = "lms.jsonl"

[weights]
w_r = -0.1
w_e = 0.6
w_s = -0.9
c = 0.05

[gaze]
tau_r_deg = 12.0

[scoring]
aggregation = "min"

[blur]
kernel_size = 7
sigma = 4.5

[augment]
rotation_deg = [10.0, 20.0]
brightness = [0.5, 0.5]
flip_vertical = false
per_image = 3

[run]
seed = 42
out_dir = "results"
workers = 4
emit_annotated = true
"""


def _write(tmp_path, text, with_files=True):
    if with_files:
        (tmp_path / "dets.jsonl").write_text("", encoding="utf-8")
        (tmp_path / "lms.jsonl").write_text("", encoding="utf-8")
    path = tmp_path / "run.toml"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults_from_empty_file(tmp_path):
    config = load_config(_write(tmp_path, "", with_files=False))
    assert config == PipelineConfig()
    assert config.aggregation == "poi"
    assert config.blur.kernel_size == 25
    assert config.ranges.rotation_deg == (0.0, 90.0)
    assert config.workers == 1


def test_full_file_parses(tmp_path):
    config = load_config(_write(tmp_path, FULL))
    assert config.detections_path == tmp_path / "dets.jsonl"
    assert config.landmarks_path == tmp_path / "lms.jsonl"
    assert config.weights == AwarenessWeights(w_r=-0.1, w_e=0.6, w_s=-0.9, bias_c=0.05)
    assert config.gaze.tau_r_deg == 12.0
    assert config.aggregation == "min"
    assert config.blur.kernel_size == 7 and config.blur.sigma == 4.5
    assert config.ranges.rotation_deg == (10.0, 20.0)
    assert config.ranges.brightness == (0.5, 0.5)
    assert config.ranges.flip_vertical is False
    assert config.ranges.flip_horizontal is True
    assert config.per_image == 3
    assert config.seed == 42
    assert config.out_dir == tmp_path / "results"
    assert config.workers == 4
    assert config.emit_annotated is True


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.toml")


def test_invalid_toml(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[run\nseed = 1\n", with_files=False))


def test_unknown_section_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(_write(tmp_path, "[blurr]\nkernel_size = 7\n", with_files=False))


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(_write(tmp_path, "[run]\nseeed = 1\n", with_files=False))


def test_missing_provider_file_rejected(tmp_path):
    text = '[providers]\ndetections = "absent.jsonl"\n'
    with pytest.raises(ConfigError, match="no such file"):
        load_config(_write(tmp_path, text, with_files=False))


def test_weights_path_and_inline_conflict(tmp_path):
    (tmp_path / "w.txt").write_text(
        "w_r = 0.1\nw_e = 0.2\nw_s = 0.3\nc = 0.4\ntau_r_deg = 10.0\n", encoding="utf-8"
    )
    text = '[weights]\npath = "w.txt"\nw_r = 0.5\n'
    with pytest.raises(ConfigError, match="mutually exclusive"):
        load_config(_write(tmp_path, text, with_files=False))


def test_weights_inline_requires_all_keys(tmp_path):
    with pytest.raises(ConfigError, match="missing key"):
        load_config(_write(tmp_path, "[weights]\nw_r = 0.5\n", with_files=False))


def test_weights_file_loaded_with_tau(tmp_path):
    (tmp_path / "w.txt").write_text(
        "w_r = 0.1\nw_e = 0.2\nw_s = 0.3\nc = 0.4\ntau_r_deg = 22.5\n", encoding="utf-8"
    )
    config = load_config(_write(tmp_path, '[weights]\npath = "w.txt"\n', with_files=False))
    assert config.weights == AwarenessWeights(w_r=0.1, w_e=0.2, w_s=0.3, bias_c=0.4)
    assert config.gaze.tau_r_deg == 22.5


def test_explicit_gaze_overrides_weights_file_tau(tmp_path):
    (tmp_path / "w.txt").write_text(
        "w_r = 0.1\nw_e = 0.2\nw_s = 0.3\nc = 0.4\ntau_r_deg = 22.5\n", encoding="utf-8"
    )
    text = '[weights]\npath = "w.txt"\n\n[gaze]\ntau_r_deg = 5.0\n'
    config = load_config(_write(tmp_path, text, with_files=False))
    assert config.gaze.tau_r_deg == 5.0


def test_invalid_aggregation_rejected(tmp_path):
    with pytest.raises(ConfigError, match="aggregation"):
        load_config(_write(tmp_path, '[scoring]\naggregation = "median"\n', with_files=False))


def test_invalid_blur_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[blur]\nkernel_size = 4\n", with_files=False))


def test_bad_range_pair_rejected(tmp_path):
    with pytest.raises(ConfigError, match="pair"):
        load_config(_write(tmp_path, "[augment]\nscale = [0.5]\n", with_files=False))


def test_workers_must_be_positive(tmp_path):
    with pytest.raises(ConfigError, match="workers"):
        load_config(_write(tmp_path, "[run]\nworkers = 0\n", with_files=False))


def test_relative_paths_resolve_against_config_dir(tmp_path):
    sub = tmp_path / "nested"
    sub.mkdir()
    (sub / "dets.jsonl").write_text("", encoding="utf-8")
    path = sub / "run.toml"
    path.write_text('[providers]\ndetections = "dets.jsonl"\n', encoding="utf-8")
    config = load_config(path)
    assert config.detections_path == sub / "dets.jsonl"


def test_pipeline_config_validates_directly():
    with pytest.raises(ConfigError):
        PipelineConfig(aggregation="sum")
    with pytest.raises(ConfigError):
        PipelineConfig(per_image=-1)
