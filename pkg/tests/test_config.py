"""Config parsing, validation, and round-tripping."""

import pytest

from rgpe.config import RunConfig, parse_config, write_config


def _write(tmp_path, text):
    p = tmp_path / "run.cfg"
    p.write_text(text)
    return str(p)


def test_parse_minimal(tmp_path):
    cfg = parse_config(_write(tmp_path, """\
[run]
theta = 10
n_steps = 128
method = bbk+rkn116
"""))
    assert cfg.theta == 10.0
    assert cfg.n_steps == 128
    assert cfg.method == "bbk+rkn116"
    # untouched keys keep the benchmark defaults
    assert cfg.dim == 2 and cfg.sizes == (64, 64)
    assert cfg.gammas == (0.8, 1.2) and cfg.omega == 0.5


def test_parse_lists_with_commas_or_spaces(tmp_path):
    cfg = parse_config(_write(tmp_path, """\
[run]
dim = 3
half_widths = 8, 8, 12
sizes = 32 32 64
gammas = 0.8, 1.2, 1.0
gaussian_weights = 1.1 0.9 1.0
"""))
    assert cfg.half_widths == (8.0, 8.0, 12.0)
    assert cfg.sizes == (32, 32, 64)


def test_unknown_key_is_named_in_error(tmp_path):
    with pytest.raises(ValueError, match="timestep"):
        parse_config(_write(tmp_path, "[run]\ntimestep = 0.1\n"))


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        parse_config("/nonexistent/run.cfg")


def test_wrong_section(tmp_path):
    with pytest.raises(ValueError, match="run"):
        parse_config(_write(tmp_path, "[simulation]\ntheta = 1\n"))


def test_dimension_mismatch_rejected(tmp_path):
    with pytest.raises(ValueError, match="gammas"):
        parse_config(_write(tmp_path, "[run]\ngammas = 0.8, 1.2, 1.0\n"))


def test_roundtrip(tmp_path):
    cfg = RunConfig(theta=10.0, n_steps=500, method="cf4+rkn74",
                    snapshot_times=(1.0, 2.0), out_dir="out")
    path = str(tmp_path / "echo.cfg")
    write_config(cfg, path)
    assert parse_config(path) == cfg


def test_with_overrides_to_3d_fills_defaults():
    cfg = RunConfig().with_overrides(dim=3)
    assert cfg.dim == 3
    assert cfg.sizes == (64, 64, 64)
    assert cfg.gammas == (0.8, 1.2, 1.0)
    with pytest.raises(ValueError, match="fewer dimensions"):
        cfg.with_overrides(dim=2)


def test_with_overrides_ignores_none():
    cfg = RunConfig().with_overrides(theta=None, n_steps=64)
    assert cfg.theta == 1.0 and cfg.n_steps == 64


@pytest.mark.parametrize("kw,match", [
    (dict(t_final=0.0), "t_final"),
    (dict(n_steps=0), "n_steps"),
    (dict(reference_factor=2), "reference_factor"),
    (dict(workers=-1), "workers"),
    (dict(method="cf8+magic"), "unknown method"),
    (dict(gammas=(0.8, -1.2)), "positive"),
    (dict(stepsizes=(0.1, -0.2)), "stepsizes"),
    (dict(snapshot_times=(9.0,)), "snapshot"),
    (dict(initial_state="soliton"), "initial_state"),
    (dict(dim=4), "dim"),
])
def test_validate_rejects(kw, match):
    with pytest.raises(ValueError, match=match):
        RunConfig(**kw).validate()


def test_vortex_requires_2d():
    with pytest.raises(ValueError, match="vortex"):
        RunConfig(initial_state="vortex").with_overrides(dim=3)


def test_build_produces_consistent_objects():
    grid, trap, field = RunConfig(initial_state="vortex", theta=100.0).build()
    assert grid.dim == 2 and trap.dim == 2
    assert field.frame == "rotating" and field.time == 0.0
    assert field.norm() == pytest.approx(1.0, abs=1e-10)
