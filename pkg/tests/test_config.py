"""
Tests for run configuration loading and process settings.
"""

import json
import math

import numpy as np
import pytest

from sgpde.config import Settings, get_settings
from sgpde.errors import InvalidConfigurationError
from sgpde.models.config import (
    TIME_SPACE_SIGMA,
    InitKind,
    Method,
    ProblemName,
    load_run_config,
    parse_run_config,
)
from sgpde.models.kernel import KernelType
from sgpde.problems import burgers, parabolic
from sgpde.solver.kernel_core import kernel_eval


@pytest.mark.parametrize(
    "problem,ratio,kernel_type,gamma",
    [
        ("elliptic", 0.75, KernelType.GAUSSIAN_ISO, 1e-12),
        ("burgers", 5.0 / 6.0, KernelType.GAUSSIAN_ANISO, 1e-6),
        ("parabolic", 6.0 / 7.0, KernelType.GAUSSIAN_ANISO, 1e-10),
        ("mfg", 1.0, KernelType.PERIODIC_EXP, 1e-10),
    ],
)
def test_problem_defaults(problem, ratio, kernel_type, gamma):
    """Test omitted fields fall back to per-problem defaults."""
    config = parse_run_config({"problem": problem, "N": 40, "M": 20})
    assert config.problem == ProblemName(problem)
    assert config.interior_ratio == pytest.approx(ratio)
    assert config.kernel.type == kernel_type
    assert config.gamma == gamma
    assert config.method == Method.SGP
    assert config.gn.max_iter == 20
    assert config.gn.step_tol == 1e-5


def test_burgers_default_lengthscales():
    """Test the anisotropic default kernel."""
    config = parse_run_config({"problem": "burgers", "N": 40, "M": 20})
    assert config.kernel.lengthscales == pytest.approx((0.3 / math.sqrt(2.0), 0.05 / math.sqrt(2.0)))
    assert config.nu == 0.02


@pytest.mark.parametrize("problem", ["burgers", "parabolic"])
def test_time_space_default_kernel_values(problem):
    """Test the default kernel is exp(-dt^2 / 0.3^2 - dx^2 / 0.05^2)."""
    kernel = parse_run_config({"problem": problem, "N": 40, "M": 20}).kernel
    x, y = np.array([0.4, 0.1]), np.array([0.25, 0.13])
    expected = math.exp(-(0.15**2) / 0.09 - (0.03**2) / 0.0025)
    assert kernel_eval(kernel, x, y) == pytest.approx(expected, rel=1e-12)


def test_problem_modules_share_the_time_space_default():
    """Test the library defaults match the run-configuration defaults."""
    assert burgers.DEFAULT_SIGMA == TIME_SPACE_SIGMA
    assert parabolic.DEFAULT_SIGMA == TIME_SPACE_SIGMA
    spec, _ = burgers.burgers_problem(12, 6)
    assert spec.kernel.lengthscales == pytest.approx(TIME_SPACE_SIGMA)


def test_explicit_values_override_defaults():
    """Test user values win over defaults."""
    config = parse_run_config(
        {
            "problem": "elliptic",
            "N": 40,
            "M": 20,
            "gamma": 1e-4,
            "kernel": {"type": "gaussian_iso", "sigma": 0.5, "dim": 2},
            "gn": {"tol": 1e-8, "max_iter": 3, "init": "normal"},
        }
    )
    assert config.gamma == 1e-4
    assert config.kernel.sigma == 0.5
    assert config.gn.step_tol == 1e-8
    assert config.gn.max_iter == 3
    assert config.gn.init == InitKind.NORMAL


def test_missing_problem_is_rejected():
    """Test a config without a problem raises."""
    with pytest.raises(InvalidConfigurationError):
        parse_run_config({"N": 40, "M": 20})


def test_unknown_field_is_rejected():
    """Test extra keys raise."""
    with pytest.raises(InvalidConfigurationError):
        parse_run_config({"problem": "elliptic", "N": 40, "M": 20, "colour": "blue"})


def test_more_inducing_than_collocation_points():
    """Test M > N raises."""
    with pytest.raises(InvalidConfigurationError):
        parse_run_config({"problem": "elliptic", "N": 20, "M": 40})


def test_full_interior_ratio_needs_torus():
    """Test interior_ratio = 1 is only valid for the periodic problem."""
    with pytest.raises(InvalidConfigurationError):
        parse_run_config({"problem": "elliptic", "N": 40, "M": 20, "interior_ratio": 1.0})


def test_periodic_kernel_rejected_for_time_dependent_problem():
    """Test burgers refuses the periodic kernel."""
    with pytest.raises(InvalidConfigurationError):
        parse_run_config(
            {"problem": "burgers", "N": 40, "M": 20, "kernel": {"type": "periodic_exp", "dim": 2}}
        )


def test_non_mapping_document():
    """Test a list document raises."""
    with pytest.raises(InvalidConfigurationError):
        parse_run_config([1, 2, 3])


def test_seed_list_and_sweep_points():
    """Test seeds and sweep fall back to the single seed and (N, M)."""
    config = parse_run_config({"problem": "elliptic", "N": 40, "M": 20, "seed": 3})
    assert config.seed_list == [3]
    assert [(p.n, p.m) for p in config.sweep_points] == [(40, 20)]

    sweep = parse_run_config(
        {
            "problem": "elliptic",
            "N": 40,
            "M": 20,
            "seeds": [2, 1],
            "sweep": [{"N": 40, "M": 10}, {"N": 80, "M": 20}],
        }
    )
    assert sweep.seed_list == [2, 1]
    assert [(p.n, p.m) for p in sweep.sweep_points] == [(40, 10), (80, 20)]


def test_empty_seed_list_is_rejected():
    """Test seeds must not be empty."""
    with pytest.raises(InvalidConfigurationError):
        parse_run_config({"problem": "elliptic", "N": 40, "M": 20, "seeds": []})


def test_hyperopt_grid():
    """Test range and explicit grids."""
    config = parse_run_config(
        {"problem": "elliptic", "N": 40, "M": 20, "hyperopt": {"low": 0.1, "high": 0.5, "step": 0.1}}
    )
    assert config.hyperopt.grid() == [0.1, 0.2, 0.3, 0.4, 0.5]

    explicit = parse_run_config(
        {"problem": "elliptic", "N": 40, "M": 20, "hyperopt": {"values": [0.3, 0.1, 0.3]}}
    )
    assert explicit.hyperopt.grid() == [0.1, 0.3]

    with pytest.raises(InvalidConfigurationError):
        parse_run_config(
            {"problem": "elliptic", "N": 40, "M": 20, "hyperopt": {"low": 0.5, "high": 0.1}}
        )


def test_with_overrides_revalidates():
    """Test overrides produce a validated copy."""
    config = parse_run_config({"problem": "elliptic", "N": 40, "M": 20})
    updated = config.with_overrides(N=80, seed=5)
    assert updated.n == 80 and updated.seed == 5
    assert config.n == 40
    with pytest.raises(ValueError):
        config.with_overrides(M=100)


def test_load_json_and_yaml(tmp_path):
    """Test both file formats load to the same config."""
    document = {"problem": "parabolic", "N": 56, "M": 28, "seed": 1}
    json_path = tmp_path / "run.json"
    json_path.write_text(json.dumps(document))
    yaml_path = tmp_path / "run.yaml"
    yaml_path.write_text("problem: parabolic\nN: 56\nM: 28\nseed: 1\n")
    assert load_run_config(json_path) == load_run_config(yaml_path)


def test_load_errors(tmp_path):
    """Test unreadable and unparseable files raise."""
    with pytest.raises(InvalidConfigurationError):
        load_run_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(InvalidConfigurationError):
        load_run_config(broken)


def test_settings_from_environment(monkeypatch):
    """Test environment variables override settings defaults."""
    monkeypatch.setenv("SGPDE_OUTPUT_DIR", "/tmp/sgpde-out")
    monkeypatch.setenv("SGPDE_GRAM_CHUNK_ROWS", "64")
    monkeypatch.setenv("SGPDE_BATCH_WORKERS", "3")
    get_settings.cache_clear()
    try:
        settings = get_settings()
        assert settings.output_dir == "/tmp/sgpde-out"
        assert settings.gram_chunk_rows == 64
        assert settings.batch_workers == 3
    finally:
        get_settings.cache_clear()


def test_settings_defaults(monkeypatch):
    """Test defaults without environment overrides."""
    for name in ("SGPDE_OUTPUT_DIR", "SGPDE_DIAGNOSE_MAX_PSI", "SGPDE_DEBUG_DUMP"):
        monkeypatch.delenv(name, raising=False)
    settings = Settings(_env_file=None)
    assert settings.output_dir is None
    assert settings.diagnose_max_psi == 20000
    assert settings.debug_dump_matrices is False


def test_settings_fields_are_the_ones_read():
    """Test the settings carry only fields the package reads."""
    assert set(Settings.model_fields) == {
        "log_level",
        "output_dir",
        "debug_dump_matrices",
        "gram_chunk_rows",
        "diagnose_max_psi",
        "batch_workers",
    }
