"""Configuration management module."""

import copy
from pathlib import Path
from typing import Dict, Any, Optional
import yaml


DEFAULTS: Dict[str, Any] = {
    "precision": {"bits": 128},
    "tables": {
        "exact_cap": 40,
        "evaluated_cap": 250,
        "memory_budget_mb": 2048,
        "boundary_exact_order": 60,
        "numeric_order": 16384,
        "numeric_order_cap": 262144,
    },
    "sampling": {
        "step_guard": 100_000_000,
        "law_tolerance": 1e-9,
        "finite_defect_max": 0.05,
        "row_exact_p_cap": 8,
        "row_exact_k_cap": 40,
        "halfplane_cache": 4096,
        "finite_order": 120,
        "filler_max_faces": 120,
    },
    "experiments": {
        "drift": {"n_events": 10_000_000, "level": 0.99},
        "tm_law": {"p": 2000, "m": 5, "n_paths": 10_000, "t_max": 10.0, "t_points": 101, "threshold": 0.03},
        "cm_limit": {"p": 10_000, "m_max": 100, "m_fit_min": 10, "tolerance": 0.01},
        "tail_exponents": {"k_min": 20, "k_max": 500, "tolerance": 0.05},
        "fluctuation_scaling": {"log2_n_min": 10, "log2_n_max": 20, "n_paths": 200, "tolerance": 0.05},
        "hit_zero": {"p": 500, "n_paths": 2000, "lambdas": [0, 1, 2, 4, 8]},
        "one_jump": {"p": 2000, "eps": 0.5, "xs": [0.5, 1.0, 2.0], "ms": [5, 20, 80], "n_paths": 2000},
        "interface_length": {"p": 3, "q": 3, "n": 10, "nu": 2, "n_maps": 1000},
    },
}


def get_project_root() -> Path:
    """Gets the project root directory.

    Returns:
        Path: The absolute path to the project root.
    """
    current = Path(__file__).resolve()
    for parent in current.parents:
        if (parent / "pyproject.toml").exists():
            return parent
    return Path(__file__).resolve().parents[2]


def merge_config(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merges ``override`` into a copy of ``base``.

    Nested dictionaries are merged key by key; any other value in
    ``override`` replaces the one in ``base``.
    """
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """Loads the configuration file on top of the built-in defaults.

    Args:
        config_path: Path to the configuration file. If None, looks for
            config.yaml in the project root.

    Returns:
        Dict[str, Any]: A dictionary containing the configuration settings.

    Raises:
        FileNotFoundError: If the configuration file does not exist.
        yaml.YAMLError: If the configuration file is malformed.
    """
    if config_path:
        config_path_obj = Path(config_path)
    else:
        config_path_obj = get_project_root() / "config.yaml"

    if not config_path_obj.exists():
        raise FileNotFoundError(
            f"Configuration file not found: {config_path_obj}\n"
            f"Pass --config or restore config.yaml in the project root."
        )

    with open(config_path_obj, "r", encoding="utf-8") as f:
        loaded = yaml.safe_load(f) or {}

    return merge_config(DEFAULTS, loaded)


def default_config() -> Dict[str, Any]:
    """Returns a fresh copy of the built-in defaults (no file access)."""
    return copy.deepcopy(DEFAULTS)


def get_experiment_params(
    config: Dict[str, Any], name: str, overrides: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """Resolves the parameters of one experiment.

    Args:
        config: The configuration dictionary.
        name: Experiment name, e.g. ``"tm_law"``.
        overrides: Task-file or CLI values; ``None`` entries are ignored.

    Returns:
        Dict[str, Any]: Configured defaults with the overrides applied.
    """
    params = dict(config.get("experiments", {}).get(name, {}))
    for key, value in (overrides or {}).items():
        if value is not None:
            params[key] = value
    return params
