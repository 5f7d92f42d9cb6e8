"""Layered configuration management for hybridsub.

Settings are addressed with dotted ``category.key`` names. Values start
from ``DEFAULT_SETTINGS`` and are overridden, in order, by a JSON config
file, explicit command-line flags and ``--set category.key=value`` pairs.
"""

import copy
import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

from ..core.exceptions import DataFormatError, InvalidParameterError
from .logger import logger


class Settings:
    """Manage application configuration with dotted keys."""

    DEFAULT_SETTINGS: Dict[str, Dict[str, Any]] = {
        "synth": {
            "n": 100,
            "p": 200,
            "k": 20,
            "sigma2": 1.0,
            "theta": [0.9, 0.1, 0.0],
            "seed": 0,
            "num_highd": None,
            "highd_scale": 1.0,
        },
        "hsl": {
            "k": 20,
            "lambda": 0.01,
            "gamma": 0.0,
            "alpha0": None,
            "eta": None,
            "eta_rule": "kkt",
            "init": "spectral",
            "inner_tol": 1e-7,
            "outer_tol": 1e-6,
            "max_inner_iters": 500,
            "max_outer_iters": 100,
            "overlap_eps": 1e-8,
            "max_path_steps": 300,
            "seed": 0,
        },
        "rpca": {
            "lambda": None,
            "rho": 1.5,
            "tol": 1e-7,
            "max_iters": 1000,
        },
        "op": {
            "lambda": None,
            "target_rank": None,
            "tol": 1e-7,
            "max_iters": 1000,
            "bisect_iters": 40,
        },
        "harness": {
            "trials": 10,
            "jobs": 1,
            "master_seed": 0,
            "baseline_tuning": "fixed",
            "zero_tol": 1e-6,
            "restarts": 10,
            "strict": False,
            "methods": ["hsl", "pca", "rpca", "op"],
        },
        "sweep": {
            "noise_levels": [0.0, 0.25, 0.5, 1.0, 2.0, 4.0],
            "k_values": [5, 10, 20, 30, 40],
            "theta2_values": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            "phase_k_values": [5, 10, 20, 30, 40],
            "phase_s_values": [0, 10, 20, 40, 60, 80],
            "pr_scales": [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0],
            "spectrum_theta1_values": [1.0, 0.8, 0.5, 0.2, 0.0],
            "oracle_scales": [0.1, 0.3, 1.0, 3.0, 10.0],
            "gamma_fractions": [0.0, 0.1, 0.25, 0.5, 0.75, 1.0],
            "success_subspace_error": 0.001,
        },
    }

    def __init__(self, values: Optional[Dict[str, Dict[str, Any]]] = None):
        """Initialize settings from defaults, then ``values``."""
        self._values: Dict[str, Dict[str, Any]] = copy.deepcopy(self.DEFAULT_SETTINGS)
        if values:
            self.import_settings(values)

    @staticmethod
    def _split(key: str) -> tuple:
        parts = key.split('.')
        if len(parts) < 2:
            raise InvalidParameterError(f"Invalid key format: {key}. Use 'category.key' format.")
        return parts[0], '.'.join(parts[1:])

    def _get_value_type(self, value: Any) -> str:
        """Determine the type of a value."""
        if isinstance(value, bool):
            return 'bool'
        elif isinstance(value, int):
            return 'int'
        elif isinstance(value, float):
            return 'float'
        elif isinstance(value, str):
            return 'string'
        else:
            return 'json'

    def parse_value(self, key: str, text: str) -> Any:
        """Parse a command-line string for ``key`` using the type of its current value."""
        current = self.get(key)
        value_type = self._get_value_type(current) if current is not None else 'json'
        try:
            if value_type == 'bool':
                return text.lower() in ('true', '1', 'yes', 'on')
            elif value_type == 'int':
                return int(text)
            elif value_type == 'float':
                return float(text)
            elif value_type == 'string':
                return text
            return json.loads(text)
        except (ValueError, json.JSONDecodeError):
            if value_type == 'json':
                # Unset entries (None) accept bare strings as well
                return text
            raise InvalidParameterError(f"Cannot parse '{text}' as {value_type} for {key}")

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by key."""
        category, setting_key = self._split(key)
        return self._values.get(category, {}).get(setting_key, default)

    def set(self, key: str, value: Any) -> None:
        """Set configuration value by key."""
        category, setting_key = self._split(key)
        self._values.setdefault(category, {})[setting_key] = value
        logger.debug(f"Updated setting: {key} = {value!r}")

    def set_override(self, assignment: str) -> None:
        """Apply a ``category.key=value`` assignment string."""
        if '=' not in assignment:
            raise InvalidParameterError(f"Override '{assignment}' must look like category.key=value")
        key, text = assignment.split('=', 1)
        self.set(key.strip(), self.parse_value(key.strip(), text.strip()))

    def get_category(self, category: str) -> Dict[str, Any]:
        """Get all settings in a category."""
        return dict(self._values.get(category, {}))

    def set_category(self, category: str, values: Dict[str, Any]) -> None:
        """Set multiple settings in a category."""
        for key, value in values.items():
            self.set(f"{category}.{key}", value)

    def export_settings(self) -> Dict[str, Dict[str, Any]]:
        """Export all settings."""
        return {category: dict(sorted(values.items()))
                for category, values in sorted(self._values.items())}

    def import_settings(self, settings_data: Dict[str, Dict[str, Any]]) -> int:
        """Import settings from dictionary."""
        imported = 0
        for category, settings in settings_data.items():
            if not isinstance(settings, dict):
                raise InvalidParameterError(f"Config category '{category}' must be an object")
            for key, value in settings.items():
                self.set(f"{category}.{key}", value)
                imported += 1
        logger.debug(f"Imported {imported} settings")
        return imported

    def load_file(self, path: Union[str, Path]) -> int:
        """Import settings from a JSON config file."""
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise DataFormatError(f"cannot read config file: {e}", path=str(path))
        except json.JSONDecodeError as e:
            raise DataFormatError(f"invalid JSON: {e.msg}", path=str(path), line=e.lineno, column=e.colno)
        if not isinstance(data, dict):
            raise DataFormatError("config file must contain a JSON object", path=str(path))
        count = self.import_settings(data)
        logger.info(f"Loaded {count} settings from {path}")
        return count

    def copy(self) -> "Settings":
        return Settings(self.export_settings())
