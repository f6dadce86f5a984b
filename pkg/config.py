"""
Experiment configuration management for erpbench.
"""

import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


def _merge(base: Dict[str, Any], updates: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive merge: nested sections are merged key by key."""
    merged = copy.deepcopy(base)
    for key, value in updates.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class Config:
    """
    Experiment configuration manager.

    Handles:
    - Loading and saving configuration
    - Default values (nested sections merged key-wise)
    - Validation through the component configs
    - Configuration updates
    """

    DEFAULT_CONFIG = {
        # General settings
        'name': 'erpbench',
        'datasets': [],
        'feature_set': ['eeg31', 'erp91'],

        # Welch PSD and band settings
        'spectral': {
            'segment_len': 128,
            'overlap': 0.5,
            'window': 'hann',
            'rolloff_fraction': 0.85,
            'tsallis_q': 2.0,
            'total_band': [0.5, 45.0],
        },

        # Temporal pyramid of the ERP feature set
        'pyramid': {
            'level_segments': [1, 2, 4, 8],
        },

        # Optimization protocol
        'train': {
            'batch_size': 128,
            'max_epochs': 200,
            'patience': 15,
            'lr': 1e-4,
            'weight_decay': 0.01,
        },

        # Evaluation protocol
        'seeds': [41, 42, 43, 44, 45],
        'split_ratios': [0.6, 0.2, 0.2],
        'shuffle_labels': False,
        'cache_dir': '',
        'show_progress': True,

        # Logging settings
        'log_level': 'INFO',
        'log_dir': './logs',
    }

    def __init__(self, config_file: Optional[str] = 'config.json'):
        """
        Initialize configuration manager.

        Args:
            config_file: Path to a JSON configuration file (None for defaults only)
        """
        self.config_file = Path(config_file) if config_file else None
        self.config = copy.deepcopy(self.DEFAULT_CONFIG)

        if self.config_file is not None and self.config_file.exists():
            self.load()
        else:
            logger.info("No config file found, using defaults")

    def load(self) -> bool:
        """
        Load configuration from file.

        Returns:
            True if successful, False otherwise
        """
        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                loaded_config = json.load(f)

            # Merge with defaults (in case new keys were added)
            self.config = _merge(self.DEFAULT_CONFIG, loaded_config)

            logger.info(f"Configuration loaded from {self.config_file}")
            return True

        except Exception as e:
            logger.error(f"Error loading configuration: {e}")
            return False

    def save(self, path: Optional[str] = None) -> bool:
        """
        Save configuration to file.

        Args:
            path: Target file (default: the file it was loaded from)

        Returns:
            True if successful, False otherwise
        """
        target = Path(path) if path else self.config_file
        if target is None:
            logger.error("No configuration file to save to")
            return False
        try:
            target.parent.mkdir(parents=True, exist_ok=True)

            with open(target, 'w', encoding='utf-8') as f:
                json.dump(self.config, f, indent=2, ensure_ascii=False)

            logger.info(f"Configuration saved to {target}")
            return True

        except Exception as e:
            logger.error(f"Error saving configuration: {e}")
            return False

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value.

        Args:
            key: Configuration key; dotted keys reach into sections ("train.lr")
            default: Default value if key not found

        Returns:
            Configuration value
        """
        node: Any = self.config
        for part in key.split('.'):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def set(self, key: str, value: Any) -> None:
        """
        Set configuration value.

        Args:
            key: Configuration key; dotted keys reach into sections
            value: Configuration value
        """
        parts = key.split('.')
        node = self.config
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
        logger.debug(f"Config updated: {key} = {value}")

    def update(self, updates: Dict[str, Any]) -> None:
        """
        Update multiple configuration values.

        Args:
            updates: Dictionary of updates (sections merged key-wise)
        """
        self.config = _merge(self.config, updates)
        logger.info(f"Configuration updated with {len(updates)} values")

    def reset(self) -> None:
        """Reset configuration to defaults."""
        self.config = copy.deepcopy(self.DEFAULT_CONFIG)
        logger.info("Configuration reset to defaults")

    def experiment(self):
        """The ExperimentConfig described by this configuration."""
        from core.benchmark import ExperimentConfig

        return ExperimentConfig.from_dict(self.config)

    def validate(self) -> tuple[bool, list[str]]:
        """
        Validate configuration.

        Returns:
            Tuple of (is_valid, list_of_errors)
        """
        errors = []

        # Validate dataset directories
        for dataset in self.config['datasets']:
            path = Path(dataset)
            if not path.exists():
                errors.append(f"Dataset path does not exist: {dataset}")
            elif not path.is_dir():
                errors.append(f"Dataset path is not a directory: {dataset}")

        # Validate component configs
        try:
            _, component_errors = self.experiment().validate()
            errors.extend(component_errors)
        except (TypeError, ValueError) as e:
            errors.append(f"Invalid experiment settings: {e}")

        # Validate logging
        if str(self.config['log_level']).upper() not in LOG_LEVELS:
            errors.append(f"log_level must be one of {LOG_LEVELS}")

        is_valid = len(errors) == 0

        if not is_valid:
            logger.warning(f"Configuration validation failed: {errors}")

        return is_valid, errors

    def to_dict(self) -> Dict[str, Any]:
        """
        Get configuration as dictionary.

        Returns:
            Configuration dictionary
        """
        return copy.deepcopy(self.config)

    def __getitem__(self, key: str) -> Any:
        """Get item using bracket notation."""
        return self.config[key]

    def __setitem__(self, key: str, value: Any) -> None:
        """Set item using bracket notation."""
        self.config[key] = value

    def __contains__(self, key: str) -> bool:
        """Check if key exists."""
        return key in self.config

    def __repr__(self) -> str:
        """String representation."""
        return f"Config({len(self.config)} settings)"

    def print_config(self) -> None:
        """Print configuration in a readable format."""
        print("\n" + "=" * 60)
        print("CURRENT CONFIGURATION")
        print("=" * 60)

        sections = {
            'General': ['name', 'datasets', 'feature_set'],
            'Spectral': ['spectral'],
            'Features': ['pyramid'],
            'Training': ['train'],
            'Evaluation': ['seeds', 'split_ratios', 'shuffle_labels', 'cache_dir'],
            'Logging': ['log_level', 'log_dir'],
        }

        for section, keys in sections.items():
            print(f"\n{section}:")
            for key in keys:
                value = self.config.get(key)
                if isinstance(value, dict):
                    for sub_key, sub_value in value.items():
                        print(f"  {key}.{sub_key}: {sub_value}")
                else:
                    print(f"  {key}: {value}")

        print("\n" + "=" * 60 + "\n")


# Singleton instance
_config_instance: Optional[Config] = None


def get_config(config_file: Optional[str] = 'config.json') -> Config:
    """
    Get the global configuration instance.

    Args:
        config_file: Path to configuration file

    Returns:
        Config instance
    """
    global _config_instance

    if _config_instance is None:
        _config_instance = Config(config_file)

    return _config_instance
