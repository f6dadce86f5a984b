"""
Shared behaviour for the component configuration dataclasses.
"""

import dataclasses
import logging
from typing import Any, Dict, List, Tuple, Type, TypeVar

from .exceptions import ArgumentError

logger = logging.getLogger(__name__)

C = TypeVar("C", bound="ValidatedConfig")


class ValidatedConfig:
    """
    Mixin for dataclass configs.

    Subclasses implement ``_collect_errors`` and get ``validate`` (the
    ``(is_valid, errors)`` convention used by the experiment config),
    ``ensure_valid`` and dict round-tripping for JSON config files.
    """

    def _collect_errors(self) -> List[str]:
        return []

    def validate(self) -> Tuple[bool, List[str]]:
        """
        Validate configuration.

        Returns:
            Tuple of (is_valid, list_of_errors)
        """
        errors = self._collect_errors()
        if errors:
            logger.warning(f"{type(self).__name__} validation failed: {errors}")
        return len(errors) == 0, errors

    def ensure_valid(self, error_cls: Type[Exception] = ArgumentError) -> None:
        """Raise ``error_cls`` listing every problem if the config is invalid."""
        is_valid, errors = self.validate()
        if not is_valid:
            raise error_cls(f"Invalid {type(self).__name__}: " + "; ".join(errors))

    def to_dict(self) -> Dict[str, Any]:
        data = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in data.items()}

    @classmethod
    def from_dict(cls: Type[C], data: Dict[str, Any]) -> C:
        """
        Build a config from a (JSON-decoded) dictionary.

        Unknown keys are ignored with a warning; list values are converted to
        tuples where the field default is a tuple.
        """
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in fields:
                logger.warning(f"Ignoring unknown {cls.__name__} key: {key}")
                continue
            default = fields[key].default
            if isinstance(default, tuple) and isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
        return cls(**kwargs)
