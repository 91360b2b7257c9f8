"""Config ingestion, result cache and the ``seclink`` CLI."""

from seclink.workbench.cache import ResultCache, ResultRecord
from seclink.workbench.config import ConfigError, ExperimentConfig, digest, parse_config, serialize

__all__ = ["ConfigError", "ExperimentConfig", "ResultCache", "ResultRecord", "digest", "parse_config", "serialize"]
