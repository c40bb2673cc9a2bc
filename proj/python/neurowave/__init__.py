"""EEG response pipeline: preprocessing, ICA cleaning, two-tower classifier and Mapper graphs.

Configs are passed as JSON text in the same format the command-line tool reads.
"""

import json

from ._core import *  # noqa: F401,F403
from ._core import (
    default_pipeline_config,
    default_synth_config,
)


def synth_config(**overrides):
    """Default synth config with top-level or nested overrides, as JSON text."""
    return _merge(default_synth_config(), overrides)


def pipeline_config(**overrides):
    """Default pipeline config with top-level or nested overrides, as JSON text."""
    return _merge(default_pipeline_config(), overrides)


def _merge(text, overrides):
    config = json.loads(text)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(config.get(key), dict):
            config[key].update(value)
        else:
            config[key] = value
    return json.dumps(config)
