"""Python interface to the ALSO strategy-optimization core."""

import json as _json

try:
    from ._also_core import *  # noqa: F401,F403  (installed wheel layout)
    from . import _also_core as _core
except ImportError:  # in-tree build: module sits on PYTHONPATH
    from _also_core import *  # noqa: F401,F403
    import _also_core as _core

__all__ = [name for name in dir(_core) if not name.startswith("_")] + [
    "run_episode",
    "run_ablation",
    "default_config",
]


def default_config():
    """Default run configuration as a dict."""
    return _json.loads(_core.default_config_json())


def run_episode(config, seed):
    """Run one episode from a config dict; returns the episode log as a dict."""
    return _json.loads(_core.run_episode_json(_json.dumps(config), seed))


def run_ablation(config):
    """Run the component ablation matrix; returns the experiment report as a dict."""
    return _json.loads(_core.run_ablation_json(_json.dumps(config)))
