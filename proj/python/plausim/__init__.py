"""Python access to the plausim evaluator."""

import json

from ._plausim import PlausimError, com_distance, convex_hull, schema_version, validate_file
from ._plausim import run as _run


def run(config, mode="evaluate", seed=None, threads=None, out=None):
    """Run the pipeline on a config file and return the parsed reports."""
    return [json.loads(r) for r in _run(str(config), mode, seed, threads, None if out is None else str(out))]


__all__ = ["PlausimError", "com_distance", "convex_hull", "run", "schema_version", "validate_file"]
