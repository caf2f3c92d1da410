"""Spectral reconstruction of collapsed spaces from interior spectral data."""

import json as _json

from ._core import (
    Circle,
    ConfigError,
    ExperimentConfig,
    FlatCone,
    FlatTorus,
    NumericalError,
    StageError,
    circle_arc_measure,
    distance,
    gh_exact_small,
    gh_upper_bound,
    heat_kernel_theta,
    is_metric,
    load_config,
    pairwise_distances,
    parse_config,
    repair_metric,
    run_and_write,
    sample_helix,
    sample_uniform,
    spectrum,
    verify,
)
from ._core import embed as _embed
from ._core import reconstruct as _reconstruct
from ._core import singular as _singular

__version__ = "0.1.0"


def _wrap(run):
    out = dict(run)
    out["summary"] = _json.loads(run["summary"])
    return out


def embed(config, threads=0):
    """Diffusion-map embedding of the flat torus; returns artifacts and summary."""
    return _wrap(_embed(config, threads))


def reconstruct(config, threads=0):
    """Distances, singular set and finite metric from spectral data."""
    return _wrap(_reconstruct(config, threads))


def singular(config, threads=0):
    return _wrap(_singular(config, threads))
