"""Python access to the treejog core: simulation, ancestral sampling, PCA
projection, jogging scores and the two pipelines."""

import json as _json

from . import _core
from ._core import InputError, NumericalError, __version__

simulate = _core.simulate
ancestral = _core.ancestral
project = _core.project
kde = _core.kde
render_tree = _core.render_tree
patterns = _core.patterns


def fit_pca(matrix_csv, components=2, mean_impute=False):
    """PCA model of a leaf matrix given as CSV text, returned as a dict."""
    return _json.loads(_core.fit_pca(matrix_csv, components, mean_impute))


def _model_text(model):
    return model if isinstance(model, str) else _json.dumps(model)


def jog(nexus, model, sample_index="last"):
    return _json.loads(_core.jog(nexus, _model_text(model), sample_index))


def run_synthetic(config, out):
    _core.run_synthetic(_json.dumps(config or {}), str(out))


def run_analysis(config, out):
    _core.run_analysis(_json.dumps(config or {}), str(out))


__all__ = [
    "InputError",
    "NumericalError",
    "__version__",
    "simulate",
    "ancestral",
    "fit_pca",
    "project",
    "jog",
    "patterns",
    "kde",
    "render_tree",
    "run_synthetic",
    "run_analysis",
]
