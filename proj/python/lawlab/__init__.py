"""Python access to the lawlab scaling-law core.

Configs and reports are plain dicts; they are passed to the core as JSON.
"""

import json as _json
import os as _os

from . import _lawlab
from ._lawlab import (
    REPORT_SCHEMA_VERSION,
    LawlabError,
    count_params as _count_params,
    fit_observations,
    flops_per_token as _flops_per_token,
    param_names,
    predict_loss,
    six_nd,
)

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "LawlabError",
    "load_config",
    "normalize_config",
    "config_hash",
    "fit",
    "fit_observations",
    "run_matrix",
    "checklist",
    "plot",
    "predict_loss",
    "optimal_allocation",
    "param_names",
    "six_nd",
    "count_params",
    "flops_per_token",
    "ingest_csv",
]


def _text(obj):
    return obj if isinstance(obj, str) else _json.dumps(obj)


def load_config(path):
    """Read a config file; returns (config dict, directory it lives in)."""
    with open(path, encoding="utf-8") as f:
        return _json.load(f), _os.path.dirname(_os.path.abspath(path))


def normalize_config(config):
    return _json.loads(_lawlab.normalize_config(_text(config)))


def config_hash(config):
    return _lawlab.config_hash(_text(config))


def fit(config, base_dir="", data=None, arch_table=None, threads=1):
    """Run one experiment and return its report."""
    return _json.loads(_lawlab.run_experiment(_text(config), base_dir, data, arch_table, threads))


def run_matrix(matrix, matrix_dir, out_dir, threads=1):
    """Returns (variant names, failed variant names, comparison CSV text)."""
    return _lawlab.run_matrix(_text(matrix), matrix_dir, out_dir, threads)


def checklist(config, report):
    return _lawlab.render_checklist(_text(config), _text(report))


def plot(reports, axes="c_vs_n", c_range=None):
    """reports: list of (label, report) pairs; c_range an optional (lo, hi). Returns SVG text."""
    return _lawlab.render_plot([(label, _text(r)) for label, r in reports], axes, c_range)


def optimal_allocation(form, theta, c, flop_constant=6.0):
    """Returns (n_opt, d_opt, d_opt / n_opt)."""
    return _lawlab.optimal_allocation(form, list(theta), c, flop_constant)


def count_params(arch_table, arch_id, include_embeddings=True):
    return _count_params(_text(arch_table), arch_id, include_embeddings)


def flops_per_token(arch_table, arch_id, include_embeddings=True):
    return _flops_per_token(_text(arch_table), arch_id, include_embeddings)


def ingest_csv(path):
    """Ingest a ledger CSV and return it re-emitted in canonical form."""
    return _lawlab.ingest_csv(path)
