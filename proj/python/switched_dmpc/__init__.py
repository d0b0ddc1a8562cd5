"""Distributed MPC with switched cost functions."""

import json
import os

from ._core import (
    LtiSystem,
    Polytope,
    max_invariant_set,
    norm_bound,
    pre_n,
    pre_set,
    project,
    solve_qp,
)
from . import _core

__all__ = [
    "LtiSystem",
    "Polytope",
    "load_config",
    "max_invariant_set",
    "monitor",
    "norm_bound",
    "pre_n",
    "pre_set",
    "project",
    "run",
    "solve_qp",
    "synthesize",
]


def load_config(path):
    """Parse and validate a scenario configuration file into a dict."""
    return json.loads(_core.load_config_json(os.fspath(path)))


def _as_json(config):
    if isinstance(config, (str, os.PathLike)):
        config = load_config(config)
    return json.dumps(config)


def synthesize(config):
    """Terminal ingredients and sets for a config dict or path."""
    return json.loads(_core.synthesize_json(_as_json(config)))


def run(config, out_dir=None):
    """Simulate the scenario. Returns (summary dict, trace arrays).

    The trace holds x with shape (steps, agents, n), u with shape
    (steps, agents, m) and a 0/1 decoupled flag per step and agent.
    When out_dir is given, trace.csv, summary.json and plot.dat are written there.
    """
    summary, trace = _core.run_json(_as_json(config), os.fspath(out_dir) if out_dir else "")
    return json.loads(summary), trace


def monitor(config, trace_csv, synthesis=None):
    """Check a trace CSV against the runtime certificates."""
    syn = json.dumps(synthesis) if synthesis is not None else ""
    return json.loads(_core.monitor_json(_as_json(config), os.fspath(trace_csv), syn))
