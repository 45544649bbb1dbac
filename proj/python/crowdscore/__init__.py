"""Adaptive crowd-scoring contest simulator.

Thin Python layer over the C++ core: closed-form comparison-vs-scoring
error curves, scalar quantizer design, and the Monte Carlo experiment
harness. Experiments are described by the same flat key-value config text
the ``crowdscore`` CLI consumes; see the project README for the schema.
"""

from ._core import (
    ConfigError,
    InstanceError,
    QuantizerSpec,
    UnderdeterminedError,
    __version__,
    lloyd_quantizer,
    p_comp,
    p_comp_gaussian,
    p_comp_small_gap,
    p_delta,
    p_est,
    run_experiment,
    run_experiment_csv,
    run_trial,
    uniform_quantizer,
)

__all__ = [
    "ConfigError",
    "InstanceError",
    "QuantizerSpec",
    "UnderdeterminedError",
    "__version__",
    "lloyd_quantizer",
    "p_comp",
    "p_comp_gaussian",
    "p_comp_small_gap",
    "p_delta",
    "p_est",
    "run_experiment",
    "run_experiment_csv",
    "run_trial",
    "uniform_quantizer",
]
