"""Programmable cavity-mediated spin interactions, coherent annealing and readout."""

from .config import ExperimentConfig, load_config
from .pipeline import golden_compare, run_pipeline

__version__ = "0.1.0"

__all__ = ["ExperimentConfig", "load_config", "run_pipeline", "golden_compare", "__version__"]
