"""Simulator for a single-photon interferometric test of noncontextuality.

Exact quantum predictions for the interferometer, the rival noncontextual
hidden-variable model, and Monte Carlo counting experiments with a
parametric imperfection layer.
"""

from .experiment import (
    ImperfectionModel,
    analytic_prediction,
    estimate_averages,
    run_experiment,
    run_inequality_test,
    sweep,
)
from .hilbert import Operator4, PhotonState, psi1, tensor
from .nchv import AssignmentDistribution, ValueAssignment, enumerate_assignments
from .observables import make_observable, observable_bounds
from .optics import build_fig1_network, propagate, validate_network

__version__ = "0.1.0"

__all__ = [
    "AssignmentDistribution",
    "ImperfectionModel",
    "Operator4",
    "PhotonState",
    "ValueAssignment",
    "analytic_prediction",
    "build_fig1_network",
    "enumerate_assignments",
    "estimate_averages",
    "make_observable",
    "observable_bounds",
    "propagate",
    "psi1",
    "run_experiment",
    "run_inequality_test",
    "sweep",
    "tensor",
    "validate_network",
]
