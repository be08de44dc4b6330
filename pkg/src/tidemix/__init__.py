"""Mixed finite element solver for damped rotating shallow-water flow."""

from .assembly import ModelParams, build_operators
from .damping import DampingLaw, linear_law, power_law, power_linearized_law
from .femspace import FunctionSpacePair, interpolate_hdiv, project_pressure
from .mesh import Mesh, build_unit_square
from .timestep import (SolverConfig, State, Stepper, mms_initial_state,
                       random_initial_state, simulate, step)

__all__ = [
    "DampingLaw",
    "FunctionSpacePair",
    "Mesh",
    "ModelParams",
    "SolverConfig",
    "State",
    "Stepper",
    "build_operators",
    "build_unit_square",
    "interpolate_hdiv",
    "linear_law",
    "mms_initial_state",
    "power_law",
    "power_linearized_law",
    "project_pressure",
    "random_initial_state",
    "simulate",
    "step",
]

__version__ = "0.1.0"
