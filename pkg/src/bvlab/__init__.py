"""bvlab: a desk-scale laboratory for the viscous Burgers-Vlasov system."""
from ._accel import backend
from .core import (ConfigError, DomainError, FluidField, InitialData, KineticField,
                   NumericalBlowup, PhaseGrid, SimConfig, build_connector, make_initial_data)
from .coupling import Moments, Trajectory, RunFailed, moments, run, strang_step

__version__ = "0.1.0"
