"""Citation accumulation simulator."""
from ._backend import BACKEND
from .engine import RunResult, SimulationConfig, run, run_ensemble
from .errors import CitesimError
from .kernels import KernelSpec
from .population import DirectTransform, TeamGenParams, gen_team_sizes
from .stats import BinningScheme, distance, log_binned

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BinningScheme",
    "CitesimError",
    "DirectTransform",
    "KernelSpec",
    "RunResult",
    "SimulationConfig",
    "TeamGenParams",
    "distance",
    "gen_team_sizes",
    "log_binned",
    "run",
    "run_ensemble",
]
