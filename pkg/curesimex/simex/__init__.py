"""
SIMEX Engine Package

Simulation-extrapolation correction around any cure model fitter.
"""

from curesimex.simex.fitters import make_fitter
from curesimex.simex.services import run_simex

__all__ = ["make_fitter", "run_simex"]
