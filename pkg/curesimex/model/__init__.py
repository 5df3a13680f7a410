"""
Model Core Package

Data containers and closed-form quantities of the logistic/Cox mixture
cure model.
"""

from curesimex.model.schemas import CureFit, Dataset, ModelLayout, StepFunction
from curesimex.model.services import kaplan_meier, population_survival

__all__ = [
    "CureFit",
    "Dataset",
    "ModelLayout",
    "StepFunction",
    "kaplan_meier",
    "population_survival",
]
