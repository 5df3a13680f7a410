"""
EM Estimator Package
"""

from curesimex.em.services import fit_mle

__all__ = ["fit_mle"]
