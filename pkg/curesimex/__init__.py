# CureSimex - mixture cure models with SIMEX correction for covariate measurement error

from curesimex.core.constants import APP_VERSION

__version__ = APP_VERSION
