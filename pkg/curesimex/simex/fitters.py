"""
Estimator interface for SIMEX.

Any callable ``(Dataset, ModelLayout) -> CureFit`` can be corrected. The
factories below return picklable fitters so cells can run in worker
processes.
"""

from functools import partial
from typing import Optional, Protocol

from curesimex.core.exceptions import InvalidArgumentError
from curesimex.em.constants import EstimatorName
from curesimex.em.schemas import EmOptions
from curesimex.em.services import fit_mle
from curesimex.model.schemas import CureFit, Dataset, ModelLayout
from curesimex.presmooth.schemas import PresmoothOptions
from curesimex.presmooth.services import fit_presmooth, select_bandwidth


class CureFitter(Protocol):
    def __call__(self, data: Dataset, layout: ModelLayout) -> CureFit: ...


def mle_fitter(opts: Optional[EmOptions] = None) -> CureFitter:
    return partial(fit_mle, opts=opts or EmOptions())


def presmooth_fitter(
    data: Dataset, layout: ModelLayout, opts: Optional[PresmoothOptions] = None
) -> CureFitter:
    """Presmoothing fitter with the bandwidth selected once on ``data``."""
    opts = opts or PresmoothOptions()
    bandwidth = select_bandwidth(data, layout, opts)
    return partial(fit_presmooth, opts=opts.model_copy(update={"bandwidth": bandwidth}))


def make_fitter(
    method: EstimatorName | str,
    data: Dataset,
    layout: ModelLayout,
    em: Optional[EmOptions] = None,
    presmooth: Optional[PresmoothOptions] = None,
) -> CureFitter:
    """Fitter for a named estimator, prepared on the original ``data``."""
    try:
        name = EstimatorName(method)
    except ValueError:
        raise InvalidArgumentError(f"unknown estimator {method!r}", "method")
    if name is EstimatorName.MLE:
        return mle_fitter(em)
    if name is EstimatorName.PRESMOOTH:
        opts = presmooth or PresmoothOptions()
        if em is not None:
            opts = opts.model_copy(update={"em": em})
        return presmooth_fitter(data, layout, opts)
    raise InvalidArgumentError(f"{name.value} is not a cure model estimator", "method")
