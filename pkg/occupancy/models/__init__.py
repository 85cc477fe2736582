"""Model families fit to a :class:`~occupancy.features.FeatureMatrix`."""

from ._design import CollinearColumns
from ._design import DegenerateTarget
from ._design import FitError
from ._design import rank_deficient_columns
from ._design import Underdetermined
from .linear import aic_linear
from .linear import bic_linear
from .linear import fit_ols
from .linear import fit_ridge
from .linear import FittedLinearModel
from .linear import FittedLinearModelSchema
from .linear import predict_linear
from .linear import RidgeDomainError
from .multinomial import aic_multinomial
from .multinomial import bic_multinomial
from .multinomial import fit_multinomial
from .multinomial import FittedMultinomialModel
from .multinomial import FittedMultinomialModelSchema
from .multinomial import multinomial_gradient
from .multinomial import multinomial_loglik
from .multinomial import predict_class
from .multinomial import predict_proba
from .multinomial import SingleClass

__all__ = [
    "CollinearColumns",
    "DegenerateTarget",
    "FitError",
    "FittedLinearModel",
    "FittedLinearModelSchema",
    "FittedMultinomialModel",
    "FittedMultinomialModelSchema",
    "RidgeDomainError",
    "SingleClass",
    "Underdetermined",
    "aic_linear",
    "aic_multinomial",
    "bic_linear",
    "bic_multinomial",
    "fit_multinomial",
    "fit_ols",
    "fit_ridge",
    "multinomial_gradient",
    "multinomial_loglik",
    "predict_class",
    "predict_linear",
    "predict_proba",
    "rank_deficient_columns",
]
