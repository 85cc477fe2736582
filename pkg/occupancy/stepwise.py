# ruff: noqa: FA100 (missing __future__.annotations import)
"""Forward stepwise feature selection by information criterion."""

import logging
from dataclasses import dataclass
from dataclasses import field
from functools import partial
from typing import Any
from typing import Callable
from typing import Iterable
from typing import Iterator
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import marshmallow
from marshmallow_dataclass import class_schema

from .errors import AnalysisError
from .features import FeatureMatrix
from .features import select_columns
from .features import UnknownFeature
from .models import aic_linear
from .models import bic_linear
from .models import CollinearColumns
from .models import fit_multinomial
from .models import fit_ols
from .models import FitError
from .models import FittedLinearModel
from .models import FittedMultinomialModel
from .models import Underdetermined

log = logging.getLogger()

FAMILIES = ("linear", "multinomial")
CRITERIA = ("aic", "bic")

IMPROVEMENT_SLACK = 1e-10

FittedModel = Union[FittedLinearModel, FittedMultinomialModel]

MapFunction = Callable[..., Iterable[Any]]
"""An order-preserving ``map``, such as ``ThreadPool.map``."""


class StepwiseError(AnalysisError):
    """Raised if stepwise selection can not start."""


@dataclass(frozen=True)
class Step:
    feature: str
    aic: float
    bic: float
    skipped: List[str] = field(default_factory=list)
    """Candidates passed over because they made the design rank deficient."""


@dataclass(frozen=True)
class StepwiseTrace:
    family: str
    criterion: str
    candidates: List[str]
    start_aic: float
    start_bic: float
    steps: List[Step]
    selected: List[str]
    final_skipped: List[str] = field(default_factory=list)
    linear_model: Optional[FittedLinearModel] = None
    multinomial_model: Optional[FittedMultinomialModel] = None

    class Meta:
        unknown = marshmallow.EXCLUDE

    @property
    def model(self) -> FittedModel:
        model = self.linear_model or self.multinomial_model
        assert model is not None
        return model

    def values(self) -> Iterator[float]:
        """Criterion value of the starting model and after every step."""
        start = self.start_aic if self.criterion == "aic" else self.start_bic
        yield start
        for step in self.steps:
            yield step.aic if self.criterion == "aic" else step.bic


StepwiseTraceSchema = class_schema(StepwiseTrace)


def _information_criteria(model: FittedModel) -> Tuple[float, float]:
    if isinstance(model, FittedLinearModel):
        return aic_linear(model), bic_linear(model)
    return model.aic, model.bic


def _fitter(family: str) -> Callable[[FeatureMatrix], FittedModel]:
    if family == "linear":
        return fit_ols
    if family == "multinomial":
        return fit_multinomial
    raise StepwiseError(f"unknown model family {family!r}")


def _try_candidate(
    matrix: FeatureMatrix,
    fit: Callable[[FeatureMatrix], FittedModel],
    selected: Sequence[str],
    candidate: str,
) -> Optional[FittedModel]:
    try:
        return fit(select_columns(matrix, [*selected, candidate]))
    except (CollinearColumns, Underdetermined) as exc:
        log.debug("skipping %s: %s", candidate, exc)
        return None


def forward_stepwise(
    matrix: FeatureMatrix,
    family: str,
    candidates: Sequence[str],
    *,
    criterion: str = "aic",
    map_: MapFunction = map,
) -> StepwiseTrace:
    """Greedy forward selection starting from the intercept-only model.

    Each round fits current features plus each remaining candidate and adds
    the one with the lowest criterion value, provided it improves on the
    current model by more than ``IMPROVEMENT_SLACK``. Ties go to the earlier
    candidate. ``map_`` runs a round's fits and must preserve order.
    """
    if criterion not in CRITERIA:
        raise StepwiseError(f"unknown criterion {criterion!r}")
    for name in candidates:
        if name not in matrix.columns:
            raise UnknownFeature(f"candidate {name!r} is not a design column")
    if len(set(candidates)) != len(candidates):
        raise StepwiseError("duplicate candidates")

    fit = _fitter(family)
    criterion_index = CRITERIA.index(criterion)
    try:
        model = fit(select_columns(matrix, []))
    except FitError as exc:
        raise StepwiseError(f"intercept-only fit failed: {exc}") from exc
    start_aic, start_bic = _information_criteria(model)
    current = (start_aic, start_bic)[criterion_index]

    selected: List[str] = []
    remaining = list(candidates)
    steps = []
    skipped: List[str] = []
    while remaining:
        results = list(map_(partial(_try_candidate, matrix, fit, selected), remaining))
        skipped = [name for name, result in zip(remaining, results) if result is None]
        best: Optional[Tuple[str, FittedModel, Tuple[float, float]]] = None
        for name, result in zip(remaining, results):
            if result is None:
                continue
            criteria = _information_criteria(result)
            if best is None or criteria[criterion_index] < best[2][criterion_index]:
                best = name, result, criteria
        if best is None or not best[2][criterion_index] < current - IMPROVEMENT_SLACK:
            break
        name, model, criteria = best
        log.info(
            "step %d: + %s (%s %.6g)",
            len(steps) + 1,
            name,
            criterion,
            criteria[criterion_index],
        )
        selected.append(name)
        remaining.remove(name)
        steps.append(Step(name, criteria[0], criteria[1], skipped))
        current = criteria[criterion_index]
        skipped = []

    return StepwiseTrace(
        family=family,
        criterion=criterion,
        candidates=list(candidates),
        start_aic=start_aic,
        start_bic=start_bic,
        steps=steps,
        selected=selected,
        final_skipped=skipped,
        linear_model=model if isinstance(model, FittedLinearModel) else None,
        multinomial_model=model if isinstance(model, FittedMultinomialModel) else None,
    )
