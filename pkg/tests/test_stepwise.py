from __future__ import annotations

from multiprocessing.pool import ThreadPool

import numpy as np
import pytest
from scipy.special import expit

from testlib import random_matrix

from occupancy.features import FeatureMatrix
from occupancy.features import select_columns
from occupancy.features import UnknownFeature
from occupancy.features import with_target
from occupancy.models import aic_linear
from occupancy.models import bic_linear
from occupancy.models import CollinearColumns
from occupancy.models import fit_multinomial
from occupancy.models import fit_ols
from occupancy.stepwise import forward_stepwise
from occupancy.stepwise import StepwiseError
from occupancy.stepwise import StepwiseTrace
from occupancy.stepwise import StepwiseTraceSchema

TRUE_COEFFICIENTS = [2.0, 0.0, 0.0, -3.0, 0.0]


@pytest.fixture
def matrix() -> FeatureMatrix:
    rng = np.random.default_rng(8675309)
    return random_matrix(rng, 500, 5, coefficients=TRUE_COEFFICIENTS)


def aic_of(matrix: FeatureMatrix, names: list[str]) -> float:
    return aic_linear(fit_ols(select_columns(matrix, names)))


class Test_forward_stepwise:
    def test_finds_true_features_first(self, matrix: FeatureMatrix) -> None:
        trace = forward_stepwise(matrix, "linear", matrix.columns)
        assert trace.selected[:2] == ["x3", "x0"]

    def test_greedy_choices(self, matrix: FeatureMatrix) -> None:
        trace = forward_stepwise(matrix, "linear", matrix.columns)
        selected: list[str] = []
        current = aic_of(matrix, [])
        assert trace.start_aic == pytest.approx(current)
        for step in trace.steps:
            remaining = [c for c in matrix.columns if c not in selected]
            values = {c: aic_of(matrix, [*selected, c]) for c in remaining}
            assert step.feature == min(values, key=values.__getitem__)
            assert step.aic == pytest.approx(values[step.feature])
            assert step.aic < current
            selected.append(step.feature)
            current = step.aic
        remaining = [c for c in matrix.columns if c not in selected]
        for candidate in remaining:
            assert aic_of(matrix, [*selected, candidate]) >= current - 1e-10

    def test_values_decrease(self, matrix: FeatureMatrix) -> None:
        for criterion in ["aic", "bic"]:
            trace = forward_stepwise(
                matrix, "linear", matrix.columns, criterion=criterion
            )
            values = list(trace.values())
            assert values == sorted(values, reverse=True)
            assert len(set(values)) == len(values)

    def test_bic(self, matrix: FeatureMatrix) -> None:
        trace = forward_stepwise(matrix, "linear", matrix.columns, criterion="bic")
        assert trace.criterion == "bic"
        assert set(trace.selected) >= {"x0", "x3"}
        model = fit_ols(select_columns(matrix, trace.selected))
        assert trace.steps[-1].bic == pytest.approx(bic_linear(model))

    def test_final_model(self, matrix: FeatureMatrix) -> None:
        trace = forward_stepwise(matrix, "linear", matrix.columns)
        assert trace.multinomial_model is None
        assert trace.model is trace.linear_model
        assert trace.model.feature_names == trace.selected
        assert trace.model == fit_ols(select_columns(matrix, trace.selected))

    def test_no_candidates(self, matrix: FeatureMatrix) -> None:
        trace = forward_stepwise(matrix, "linear", [])
        assert trace.steps == []
        assert trace.selected == []
        assert trace.model.feature_names == []
        assert list(trace.values()) == [trace.start_aic]

    def test_ties_go_to_earlier_candidate(self, matrix: FeatureMatrix) -> None:
        copy = FeatureMatrix(
            (*matrix.columns, "copy"),
            np.column_stack([matrix.X, matrix.X[:, 3]]),
            matrix.y,
        )
        trace = forward_stepwise(copy, "linear", ["copy", "x3"])
        assert trace.selected == ["copy"]
        assert trace.final_skipped == ["x3"]
        trace = forward_stepwise(copy, "linear", ["x3", "copy"])
        assert trace.selected == ["x3"]
        assert trace.final_skipped == ["copy"]

    def test_skips_dependent_candidates(self, matrix: FeatureMatrix) -> None:
        twice = FeatureMatrix(
            (*matrix.columns, "twice_x3", "constant"),
            np.column_stack([matrix.X, 2 * matrix.X[:, 3], np.ones(matrix.n)]),
            matrix.y,
        )
        trace = forward_stepwise(twice, "linear", ["constant", "x3", "twice_x3", "x0"])
        first = trace.selected[0]
        assert first in {"x3", "twice_x3"}
        other = "twice_x3" if first == "x3" else "x3"
        assert trace.steps[0].skipped == ["constant"]
        assert trace.selected[1] == "x0"
        assert trace.steps[1].skipped == ["constant", other]
        assert trace.final_skipped == ["constant", other]
        with pytest.raises(CollinearColumns):
            fit_ols(select_columns(twice, ["x3", "twice_x3"]))

    def test_parallel_map(self, matrix: FeatureMatrix) -> None:
        serial = forward_stepwise(matrix, "linear", matrix.columns)
        with ThreadPool(3) as pool:
            parallel = forward_stepwise(
                matrix, "linear", matrix.columns, map_=pool.map
            )
        assert parallel == serial

    def test_column_scale_invariance(self) -> None:
        rng = np.random.default_rng(1000)
        for _ in range(50):
            p = int(rng.integers(2, 7))
            coefficients = rng.normal(size=p) * (rng.random(p) < 0.5)
            n = int(rng.integers(60, 200))
            matrix = random_matrix(rng, n, p, coefficients=coefficients)
            X = matrix.X.copy()
            X[:, int(rng.integers(p))] *= 1000.0
            scaled = FeatureMatrix(matrix.columns, X, matrix.y)
            original = forward_stepwise(matrix, "linear", matrix.columns)
            rescaled = forward_stepwise(scaled, "linear", scaled.columns)
            assert rescaled.selected == original.selected

    def test_pure_noise_takes_no_steps(self) -> None:
        empty = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            matrix = random_matrix(rng, 1000, 3, coefficients=np.zeros(3))
            trace = forward_stepwise(matrix, "linear", matrix.columns, criterion="bic")
            empty += not trace.steps
        assert empty >= 90

    def test_multinomial(self) -> None:
        rng = np.random.default_rng(4)
        X = rng.normal(size=(600, 3))
        p = expit(2.0 * X[:, 1])
        y = (rng.random(600) < p).astype(np.float64) * 2
        matrix = FeatureMatrix(("a", "b", "c"), X, y, "occupancy_category")
        trace = forward_stepwise(matrix, "multinomial", ["a", "b", "c"])
        assert trace.selected[0] == "b"
        assert trace.linear_model is None
        assert trace.multinomial_model is not None
        assert trace.model.feature_names == trace.selected
        assert trace.steps[0].aic < trace.start_aic

    def test_schema(self, matrix: FeatureMatrix) -> None:
        trace = forward_stepwise(matrix, "linear", matrix.columns)
        dumped = StepwiseTraceSchema().dump(trace)
        assert dumped["family"] == "linear"
        assert dumped["multinomial_model"] is None
        assert [step["feature"] for step in dumped["steps"]] == trace.selected
        loaded = StepwiseTraceSchema().load(dumped)
        assert isinstance(loaded, StepwiseTrace)
        assert loaded == trace


class TestErrors:
    def test_unknown_criterion(self, matrix: FeatureMatrix) -> None:
        with pytest.raises(StepwiseError, match="criterion"):
            forward_stepwise(matrix, "linear", ["x0"], criterion="cp")

    def test_unknown_family(self, matrix: FeatureMatrix) -> None:
        with pytest.raises(StepwiseError, match="family"):
            forward_stepwise(matrix, "poisson", ["x0"])

    def test_unknown_candidate(self, matrix: FeatureMatrix) -> None:
        with pytest.raises(UnknownFeature, match="x9"):
            forward_stepwise(matrix, "linear", ["x0", "x9"])

    def test_duplicate_candidates(self, matrix: FeatureMatrix) -> None:
        with pytest.raises(StepwiseError, match="duplicate"):
            forward_stepwise(matrix, "linear", ["x0", "x0"])

    def test_constant_target(self) -> None:
        matrix = FeatureMatrix(("a",), [[1.0], [2.0], [3.0]], [0.5, 0.5, 0.5])
        with pytest.raises(StepwiseError, match="intercept-only"):
            forward_stepwise(matrix, "linear", ["a"])


def oracle_path(matrix: FeatureMatrix, family: str) -> list[str]:
    """Forward path from evaluating every one-feature extension per round."""

    def aic(names: list[str]) -> float:
        sub = select_columns(matrix, names)
        if family == "linear":
            return aic_linear(fit_ols(sub))
        return fit_multinomial(sub).aic

    selected: list[str] = []
    current = aic([])
    while len(selected) < matrix.p:
        values = {c: aic([*selected, c]) for c in matrix.columns if c not in selected}
        best = min(values, key=values.__getitem__)
        if not values[best] < current - 1e-10:
            break
        selected.append(best)
        current = values[best]
    return selected


@pytest.mark.parametrize(
    ("family", "instances"), [("linear", 100), ("multinomial", 25)]
)
def test_matches_oracle(family: str, instances: int) -> None:
    rng = np.random.default_rng(2718)
    for _ in range(instances):
        n = int(rng.integers(60, 200))
        p = int(rng.integers(1, 7))
        coefficients = rng.normal(size=p) * (rng.random(p) < 0.5)
        matrix = random_matrix(rng, n, p, coefficients=coefficients)
        if family == "multinomial":
            labels = np.digitize(matrix.y, np.quantile(matrix.y, [1 / 3, 2 / 3]))
            matrix = with_target(matrix, labels, "occupancy_category")
        trace = forward_stepwise(matrix, family, matrix.columns)
        assert trace.selected == oracle_path(matrix, family)
