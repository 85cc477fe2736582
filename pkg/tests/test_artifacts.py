from __future__ import annotations

import json
import math
from pathlib import Path

import pandas as pd
import pytest

from occupancy.artifacts import dumps
from occupancy.artifacts import frame_to_csv
from occupancy.artifacts import write_frame
from occupancy.artifacts import write_json
from occupancy.artifacts import write_text
from occupancy.models import FittedLinearModel
from occupancy.models import FittedLinearModelSchema


def test_dumps() -> None:
    assert dumps({"b": 1, "a": [1.5, None]}) == (
        '{\n  "a": [\n    1.5,\n    null\n  ],\n  "b": 1\n}\n'
    )


def test_dumps_non_finite() -> None:
    assert dumps({"aic": -math.inf, "x": (math.nan, 2.0)}) == (
        '{\n  "aic": null,\n  "x": [\n    null,\n    2.0\n  ]\n}\n'
    )


def test_exact_fit_is_valid_json(tmp_path: Path) -> None:
    model = FittedLinearModel(
        feature_names=["x"],
        intercept=0.0,
        coefficients=[2.0],
        n=3,
        rss=0.0,
        r_squared=1.0,
        aic=-math.inf,
        bic=-math.inf,
    )
    path = tmp_path / "model.json"
    write_json(path, FittedLinearModelSchema().dump(model))
    dumped = json.loads(path.read_text(encoding="utf-8"), parse_constant=pytest.fail)
    assert dumped["aic"] is None
    assert FittedLinearModelSchema().load(dumped).aic is None


class Test_write_text:
    def test_creates_directories(self, tmp_path: Path) -> None:
        path = tmp_path / "a" / "b" / "out.txt"
        write_text(path, "x\r\ny\n")
        assert path.read_bytes() == b"x\r\ny\n"

    def test_overwrites(self, tmp_path: Path) -> None:
        path = tmp_path / "out.txt"
        path.write_text("old", encoding="utf-8")
        write_text(path, "new")
        assert path.read_text(encoding="utf-8") == "new"
        assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]

    def test_logs(self, tmp_path: Path, caplog: pytest.LogCaptureFixture) -> None:
        caplog.set_level("INFO")
        write_text(tmp_path / "out.txt", "")
        assert "wrote" in caplog.text


def test_write_json(tmp_path: Path) -> None:
    write_json(tmp_path / "data.json", {"z": 0, "a": 1})
    assert (tmp_path / "data.json").read_text(encoding="utf-8") == (
        '{\n  "a": 1,\n  "z": 0\n}\n'
    )


class Test_frame_to_csv:
    @pytest.fixture
    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({"name": ["a", "b"], "value": [0.1 + 0.2, 2.0]})

    def test_plot_format(self, frame: pd.DataFrame) -> None:
        assert frame_to_csv(frame) == "name,value\na,0.3\nb,2\n"

    def test_round_trip_format(self, frame: pd.DataFrame) -> None:
        assert frame_to_csv(frame, None) == (
            "name,value\na,0.30000000000000004\nb,2.0\n"
        )

    def test_write_frame(self, tmp_path: Path, frame: pd.DataFrame) -> None:
        write_frame(tmp_path / "plot.csv", frame)
        assert (tmp_path / "plot.csv").read_bytes() == b"name,value\na,0.3\nb,2\n"
