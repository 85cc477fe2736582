"""Atomic emission of the JSON, CSV and text files the commands produce."""

from __future__ import annotations

import json
import logging
import math
import os
from typing import Any
from typing import TYPE_CHECKING

import pandas as pd
from atomicwrites import atomic_write

if TYPE_CHECKING:
    from _typeshed import StrPath
else:
    StrPath = object

log = logging.getLogger()

PLOT_FLOAT_FORMAT = "%.10g"


def _finite(data: Any) -> Any:
    """Copy of ``data`` with non-finite floats replaced by ``None``."""
    if isinstance(data, float):
        return data if math.isfinite(data) else None
    if isinstance(data, dict):
        return {key: _finite(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [_finite(value) for value in data]
    return data


def dumps(data: Any) -> str:
    """Canonical JSON text: sorted keys, two-space indent, final newline.

    JSON has no infinities or NaN; such values (the AIC of an exact fit)
    are written as ``null``.
    """
    text = json.dumps(_finite(data), indent=2, sort_keys=True, allow_nan=False)
    return text + "\n"


def _prepare(path: StrPath) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_text(path: StrPath, text: str) -> None:
    _prepare(path)
    with atomic_write(
        path, mode="w", overwrite=True, encoding="utf-8", newline=""
    ) as fp:
        fp.write(text)
    log.info("wrote %s", path)


def write_json(path: StrPath, data: Any) -> None:
    write_text(path, dumps(data))


def frame_to_csv(
    frame: pd.DataFrame, float_format: str | None = PLOT_FLOAT_FORMAT
) -> str:
    """CSV text without an index column and with ``\\n`` line endings.

    Pass ``float_format=None`` for shortest round-tripping floats.
    """
    text: str = frame.to_csv(
        index=False, float_format=float_format, lineterminator="\n"
    )
    return text


def write_frame(
    path: StrPath, frame: pd.DataFrame, float_format: str | None = PLOT_FLOAT_FORMAT
) -> None:
    write_text(path, frame_to_csv(frame, float_format))
