"""Exception base shared by the analysis modules."""

from __future__ import annotations


class AnalysisError(ValueError):
    """Base for errors the command line reports as structured failures."""
