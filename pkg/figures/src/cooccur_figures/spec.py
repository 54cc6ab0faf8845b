"""Figure specifications: what to plot, from which CSV, to which file."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

KINDS = (
    "stacked-proportions",
    "grouped-shares",
    "baseline-comparison",
    "window-lines",
    "source-facets",
)


class FigureError(Exception):
    """Bad figure spec or unusable input data."""


@dataclass
class FigureSpec:
    """One figure: kind + input CSV(s) + output image path + row filters.

    ``baseline-comparison`` accepts several input CSVs (one per baseline);
    every other kind takes exactly one.  The sidecar CSV, written next to
    the image unless overridden, echoes exactly the rows and values that
    were plotted.
    """

    kind: str
    inputs: list[str]
    output: str
    window: str | None = None
    dimension: str | None = None
    sidecar: str | None = None
    title: str | None = None
    _: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r} (expected one of {', '.join(KINDS)})")
        if not self.inputs:
            raise FigureError("no input CSV given")
        if self.kind != "baseline-comparison" and len(self.inputs) > 1:
            raise FigureError(f"kind {self.kind} takes exactly one input CSV")

    def sidecar_path(self) -> Path:
        if self.sidecar:
            return Path(self.sidecar)
        out = Path(self.output)
        return out.with_suffix(out.suffix + ".sidecar.csv")


def load_spec(path: str | Path) -> FigureSpec:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    inputs = data.get("input", data.get("inputs"))
    if isinstance(inputs, str):
        inputs = [inputs]
    return FigureSpec(
        kind=data.get("kind", ""),
        inputs=inputs or [],
        output=data["output"],
        window=data.get("window"),
        dimension=data.get("dimension"),
        sidecar=data.get("sidecar"),
        title=data.get("title"),
    )
