"""Tabular execution results and their canonical text form."""

from __future__ import annotations

from dataclasses import dataclass, field

NULL_TEXT = "__NULL__"


def _cell(value) -> str:
    if value is None:
        return NULL_TEXT
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        text = repr(value)
    else:
        text = str(value)
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n").replace("\r", "\\r")


@dataclass(frozen=True)
class ResultTable:
    """Column names plus rows of scalars (str, int, float, bool or None)."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} values, expected {width}")

    def __len__(self) -> int:
        return len(self.rows)

    def to_text(self) -> str:
        """Header line, then one tab-separated line per row; nulls as ``__NULL__``."""
        lines = ["\t".join(_cell(c) for c in self.columns)]
        lines.extend("\t".join(_cell(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "rows": [list(r) for r in self.rows]}
