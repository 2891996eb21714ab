"""Calendar quarters and the study window they are indexed against."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List

from .constants import STUDY_END, STUDY_START
from .errors import InvalidValueError

_QUARTER_PATTERN = re.compile(r"^\s*(\d{4})\s*[Qq]\s*([1-4])\s*$")
_BASE_YEAR = 2017


@dataclass(frozen=True, order=True, slots=True)
class Quarter:
    """A calendar quarter; ``index`` counts from 2017Q1 = 0."""

    year: int
    q: int

    def __post_init__(self) -> None:
        if not 1 <= self.q <= 4:
            raise InvalidValueError(f"Quarter number must be 1..4, got {self.q}")

    @classmethod
    def parse(cls, text: str) -> "Quarter":
        match = _QUARTER_PATTERN.match(str(text))
        if not match:
            raise InvalidValueError(f"Not a quarter label: {text!r} (expected e.g. 2019Q3)")
        return cls(int(match.group(1)), int(match.group(2)))

    @classmethod
    def from_index(cls, index: int) -> "Quarter":
        year, rem = divmod(index, 4)
        return cls(_BASE_YEAR + year, rem + 1)

    @property
    def index(self) -> int:
        return (self.year - _BASE_YEAR) * 4 + (self.q - 1)

    def shift(self, quarters: int) -> "Quarter":
        return Quarter.from_index(self.index + quarters)

    def __str__(self) -> str:
        return f"{self.year}Q{self.q}"


FIRST_QUARTER = Quarter.parse(STUDY_START)
LAST_QUARTER = Quarter.parse(STUDY_END)


def study_quarters(start: Quarter = FIRST_QUARTER, end: Quarter = LAST_QUARTER) -> List[Quarter]:
    """Return every quarter from ``start`` to ``end`` inclusive."""

    return [Quarter.from_index(i) for i in range(start.index, end.index + 1)]


__all__ = ["FIRST_QUARTER", "LAST_QUARTER", "Quarter", "study_quarters"]
