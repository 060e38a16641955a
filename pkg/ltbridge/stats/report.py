import json
import math
from typing import ClassVar, Literal

from pydantic import BaseModel, Field

from ltbridge.common.config import ALPHA


class TestReportEntry(BaseModel):
    """One statistical verdict and the oracle it was checked against."""

    __test__: ClassVar[bool] = False

    name: str
    oracle: str
    statistic: float
    p_value: float | None = None
    n: int
    n2: int | None = None
    alpha: float = ALPHA
    expect: Literal["accept", "reject"] = "accept"
    passed: bool
    inconclusive: bool = False
    notes: str = ""


class TestReport(BaseModel):
    __test__: ClassVar[bool] = False

    entries: list[TestReportEntry] = Field(default_factory=list)

    def add(self, entry: TestReportEntry) -> TestReportEntry:
        self.entries.append(entry)
        return entry

    def extend(self, other: "TestReport") -> "TestReport":
        self.entries.extend(other.entries)
        return self

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries if not e.inconclusive)

    @property
    def failures(self) -> list[TestReportEntry]:
        return [e for e in self.entries if not e.passed and not e.inconclusive]

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2, sort_keys=True)

    def render_table(self) -> str:
        header = f"{'name':<44} {'statistic':>11} {'p_value':>9} {'n':>7} {'n2':>7} {'verdict':>12}"
        lines = [header, "-" * len(header)]
        for e in self.entries:
            p = "-" if e.p_value is None or math.isnan(e.p_value) else f"{e.p_value:.4f}"
            n2 = "-" if e.n2 is None else str(e.n2)
            verdict = "inconclusive" if e.inconclusive else ("pass" if e.passed else "FAIL")
            lines.append(f"{e.name[:44]:<44} {e.statistic:>11.5g} {p:>9} {e.n:>7} {n2:>7} {verdict:>12}")
        lines.append("-" * len(header))
        lines.append(f"{len(self.entries)} entries, {len(self.failures)} failed")
        return "\n".join(lines)
