from __future__ import annotations

import csv
import io
import json
import os
from enum import Enum
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, Field, computed_field, field_validator, model_validator

from tmbinomial import settings


class Provenance(str, Enum):
    ORACLE = "oracle"
    CLOSED_FORM = "closed_form"


class ComplexityRow(BaseModel):
    n: int = Field(ge=0)
    value: int = Field(ge=0)
    provenance: Provenance = Provenance.ORACLE


class ComplexityTable(BaseModel):
    m: int = Field(ge=1)
    k: int = Field(ge=1)
    rows: list[ComplexityRow] = Field(default_factory=list)
    generator: str = "morphism"
    oracle_checked: bool = False

    def value(self, n: int) -> int:
        for row in self.rows:
            if row.n == n:
                return row.value
        raise KeyError(n)

    def as_dict(self) -> dict[int, int]:
        return {row.n: row.value for row in self.rows}

    def slice(self, lo: int, hi: int) -> "ComplexityTable":
        return self.model_copy(update={"rows": [r for r in self.rows if lo <= r.n <= hi]})

    def meta(self) -> dict[str, Any]:
        return {
            "m": self.m,
            "k": self.k,
            "generator": self.generator,
            "oracle_checked": self.oracle_checked,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "value", "provenance"])
        for row in self.rows:
            writer.writerow([row.n, row.value, row.provenance.value])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "meta": self.meta(),
            "rows": [row.model_dump(mode="json") for row in self.rows],
        }
        return json.dumps(payload, indent=2) + "\n"

    def to_plain(self) -> str:
        return "".join(f"{row.n} {row.value} {row.provenance.value}\n" for row in self.rows)

    def render(self, output_format: str) -> str:
        if output_format == "csv":
            return self.to_csv()
        if output_format == "json":
            return self.to_json()
        return self.to_plain()

    @classmethod
    def from_csv(cls, text: str, m: int, k: int, **meta: Any) -> "ComplexityTable":
        reader = csv.DictReader(io.StringIO(text))
        rows = [
            ComplexityRow(n=int(r["n"]), value=int(r["value"]), provenance=Provenance(r["provenance"]))
            for r in reader
        ]
        return cls(m=m, k=k, rows=rows, **meta)

    @classmethod
    def from_json(cls, text: str) -> "ComplexityTable":
        payload = json.loads(text)
        return cls(rows=[ComplexityRow.model_validate(r) for r in payload["rows"]], **payload["meta"])


class RunConfig(BaseModel):
    m: Optional[int] = Field(default=None, ge=2, le=settings.MAX_ALPHABET)
    k: int = Field(default=2, ge=1)
    n_lo: Optional[int] = Field(default=None, ge=0)
    n_hi: Optional[int] = Field(default=None, ge=0)
    prefix_growth_k: int = Field(default=settings.PREFIX_GROWTH_K, ge=1)
    max_doublings: int = Field(default=settings.MAX_DOUBLINGS, ge=0)
    jobs: Union[int, Literal["auto"]] = Field(default=settings.JOBS, validate_default=True)
    output_format: Literal["csv", "json", "plain"] = "csv"
    budget_mb: int = Field(default=settings.BUDGET_MB, ge=1)
    strategy: Literal["cover", "prefix"] = settings.STRATEGY

    @field_validator("jobs", mode="before")
    @classmethod
    def _parse_jobs(cls, value: Any) -> Any:
        if isinstance(value, str) and value != "auto":
            return int(value)
        return value

    @field_validator("jobs")
    @classmethod
    def _positive_jobs(cls, value: Union[int, str]) -> Union[int, str]:
        if value != "auto" and value < 1:
            raise ValueError("jobs must be positive or 'auto'")
        return value

    @model_validator(mode="after")
    def _non_empty_range(self) -> "RunConfig":
        if self.n_lo is not None and self.n_hi is not None and self.n_lo > self.n_hi:
            raise ValueError("n range is empty")
        return self

    @property
    def workers(self) -> int:
        if self.jobs == "auto":
            return os.cpu_count() or 1
        return int(self.jobs)

    @property
    def n_range(self) -> range:
        if self.n_lo is None or self.n_hi is None:
            raise ValueError("n range is not set")
        return range(self.n_lo, self.n_hi + 1)


class ClaimRecord(BaseModel):
    claim_id: str
    anchor: str
    expected: Any
    observed: Any
    passed: bool

    @computed_field
    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


class VerificationReport(BaseModel):
    suite: str
    records: list[ClaimRecord] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)

    @computed_field
    @property
    def verdict(self) -> str:
        return "pass" if all(r.passed for r in self.records) else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def add(self, claim_id: str, anchor: str, expected: Any, observed: Any) -> ClaimRecord:
        record = ClaimRecord(
            claim_id=claim_id,
            anchor=anchor,
            expected=expected,
            observed=observed,
            passed=expected == observed,
        )
        self.records.append(record)
        return record

    def failures(self) -> list[ClaimRecord]:
        return [r for r in self.records if not r.passed]


class PeriodicityReport(BaseModel):
    period_tested: int = Field(ge=1)
    offset: int = Field(ge=0)
    window: tuple[int, int]
    verdict: Literal["consistent", "violated"]
    violated_at: Optional[int] = None
    pairs_compared: int = 0
    values: list[ComplexityRow] = Field(default_factory=list)
    assumptions: list[str] = Field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"


class CounterexampleReport(BaseModel):
    images: list[str]
    literal_u: str
    literal_v: str
    literal_equivalent: bool
    literal_u_is_factor: bool
    literal_v_is_factor: bool
    witness_u: Optional[str] = None
    witness_v: Optional[str] = None
    witness_beta_u: Optional[str] = None
    witness_beta_v: Optional[str] = None

    @computed_field
    @property
    def holds(self) -> bool:
        return self.witness_u is not None and self.witness_beta_u != self.witness_beta_v
