"""Policy portfolio ingestion, cleaning, and cross-validation fold assignment.

The regression target is the annual claim rate of a policy: total value of
claims divided by the policy lifetime in years (exposure). Input files are
plain CSV with a header row; each row is one policy, reduced upstream to the
primary driver/car pair.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

CATEGORICAL = "categorical"
NUMERIC = "numeric"

#: Minimum policy lifetime kept by default cleaning (30 days, in years).
DEFAULT_MIN_EXPOSURE_YEARS = 30.0 / 365.0
DEFAULT_MAX_DRIVER_AGE = 85.0


class SchemaError(ValueError):
    """A loaded file does not match the declared schema."""


class RowError(ValueError):
    """A row holds a value that cannot be parsed into a policy record."""


@dataclass(frozen=True)
class Feature:
    """One declared policy feature.

    ``kind`` is either ``categorical`` (values compared as opaque strings) or
    ``numeric`` (values parsed to floats but still treated as exact-valued
    categories; the numeric ordering only matters for interpolation of
    unseen values at encode time).
    """

    name: str
    kind: str = CATEGORICAL

    def __post_init__(self):
        if self.kind not in (CATEGORICAL, NUMERIC):
            raise SchemaError(f"unknown feature kind {self.kind!r} for {self.name!r}")


@dataclass(frozen=True)
class FeatureSchema:
    """Declared features plus the bookkeeping columns of the input CSV."""

    features: tuple[Feature, ...]
    id_column: str = "POL"
    claims_column: str = "TOTAL_CLAIMS"
    exposure_column: str = "EXPOSURE"

    def __post_init__(self):
        if not self.features:
            raise SchemaError("schema declares no features")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names in schema")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def feature(self, name: str) -> Feature:
        for f in self.features:
            if f.name == name:
                return f
        raise SchemaError(f"feature {name!r} not declared in schema")


@dataclass(frozen=True)
class PolicyRecord:
    """One policy sample: feature values, totals, and the derived claim rate.

    ``values`` maps feature name to the category value: a string for
    categorical features, a float for numeric ones, or None when the cell
    was empty.
    """

    id: str
    values: dict[str, object]
    total_claims: float
    exposure_years: float

    def __post_init__(self):
        if self.exposure_years <= 0:
            raise RowError(f"record {self.id!r}: exposure must be positive")
        if self.total_claims < 0:
            raise RowError(f"record {self.id!r}: total claims must be >= 0")

    @property
    def claim_rate(self) -> float:
        return self.total_claims / self.exposure_years


@dataclass(frozen=True)
class Portfolio:
    """An ordered collection of policy records under one schema."""

    schema: FeatureSchema
    records: tuple[PolicyRecord, ...]

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate policy ids in portfolio")

    def __len__(self) -> int:
        return len(self.records)

    def claim_rates(self) -> np.ndarray:
        return np.array([r.claim_rate for r in self.records], dtype=float)

    def ids(self) -> list[str]:
        return [r.id for r in self.records]


@dataclass(frozen=True)
class CleaningRules:
    """Filters applied by :func:`clean`. A record failing any rule is dropped
    and logged; cleaning never raises.

    The age and third-party rules only fire when the named columns exist in
    the portfolio's schema, so one rule set covers real and synthetic books.
    """

    max_driver_age: float = DEFAULT_MAX_DRIVER_AGE
    min_exposure_years: float = DEFAULT_MIN_EXPOSURE_YEARS
    drop_missing: bool = True
    age_feature: str = "AGE"
    policy_type_feature: str = "TOC"
    third_party_value: str = "TP"
    sum_insured_feature: str = "SIV"


@dataclass(frozen=True)
class Rejection:
    id: str
    reason: str


@dataclass(frozen=True)
class FoldAssignment:
    """Record-id to fold-index map for k-fold cross validation."""

    k: int
    seed: int
    assignment: dict[str, int]

    def fold_of(self, record_id: str) -> int:
        return self.assignment[record_id]


def _parse_cell(raw: str, kind: str, row_num: int, column: str):
    """Empty cells become None (missing); numeric cells must parse."""
    text = raw.strip() if raw is not None else ""
    if text == "":
        return None
    if kind == NUMERIC:
        try:
            value = float(text)
        except ValueError:
            raise RowError(
                f"row {row_num}: cannot parse {text!r} in column {column!r} as a number"
            ) from None
        if not math.isfinite(value):
            raise RowError(f"row {row_num}: non-finite value {text!r} in column {column!r}")
        return value
    return text


def _parse_required_float(raw: str, row_num: int, column: str) -> float:
    text = (raw or "").strip()
    try:
        value = float(text)
    except ValueError:
        raise RowError(
            f"row {row_num}: cannot parse {text!r} in column {column!r} as a number"
        ) from None
    if not math.isfinite(value):
        raise RowError(f"row {row_num}: non-finite value {text!r} in column {column!r}")
    return value


def load_portfolio(path, schema: FeatureSchema) -> Portfolio:
    """Read a policy CSV into a Portfolio, deriving claim rates.

    Row order is preserved. Raises SchemaError if a declared column is
    missing from the header, RowError (with the 1-based data row number) on
    unparseable numeric cells or non-positive exposure, and SchemaError on
    duplicate policy ids.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected a header row") from None
        header = [h.strip() for h in header]
        col_index: dict[str, int] = {}
        for idx, name in enumerate(header):
            col_index.setdefault(name, idx)

        required = [schema.id_column, schema.claims_column, schema.exposure_column]
        required += list(schema.feature_names)
        for column in required:
            if column not in col_index:
                raise SchemaError(f"{path}: required column {column!r} missing from header")

        records = []
        seen_ids = set()
        for row_num, row in enumerate(reader, start=1):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) < len(header):
                raise RowError(f"row {row_num}: expected {len(header)} cells, got {len(row)}")
            rid = row[col_index[schema.id_column]].strip()
            if rid == "":
                raise RowError(f"row {row_num}: empty policy id")
            if rid in seen_ids:
                raise SchemaError(f"row {row_num}: duplicate policy id {rid!r}")
            seen_ids.add(rid)
            total = _parse_required_float(row[col_index[schema.claims_column]], row_num, schema.claims_column)
            exposure = _parse_required_float(row[col_index[schema.exposure_column]], row_num, schema.exposure_column)
            if exposure <= 0:
                raise RowError(f"row {row_num}: exposure must be positive, got {exposure}")
            if total < 0:
                raise RowError(f"row {row_num}: total claims must be >= 0, got {total}")
            values = {
                f.name: _parse_cell(row[col_index[f.name]], f.kind, row_num, f.name)
                for f in schema.features
            }
            records.append(PolicyRecord(id=rid, values=values, total_claims=total, exposure_years=exposure))

    return Portfolio(schema=schema, records=tuple(records))


def _as_float(value) -> float | None:
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


def _rejection_reason(record: PolicyRecord, schema: FeatureSchema, rules: CleaningRules) -> str | None:
    if rules.drop_missing:
        for name in schema.feature_names:
            if record.values.get(name) is None:
                return f"missing value for {name}"
    declared = set(schema.feature_names)
    if rules.age_feature in declared:
        age = _as_float(record.values.get(rules.age_feature))
        if age is not None and age > rules.max_driver_age:
            return f"age > {rules.max_driver_age:g}"
    if record.exposure_years < rules.min_exposure_years:
        return "exposure below minimum"
    if rules.policy_type_feature in declared and rules.sum_insured_feature in declared:
        toc = record.values.get(rules.policy_type_feature)
        siv = _as_float(record.values.get(rules.sum_insured_feature))
        if toc == rules.third_party_value and siv is not None and siv != 0.0:
            return "third-party record with nonzero sum insured"
    return None


def clean(portfolio: Portfolio, rules: CleaningRules | None = None) -> tuple[Portfolio, list[Rejection]]:
    """Apply cleaning filters; return the retained portfolio and a log of
    (id, reason) for every dropped record. Records are never mutated.
    """
    rules = rules or CleaningRules()
    kept = []
    rejected = []
    for record in portfolio.records:
        reason = _rejection_reason(record, portfolio.schema, rules)
        if reason is None:
            kept.append(record)
        else:
            rejected.append(Rejection(id=record.id, reason=reason))
    return Portfolio(schema=portfolio.schema, records=tuple(kept)), rejected


def split_folds(portfolio: Portfolio, k: int, seed: int) -> FoldAssignment:
    """Assign every record to one of ``k`` folds: uniform shuffle of the
    record order under ``seed``, then round-robin. Fold sizes differ by at
    most one; the assignment is deterministic for fixed inputs.
    """
    n = len(portfolio)
    if k < 2:
        raise ValueError(f"fold count must be >= 2, got {k}")
    if k > n:
        raise ValueError(f"fold count {k} exceeds record count {n}")
    order = np.random.default_rng(seed).permutation(n)
    assignment = {portfolio.records[idx].id: pos % k for pos, idx in enumerate(order)}
    return FoldAssignment(k=k, seed=seed, assignment=assignment)


def fold_split(portfolio: Portfolio, folds: FoldAssignment, fold: int) -> tuple[Portfolio, Portfolio]:
    """Return (training, test) portfolios for one fold, preserving record order."""
    train = [r for r in portfolio.records if folds.assignment[r.id] != fold]
    test = [r for r in portfolio.records if folds.assignment[r.id] == fold]
    schema = portfolio.schema
    return Portfolio(schema, tuple(train)), Portfolio(schema, tuple(test))


def parse_schema_file(path) -> FeatureSchema:
    """Read a plain-text schema definition.

    One directive per line; `#` starts a comment. Directives::

        id POL
        total_claims TOTAL_CLAIMS
        exposure EXPOSURE
        feature AGE numeric
        feature SEX categorical

    The id/total_claims/exposure lines are optional and default to the
    column names above; feature kind defaults to categorical.
    """
    id_column = "POL"
    claims_column = "TOTAL_CLAIMS"
    exposure_column = "EXPOSURE"
    features: list[Feature] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_num, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            tokens = text.split()
            directive = tokens[0].lower()
            if directive == "feature":
                if len(tokens) == 2:
                    features.append(Feature(tokens[1]))
                elif len(tokens) == 3:
                    features.append(Feature(tokens[1], tokens[2].lower()))
                else:
                    raise SchemaError(f"{path}:{line_num}: expected 'feature NAME [kind]'")
            elif directive == "id" and len(tokens) == 2:
                id_column = tokens[1]
            elif directive == "total_claims" and len(tokens) == 2:
                claims_column = tokens[1]
            elif directive == "exposure" and len(tokens) == 2:
                exposure_column = tokens[1]
            else:
                raise SchemaError(f"{path}:{line_num}: unknown schema directive {text!r}")
    if not features:
        raise SchemaError(f"{path}: schema file declares no features")
    return FeatureSchema(features=tuple(features), id_column=id_column,
                         claims_column=claims_column, exposure_column=exposure_column)


def write_schema_file(path, schema: FeatureSchema) -> None:
    lines = [
        f"id {schema.id_column}",
        f"total_claims {schema.claims_column}",
        f"exposure {schema.exposure_column}",
    ]
    lines += [f"feature {f.name} {f.kind}" for f in schema.features]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
