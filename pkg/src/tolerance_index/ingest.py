"""Parse and validate survey/diary CSVs and match respondents into couples."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import (
    DuplicateSlot,
    MissingRequiredField,
    MissingSlot,
    OutOfRangeScore,
    SchemaError,
    UnknownActivity,
    UnknownItem,
)
from .registry import ItemRegistry, Taxonomy

SLOTS_PER_DAY = 144
DAY_KINDS = ("weekday", "weekend")
GENDERS = ("female", "male")
VIGNETTE_ARMS = ("physical", "psychological")

DIARY_COLUMNS = (
    "respondent_id",
    "day_kind",
    "slot_index",
    "primary_code",
    "secondary_code",
    "with_partner",
    "with_children",
)
SURVEY_BASE_COLUMNS = (
    "respondent_id",
    "couple_id",
    "gender",
    "education_years",
    "employed",
    "vignette_arm",
    "info_treated",
    "weight",
)


@dataclass(frozen=True, eq=False)
class DiaryDay:
    """One respondent-day of 144 ten-minute slots.

    Slot arrays are indexed by slot position. ``secondary`` holds ``""`` where
    no secondary activity was recorded.
    """

    respondent_id: str
    day_kind: str
    primary: np.ndarray
    primary_group: np.ndarray
    secondary: np.ndarray
    with_partner: np.ndarray
    with_children: np.ndarray

    def __post_init__(self):
        for name in ("primary", "primary_group", "secondary", "with_partner", "with_children"):
            if len(getattr(self, name)) != SLOTS_PER_DAY:
                raise SchemaError(f"{name} must have {SLOTS_PER_DAY} slots")

    def __eq__(self, other):
        if not isinstance(other, DiaryDay):
            return NotImplemented
        return (
            self.respondent_id == other.respondent_id
            and self.day_kind == other.day_kind
            and np.array_equal(self.primary, other.primary)
            and np.array_equal(self.primary_group, other.primary_group)
            and np.array_equal(self.secondary, other.secondary)
            and np.array_equal(self.with_partner, other.with_partner)
            and np.array_equal(self.with_children, other.with_children)
        )

    __hash__ = None


@dataclass(frozen=True)
class SurveyResponse:
    respondent_id: str
    couple_id: str
    gender: str
    education_years: float
    employed: bool
    vignette_arm: str
    info_treated: bool
    items: dict[str, float] = field(default_factory=dict)
    weight: float | None = None


@dataclass(frozen=True)
class Member:
    survey: SurveyResponse
    weekday: DiaryDay
    weekend: DiaryDay

    @property
    def respondent_id(self) -> str:
        return self.survey.respondent_id


@dataclass(frozen=True)
class CoupleRecord:
    couple_id: str
    female: Member
    male: Member


@dataclass
class ExclusionReport:
    """Respondents dropped by couple matching, with a reason per respondent."""

    excluded: dict[str, str] = field(default_factory=dict)
    orphan_diary_respondents: list[str] = field(default_factory=list)

    @property
    def reason_counts(self) -> dict[str, int]:
        return dict(sorted(Counter(self.excluded.values()).items()))

    def to_dict(self) -> dict:
        return {
            "excluded": dict(sorted(self.excluded.items())),
            "reason_counts": self.reason_counts,
            "orphan_diary_respondents": sorted(self.orphan_diary_respondents),
        }


# reason codes
INCOMPLETE_DIARY = "IncompleteDiary"
MISSING_PARTNER = "MissingPartner"
SAME_GENDER = "SameGender"
TOO_MANY_MEMBERS = "TooManyMembers"


def _read_csv(path: str | Path) -> pd.DataFrame:
    return pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)


def _parse_bool(values: pd.Series, column: str) -> np.ndarray:
    bad = ~values.isin(("0", "1"))
    if bad.any():
        raise SchemaError(f"column {column!r} must be 0/1, got {values[bad].iloc[0]!r}")
    return (values == "1").to_numpy()


def diary_days_from_frame(df: pd.DataFrame, taxonomy: Taxonomy) -> list[DiaryDay]:
    """Validate a diary table (all string columns) into DiaryDay records."""
    if set(df.columns) != set(DIARY_COLUMNS) or len(df.columns) != len(DIARY_COLUMNS):
        raise SchemaError(f"diary header must contain exactly {', '.join(DIARY_COLUMNS)}")
    if df.empty:
        return []

    bad_kind = ~df["day_kind"].isin(DAY_KINDS)
    if bad_kind.any():
        raise SchemaError(f"unknown day_kind {df['day_kind'][bad_kind].iloc[0]!r}")
    try:
        slot = df["slot_index"].astype(int).to_numpy()
    except ValueError as exc:
        raise SchemaError(f"non-integer slot_index: {exc}") from None
    if slot.min() < 0 or slot.max() >= SLOTS_PER_DAY:
        raise SchemaError(
            f"slot_index must lie in 0..{SLOTS_PER_DAY - 1} (10-minute resolution only)"
        )

    codes = set(df["primary_code"].unique())
    codes.update(c for c in df["secondary_code"].unique() if c != "")
    for code in sorted(codes):
        if code not in taxonomy:
            raise UnknownActivity(code)
    if (df["primary_code"] == "").any():
        raise SchemaError("every slot needs a primary_code")

    partner = _parse_bool(df["with_partner"], "with_partner")
    children = _parse_bool(df["with_children"], "with_children")
    primary = df["primary_code"].to_numpy(dtype=object)
    secondary = df["secondary_code"].to_numpy(dtype=object)
    group_of = taxonomy.groups
    groups = np.array([group_of[c] for c in primary], dtype=object)

    grouped = df.groupby(["respondent_id", "day_kind"], sort=False).indices
    # keep file order of first appearance
    order = sorted(grouped.items(), key=lambda kv: kv[1][0])

    days = []
    for (r, k), rows in order:
        s = slot[rows]
        counts = np.bincount(s, minlength=SLOTS_PER_DAY)
        if (counts > 1).any():
            raise DuplicateSlot(r, k, int(np.argmax(counts > 1)))
        if (counts == 0).any():
            raise MissingSlot(r, k, int(np.argmax(counts == 0)))
        idx = rows[np.argsort(s)]
        days.append(
            DiaryDay(
                respondent_id=r,
                day_kind=k,
                primary=primary[idx],
                primary_group=groups[idx],
                secondary=secondary[idx],
                with_partner=partner[idx],
                with_children=children[idx],
            )
        )
    return days


def parse_diary(path: str | Path, taxonomy: Taxonomy) -> list[DiaryDay]:
    """Read one diary CSV into validated DiaryDay records (file order of first appearance)."""
    return diary_days_from_frame(_read_csv(path), taxonomy)


def diary_frame(days: Iterable[DiaryDay]) -> pd.DataFrame:
    """Inverse of :func:`diary_days_from_frame`: serialize days to diary-schema rows."""
    parts = []
    for d in days:
        parts.append(
            pd.DataFrame(
                {
                    "respondent_id": d.respondent_id,
                    "day_kind": d.day_kind,
                    "slot_index": np.arange(SLOTS_PER_DAY),
                    "primary_code": d.primary,
                    "secondary_code": d.secondary,
                    "with_partner": d.with_partner.astype(int),
                    "with_children": d.with_children.astype(int),
                }
            )
        )
    if not parts:
        return pd.DataFrame(columns=list(DIARY_COLUMNS))
    return pd.concat(parts, ignore_index=True)[list(DIARY_COLUMNS)]


def _number(raw: str, field_name: str, rid: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise SchemaError(f"respondent {rid!r}: {field_name} {raw!r} is not a number") from None
    if not math.isfinite(value):
        raise SchemaError(f"respondent {rid!r}: {field_name} must be finite")
    return value


def _flag(raw: str, field_name: str, rid: str) -> bool:
    if raw not in ("0", "1"):
        raise SchemaError(f"respondent {rid!r}: {field_name} must be 0/1, got {raw!r}")
    return raw == "1"


def survey_responses_from_frame(df: pd.DataFrame, registry: ItemRegistry) -> list[SurveyResponse]:
    columns = list(df.columns)
    for col in SURVEY_BASE_COLUMNS:
        if col not in columns:
            raise MissingRequiredField(col)
    item_cols = [c for c in columns if c not in SURVEY_BASE_COLUMNS]
    for col in item_cols:
        if col not in registry:
            raise UnknownItem(col)
    for key in registry.keys:
        if key not in item_cols:
            raise MissingRequiredField(key)
    if len(set(columns)) != len(columns):
        raise SchemaError("duplicate survey columns")

    out = []
    seen: set[str] = set()
    for rec in df.to_dict("records"):
        rid = rec["respondent_id"]
        if not rid:
            raise MissingRequiredField("respondent_id")
        if rid in seen:
            raise SchemaError(f"respondent {rid!r} appears twice in the survey")
        seen.add(rid)
        for col in SURVEY_BASE_COLUMNS[:-1]:
            if rec[col] == "":
                raise MissingRequiredField(col, rid)
        gender = rec["gender"]
        if gender not in GENDERS:
            raise SchemaError(f"respondent {rid!r}: unknown gender {gender!r}")
        arm = rec["vignette_arm"]
        if arm not in VIGNETTE_ARMS:
            raise SchemaError(f"respondent {rid!r}: unknown vignette_arm {arm!r}")
        edu = _number(rec["education_years"], "education_years", rid)
        if edu < 0:
            raise SchemaError(f"respondent {rid!r}: negative education_years")
        weight = None
        if rec["weight"] != "":
            weight = _number(rec["weight"], "weight", rid)
            if weight <= 0:
                raise SchemaError(f"respondent {rid!r}: weight must be positive")

        items: dict[str, float] = {}
        for key in registry.keys:
            raw = rec[key]
            if raw == "":
                items[key] = math.nan
                continue
            value = _number(raw, key, rid)
            item = registry.items[key]
            if item.kind == "choice":
                if value not in item.choices:
                    raise SchemaError(
                        f"respondent {rid!r}: {key} = {raw!r} not one of {item.choices}"
                    )
            elif not 0.0 <= value <= 100.0:
                raise OutOfRangeScore(rid, key, value)
            items[key] = value

        out.append(
            SurveyResponse(
                respondent_id=rid,
                couple_id=rec["couple_id"],
                gender=gender,
                education_years=edu,
                employed=_flag(rec["employed"], "employed", rid),
                vignette_arm=arm,
                info_treated=_flag(rec["info_treated"], "info_treated", rid),
                items=items,
                weight=weight,
            )
        )
    return out


def parse_survey(path: str | Path, registry: ItemRegistry) -> list[SurveyResponse]:
    """Read the survey CSV. Column order is free; the column set is fixed by the registry."""
    return survey_responses_from_frame(_read_csv(path), registry)


def _fmt(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def survey_frame(responses: Sequence[SurveyResponse], registry: ItemRegistry) -> pd.DataFrame:
    rows = []
    for r in responses:
        row = {
            "respondent_id": r.respondent_id,
            "couple_id": r.couple_id,
            "gender": r.gender,
            "education_years": _fmt(r.education_years),
            "employed": str(int(r.employed)),
            "vignette_arm": r.vignette_arm,
            "info_treated": str(int(r.info_treated)),
            "weight": _fmt(r.weight),
        }
        for key in registry.keys:
            row[key] = _fmt(r.items.get(key, math.nan))
        rows.append(row)
    return pd.DataFrame(rows, columns=list(SURVEY_BASE_COLUMNS) + list(registry.keys))


def match_couples(
    surveys: Sequence[SurveyResponse], diaries: Sequence[DiaryDay]
) -> tuple[list[CoupleRecord], ExclusionReport]:
    """Pair one female and one male respondent per couple_id.

    Every survey respondent ends up either in a returned couple or in the
    exclusion report; nothing raises.
    """
    days: dict[str, dict[str, DiaryDay]] = defaultdict(dict)
    for d in diaries:
        days[d.respondent_id][d.day_kind] = d

    by_couple: dict[str, list[SurveyResponse]] = defaultdict(list)
    for s in surveys:
        by_couple[s.couple_id].append(s)

    report = ExclusionReport()
    survey_ids = {s.respondent_id for s in surveys}
    report.orphan_diary_respondents = sorted(set(days) - survey_ids)

    couples = []
    for cid, members in by_couple.items():
        ids = [m.respondent_id for m in members]
        if len(members) > 2:
            reason = TOO_MANY_MEMBERS
        elif len(members) < 2:
            reason = MISSING_PARTNER
        elif {m.gender for m in members} != set(GENDERS):
            reason = SAME_GENDER
        elif any(set(days.get(i, {})) != set(DAY_KINDS) for i in ids):
            reason = INCOMPLETE_DIARY
        else:
            reason = None
        if reason is not None:
            for i in ids:
                report.excluded[i] = reason
            continue
        f = next(m for m in members if m.gender == "female")
        m = next(m for m in members if m.gender == "male")
        couples.append(
            CoupleRecord(
                couple_id=cid,
                female=Member(f, days[f.respondent_id]["weekday"], days[f.respondent_id]["weekend"]),
                male=Member(m, days[m.respondent_id]["weekday"], days[m.respondent_id]["weekend"]),
            )
        )
    return couples, report


def flatten_couples(couples: Iterable[CoupleRecord]) -> tuple[list[SurveyResponse], list[DiaryDay]]:
    surveys, diaries = [], []
    for c in couples:
        for member in (c.female, c.male):
            surveys.append(member.survey)
            diaries.extend([member.weekday, member.weekend])
    return surveys, diaries


@dataclass
class Dataset:
    """Everything ingest produces for downstream stages."""

    couples: list[CoupleRecord]
    exclusions: ExclusionReport
    n_survey_respondents: int
    n_diary_days: int

    def summary(self) -> dict:
        return {
            "n_survey_respondents": self.n_survey_respondents,
            "n_diary_days": self.n_diary_days,
            "n_couples": len(self.couples),
            "n_matched_respondents": 2 * len(self.couples),
            "n_excluded_respondents": len(self.exclusions.excluded),
            **self.exclusions.to_dict(),
        }


def load_dataset(
    survey_path: str | Path,
    diary_paths: Sequence[str | Path],
    taxonomy: Taxonomy,
    registry: ItemRegistry,
) -> Dataset:
    surveys = parse_survey(survey_path, registry)
    diaries: list[DiaryDay] = []
    for p in diary_paths:
        diaries.extend(parse_diary(p, taxonomy))
    couples, report = match_couples(surveys, diaries)
    return Dataset(couples, report, len(surveys), len(diaries))
