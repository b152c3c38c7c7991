"""Behavioural and attitudinal variables derived from diaries and survey items."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import ConstantVariable, MismatchedRespondent, MissingItem, SchemaError
from .ingest import CoupleRecord, DiaryDay, Member, SurveyResponse
from .registry import (
    BARGAINING_CODES,
    BARGAINING_ITEM,
    ENGAGEMENT_ITEMS,
    GENDER_NORM_ITEMS,
    MASCULINITY_ITEMS,
    PARENTHOOD_ITEM,
    VIGNETTE_ITEMS,
)

HOURS_PER_SLOT = 1.0 / 6.0
WEEKDAYS_PER_WEEK = 5
WEEKEND_DAYS_PER_WEEK = 2


@dataclass(frozen=True)
class SlotFilter:
    """Selects slots by primary-activity group and co-presence flags."""

    groups: frozenset[str]
    with_partner: bool = False
    with_children: bool = False

    def mask(self, day: DiaryDay) -> np.ndarray:
        m = np.isin(day.primary_group, list(self.groups))
        if self.with_partner:
            m &= day.with_partner
        if self.with_children:
            m &= day.with_children
        return m

    def describe(self) -> str:
        parts = ["primary in {" + ",".join(sorted(self.groups)) + "}"]
        if self.with_partner:
            parts.append("with_partner")
        if self.with_children:
            parts.append("with_children")
        return " AND ".join(parts)


LEISURE_WITH_PARTNER = SlotFilter(frozenset({"leisure"}), with_partner=True)
LEISURE_WITH_PARTNER_CHILDREN = SlotFilter(frozenset({"leisure"}), with_partner=True, with_children=True)
CHORES = SlotFilter(frozenset({"chores"}))
CHILDCARE = SlotFilter(frozenset({"childcare"}))
DOMAIN_FILTERS = {"chores": CHORES, "childcare": CHILDCARE}
SCOPE_FILTERS = {
    "with_partner": LEISURE_WITH_PARTNER,
    "with_partner_and_children": LEISURE_WITH_PARTNER_CHILDREN,
}


@dataclass(frozen=True)
class WeeklyHours:
    respondent_id: str
    activity_filter: str
    hours: float


@dataclass(frozen=True)
class GenderGap:
    couple_id: str
    domain: str
    value: float
    defined: bool


@dataclass(frozen=True)
class CoupleLeisureAsymmetry:
    couple_id: str
    scope: str
    value: float
    defined: bool


def weekly_from_slots(weekday_slots, weekend_slots):
    """5 x weekday hours + 2 x weekend hours, from slot counts (scalar or array)."""
    return (WEEKDAYS_PER_WEEK * np.asarray(weekday_slots) + WEEKEND_DAYS_PER_WEEK * np.asarray(weekend_slots)) / 6.0


def weekly_hours(weekday: DiaryDay, weekend: DiaryDay, flt: SlotFilter) -> WeeklyHours:
    if weekday.respondent_id != weekend.respondent_id:
        raise MismatchedRespondent(
            f"weekday diary of {weekday.respondent_id!r} paired with weekend diary of {weekend.respondent_id!r}"
        )
    if weekday.day_kind != "weekday" or weekend.day_kind != "weekend":
        raise MismatchedRespondent("expected one weekday and one weekend diary")
    a = int(flt.mask(weekday).sum())
    b = int(flt.mask(weekend).sum())
    return WeeklyHours(weekday.respondent_id, flt.describe(), float(weekly_from_slots(a, b)))


def leisure_with_partner(member: Member) -> WeeklyHours:
    return weekly_hours(member.weekday, member.weekend, LEISURE_WITH_PARTNER)


def leisure_with_partner_children(member: Member) -> WeeklyHours:
    return weekly_hours(member.weekday, member.weekend, LEISURE_WITH_PARTNER_CHILDREN)


def domain_hours(member: Member, domain: str) -> WeeklyHours:
    return weekly_hours(member.weekday, member.weekend, DOMAIN_FILTERS[domain])


def relative_gap(female: float, male: float) -> tuple[float, bool]:
    if male > 0:
        return (female - male) / male, True
    return math.nan, False


def relative_asymmetry(female: float, male: float) -> tuple[float, bool]:
    total = female + male
    if total == 0:
        return math.nan, False
    return (female - male) / (total / 2.0), True


def gender_gap(couple: CoupleRecord, domain: str) -> GenderGap:
    f = domain_hours(couple.female, domain).hours
    m = domain_hours(couple.male, domain).hours
    value, defined = relative_gap(f, m)
    return GenderGap(couple.couple_id, domain, value, defined)


def couple_leisure_asymmetry(couple: CoupleRecord, scope: str) -> CoupleLeisureAsymmetry:
    flt = SCOPE_FILTERS[scope]
    f = weekly_hours(couple.female.weekday, couple.female.weekend, flt).hours
    m = weekly_hours(couple.male.weekday, couple.male.weekend, flt).hours
    value, defined = relative_asymmetry(f, m)
    return CoupleLeisureAsymmetry(couple.couple_id, scope, value, defined)


def _require(response: SurveyResponse, keys: Iterable[str]) -> list[float]:
    values = []
    for k in keys:
        v = response.items.get(k, math.nan)
        if v is None or math.isnan(v):
            raise MissingItem(f"respondent {response.respondent_id!r} lacks item {k!r}")
        values.append(v)
    return values


def gender_norms_index(response: SurveyResponse) -> float:
    values = _require(response, GENDER_NORM_ITEMS)
    return math.fsum(values) / len(values)


def bargaining_power(response: SurveyResponse) -> int:
    """1 if the respondent decides alone or jointly, 0 if the partner decides alone."""
    (code,) = _require(response, [BARGAINING_ITEM])
    answer = BARGAINING_CODES.get(int(code)) if float(code).is_integer() else None
    if answer is None:
        raise SchemaError(f"respondent {response.respondent_id!r}: bad {BARGAINING_ITEM} {code!r}")
    return 0 if answer == "partner" else 1


@dataclass(frozen=True)
class DerivedIndicators:
    respondent_id: str
    couple_id: str
    gender: str
    seriousness: float
    victim_blaming: float
    perpetrator_accountability: float
    justification: float
    physical_strength: float
    emotional_strength: float
    emotional_toughness: float
    minimization_of_harassment: float
    drinking: float
    gender_norms: float
    parenthood_norms: float
    bargaining_power: int
    leisure_with_partner: float
    leisure_with_partner_children: float
    charity: float
    center_knowledge: float
    way_out: float


def member_indicators(member: Member) -> DerivedIndicators:
    s = member.survey
    items = {k: s.items.get(k, math.nan) for k in VIGNETTE_ITEMS + MASCULINITY_ITEMS + ENGAGEMENT_ITEMS}
    (parenthood,) = _require(s, [PARENTHOOD_ITEM])
    return DerivedIndicators(
        respondent_id=s.respondent_id,
        couple_id=s.couple_id,
        gender=s.gender,
        **items,
        gender_norms=gender_norms_index(s),
        parenthood_norms=parenthood,
        bargaining_power=bargaining_power(s),
        leisure_with_partner=leisure_with_partner(member).hours,
        leisure_with_partner_children=leisure_with_partner_children(member).hours,
    )


RESPONDENT_COLUMNS = (
    "respondent_id",
    "couple_id",
    "gender",
    "female",
    "education_years",
    "employed",
    "vignette_arm",
    "vignette_physical",
    "info_treated",
    "weight",
    *VIGNETTE_ITEMS,
    *MASCULINITY_ITEMS,
    "gender_norms",
    "parenthood_norms",
    "bargaining_power",
    *ENGAGEMENT_ITEMS,
    "leisure_with_partner",
    "leisure_with_partner_children",
    "chores_hours",
    "childcare_hours",
    "gap_chores",
    "gap_childcare",
    "asym_with_partner",
    "asym_with_partner_and_children",
    "partner_education_years",
    "partner_employed",
    "partner_bargaining_power",
    "partner_gender_norms",
    "partner_parenthood_norms",
)

COUPLE_COLUMNS = (
    "couple_id",
    "female_id",
    "male_id",
    "female_chores_hours",
    "male_chores_hours",
    "female_childcare_hours",
    "male_childcare_hours",
    "gap_chores",
    "gap_chores_defined",
    "gap_childcare",
    "gap_childcare_defined",
    "female_leisure_with_partner",
    "male_leisure_with_partner",
    "female_leisure_with_partner_children",
    "male_leisure_with_partner_children",
    "asym_with_partner",
    "asym_with_partner_defined",
    "asym_with_partner_and_children",
    "asym_with_partner_and_children_defined",
)


@dataclass
class DerivedData:
    respondents: pd.DataFrame
    couples: pd.DataFrame

    def summary(self) -> dict:
        c = self.couples
        return {
            "n_respondents": int(len(self.respondents)),
            "n_couples": int(len(c)),
            "gap_chores_undefined": int((~c["gap_chores_defined"].astype(bool)).sum()) if len(c) else 0,
            "gap_childcare_undefined": int((~c["gap_childcare_defined"].astype(bool)).sum()) if len(c) else 0,
            "asym_with_partner_mean": _nanmean(c["asym_with_partner"]) if len(c) else None,
            "asym_with_partner_and_children_mean": _nanmean(c["asym_with_partner_and_children"]) if len(c) else None,
        }


def _nanmean(values: pd.Series) -> float | None:
    v = values.to_numpy(dtype=float)
    v = v[~np.isnan(v)]
    return float(v.mean()) if v.size else None


def derive_couple(couple: CoupleRecord) -> tuple[list[dict], dict]:
    """Derived rows for both members plus the couple-level row."""
    hours = {
        (who, dom): domain_hours(getattr(couple, who), dom).hours
        for who in ("female", "male")
        for dom in ("chores", "childcare")
    }
    gaps = {dom: relative_gap(hours["female", dom], hours["male", dom]) for dom in ("chores", "childcare")}
    ind = {"female": member_indicators(couple.female), "male": member_indicators(couple.male)}
    asym = {
        "with_partner": relative_asymmetry(ind["female"].leisure_with_partner, ind["male"].leisure_with_partner),
        "with_partner_and_children": relative_asymmetry(
            ind["female"].leisure_with_partner_children, ind["male"].leisure_with_partner_children
        ),
    }
    couple_row = {
        "couple_id": couple.couple_id,
        "female_id": couple.female.respondent_id,
        "male_id": couple.male.respondent_id,
        "female_chores_hours": hours["female", "chores"],
        "male_chores_hours": hours["male", "chores"],
        "female_childcare_hours": hours["female", "childcare"],
        "male_childcare_hours": hours["male", "childcare"],
        "gap_chores": gaps["chores"][0],
        "gap_chores_defined": gaps["chores"][1],
        "gap_childcare": gaps["childcare"][0],
        "gap_childcare_defined": gaps["childcare"][1],
        "female_leisure_with_partner": ind["female"].leisure_with_partner,
        "male_leisure_with_partner": ind["male"].leisure_with_partner,
        "female_leisure_with_partner_children": ind["female"].leisure_with_partner_children,
        "male_leisure_with_partner_children": ind["male"].leisure_with_partner_children,
        "asym_with_partner": asym["with_partner"][0],
        "asym_with_partner_defined": asym["with_partner"][1],
        "asym_with_partner_and_children": asym["with_partner_and_children"][0],
        "asym_with_partner_and_children_defined": asym["with_partner_and_children"][1],
    }
    rows = []
    for who, other in (("female", "male"), ("male", "female")):
        member: Member = getattr(couple, who)
        partner: Member = getattr(couple, other)
        d = ind[who]
        s = member.survey
        row = {
            "respondent_id": d.respondent_id,
            "couple_id": d.couple_id,
            "gender": d.gender,
            "female": int(d.gender == "female"),
            "education_years": s.education_years,
            "employed": int(s.employed),
            "vignette_arm": s.vignette_arm,
            "vignette_physical": int(s.vignette_arm == "physical"),
            "info_treated": int(s.info_treated),
            "weight": math.nan if s.weight is None else s.weight,
        }
        for k in VIGNETTE_ITEMS + MASCULINITY_ITEMS:
            row[k] = getattr(d, k)
        row.update(
            gender_norms=d.gender_norms,
            parenthood_norms=d.parenthood_norms,
            bargaining_power=d.bargaining_power,
            charity=d.charity,
            center_knowledge=d.center_knowledge,
            way_out=d.way_out,
            leisure_with_partner=d.leisure_with_partner,
            leisure_with_partner_children=d.leisure_with_partner_children,
            chores_hours=hours[who, "chores"],
            childcare_hours=hours[who, "childcare"],
            gap_chores=gaps["chores"][0],
            gap_childcare=gaps["childcare"][0],
            asym_with_partner=asym["with_partner"][0],
            asym_with_partner_and_children=asym["with_partner_and_children"][0],
            partner_education_years=partner.survey.education_years,
            partner_employed=int(partner.survey.employed),
            partner_bargaining_power=ind[other].bargaining_power,
            partner_gender_norms=ind[other].gender_norms,
            partner_parenthood_norms=ind[other].parenthood_norms,
        )
        rows.append(row)
    return rows, couple_row


def derive_dataset(couples: Sequence[CoupleRecord]) -> DerivedData:
    respondent_rows, couple_rows = [], []
    for c in couples:
        rows, crow = derive_couple(c)
        respondent_rows.extend(rows)
        couple_rows.append(crow)
    return DerivedData(
        respondents=pd.DataFrame(respondent_rows, columns=list(RESPONDENT_COLUMNS)),
        couples=pd.DataFrame(couple_rows, columns=list(COUPLE_COLUMNS)),
    )


ABOVE = "above"
AT_OR_BELOW = "at_or_below"


def subgroup_split(values, rule: str | float = "median") -> np.ndarray:
    """Binary labels for a subgroup split.

    Booleans (and 0/1 integer columns) pass through as their truth values.
    Numeric columns are split by strict comparison against the sample median
    or an explicit threshold: ``"above"`` vs ``"at_or_below"``. Missing values
    get label ``None``.
    """
    arr = np.asarray(values)
    if arr.dtype == bool:
        return arr.copy()
    x = arr.astype(float)
    present = ~np.isnan(x)
    finite = x[present]
    if rule == "median" and finite.size and np.isin(finite, (0.0, 1.0)).all():
        labels = (x == 1.0).astype(object)
        labels[~present] = None
        return labels
    if rule == "median":
        if finite.size == 0 or np.all(finite == finite[0]):
            raise ConstantVariable("median split of a constant variable")
        threshold = float(np.median(finite))
        if not (finite > threshold).any():
            raise ConstantVariable("median split leaves the upper group empty")
    else:
        threshold = float(rule)
    labels = np.where(x > threshold, ABOVE, AT_OR_BELOW).astype(object)
    labels[~present] = None
    return labels
