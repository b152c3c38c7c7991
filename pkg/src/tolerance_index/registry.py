"""Survey item registry, activity taxonomy and the measurement-model vocabulary."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import SchemaError

ACTIVITY_GROUPS = ("chores", "childcare", "leisure", "other")

VIGNETTE_ITEMS = (
    "seriousness",
    "victim_blaming",
    "perpetrator_accountability",
    "justification",
)
MASCULINITY_ITEMS = (
    "physical_strength",
    "emotional_strength",
    "emotional_toughness",
    "minimization_of_harassment",
    "drinking",
)
GENDER_NORM_ITEMS = tuple(f"gender_norm_{i:02d}" for i in range(1, 11))
PARENTHOOD_ITEM = "parenthood_norms"
BARGAINING_ITEM = "economic_decisions"
ENGAGEMENT_ITEMS = ("charity", "center_knowledge", "way_out")

# economic_decisions answer codes: who usually makes economic decisions
BARGAINING_CODES = {1: "self", 2: "joint", 3: "partner"}

# Measurement model: eleven indicators on three latents.
LATENTS = ("Justification", "Masculinity", "GenderGapUnpaidWork")
GAP_INDICATORS = ("gap_chores", "gap_childcare")
INDICATORS = (
    "seriousness",
    "victim_blaming",
    "perpetrator_accountability",
    "justification",
    "emotional_strength",
    "drinking",
    "minimization_of_harassment",
    "physical_strength",
    "emotional_toughness",
    "gap_chores",
    "gap_childcare",
)
INDICATOR_LATENT = {
    **{k: "Justification" for k in VIGNETTE_ITEMS},
    **{k: "Masculinity" for k in MASCULINITY_ITEMS},
    **{k: "GenderGapUnpaidWork" for k in GAP_INDICATORS},
}

INDICATOR_LABELS = {
    "seriousness": "Seriousness of Violence",
    "victim_blaming": "Victim Blaming",
    "perpetrator_accountability": "Perpetrator Accountability",
    "justification": "Justification of Domestic Violence",
    "emotional_strength": "Emotional strength",
    "drinking": "Drinking",
    "minimization_of_harassment": "Minimization of harassment",
    "physical_strength": "Physical strength",
    "emotional_toughness": "Emotional toughness",
    "gap_chores": "Gender gap in household chores",
    "gap_childcare": "Gender gap in childcare",
}
LATENT_LABELS = {
    "Justification": "Justification",
    "Masculinity": "Masculinity",
    "GenderGapUnpaidWork": "Gender gap in unpaid work",
}


@dataclass(frozen=True)
class ItemDef:
    key: str
    kind: str = "scale"  # "scale" (0-100) or "choice"
    choices: tuple[int, ...] = ()


@dataclass(frozen=True)
class ItemRegistry:
    items: Mapping[str, ItemDef] = field(default_factory=dict)

    def __contains__(self, key: str) -> bool:
        return key in self.items

    def __iter__(self):
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(self.items)


def default_registry() -> ItemRegistry:
    """All items the questionnaire collects, in survey column order."""
    defs: list[ItemDef] = [ItemDef(k) for k in VIGNETTE_ITEMS + MASCULINITY_ITEMS]
    defs += [ItemDef(k) for k in GENDER_NORM_ITEMS]
    defs.append(ItemDef(PARENTHOOD_ITEM))
    defs.append(ItemDef(BARGAINING_ITEM, kind="choice", choices=tuple(BARGAINING_CODES)))
    defs += [ItemDef(k) for k in ENGAGEMENT_ITEMS]
    return ItemRegistry({d.key: d for d in defs})


def registry_from_keys(scale_keys: Iterable[str], choice_items: Mapping[str, Iterable[int]] | None = None) -> ItemRegistry:
    defs = {k: ItemDef(k) for k in scale_keys}
    for k, codes in (choice_items or {}).items():
        defs[k] = ItemDef(k, kind="choice", choices=tuple(int(c) for c in codes))
    return ItemRegistry(defs)


@dataclass(frozen=True)
class Taxonomy:
    """Activity code -> group lookup."""

    groups: Mapping[str, str]

    def group_of(self, code: str) -> str:
        return self.groups[code]

    def __contains__(self, code: str) -> bool:
        return code in self.groups

    def codes_in(self, group: str) -> tuple[str, ...]:
        return tuple(c for c, g in self.groups.items() if g == group)


def _taxonomy_from_rows(rows: Iterable[Mapping[str, str]], source: str) -> Taxonomy:
    groups: dict[str, str] = {}
    for row in rows:
        code = (row.get("code") or "").strip()
        group = (row.get("group") or "").strip()
        if not code:
            raise SchemaError(f"{source}: empty activity code")
        if group not in ACTIVITY_GROUPS:
            raise SchemaError(f"{source}: code {code!r} has unknown group {group!r}")
        if code in groups and groups[code] != group:
            raise SchemaError(f"{source}: code {code!r} mapped to two groups")
        groups[code] = group
    return Taxonomy(groups)


def load_taxonomy(path: str | Path) -> Taxonomy:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"code", "group"}:
            raise SchemaError(f"{path}: taxonomy header must be 'code,group'")
        return _taxonomy_from_rows(reader, str(path))


def default_taxonomy() -> Taxonomy:
    with resources.files("tolerance_index.data").joinpath("taxonomy.csv").open(
        "r", encoding="utf-8", newline=""
    ) as fh:
        return _taxonomy_from_rows(csv.DictReader(fh), "taxonomy.csv")


def write_taxonomy(taxonomy: Taxonomy, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["code", "group"])
        for code, group in taxonomy.groups.items():
            w.writerow([code, group])
