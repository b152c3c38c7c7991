from __future__ import annotations

import numpy as np
import pandas as pd

from tolerance_index.ingest import DIARY_COLUMNS, SLOTS_PER_DAY, SURVEY_BASE_COLUMNS
from tolerance_index.registry import default_registry


def day_frame(rid, kind, primary="sleep", partner=0, children=0, secondary=""):
    """Diary rows for one day; scalar arguments are broadcast over 144 slots."""
    n = SLOTS_PER_DAY

    def col(v):
        return np.broadcast_to(np.asarray(v, dtype=object), (n,)).astype(object)

    return pd.DataFrame(
        {
            "respondent_id": rid,
            "day_kind": kind,
            "slot_index": [str(i) for i in range(n)],
            "primary_code": col(primary),
            "secondary_code": col(secondary),
            "with_partner": [str(int(v)) for v in col(partner)],
            "with_children": [str(int(v)) for v in col(children)],
        },
        columns=list(DIARY_COLUMNS),
    )


def blocks(*spec):
    """Slot sequence from (code, count) pairs, padded with sleep."""
    out = []
    for code, count in spec:
        out += [code] * count
    return out + ["sleep"] * (SLOTS_PER_DAY - len(out))


def survey_row(rid, cid, gender, **items):
    reg = default_registry()
    row = {
        "respondent_id": rid,
        "couple_id": cid,
        "gender": gender,
        "education_years": "12",
        "employed": "1",
        "vignette_arm": "physical",
        "info_treated": "0",
        "weight": "",
    }
    for key in reg.keys:
        row[key] = "2" if key == "economic_decisions" else "50"
    row.update({k: str(v) for k, v in items.items()})
    return row


def survey_table(rows):
    reg = default_registry()
    return pd.DataFrame(rows, columns=list(SURVEY_BASE_COLUMNS) + list(reg.keys))
