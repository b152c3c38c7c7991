from __future__ import annotations

import json
from pathlib import Path

from tolerance_index.pipeline import clean_json


def write_result(out_dir: str, name: str, payload) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    target = path / name
    target.write_text(json.dumps(clean_json(payload), indent=2) + "\n", encoding="utf-8")
    print(f"wrote {target}")
    return target
