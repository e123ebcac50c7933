"""Deterministic CSV/JSON output: canonical encoding, digests, atomic writes.

Floats are written with repr (shortest round-trip form) so that identical
runs produce byte-identical files and readers recover exact values.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

FORMAT_VERSION = "1"


def jsonable(obj: Any):
    """Recursively convert numpy containers into plain JSON-friendly types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def canonical_json(obj: Any) -> str:
    """Stable JSON encoding: sorted keys, no whitespace drift."""
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"))


def sha256_hex(data: str | bytes) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def digest_of(obj: Any, length: int = 16) -> str:
    return sha256_hex(canonical_json(obj))[:length]


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file and rename, so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(fmt_cell(c) for c in row) for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path: str | Path, payload: dict) -> None:
    doc = {"format_version": FORMAT_VERSION, **jsonable(payload)}
    atomic_write_text(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")


def read_json(path: str | Path) -> dict:
    with open(path) as handle:
        return json.load(handle)


# ---------------------------------------------------------------------------
# Schema-specific writers.  All duck-typed so this module stays import-light.
# ---------------------------------------------------------------------------


def profile_csv_rows(profile) -> list[tuple]:
    return [
        (int(m), float(r), float(raw), float(j))
        for m, r, raw, j in zip(
            profile.orders, profile.relative_orders, profile.raw_strength, profile.J
        )
    ]


def write_profile_csv(profile, path: str | Path) -> None:
    write_csv(path, ("order_m", "relative_order", "raw_strength", "J"), profile_csv_rows(profile))


def write_profile_json(profile, path: str | Path) -> None:
    write_json(
        path,
        {
            "kind": "order_profile",
            "n": profile.n,
            "seed": profile.seed,
            "plan_digest": profile.plan_digest,
            "orders": list(profile.orders),
            "relative_orders": list(profile.relative_orders),
            "raw_strength": profile.raw_strength,
            "J": profile.J,
            "per_sample_J": profile.per_sample_J,
            "denominator": "mean raw strength over the plan's order set",
        },
    )


def write_theory_csv(relative_orders, j_hat, f_hat, path: str | Path) -> None:
    rows = [
        (float(r), "" if j is None else float(j), float(f))
        for r, j, f in zip(relative_orders, j_hat, f_hat)
    ]
    write_csv(path, ("relative_order", "J_hat", "F_hat"), rows)


def write_theorem1_csv(result, path: str | Path) -> None:
    rows = [
        (int(m), float(p), float(e))
        for m, p, e in zip(result.orders, result.predicted_std, result.empirical_std)
    ]
    write_csv(path, ("m", "predicted_std", "empirical_std"), rows)


def write_masking_csv(curves, path: str | Path) -> None:
    rows = [
        (int(m), float(a), float(b))
        for m, a, b in zip(curves.masked_counts, curves.acc_random, curves.acc_surround)
    ]
    write_csv(path, ("m", "acc_random", "acc_surround"), rows)


def write_robustness_csv(rows, path: str | Path) -> None:
    write_csv(
        path,
        ("model_id", "epsilon", "steps", "clean_acc", "adversarial_acc", "seed"),
        rows,
    )
