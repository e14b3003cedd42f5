"""Deterministic CSV tables and the run manifest.

Every output file is a plain-text CSV: one ``#``-prefixed header line with
``name(unit)`` per column plus a trailing ``error`` column, then one row
per grid point with floats in scientific notation at 12 significant
digits.  Fixed formatting makes repeated runs byte-identical, so the
manifest can carry per-file checksums as a reproducibility contract.

The manifest is a JSON sidecar recording the fully resolved parameters,
the artifact version, per-file SHA-256 digests, and the wall-clock
duration.  It is written after every CSV and thereby doubles as the
completion marker of a run.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__, metrics

__all__ = [
    "U_TIME", "U_TEMP", "U_NONE", "U_CURRENT", "U_DERIV",
    "Table", "sweep_table", "write_table", "file_sha256", "write_manifest",
    "MANIFEST_NAME",
]

U_TIME = "t̃"            # t-tilde
U_TEMP = "T̃"            # T-tilde
U_NONE = "dimensionless"
U_CURRENT = "ħ/t̃²"
U_DERIV = "ħ/(t̃²·T̃)"

AXIS_UNITS = {"T_M": U_TEMP, "t": U_TIME, "g": "1/" + U_TIME,
              "epsilon": "1/" + U_TIME}

MANIFEST_NAME = "manifest.json"


@dataclass
class Table:
    """One CSV worth of results: header metadata plus rows."""

    stem: str
    columns: List[Tuple[str, str]]      # (name, unit)
    rows: List[List[float]]
    errors: List[str]                   # one entry per row, "" when clean

    @property
    def failed(self) -> bool:
        return any(self.errors)

    @property
    def failed_rows(self) -> int:
        return sum(1 for e in self.errors if e)


def sweep_table(result: metrics.SweepResult, stem: str,
                axis_name: Optional[str] = None) -> Table:
    """Full per-point table for one sweep: currents, derivatives, alphas."""
    first = next((p for p in result.values if not p.error), None)
    current_terms = list(first.currents) if first else []
    alpha_terms = list(first.alphas) if first else []
    axis = axis_name or result.axis
    columns = [(axis, AXIS_UNITS.get(result.axis, result.unit))]
    columns += [(f"J_{x}", U_CURRENT) for x in current_terms]
    columns += [(f"dJ{x}_dTM", U_DERIV) for x in current_terms]
    columns += [(f"alpha_{x}", U_NONE) for x in alpha_terms]
    n_data = len(current_terms) * 2 + len(alpha_terms)
    rows, errors = [], []
    for p in result.values:
        if p.error:
            rows.append([p.value] + [math.nan] * n_data)
            errors.append(p.error)
        else:
            rows.append([p.value]
                        + [p.currents[x] for x in current_terms]
                        + [p.derivatives[x] for x in current_terms]
                        + [p.alphas[x].alpha for x in alpha_terms])
            errors.append("")
    return Table(stem=stem, columns=columns, rows=rows, errors=errors)


def _fmt(x: float) -> str:
    return f"{float(x):.11e}"


def render_table(table: Table) -> str:
    if len(table.rows) != len(table.errors):
        raise ValueError("one error entry per row required")
    header = "# " + ",".join(f"{n}({u})" for n, u in table.columns)
    lines = [header + ",error"]
    width = len(table.columns)
    for row, err in zip(table.rows, table.errors):
        if len(row) != width:
            raise ValueError(
                f"row width {len(row)} != {width} columns in {table.stem}")
        # errors may not introduce extra separators
        lines.append(",".join(_fmt(v) for v in row) + ","
                     + err.replace(",", ";").replace("\n", " "))
    return "\n".join(lines) + "\n"


def write_table(table: Table, out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{table.stem}.csv"
    path.write_text(render_table(table), encoding="utf-8")
    return path


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    out_dir: Path,
    *,
    parameters: Dict,
    files: Sequence[Path],
    duration_seconds: float,
    failed_points: int = 0,
) -> Path:
    """JSON sidecar with everything needed to reproduce the CSVs.

    Written last on purpose: its presence marks a completed run.
    """
    out_dir = Path(out_dir)
    manifest = {
        "artifact_version": __version__,
        "generated_at": datetime.now(timezone.utc).isoformat(
            timespec="seconds"),
        "parameters": parameters,
        "duration_seconds": round(float(duration_seconds), 3),
        "failed_points": int(failed_points),
        "status": "partial" if failed_points else "complete",
        "files": {
            Path(p).name: {
                "sha256": file_sha256(p),
                "bytes": Path(p).stat().st_size,
            }
            for p in sorted(files, key=lambda p: Path(p).name)
        },
    }
    path = out_dir / MANIFEST_NAME
    path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False)
        + "\n",
        encoding="utf-8")
    return path
