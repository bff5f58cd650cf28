"""Run artifacts on disk: observable CSVs, the JSON report, dense ρ.

Every text artifact goes through :func:`_atomic_write` so an interrupted
run never leaves a half-written file behind.  Floats are formatted with
``%.15g`` so that reruns of the same config are byte-identical.
"""

from __future__ import annotations

import json
import logging
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.15g"


def _ensure_dir(path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)


def _atomic_write(path: Path, content: str) -> None:
    """Write *content* to *path* atomically (write-then-rename)."""
    _ensure_dir(path.parent)
    tmp = tempfile.NamedTemporaryFile(
        mode="w",
        dir=path.parent,
        suffix=".tmp",
        delete=False,
        encoding="utf-8",
        newline="",
    )
    try:
        tmp.write(content)
        tmp.flush()
        tmp.close()
        Path(tmp.name).replace(path)
    except Exception:
        Path(tmp.name).unlink(missing_ok=True)
        raise


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    _atomic_write(path, render_csv(header, rows))
    logger.debug("wrote %s", path)
    return path


def write_report(path: Path, report: dict[str, Any]) -> Path:
    path = Path(path)
    _atomic_write(path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    logger.debug("wrote %s", path)
    return path


def rho_rows(rho: np.ndarray) -> list[list[Any]]:
    """``row, col, re, im`` for every entry of a dense matrix."""
    return [
        [i, j, float(rho[i, j].real), float(rho[i, j].imag)]
        for i in range(rho.shape[0])
        for j in range(rho.shape[1])
    ]


RHO_HEADER = ("row", "col", "re", "im")


def write_rho_csv(path: Path, rho: np.ndarray) -> Path:
    return write_csv(path, RHO_HEADER, rho_rows(rho))


def read_rho_csv(path: Path) -> np.ndarray:
    """Inverse of :func:`write_rho_csv`."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"rho file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split(",")) != RHO_HEADER:
        raise ValueError(f"{path}: expected header {','.join(RHO_HEADER)}")
    entries = [line.split(",") for line in lines[1:] if line]
    dim = int(round(len(entries) ** 0.5))
    if dim * dim != len(entries):
        raise ValueError(f"{path}: {len(entries)} entries do not form a square matrix")
    rho = np.zeros((dim, dim), dtype=np.complex128)
    for row, col, re, im in entries:
        rho[int(row), int(col)] = complex(float(re), float(im))
    return rho
