"""Deterministic trial scheduling and artifact writing."""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

from threadpoolctl import threadpool_limits

T = TypeVar("T")
R = TypeVar("R")


def map_trials(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> list[R]:
    """Apply ``fn`` to every item, returning results in item order.

    BLAS is pinned to one thread for the duration so each task's floating
    point reductions do not depend on how many tasks share the machine;
    ``threads`` then changes scheduling only.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    with threadpool_limits(limits=1, user_api="blas"):
        if threads == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))


def fmt(value) -> str:
    """Locale-free, round-trip float formatting for CSV cells."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, ensure_ascii=False, allow_nan=True)
        fh.write("\n")
    return path


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: str | Path, files: Sequence[Path]) -> Path:
    """``manifest.json`` listing every emitted file with its SHA-256."""
    out_dir = Path(out_dir)
    entries = [{"file": Path(f).name, "sha256": sha256_file(f)} for f in sorted(files, key=lambda p: Path(p).name)]
    return write_json(out_dir / "manifest.json", {"files": entries})
