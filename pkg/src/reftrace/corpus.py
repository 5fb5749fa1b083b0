"""Absolute per-file metrics and the snippet sampling filter."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import astuple, dataclass, field
from pathlib import Path
from typing import Iterable, List, Sequence

from .codemodel import count_methods, scan_source

METRIC_FIELDS = ("total", "code", "comment", "inline", "empty", "methods")


@dataclass(frozen=True)
class AbsoluteMetrics:
    total_lines: int = 0
    code_lines: int = 0
    comment_lines: int = 0
    inline_comments: int = 0
    empty_lines: int = 0
    methods: int = 0

    def as_tuple(self):
        return astuple(self)

    def __sub__(self, other: "AbsoluteMetrics") -> "AbsoluteMetrics":
        return AbsoluteMetrics(*(a - b for a, b in zip(astuple(self), astuple(other))))


def compute_absolute_metrics(source: str) -> AbsoluteMetrics:
    infos = scan_source(source)
    code = comment = blank = inline = 0
    for info in infos:
        kind = info.kind
        if kind.value == "blank":
            blank += 1
        elif kind.value == "comment-only":
            comment += 1
        else:
            code += 1
            inline += kind.has_inline_comment
    return AbsoluteMetrics(len(infos), code, comment, inline, blank, count_methods(source))


@dataclass
class CriteriaReport:
    loc_ok: bool
    methods_ratio_ok: bool
    code_comments_ratio_ok: bool
    reasons: List[str] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.loc_ok and self.methods_ratio_ok and self.code_comments_ratio_ok


def check_sampling_criteria(m: AbsoluteMetrics) -> CriteriaReport:
    """LOC in [50, 200], 1-3 methods per started 50-line block, and at least half code lines."""
    reasons = []
    loc_ok = 50 <= m.total_lines <= 200
    if m.total_lines < 50:
        reasons.append("LOC < 50")
    elif m.total_lines > 200:
        reasons.append("LOC > 200")
    blocks = math.ceil(m.total_lines / 50)
    methods_ok = blocks >= 1 and blocks <= m.methods <= 3 * blocks
    if not methods_ok:
        reasons.append(f"methods {m.methods} outside [{blocks}, {3 * blocks}]")
    ratio_ok = m.total_lines > 0 and 2 * m.code_lines >= m.total_lines
    if not ratio_ok:
        reasons.append("code ratio < 50%")
    return CriteriaReport(loc_ok, methods_ok, ratio_ok, reasons)


def is_test_file(path: Path) -> bool:
    return path.name.endswith("Test.java") or "test" in path.parts


@dataclass
class ManifestRow:
    path: str
    metrics: AbsoluteMetrics
    report: CriteriaReport

    @property
    def snippet_id(self) -> str:
        return Path(self.path).stem


def find_java_files(corpus_dir: Path) -> List[Path]:
    root = Path(corpus_dir)
    found = [p for p in root.rglob("*.java") if p.is_file()]
    return sorted((p for p in found if not is_test_file(p.relative_to(root))), key=lambda p: p.relative_to(root).as_posix())


def scan_corpus(corpus_dir: Path) -> List[ManifestRow]:
    """Evaluate every non-test `.java` file under `corpus_dir`, ordered by relative path."""
    rows = []
    for path in find_java_files(corpus_dir):
        source = path.read_bytes().decode("utf-8", errors="replace")
        metrics = compute_absolute_metrics(source)
        rows.append(ManifestRow(path.as_posix(), metrics, check_sampling_criteria(metrics)))
    return rows


MANIFEST_HEADER = ["path", "total", "code", "comment", "inline", "empty", "methods", "accepted", "reasons"]


def write_manifest(rows: Iterable[ManifestRow], out_path: Path) -> None:
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for row in rows:
            w.writerow([row.path, *row.metrics.as_tuple(), str(row.report.accepted).lower(), ";".join(row.report.reasons)])


def read_manifest(path: Path) -> List[ManifestRow]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            metrics = AbsoluteMetrics(*(int(rec[k]) for k in METRIC_FIELDS))
            report = check_sampling_criteria(metrics)
            if (rec["accepted"] == "true") != report.accepted:
                raise ValueError(f"manifest row for {rec['path']} disagrees with its metrics")
            out.append(ManifestRow(rec["path"], metrics, report))
    return out



def snippet_ids(rows: Sequence[ManifestRow]) -> List[str]:
    """File stems, with `_1`, `_2`, ... appended (in manifest order) when stems repeat."""
    stems = [r.snippet_id for r in rows]
    counts = Counter(stems)
    seen: Counter = Counter()
    out = []
    for s in stems:
        if counts[s] > 1:
            seen[s] += 1
            out.append(f"{s}_{seen[s]}")
        else:
            out.append(s)
    return out
