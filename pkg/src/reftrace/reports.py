"""CSV / JSONL writers for analysis results. Every output is sorted and byte-stable."""

from __future__ import annotations

import csv
import io
import json
import math
import shutil
from itertools import combinations
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from .corpus import METRIC_FIELDS
from .diffparser import CHANGE_TYPES, CODE_CHANGE_TYPES, LINE_KINDS, ComparisonRecord
from .stats import bonferroni, descriptive_stats, kruskal_wallis, mann_whitney_u
from .trajectory import SERIES_COLUMNS, StoreAnalysis, convergence_series, similarity_matrix, variant_similarity_series

STAT_METRICS = ("unchanged",) + CHANGE_TYPES + ("CodeChange", "ins", "del")

COMPARISON_HEADER = (
    ["snippet", "variantA", "variantB", "versionA", "versionB", "prompt", "unchanged"]
    + list(CHANGE_TYPES)
    + [f"ins_{k}" for k in LINE_KINDS]
    + [f"del_{k}" for k in LINE_KINDS]
    + ["avg_sim"]
    + [f"d_{f}" for f in METRIC_FIELDS]
)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "%.6f" % x
    return str(x)


def fmt_g(x: Optional[float]) -> str:
    return "" if x is None else "%.6g" % x


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _sorted(records: Iterable[ComparisonRecord]) -> List[ComparisonRecord]:
    return sorted(records, key=lambda r: tuple(r.key))


def comparison_row(r: ComparisonRecord) -> List:
    k = r.key
    row = [k.snippet, k.variant_a, k.variant_b, k.version_a, k.version_b, k.prompt, r.unchanged]
    row += [r.change_counts[t] for t in CHANGE_TYPES]
    row += [r.insertions[x] for x in LINE_KINDS] + [r.deletions[x] for x in LINE_KINDS]
    row.append(fmt(r.average_similarity))
    row += list(r.deltas.as_tuple())
    return row


def comparisons_csv(records: Iterable[ComparisonRecord]) -> str:
    return csv_text(COMPARISON_HEADER, (comparison_row(r) for r in _sorted(records)))


def changes_jsonl(records: Iterable[ComparisonRecord]) -> str:
    lines = []
    for r in _sorted(records):
        for c in r.changes:
            obj = {
                "key": list(r.key),
                "old_index": c.old_index,
                "new_index": c.new_index,
                "old": c.old_text,
                "new": c.new_text,
                "type": c.type,
                "similarity": round(c.similarity, 12),
                "node_categories": sorted(c.node_categories),
            }
            if c.rename_entries:
                obj["renames"] = [list(e) for e in c.rename_entries]
            if c.diagnostics:
                obj["diagnostics"] = list(c.diagnostics)
            lines.append(json.dumps(obj, sort_keys=True, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def heatmap_csv(analysis: StoreAnalysis, variant: str, prompt: str, count_unchanged: bool = False) -> str:
    m = similarity_matrix(analysis.by_group(variant, prompt), analysis.iterations + 1, count_unchanged)
    rows = []
    for i, j in combinations(range(m.size), 2):
        rows.append([i, j, fmt(m.get(i, j)), m.counts.get((i, j), 0)])
    return csv_text(["i", "j", "mean_sim", "n_contributing"], rows)


def convergence_csv(analysis: StoreAnalysis, variant: str, prompt: str) -> str:
    rows = convergence_series(analysis.by_group(variant, prompt))
    return csv_text(["transition"] + list(SERIES_COLUMNS), ([r["transition"]] + [fmt(r[c]) for c in SERIES_COLUMNS] for r in rows))


def oscillations_csv(analysis: StoreAnalysis) -> str:
    flags = analysis.oscillations()
    return csv_text(
        ["snippet", "variant", "prompt", "i", "strength"],
        ([f.snippet_id, f.variant, f.prompt, f.triple_start, fmt(f.strength)] for f in flags),
    )


def variant_similarity_csv(analysis: StoreAnalysis, prompt: str) -> str:
    rows = [r for r in variant_similarity_series(analysis.vertical) if r["prompt"] == prompt]
    header = ["version", "variantA", "variantB", "mean_sim_changed", "n_changed", "mean_sim_with_unchanged", "n_with_unchanged"]
    return csv_text(header, ([r["version"], r["variantA"], r["variantB"], fmt(r["mean_sim_changed"]), r["n_changed"],
                              fmt(r["mean_sim_with_unchanged"]), r["n_with_unchanged"]] for r in rows))


def metric_value(props: Dict[str, float], metric: str) -> float:
    if metric == "CodeChange":
        return math.fsum(props[t] for t in CODE_CHANGE_TYPES)
    return props[metric]


def samples(analysis: StoreAnalysis) -> Dict[tuple, List[float]]:
    """(metric, variant, prompt) -> proportions from every consecutive horizontal comparison."""
    out: Dict[tuple, List[float]] = {}
    for (s, v, p) in sorted(analysis.horizontal):
        for r in analysis.horizontal[(s, v, p)]:
            if r.key.version_b != r.key.version_a + 1:
                continue
            props = r.proportions()
            for metric in STAT_METRICS:
                out.setdefault((metric, v, p), []).append(metric_value(props, metric))
    return out


def descriptive_csv(analysis: StoreAnalysis) -> str:
    rows = []
    for (metric, v, p), vals in sorted(samples(analysis).items()):
        mean, sd = descriptive_stats(vals)
        rows.append([metric, v, p, len(vals), fmt(mean), fmt(sd)])
    return csv_text(["metric", "variant", "prompt", "n", "mean", "sd"], rows)


def stats_rows(analysis: StoreAnalysis, correct: bool = False) -> List[List]:
    data = samples(analysis)
    rows = []
    variants = sorted({v for (_, v, _) in data})
    prompts_of = {v: sorted({p for (_, vv, p) in data if vv == v}) for v in variants}
    for metric in STAT_METRICS:
        for v in variants:
            prompts = prompts_of[v]
            if len(prompts) < 2:
                continue
            groups = {p: data[(metric, v, p)] for p in prompts}
            kw = kruskal_wallis(groups)
            rows.append([metric, v, "-".join(prompts), kw.statistic, kw.p_value, kw.method])
            posthoc = []
            for a, b in combinations(prompts, 2):
                mw = mann_whitney_u(groups[a], groups[b])
                posthoc.append([metric, v, f"{a} vs {b}", mw.statistic, mw.p_value, mw.method])
            if correct:
                for row, p in zip(posthoc, bonferroni([r[4] for r in posthoc])):
                    row[4] = p
            rows.extend(posthoc)
    return rows


def stats_csv(analysis: StoreAnalysis, correct: bool = False) -> str:
    rows = stats_rows(analysis, correct)
    return csv_text(
        ["change_type", "variant", "comparison", "statistic", "p", "method"],
        ([m, v, c, fmt_g(s), fmt_g(p), meth] for m, v, c, s, p, meth in rows),
    )


def write_analysis(
    analysis: StoreAnalysis, out_dir: Path, count_unchanged: bool = False, bonferroni_correction: bool = False
) -> List[Path]:
    """Emit every analysis artifact into `out_dir`; returns the written paths in sorted order."""
    out_dir = Path(out_dir)
    written = [
        write_text(out_dir / "comparisons.csv", comparisons_csv(analysis.all_records())),
        write_text(out_dir / "changes.jsonl", changes_jsonl(analysis.all_records())),
        write_text(out_dir / "oscillations.csv", oscillations_csv(analysis)),
        write_text(out_dir / "descriptive_stats.csv", descriptive_csv(analysis)),
        write_text(out_dir / "stats_report.csv", stats_csv(analysis, bonferroni_correction)),
    ]
    for v, p in analysis.groups():
        written.append(write_text(out_dir / f"heatmap_{v}_{p}.csv", heatmap_csv(analysis, v, p, count_unchanged)))
        written.append(write_text(out_dir / f"convergence_{v}_{p}.csv", convergence_csv(analysis, v, p)))
    for p in sorted({r.key.prompt for r in analysis.vertical}):
        written.append(write_text(out_dir / f"variant_similarity_{p}.csv", variant_similarity_csv(analysis, p)))
    return sorted(written)


def _read_csv(path: Path) -> List[Dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(analysis_dir: Path) -> Dict:
    """Headline numbers: unchanged-share trajectory and adjacent heatmap cells per group."""
    analysis_dir = Path(analysis_dir)
    summary: Dict = {"groups": {}}
    for conv in sorted(analysis_dir.glob("convergence_*.csv")):
        group = conv.stem[len("convergence_"):]
        entry = {"unchanged": [float(r["unchanged"]) for r in _read_csv(conv)]}
        heat = analysis_dir / f"heatmap_{group}.csv"
        if heat.is_file():
            entry["adjacent_similarity"] = [
                float(r["mean_sim"]) if r["mean_sim"] else None
                for r in _read_csv(heat)
                if int(r["j"]) == int(r["i"]) + 1
            ]
        summary["groups"][group] = entry
    osc = analysis_dir / "oscillations.csv"
    if osc.is_file():
        summary["oscillations"] = len(_read_csv(osc))
    comp = analysis_dir / "comparisons.csv"
    if comp.is_file():
        summary["comparisons"] = len(_read_csv(comp))
    return summary


def bundle_report(analysis_dir: Path, out_dir: Path) -> List[Path]:
    """Copy every analysis artifact into `out_dir` and add summary.json."""
    analysis_dir, out_dir = Path(analysis_dir), Path(out_dir)
    files = sorted(p for p in analysis_dir.iterdir() if p.suffix in (".csv", ".jsonl") and p.is_file())
    if not files:
        raise FileNotFoundError(f"no analysis outputs in {analysis_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for f in files:
        target = out_dir / f.name
        if target.resolve() != f.resolve():
            shutil.copyfile(f, target)
        written.append(target)
    summary = json.dumps(summarize(analysis_dir), indent=2, sort_keys=True) + "\n"
    written.append(write_text(out_dir / "summary.json", summary))
    return sorted(written)
