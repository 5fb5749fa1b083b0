"""Horizontal, vertical and combined comparisons over stored trajectories."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .diffparser import CHANGE_TYPES, CODE_CHANGE_TYPES, ComparisonKey, ComparisonRecord, compare_snippets
from .store import MissingSnapshot, SnapshotStore
from .variants import VARIANTS

log = logging.getLogger(__name__)

DELTA = 0.02
DEFAULT_ITERATIONS = 5
VARIANT_PAIRS = (("Original", "Meaningless"), ("Original", "NoComment"), ("Meaningless", "NoComment"))
SERIES_COLUMNS = ("unchanged",) + CHANGE_TYPES + ("ins", "del")

Pair = Tuple[int, int]


def horizontal_analysis(
    store: SnapshotStore, snippet: str, variant: str, prompt: str, iterations: Optional[int] = None
) -> List[ComparisonRecord]:
    """Compare every version with all of its predecessors: K(K+1)/2 records ordered by (i, j)."""
    if iterations is None:
        iterations = max(store.versions(snippet, variant, prompt), default=0)
    sources = [store.read(snippet, variant, prompt, k) for k in range(iterations + 1)]
    out = []
    for i, j in combinations(range(iterations + 1), 2):
        key = ComparisonKey(snippet, variant, variant, i, j, prompt)
        out.append(compare_snippets(sources[i], sources[j], key))
    return out


def vertical_analysis(
    store: SnapshotStore,
    version: int,
    snippets: Optional[Iterable[str]] = None,
    prompts: Optional[Iterable[str]] = None,
    pairs: Sequence[Tuple[str, str]] = VARIANT_PAIRS,
) -> List[ComparisonRecord]:
    """Compare variants against each other at one version number, per snippet and prompt."""
    out = []
    for snippet in sorted(snippets if snippets is not None else store.snippets()):
        wanted = prompts if prompts is not None else store.prompts(snippet, VARIANTS[0])
        for prompt in sorted(wanted):
            for a, b in pairs:
                key = ComparisonKey(snippet, a, b, version, version, prompt)
                old = store.read(snippet, a, prompt, version)
                new = store.read(snippet, b, prompt, version)
                out.append(compare_snippets(old, new, key))
    return out


def pairwise_similarity(record: ComparisonRecord) -> Optional[float]:
    """Average changed-pair similarity; identical versions score 1.0; otherwise absent."""
    if record.average_similarity is not None:
        return record.average_similarity
    if record.identical:
        return 1.0
    return None


def snippet_similarities(records: Iterable[ComparisonRecord]) -> Dict[Pair, float]:
    out = {}
    for r in records:
        s = pairwise_similarity(r)
        if s is not None:
            out[(r.key.version_a, r.key.version_b)] = s
    return out


@dataclass
class SimilarityMatrix:
    size: int
    cells: Dict[Pair, float] = field(default_factory=dict)
    counts: Dict[Pair, int] = field(default_factory=dict)

    def get(self, i: int, j: int) -> Optional[float]:
        return self.cells.get((i, j))


def similarity_matrix(
    records_by_snippet: Mapping[str, Sequence[ComparisonRecord]], size: int, count_unchanged: bool = False
) -> SimilarityMatrix:
    """Mean averageSimilarity per (i, j) over snippets that have changed pairs in that cell.

    With `count_unchanged`, a snippet whose two versions are identical contributes 1.0.
    """
    sums: Dict[Pair, List[float]] = {}
    for snippet in sorted(records_by_snippet):
        for r in records_by_snippet[snippet]:
            i, j = r.key.version_a, r.key.version_b
            if not i < j:
                continue
            if r.average_similarity is not None:
                value = r.average_similarity
            elif count_unchanged and r.identical:
                value = 1.0
            else:
                continue
            sums.setdefault((i, j), []).append(value)
    m = SimilarityMatrix(size)
    for cell in sorted(sums):
        vals = sums[cell]
        m.cells[cell] = math.fsum(vals) / len(vals)
        m.counts[cell] = len(vals)
    return m


@dataclass(frozen=True)
class OscillationFlag:
    snippet_id: str
    variant: str
    prompt: str
    triple_start: int
    strength: float


def detect_back_and_forth(
    sims: Mapping[Pair, float], snippet: str = "", variant: str = "", prompt: str = "", delta: float = DELTA
) -> List[OscillationFlag]:
    """Flag i when v(i) and v(i+2) agree more than either agrees with v(i+1)."""
    flags = []
    last = max((j for _, j in sims), default=-1)
    for i in range(0, last - 1):
        try:
            skip, a, b = sims[(i, i + 2)], sims[(i, i + 1)], sims[(i + 1, i + 2)]
        except KeyError:
            continue
        strength = skip - max(a, b)
        if strength > delta:
            flags.append(OscillationFlag(snippet, variant, prompt, i, strength))
    return flags


def convergence_series(records_by_snippet: Mapping[str, Sequence[ComparisonRecord]]) -> List[Dict]:
    """Corpus means of event proportions for each consecutive transition v(i) -> v(i+1)."""
    per_transition: Dict[int, List[Dict[str, float]]] = {}
    for snippet in sorted(records_by_snippet):
        for r in records_by_snippet[snippet]:
            if r.key.version_b == r.key.version_a + 1:
                per_transition.setdefault(r.key.version_a, []).append(r.proportions())
    rows = []
    for i in sorted(per_transition):
        props = per_transition[i]
        row = {"transition": f"v{i}-v{i + 1}", "n": len(props)}
        for col in SERIES_COLUMNS:
            row[col] = math.fsum(p[col] for p in props) / len(props)
        rows.append(row)
    return rows


def variant_similarity_series(records: Iterable[ComparisonRecord]) -> List[Dict]:
    """Per (prompt, version, variant pair): mean similarity over changed lines only and with unchanged lines as 1.0."""
    groups: Dict[Tuple[str, int, str, str], Tuple[List[float], List[float]]] = {}
    for r in records:
        k = (r.key.prompt, r.key.version_a, r.key.variant_a, r.key.variant_b)
        changed, whole = groups.setdefault(k, ([], []))
        if r.average_similarity is not None:
            changed.append(r.average_similarity)
        w = r.similarity_with_unchanged()
        if w is not None:
            whole.append(w)
    rows = []
    for k in sorted(groups):
        changed, whole = groups[k]
        rows.append(
            {
                "prompt": k[0],
                "version": k[1],
                "variantA": k[2],
                "variantB": k[3],
                "mean_sim_changed": math.fsum(changed) / len(changed) if changed else None,
                "n_changed": len(changed),
                "mean_sim_with_unchanged": math.fsum(whole) / len(whole) if whole else None,
                "n_with_unchanged": len(whole),
            }
        )
    return rows


def code_change_share(record: ComparisonRecord) -> float:
    props = record.proportions()
    return math.fsum(props[t] for t in CODE_CHANGE_TYPES)


# --- whole-store analysis ---


@dataclass
class StoreAnalysis:
    iterations: int
    horizontal: Dict[Tuple[str, str, str], List[ComparisonRecord]] = field(default_factory=dict)
    vertical: List[ComparisonRecord] = field(default_factory=list)
    skipped: List[Tuple[str, str, str]] = field(default_factory=list)

    def by_group(self, variant: str, prompt: str) -> Dict[str, List[ComparisonRecord]]:
        return {s: recs for (s, v, p), recs in self.horizontal.items() if v == variant and p == prompt}

    def groups(self) -> List[Tuple[str, str]]:
        return sorted({(v, p) for (_, v, p) in self.horizontal})

    def all_records(self) -> List[ComparisonRecord]:
        out = [r for key in sorted(self.horizontal) for r in self.horizontal[key]]
        return out + list(self.vertical)

    def oscillations(self, delta: float = DELTA) -> List[OscillationFlag]:
        flags = []
        for (s, v, p) in sorted(self.horizontal):
            flags.extend(detect_back_and_forth(snippet_similarities(self.horizontal[(s, v, p)]), s, v, p, delta))
        return flags


def _horizontal_task(args):
    root, snippet, variant, prompt, iterations = args
    return horizontal_analysis(SnapshotStore(root), snippet, variant, prompt, iterations)


def _vertical_task(args):
    root, snippet, prompt, version = args
    return vertical_analysis(SnapshotStore(root), version, [snippet], [prompt])


def _map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (jobs * 4))))


def infer_iterations(store: SnapshotStore) -> int:
    meta = store.read_meta() or {}
    if "iterations" in meta:
        return int(meta["iterations"])
    lengths = [store.complete_length(*t) for t in store.trajectories()]
    return max(lengths, default=1) - 1


def analyze_store(store: SnapshotStore, iterations: Optional[int] = None, jobs: int = 1) -> StoreAnalysis:
    """Run horizontal and vertical comparisons over every complete trajectory.

    Trajectories shorter than `iterations` + 1 versions are skipped with a
    warning; vertical comparisons use only versions present in all three
    variants of a (snippet, prompt).
    """
    trajectories = list(store.trajectories())
    if not trajectories:
        raise MissingSnapshot(f"no snapshots under {store.root}")
    if iterations is None:
        iterations = infer_iterations(store)
    result = StoreAnalysis(iterations)
    complete = []
    for t in trajectories:
        if store.complete_length(*t) >= iterations + 1:
            complete.append(t)
        else:
            log.warning("skipping incomplete trajectory %s/%s/%s", *t)
            result.skipped.append(t)
    root = str(store.root)
    tasks = [(root, s, v, p, iterations) for (s, v, p) in complete]
    for t, recs in zip(complete, _map(_horizontal_task, tasks, jobs)):
        result.horizontal[t] = recs

    vtasks = []
    for s in store.snippets():
        variants = store.variants(s)
        if not all(v in variants for v in VARIANTS):
            continue
        prompts = sorted(set.intersection(*(set(store.prompts(s, v)) for v in VARIANTS)))
        for p in prompts:
            depth = min(store.complete_length(s, v, p) for v in VARIANTS)
            for version in range(min(depth, iterations + 1)):
                vtasks.append((root, s, p, version))
    vertical = []
    for recs in _map(_vertical_task, vtasks, jobs):
        vertical.extend(recs)
    vertical.sort(key=lambda r: (r.key.snippet, r.key.prompt, r.key.version_a, VARIANT_PAIRS.index((r.key.variant_a, r.key.variant_b))))
    result.vertical = vertical
    return result
