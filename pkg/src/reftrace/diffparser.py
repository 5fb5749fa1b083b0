"""Line alignment, pair similarity, change classification and per-comparison aggregation."""

from __future__ import annotations

import bisect
from collections import Counter
from dataclasses import dataclass, field
from difflib import SequenceMatcher
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from .codemodel import (
    CODE,
    COMMENT,
    CONTROL_KEYWORDS,
    IDENTIFIER,
    KEYWORD,
    LITERAL,
    OPERATOR,
    SEPARATOR,
    LexicalError,
    LineInfo,
    Token,
    kind_from_tokens,
    node_category,
    scan_source,
    split_lines,
    tokenize_line,
)
from .corpus import AbsoluteMetrics, compute_absolute_metrics

CODE_CHANGE_TYPES = (
    "AccessChange",
    "CallChange",
    "ControlChange",
    "LiteralChange",
    "OperatorChange",
    "OtherStructuralChange",
)
CHANGE_TYPES = ("Rename", "SyntaxOnly", "CommentChange", "MixedChange") + CODE_CHANGE_TYPES
LINE_KINDS = ("code", "comment", "blank")

PAIR_THRESHOLD = 0.5

# Callees that read or write a collection element count as accesses, not calls.
ACCESS_CALLEES = frozenset(
    "get set put getOrDefault putIfAbsent add remove contains containsKey charAt size length peek poll push pop offer".split()
)


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def lcs_length(a: str, b: str) -> int:
    """Length of the longest common character subsequence (bit-parallel row update)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    masks: Dict[str, int] = {}
    for i, ch in enumerate(a):
        masks[ch] = masks.get(ch, 0) | (1 << i)
    full = (1 << len(a)) - 1
    v = full
    for ch in b:
        u = v & masks.get(ch, 0)
        v = ((v + u) | (v - u)) & full
    return len(a) - bin(v).count("1")


@lru_cache(maxsize=1 << 16)
def line_similarity(a: str, b: str) -> float:
    """Dice coefficient over the character LCS of the whitespace-normalized lines."""
    na, nb = normalize_ws(a), normalize_ws(b)
    if not na and not nb:
        return 1.0
    return 2 * lcs_length(na, nb) / (len(na) + len(nb))


# --- alignment --------------------------------------------------------------


@dataclass
class LineAlignment:
    unchanged: List[Tuple[int, int]] = field(default_factory=list)
    pairs: List[Tuple[int, int]] = field(default_factory=list)
    deletions: List[int] = field(default_factory=list)
    insertions: List[int] = field(default_factory=list)


def _exact_matches(a: Sequence[str], b: Sequence[str]) -> List[Tuple[int, int]]:
    """LCS over whole lines. Ties skip the lexicographically smaller line so swapping inputs transposes the result."""
    n, m = len(a), len(b)
    lo = 0
    while lo < n and lo < m and a[lo] == b[lo]:
        lo += 1
    hi_a, hi_b = n, m
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    out = [(k, k) for k in range(lo)]
    mid_a, mid_b = a[lo:hi_a], b[lo:hi_b]
    if mid_a and mid_b:
        ids: Dict[str, int] = {}
        xa = [ids.setdefault(s, len(ids)) for s in mid_a]
        xb = [ids.setdefault(s, len(ids)) for s in mid_b]
        p, q = len(xa), len(xb)
        # table[i][j] = LCS length of xa[i:], xb[j:]
        table = [[0] * (q + 1) for _ in range(p + 1)]
        for i in range(p - 1, -1, -1):
            row, below = table[i], table[i + 1]
            ai = xa[i]
            for j in range(q - 1, -1, -1):
                if ai == xb[j]:
                    row[j] = below[j + 1] + 1
                else:
                    r, d = below[j], row[j + 1]
                    row[j] = r if r >= d else d
        i = j = 0
        while i < p and j < q:
            if xa[i] == xb[j]:
                out.append((lo + i, lo + j))
                i += 1
                j += 1
                continue
            skip_a, skip_b = table[i + 1][j], table[i][j + 1]
            if skip_a > skip_b or skip_a == skip_b and mid_a[i] < mid_b[j]:
                i += 1
            else:
                j += 1
    out.extend((hi_a + k, hi_b + k) for k in range(n - hi_a))
    return out


def _pair_block(old: Sequence[str], new: Sequence[str], olds: range, news: range) -> List[Tuple[int, int]]:
    """Greedy best-first pairing inside one replace block, keeping pairs monotone."""
    candidates = []
    for i in olds:
        la = len(normalize_ws(old[i]))
        for j in news:
            lb = len(normalize_ws(new[j]))
            if la + lb and 2 * min(la, lb) < PAIR_THRESHOLD * (la + lb):
                continue
            s = line_similarity(old[i], new[j])
            if s >= PAIR_THRESHOLD:
                candidates.append((-s, i, j))
    candidates.sort()
    accepted_i: List[int] = []
    accepted_j: List[int] = []
    for _, i, j in candidates:
        pos = bisect.bisect_left(accepted_i, i)
        if pos < len(accepted_i) and accepted_i[pos] == i:
            continue
        if pos > 0 and accepted_j[pos - 1] >= j:
            continue
        if pos < len(accepted_j) and accepted_j[pos] <= j:
            continue
        accepted_i.insert(pos, i)
        accepted_j.insert(pos, j)
    return list(zip(accepted_i, accepted_j))


def align_lines(old: str, new: str) -> LineAlignment:
    a, b = split_lines(old), split_lines(new)
    return align_line_lists(a, b)


def align_line_lists(a: Sequence[str], b: Sequence[str]) -> LineAlignment:
    result = LineAlignment()
    prev_i = prev_j = -1
    for i, j in _exact_matches(a, b) + [(len(a), len(b))]:
        olds, news = range(prev_i + 1, i), range(prev_j + 1, j)
        if olds and news:
            paired = _pair_block(a, b, olds, news)
            result.pairs.extend(paired)
            used_i = {p for p, _ in paired}
            used_j = {q for _, q in paired}
            result.deletions.extend(k for k in olds if k not in used_i)
            result.insertions.extend(k for k in news if k not in used_j)
        else:
            result.deletions.extend(olds)
            result.insertions.extend(news)
        if i < len(a):
            result.unchanged.append((i, j))
        prev_i, prev_j = i, j
    return result


# --- classification ---------------------------------------------------------


@dataclass(frozen=True)
class ChangeRecord:
    old_index: int
    new_index: int
    type: str
    similarity: float
    node_categories: Tuple[str, ...]
    rename_entries: Tuple[Tuple[str, str], ...] = ()
    diagnostics: Tuple[str, ...] = ()
    old_text: str = ""
    new_text: str = ""

    @property
    def pair(self) -> Tuple[int, int]:
        return (self.old_index, self.new_index)


def _call_owners(tokens: Sequence[Token]) -> List[Optional[str]]:
    """For each token, the callee name of the innermost enclosing call parentheses (or None)."""
    owners: List[Optional[str]] = []
    stack: List[Optional[str]] = []
    for k, tok in enumerate(tokens):
        if tok.text == "(":
            prev = tokens[k - 1] if k else None
            callee = None
            if prev is not None and (prev.kind == IDENTIFIER or prev.text in ("this", "super")):
                callee = prev.text
            owners.append(stack[-1] if stack else None)
            stack.append(callee)
            continue
        if tok.text == ")":
            if stack:
                stack.pop()
            owners.append(stack[-1] if stack else None)
            continue
        owners.append(stack[-1] if stack else None)
    return owners


def _index_depth(tokens: Sequence[Token]) -> List[int]:
    """Nesting depth of element-access brackets (`a[i]`, `f()[0]`) at each token."""
    depth: List[int] = []
    stack: List[bool] = []
    for k, tok in enumerate(tokens):
        if tok.text == "[":
            prev = tokens[k - 1] if k else None
            stack.append(prev is not None and (prev.kind == IDENTIFIER or prev.text in (")", "]")))
            depth.append(sum(stack[:-1]))
            continue
        if tok.text == "]":
            depth.append(sum(stack[:-1]) if stack else 0)
            if stack:
                stack.pop()
            continue
        depth.append(sum(stack))
    return depth


def _block_category(stream: Sequence[Token], owners: Sequence[Optional[str]], idx: Sequence[int], other: Sequence[Token], other_owners, other_idx) -> str:
    """One category for an unbalanced token edit, looking at both sides of the block."""
    sides = [(stream, owners, idx), (other, other_owners, other_idx)]
    toks = [s[k] for s, _, ks in sides for k in ks]
    if any(t.kind == KEYWORD and t.text in CONTROL_KEYWORDS or t.text == "?" for t in toks):
        return "ControlChange"
    if any(_index_depth(s)[k] > 0 for s, _, ks in sides for k in ks):
        return "AccessChange"
    call = access = False
    for s, own, ks in sides:
        for k in ks:
            t = s[k]
            nxt = s[k + 1] if k + 1 < len(s) else None
            prv = s[k - 1] if k else None
            if t.text in ("[", "]"):
                access = True
            elif t.kind == IDENTIFIER and nxt is not None and nxt.text == "(":
                if t.text in ACCESS_CALLEES:
                    access = True
                else:
                    call = True
            elif t.text == "(" and prv is not None and prv.kind == IDENTIFIER:
                if prv.text in ACCESS_CALLEES:
                    access = True
                else:
                    call = True
            elif t.text == "," and own[k] is not None:
                if own[k] in ACCESS_CALLEES:
                    access = True
                else:
                    call = True
            elif t.text == "." and nxt is not None and nxt.kind == IDENTIFIER:
                nn = s[k + 2] if k + 2 < len(s) else None
                if nn is None or nn.text != "(":
                    access = True
            elif t.kind == IDENTIFIER and prv is not None and prv.text == ".":
                if nxt is None or nxt.text != "(":
                    access = True
    if call:
        return "CallChange"
    if access:
        return "AccessChange"
    kinds = {t.kind for t in toks}
    if kinds == {LITERAL}:
        return "LiteralChange"
    if kinds and kinds <= {OPERATOR, LITERAL}:
        return "OperatorChange"
    return "OtherStructuralChange"


def _aligned_category(ot: Token, nt: Token) -> Optional[str]:
    if ot.kind == LITERAL:
        return "LiteralChange"
    if ot.kind == OPERATOR:
        return "OperatorChange"
    if ot.kind == KEYWORD:
        if ot.text in CONTROL_KEYWORDS or nt.text in CONTROL_KEYWORDS:
            return "ControlChange"
        return "OtherStructuralChange"
    if ot.kind == SEPARATOR:
        if {ot.text, nt.text} & {".", "[", "]"}:
            return "AccessChange"
        return "OtherStructuralChange"
    return None


def classify_change(old: LineInfo, new: LineInfo) -> ChangeRecord:
    """Assign one change type to a paired old/new line.

    Cascade: whitespace-only -> SyntaxOnly; comment-only difference ->
    CommentChange; consistent identifier substitution -> Rename; a single
    code category -> that subtype; two or more categories -> MixedChange.
    """
    sim = line_similarity(old.text, new.text)
    base = dict(old_index=old.index, new_index=new.index, similarity=sim, old_text=old.text, new_text=new.text)
    if old.error or new.error:
        diag = tuple(f"lexical-error: {e}" for e in (old.error, new.error) if e)
        return ChangeRecord(type="OtherStructuralChange", node_categories=("OtherNode",), diagnostics=diag, **base)

    oc, nc = old.code_tokens, new.code_tokens
    okeys = [(t.kind, t.text) for t in oc]
    nkeys = [(t.kind, t.text) for t in nc]
    comment_diff = normalize_ws(" ".join(t.text for t in old.comment_tokens)) != normalize_ws(
        " ".join(t.text for t in new.comment_tokens)
    )
    if okeys == nkeys:
        if comment_diff:
            return ChangeRecord(type="CommentChange", node_categories=("CommentNode",), **base)
        return ChangeRecord(type="SyntaxOnly", node_categories=("OtherNode",), **base)

    categories = set()
    nodes = set()
    if comment_diff:
        categories.add("comment")
        nodes.add("CommentNode")
    if _identifier_only(okeys, nkeys):
        return _identifier_record(oc, nc, categories, nodes, base)
    o_owners, n_owners = _call_owners(oc), _call_owners(nc)
    o_depth = _index_depth(oc)
    ident_pairs: List[Tuple[str, str]] = []
    renames: List[Tuple[str, str]] = []
    sm = SequenceMatcher(None, okeys, nkeys, autojunk=False)
    for tag, i1, i2, j1, j2 in sm.get_opcodes():
        if tag == "equal":
            ident_pairs.extend((oc[k].text, oc[k].text) for k in range(i1, i2) if oc[k].kind == IDENTIFIER)
            continue
        if tag == "replace" and i2 - i1 == j2 - j1 and all(oc[i1 + d].kind == nc[j1 + d].kind for d in range(i2 - i1)):
            for d in range(i2 - i1):
                ot, nt = oc[i1 + d], nc[j1 + d]
                if ot.kind == IDENTIFIER and _is_callee(oc, i1 + d) and _is_callee(nc, j1 + d):
                    # a different method called at the same site
                    both_access = ot.text in ACCESS_CALLEES and nt.text in ACCESS_CALLEES
                    categories.add("AccessChange" if both_access else "CallChange")
                    nodes.add(node_category(oc, i1 + d))
                    continue
                if ot.kind == IDENTIFIER:
                    ident_pairs.append((ot.text, nt.text))
                    renames.append((ot.text, nt.text))
                    nodes.add(node_category(oc, i1 + d))
                    continue
                cat = "AccessChange" if o_depth[i1 + d] > 0 else _aligned_category(ot, nt)
                categories.add(cat)
                nodes.add(node_category(oc, i1 + d))
                nodes.add(node_category(nc, j1 + d))
            continue
        cat = _block_category(oc, o_owners, range(i1, i2), nc, n_owners, range(j1, j2))
        categories.add(cat)
        nodes.update(node_category(oc, k) for k in range(i1, i2))
        nodes.update(node_category(nc, k) for k in range(j1, j2))

    if renames:
        categories.add("identifier" if _bijective(ident_pairs) else "OtherStructuralChange")

    if _control_words(oc) != _control_words(nc):
        # the statement header itself was rewritten; its other code edits belong to it
        categories = {c for c in categories if c in ("comment", "identifier")} | {"ControlChange"}

    return _finish(categories, nodes, renames, base)


def _is_callee(tokens: Sequence[Token], k: int) -> bool:
    return k + 1 < len(tokens) and tokens[k + 1].text == "("


def _control_words(tokens: Sequence[Token]) -> List[str]:
    return [t.text for t in tokens if (t.kind == KEYWORD and t.text in CONTROL_KEYWORDS) or t.text in ("?", ":")]


def _bijective(pairs: Sequence[Tuple[str, str]]) -> bool:
    forward: Dict[str, str] = {}
    backward: Dict[str, str] = {}
    for a, b in pairs:
        if forward.setdefault(a, b) != b or backward.setdefault(b, a) != a:
            return False
    return True


def _identifier_only(okeys, nkeys) -> bool:
    """Same length, same kinds, and every differing position is an identifier."""
    if len(okeys) != len(nkeys):
        return False
    for (ok, ot), (nk, nt) in zip(okeys, nkeys):
        if ok != nk or (ot != nt and ok != IDENTIFIER):
            return False
    return True


def _identifier_record(oc, nc, categories, nodes, base) -> ChangeRecord:
    pairs = [(o.text, n.text) for o, n in zip(oc, nc) if o.kind == IDENTIFIER]
    renames = [(o.text, n.text) for o, n in zip(oc, nc) if o.text != n.text]
    for k, (o, n) in enumerate(zip(oc, nc)):
        if o.text != n.text:
            nodes.add(node_category(oc, k))
    categories = set(categories)
    categories.add("identifier" if _bijective(pairs) else "OtherStructuralChange")
    return _finish(categories, nodes, renames, base)


def _finish(categories, nodes, renames, base) -> ChangeRecord:
    if len(categories) >= 2:
        kind = "MixedChange"
    else:
        (only,) = categories
        kind = {"identifier": "Rename", "comment": "CommentChange"}.get(only, only)
    entries = tuple(renames) if "identifier" in categories else ()
    nodes.discard(None)
    if not nodes:
        nodes.add("OtherNode")
    return ChangeRecord(type=kind, node_categories=tuple(sorted(nodes)), rename_entries=entries, **base)


def classify_lines(old: str, new: str, old_state: str = CODE, new_state: str = CODE) -> ChangeRecord:
    """Classify two standalone lines; lexical errors degrade to OtherStructuralChange."""
    infos = []
    for text, state in ((old, old_state), (new, new_state)):
        try:
            toks, _ = tokenize_line(text, state)
            error = None
        except LexicalError as exc:
            toks, error = [], str(exc)
        infos.append(LineInfo(0, text, tuple(toks), kind_from_tokens(text, toks), state, error))
    return classify_change(*infos)


# --- comparison -------------------------------------------------------------


class ComparisonKey(NamedTuple):
    snippet: str
    variant_a: str
    variant_b: str
    version_a: int
    version_b: int
    prompt: str


def _line_kind_name(info: LineInfo) -> str:
    return {"code": "code", "comment-only": "comment", "blank": "blank"}[info.kind.value]


@dataclass
class ComparisonRecord:
    key: ComparisonKey
    unchanged: int
    change_counts: Dict[str, int]
    insertions: Dict[str, int]
    deletions: Dict[str, int]
    average_similarity: Optional[float]
    deltas: AbsoluteMetrics
    changes: List[ChangeRecord] = field(default_factory=list)

    @property
    def n_pairs(self) -> int:
        return sum(self.change_counts.values())

    @property
    def n_insertions(self) -> int:
        return sum(self.insertions.values())

    @property
    def n_deletions(self) -> int:
        return sum(self.deletions.values())

    @property
    def denominator(self) -> int:
        return self.unchanged + self.n_pairs + self.n_insertions + self.n_deletions

    @property
    def identical(self) -> bool:
        return self.n_pairs == 0 and self.n_insertions == 0 and self.n_deletions == 0

    def proportions(self) -> Dict[str, float]:
        """Unchanged, each change type, insertions and deletions as shares of all line events."""
        total = self.denominator
        if total == 0:
            return {"unchanged": 1.0, **{t: 0.0 for t in CHANGE_TYPES}, "ins": 0.0, "del": 0.0}
        out = {"unchanged": self.unchanged / total}
        for t in CHANGE_TYPES:
            out[t] = self.change_counts[t] / total
        out["ins"] = self.n_insertions / total
        out["del"] = self.n_deletions / total
        return out

    def similarity_with_unchanged(self) -> Optional[float]:
        """Mean over unchanged and paired lines, unchanged lines scoring 1.0."""
        n = self.unchanged + self.n_pairs
        if n == 0:
            return None
        return (self.unchanged + sum(c.similarity for c in self.changes)) / n


def compare_snippets(old: str, new: str, key: ComparisonKey) -> ComparisonRecord:
    old_infos, new_infos = scan_source(old), scan_source(new)
    alignment = align_line_lists([i.text for i in old_infos], [i.text for i in new_infos])
    changes = [classify_change(old_infos[i], new_infos[j]) for i, j in alignment.pairs]
    counts = {t: 0 for t in CHANGE_TYPES}
    for c in changes:
        counts[c.type] += 1
    ins = {k: 0 for k in LINE_KINDS}
    dels = {k: 0 for k in LINE_KINDS}
    for j in alignment.insertions:
        ins[_line_kind_name(new_infos[j])] += 1
    for i in alignment.deletions:
        dels[_line_kind_name(old_infos[i])] += 1
    avg = sum(c.similarity for c in changes) / len(changes) if changes else None
    deltas = compute_absolute_metrics(new) - compute_absolute_metrics(old)
    return ComparisonRecord(key, len(alignment.unchanged), counts, ins, dels, avg, deltas, changes)


@dataclass
class RenameMap:
    targets: Dict[str, Counter]

    @property
    def occurrences(self) -> Dict[str, int]:
        return {old: sum(c.values()) for old, c in self.targets.items()}

    @property
    def consistent(self) -> bool:
        return all(len(c) == 1 for c in self.targets.values())

    @property
    def mapping(self) -> Dict[str, str]:
        """Most frequent target per old name; ties go to the alphabetically first target."""
        return {old: min(c, key=lambda new: (-c[new], new)) for old, c in self.targets.items()}

    def candidates(self, old: str) -> List[str]:
        return sorted(self.targets.get(old, ()))


def build_rename_map(records: Sequence[ChangeRecord]) -> RenameMap:
    targets: Dict[str, Counter] = {}
    for rec in records:
        for old, new in rec.rename_entries:
            targets.setdefault(old, Counter())[new] += 1
    return RenameMap(targets)
