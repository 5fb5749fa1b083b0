"""Readability-degraded variants: Meaningless (renamed, comment text blanked) and NoComment."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .codemodel import COMMENT, IDENTIFIER, JAVA_KEYWORDS, extract_declarations, join_lines, scan_source
from .store import SnippetInstance

VARIANTS = ("Original", "Meaningless", "NoComment")

# Methods whose names are fixed by the JDK contract they implement.
JDK_METHOD_NAMES = frozenset(
    """
    main toString equals hashCode compareTo compare clone finalize run call
    iterator hasNext next remove close accept apply test get
    """.split()
)


class RenameCollision(ValueError):
    def __init__(self, identifier: str, replacement: str):
        super().__init__(f"replacement {replacement!r} for {identifier!r} collides with an existing identifier")
        self.identifier = identifier
        self.replacement = replacement


@dataclass
class RenameTable:
    # (kind, original, replacement) in assignment order
    entries: List[Tuple[str, str, str]] = field(default_factory=list)

    def mapping(self, *kinds: str) -> Dict[str, str]:
        return {orig: new for kind, orig, new in self.entries if not kinds or kind in kinds}

    def inverse(self) -> Dict[str, str]:
        return {new: orig for _, orig, new in self.entries}

    def to_json(self) -> str:
        names = [orig for _, orig, _ in self.entries]
        obj = {}
        for kind, orig, new in self.entries:
            key = orig if names.count(orig) == 1 else f"{kind}:{orig}"
            obj[key] = {"replacement": new, "kind": kind}
        return json.dumps(obj, indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RenameTable":
        obj = json.loads(text)
        entries = []
        for key, val in obj.items():
            orig = key.split(":", 1)[1] if ":" in key else key
            entries.append((val["kind"], orig, val["replacement"]))
        return cls(entries)

    def __len__(self):
        return len(self.entries)


def build_rename_table(source: str) -> Tuple[RenameTable, set]:
    """Assign C*/m*/v* names in declaration order; also return the set of field names."""
    decl = extract_declarations(source)
    exempt = JDK_METHOD_NAMES | set(decl.overrides)
    table = RenameTable()
    counters = {"class": 0, "method": 0, "variable": 0}
    prefix = {"class": "C", "method": "m", "variable": "v"}
    assigned = {"class": set(), "method": set(), "variable": set()}
    for kind, name in decl.order:
        if kind == "constructor":
            continue
        group = "variable" if kind in ("variable", "parameter") else kind
        if name in assigned[group] or (group == "method" and name in exempt):
            continue
        assigned[group].add(name)
        counters[group] += 1
        table.entries.append((kind, name, f"{prefix[group]}{counters[group]}"))
    return table, set(decl.fields)


def _replacement_for(tokens, k, classes, methods, variables, fields_) -> Optional[str]:
    tok = tokens[k]
    name = tok.text
    prev = tokens[k - 1] if k >= 1 else None
    nxt = tokens[k + 1] if k + 1 < len(tokens) else None
    call = nxt is not None and nxt.text == "("
    if prev is not None and prev.text == ".":
        qual = tokens[k - 2] if k >= 2 else None
        if qual is not None and qual.kind == IDENTIFIER and qual.text[:1].isupper() and qual.text not in classes:
            return None  # member of an external type, e.g. Math.max
        if call:
            return methods.get(name)
        if name in fields_ and name in variables:
            return variables[name]
        return classes.get(name)
    if prev is not None and prev.text == "::":
        return methods.get(name) or None
    if call:
        return methods.get(name) or classes.get(name)
    return variables.get(name) or classes.get(name)


def make_meaningless(source: str) -> Tuple[str, RenameTable]:
    """Rename declared identifiers and blank out comment text, keeping every line in place."""
    table, fields_ = build_rename_table(source)
    classes = table.mapping("class")
    methods = table.mapping("method")
    variables = table.mapping("variable", "parameter")
    infos = scan_source(source)
    code_stream = [t for info in infos for t in info.tokens if t.kind != COMMENT]
    skip_lines = set()
    for info in infos:
        code = info.code_tokens
        if code and code[0].text in ("package", "import"):
            skip_lines.add(info.index)

    untouched = set()
    replacements = {}
    for k, tok in enumerate(code_stream):
        if tok.kind != IDENTIFIER:
            continue
        new = None if tok.line in skip_lines else _replacement_for(code_stream, k, classes, methods, variables, fields_)
        if new is None:
            untouched.add(tok.text)
        else:
            replacements[(tok.line, tok.column)] = new
    for _, orig, new in table.entries:
        if new in untouched or new in JAVA_KEYWORDS:
            raise RenameCollision(orig, new)

    out_lines = []
    counter = 0
    placed = True  # whether the current block comment already carries its cK label
    for info in infos:
        line = info.text
        pieces = []
        cursor = 0
        for idx, tok in enumerate(info.tokens):
            pieces.append(line[cursor:tok.column])
            if tok.kind == COMMENT:
                continuation = idx == 0 and info.state_in == "block"
                if not continuation:
                    counter += 1
                    placed = False
                text, placed = _placeholder(tok.text, counter, continuation, placed)
                pieces.append(text)
            else:
                pieces.append(replacements.get((tok.line, tok.column), tok.text))
            cursor = tok.end
        pieces.append(line[cursor:])
        out_lines.append("".join(pieces))
    return join_lines(out_lines, source), table


_OPEN_RE = re.compile(r"^/\*\*?")


def _placeholder(text: str, counter: int, continuation: bool, placed: bool):
    label = f"c{counter}"
    if not continuation and text.startswith("//"):
        return f"// {label}", True
    opener = ""
    closing = text.endswith("*/") and (continuation or len(text) >= 4)
    body = text[:-2] if closing else text
    if not continuation:
        opener = _OPEN_RE.match(body).group()
        body = body[len(opener):]
    deco = ""
    stripped = body.strip()
    if continuation and stripped.startswith("*"):
        deco = "*"
        stripped = stripped[1:].strip()
    parts = [opener + deco] if opener + deco else []
    if stripped and not placed:
        parts.append(label)
        placed = True
    if closing:
        parts.append("*/")
    if not parts:
        # keep the line a comment line
        parts.append(label)
    return " ".join(parts), placed


def strip_comments(source: str) -> str:
    """Remove every comment; a removed comment run between two non-blank lines leaves one blank line."""
    infos = scan_source(source)
    if not any(info.comment_tokens for info in infos):
        return source
    kept: List[Optional[str]] = []  # None marks a removed comment-only line
    for info in infos:
        if info.kind.value == "comment-only":
            kept.append(None)
            continue
        if not info.comment_tokens:
            kept.append(info.text)
            continue
        line = info.text
        pieces = []
        cursor = 0
        for tok in info.tokens:
            if tok.kind == COMMENT:
                pieces.append(line[cursor:tok.column])
                cursor = tok.end
        pieces.append(line[cursor:])
        kept.append("".join(pieces).rstrip())

    out: List[str] = []
    i = 0
    while i < len(kept):
        if kept[i] is not None:
            out.append(kept[i])
            i += 1
            continue
        j = i
        while j < len(kept) and kept[j] is None:
            j += 1
        before = out[-1] if out else None
        after = kept[j] if j < len(kept) else None
        if before is not None and after is not None and before.strip() and after.strip():
            out.append("")
        i = j
    return join_lines(out, source)


def materialize_variants(store, snippet_id: str, source: str, prompts) -> Dict[str, str]:
    """Write v0 of all three variants into every prompt directory, plus rename_table.json.

    Returns variant -> v0 text. v0 always ends with a single newline so that
    refactored versions (stored with a trailing newline) stay comparable.
    """
    meaningless, table = make_meaningless(source)
    texts = {"Original": source, "Meaningless": meaningless, "NoComment": strip_comments(source)}
    for variant in VARIANTS:
        text = texts[variant]
        if not text.endswith("\n"):
            text += "\n"
        texts[variant] = text
        for prompt in prompts:
            store.write(SnippetInstance(snippet_id, variant, prompt, 0, text))
    store.write_side_file(snippet_id, "Meaningless", "rename_table.json", table.to_json())
    return texts
