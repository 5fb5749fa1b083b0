"""On-disk snapshot store: `<root>/<snippet>/<variant>/<prompt>/v<k>.java` plus `meta.json`."""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

_VERSION_RE = re.compile(r"^v(\d+)\.java$")


@dataclass(frozen=True)
class SnippetInstance:
    snippet_id: str
    variant: str
    prompt: str
    version: int
    source: str

    @property
    def key(self) -> Tuple[str, str, str, int]:
        return (self.snippet_id, self.variant, self.prompt, self.version)


class MissingSnapshot(LookupError):
    pass


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class SnapshotStore:
    def __init__(self, root):
        self.root = Path(root)

    def path(self, snippet: str, variant: str, prompt: str, version: int) -> Path:
        return self.root / snippet / variant / prompt / f"v{version}.java"

    def exists(self, snippet: str, variant: str, prompt: str, version: int) -> bool:
        return self.path(snippet, variant, prompt, version).is_file()

    def read(self, snippet: str, variant: str, prompt: str, version: int) -> str:
        p = self.path(snippet, variant, prompt, version)
        try:
            return p.read_bytes().decode("utf-8")
        except FileNotFoundError:
            raise MissingSnapshot(f"missing snapshot {snippet}/{variant}/{prompt}/v{version}") from None

    def instance(self, snippet: str, variant: str, prompt: str, version: int) -> SnippetInstance:
        return SnippetInstance(snippet, variant, prompt, version, self.read(snippet, variant, prompt, version))

    def write(self, instance: SnippetInstance) -> Path:
        if instance.version > 0 and not self.exists(instance.snippet_id, instance.variant, instance.prompt, instance.version - 1):
            raise MissingSnapshot(f"v{instance.version} written without parent v{instance.version - 1}")
        p = self.path(*instance.key)
        _atomic_write(p, instance.source.encode("utf-8"))
        return p

    def write_side_file(self, snippet: str, variant: str, name: str, text: str) -> Path:
        p = self.root / snippet / variant / name
        _atomic_write(p, text.encode("utf-8"))
        return p

    # --- enumeration, always sorted ---

    def snippets(self) -> List[str]:
        if not self.root.is_dir():
            return []
        return sorted(p.name for p in self.root.iterdir() if p.is_dir() and not p.name.startswith("."))

    def _subdirs(self, *parts: str) -> List[str]:
        d = self.root.joinpath(*parts)
        if not d.is_dir():
            return []
        return sorted(p.name for p in d.iterdir() if p.is_dir() and not p.name.startswith("."))

    def variants(self, snippet: str) -> List[str]:
        return self._subdirs(snippet)

    def prompts(self, snippet: str, variant: str) -> List[str]:
        return self._subdirs(snippet, variant)

    def versions(self, snippet: str, variant: str, prompt: str) -> List[int]:
        d = self.root / snippet / variant / prompt
        if not d.is_dir():
            return []
        out = []
        for p in d.iterdir():
            m = _VERSION_RE.match(p.name)
            if m:
                out.append(int(m.group(1)))
        return sorted(out)

    def trajectories(self) -> Iterator[Tuple[str, str, str]]:
        for s in self.snippets():
            for v in self.variants(s):
                for p in self.prompts(s, v):
                    yield (s, v, p)

    def complete_length(self, snippet: str, variant: str, prompt: str) -> int:
        """Number of contiguous versions starting at v0."""
        have = set(self.versions(snippet, variant, prompt))
        k = 0
        while k in have:
            k += 1
        return k

    # --- metadata ---

    @property
    def meta_path(self) -> Path:
        return self.root / "meta.json"

    def read_meta(self) -> Optional[Dict]:
        if not self.meta_path.is_file():
            return None
        return json.loads(self.meta_path.read_text(encoding="utf-8"))

    def write_meta(self, meta: Dict) -> None:
        _atomic_write(self.meta_path, (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode("utf-8"))
