"""Stateless iterative refactoring against a chat-completion provider."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence

from .store import SnapshotStore, SnippetInstance

log = logging.getLogger(__name__)

API_KEY_ENV = "REFTRACE_API_KEY"


@dataclass(frozen=True)
class PromptSpec:
    id: str
    text: str


PROMPTS: Dict[str, PromptSpec] = {
    "General": PromptSpec("General", "Refactor this code for improved readability."),
    "Meaning": PromptSpec(
        "Meaning", "Refactor this code for improved readability, especially with respect to identifier naming."
    ),
    "Comments": PromptSpec(
        "Comments", "Refactor this code for improved readability, especially with respect to comments."
    ),
}
PROMPT_IDS = tuple(PROMPTS)


@dataclass
class ProviderConfig:
    provider_kind: str = "replay"  # "live-http" | "replay"
    model_name: str = "gpt-5.1"
    temperature: float = 0.0
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    script_path: str = ""
    max_retries: int = 3
    timeout: float = 120.0
    backoff: float = 2.0

    def describe(self) -> Dict:
        out = {"provider": self.provider_kind, "model": self.model_name, "temperature": self.temperature}
        if self.provider_kind == "live-http":
            out["endpoint"] = self.endpoint
        return out


class ProviderError(RuntimeError):
    """A request that cannot succeed (bad credentials, unscripted request, ...)."""


class TransientProviderError(ProviderError):
    """A transport failure worth retrying."""


class EmptyResponse(ValueError):
    def __init__(self):
        super().__init__("empty refactoring response")


@dataclass
class Completion:
    text: str
    prompt_tokens: Optional[int] = None
    completion_tokens: Optional[int] = None


def build_request(prompt: PromptSpec, source: str) -> str:
    """The single user message: prompt text, a blank line, then the source as-is."""
    return f"{prompt.text}\n\n{source}"


def request_digest(content: str) -> str:
    return hashlib.sha256(content.encode("utf-8")).hexdigest()


class ReplayProvider:
    """Answers from a recorded script mapping request digest to response text."""

    kind = "replay"

    def __init__(self, script: Mapping[str, str]):
        self.script = dict(script)
        self._lock = threading.Lock()
        self.requests: List[str] = []

    @classmethod
    def from_file(cls, path) -> "ReplayProvider":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, content: str) -> Completion:
        digest = request_digest(content)
        with self._lock:
            self.requests.append(digest)
        try:
            return Completion(self.script[digest])
        except KeyError:
            raise ProviderError(f"replay script has no response for request {digest[:12]}") from None


class LiveProvider:
    """OpenAI-style chat-completions endpoint over HTTPS."""

    kind = "live-http"

    def __init__(self, config: ProviderConfig, api_key: Optional[str] = None):
        self.config = config
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not self.api_key:
            raise ProviderError(f"{API_KEY_ENV} is not set")

    def body(self, content: str) -> bytes:
        payload = {
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": content}],
        }
        return json.dumps(payload, sort_keys=True).encode("utf-8")

    def complete(self, content: str) -> Completion:
        req = urllib.request.Request(
            self.config.endpoint,
            data=self.body(content),
            headers={"Content-Type": "application/json", "Authorization": f"Bearer {self.api_key}"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.config.timeout) as resp:
                data = json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            if exc.code == 429 or exc.code >= 500:
                raise TransientProviderError(f"HTTP {exc.code}") from exc
            raise ProviderError(f"HTTP {exc.code}") from exc
        except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
            raise TransientProviderError(str(exc)) from exc
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError("malformed completion payload") from exc
        usage = data.get("usage") or {}
        return Completion(text or "", usage.get("prompt_tokens"), usage.get("completion_tokens"))


class RecordingProvider:
    """Wraps another provider and keeps every answer so a later run can replay it."""

    def __init__(self, inner):
        self.inner = inner
        self.kind = inner.kind
        self.script: Dict[str, str] = {}
        self._lock = threading.Lock()

    def complete(self, content: str) -> Completion:
        result = self.inner.complete(content)
        with self._lock:
            self.script[request_digest(content)] = result.text
        return result

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.script, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def make_provider(config: ProviderConfig):
    if config.provider_kind == "replay":
        if not config.script_path:
            raise ProviderError("replay provider needs a script path")
        return ReplayProvider.from_file(config.script_path)
    if config.provider_kind == "live-http":
        return LiveProvider(config)
    raise ProviderError(f"unknown provider kind {config.provider_kind!r}")


def extract_code(response: str) -> str:
    """Body of the first ```java or untagged fence; the whole trimmed response when there is none."""
    lines = response.splitlines()
    i = 0
    while i < len(lines):
        stripped = lines[i].strip()
        if stripped.startswith("```"):
            tag = stripped[3:].strip().lower()
            j = i + 1
            while j < len(lines) and not lines[j].strip().startswith("```"):
                j += 1
            if tag in ("", "java"):
                body = lines[i + 1:j]
                while body and not body[0].strip():
                    body.pop(0)
                while body and not body[-1].strip():
                    body.pop()
                if not body:
                    raise EmptyResponse()
                return "\n".join(body)
            i = j + 1
            continue
        i += 1
    text = response.strip()
    if not text:
        raise EmptyResponse()
    return text


def _with_retries(provider, content: str, config: ProviderConfig, sleep: Callable[[float], None]) -> Completion:
    attempts = max(1, config.max_retries)
    for attempt in range(attempts):
        try:
            return provider.complete(content)
        except TransientProviderError as exc:
            if attempt == attempts - 1:
                raise
            delay = config.backoff * (2 ** attempt)
            log.warning("request failed (%s); retrying in %.1fs", exc, delay)
            sleep(delay)
    raise AssertionError("unreachable")


@dataclass
class IterationOutcome:
    instance: SnippetInstance
    usage: Dict


def run_iteration(
    instance: SnippetInstance,
    prompt: PromptSpec,
    provider,
    store: Optional[SnapshotStore] = None,
    config: Optional[ProviderConfig] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> IterationOutcome:
    """One stateless request on `instance`; the extracted code becomes version+1."""
    config = config or ProviderConfig()
    content = build_request(prompt, instance.source)
    completion = _with_retries(provider, content, config, sleep)
    code = extract_code(completion.text)
    nxt = SnippetInstance(instance.snippet_id, instance.variant, prompt.id, instance.version + 1, code + "\n")
    if store is not None:
        store.write(nxt)
    usage = {"digest": request_digest(content)}
    if completion.prompt_tokens is not None:
        usage["prompt_tokens"] = completion.prompt_tokens
    if completion.completion_tokens is not None:
        usage["completion_tokens"] = completion.completion_tokens
    return IterationOutcome(nxt, usage)


@dataclass
class PipelineResult:
    generated: int = 0
    requested: int = 0
    skipped: int = 0
    failures: List[Dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _instance_key(snippet: str, variant: str, prompt: str, version: int) -> str:
    return f"{snippet}/{variant}/{prompt}/v{version}"


def run_pipeline(
    store: SnapshotStore,
    provider,
    iterations: int = 5,
    prompts: Sequence[str] = PROMPT_IDS,
    config: Optional[ProviderConfig] = None,
    jobs: int = 4,
    snippets: Optional[Iterable[str]] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> PipelineResult:
    """Refactor every (snippet, variant, prompt) trajectory up to `iterations` versions.

    Existing snapshots are never re-requested, so an interrupted run resumes
    where it stopped. A failed iteration ends its trajectory; the rest of the
    corpus continues.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    config = config or ProviderConfig()
    wanted = set(snippets) if snippets is not None else None
    tasks = [t for t in store.trajectories() if t[2] in prompts and (wanted is None or t[0] in wanted)]
    if not tasks:
        raise ValueError("no v0 snapshots to refactor")
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")

    usage: Dict[str, Dict] = {}
    result = PipelineResult()
    lock = threading.Lock()

    def run_one(task):
        snippet, variant, prompt_id = task
        prompt = PROMPTS[prompt_id]
        local_usage, failures = {}, []
        generated = requested = skipped = 0
        instance = store.instance(snippet, variant, prompt_id, 0)
        for k in range(1, iterations + 1):
            if store.exists(snippet, variant, prompt_id, k):
                instance = store.instance(snippet, variant, prompt_id, k)
                skipped += 1
                continue
            requested += 1
            try:
                outcome = run_iteration(instance, prompt, provider, store, config, sleep)
            except (ProviderError, EmptyResponse) as exc:
                failures.append({"instance": _instance_key(snippet, variant, prompt_id, k), "error": str(exc)})
                log.error("%s/%s/%s v%d failed: %s", snippet, variant, prompt_id, k, exc)
                break
            instance = outcome.instance
            local_usage[_instance_key(snippet, variant, prompt_id, k)] = outcome.usage
            generated += 1
        with lock:
            usage.update(local_usage)
            result.failures.extend(failures)
            result.generated += generated
            result.requested += requested
            result.skipped += skipped

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        list(pool.map(run_one, sorted(tasks)))

    result.failures.sort(key=lambda f: f["instance"])
    meta = store.read_meta() or {}
    requests = dict(meta.get("requests", {}))
    requests.update(usage)
    meta.update(config.describe())
    meta.update(
        {
            "iterations": iterations,
            "prompts": list(prompts),
            "filename_in_request": False,
            "requests": requests,
            "failures": result.failures,
        }
    )
    if config.provider_kind == "live-http":
        meta["started_at"] = started
        meta["finished_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    store.write_meta(meta)
    return result
