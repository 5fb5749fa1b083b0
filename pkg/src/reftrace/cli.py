"""reftrace command line: sample -> variants -> run -> analyze -> report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import reports
from .corpus import read_manifest, scan_corpus, snippet_ids, write_manifest
from .orchestrator import PROMPT_IDS, ProviderConfig, ProviderError, RecordingProvider, make_provider, run_pipeline
from .store import MissingSnapshot, SnapshotStore
from .trajectory import DEFAULT_ITERATIONS, analyze_store
from .variants import RenameCollision, materialize_variants

log = logging.getLogger("reftrace")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PROVIDER = 0, 1, 2, 3


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _prompts(text: str) -> List[str]:
    items = [p.strip() for p in str(text).split(",") if p.strip()]
    bad = [p for p in items if p not in PROMPT_IDS]
    if bad or not items:
        raise ValueError(f"prompts must be a non-empty subset of {','.join(PROMPT_IDS)}")
    return items


# key -> (parser, default, help)
CONFIG_KEYS: Dict[str, tuple] = {
    "corpus_dir": (str, None, "directory tree of .java files"),
    "manifest": (str, None, "corpus_manifest.csv path"),
    "store_dir": (str, None, "snapshot store root"),
    "output_dir": (str, None, "where CSV outputs go"),
    "analysis_dir": (str, None, "analysis outputs to bundle (report)"),
    "iterations": (int, DEFAULT_ITERATIONS, "refactoring iterations K"),
    "prompts": (_prompts, list(PROMPT_IDS), "comma-separated prompt ids"),
    "provider": (str, "replay", "live-http or replay"),
    "model": (str, ProviderConfig.model_name, "model name for the live provider"),
    "temperature": (float, 0.0, "sampling temperature"),
    "endpoint": (str, ProviderConfig.endpoint, "chat-completions URL"),
    "script": (str, "", "replay script (digest -> response JSON)"),
    "record": (str, "", "save every live response to this replay script"),
    "max_retries": (int, 3, "attempts per request"),
    "timeout": (float, 120.0, "request timeout in seconds"),
    "backoff": (float, 2.0, "first retry delay in seconds, doubled per retry"),
    "jobs": (int, 4, "worker count for generation and analysis"),
    "count_unchanged": (_bool, False, "heatmaps count identical version pairs as 1.0"),
    "bonferroni": (_bool, False, "Bonferroni-correct post-hoc p-values"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path) -> Dict[str, str]:
    """Flat `key = value` lines; `#` starts a comment; keys may use - or _."""
    out = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def resolve(args: argparse.Namespace) -> Dict:
    """Defaults, then the config file, then command-line flags."""
    cfg = {k: spec[1] for k, spec in CONFIG_KEYS.items()}
    raw = read_config(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            raw[key] = flag
    for key, value in raw.items():
        try:
            cfg[key] = CONFIG_KEYS[key][0](value)
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {exc}") from None
    if cfg["iterations"] < 1:
        raise UsageError("iterations must be >= 1")
    if cfg["jobs"] < 1:
        raise UsageError("jobs must be >= 1")
    return cfg


def _need(cfg: Dict, *keys: str) -> None:
    missing = [k for k in keys if not cfg.get(k)]
    if missing:
        raise UsageError("missing " + ", ".join("--" + k.replace("_", "-") for k in missing))


def provider_config(cfg: Dict) -> ProviderConfig:
    kind = cfg["provider"]
    if kind not in ("live-http", "replay"):
        raise UsageError("provider must be live-http or replay")
    return ProviderConfig(
        provider_kind=kind,
        model_name=cfg["model"],
        temperature=cfg["temperature"],
        endpoint=cfg["endpoint"],
        script_path=cfg["script"],
        max_retries=cfg["max_retries"],
        timeout=cfg["timeout"],
        backoff=cfg["backoff"],
    )


def cmd_sample(cfg: Dict) -> int:
    _need(cfg, "corpus_dir", "output_dir")
    corpus = Path(cfg["corpus_dir"])
    if not corpus.is_dir():
        log.error("corpus directory %s does not exist", corpus)
        return EXIT_DATA
    rows = scan_corpus(corpus)
    if not rows:
        log.error("no .java files found under %s", corpus)
        return EXIT_DATA
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(rows, out / "corpus_manifest.csv")
    accepted = sum(r.report.accepted for r in rows)
    print(f"{accepted} of {len(rows)} files accepted -> {out / 'corpus_manifest.csv'}")
    return EXIT_OK if accepted else EXIT_DATA


def cmd_variants(cfg: Dict) -> int:
    _need(cfg, "manifest", "store_dir")
    rows = read_manifest(Path(cfg["manifest"]))
    ids = snippet_ids(rows)
    store = SnapshotStore(cfg["store_dir"])
    made, failed = 0, []
    for sid, row in zip(ids, rows):
        if not row.report.accepted:
            continue
        source = Path(row.path).read_bytes().decode("utf-8", errors="replace")
        try:
            materialize_variants(store, sid, source, cfg["prompts"])
        except RenameCollision as exc:
            failed.append({"snippet": sid, "error": str(exc)})
            log.error("%s: %s", sid, exc)
            continue
        made += 1
    if failed:
        (store.root / "variant_failures.json").write_text(json.dumps(failed, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"variants written for {made} snippets ({len(failed)} failed)")
    if made == 0:
        return EXIT_DATA
    return EXIT_DATA if failed else EXIT_OK


def cmd_run(cfg: Dict) -> int:
    _need(cfg, "store_dir")
    pcfg = provider_config(cfg)
    try:
        provider = make_provider(pcfg)
    except (ProviderError, OSError, ValueError) as exc:
        log.error("provider setup failed: %s", exc)
        return EXIT_PROVIDER
    if cfg["record"]:
        provider = RecordingProvider(provider)
    store = SnapshotStore(cfg["store_dir"])
    try:
        result = run_pipeline(store, provider, cfg["iterations"], cfg["prompts"], pcfg, jobs=cfg["jobs"])
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    finally:
        if isinstance(provider, RecordingProvider):
            provider.save(cfg["record"])
    print(f"{result.generated} snapshots generated, {result.skipped} already present, {len(result.failures)} failures")
    return EXIT_OK if result.ok else EXIT_PROVIDER


def cmd_analyze(cfg: Dict) -> int:
    _need(cfg, "store_dir", "output_dir")
    store = SnapshotStore(cfg["store_dir"])
    try:
        analysis = analyze_store(store, cfg["iterations"], jobs=cfg["jobs"])
    except MissingSnapshot as exc:
        log.error("%s", exc)
        return EXIT_DATA
    if not analysis.horizontal:
        log.error("no complete trajectories in %s", store.root)
        return EXIT_DATA
    written = reports.write_analysis(analysis, Path(cfg["output_dir"]), cfg["count_unchanged"], cfg["bonferroni"])
    print(f"{len(written)} files written to {cfg['output_dir']} ({len(analysis.skipped)} trajectories skipped)")
    return EXIT_OK


def cmd_report(cfg: Dict) -> int:
    _need(cfg, "analysis_dir", "output_dir")
    try:
        written = reports.bundle_report(Path(cfg["analysis_dir"]), Path(cfg["output_dir"]))
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    print(f"report bundle with {len(written)} files in {cfg['output_dir']}")
    return EXIT_OK


COMMANDS = {
    "sample": (cmd_sample, "scan a corpus and write corpus_manifest.csv"),
    "variants": (cmd_variants, "write v0 of Original, Meaningless and NoComment"),
    "run": (cmd_run, "refactor every trajectory for K iterations"),
    "analyze": (cmd_analyze, "diff and summarize a snapshot store"),
    "report": (cmd_report, "bundle analysis CSVs with a summary.json"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value run-config file")
    common.add_argument("-v", "--verbose", action="store_true")
    for key, (_, default, text) in CONFIG_KEYS.items():
        common.add_argument("--" + key.replace("_", "-"), dest=key, default=None, help=f"{text} (default: {default})")
    parser = _Parser(prog="reftrace", description="Trace how iterative LLM refactoring changes Java snippets.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command][0](cfg)
    except UsageError as exc:
        print(f"reftrace: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, MissingSnapshot) as exc:
        print(f"reftrace: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
