import json

import pytest

from reftrace.cli import EXIT_DATA, EXIT_OK, EXIT_PROVIDER, EXIT_USAGE, main, read_config, UsageError
from synth import java_class


def test_sample_rejects_short_file(tmp_path):
    corpus = tmp_path / "c"
    corpus.mkdir()
    (corpus / "Short.java").write_text("class Short {\n" + "int x;\n" * 38 + "}\n")
    assert main(["sample", "--corpus-dir", str(corpus), "--output-dir", str(tmp_path / "o")]) == EXIT_DATA
    text = (tmp_path / "o" / "corpus_manifest.csv").read_text()
    assert ",false," in text


def test_sample_empty_dir(tmp_path):
    (tmp_path / "c").mkdir()
    assert main(["sample", "--corpus-dir", str(tmp_path / "c"), "--output-dir", str(tmp_path / "o")]) == EXIT_DATA


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == EXIT_USAGE
    assert main(["sample"]) == EXIT_USAGE
    assert main(["analyze", "--store-dir", "x", "--output-dir", "y", "--iterations", "0"]) == EXIT_USAGE
    assert main(["run", "--store-dir", "x", "--prompts", "General,Bogus"]) == EXIT_USAGE


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# run config\nstore-dir = s1\niterations = 3  # fewer\nprompts = General,Comments\n\n")
    assert read_config(cfg) == {"store_dir": "s1", "iterations": "3", "prompts": "General,Comments"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(UsageError):
        read_config(bad)
    assert main(["analyze", "--config", str(bad)]) == EXIT_USAGE


def _one_snippet(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "Gen.java").write_text(java_class(6, 3))
    assert main(["sample", "--corpus-dir", str(corpus), "--output-dir", str(tmp_path)]) == EXIT_OK
    return tmp_path / "corpus_manifest.csv"


def test_variants_write_nine_files(tmp_path):
    manifest = _one_snippet(tmp_path)
    assert main(["variants", "--manifest", str(manifest), "--store-dir", str(tmp_path / "store")]) == EXIT_OK
    assert len(list((tmp_path / "store").rglob("v0.java"))) == 9


def test_run_with_missing_script_is_provider_error(tmp_path):
    manifest = _one_snippet(tmp_path)
    main(["variants", "--manifest", str(manifest), "--store-dir", str(tmp_path / "store")])
    code = main(["run", "--store-dir", str(tmp_path / "store"), "--script", str(tmp_path / "missing.json")])
    assert code == EXIT_PROVIDER
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    code = main(["run", "--store-dir", str(tmp_path / "store"), "--script", str(empty), "--iterations", "1"])
    assert code == EXIT_PROVIDER
    meta = json.loads((tmp_path / "store" / "meta.json").read_text())
    assert len(meta["failures"]) == 9


def test_live_without_key(tmp_path, monkeypatch):
    monkeypatch.delenv("REFTRACE_API_KEY", raising=False)
    assert main(["run", "--store-dir", str(tmp_path), "--provider", "live-http"]) == EXIT_PROVIDER


def test_analyze_empty_store(tmp_path):
    assert main(["analyze", "--store-dir", str(tmp_path / "nothing"), "--output-dir", str(tmp_path / "o")]) == EXIT_DATA


def test_identical_trajectories_converge(tmp_path):
    from reftrace.store import SnapshotStore, SnippetInstance

    store = SnapshotStore(tmp_path / "store")
    for k in range(3):
        store.write(SnippetInstance("s", "Original", "General", k, "class A {\n}\n"))
    out = tmp_path / "o"
    assert main(["analyze", "--store-dir", str(store.root), "--output-dir", str(out), "--iterations", "2"]) == EXIT_OK
    lines = (out / "convergence_Original_General.csv").read_text().splitlines()
    assert [l.split(",")[1] for l in lines[1:]] == ["1.000000", "1.000000"]


def test_report_bundle(replay_run, tmp_path):
    out = tmp_path / "report"
    assert main(["report", "--analysis-dir", str(replay_run), "--output-dir", str(out)]) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["comparisons"] == 567
    assert len(summary["groups"]["Original_General"]["unchanged"]) == 5
    assert (out / "comparisons.csv").read_bytes() == (replay_run / "comparisons.csv").read_bytes()
    assert main(["report", "--analysis-dir", str(tmp_path / "none"), "--output-dir", str(out)]) == EXIT_DATA
