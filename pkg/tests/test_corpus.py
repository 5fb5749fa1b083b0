import time
from pathlib import Path

from reftrace.corpus import (
    AbsoluteMetrics,
    ManifestRow,
    check_sampling_criteria,
    compute_absolute_metrics,
    find_java_files,
    is_test_file,
    read_manifest,
    scan_corpus,
    snippet_ids,
    write_manifest,
)
from synth import java_class


def test_empty_text():
    assert compute_absolute_metrics("").as_tuple() == (0, 0, 0, 0, 0, 0)


def test_adder_metrics(adder):
    assert compute_absolute_metrics(adder).as_tuple() == (7, 5, 1, 1, 1, 1)


def test_reference_row(reference_source):
    start = time.perf_counter()
    m = compute_absolute_metrics(reference_source)
    assert m.as_tuple() == (95, 41, 35, 3, 19, 2)
    assert time.perf_counter() - start < 1.0


def test_crlf_and_missing_final_newline(adder):
    assert compute_absolute_metrics(adder.replace("\n", "\r\n")) == compute_absolute_metrics(adder)
    assert compute_absolute_metrics(adder.rstrip("\n")) == compute_absolute_metrics(adder)


def test_criteria_examples():
    ok = check_sampling_criteria(AbsoluteMetrics(100, 60, 25, 0, 15, 4))
    assert ok.accepted and ok.reasons == []
    short = check_sampling_criteria(AbsoluteMetrics(40, 30, 5, 0, 5, 1))
    assert not short.accepted and short.reasons == ["LOC < 50"]
    sparse = check_sampling_criteria(AbsoluteMetrics(100, 40, 45, 0, 15, 2))
    assert not sparse.accepted and sparse.reasons == ["code ratio < 50%"]


def test_methods_ratio_boundaries():
    # 95 lines -> two started blocks -> 2..6 methods
    assert check_sampling_criteria(AbsoluteMetrics(95, 60, 20, 0, 15, 2)).methods_ratio_ok
    assert check_sampling_criteria(AbsoluteMetrics(95, 60, 20, 0, 15, 6)).methods_ratio_ok
    assert not check_sampling_criteria(AbsoluteMetrics(95, 60, 20, 0, 15, 1)).methods_ratio_ok
    assert not check_sampling_criteria(AbsoluteMetrics(95, 60, 20, 0, 15, 7)).methods_ratio_ok
    assert check_sampling_criteria(AbsoluteMetrics(50, 25, 20, 0, 5, 3)).accepted
    big = check_sampling_criteria(AbsoluteMetrics(201, 150, 20, 0, 31, 10))
    assert big.reasons == ["LOC > 200"]


def test_test_files_excluded():
    assert is_test_file(Path("src/FooTest.java"))
    assert is_test_file(Path("test/Foo.java"))
    assert not is_test_file(Path("src/Testing.java"))


def _corpus(tmp_path):
    root = tmp_path / "corpus"
    (root / "b").mkdir(parents=True)
    (root / "a").mkdir()
    (root / "test").mkdir()
    (root / "b" / "Gen.java").write_text(java_class(1), encoding="utf-8")
    (root / "a" / "Gen.java").write_text(java_class(2), encoding="utf-8")
    (root / "a" / "Small.java").write_text("class Small {}\n", encoding="utf-8")
    (root / "a" / "GenTest.java").write_text(java_class(3), encoding="utf-8")
    (root / "test" / "Other.java").write_text(java_class(4), encoding="utf-8")
    return root


def test_scan_is_ordered_and_pure(tmp_path):
    root = _corpus(tmp_path)
    rows = scan_corpus(root)
    rel = [Path(r.path).relative_to(root).as_posix() for r in rows]
    assert rel == ["a/Gen.java", "a/Small.java", "b/Gen.java"]
    again = scan_corpus(root)
    assert [(r.path, r.metrics) for r in again] == [(r.path, r.metrics) for r in rows]
    for r in rows:
        assert r.report.accepted or r.report.reasons


def test_manifest_round_trip(tmp_path):
    root = _corpus(tmp_path)
    rows = scan_corpus(root)
    out = tmp_path / "corpus_manifest.csv"
    write_manifest(rows, out)
    text = out.read_bytes().decode("utf-8")
    assert text.splitlines()[0] == "path,total,code,comment,inline,empty,methods,accepted,reasons"
    assert "\r" not in text
    back = read_manifest(out)
    assert [(r.path, r.metrics, r.report.accepted) for r in back] == [(r.path, r.metrics, r.report.accepted) for r in rows]


def test_duplicate_stems_get_suffixes(tmp_path):
    rows = [ManifestRow(p, AbsoluteMetrics(), check_sampling_criteria(AbsoluteMetrics())) for p in ("a/X.java", "b/X.java", "c/Y.java")]
    assert snippet_ids(rows) == ["X_1", "X_2", "Y"]


def test_find_java_files_skips_tests(tmp_path):
    root = _corpus(tmp_path)
    assert all(not p.name.endswith("Test.java") for p in find_java_files(root))
