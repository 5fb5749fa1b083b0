import json

import pytest

from reftrace.codemodel import scan_source
from reftrace.corpus import compute_absolute_metrics
from reftrace.diffparser import CODE_CHANGE_TYPES, ComparisonKey, compare_snippets
from reftrace.store import SnapshotStore
from reftrace.variants import RenameCollision, RenameTable, make_meaningless, materialize_variants, strip_comments
from synth import java_class

KEY = ComparisonKey("s", "Original", "Meaningless", 0, 0, "General")


def code_tokens(text):
    return [(t.kind, t.text) for info in scan_source(text) for t in info.code_tokens]


def test_adder_worked_example():
    src = "public class Adder { public int add(int a, int b) { return a + b; } }"
    out, table = make_meaningless(src)
    assert out == "public class C1 { public int m1(int v1, int v2) { return v1 + v2; } }"
    assert table.mapping() == {"Adder": "C1", "add": "m1", "a": "v1", "b": "v2"}


def test_no_comments_no_declarations_is_identity():
    src = "package x;\n\nimport java.util.List;\n"
    out, table = make_meaningless(src)
    assert out == src
    assert len(table) == 0


def test_comment_placeholder_keeps_lines():
    out, _ = make_meaningless("// compute max\nclass A {}\n")
    assert out.splitlines()[0] == "// c1"
    src = "/**\n * Long\n * description\n */\nclass A { int x; /* note */ }\n"
    out, _ = make_meaningless(src)
    assert out.splitlines() == ["/**", " * c1", " *", " */", "class C1 { int v1; /* c2 */ }"]


def test_exemptions():
    src = """class A {
    public static void main(String[] args) { helper(args.length); }
    static int helper(int n) { return Math.max(n, 0); }
    @Override
    public String toString() { return "A"; }
    public int compareTo(A other) { return 0; }
}
"""
    out, table = make_meaningless(src)
    assert "main(" in out and "toString()" in out and "compareTo(" in out
    assert "Math.max(" in out
    assert "m1(v1.length)" in out
    assert table.mapping("method") == {"helper": "m1"}


def test_collision_detected():
    with pytest.raises(RenameCollision):
        make_meaningless("class A { int x = B.v1; }")


def test_rename_table_json(tmp_path):
    _, table = make_meaningless("class A { int a; void a() { int a = 1; } }")
    data = json.loads(table.to_json())
    assert data["A"] == {"replacement": "C1", "kind": "class"}
    assert data["variable:a"] == {"replacement": "v1", "kind": "variable"}
    assert data["method:a"] == {"replacement": "m1", "kind": "method"}
    assert RenameTable.from_json(table.to_json()).entries == table.entries


def test_strip_examples():
    assert strip_comments("return a + b; // sum\n") == "return a + b;\n"
    src = "class A {\n    int x;\n}\n"
    assert strip_comments(src) == src
    assert strip_comments("int x = 1;\n/* gap */\nint y = 2;\n") == "int x = 1;\n\nint y = 2;\n"
    # a blank already adjacent to the removed run means no extra blank
    assert strip_comments("int x = 1;\n\n// gap\nint y = 2;\n") == "int x = 1;\n\nint y = 2;\n"


def test_strip_keeps_code_tokens(reference_source):
    assert code_tokens(strip_comments(reference_source)) == code_tokens(reference_source)
    m = compute_absolute_metrics(strip_comments(reference_source))
    assert (m.comment_lines, m.inline_comments) == (0, 0)


def test_reference_meaningless_preserves_shape(reference_source):
    out, _ = make_meaningless(reference_source)
    a, b = compute_absolute_metrics(reference_source), compute_absolute_metrics(out)
    assert a == b


@pytest.mark.parametrize("seed", range(20))
def test_variant_invariants(seed):
    src = java_class(seed, 2 + seed % 3)
    nocomment = strip_comments(src)
    m = compute_absolute_metrics(nocomment)
    assert (m.comment_lines, m.inline_comments) == (0, 0)
    meaningless, table = make_meaningless(src)
    a, b = compute_absolute_metrics(src), compute_absolute_metrics(meaningless)
    assert (a.total_lines, a.methods) == (b.total_lines, b.methods)
    record = compare_snippets(src, meaningless, KEY)
    assert all(record.change_counts[t] == 0 for t in CODE_CHANGE_TYPES)
    # inverse table restores the original code tokens
    inverse = table.inverse()
    restored = [(k, inverse.get(t, t) if k == "identifier" else t) for k, t in code_tokens(meaningless)]
    assert restored == code_tokens(src)


def test_materialize_writes_every_prompt(tmp_path, adder):
    store = SnapshotStore(tmp_path)
    texts = materialize_variants(store, "Adder", adder, ["General", "Meaning", "Comments"])
    files = sorted(p.relative_to(tmp_path).as_posix() for p in tmp_path.rglob("*.java"))
    assert len(files) == 9
    for prompt in ("General", "Meaning", "Comments"):
        assert store.read("Adder", "Meaningless", prompt, 0) == texts["Meaningless"]
    assert (tmp_path / "Adder" / "Meaningless" / "rename_table.json").is_file()


def test_materialize_without_comments(tmp_path):
    src = "class A {\n    int f() { return 1; }\n}\n"
    texts = materialize_variants(SnapshotStore(tmp_path), "A", src, ["General"])
    assert texts["NoComment"] == texts["Original"] == src
