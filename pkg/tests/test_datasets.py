"""Dataset manifests, loaders, schema rendering, and subsetting."""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

import pytest

from reflectbench import DatasetManifest, TaskKind, load_dataset
from reflectbench.datasets import DEFAULT_FIELD_MAPS, language_pair, render_schema_ddl
from reflectbench.errors import DatasetError, MissingDatabase, ParseError
from reflectbench.types import REQUIRED_FIELDS

from conftest import build_sql_dataset_dir


def write_jsonl(path: Path, rows) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path


def math_rows(n: int) -> list[dict]:
    return [{"problem": f"What is {i} + {i}?", "answer": str(2 * i)} for i in range(1, n + 1)]


# 21 translation rows: de->en x10, fr->en x7, ja->en x4
TRANSLATION_PAIRS = [("de", "en")] * 10 + [("fr", "en")] * 7 + [("ja", "en")] * 4


def translation_rows(pairs=None) -> list[dict]:
    rows = []
    for i, (src, dst) in enumerate(pairs or TRANSLATION_PAIRS, start=1):
        rows.append(
            {
                "source": f"sentence number {i}",
                "target": f"rendered sentence number {i}",
                "target_language": dst,
                "source_language": src,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Flat loaders


def test_math_loader_default_field_map(tmp_path):
    path = write_jsonl(tmp_path / "math.jsonl", math_rows(3))
    samples = load_dataset(DatasetManifest(task=TaskKind.MATH_REASONING, path=path))
    assert [s.id for s in samples] == [
        "math_reasoning-00001",
        "math_reasoning-00002",
        "math_reasoning-00003",
    ]
    assert all(s.task is TaskKind.MATH_REASONING for s in samples)
    assert samples[0].payload == {"problem": "What is 1 + 1?"}
    assert samples[0].gold == "2"
    assert samples[2].gold == "6"


def test_explicit_row_ids_win(tmp_path):
    rows = [{"id": "gsm-17", "problem": "p", "answer": "a"}]
    path = write_jsonl(tmp_path / "math.jsonl", rows)
    (sample,) = load_dataset(DatasetManifest(task=TaskKind.MATH_REASONING, path=path))
    assert sample.id == "gsm-17"


def test_numeric_gold_coerced_to_string(tmp_path):
    path = write_jsonl(tmp_path / "math.jsonl", [{"problem": "p", "answer": 42}])
    (sample,) = load_dataset(DatasetManifest(task=TaskKind.MATH_REASONING, path=path))
    assert sample.gold == "42"


def test_sentiment_default_field_map_reads_text_column(tmp_path):
    assert DEFAULT_FIELD_MAPS[TaskKind.SENTIMENT]["review"] == "text"
    rows = [{"text": "loved every minute", "label": "positive"}]
    path = write_jsonl(tmp_path / "sent.jsonl", rows)
    (sample,) = load_dataset(DatasetManifest(task=TaskKind.SENTIMENT, path=path))
    assert sample.id == "sentiment-00001"
    assert sample.payload == {"review": "loved every minute"}
    assert sample.gold == "positive"


def test_translation_loader_and_optional_source_language(tmp_path):
    rows = [
        {"source": "der hund", "target": "the dog", "target_language": "en",
         "source_language": "de"},
        {"source": "le chat", "target": "the cat", "target_language": "en"},
    ]
    path = write_jsonl(tmp_path / "tr.jsonl", rows)
    samples = load_dataset(DatasetManifest(task=TaskKind.TRANSLATION, path=path))
    assert samples[0].payload == {
        "source": "der hund",
        "target_language": "en",
        "source_language": "de",
    }
    assert samples[0].gold == "the dog"
    assert language_pair(samples[0]) == "de->en"
    # absent source_language: key omitted, pair collapses to the target side
    assert "source_language" not in samples[1].payload
    assert language_pair(samples[1]) == "en"


def test_payloads_cover_required_fields(tmp_path, sql_dataset_dir):
    flat = {
        TaskKind.MATH_REASONING: write_jsonl(tmp_path / "m.jsonl", math_rows(1)),
        TaskKind.SENTIMENT: write_jsonl(
            tmp_path / "s.jsonl", [{"text": "meh", "label": "negative"}]
        ),
        TaskKind.TRANSLATION: write_jsonl(tmp_path / "t.jsonl", translation_rows()[:1]),
    }
    for task, path in flat.items():
        for sample in load_dataset(DatasetManifest(task=task, path=path)):
            assert set(REQUIRED_FIELDS[task]) <= set(sample.payload)
    for sample in load_dataset(DatasetManifest(task=TaskKind.TEXT_TO_SQL, path=sql_dataset_dir)):
        assert set(REQUIRED_FIELDS[TaskKind.TEXT_TO_SQL]) <= set(sample.payload)


def test_field_map_override_merges_with_defaults(tmp_path):
    rows = [{"q": "What is 2 + 2?", "answer": "4"}]
    path = write_jsonl(tmp_path / "math.jsonl", rows)
    manifest = DatasetManifest(
        task=TaskKind.MATH_REASONING, path=path, field_map={"problem": "q"}
    )
    (sample,) = load_dataset(manifest)
    assert sample.payload["problem"] == "What is 2 + 2?"
    assert sample.gold == "4"


def test_blank_lines_skipped_but_line_numbers_kept(tmp_path):
    path = tmp_path / "math.jsonl"
    path.write_text(
        json.dumps({"problem": "a", "answer": "1"})
        + "\n\n"
        + json.dumps({"problem": "b", "answer": "2"})
        + "\n",
        encoding="utf-8",
    )
    samples = load_dataset(DatasetManifest(task=TaskKind.MATH_REASONING, path=path))
    assert [s.id for s in samples] == ["math_reasoning-00001", "math_reasoning-00003"]


def test_invalid_json_carries_file_and_line(tmp_path):
    path = tmp_path / "math.jsonl"
    path.write_text('{"problem": "a", "answer": "1"}\n{not json\n', encoding="utf-8")
    with pytest.raises(ParseError, match="invalid JSON") as excinfo:
        load_dataset(DatasetManifest(task=TaskKind.MATH_REASONING, path=path))
    assert excinfo.value.path == str(path)
    assert excinfo.value.line == 2


def test_non_object_line_rejected(tmp_path):
    path = tmp_path / "math.jsonl"
    path.write_text("[1, 2, 3]\n", encoding="utf-8")
    with pytest.raises(ParseError, match="JSON object"):
        load_dataset(DatasetManifest(task=TaskKind.MATH_REASONING, path=path))


def test_missing_required_field_names_both_spellings(tmp_path):
    path = write_jsonl(tmp_path / "math.jsonl", [{"problem": "p"}])
    with pytest.raises(ParseError, match="'answer'"):
        load_dataset(DatasetManifest(task=TaskKind.MATH_REASONING, path=path))


def test_missing_dataset_file(tmp_path):
    manifest = DatasetManifest(task=TaskKind.MATH_REASONING, path=tmp_path / "nope.jsonl")
    with pytest.raises(DatasetError, match="not found"):
        load_dataset(manifest)


# ---------------------------------------------------------------------------
# Text-to-SQL directories


def test_sql_loader_builds_samples(sql_dataset_dir):
    samples = load_dataset(DatasetManifest(task=TaskKind.TEXT_TO_SQL, path=sql_dataset_dir))
    assert [s.id for s in samples] == ["shop-00001", "shop-00002", "shop-00003"]
    first = samples[0]
    assert first.payload["question"] == "How many products are there?"
    assert first.gold == "SELECT count(*) FROM products"
    assert Path(first.payload["db_path"]).exists()
    assert "CREATE TABLE products" in first.payload["schema_ddl"]
    # every sample for the same db shares one rendered schema
    assert len({s.payload["schema_ddl"] for s in samples}) == 1


def test_sql_loader_respects_explicit_ids(tmp_path):
    questions = [
        {"id": "spider-9", "question": "q", "db_id": "shop", "query": "SELECT 1"},
    ]
    root = build_sql_dataset_dir(tmp_path / "ds", questions=questions)
    (sample,) = load_dataset(DatasetManifest(task=TaskKind.TEXT_TO_SQL, path=root))
    assert sample.id == "spider-9"


def test_db_names_restriction(tmp_path):
    root = build_sql_dataset_dir(tmp_path / "ds")
    kept = load_dataset(
        DatasetManifest(task=TaskKind.TEXT_TO_SQL, path=root, db_names=("shop",))
    )
    assert len(kept) == 3
    with pytest.raises(DatasetError, match="no samples"):
        load_dataset(
            DatasetManifest(task=TaskKind.TEXT_TO_SQL, path=root, db_names=("warehouse",))
        )


def test_unknown_db_id_is_a_parse_error(tmp_path):
    questions = [
        {"question": "q", "db_id": "warehouse", "query": "SELECT 1"},
    ]
    root = build_sql_dataset_dir(tmp_path / "ds", questions=questions)
    with pytest.raises(ParseError, match="'warehouse'") as excinfo:
        load_dataset(DatasetManifest(task=TaskKind.TEXT_TO_SQL, path=root))
    assert excinfo.value.line == 1


def test_missing_database_file(tmp_path):
    root = build_sql_dataset_dir(tmp_path / "ds")
    (root / "database" / "shop" / "shop.sqlite").unlink()
    with pytest.raises(MissingDatabase, match="shop.sqlite"):
        load_dataset(DatasetManifest(task=TaskKind.TEXT_TO_SQL, path=root))


def test_sql_manifest_path_must_be_directory(tmp_path):
    path = write_jsonl(tmp_path / "flat.jsonl", [{"question": "q"}])
    with pytest.raises(DatasetError, match="directory"):
        load_dataset(DatasetManifest(task=TaskKind.TEXT_TO_SQL, path=path))


def test_missing_schema_file(tmp_path):
    root = build_sql_dataset_dir(tmp_path / "ds")
    (root / "tables.json").unlink()
    with pytest.raises(DatasetError, match="schema file"):
        load_dataset(DatasetManifest(task=TaskKind.TEXT_TO_SQL, path=root))


def test_custom_questions_file_name(tmp_path):
    root = build_sql_dataset_dir(tmp_path / "ds")
    (root / "questions.jsonl").rename(root / "dev.jsonl")
    samples = load_dataset(
        DatasetManifest(task=TaskKind.TEXT_TO_SQL, path=root, questions_file="dev.jsonl")
    )
    assert len(samples) == 3


def test_render_schema_ddl_exact(tmp_path):
    root = build_sql_dataset_dir(tmp_path / "ds")
    (entry,) = json.loads((root / "tables.json").read_text(encoding="utf-8"))
    expected = (
        "CREATE TABLE products (\n"
        "  id number,\n"
        "  name text,\n"
        "  price number,\n"
        "  stock number,\n"
        "  PRIMARY KEY (id)\n"
        ");\n"
        "\n"
        "CREATE TABLE orders (\n"
        "  id number,\n"
        "  product_id number,\n"
        "  quantity number,\n"
        "  day text,\n"
        "  PRIMARY KEY (id),\n"
        "  FOREIGN KEY (product_id) REFERENCES products(id)\n"
        ");"
    )
    assert render_schema_ddl(entry) == expected


def test_render_schema_ddl_defaults_to_text_type():
    entry = {
        "db_id": "tiny",
        "table_names_original": ["t"],
        "column_names_original": [[0, "a"], [0, "b"]],
    }
    ddl = render_schema_ddl(entry)
    assert "a text" in ddl and "b text" in ddl
    assert "PRIMARY KEY" not in ddl


# ---------------------------------------------------------------------------
# Subsetting


def test_plain_subset_is_deterministic_and_order_preserving(tmp_path):
    path = write_jsonl(tmp_path / "math.jsonl", math_rows(20))
    manifest = DatasetManifest(
        task=TaskKind.MATH_REASONING, path=path, subset_size=7, subset_seed=3
    )
    first = load_dataset(manifest)
    second = load_dataset(manifest)
    assert first == second
    assert len(first) == 7
    full_ids = [s.id for s in load_dataset(DatasetManifest(task=TaskKind.MATH_REASONING, path=path))]
    subset_ids = [s.id for s in first]
    assert set(subset_ids) <= set(full_ids)
    assert subset_ids == sorted(subset_ids)


def test_plain_subset_depends_on_seed(tmp_path):
    path = write_jsonl(tmp_path / "math.jsonl", math_rows(20))
    by_seed = {
        seed: [
            s.id
            for s in load_dataset(
                DatasetManifest(
                    task=TaskKind.MATH_REASONING, path=path, subset_size=7, subset_seed=seed
                )
            )
        ]
        for seed in (0, 1)
    }
    assert by_seed[0] != by_seed[1]


def test_subset_size_validation(tmp_path):
    path = write_jsonl(tmp_path / "math.jsonl", math_rows(5))
    with pytest.raises(DatasetError, match="positive"):
        load_dataset(DatasetManifest(task=TaskKind.MATH_REASONING, path=path, subset_size=0))
    with pytest.raises(DatasetError, match="exceeds"):
        load_dataset(DatasetManifest(task=TaskKind.MATH_REASONING, path=path, subset_size=6))


def test_stratified_subset_balances_language_pairs(tmp_path):
    path = write_jsonl(tmp_path / "tr.jsonl", translation_rows())
    manifest = DatasetManifest(
        task=TaskKind.TRANSLATION, path=path, subset_size=9, subset_seed=0
    )
    samples = load_dataset(manifest)
    counts = Counter(language_pair(s) for s in samples)
    assert counts == {"de->en": 3, "fr->en": 3, "ja->en": 3}
    assert load_dataset(manifest) == samples
    # uneven size: quotas still differ by at most one
    uneven = load_dataset(
        DatasetManifest(task=TaskKind.TRANSLATION, path=path, subset_size=10, subset_seed=0)
    )
    uneven_counts = Counter(language_pair(s) for s in uneven)
    assert sum(uneven_counts.values()) == 10
    assert max(uneven_counts.values()) - min(uneven_counts.values()) <= 1


def test_stratified_subset_every_feasible_size(tmp_path):
    # pools are de:10 fr:7 ja:4; any size <= 12 keeps every quota within its
    # pool, any size >= 15 demands more ja rows than exist
    path = write_jsonl(tmp_path / "tr.jsonl", translation_rows())
    for size in range(1, 22):
        manifest = DatasetManifest(
            task=TaskKind.TRANSLATION, path=path, subset_size=size, subset_seed=11
        )
        try:
            samples = load_dataset(manifest)
        except DatasetError:
            assert size >= 13
            continue
        if size >= 15:
            pytest.fail(f"size {size} should exhaust the smallest pool")
        counts = Counter(language_pair(s) for s in samples)
        assert sum(counts.values()) == size
        assert max(counts.values()) - min(counts.values()) <= 1
        ids = [s.id for s in samples]
        assert ids == sorted(ids)


def test_stratified_subset_depends_on_seed(tmp_path):
    path = write_jsonl(tmp_path / "tr.jsonl", translation_rows())
    picks = {
        seed: tuple(
            s.id
            for s in load_dataset(
                DatasetManifest(
                    task=TaskKind.TRANSLATION, path=path, subset_size=9, subset_seed=seed
                )
            )
        )
        for seed in (0, 5)
    }
    assert picks[0] != picks[5]


def test_language_pairs_filter(tmp_path):
    path = write_jsonl(tmp_path / "tr.jsonl", translation_rows())
    manifest = DatasetManifest(
        task=TaskKind.TRANSLATION, path=path, language_pairs=("de->en", "ja->en")
    )
    samples = load_dataset(manifest)
    assert Counter(language_pair(s) for s in samples) == {"de->en": 10, "ja->en": 4}
    with pytest.raises(DatasetError, match="no samples"):
        load_dataset(
            DatasetManifest(task=TaskKind.TRANSLATION, path=path, language_pairs=("zz->en",))
        )


# ---------------------------------------------------------------------------
# Manifest parsing


def test_from_dict_resolves_relative_paths(tmp_path):
    manifest = DatasetManifest.from_dict(
        {"task": "math_reasoning", "path": "data/math.jsonl"}, base_dir=tmp_path
    )
    assert manifest.path == tmp_path / "data" / "math.jsonl"
    absolute = DatasetManifest.from_dict(
        {"task": "math_reasoning", "path": str(tmp_path / "abs.jsonl")}, base_dir=tmp_path / "sub"
    )
    assert absolute.path == tmp_path / "abs.jsonl"


def test_from_dict_optional_fields():
    raw = {
        "task": "translation",
        "path": "/data/tr.jsonl",
        "field_map": {"source": "src"},
        "subset_size": 40,
        "subset_seed": 7,
        "language_pairs": ["de->en"],
        "db_names": ["shop"],
    }
    manifest = DatasetManifest.from_dict(raw)
    assert manifest.task is TaskKind.TRANSLATION
    assert manifest.field_map == {"source": "src"}
    assert manifest.subset_size == 40
    assert manifest.subset_seed == 7
    assert manifest.language_pairs == ("de->en",)
    assert manifest.db_names == ("shop",)
    bare = DatasetManifest.from_dict({"task": "sentiment", "path": "s.jsonl"})
    assert bare.language_pairs is None
    assert bare.db_names is None
    assert bare.subset_size is None
    assert bare.subset_seed == 0


def test_manifest_load_resolves_against_manifest_dir(tmp_path):
    data_dir = tmp_path / "datasets"
    data_dir.mkdir()
    write_jsonl(data_dir / "math.jsonl", math_rows(2))
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(
        json.dumps({"task": "math_reasoning", "path": "datasets/math.jsonl"}),
        encoding="utf-8",
    )
    manifest = DatasetManifest.load(manifest_path)
    assert manifest.path == data_dir / "math.jsonl"
    assert len(load_dataset(manifest)) == 2


def test_unknown_task_rejected():
    with pytest.raises(ValueError):
        DatasetManifest.from_dict({"task": "poetry", "path": "x.jsonl"})
