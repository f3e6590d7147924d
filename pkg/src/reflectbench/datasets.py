"""Dataset loading: JSONL task files and relational question directories.

Field-name mappings live in the manifest rather than the code because
upstream dataset distributions rename fields between releases; the
defaults below match the common published layouts.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .errors import DatasetError, MissingDatabase, ParseError
from .types import Sample, TaskKind

# canonical name -> field name in the distributed file
DEFAULT_FIELD_MAPS: Mapping[TaskKind, Mapping[str, str]] = {
    TaskKind.MATH_REASONING: {"problem": "problem", "answer": "answer"},
    TaskKind.SENTIMENT: {"review": "text", "label": "label"},
    TaskKind.TRANSLATION: {
        "source": "source",
        "target": "target",
        "target_language": "target_language",
        "source_language": "source_language",
    },
    TaskKind.TEXT_TO_SQL: {"question": "question", "db_id": "db_id", "query": "query"},
}

# fields a loader may leave absent without failing the row
_OPTIONAL_FIELDS = {"source_language", "id"}


@dataclass(frozen=True)
class DatasetManifest:
    """Where a dataset lives and how to read it.

    ``path`` is a JSONL file for single-file tasks and a directory for
    text-to-SQL (question JSONL + schema JSON + database files inside).
    """

    task: TaskKind
    path: Path
    field_map: Mapping[str, str] = field(default_factory=dict)
    subset_size: Optional[int] = None
    subset_seed: int = 0
    language_pairs: Optional[tuple[str, ...]] = None
    db_names: Optional[tuple[str, ...]] = None
    questions_file: str = "questions.jsonl"
    schema_file: str = "tables.json"
    db_dir: str = "database"

    def effective_field_map(self) -> dict:
        merged = dict(DEFAULT_FIELD_MAPS[self.task])
        merged.update(self.field_map)
        return merged

    @classmethod
    def from_dict(cls, raw: Mapping, *, base_dir: Optional[Path] = None) -> "DatasetManifest":
        task = TaskKind(raw["task"])
        path = Path(raw["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return cls(
            task=task,
            path=path,
            field_map=dict(raw.get("field_map", {})),
            subset_size=raw.get("subset_size"),
            subset_seed=raw.get("subset_seed", 0),
            language_pairs=tuple(raw["language_pairs"]) if raw.get("language_pairs") else None,
            db_names=tuple(raw["db_names"]) if raw.get("db_names") else None,
            questions_file=raw.get("questions_file", "questions.jsonl"),
            schema_file=raw.get("schema_file", "tables.json"),
            db_dir=raw.get("db_dir", "database"),
        )

    @classmethod
    def load(cls, manifest_path: Path | str) -> "DatasetManifest":
        manifest_path = Path(manifest_path)
        raw = json.loads(manifest_path.read_text(encoding="utf-8"))
        return cls.from_dict(raw, base_dir=manifest_path.parent)


def _read_jsonl(path: Path) -> list[tuple[int, dict]]:
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(path), lineno, f"invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise ParseError(str(path), lineno, "expected a JSON object per line")
            rows.append((lineno, obj))
    return rows


def _pick(row: dict, file_field: str, path: Path, lineno: int, canonical: str) -> str:
    if file_field not in row:
        if canonical in _OPTIONAL_FIELDS:
            return ""
        raise ParseError(str(path), lineno, f"missing field {file_field!r} ({canonical})")
    return str(row[file_field])


def _load_flat_task(manifest: DatasetManifest) -> list[Sample]:
    fmap = manifest.effective_field_map()
    path = manifest.path
    samples = []
    for lineno, row in _read_jsonl(path):
        values = {
            canonical: _pick(row, file_field, path, lineno, canonical)
            for canonical, file_field in fmap.items()
        }
        sample_id = str(row.get("id") or f"{manifest.task.value}-{lineno:05d}")
        if manifest.task is TaskKind.MATH_REASONING:
            payload = {"problem": values["problem"]}
            gold = values["answer"]
        elif manifest.task is TaskKind.SENTIMENT:
            payload = {"review": values["review"]}
            gold = values["label"]
        else:  # translation
            payload = {
                "source": values["source"],
                "target_language": values["target_language"],
            }
            if values.get("source_language"):
                payload["source_language"] = values["source_language"]
            gold = values["target"]
        samples.append(Sample(id=sample_id, task=manifest.task, payload=payload, gold=gold))
    return samples


# ---------------------------------------------------------------------------
# Text-to-SQL directories (question JSONL + schema JSON + database files)


def render_schema_ddl(db_entry: Mapping) -> str:
    """CREATE TABLE statements for one database, tables in dataset order."""
    table_names = db_entry["table_names_original"]
    column_names = db_entry["column_names_original"]
    column_types = db_entry.get("column_types", [])
    primary_keys = set(db_entry.get("primary_keys", []))
    foreign_keys = db_entry.get("foreign_keys", [])

    per_table_fk: dict[int, list[str]] = {}
    for src_col, dst_col in foreign_keys:
        src_table, src_name = column_names[src_col]
        dst_table, dst_name = column_names[dst_col]
        per_table_fk.setdefault(src_table, []).append(
            f"FOREIGN KEY ({src_name}) REFERENCES {table_names[dst_table]}({dst_name})"
        )

    statements = []
    for t_idx, table in enumerate(table_names):
        lines = []
        pk_cols = []
        for c_idx, (owner, col_name) in enumerate(column_names):
            if owner != t_idx:
                continue
            col_type = column_types[c_idx] if c_idx < len(column_types) else "text"
            lines.append(f"  {col_name} {col_type}")
            if c_idx in primary_keys:
                pk_cols.append(col_name)
        if pk_cols:
            lines.append(f"  PRIMARY KEY ({', '.join(pk_cols)})")
        lines.extend(f"  {fk}" for fk in per_table_fk.get(t_idx, []))
        statements.append(f"CREATE TABLE {table} (\n" + ",\n".join(lines) + "\n);")
    return "\n\n".join(statements)


def _load_text_to_sql(manifest: DatasetManifest) -> list[Sample]:
    root = manifest.path
    if not root.is_dir():
        raise DatasetError(f"text_to_sql manifest path must be a directory: {root}")
    schema_path = root / manifest.schema_file
    if not schema_path.exists():
        raise DatasetError(f"schema file not found: {schema_path}")
    try:
        schema_entries = json.loads(schema_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(str(schema_path), exc.lineno, f"invalid JSON: {exc.msg}") from None
    ddl_by_db = {entry["db_id"]: render_schema_ddl(entry) for entry in schema_entries}

    fmap = manifest.effective_field_map()
    questions_path = root / manifest.questions_file
    allowed = set(manifest.db_names) if manifest.db_names else None
    samples = []
    for lineno, row in _read_jsonl(questions_path):
        db_id = _pick(row, fmap["db_id"], questions_path, lineno, "db_id")
        if allowed is not None and db_id not in allowed:
            continue
        if db_id not in ddl_by_db:
            raise ParseError(
                str(questions_path), lineno, f"db_id {db_id!r} not in {manifest.schema_file}"
            )
        db_path = root / manifest.db_dir / db_id / f"{db_id}.sqlite"
        if not db_path.exists():
            raise MissingDatabase(f"database file not found: {db_path}")
        sample_id = str(row.get("id") or f"{db_id}-{lineno:05d}")
        samples.append(
            Sample(
                id=sample_id,
                task=TaskKind.TEXT_TO_SQL,
                payload={
                    "question": _pick(row, fmap["question"], questions_path, lineno, "question"),
                    "schema_ddl": ddl_by_db[db_id],
                    "db_path": str(db_path),
                },
                gold=_pick(row, fmap["query"], questions_path, lineno, "query"),
            )
        )
    return samples


# ---------------------------------------------------------------------------
# Subsetting


def language_pair(sample: Sample) -> str:
    src = sample.payload.get("source_language", "")
    dst = sample.payload.get("target_language", "")
    return f"{src}->{dst}" if src else dst


def _plain_subset(samples: list[Sample], size: int, seed: int) -> list[Sample]:
    rng = random.Random(seed)
    indices = sorted(rng.sample(range(len(samples)), size))
    return [samples[i] for i in indices]


def _stratified_subset(samples: list[Sample], size: int, seed: int) -> list[Sample]:
    """Seeded per-language-pair sampling with quotas differing by <= 1."""
    groups: dict[str, list[int]] = {}
    for i, s in enumerate(samples):
        groups.setdefault(language_pair(s), []).append(i)
    keys = sorted(groups)
    rng = random.Random(seed)
    base, extra = divmod(size, len(keys))
    bonus_order = list(keys)
    rng.shuffle(bonus_order)
    quota = {k: base for k in keys}
    for k in bonus_order[:extra]:
        quota[k] += 1
    chosen: list[int] = []
    for k in keys:
        pool = groups[k]
        if quota[k] > len(pool):
            raise DatasetError(
                f"language pair {k!r} has {len(pool)} samples, needs {quota[k]} for the subset"
            )
        chosen.extend(rng.sample(pool, quota[k]))
    return [samples[i] for i in sorted(chosen)]


def load_dataset(manifest: DatasetManifest) -> list[Sample]:
    """Load and optionally subset a dataset; deterministic for a seed."""
    if manifest.task is TaskKind.TEXT_TO_SQL:
        samples = _load_text_to_sql(manifest)
    else:
        samples = _load_flat_task(manifest)

    if manifest.task is TaskKind.TRANSLATION and manifest.language_pairs:
        wanted = set(manifest.language_pairs)
        samples = [s for s in samples if language_pair(s) in wanted]

    if not samples:
        raise DatasetError(f"no samples loaded from {manifest.path}")

    if manifest.subset_size is not None:
        if manifest.subset_size <= 0:
            raise DatasetError("subset_size must be positive")
        if manifest.subset_size > len(samples):
            raise DatasetError(
                f"subset_size {manifest.subset_size} exceeds dataset size {len(samples)}"
            )
        if manifest.task is TaskKind.TRANSLATION:
            samples = _stratified_subset(samples, manifest.subset_size, manifest.subset_seed)
        else:
            samples = _plain_subset(samples, manifest.subset_size, manifest.subset_seed)
    return samples
