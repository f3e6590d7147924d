from __future__ import annotations

import json
import sqlite3
from pathlib import Path

import pytest

from reflectbench import (
    MockProvider,
    MockRule,
    MockScript,
    Sample,
    TaskKind,
)


# ---------------------------------------------------------------------------
# SQLite databases


SHOP_SCHEMA = """
CREATE TABLE products (
  id INTEGER PRIMARY KEY,
  name TEXT,
  price REAL,
  stock INTEGER
);
CREATE TABLE orders (
  id INTEGER PRIMARY KEY,
  product_id INTEGER,
  quantity INTEGER,
  day TEXT,
  FOREIGN KEY (product_id) REFERENCES products(id)
);
"""

SHOP_PRODUCTS = [
    (1, "anvil", 55.0, 3),
    (2, "rope", 7.25, 40),
    (3, "dynamite", 12.5, 12),
    (4, "magnet", 19.99, 7),
    (5, "tunnel paint", 33.0, 0),
]

SHOP_ORDERS = [
    (1, 1, 2, "2025-04-01"),
    (2, 2, 10, "2025-04-02"),
    (3, 2, 5, "2025-04-02"),
    (4, 3, 1, "2025-04-05"),
    (5, 4, 3, "2025-04-08"),
    (6, 1, 1, "2025-04-09"),
    (7, 5, 2, "2025-04-11"),
    (8, 3, 4, "2025-04-12"),
]


def build_shop_db(path: Path) -> Path:
    conn = sqlite3.connect(path)
    try:
        conn.executescript(SHOP_SCHEMA)
        conn.executemany("INSERT INTO products VALUES (?,?,?,?)", SHOP_PRODUCTS)
        conn.executemany("INSERT INTO orders VALUES (?,?,?,?)", SHOP_ORDERS)
        conn.commit()
    finally:
        conn.close()
    return path


@pytest.fixture()
def shop_db(tmp_path) -> Path:
    return build_shop_db(tmp_path / "shop.sqlite")


# Fifty distinct executable queries against the shop schema; self-scoring
# (predicted == gold) must give 1.0 on every one of them.
SHOP_QUERIES = [
    "SELECT * FROM products",
    "SELECT name FROM products",
    "SELECT name, price FROM products ORDER BY price",
    "SELECT name FROM products WHERE stock = 0",
    "SELECT COUNT(*) FROM orders",
    "SELECT AVG(price) FROM products",
    "SELECT MIN(price), MAX(price) FROM products",
    "SELECT DISTINCT product_id FROM orders",
    "SELECT p.name, o.quantity FROM orders o JOIN products p ON p.id = o.product_id",
    "SELECT p.name, SUM(o.quantity) AS total FROM orders o"
    " JOIN products p ON p.id = o.product_id GROUP BY p.name",
    "SELECT name FROM products WHERE id IN (SELECT product_id FROM orders)",
    "SELECT name FROM products WHERE id NOT IN (SELECT product_id FROM orders)",
    "SELECT day, COUNT(*) FROM orders GROUP BY day ORDER BY day",
    "SELECT name FROM products ORDER BY stock DESC LIMIT 2",
    "SELECT SUM(quantity * price) FROM orders JOIN products ON products.id = orders.product_id",
    "SELECT name, stock FROM products WHERE stock BETWEEN 1 AND 10",
    "SELECT UPPER(name) FROM products",
    "SELECT price * 2 FROM products WHERE name = 'rope'",
    "SELECT COUNT(DISTINCT day) FROM orders",
    "SELECT name FROM products WHERE name LIKE '%a%'",
] + [
    f"SELECT name FROM products WHERE price > {threshold}" for threshold in range(0, 45, 3)
] + [
    f"SELECT COUNT(*) FROM orders WHERE quantity >= {floor}" for floor in range(1, 16)
]
assert len(SHOP_QUERIES) == 50


# ---------------------------------------------------------------------------
# A miniature text-to-SQL dataset directory (question JSONL + schema JSON
# + database files), shaped like the public distribution.


def build_sql_dataset_dir(root: Path, questions=None) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    db_dir = root / "database" / "shop"
    db_dir.mkdir(parents=True, exist_ok=True)
    build_shop_db(db_dir / "shop.sqlite")

    tables = [
        {
            "db_id": "shop",
            "table_names_original": ["products", "orders"],
            "column_names_original": [
                [0, "id"], [0, "name"], [0, "price"], [0, "stock"],
                [1, "id"], [1, "product_id"], [1, "quantity"], [1, "day"],
            ],
            "column_types": ["number", "text", "number", "number",
                             "number", "number", "number", "text"],
            "primary_keys": [0, 4],
            "foreign_keys": [[5, 0]],
        }
    ]
    (root / "tables.json").write_text(json.dumps(tables), encoding="utf-8")

    if questions is None:
        questions = [
            {"question": "How many products are there?", "db_id": "shop",
             "query": "SELECT count(*) FROM products"},
            {"question": "List product names by price descending.", "db_id": "shop",
             "query": "SELECT name FROM products ORDER BY price DESC"},
            {"question": "What is the total quantity ordered?", "db_id": "shop",
             "query": "SELECT sum(quantity) FROM orders"},
        ]
    with open(root / "questions.jsonl", "w", encoding="utf-8") as fh:
        for q in questions:
            fh.write(json.dumps(q) + "\n")
    return root


@pytest.fixture()
def sql_dataset_dir(tmp_path) -> Path:
    return build_sql_dataset_dir(tmp_path / "sqlds")


# ---------------------------------------------------------------------------
# Samples and providers


@pytest.fixture()
def math_sample() -> Sample:
    return Sample(
        id="math-1",
        task=TaskKind.MATH_REASONING,
        payload={"problem": "What is 6 times 7?"},
        gold="42",
    )


@pytest.fixture()
def sentiment_sample() -> Sample:
    return Sample(
        id="sent-1",
        task=TaskKind.SENTIMENT,
        payload={"review": "A joyless slog with no redeeming qualities."},
        gold="negative",
    )


@pytest.fixture()
def translation_sample() -> Sample:
    return Sample(
        id="tr-1",
        task=TaskKind.TRANSLATION,
        payload={"source": "the cat sat on the mat", "target_language": "German"},
        gold="die katze sass auf der matte",
    )


def sql_sample_for(db_path: Path, *, gold: str = "SELECT name FROM products") -> Sample:
    return Sample(
        id="sql-1",
        task=TaskKind.TEXT_TO_SQL,
        payload={
            "question": "List all product names.",
            "schema_ddl": "CREATE TABLE products (id number, name text, price number, stock number);",
            "db_path": str(db_path),
        },
        gold=gold,
    )


@pytest.fixture()
def sql_sample(shop_db) -> Sample:
    return sql_sample_for(shop_db)


def scripted_provider(*rules: MockRule, default: str = "fallback answer", seed: int = 0) -> MockProvider:
    return MockProvider(MockScript(rules=tuple(rules), default=default), seed=seed)
