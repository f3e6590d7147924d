from __future__ import annotations

import random
import sqlite3

import pytest

from conftest import SHOP_QUERIES
from oracles import partial_credit_oracle
from reflectbench.errors import DatasetError, ExecError
from reflectbench.verifiers import ResultTable, exact_match, execute_sql, partial_credit, score_sql


def test_execute_returns_columns_and_rows(shop_db):
    table = execute_sql("SELECT name, stock FROM products WHERE stock = 0", shop_db)
    assert table.columns == ("name", "stock")
    assert table.rows == (("tunnel paint", 0),)
    assert not table.order_sensitive
    assert table.cell_count == 2


def test_order_by_marks_table_order_sensitive(shop_db):
    assert execute_sql("SELECT name FROM products ORDER BY price", shop_db).order_sensitive
    assert execute_sql("SELECT name FROM products Order   By price", shop_db).order_sensitive
    assert not execute_sql("SELECT 'disorder byte' AS note", shop_db).order_sensitive


def test_floats_round_to_six_significant_digits(shop_db):
    third = execute_sql("SELECT 1.0 / 3.0", shop_db).rows[0][0]
    assert third == 0.333333
    big = execute_sql("SELECT 1234567.8", shop_db).rows[0][0]
    assert big == 1234570.0


def test_write_statements_fail_and_leave_db_untouched(shop_db):
    for stmt in (
        "INSERT INTO products VALUES (9, 'bomb', 1.0, 1)",
        "UPDATE products SET stock = 0",
        "DELETE FROM orders",
        "DROP TABLE products",
    ):
        with pytest.raises(ExecError):
            execute_sql(stmt, shop_db)
    with sqlite3.connect(shop_db) as conn:
        assert conn.execute("SELECT COUNT(*) FROM products").fetchone()[0] == 5
        assert conn.execute("SELECT COUNT(*) FROM orders").fetchone()[0] == 8


def test_missing_database_and_bad_sql(shop_db, tmp_path):
    with pytest.raises(ExecError):
        execute_sql("SELECT 1", tmp_path / "nowhere.sqlite")
    with pytest.raises(ExecError):
        execute_sql("SELECT nope FROM nothing", shop_db)


def test_runaway_query_hits_timeout(shop_db):
    endless = (
        "WITH RECURSIVE cnt(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM cnt) "
        "SELECT COUNT(*) FROM cnt"
    )
    with pytest.raises(ExecError, match="timeout"):
        execute_sql(endless, shop_db, timeout_s=0.2)


# ---------------------------------------------------------------------------
# Scoring


def test_every_fixture_query_scores_itself_perfectly(shop_db):
    assert len(SHOP_QUERIES) == 50
    for query in SHOP_QUERIES:
        score, method, _ = score_sql(query, query, shop_db)
        assert score == 1.0, query
        assert method == "exec_match"


def test_row_permutation_without_order_by_still_matches(shop_db):
    score, method, _ = score_sql(
        "SELECT name FROM products ORDER BY price DESC",  # permuted result set
        "SELECT name FROM products",
        shop_db,
    )
    assert score == 1.0
    assert method == "exec_match"


def test_row_permutation_against_ordered_gold_is_penalized(shop_db):
    score, method, _ = score_sql(
        "SELECT name FROM products ORDER BY price DESC",
        "SELECT name FROM products ORDER BY price ASC",
        shop_db,
    )
    assert score < 1.0
    assert method == "partial_credit"


def test_failed_prediction_scores_zero(shop_db):
    score, method, detail = score_sql("SELECT bogus FROM missing", "SELECT name FROM products", shop_db)
    assert score == 0.0
    assert method == "exec_match"
    assert "execution error" in detail


def test_failing_gold_query_is_a_dataset_defect(shop_db):
    with pytest.raises(DatasetError):
        score_sql("SELECT name FROM products", "SELECT nope FROM nothing", shop_db)


def test_partial_credit_known_value():
    pred = ResultTable(("a", "b"), ((1, "a"), (2, "b")))
    gold = ResultTable(("a", "b"), ((1, "a"), (3, "c")))
    assert partial_credit(pred, gold) == pytest.approx(0.5)


def test_partial_credit_positional_when_gold_ordered():
    gold = ResultTable(("v",), ((1,), (2,), (3,)), order_sensitive=True)
    pred = ResultTable(("v",), ((3,), (2,), (1,)))
    # only the middle cell lines up positionally
    assert partial_credit(pred, gold) == pytest.approx(1 / 3)
    unordered_gold = ResultTable(("v",), ((1,), (2,), (3,)), order_sensitive=False)
    assert partial_credit(pred, unordered_gold) == pytest.approx(1.0)


def test_partial_credit_empty_tables():
    empty = ResultTable((), ())
    assert partial_credit(empty, empty) == 0.0
    assert partial_credit(ResultTable(("v",), ((1,),)), empty) == 0.0


def test_exact_match_counts_duplicate_rows():
    one = ResultTable(("v",), ((1,),))
    two = ResultTable(("v",), ((1,), (1,)))
    assert not exact_match(two, one)
    assert partial_credit(two, one) == pytest.approx(0.5)


def test_exact_match_order_semantics():
    gold_ordered = ResultTable(("v",), ((1,), (2,)), order_sensitive=True)
    gold_bag = ResultTable(("v",), ((1,), (2,)), order_sensitive=False)
    flipped = ResultTable(("v",), ((2,), (1,)))
    assert not exact_match(flipped, gold_ordered)
    assert exact_match(flipped, gold_bag)


def _random_table(rng: random.Random, order_sensitive: bool) -> ResultTable:
    n_rows = rng.randint(0, 5)
    n_cols = rng.randint(1, 3)
    values = [1, 2, "x", "y", 0.5, None]
    rows = tuple(
        tuple(rng.choice(values) for _ in range(n_cols)) for _ in range(n_rows)
    )
    cols = tuple(f"c{i}" for i in range(n_cols))
    return ResultTable(cols, rows, order_sensitive=order_sensitive)


def test_partial_credit_matches_multiset_oracle_on_random_pairs():
    rng = random.Random(4242)
    for _ in range(100):
        gold = _random_table(rng, order_sensitive=rng.random() < 0.5)
        pred = _random_table(rng, order_sensitive=False)
        got = partial_credit(pred, gold)
        want = partial_credit_oracle(pred.rows, gold.rows, gold.order_sensitive)
        assert got == pytest.approx(want, abs=1e-9)
        assert 0.0 <= got <= 1.0
