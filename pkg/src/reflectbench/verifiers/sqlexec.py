"""Read-only SQL execution and execution-accuracy scoring."""

from __future__ import annotations

import math
import re
import sqlite3
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote

from ..errors import DatasetError, ExecError

DEFAULT_TIMEOUT_S = 10.0
_ORDER_BY = re.compile(r"\border\s+by\b", re.IGNORECASE)


def _norm_cell(value):
    """Round reals to 6 significant digits; leave other types alone."""
    if isinstance(value, float):
        if value == 0.0 or not math.isfinite(value):
            return value
        return round(value, 5 - int(math.floor(math.log10(abs(value)))))
    return value


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    order_sensitive: bool = False

    @property
    def cell_count(self) -> int:
        return sum(len(r) for r in self.rows)


def execute_sql(query: str, db_path: Path | str, *, timeout_s: float = DEFAULT_TIMEOUT_S) -> ResultTable:
    """Run a query against a SQLite file opened read-only.

    Aborts with ExecError after ``timeout_s`` seconds via a progress
    handler, so runaway queries cannot wedge a worker. The database is
    never modified: the read-only open makes write statements fail.
    """
    path = Path(db_path)
    if not path.exists():
        raise ExecError(f"database file {path} does not exist")
    uri = f"file:{quote(str(path))}?mode=ro"
    deadline = time.monotonic() + timeout_s
    try:
        con = sqlite3.connect(uri, uri=True)
    except sqlite3.Error as exc:
        raise ExecError(f"cannot open {path}: {exc}") from exc
    try:
        con.set_progress_handler(lambda: 1 if time.monotonic() > deadline else 0, 2000)
        try:
            cur = con.execute(query)
            columns = tuple(d[0] for d in cur.description) if cur.description else ()
            raw_rows = cur.fetchall()
        except sqlite3.Error as exc:
            if time.monotonic() > deadline:
                raise ExecError(f"query exceeded {timeout_s:g}s timeout") from exc
            raise ExecError(str(exc)) from exc
    finally:
        con.close()
    rows = tuple(tuple(_norm_cell(v) for v in row) for row in raw_rows)
    return ResultTable(columns=columns, rows=rows, order_sensitive=bool(_ORDER_BY.search(query)))


def _flatten_cells(table: ResultTable) -> Counter:
    counter: Counter = Counter()
    for row in table.rows:
        counter.update(row)
    return counter


def partial_credit(pred: ResultTable, gold: ResultTable) -> float:
    """Cell-level overlap score in [0, 1].

    Order-insensitive comparisons use the multiset intersection of all
    cell values. When the gold query enforces ordering, cells only count
    if they match at the same (row, column) position; otherwise a mere
    permutation would be indistinguishable from a full match.
    """
    total_pred = pred.cell_count
    total_gold = gold.cell_count
    denom = max(total_pred, total_gold)
    if denom == 0:
        return 0.0
    if gold.order_sensitive:
        hits = 0
        for prow, grow in zip(pred.rows, gold.rows):
            hits += sum(1 for pv, gv in zip(prow, grow) if pv == gv)
        return hits / denom
    intersection = _flatten_cells(pred) & _flatten_cells(gold)
    return sum(intersection.values()) / denom


def exact_match(pred: ResultTable, gold: ResultTable) -> bool:
    """Row-level equality; order matters only when the gold query orders."""
    if gold.order_sensitive:
        return pred.rows == gold.rows
    return Counter(pred.rows) == Counter(gold.rows)


def score_sql(
    pred_sql: str,
    gold_sql: str,
    db_path: Path | str,
    *,
    timeout_s: float = DEFAULT_TIMEOUT_S,
) -> tuple[float, str, str]:
    """Score a predicted query against the gold query on one database.

    Returns (score, method, detail) where method is "exec_match" for an
    exact result match (or an execution failure, score 0) and
    "partial_credit" otherwise. A gold query that fails to execute is a
    dataset defect, not a model failure, and raises DatasetError.
    """
    try:
        gold = execute_sql(gold_sql, db_path, timeout_s=timeout_s)
    except ExecError as exc:
        raise DatasetError(f"gold query failed on {db_path}: {exc}") from exc
    try:
        pred = execute_sql(pred_sql, db_path, timeout_s=timeout_s)
    except ExecError as exc:
        return 0.0, "exec_match", f"execution error: {exc}"
    if exact_match(pred, gold):
        return 1.0, "exec_match", "result tables match"
    score = partial_credit(pred, gold)
    return score, "partial_credit", (
        f"cell overlap {score:.6f} (pred {pred.cell_count} cells, gold {gold.cell_count} cells)"
    )
