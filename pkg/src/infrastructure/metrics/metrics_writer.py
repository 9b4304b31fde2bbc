import csv
import io
import json
from typing import Iterable, Literal, Optional, Union

from src.domain.entities.results import MetricsRow, RunResult

CSV_HEADER = ("iter", "root", "v_root", "residual", "return", "queries", "wall_ms")

MetricsFormat = Literal["csv", "json"]


def rows_from_result(result: RunResult) -> list[MetricsRow]:
    return [
        MetricsRow(
            iter=record.iteration,
            root=record.root,
            v_root=record.v_root,
            residual=record.residual,
            episode_return=record.episode_return,
            queries=record.queries,
            wall_ms=record.wall_ms,
        )
        for record in result.records
    ]


def _cell(value: Optional[float]) -> str:
    # repr is the shortest text that reads back to the same float
    return "" if value is None else repr(float(value))


def _as_dict(row: MetricsRow) -> dict:
    return {
        "iter": row.iter,
        "root": row.root,
        "v_root": row.v_root,
        "residual": row.residual,
        "return": row.episode_return,
        "queries": row.queries,
        "wall_ms": row.wall_ms,
    }


def emit_metrics(rows: Iterable[MetricsRow], format: MetricsFormat = "csv") -> bytes:
    rows = list(rows)
    if format == "json":
        return json.dumps([_as_dict(row) for row in rows]).encode("utf-8")
    if format != "csv":
        raise ValueError(f"unknown metrics format '{format}'")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(
            [
                row.iter,
                row.root,
                _cell(row.v_root),
                _cell(row.residual),
                _cell(row.episode_return),
                row.queries,
                _cell(row.wall_ms),
            ]
        )
    return buffer.getvalue().encode("utf-8")


def parse_metrics_csv(data: Union[str, bytes]) -> list[MetricsRow]:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected metrics header {header!r}")
    rows = []
    for cells in reader:
        if not cells:
            continue
        it, root, v_root, residual, ret, queries, wall_ms = cells
        rows.append(
            MetricsRow(
                iter=int(it),
                root=int(root),
                v_root=float(v_root),
                residual=float(residual),
                episode_return=float(ret) if ret else None,
                queries=int(queries),
                wall_ms=float(wall_ms),
            )
        )
    return rows
