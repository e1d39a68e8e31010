"""CSV / JSON 出力

JSON が正本で、CSV はその射影。どちらも先頭にツール名・版・パラメータを埋め込む。
同じ入力からは同じバイト列を出力する（時刻などは含めない）。
"""

import csv
import io
import json
import math
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, List, Optional, Sequence, Union

import numpy as np

from . import __version__
from .errors import DomainError
from .solution import RadialSolution

TOOL_NAME = "khessian"
METADATA_PREFIX = "# metadata: "

PathLike = Union[str, Path]


def jsonable(value):
    """JSON に書ける値へ再帰的に変換（非有限の浮動小数は文字列）"""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, complex):
        return [jsonable(value.real), jsonable(value.imag)]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def metadata(command: str, params: Optional[dict] = None, **extra) -> dict:
    """出力ファイルに埋め込むメタデータ"""
    block = {"tool": TOOL_NAME, "version": __version__, "command": command,
             "params": params or {}}
    block.update(extra)
    return block


def dumps_json(payload) -> str:
    return json.dumps(jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _open(target: Union[PathLike, IO[str]]):
    if hasattr(target, "write"):
        return target, False
    return open(target, "w", encoding="utf-8", newline=""), True


def write_json(target: Union[PathLike, IO[str]], meta: dict, data) -> None:
    stream, owned = _open(target)
    try:
        stream.write(dumps_json({"metadata": meta, "data": data}))
    finally:
        if owned:
            stream.close()


def _format_cell(value) -> str:
    value = jsonable(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(target: Union[PathLike, IO[str]], meta: dict,
              columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    """メタデータ行（# 始まり）、列名、データ行の順に書く"""
    stream, owned = _open(target)
    try:
        stream.write(f"# {TOOL_NAME} {__version__}\n")
        stream.write(METADATA_PREFIX + json.dumps(jsonable(meta), sort_keys=True) + "\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])
    finally:
        if owned:
            stream.close()


def write_table(target: Union[PathLike, IO[str]], out_format: str, meta: dict,
                data: dict, columns: Sequence[str]) -> None:
    """data[col] の配列を out_format で書く"""
    if out_format == "json":
        write_json(target, meta, data)
    elif out_format == "csv":
        write_csv(target, meta, columns, zip(*(data[c] for c in columns)))
    else:
        raise DomainError([f"unknown output format {out_format!r}"])


def read_csv(path: PathLike):
    """(メタデータ, 列名, 列ごとの浮動小数配列) を返す"""
    text = Path(path).read_text(encoding="utf-8")
    meta = {}
    body: List[str] = []
    for line in text.splitlines():
        if line.startswith(METADATA_PREFIX):
            meta = json.loads(line[len(METADATA_PREFIX):])
        elif not line.startswith("#"):
            body.append(line)
    reader = csv.reader(io.StringIO("\n".join(body)))
    columns = next(reader)
    values = [[float(cell) for cell in row] for row in reader if row]
    table = np.array(values, dtype=float).reshape(-1, len(columns))
    return meta, columns, {c: table[:, i] for i, c in enumerate(columns)}


def read_solution(path: PathLike) -> RadialSolution:
    """solve / critical が書いた解ファイルを読む"""
    path = Path(path)
    if not path.exists():
        raise DomainError([f"no such file: {path}"])
    if path.suffix == ".csv":
        meta, columns, table = read_csv(path)
        if "r" not in table or "u" not in table:
            raise DomainError([f"{path} lacks the r,u columns"])
        solution = meta.get("solution", {})
        data = dict(solution, params=meta.get("params", {}),
                    r=table["r"], u=table["u"])
    else:
        payload = json.loads(path.read_text(encoding="utf-8"))
        data = payload.get("data", payload)
    try:
        return RadialSolution.from_dict(data)
    except KeyError as exc:
        raise DomainError([f"{path} is missing field {exc}"]) from None
