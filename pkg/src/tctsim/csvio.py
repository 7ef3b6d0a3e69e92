"""CSV helpers with a fixed float rendering so reruns are byte-identical."""
from __future__ import annotations

import csv
from typing import Iterable, Sequence


def fmt(x) -> str:
    if isinstance(x, (bool, str)):
        return str(x).lower() if isinstance(x, bool) else x
    x = float(x)
    if x == 0.0:
        x = 0.0  # drop the sign of negative zero
    return format(x, ".15g")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]
