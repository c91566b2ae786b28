"""Reading and writing trial logs.

A trial log is plain text: ``#`` header lines carrying ``key=value`` pairs
(``format_version`` first, ``columns`` last), then one ``index,x,y,a,b``
record per line in decimal. The reader streams the file in chunks and keeps
only the outcome counts, so memory does not grow with the number of trials.
"""

from dataclasses import dataclass
from typing import TextIO

import numpy as np

from ..error import TrialLogParseError
from ..finite_stats import TrialTally
from ..protos.trial_sink import TrialSinkProto
from .block import TrialBlock, outcome_counts, tally_from_counts

FORMAT_VERSION = 1
COLUMNS = "index,x,y,a,b"
_CHUNK_LINES = 1 << 16


def _format_value(value: object) -> str:
    return str(value)


class TrialLogWriter(TrialSinkProto):
    """Trial sink writing the text log format.

    **Usage:**
    ```python
    with TrialLogWriter("run.csv", config.header()) as writer:
        simulate(config, writer, logger)
    ```
    """

    def __init__(self, path: str, header: dict) -> None:
        self._path = path
        self._header = header
        self._file: TextIO | None = None
        self.trials_written = 0

    def open(self) -> None:
        self._file = open(self._path, "w", newline="\n")
        self._file.write(f"# format_version={FORMAT_VERSION}\n")
        for key, value in self._header.items():
            self._file.write(f"# {key}={_format_value(value)}\n")
        self._file.write(f"# columns={COLUMNS}\n")

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def __enter__(self) -> "TrialLogWriter":
        self.open()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    def consume(self, block: TrialBlock) -> None:
        if self._file is None:
            raise OSError(f"Trial log {self._path} is not open")
        np.savetxt(self._file, block.as_array(), fmt="%d", delimiter=",")
        self.trials_written += len(block)


@dataclass
class TrialLog:
    """Contents of a trial log reduced to its header and outcome counts."""

    header: dict[str, str]
    counts: np.ndarray
    tally: TrialTally
    last_index: int | None = None


def _parse_line(line: str, line_number: int) -> list[int]:
    fields = line.strip().split(",")
    if len(fields) != 5:
        raise TrialLogParseError(
            f"expected 5 comma-separated fields, got {len(fields)}", line_number
        )
    try:
        return [int(f) for f in fields]
    except ValueError as e:
        raise TrialLogParseError(f"non-integer field in {line.strip()!r}", line_number) from e


def _parse_chunk(lines: list[str], numbers: list[int]) -> np.ndarray:
    try:
        rows = np.loadtxt(lines, delimiter=",", dtype=np.int64, ndmin=2)
        if rows.shape == (len(lines), 5):
            return rows
    except ValueError:
        pass
    # locate the offending line
    return np.array(
        [_parse_line(line, number) for line, number in zip(lines, numbers)],
        dtype=np.int64,
    )


def _check_chunk(rows: np.ndarray, numbers: list[int], previous_index: int | None) -> None:
    bad_bits = np.nonzero(((rows[:, 1:] != 0) & (rows[:, 1:] != 1)).any(axis=1))[0]
    if bad_bits.size:
        raise TrialLogParseError("x, y, a, b must be bits", numbers[int(bad_bits[0])])
    index = rows[:, 0]
    if previous_index is not None and index[0] <= previous_index:
        raise TrialLogParseError("trial index must strictly increase", numbers[0])
    not_increasing = np.nonzero(np.diff(index) <= 0)[0]
    if not_increasing.size:
        raise TrialLogParseError(
            "trial index must strictly increase", numbers[int(not_increasing[0]) + 1]
        )


def _parse_header_line(line: str, number: int) -> tuple[str, str]:
    key, sep, value = line[1:].strip().partition("=")
    if not sep:
        raise TrialLogParseError(f"header line without '=': {line.strip()!r}", number)
    return key.strip(), value.strip()


def read_header(f: TextIO) -> tuple[dict[str, str], int]:
    """Consumes the leading ``#`` lines of ``f``.

    Returns:
        The header and the number of lines consumed.
    """
    header: dict[str, str] = {}
    consumed = 0
    position = f.tell()
    for line in iter(f.readline, ""):
        if not line.startswith("#"):
            f.seek(position)
            break
        consumed += 1
        key, value = _parse_header_line(line, consumed)
        if key == "format_version" and value != str(FORMAT_VERSION):
            raise TrialLogParseError(f"unsupported format_version {value}", consumed)
        header[key] = value
        position = f.tell()
    return header, consumed


def read_trial_log(path: str) -> TrialLog:
    """Parses a trial log and tallies its records.

    Raises:
        TrialLogParseError: On a malformed header or record, naming the line.
    """
    counts = np.zeros((2, 2, 2, 2), dtype=np.int64)
    previous_index: int | None = None
    lines: list[str] = []
    numbers: list[int] = []

    def flush() -> None:
        nonlocal previous_index
        rows = _parse_chunk(lines, numbers)
        _check_chunk(rows, numbers, previous_index)
        counts[...] += outcome_counts(rows[:, 1], rows[:, 2], rows[:, 3], rows[:, 4])
        previous_index = int(rows[-1, 0])
        lines.clear()
        numbers.clear()

    with open(path) as f:
        header, number = read_header(f)
        if header.get("columns", COLUMNS) != COLUMNS:
            raise TrialLogParseError(f"unexpected columns {header['columns']}", number)
        for line in f:
            number += 1
            if line.startswith("#"):
                raise TrialLogParseError("header line after records", number)
            if not line.strip():
                continue
            lines.append(line)
            numbers.append(number)
            if len(lines) == _CHUNK_LINES:
                flush()
        if lines:
            flush()

    if previous_index is None:
        raise TrialLogParseError("log contains no trial records", max(number, 1))
    return TrialLog(header, counts, tally_from_counts(counts), previous_index)
