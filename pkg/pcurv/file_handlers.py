"""
File handling: operator JSON input, JSON Lines record output, CSV tables.
"""

import csv
import json
import logging
import sys
from contextlib import contextmanager
from typing import IO, Iterator, List, Optional, Sequence, Tuple

from pcurv.errors import OperatorFormatError
from pcurv.models import BenchRow, CharPolyRecord
from pcurv.ore import OperatorX

logger = logging.getLogger(__name__)


@contextmanager
def _open_output(file_path: Optional[str]) -> Iterator[IO[str]]:
    if file_path is None or file_path == "-":
        yield sys.stdout
        return
    with open(file_path, 'w', newline='') as f:
        yield f


class OperatorFileHandler:
    """Handles loading and saving of operator files."""

    @staticmethod
    def load_operator(file_path: str) -> OperatorX:
        """
        Load an operator from a JSON file.

        Args:
            file_path: Path to a {"variable": "x", "coefficients": [...]} file

        Returns:
            The parsed operator

        Raises:
            OperatorFormatError: if the file is missing, not JSON, or malformed
        """
        try:
            with open(file_path, 'r') as f:
                data = json.load(f)
        except FileNotFoundError as e:
            raise OperatorFormatError(f"operator file not found: {file_path}") from e
        except json.JSONDecodeError as e:
            raise OperatorFormatError(f"{file_path} is not valid JSON: {e}") from e
        operator = OperatorX.from_json(data)
        logger.info("loaded operator of order %d and degree %d from %s",
                    operator.order, operator.degree, file_path)
        return operator

    @staticmethod
    def save_operator(operator: OperatorX, file_path: str):
        with open(file_path, 'w') as f:
            json.dump(operator.to_json(), f, indent=2)


class RecordFileHandler:
    """Handles JSON Lines output of per-prime records."""

    @staticmethod
    def save_records(records: Sequence[CharPolyRecord], file_path: Optional[str] = None,
                     fmt: str = "full") -> int:
        """
        Write one JSON object per record, in the given order.

        Args:
            records: Records sorted by p
            file_path: Destination; None or "-" writes to stdout
            fmt: "full" or "compact"

        Returns:
            Number of lines written
        """
        with _open_output(file_path) as f:
            for record in records:
                f.write(json.dumps(record.to_dict(fmt), separators=(',', ':')) + "\n")
        return len(records)

    @staticmethod
    def load_records(file_path: str) -> List[CharPolyRecord]:
        records = []
        with open(file_path, 'r') as f:
            for line in f:
                if line.strip():
                    records.append(CharPolyRecord.from_dict(json.loads(line)))
        return records


class BenchFileHandler:
    """Handles CSV output of benchmark timings."""

    FIELDS = ['N', 'primes', 'total', 't_tree', 'w_tree', 'postproc']

    @staticmethod
    def save_bench(rows: Sequence[BenchRow], file_path: Optional[str] = None):
        with _open_output(file_path) as f:
            writer = csv.DictWriter(f, fieldnames=BenchFileHandler.FIELDS)
            writer.writeheader()
            for row in rows:
                writer.writerow(row.to_dict())


class TreeStatsFileHandler:
    """Handles the CSV dump of T-tree node sizes."""

    @staticmethod
    def save_tree_sizes(sizes: Sequence[Tuple[int, int, int]], file_path: str):
        with open(file_path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['level', 'index', 'max_bits'])
            writer.writerows(sizes)
        logger.info("wrote %d tree node sizes to %s", len(sizes), file_path)
