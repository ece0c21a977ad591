# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides API for writing column-oriented CSV files with full-precision numbers.
"""

import logging
from pathlib import Path
from pepclibs.helperlibs import ClassHelpers
from pepclibs.helperlibs.Exceptions import Error, ErrorExists
from transfitlibs.helperlibs import Human

_LOG = logging.getLogger()

# How many rows are formatted and written at once.
_CHUNK_ROWS = 4096

class WritableCSV(ClassHelpers.SimpleCloseContext):
    """
    This class represents a write-only CSV file. The data are added column-wise, and every number
    is written with 17 significant digits, so that reading the file gives the same floats back.
    """

    def _write(self, lines):
        """Write the 'lines' list of strings as CSV file lines."""

        try:
            self._fobj.write("".join(f"{line}\n" for line in lines))
        except OSError as err:
            raise Error(f"failed to write to file '{self.path}':\n{err}") from None

    def add_columns(self, columns):
        """
        Write the header and all the rows of the 'columns' dictionary: the keys are the column
        names and the values are equal-length sequences of numbers. May be called only once.
        """

        if self.hdr:
            raise Error(f"CSV file '{self.path}' has already been written")
        if not columns:
            raise Error(f"no columns to write to CSV file '{self.path}'")

        lengths = {name: len(vals) for name, vals in columns.items()}
        if len(set(lengths.values())) != 1:
            lens = ", ".join(f"{name}: {cnt}" for name, cnt in lengths.items())
            raise Error(f"columns of different lengths for CSV file '{self.path}': {lens}")

        self.hdr = list(columns)
        self._write([",".join(self.hdr)])
        _LOG.debug("CSV file '%s' columns: %s", self.path, ", ".join(self.hdr))

        rows = list(zip(*columns.values()))
        for start in range(0, len(rows), _CHUNK_ROWS):
            chunk = rows[start:start + _CHUNK_ROWS]
            self._write([",".join(Human.num2str(val) for val in row) for row in chunk])
        self.rows_cnt = len(rows)

    def __init__(self, path):
        """The class constructor. The 'path' argument is the CSV file path, it must not exist."""

        self.path = Path(path)
        self.hdr = None
        # Count of data rows, the header is not included.
        self.rows_cnt = 0
        self._fobj = None

        if self.path.exists():
            raise ErrorExists(f"cannot create CSV file '{self.path}', it already exists")
        try:
            self._fobj = self.path.open("w", encoding="utf-8")
        except OSError as err:
            raise Error(f"failed to create file '{self.path}':\n{err}") from None

    def close(self):
        """Close the CSV file."""

        if getattr(self, "_fobj", None):
            self._fobj.close()
            self._fobj = None

def write_columns(path, columns):
    """Create CSV file 'path' and write the 'columns' dictionary to it (see 'add_columns()')."""

    with WritableCSV(path) as csv:
        csv.add_columns(columns)
