# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""This module provides API for reading datasets."""

import logging
from pathlib import Path
import pandas
from pepclibs.helperlibs import YAML
from pepclibs.helperlibs.Exceptions import Error, ErrorNotFound
from transfitlibs import CensoredSample
from transfitlibs.datasetlibs import _DatasetBase
from transfitlibs.helperlibs.Exceptions import ErrorBadData, ErrorEmptyInput

_LOG = logging.getLogger()

_SUPPORTED_FORMAT_VERSIONS = {_DatasetBase.FORMAT_VERSION}

class RODataset(_DatasetBase.DatasetBase):
    """
    This class represents a read-only dataset: a dataset directory or a bare records CSV file. The
    records are loaded on demand by 'load_df()'.
    """

    def load_df(self):
        """Read the records CSV file into the 'self.df' data frame (if not read yet), return it."""

        if self.df is not None:
            return self.df

        _LOG.debug("loading records from '%s'", self.sample_path)
        try:
            df = pandas.read_csv(self.sample_path, dtype=str, skipinitialspace=True)
        except pandas.errors.EmptyDataError:
            raise ErrorEmptyInput(f"records file '{self.sample_path}' is empty") from None
        except (pandas.errors.ParserError, UnicodeDecodeError) as err:
            raise ErrorBadData(f"failed to parse records file '{self.sample_path}':\n"
                               f"{err}") from None
        except OSError as err:
            raise Error(f"failed to read records file '{self.sample_path}':\n{err}") from None

        df.columns = [str(col).strip() for col in df.columns]
        for col in df.columns:
            # Empty cells stay missing, they are reported by the records validation.
            try:
                df[col] = pandas.to_numeric(df[col], errors="raise")
            except (TypeError, ValueError) as err:
                raise ErrorBadData(f"bad value in column '{col}' of records file "
                                   f"'{self.sample_path}':\n{err}") from None

        self.df = df
        return df

    def to_sample(self):
        """Load the records and return them as a 'CensoredSample' object."""

        try:
            return CensoredSample.from_records(self.load_df())
        except Error as err:
            raise type(err)(f"bad records in '{self.sample_path}':\n{err.indent(2)}") from None

    def __init__(self, path):
        """
        The class constructor. The 'path' argument is path to a dataset directory or to a bare
        records CSV file.
        """

        path = Path(path)
        if path.is_file():
            super().__init__(path.parent)
            self.sample_path = path
            self.info_path = None
        else:
            super().__init__(path)

        self.df = None

        if not self.sample_path.is_file():
            raise ErrorNotFound(f"records file '{self.sample_path}' does not exist or it is not a "
                                f"regular file")

        if self.info_path is None or not self.info_path.is_file():
            return

        self.info = YAML.load(self.info_path)
        if not isinstance(self.info, dict):
            raise Error(f"bad dataset information file '{self.info_path}': expected a dictionary")

        format_ver = self.info.get("format_version")
        if format_ver not in _SUPPORTED_FORMAT_VERSIONS:
            _LOG.warning("dataset '%s' has format version '%s' which is not supported by this "
                         "version so may cause unexpected behavior", self.dirpath, format_ver)
