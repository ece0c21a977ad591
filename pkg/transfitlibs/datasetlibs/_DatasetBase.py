# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module contains the base class for the read-only and write-only dataset classes.

A dataset is a directory containing the following files.
 * sample.csv - the censored records, one record per row, with the 'x', 'delta', 'z1', ... columns.
 * info.yml - a YAML file with the dataset information: the tool name and version, the format
              version, and for simulated datasets the random numbers generator, the seed and the
              simulation configuration.
"""

from pathlib import Path
from pepclibs.helperlibs.Exceptions import Error

# The dataset format version.
FORMAT_VERSION = "1.0"
# The name of the records file in a dataset directory.
SAMPLE_FILENAME = "sample.csv"
# The name of the information file in a dataset directory.
INFO_FILENAME = "info.yml"

class DatasetBase:
    """Base class for the read-only and write-only dataset classes, contains the common bits."""

    def __init__(self, dirpath):
        """The class constructor. The 'dirpath' argument is path to the dataset directory."""

        self.dirpath = Path(dirpath)
        self.info_path = self.dirpath / INFO_FILENAME
        self.sample_path = self.dirpath / SAMPLE_FILENAME
        self.info = {}

        if self.dirpath.exists() and not self.dirpath.is_dir():
            raise Error(f"path '{self.dirpath}' exists, but it is not a directory")
        if self.sample_path.exists() and not self.sample_path.is_file():
            raise Error(f"path '{self.sample_path}' exists, but it is not a regular file")
