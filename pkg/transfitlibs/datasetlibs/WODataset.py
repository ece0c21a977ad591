# -*- coding: utf-8 -*-
# vim: ts=4 sw=4 tw=100 et ai si
#
# Copyright (C) 2024 The transfit authors
# SPDX-License-Identifier: BSD-3-Clause
#
# Author: transfit developers

"""
This module provides API for writing datasets.
"""

import logging
import os
import shutil
import contextlib
from pepclibs.helperlibs import YAML, ClassHelpers
from transfitlibs.helperlibs.Exceptions import Error, ErrorExists
from transfitlibs.datasetlibs import _CSV, _DatasetBase
from transfitlibs.datasetlibs._DatasetBase import FORMAT_VERSION
from transfitlibs.helperlibs import Human

_LOG = logging.getLogger()

class WODataset(_DatasetBase.DatasetBase, ClassHelpers.SimpleCloseContext):
    """This class represents a write-only dataset."""

    def _init_outdir(self):
        """Initialize the output directory for writing the dataset."""

        if self.dirpath.exists() and not self.dirpath.is_dir():
            raise ErrorExists(f"path '{self.dirpath}' exists and it is not a directory")

        if self.dirpath.exists():
            # Only accept an output directory without dataset files.
            for path in (self.sample_path, self.info_path):
                if path.exists():
                    raise ErrorExists(f"cannot use path '{self.dirpath}' as the output directory, "
                                      f"it already contains '{path.name}'")
        else:
            try:
                self.dirpath.mkdir(parents=True, exist_ok=True)
                self._created_paths.append(self.dirpath)
                _LOG.info("Created dataset directory '%s'", self.dirpath)
            except OSError as err:
                raise Error(f"failed to create directory '{self.dirpath}':\n{err}") from None

        self._created_paths += [self.sample_path, self.info_path]
        self.csv = _CSV.WritableCSV(self.sample_path)

    def write_sample(self, frame):
        """
        Write the censored records in the 'frame' data frame (with the 'x', 'delta', 'z1', ...
        columns) to the records CSV file.
        """

        self.csv.add_columns({col: frame[col].tolist() for col in frame.columns})
        self.info["records"] = int(frame.shape[0])
        self.info["failures"] = int(frame["delta"].sum())

    def write_info(self):
        """Write the 'self.info' dictionary to the 'info.yml' file."""

        try:
            YAML.dump(Human.to_plain(self.info), self.info_path, float_format="%.17g")
        except Error as err:
            raise Error(f"failed to write dataset information to '{self.info_path}':\n"
                        f"{err.indent(2)}") from None

    def __init__(self, toolname, toolver, outdir):
        """
        The class constructor. The arguments are as follows.
          * toolname - name of the tool creating the dataset.
          * toolver - version of the tool creating the dataset.
          * outdir - the output directory to store the dataset at.
        """

        super().__init__(outdir)

        # The writable CSV file object.
        self.csv = None
        self._created_paths = []

        self._init_outdir()

        self.info["toolname"] = toolname
        self.info["toolver"] = toolver
        self.info["format_version"] = FORMAT_VERSION

    def close(self):
        """Close the dataset, remove the created paths if no records were written."""

        if getattr(self, "csv", None):
            self.csv.close()
            self.csv = None

        sample_path = getattr(self, "sample_path", None)
        paths = []
        if not sample_path or not sample_path.exists() or sample_path.stat().st_size == 0:
            paths = getattr(self, "_created_paths", [])

        if paths:
            _LOG.info("No records were written so the following paths which were created will be "
                      "deleted:\n  - %s", "\n  - ".join(str(path) for path in paths))

        for path in paths:
            if not path.exists():
                continue
            with contextlib.suppress(Exception):
                if path.is_dir():
                    shutil.rmtree(path)
                elif path.is_file():
                    os.remove(path)
